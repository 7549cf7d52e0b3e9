//! Decay constants and the checks that certify them on simulated energies.
//!
//! The pointwise bound is `E(t) ≤ E(0)e^{1−αt}` with
//! `α = 1/(2((k(0)+2)/C + 1 + 3/η))`. The integral criterion
//! `α∫ₛ^∞E ≤ E(S)` is checked on `[S, T]` with a tail correction
//! `∫ₜ^∞E ≤ E(T)/α_fit`, and the ratio `E(T)/E(S)` is reported so a pass
//! never hides an untruncated tail.

use std::fmt;

use thiserror::Error;

use crate::energy::{energy_series_fast, EnergyError, EnergySeries};
use crate::kernels::{KernelError, PronyKernel, Strictness, DEFAULT_MASS_TOLERANCE};
use crate::operator::{InitialData, SpectralOperator};
use crate::par;
use crate::simulator::{simulate, SimError, TimeGrid};

pub const DEFAULT_BOUND_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_KOMORNIK_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_TRUNCATION_CAP: f64 = 1e-4;
pub const DEFAULT_FIT_SLACK: f64 = 1e-3;
/// Energies below this fraction of `E(0)` count as unresolved.
pub const RESOLUTION_FLOOR: f64 = 1e-13;
pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecayError {
    #[error("{name} must be positive and finite, got {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("energy series is empty")]
    EmptySeries,
    #[error("energy underflow, shrink window (E ≤ 0 at t = {0})")]
    Underflow(f64),
    #[error("fit window [{start}, {end}] holds {points} grid points, need at least {MIN_FIT_POINTS}")]
    WindowTooSmall { start: f64, end: f64, points: usize },
    #[error(transparent)]
    Grid(#[from] SimError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, DecayError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(DecayError::Domain { name, value })
    }
}

/// `1 / (2((k0 + 2)/C + 1 + 3/η))`.
pub fn theoretical_alpha(k0: f64, coercivity: f64, eta: f64) -> Result<f64, DecayError> {
    let k0 = positive("k0", k0)?;
    let c = positive("C", coercivity)?;
    let eta = positive("eta", eta)?;
    Ok(1.0 / (2.0 * ((k0 + 2.0) / c + 1.0 + 3.0 / eta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// `maxⱼ E(tⱼ)/(E(0)e^{1−αtⱼ})`.
    pub margin: f64,
    /// Grid time attaining the margin.
    pub worst_time: f64,
    pub verdict: Verdict,
}

pub fn check_bound(series: &EnergySeries, alpha: f64, tolerance: f64) -> Result<BoundCheck, DecayError> {
    let e0 = series.breakdowns.first().ok_or(DecayError::EmptySeries)?.total;
    if e0 == 0.0 {
        return Ok(BoundCheck {
            margin: 0.0,
            worst_time: 0.0,
            verdict: Verdict::Pass,
        });
    }
    let mut margin = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    for (t, b) in series.times.iter().zip(&series.breakdowns) {
        let ratio = b.total / (e0 * (1.0 - alpha * t).exp());
        if ratio > margin {
            margin = ratio;
            worst_time = *t;
        }
    }
    Ok(BoundCheck {
        margin,
        worst_time,
        verdict: Verdict::from_bool(margin <= 1.0 + tolerance),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KomornikMargin {
    pub s: f64,
    pub energy: f64,
    /// Trapezoid `∫ₛᵀE`.
    pub integral: f64,
    /// Tail estimate added to the integral.
    pub tail: f64,
    /// `α(integral + tail)/E(S)`; `None` when `E(S)` is unresolved.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KomornikCheck {
    pub margins: Vec<KomornikMargin>,
    /// Largest resolved margin (0 if none is resolved).
    pub max_margin: f64,
    /// `E(T)` over the smallest resolved `E(S)`.
    pub truncation_ratio: f64,
    pub verdict: Verdict,
}

impl KomornikCheck {
    pub fn unresolved(&self) -> usize {
        self.margins.iter().filter(|m| m.margin.is_none()).count()
    }

    pub fn all_margins_at_most_one(&self) -> bool {
        self.margins.iter().filter_map(|m| m.margin).all(|m| m <= 1.0)
    }
}

/// `suffix[j]` is the trapezoid integral over `[t_j, T]`, accumulated from
/// the end so that small late-time integrals keep their relative accuracy.
fn suffix_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for j in (0..values.len().saturating_sub(1)).rev() {
        out[j] = out[j + 1] + 0.5 * dt * (values[j] + values[j + 1]);
    }
    out
}

/// Integral criterion at each `S` in `s_times`, integrating to the series end.
///
/// `tail_rate` is the decay rate used for `∫ₜ^∞E ≤ E(T)/rate`; `None` skips
/// the tail term and a nonpositive rate makes it infinite.
pub fn check_komornik(
    series: &EnergySeries,
    alpha: f64,
    s_times: &[f64],
    tolerance: f64,
    truncation_cap: f64,
    tail_rate: Option<f64>,
) -> Result<KomornikCheck, DecayError> {
    if series.is_empty() {
        return Err(DecayError::EmptySeries);
    }
    let totals = series.totals();
    let e0 = totals[0];
    let e_end = *totals.last().unwrap_or(&0.0);
    let suffix = suffix_trapezoid(&totals, series.dt());
    let tail = match tail_rate {
        None => 0.0,
        Some(rate) if rate > 0.0 => e_end / rate,
        Some(_) if e_end == 0.0 => 0.0,
        Some(_) => f64::INFINITY,
    };
    let floor = RESOLUTION_FLOOR * e0;
    let mut margins = Vec::with_capacity(s_times.len());
    for &s in s_times {
        let j = series.index_of(s)?;
        let energy = totals[j];
        let integral = suffix[j];
        let margin = (energy > floor && energy > 0.0).then(|| alpha * (integral + tail) / energy);
        margins.push(KomornikMargin {
            s: series.times[j],
            energy,
            integral,
            tail,
            margin,
        });
    }
    let max_margin = margins.iter().filter_map(|m| m.margin).fold(0.0, f64::max);
    let smallest_resolved = margins
        .iter()
        .filter(|m| m.margin.is_some())
        .map(|m| m.energy)
        .fold(f64::INFINITY, f64::min);
    let truncation_ratio = if smallest_resolved.is_finite() {
        e_end / smallest_resolved
    } else {
        0.0
    };
    let verdict = Verdict::from_bool(max_margin <= 1.0 + tolerance && truncation_ratio <= truncation_cap);
    Ok(KomornikCheck {
        margins,
        max_margin,
        truncation_ratio,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `−slope` of `log E` against t.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub window: (f64, f64),
}

/// Ordinary least squares of `log E(t)` on the grid points inside `[start, end]`.
pub fn fit_decay_rate(series: &EnergySeries, window: (f64, f64)) -> Result<DecayFit, DecayError> {
    let (start, end) = window;
    let slack = 1e-9 * series.dt();
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (t, b) in series.times.iter().zip(&series.breakdowns) {
        if *t >= start - slack && *t <= end + slack {
            if !(b.total > 0.0) {
                return Err(DecayError::Underflow(*t));
            }
            ts.push(*t);
            ys.push(b.total.ln());
        }
    }
    let n = ts.len();
    if n < MIN_FIT_POINTS {
        return Err(DecayError::WindowTooSmall { start, end, points: n });
    }
    // centering on the first sample keeps flat data exactly flat
    let y_ref = ys[0];
    for y in &mut ys {
        *y -= y_ref;
    }
    let mean_t = ts.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (t, y) in ts.iter().zip(&ys) {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t + y_ref;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, y) in ts.iter().zip(&ys) {
        let r = y - (intercept - y_ref + slope * t);
        ss_res += r * r;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(DecayFit {
        // + 0.0 keeps a flat series from reporting −0
        rate: -slope + 0.0,
        intercept,
        r_squared,
        points: n,
        window,
    })
}

/// Integer times `0, 1, …, ⌊T/2⌋`, each snapped to the nearest grid point.
pub fn default_s_grid(series: &EnergySeries) -> Vec<f64> {
    let dt = series.dt();
    if dt == 0.0 {
        return series.times.clone();
    }
    let half = (0.5 * series.final_time() + 1e-9).floor() as usize;
    (0..=half)
        .map(|k| {
            let j = ((k as f64) / dt).round() as usize;
            series.times[j.min(series.len() - 1)]
        })
        .collect()
}

/// `[0.25T, 0.75T]`, with the end pulled back to the last time where
/// `E ≥ 1e−13·E(0)`.
pub fn default_fit_window(series: &EnergySeries) -> (f64, f64) {
    let t = series.final_time();
    let floor = RESOLUTION_FLOOR * series.initial();
    let resolved_end = series
        .times
        .iter()
        .zip(&series.breakdowns)
        .take_while(|(_, b)| b.total >= floor)
        .last()
        .map_or(0.0, |(t, _)| *t);
    (0.25 * t, (0.75 * t).min(resolved_end))
}

/// Tolerances and sampling choices shared by the report and the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSettings {
    pub bound_tolerance: f64,
    pub komornik_tolerance: f64,
    pub truncation_cap: f64,
    pub fit_slack: f64,
    /// `None` selects [`default_s_grid`].
    pub komornik_s: Option<Vec<f64>>,
    /// `None` selects [`default_fit_window`].
    pub fit_window: Option<(f64, f64)>,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            bound_tolerance: DEFAULT_BOUND_TOLERANCE,
            komornik_tolerance: DEFAULT_KOMORNIK_TOLERANCE,
            truncation_cap: DEFAULT_TRUNCATION_CAP,
            fit_slack: DEFAULT_FIT_SLACK,
            komornik_s: None,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub alpha_theory: f64,
    pub fit: Result<DecayFit, DecayError>,
    pub bound: BoundCheck,
    pub komornik: KomornikCheck,
}

impl DecayReport {
    pub fn alpha_fitted(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.rate)
    }

    /// If every resolved integral margin is at most one, the pointwise bound
    /// with the same α must hold as well.
    pub fn komornik_implies_bound(&self, bound_tolerance: f64) -> bool {
        !self.komornik.all_margins_at_most_one() || self.bound.margin <= 1.0 + bound_tolerance
    }

    /// `alpha_fitted ≥ alpha_theory − slack`.
    pub fn fit_consistent(&self, slack: f64) -> Option<bool> {
        self.alpha_fitted().map(|rate| rate >= self.alpha_theory - slack)
    }
}

/// Runs the bound, the fit and the tail-corrected integral criterion.
pub fn analyze(series: &EnergySeries, alpha: f64, settings: &CheckSettings) -> Result<DecayReport, DecayError> {
    let bound = check_bound(series, alpha, settings.bound_tolerance)?;
    let window = settings.fit_window.unwrap_or_else(|| default_fit_window(series));
    let fit = fit_decay_rate(series, window);
    let s_grid = match &settings.komornik_s {
        Some(s) => s.clone(),
        None => default_s_grid(series),
    };
    let tail_rate = Some(fit.as_ref().map_or(0.0, |f| f.rate));
    let komornik = check_komornik(
        series,
        alpha,
        &s_grid,
        settings.komornik_tolerance,
        settings.truncation_cap,
        tail_rate,
    )?;
    Ok(DecayReport {
        alpha_theory: alpha,
        fit,
        bound,
        komornik,
    })
}

/// Scales every rate by `η/min rᵢ` and every weight by the same factor, then
/// renormalizes to unit mass. A single-term shape becomes `b = r = η`.
pub fn rescale_to_eta(shape: &PronyKernel, eta: f64) -> Result<PronyKernel, DecayError> {
    let eta = positive("eta", eta)?;
    let current = shape.extract_eta()?;
    let factor = eta / current;
    let scaled = PronyKernel::new(
        shape.terms().iter().map(|t| (t.weight * factor, t.rate * factor)),
        Strictness::Glassy,
    )?;
    Ok(scaled.normalized()?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Skipped(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::Skipped(reason) => write!(f, "skipped: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta: f64,
    pub k0: Option<f64>,
    pub alpha_theory: Option<f64>,
    pub alpha_fitted: Option<f64>,
    pub bound_margin: Option<f64>,
    pub komornik_max: Option<f64>,
    pub status: RowStatus,
}

impl SweepRow {
    fn skipped(eta: f64, reason: String) -> Self {
        Self {
            eta,
            k0: None,
            alpha_theory: None,
            alpha_fitted: None,
            bound_margin: None,
            komornik_max: None,
            status: RowStatus::Skipped(reason),
        }
    }
}

fn sweep_row(
    shape: &PronyKernel,
    eta: f64,
    op: &SpectralOperator,
    init: &InitialData,
    grid: TimeGrid,
    settings: &CheckSettings,
) -> Result<SweepRow, String> {
    let kernel = rescale_to_eta(shape, eta).map_err(|e| e.to_string())?;
    let report = kernel.validate(DEFAULT_MASS_TOLERANCE);
    if !report.is_valid() {
        let reasons: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(reasons.join("; "));
    }
    let alpha = theoretical_alpha(kernel.k0(), op.coercivity(), eta).map_err(|e| e.to_string())?;
    let traj = simulate(op, &kernel, init, grid).map_err(|e| e.to_string())?;
    let series = energy_series_fast(&kernel, &traj).map_err(|e| e.to_string())?;
    let decay = analyze(&series, alpha, settings).map_err(|e| e.to_string())?;
    Ok(SweepRow {
        eta,
        k0: Some(kernel.k0()),
        alpha_theory: Some(alpha),
        alpha_fitted: decay.alpha_fitted(),
        bound_margin: Some(decay.bound.margin),
        komornik_max: Some(decay.komornik.max_margin),
        status: RowStatus::Ok,
    })
}

/// One row per η in input order; rows run independently.
pub fn sweep_eta(
    shape: &PronyKernel,
    etas: &[f64],
    op: &SpectralOperator,
    init: &InitialData,
    grid: TimeGrid,
    settings: &CheckSettings,
) -> Vec<SweepRow> {
    par::map_indexed(etas.len(), |i| {
        let eta = etas[i];
        sweep_row(shape, eta, op, init, grid, settings).unwrap_or_else(|reason| SweepRow::skipped(eta, reason))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyBreakdown;

    fn series_from(times: Vec<f64>, totals: &[f64]) -> EnergySeries {
        EnergySeries {
            breakdowns: totals.iter().map(|&e| EnergyBreakdown::new(e, 0.0, 0.0)).collect(),
            rates: vec![0.0; totals.len()],
            times,
        }
    }

    fn synthetic(f: impl Fn(f64) -> f64, t_final: f64, dt: f64) -> EnergySeries {
        let times = TimeGrid::new(t_final, dt).unwrap().times();
        let totals: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        series_from(times, &totals)
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(theoretical_alpha(2.0, 1.0, 2.0).unwrap(), 1.0 / 13.0);
        assert_eq!(theoretical_alpha(1.0, 1.0, 1.0).unwrap(), 1.0 / 14.0);
        let near = theoretical_alpha(1.0, 1e12, 1e12).unwrap();
        assert!((near - 0.5).abs() < 1e-11 && near < 0.5);
        for (k0, c, eta) in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, f64::NAN)] {
            assert!(matches!(theoretical_alpha(k0, c, eta), Err(DecayError::Domain { .. })));
        }
    }

    #[test]
    fn bound_has_slack_e_at_zero() {
        let s = series_from(vec![0.0], &[2.0]);
        let b = check_bound(&s, 0.1, DEFAULT_BOUND_TOLERANCE).unwrap();
        assert!((b.margin - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(b.verdict, Verdict::Pass);

        let zero = series_from(vec![0.0, 1.0], &[0.0, 0.0]);
        let b = check_bound(&zero, 0.1, DEFAULT_BOUND_TOLERANCE).unwrap();
        assert_eq!((b.margin, b.verdict), (0.0, Verdict::Pass));

        let flat = synthetic(|_| 1.0, 40.0, 0.5);
        let b = check_bound(&flat, 0.1, DEFAULT_BOUND_TOLERANCE).unwrap();
        assert_eq!(b.verdict, Verdict::Fail);
        assert_eq!(b.worst_time, 40.0);
        assert!((b.margin - 3.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn komornik_examples() {
        let s = synthetic(|t| (-t).exp(), 20.0, 1e-2);
        let end = check_komornik(&s, 0.5, &[20.0], 1e-6, 1e-4, None).unwrap();
        assert_eq!(end.margins[0].margin, Some(0.0));

        // ∫ₛ^∞ e^{−t} = e^{−S}, so α(∫ₛᵀ + tail)/E(S) ≈ α.
        let c = check_komornik(&s, 0.5, &[0.0, 1.0, 5.0], 1e-6, 1e-4, Some(1.0)).unwrap();
        for m in &c.margins {
            assert!((m.margin.unwrap() - 0.5).abs() < 1e-4, "{m:?}");
        }
        assert!((c.truncation_ratio - (-15.0f64).exp()).abs() < 1e-12);
        assert_eq!(c.verdict, Verdict::Pass);

        let flat = synthetic(|_| 1.0, 200.0, 0.5);
        let c = check_komornik(&flat, 1.0 / 13.0, &[0.0], 1e-6, 1e-4, None).unwrap();
        assert!((c.max_margin - 200.0 / 13.0).abs() < 1e-12);
        assert_eq!(c.verdict, Verdict::Fail);
        let tailed = check_komornik(&flat, 1.0 / 13.0, &[0.0], 1e-6, 1e-4, Some(0.0)).unwrap();
        assert_eq!(tailed.max_margin, f64::INFINITY);

        assert!(matches!(
            check_komornik(&s, 0.5, &[0.005], 1e-6, 1e-4, None),
            Err(DecayError::Grid(SimError::OffGrid(_)))
        ));
    }

    #[test]
    fn komornik_skips_unresolved_energies() {
        let s = synthetic(|t| (-4.0 * t).exp(), 20.0, 1e-2);
        let c = check_komornik(&s, 0.5, &[0.0, 5.0, 10.0], 1e-6, 1e-4, Some(4.0)).unwrap();
        assert!(c.margins[0].margin.is_some() && c.margins[1].margin.is_some());
        assert_eq!(c.margins[2].margin, None);
        assert_eq!(c.unresolved(), 1);
        assert!((c.truncation_ratio - (-60.0f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn fit_examples() {
        let s = synthetic(|t| 3.0 * (-0.5 * t).exp(), 20.0, 0.1);
        let f = fit_decay_rate(&s, (0.0, 20.0)).unwrap();
        assert!((f.rate - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);

        let flat = synthetic(|_| 2.0, 10.0, 0.1);
        let f = fit_decay_rate(&flat, (0.0, 10.0)).unwrap();
        assert_eq!(f.rate, 0.0);
        assert!(f.rate.is_sign_positive());
        assert_eq!(f.r_squared, 1.0);

        let dead = synthetic(|t| if t > 5.0 { 0.0 } else { 1.0 }, 10.0, 0.1);
        let err = fit_decay_rate(&dead, (0.0, 10.0)).unwrap_err();
        assert!(err.to_string().contains("energy underflow, shrink window"));
        assert!(matches!(
            fit_decay_rate(&s, (1.0, 1.5)),
            Err(DecayError::WindowTooSmall { points: 6, .. })
        ));
    }

    #[test]
    fn default_grids() {
        let s = synthetic(|t| (-t).exp(), 9.0, 1e-2);
        assert_eq!(default_s_grid(&s), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let (a, b) = default_fit_window(&s);
        assert_eq!((a, b), (2.25, 6.75));
        let fast = synthetic(|t| (-4.0 * t).exp(), 20.0, 1e-2);
        let (_, b) = default_fit_window(&fast);
        assert!((b - 7.48).abs() < 1e-9, "{b}");
    }

    #[test]
    fn rescaling_keeps_unit_mass() {
        let shape = PronyKernel::new([(1.0, 1.0)], Strictness::Glassy).unwrap();
        for eta in [0.5, 1.0, 4.0] {
            let k = rescale_to_eta(&shape, eta).unwrap();
            assert_eq!(k.terms()[0].rate, eta);
            assert!((k.terms()[0].weight - eta).abs() < 1e-15);
        }
        let burger = PronyKernel::new([(0.5, 1.0), (1.5, 3.0)], Strictness::Glassy).unwrap();
        let k = rescale_to_eta(&burger, 2.0).unwrap();
        assert_eq!(k.extract_eta().unwrap(), 2.0);
        assert_eq!(k.terms()[1].rate, 6.0);
        assert!((k.mass() - 1.0).abs() < 1e-15);
        assert!(rescale_to_eta(&burger, -1.0).is_err());
    }

    #[test]
    fn sweep_rows_follow_input_order() {
        let op = SpectralOperator::diagonal(vec![1.0]).unwrap();
        let init = InitialData { u0: vec![1.0], v0: vec![0.0] };
        let shape = PronyKernel::new([(1.0, 1.0)], Strictness::Glassy).unwrap();
        let grid = TimeGrid::new(30.0, 1e-2).unwrap();
        let rows = sweep_eta(&shape, &[1.0, 2.0, -3.0, 4.0], &op, &init, grid, &CheckSettings::default());
        let expected = [1.0 / 14.0, 1.0 / 13.0, 0.0, 1.0 / 15.5];
        assert_eq!(rows.len(), 4);
        for (i, row) in rows.iter().enumerate() {
            if i == 2 {
                assert!(matches!(row.status, RowStatus::Skipped(_)), "{row:?}");
                assert_eq!(row.eta, -3.0);
                continue;
            }
            assert_eq!(row.status, RowStatus::Ok);
            assert!((row.alpha_theory.unwrap() - expected[i]).abs() < 1e-15);
            assert!(row.bound_margin.unwrap() <= 1.0);
        }
        assert!(sweep_eta(&shape, &[], &op, &init, grid, &CheckSettings::default()).is_empty());
    }
}

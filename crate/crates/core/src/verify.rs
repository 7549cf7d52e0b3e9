//! The full check pipeline behind `verify`: simulate, compute energies, run
//! every check, and render the result as text and CSV.

use std::fmt::Write as _;

use crate::decay::{analyze, CheckSettings, DecayReport, Verdict};
use crate::energy::{energy_series_direct, energy_series_fast, EnergySeries, LemmaIntegrands};
use crate::kernels::Strictness;
use crate::scenario::Scenario;
use crate::simulator::{simulate_direct, simulate_with_tolerance, stability_warnings, Trajectory};

/// One line of the report: `value ≤ tolerance` decides the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub note: Option<String>,
}

impl CheckLine {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            verdict: Verdict::from_bool(value <= tolerance),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub scenario: String,
    pub header: Vec<String>,
    /// `None` inside theorem scope, otherwise why not.
    pub scope_note: Option<String>,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckLine>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.is_pass())
    }

    pub fn check(&self, name: &str) -> Option<&CheckLine> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        for line in &self.header {
            let _ = writeln!(s, "{line}");
        }
        match &self.scope_note {
            None => {
                let _ = writeln!(s, "scope: theorem");
            }
            Some(note) => {
                let _ = writeln!(s, "scope: outside theorem scope ({note})");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "{:<22} {:>24} {:>24}  verdict", "check", "value", "tolerance");
        for c in &self.checks {
            let _ = write!(
                s,
                "{:<22} {:>24} {:>24}  {}",
                c.name,
                format_number(c.value),
                format_number(c.tolerance),
                c.verdict
            );
            if let Some(note) = &c.note {
                let _ = write!(s, "  ({note})");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "overall: {}", Verdict::from_bool(self.passed()));
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(Vec::new());
        let _ = w.write_record(["check", "value", "tolerance", "verdict"]);
        for c in &self.checks {
            let _ = w.write_record([
                c.name.to_string(),
                format_number(c.value),
                format_number(c.tolerance),
                c.verdict.to_string(),
            ]);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}

/// Seventeen significant digits, round-trip exact.
pub fn format_number(x: f64) -> String {
    // adding zero turns −0 into +0
    format!("{:.16e}", x + 0.0)
}

pub(crate) fn csv_writer<W: std::io::Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

/// `max |a − b| / max |a|` over the points both sequences share.
fn relative_gap(a: impl Iterator<Item = f64> + Clone, b: impl Iterator<Item = f64>) -> f64 {
    let scale = a.clone().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a.zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Euclidean norm over modes of `pick(m)` at each grid point.
fn modal_norms<'a>(n: usize, modes: usize, pick: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
    (0..n)
        .map(|j| (0..modes).map(|m| pick(m)[j] * pick(m)[j]).sum::<f64>().sqrt())
        .collect()
}

/// Largest relative gap between the two paths in u, u′ and energy. Each is
/// `maxⱼ‖fast − direct‖ / maxⱼ‖fast‖` with the Euclidean norm over modes,
/// taken over the grid points both trajectories share.
pub fn path_gap(fast: &Trajectory, direct: &Trajectory, fast_energy: &EnergySeries, direct_energy: &EnergySeries) -> f64 {
    let n = fast.len().min(direct.len());
    let modes = fast.mode_count();
    let mut gap = 0.0f64;
    let accessors: [fn(&Trajectory, usize) -> &[f64]; 2] = [Trajectory::u, Trajectory::v];
    for pick in accessors {
        let scale = modal_norms(n, modes, |m| pick(fast, m)).into_iter().fold(0.0, f64::max);
        let worst = (0..n)
            .map(|j| {
                (0..modes)
                    .map(|m| (pick(fast, m)[j] - pick(direct, m)[j]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        gap = gap.max(if scale == 0.0 { worst } else { worst / scale });
    }
    let e_fast = fast_energy.breakdowns[..n].iter().map(|b| b.total);
    let e_direct = direct_energy.breakdowns[..n].iter().map(|b| b.total);
    gap.max(relative_gap(e_fast, e_direct))
}

fn scope_note(scenario: &Scenario) -> Option<String> {
    match scenario.kernel.strictness() {
        Strictness::Glassy => None,
        Strictness::Subcritical => Some("subcritical kernel".to_string()),
        Strictness::Raw if scenario.kernel.is_empty() => Some("raw kernel, k ≡ 0".to_string()),
        Strictness::Raw => Some("raw kernel".to_string()),
    }
}

fn header(scenario: &Scenario, alpha: Option<f64>) -> Vec<String> {
    let report = scenario.kernel_report();
    let eta = scenario
        .effective_eta()
        .map_or_else(|| "undefined".to_string(), format_number);
    let alpha_source = if scenario.checks.alpha.is_some() { "configured" } else { "theory" };
    vec![
        format!(
            "kernel: terms {}, {}, mass {}, k(0) {}, eta {}",
            report.term_count,
            report.strictness,
            format_number(report.mass),
            format_number(report.k0),
            eta
        ),
        format!(
            "operator: {}, C {}",
            scenario.operator.label(),
            format_number(scenario.operator.coercivity())
        ),
        format!(
            "grid: T {}, dt {}, {} steps",
            format_number(scenario.grid.final_time()),
            format_number(scenario.grid.dt()),
            scenario.grid.steps()
        ),
        format!(
            "alpha: {} ({alpha_source})",
            alpha.map_or_else(|| "undefined".to_string(), format_number)
        ),
    ]
}

/// Everything the decay and energy modules can certify about one scenario.
pub fn run_checks(scenario: &Scenario) -> VerifyReport {
    let alpha = scenario.alpha();
    let mut report = VerifyReport {
        scenario: scenario.name.clone(),
        header: header(scenario, alpha),
        scope_note: scope_note(scenario),
        warnings: stability_warnings(&scenario.operator, &scenario.kernel, scenario.grid.dt()),
        checks: Vec::new(),
    };
    let kernel_report = scenario.kernel_report();
    let violations = kernel_report.violations.len() as f64;
    let mut line = CheckLine::at_most("kernel", violations, 0.0);
    if !kernel_report.is_valid() {
        let reasons: Vec<String> = kernel_report.violations.iter().map(|v| v.to_string()).collect();
        line = line.with_note(reasons.join("; "));
        report.checks.push(line);
        return report;
    }
    report.checks.push(line);

    let kernel = &scenario.kernel;
    let fast = match simulate_with_tolerance(
        &scenario.operator,
        kernel,
        &scenario.initial,
        scenario.grid,
        scenario.mass_tolerance,
    ) {
        Ok(t) => t,
        Err(e) => {
            report
                .checks
                .push(CheckLine::at_most("simulate", 1.0, 0.0).with_note(e.to_string()));
            return report;
        }
    };
    let series = energy_series_fast(kernel, &fast).expect("fast trajectory carries auxiliaries");
    let e0 = series.initial();
    let per_e0 = |x: f64| if e0 > 0.0 { x / e0 } else { x };
    let checks = &scenario.checks;

    report.checks.push(CheckLine::at_most(
        "monotonicity",
        per_e0(series.max_increase().max(0.0)),
        checks.monotonicity_tolerance,
    ));
    report.checks.push(CheckLine::at_most(
        "rate-sign",
        series.max_rate(),
        checks.rate_tolerance * e0 * kernel.k0(),
    ));
    report.checks.push(CheckLine::at_most(
        "nonnegativity",
        per_e0(-series.most_negative_component()),
        checks.nonnegativity_tolerance,
    ));

    match alpha {
        Some(alpha) => match analyze(&series, alpha, &checks.decay) {
            Ok(decay) => push_decay(&mut report, &decay, &checks.decay),
            Err(e) => report
                .checks
                .push(CheckLine::at_most("decay", 1.0, 0.0).with_note(e.to_string())),
        },
        None => report
            .checks
            .push(CheckLine::at_most("decay", 1.0, 0.0).with_note("no decay constant available")),
    }

    let lemma = LemmaIntegrands::new(kernel, &fast).expect("fast trajectory carries auxiliaries");
    let points = checks.lemma_points;
    let steps = scenario.grid.steps();
    let sub: Vec<usize> = (0..points)
        .map(|k| ((k * steps) as f64 / (points - 1) as f64).round() as usize)
        .collect();
    let mut worst = 0.0f64;
    for (a, &s) in sub.iter().enumerate() {
        for &t in &sub[a + 1..] {
            worst = worst.max(lemma.residual_by_index(s, t).residual);
        }
    }
    report
        .checks
        .push(CheckLine::at_most("lemma1", worst, checks.lemma_tolerance));

    let direct_grid = scenario.direct_grid();
    match simulate_direct(&scenario.operator, kernel, &scenario.initial, direct_grid) {
        Ok(direct) => {
            let direct_energy = energy_series_direct(kernel, &direct);
            let gap = path_gap(&fast, &direct, &series, &direct_energy);
            report.checks.push(
                CheckLine::at_most("fast-vs-direct", gap, checks.gap_tolerance)
                    .with_note(format!("t ≤ {}", direct_grid.final_time())),
            );
        }
        Err(e) => report
            .checks
            .push(CheckLine::at_most("fast-vs-direct", 1.0, 0.0).with_note(e.to_string())),
    }

    let dt = scenario.grid.dt();
    report.checks.push(CheckLine::at_most(
        "rate-consistency",
        series.rate_consistency(),
        checks.rate_consistency_k * dt * dt,
    ));
    report
}

fn push_decay(
    report: &mut VerifyReport,
    decay: &DecayReport,
    settings: &CheckSettings,
) {
    let bound_tolerance = settings.bound_tolerance;
    report.checks.push(
        CheckLine::at_most("bound", decay.bound.margin, 1.0 + bound_tolerance)
            .with_note(format!("worst at t = {}", decay.bound.worst_time)),
    );
    let unresolved = decay.komornik.unresolved();
    let mut komornik = CheckLine::at_most("komornik", decay.komornik.max_margin, 1.0 + settings.komornik_tolerance);
    if unresolved > 0 {
        komornik = komornik.with_note(format!("{unresolved} unresolved S"));
    }
    report.checks.push(komornik);
    report.checks.push(CheckLine::at_most(
        "truncation",
        decay.komornik.truncation_ratio,
        settings.truncation_cap,
    ));
    report.checks.push(CheckLine::at_most(
        "komornik-implies-bound",
        if decay.komornik_implies_bound(bound_tolerance) { 0.0 } else { 1.0 },
        0.0,
    ));
    let fit = match &decay.fit {
        Ok(f) => CheckLine::at_most("fit", decay.alpha_theory - f.rate, settings.fit_slack).with_note(format!(
            "alpha_fitted = {}, r² = {:.6}",
            format_number(f.rate),
            f.r_squared
        )),
        Err(e) => CheckLine::at_most("fit", f64::NAN, settings.fit_slack).with_note(e.to_string()),
    };
    report.checks.push(fit);
}

//! Energy along trajectories.
//!
//! ```text
//! E(t) = ½‖u′‖² + ½(∫ₜ^∞k)‖A^{1/2}u‖² + ½∫₀ᵗ k(t−s)‖A^{1/2}u(s) − A^{1/2}u(t)‖² ds
//! ```
//!
//! The fast path expands the history term per Prony term as
//! `wᵢ − 2u zᵢ + u² Iᵢ(t)` with `Iᵢ(t) = (bᵢ/rᵢ)(1 − e^{−rᵢt})`, which is exact
//! given the auxiliaries. The direct path evaluates the same integral by
//! composite trapezoid over the stored displacement history, so the two act as
//! each other's oracle.
//!
//! Non-glassy kernels use `1 − ∫₀ᵗk` as the elastic weight (see
//! [`MemoryKernel::elastic_weight`]).

use thiserror::Error;

use crate::kernels::{MemoryKernel, PronyKernel};
use crate::operator::{OperatorError, SpectralOperator};
use crate::par;
use crate::simulator::{Method, ModalState, ModalView, SimError, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("state lacks the Prony auxiliaries (direct-path data); use energy_direct instead")]
    MissingAuxiliaries,
    #[error("state has {got} auxiliaries per mode, kernel has {terms} terms")]
    AuxiliaryMismatch { got: usize, terms: usize },
    #[error("interval start {start} is after its end {end}")]
    ReversedInterval { start: f64, end: f64 },
    #[error(transparent)]
    Grid(#[from] SimError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub elastic: f64,
    pub history: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, elastic: f64, history: f64) -> Self {
        Self {
            kinetic,
            elastic,
            history,
            total: kinetic + elastic + history,
        }
    }

    /// Most negative component (zero if all are nonnegative).
    pub fn most_negative(&self) -> f64 {
        self.kinetic.min(self.elastic).min(self.history).min(0.0)
    }
}

/// Energies and energy rates on a trajectory's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub breakdowns: Vec<EnergyBreakdown>,
    pub rates: Vec<f64>,
}

impl EnergySeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.breakdowns.iter().map(|b| b.total).collect()
    }

    pub fn initial(&self) -> f64 {
        self.breakdowns.first().map_or(0.0, |b| b.total)
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Index of grid time `t`, with the same slack as [`crate::simulator::TimeGrid::index_of`].
    pub fn index_of(&self, t: f64) -> Result<usize, SimError> {
        let dt = self.dt();
        if dt == 0.0 {
            return if self.len() == 1 && t == self.times[0] { Ok(0) } else { Err(SimError::OffGrid(t)) };
        }
        let x = (t - self.times[0]) / dt;
        let j = x.round();
        if j >= 0.0 && (j as usize) < self.len() && (x - j).abs() <= 1e-9 {
            Ok(j as usize)
        } else {
            Err(SimError::OffGrid(t))
        }
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Largest one-step increase `E(t_{j+1}) − E(t_j)`; negative if strictly decreasing.
    pub fn max_increase(&self) -> f64 {
        self.breakdowns
            .windows(2)
            .map(|p| p[1].total - p[0].total)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Most negative component over the whole series.
    pub fn most_negative_component(&self) -> f64 {
        self.breakdowns
            .iter()
            .map(EnergyBreakdown::most_negative)
            .fold(0.0, f64::min)
    }

    /// Centered differences `(E_{j+1} − E_{j−1})/(2dt)` at interior points,
    /// paired with the stored rate.
    pub fn rate_vs_centered_differences(&self) -> Vec<(f64, f64)> {
        let dt = self.dt();
        (1..self.len().saturating_sub(1))
            .map(|j| {
                let fd = (self.breakdowns[j + 1].total - self.breakdowns[j - 1].total) / (2.0 * dt);
                (self.rates[j], fd)
            })
            .collect()
    }

    /// `max |rate − centered difference|` over interior points.
    pub fn rate_consistency(&self) -> f64 {
        self.rate_vs_centered_differences()
            .iter()
            .map(|(r, fd)| (r - fd).abs())
            .fold(0.0, f64::max)
    }

    /// Restriction to the first `len` grid points.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            times: self.times[..len].to_vec(),
            breakdowns: self.breakdowns[..len].to_vec(),
            rates: self.rates[..len].to_vec(),
        }
    }
}

fn check_aux<'a>(kernel: &PronyKernel, views: impl IntoIterator<Item = ModalView<'a>>) -> Result<(), EnergyError> {
    for view in views {
        if view.z.len() != kernel.len() || view.w.len() != kernel.len() {
            return Err(EnergyError::AuxiliaryMismatch {
                got: view.z.len(),
                terms: kernel.len(),
            });
        }
    }
    Ok(())
}

/// Per-term `wᵢ − 2u zᵢ + u² Iᵢ(t)` summed with weights `weight(i)`,
/// then weighted by λ and summed over modes in ascending order.
fn history_sum<'a, F>(
    eigenvalues: &[f64],
    accumulated: &[f64],
    views: impl Iterator<Item = ModalView<'a>>,
    weight: F,
) -> (f64, f64, f64)
where
    F: Fn(usize) -> f64,
{
    let mut kinetic = 0.0;
    let mut seminorm = 0.0;
    let mut history = 0.0;
    for (lambda, view) in eigenvalues.iter().zip(views) {
        let u = view.u;
        kinetic += view.v * view.v;
        seminorm += lambda * u * u;
        let mut h = 0.0;
        for (i, acc) in accumulated.iter().enumerate() {
            h += weight(i) * (view.w[i] - 2.0 * u * view.z[i] + u * u * acc);
        }
        history += lambda * h;
    }
    (kinetic, seminorm, history)
}

fn fast_breakdown<'a>(
    eigenvalues: &[f64],
    kernel: &PronyKernel,
    t: f64,
    views: impl Iterator<Item = ModalView<'a>>,
) -> EnergyBreakdown {
    let accumulated: Vec<f64> = kernel.terms().iter().map(|term| term.accumulated_mass(t)).collect();
    let (kinetic, seminorm, history) = history_sum(eigenvalues, &accumulated, views, |_| 1.0);
    EnergyBreakdown::new(
        0.5 * kinetic,
        0.5 * kernel.elastic_weight(t) * seminorm,
        0.5 * history,
    )
}

fn fast_rate<'a>(
    eigenvalues: &[f64],
    kernel: &PronyKernel,
    t: f64,
    views: impl Iterator<Item = ModalView<'a>>,
) -> f64 {
    let accumulated: Vec<f64> = kernel.terms().iter().map(|term| term.accumulated_mass(t)).collect();
    let rates: Vec<f64> = kernel.terms().iter().map(|term| term.rate).collect();
    let (_, seminorm, history) = history_sum(eigenvalues, &accumulated, views, |i| -rates[i]);
    0.5 * history - 0.5 * kernel.value(t) * seminorm
}

fn state_views(states: &[ModalState]) -> impl Iterator<Item = ModalView<'_>> + Clone {
    states.iter().map(|s| ModalView {
        u: s.u,
        v: s.v,
        z: &s.z,
        w: &s.w,
    })
}

/// Energy from fast-path states at time t.
pub fn energy_fast(
    op: &SpectralOperator,
    kernel: &PronyKernel,
    states: &[ModalState],
    t: f64,
) -> Result<EnergyBreakdown, EnergyError> {
    op.check_len(states.len())?;
    check_aux(kernel, state_views(states))?;
    Ok(fast_breakdown(op.eigenvalues(), kernel, t, state_views(states)))
}

/// `E′(t) = ½∫₀ᵗk′(t−s)‖A^{1/2}(u(s) − u(t))‖²ds − ½k(t)‖A^{1/2}u(t)‖²`,
/// using that term i of `k′` is `−rᵢ` times term i of `k`.
pub fn energy_rate(
    op: &SpectralOperator,
    kernel: &PronyKernel,
    states: &[ModalState],
    t: f64,
) -> Result<f64, EnergyError> {
    op.check_len(states.len())?;
    check_aux(kernel, state_views(states))?;
    Ok(fast_rate(op.eigenvalues(), kernel, t, state_views(states)))
}

fn require_fast(kernel: &PronyKernel, traj: &Trajectory) -> Result<(), EnergyError> {
    if traj.method() != Method::Fast {
        return Err(EnergyError::MissingAuxiliaries);
    }
    if traj.aux_width() != kernel.len() {
        return Err(EnergyError::AuxiliaryMismatch {
            got: traj.aux_width(),
            terms: kernel.len(),
        });
    }
    Ok(())
}

fn mode_views(traj: &Trajectory, step: usize) -> impl Iterator<Item = ModalView<'_>> {
    (0..traj.mode_count()).map(move |m| traj.view(step, m))
}

/// Fast-path energies and rates at every grid point.
pub fn energy_series_fast(kernel: &PronyKernel, traj: &Trajectory) -> Result<EnergySeries, EnergyError> {
    require_fast(kernel, traj)?;
    let eig = traj.operator().eigenvalues();
    let rows = par::map_indexed(traj.len(), |j| {
        let t = traj.time(j);
        (
            fast_breakdown(eig, kernel, t, mode_views(traj, j)),
            fast_rate(eig, kernel, t, mode_views(traj, j)),
        )
    });
    let (breakdowns, rates) = rows.into_iter().unzip();
    Ok(EnergySeries {
        times: traj.times(),
        breakdowns,
        rates,
    })
}

/// Kernel and kernel derivative sampled at `m·dt`.
struct KernelSamples {
    value: Vec<f64>,
    derivative: Vec<f64>,
}

impl KernelSamples {
    fn new<K: MemoryKernel + ?Sized>(kernel: &K, dt: f64, len: usize) -> Self {
        Self {
            value: (0..len).map(|m| kernel.value(m as f64 * dt)).collect(),
            derivative: (0..len).map(|m| kernel.derivative(m as f64 * dt)).collect(),
        }
    }
}

/// Trapezoid over `[0, t_j]` of `k(t_j − s)‖A^{1/2}(u(s) − u(t_j))‖²` and the
/// same with `k′`.
fn direct_at<K: MemoryKernel + ?Sized>(
    kernel: &K,
    traj: &Trajectory,
    samples: &KernelSamples,
    j: usize,
) -> (EnergyBreakdown, f64) {
    let dt = traj.dt();
    let t = traj.time(j);
    let eig = traj.operator().eigenvalues();
    let mut kinetic = 0.0;
    let mut seminorm = 0.0;
    let mut history = 0.0;
    let mut history_rate = 0.0;
    for (m, &lambda) in eig.iter().enumerate() {
        let u = traj.u(m);
        let uj = u[j];
        kinetic += traj.v(m)[j] * traj.v(m)[j];
        seminorm += lambda * uj * uj;
        let mut h = 0.0;
        let mut hr = 0.0;
        for (i, &ui) in u[..=j].iter().enumerate() {
            let weight = if i == 0 || i == j { 0.5 } else { 1.0 };
            let d = ui - uj;
            h += weight * samples.value[j - i] * d * d;
            hr += weight * samples.derivative[j - i] * d * d;
        }
        history += lambda * h * dt;
        history_rate += lambda * hr * dt;
    }
    let breakdown = EnergyBreakdown::new(
        0.5 * kinetic,
        0.5 * kernel.elastic_weight(t) * seminorm,
        0.5 * history,
    );
    let rate = 0.5 * history_rate - 0.5 * kernel.value(t) * seminorm;
    (breakdown, rate)
}

/// Energy at grid time t by history quadrature. Works on either path.
pub fn energy_direct<K: MemoryKernel + ?Sized>(
    kernel: &K,
    traj: &Trajectory,
    t: f64,
) -> Result<EnergyBreakdown, EnergyError> {
    let j = traj.index_of(t)?;
    let samples = KernelSamples::new(kernel, traj.dt(), j + 1);
    Ok(direct_at(kernel, traj, &samples, j).0)
}

/// Direct-quadrature counterpart of [`energy_rate`].
pub fn energy_rate_direct<K: MemoryKernel + ?Sized>(
    kernel: &K,
    traj: &Trajectory,
    t: f64,
) -> Result<f64, EnergyError> {
    let j = traj.index_of(t)?;
    let samples = KernelSamples::new(kernel, traj.dt(), j + 1);
    Ok(direct_at(kernel, traj, &samples, j).1)
}

/// Direct-quadrature energies at every grid point (O(n²) per mode).
pub fn energy_series_direct<K: MemoryKernel + ?Sized>(kernel: &K, traj: &Trajectory) -> EnergySeries {
    let samples = KernelSamples::new(kernel, traj.dt(), traj.len());
    let rows = par::map_indexed(traj.len(), |j| direct_at(kernel, traj, &samples, j));
    let (breakdowns, rates) = rows.into_iter().unzip();
    EnergySeries {
        times: traj.times(),
        breakdowns,
        rates,
    }
}

/// Both sides of
/// `∫ₛᵀ‖u′‖² = ∫ₛᵀ⟨u′,(k∗u)′⟩ + ∫ₛᵀ‖A^{1/2}(u − k∗u)‖² + [⟨u′, u − k∗u⟩]ₛᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Per-grid-point integrands of the identity, so that many `[S, T]` pairs
/// share one pass over the trajectory.
pub struct LemmaIntegrands {
    dt: f64,
    initial_energy: f64,
    kinetic: Vec<f64>,
    memory: Vec<f64>,
    elastic: Vec<f64>,
    bracket: Vec<f64>,
    grid: crate::simulator::TimeGrid,
}

/// Trapezoid over `values[s..=t]`, summed directly so that late, tiny
/// intervals keep their relative accuracy.
fn trapezoid(values: &[f64], s: usize, t: usize, dt: f64) -> f64 {
    if s == t {
        return 0.0;
    }
    let inner: f64 = values[s + 1..t].iter().sum();
    dt * (0.5 * (values[s] + values[t]) + inner)
}

impl LemmaIntegrands {
    pub fn new(kernel: &PronyKernel, traj: &Trajectory) -> Result<Self, EnergyError> {
        require_fast(kernel, traj)?;
        let eig = traj.operator().eigenvalues();
        let rows = par::map_indexed(traj.len(), |j| {
            let mut a = 0.0;
            let mut b = 0.0;
            let mut c = 0.0;
            let mut d = 0.0;
            for (m, &lambda) in eig.iter().enumerate() {
                let s = traj.view(j, m);
                let conv: f64 = s.z.iter().sum();
                // (k∗u)′ = k(0)u + k′∗u = Σᵢ(bᵢu − rᵢzᵢ)
                let conv_rate: f64 = kernel
                    .terms()
                    .iter()
                    .zip(s.z)
                    .map(|(term, z)| term.weight * s.u - term.rate * z)
                    .sum();
                let gap = s.u - conv;
                a += s.v * s.v;
                b += s.v * conv_rate;
                c += lambda * gap * gap;
                d += s.v * gap;
            }
            [a, b, c, d]
        });
        let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
        let initial_energy = fast_breakdown(eig, kernel, 0.0, mode_views(traj, 0)).total;
        Ok(Self {
            dt: traj.dt(),
            initial_energy,
            kinetic: column(0),
            memory: column(1),
            elastic: column(2),
            bracket: column(3),
            grid: *traj.grid(),
        })
    }

    pub fn residual(&self, start: f64, end: f64) -> Result<LemmaResidual, EnergyError> {
        if start > end {
            return Err(EnergyError::ReversedInterval { start, end });
        }
        let s = self.grid.index_of(start)?;
        let t = self.grid.index_of(end)?;
        Ok(self.residual_by_index(s, t))
    }

    /// Residual on `[t_s, t_t]`; requires `s ≤ t` within the grid.
    pub fn residual_by_index(&self, s: usize, t: usize) -> LemmaResidual {
        let dt = self.dt;
        let lhs = trapezoid(&self.kinetic, s, t, dt);
        let rhs = trapezoid(&self.memory, s, t, dt)
            + trapezoid(&self.elastic, s, t, dt)
            + (self.bracket[t] - self.bracket[s]);
        let floor = 1e-14 * self.initial_energy * (t - s) as f64 * dt;
        let scale = lhs.abs().max(rhs.abs()).max(floor);
        let residual = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
        LemmaResidual { lhs, rhs, residual }
    }
}

/// Residual of the integrated multiplier identity on `[S, T]` (fast path only).
pub fn lemma1_residual(
    kernel: &PronyKernel,
    traj: &Trajectory,
    start: f64,
    end: f64,
) -> Result<LemmaResidual, EnergyError> {
    LemmaIntegrands::new(kernel, traj)?.residual(start, end)
}

//! Mode-by-mode time integration of `u″ + Au − ∫₀ᵗ k(t−s)Au(s)ds = 0`.
//!
//! In the eigenbasis every mode obeys the scalar equation
//! `u″ = −λu + λ(k∗u)`. Two integrators are provided:
//!
//! * [`simulate`] (fast): for a Prony kernel the convolution splits into
//!   auxiliaries `zᵢ = bᵢe^{−rᵢ·}∗u` with `zᵢ′ = −rᵢzᵢ + bᵢu`, and the whole
//!   augmented linear system is advanced with classical RK4. Energy
//!   auxiliaries `wᵢ = bᵢe^{−rᵢ·}∗u²` ride along in the same state.
//! * [`simulate_direct`] (oracle): the convolution is re-evaluated from the
//!   stored history by composite trapezoid at every RK4 stage, O(n²) overall.
//!   Works for any [`MemoryKernel`], including tabulated ones.
//!
//! [`ExactModalSolution`] solves a single mode with a single-term kernel in
//! closed form.
//!
//! RK4 is stable here for `dt·√λ_max ≲ 2.8` and `dt·max rᵢ ≲ 2.8`; see
//! [`stability_warnings`].

use num_complex::Complex64;
use thiserror::Error;

use crate::kernels::{KernelReport, MemoryKernel, PronyKernel, DEFAULT_MASS_TOLERANCE};
use crate::operator::{InitialData, OperatorError, SpectralOperator};
use crate::par;

/// Approximate RK4 stability limit on `dt·|eigenvalue|` along the imaginary
/// and negative real axes.
pub const RK4_STABILITY_LIMIT: f64 = 2.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("final time {final_time} is shorter than one step ({dt})")]
    HorizonTooShort { final_time: f64, dt: f64 },
    #[error("kernel rejected: {0}")]
    InvalidKernel(String),
    #[error("kernel is known up to t = {horizon}, the run needs t = {needed}")]
    KernelHorizon { horizon: f64, needed: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("state carries {z} memory and {w} energy auxiliaries, kernel has {terms} terms")]
    DimensionMismatch { z: usize, w: usize, terms: usize },
    #[error("closed-form modal solution needs a single-term kernel, got {0} terms")]
    UnsupportedKernel(usize),
    #[error("eigenvalue must be positive and finite, got {0}")]
    InvalidEigenvalue(f64),
    #[error("time {0} is not a grid point")]
    OffGrid(f64),
}

/// Uniform grid `t_j = j·dt`, `j = 0..=⌊T/dt⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, dt: f64) -> Result<Self, SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidStep(dt));
        }
        if !(final_time >= dt && final_time.is_finite()) {
            return Err(SimError::HorizonTooShort { final_time, dt });
        }
        // absorbs T/dt landing a hair below an integer
        let steps = (final_time / dt + 1e-9).floor() as usize;
        Ok(Self { dt, steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of steps; the grid has `steps + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| self.time(j)).collect()
    }

    /// Index of the grid point `t`, allowing a relative slack of `1e−9·dt`.
    pub fn index_of(&self, t: f64) -> Result<usize, SimError> {
        let x = t / self.dt;
        let j = x.round();
        if j >= 0.0 && j <= self.steps as f64 && (x - j).abs() <= 1e-9 {
            Ok(j as usize)
        } else {
            Err(SimError::OffGrid(t))
        }
    }
}

/// Per-mode augmented state.
///
/// On the fast path `z[i]` and `w[i]` are the Prony-term auxiliaries. On the
/// direct path both have length one and hold the quadrature values of
/// `∫₀ᵗ k(t−s)u(s)ds` and `∫₀ᵗ k(t−s)u(s)²ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub u: f64,
    pub v: f64,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl ModalState {
    pub fn at_rest(u: f64, v: f64, terms: usize) -> Self {
        Self {
            u,
            v,
            z: vec![0.0; terms],
            w: vec![0.0; terms],
        }
    }

    /// `(k∗u)(t)`.
    pub fn convolution(&self) -> f64 {
        self.z.iter().sum()
    }
}

/// Time derivative of one mode's augmented state:
/// `u′ = v`, `v′ = −λu + λΣzᵢ`, `zᵢ′ = −rᵢzᵢ + bᵢu`, `wᵢ′ = −rᵢwᵢ + bᵢu²`.
pub fn modal_rhs(
    lambda: f64,
    kernel: &PronyKernel,
    state: &ModalState,
) -> Result<ModalState, SimError> {
    let terms = kernel.len();
    if state.z.len() != terms || state.w.len() != terms {
        return Err(SimError::DimensionMismatch {
            z: state.z.len(),
            w: state.w.len(),
            terms,
        });
    }
    let u = state.u;
    let conv: f64 = state.z.iter().sum();
    let z = kernel
        .terms()
        .iter()
        .zip(&state.z)
        .map(|(t, z)| -t.rate * z + t.weight * u)
        .collect();
    let w = kernel
        .terms()
        .iter()
        .zip(&state.w)
        .map(|(t, w)| -t.rate * w + t.weight * u * u)
        .collect();
    Ok(ModalState {
        u: state.v,
        v: -lambda * u + lambda * conv,
        z,
        w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fast,
    Direct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fast => "fast",
            Method::Direct => "direct",
        }
    }
}

/// Full history of one mode. Auxiliaries are stored row-major, `aux` values
/// per grid point.
#[derive(Debug, Clone, PartialEq)]
struct ModeHistory {
    u: Vec<f64>,
    v: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
}

/// Borrowed view of one mode at one grid point.
#[derive(Debug, Clone, Copy)]
pub struct ModalView<'a> {
    pub u: f64,
    pub v: f64,
    pub z: &'a [f64],
    pub w: &'a [f64],
}

impl ModalView<'_> {
    pub fn to_state(self) -> ModalState {
        ModalState {
            u: self.u,
            v: self.v,
            z: self.z.to_vec(),
            w: self.w.to_vec(),
        }
    }
}

/// Every grid point of every mode, plus what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    method: Method,
    aux: usize,
    operator: SpectralOperator,
    modes: Vec<ModeHistory>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.grid.time(j)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.operator
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Auxiliaries per mode: the Prony term count on the fast path, 1 on the direct path.
    pub fn aux_width(&self) -> usize {
        self.aux
    }

    pub fn u(&self, mode: usize) -> &[f64] {
        &self.modes[mode].u
    }

    pub fn v(&self, mode: usize) -> &[f64] {
        &self.modes[mode].v
    }

    pub fn view(&self, step: usize, mode: usize) -> ModalView<'_> {
        let h = &self.modes[mode];
        let range = step * self.aux..(step + 1) * self.aux;
        ModalView {
            u: h.u[step],
            v: h.v[step],
            z: &h.z[range.clone()],
            w: &h.w[range],
        }
    }

    pub fn state(&self, step: usize, mode: usize) -> ModalState {
        self.view(step, mode).to_state()
    }

    /// States of all modes at one grid point.
    pub fn states_at(&self, step: usize) -> Vec<ModalState> {
        (0..self.mode_count()).map(|m| self.state(step, m)).collect()
    }

    /// `(k∗u)(t_step)` for one mode.
    pub fn convolution(&self, step: usize, mode: usize) -> f64 {
        self.view(step, mode).z.iter().sum()
    }

    pub fn index_of(&self, t: f64) -> Result<usize, SimError> {
        self.grid.index_of(t)
    }
}

/// Stability warnings for the chosen step, empty when none apply.
pub fn stability_warnings(op: &SpectralOperator, kernel: &PronyKernel, dt: f64) -> Vec<String> {
    let mut out = Vec::new();
    let osc = dt * op.max_eigenvalue().sqrt();
    if osc > RK4_STABILITY_LIMIT {
        out.push(format!(
            "dt·√λ_max = {osc:.3} exceeds {RK4_STABILITY_LIMIT}; RK4 is likely unstable"
        ));
    }
    if let Some(r_max) = kernel.terms().iter().map(|t| t.rate).reduce(f64::max) {
        let damp = dt * r_max;
        if damp > RK4_STABILITY_LIMIT {
            out.push(format!(
                "dt·max r = {damp:.3} exceeds {RK4_STABILITY_LIMIT}; RK4 is likely unstable"
            ));
        }
    }
    out
}

fn check_kernel(kernel: &PronyKernel, tolerance: f64) -> Result<(), SimError> {
    check_report(&kernel.validate(tolerance))
}

fn check_report(report: &KernelReport) -> Result<(), SimError> {
    if report.is_valid() {
        Ok(())
    } else {
        let msg = report
            .violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(SimError::InvalidKernel(msg))
    }
}

/// Fast path: RK4 on the augmented Prony system, all modes independent.
///
/// Identical inputs give bitwise-identical output regardless of threading,
/// and simulating a mode jointly or alone gives the same bits.
pub fn simulate(
    op: &SpectralOperator,
    kernel: &PronyKernel,
    init: &InitialData,
    grid: TimeGrid,
) -> Result<Trajectory, SimError> {
    simulate_with_tolerance(op, kernel, init, grid, DEFAULT_MASS_TOLERANCE)
}

pub fn simulate_with_tolerance(
    op: &SpectralOperator,
    kernel: &PronyKernel,
    init: &InitialData,
    grid: TimeGrid,
    mass_tolerance: f64,
) -> Result<Trajectory, SimError> {
    check_kernel(kernel, mass_tolerance)?;
    op.check_len(init.u0.len())?;
    op.check_len(init.v0.len())?;
    let modes = par::map_indexed(op.mode_count(), |m| {
        integrate_mode_fast(op.eigenvalues()[m], kernel, init.u0[m], init.v0[m], grid)
    });
    Ok(Trajectory {
        grid,
        method: Method::Fast,
        aux: kernel.len(),
        operator: op.clone(),
        modes,
    })
}

fn integrate_mode_fast(
    lambda: f64,
    kernel: &PronyKernel,
    u0: f64,
    v0: f64,
    grid: TimeGrid,
) -> ModeHistory {
    let n = kernel.len();
    let points = grid.len();
    let rates: Vec<f64> = kernel.terms().iter().map(|t| t.rate).collect();
    let weights: Vec<f64> = kernel.terms().iter().map(|t| t.weight).collect();
    let dim = 2 + 2 * n;

    // y = [u, v, z_1..z_n, w_1..w_n]
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let u = y[0];
        let (z, w) = y[2..].split_at(n);
        let (dz, dw) = dy[2..].split_at_mut(n);
        let mut conv = 0.0;
        for i in 0..n {
            conv += z[i];
            dz[i] = -rates[i] * z[i] + weights[i] * u;
            dw[i] = -rates[i] * w[i] + weights[i] * u * u;
        }
        dy[0] = y[1];
        dy[1] = -lambda * u + lambda * conv;
    };

    let mut history = ModeHistory {
        u: Vec::with_capacity(points),
        v: Vec::with_capacity(points),
        z: Vec::with_capacity(points * n),
        w: Vec::with_capacity(points * n),
    };
    let mut y = vec![0.0; dim];
    y[0] = u0;
    y[1] = v0;
    let record = |h: &mut ModeHistory, y: &[f64]| {
        h.u.push(y[0]);
        h.v.push(y[1]);
        h.z.extend_from_slice(&y[2..2 + n]);
        h.w.extend_from_slice(&y[2 + n..]);
    };
    record(&mut history, &y);

    let h = grid.dt();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for _ in 0..grid.steps() {
        rhs(&y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        record(&mut history, &y);
    }
    history
}

/// Oracle path: RK4 in `(u, v)` with the convolution recomputed from the
/// stored history by composite trapezoid at each stage time.
///
/// Stage times `t_j + h/2` close the quadrature with a half-width panel ending
/// at the stage value of u; stage `t_j + h` with a full panel. The energy
/// quadrature `∫k(t−s)u(s)²ds` is recorded at grid points only.
pub fn simulate_direct<K>(
    op: &SpectralOperator,
    kernel: &K,
    init: &InitialData,
    grid: TimeGrid,
) -> Result<Trajectory, SimError>
where
    K: MemoryKernel + ?Sized,
{
    check_report(&kernel.report())?;
    if let Some(horizon) = kernel.horizon() {
        if horizon + 1e-9 * grid.dt() < grid.final_time() {
            return Err(SimError::KernelHorizon {
                horizon,
                needed: grid.final_time(),
            });
        }
    }
    op.check_len(init.u0.len())?;
    op.check_len(init.v0.len())?;
    let h = grid.dt();
    let full: Vec<f64> = (0..=grid.steps()).map(|m| kernel.value(m as f64 * h)).collect();
    let half: Vec<f64> = (0..grid.steps())
        .map(|m| kernel.value((m as f64 + 0.5) * h))
        .collect();
    let modes = par::map_indexed(op.mode_count(), |m| {
        integrate_mode_direct(op.eigenvalues()[m], &full, &half, init.u0[m], init.v0[m], grid)
    });
    Ok(Trajectory {
        grid,
        method: Method::Direct,
        aux: 1,
        operator: op.clone(),
        modes,
    })
}

fn integrate_mode_direct(
    lambda: f64,
    full: &[f64],
    half: &[f64],
    u0: f64,
    v0: f64,
    grid: TimeGrid,
) -> ModeHistory {
    let h = grid.dt();
    let points = grid.len();
    let k0 = full[0];
    let mut u = Vec::with_capacity(points);
    let mut v = Vec::with_capacity(points);
    let mut conv = Vec::with_capacity(points);
    let mut energy = Vec::with_capacity(points);
    u.push(u0);
    v.push(v0);
    conv.push(0.0);
    energy.push(0.0);

    for j in 0..grid.steps() {
        let (uj, vj) = (u[j], v[j]);

        // ∫₀^{t_j} k(t_j + h/2 − s)u(s)ds, trapezoid on nodes 0..=j
        let mut hist_mid = 0.0;
        // ∫₀^{t_j} part of ∫₀^{t_{j+1}} k(t_{j+1} − s)u(s)ds, nodes 0..=j
        let mut hist_end = 0.0;
        let mut hist_end_sq = 0.0;
        for (i, &ui) in u.iter().enumerate() {
            let w_mid = if j > 0 && (i == 0 || i == j) { 0.5 } else if j == 0 { 0.0 } else { 1.0 };
            let w_end = if i == 0 { 0.5 } else { 1.0 };
            hist_mid += w_mid * half[j - i] * ui;
            let ke = full[j + 1 - i];
            hist_end += w_end * ke * ui;
            hist_end_sq += w_end * ke * ui * ui;
        }
        hist_mid *= h;
        hist_end *= h;
        hist_end_sq *= h;

        let accel = |us: f64, c: f64| -lambda * us + lambda * c;
        let k1u = vj;
        let k1v = accel(uj, conv[j]);

        let u2 = uj + 0.5 * h * k1u;
        let v2 = vj + 0.5 * h * k1v;
        let c2 = hist_mid + 0.25 * h * (half[0] * uj + k0 * u2);
        let k2u = v2;
        let k2v = accel(u2, c2);

        let u3 = uj + 0.5 * h * k2u;
        let v3 = vj + 0.5 * h * k2v;
        let c3 = hist_mid + 0.25 * h * (half[0] * uj + k0 * u3);
        let k3u = v3;
        let k3v = accel(u3, c3);

        let u4 = uj + h * k3u;
        let v4 = vj + h * k3v;
        let c4 = hist_end + 0.5 * h * k0 * u4;
        let k4u = v4;
        let k4v = accel(u4, c4);

        let un = uj + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        let vn = vj + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        u.push(un);
        v.push(vn);
        conv.push(hist_end + 0.5 * h * k0 * un);
        energy.push(hist_end_sq + 0.5 * h * k0 * un * un);
    }
    ModeHistory {
        u,
        v,
        z: conv,
        w: energy,
    }
}

/// Closed-form solution of one mode with a single-term kernel `b e^{−r t}`.
///
/// `(u, v, z)` obeys a 3×3 constant-coefficient system with characteristic
/// polynomial `s³ + rs² + λs + λ(r − b)`. The solution is a combination of
/// `t^j e^{st}` over the roots (with multiplicity), fitted to
/// `u(0) = u₀`, `u′(0) = v₀`, `u″(0) = −λu₀`.
#[derive(Debug, Clone)]
pub struct ExactModalSolution {
    lambda: f64,
    basis: Vec<(Complex64, u32)>,
    coeffs: Vec<Complex64>,
}

/// Roots closer than this (relative) are treated as repeated.
const ROOT_MERGE_TOLERANCE: f64 = 1e-6;

impl ExactModalSolution {
    pub fn new(lambda: f64, kernel: &PronyKernel, u0: f64, v0: f64) -> Result<Self, SimError> {
        if kernel.len() != 1 {
            return Err(SimError::UnsupportedKernel(kernel.len()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SimError::InvalidEigenvalue(lambda));
        }
        let term = kernel.terms()[0];
        let roots = cubic_roots(term.rate, lambda, lambda * (term.rate - term.weight));
        let groups = group_roots(&roots);
        let basis: Vec<(Complex64, u32)> = groups
            .iter()
            .flat_map(|&(s, mult)| (0..mult).map(move |j| (s, j)))
            .collect();
        let mut matrix = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (col, &(s, j)) in basis.iter().enumerate() {
            for (d, row) in matrix.iter_mut().enumerate() {
                row[col] = basis_derivative(s, j, d as u32, 0.0);
            }
        }
        let rhs = [
            Complex64::new(u0, 0.0),
            Complex64::new(v0, 0.0),
            Complex64::new(-lambda * u0, 0.0),
        ];
        let coeffs = solve3(matrix, rhs).to_vec();
        Ok(Self {
            lambda,
            basis,
            coeffs,
        })
    }

    /// Roots of the characteristic polynomial with multiplicities.
    pub fn roots(&self) -> Vec<(Complex64, u32)> {
        group_roots(&self.basis.iter().map(|b| b.0).collect::<Vec<_>>())
    }

    fn derivative(&self, d: u32, t: f64) -> f64 {
        self.basis
            .iter()
            .zip(&self.coeffs)
            .map(|(&(s, j), c)| c * basis_derivative(s, j, d, t))
            .sum::<Complex64>()
            .re
    }

    /// `(u, v, z)` at time t, with `z = (u″ + λu)/λ = (k∗u)(t)`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let u = self.derivative(0, t);
        let v = self.derivative(1, t);
        let acc = self.derivative(2, t);
        (u, v, (acc + self.lambda * u) / self.lambda)
    }
}

/// One-shot form of [`ExactModalSolution`].
pub fn exact_modal_solution(
    lambda: f64,
    kernel: &PronyKernel,
    u0: f64,
    v0: f64,
    t: f64,
) -> Result<(f64, f64, f64), SimError> {
    Ok(ExactModalSolution::new(lambda, kernel, u0, v0)?.eval(t))
}

/// d-th derivative of `t^j e^{st}`.
fn basis_derivative(s: Complex64, j: u32, d: u32, t: f64) -> Complex64 {
    // Leibniz: Σ_i C(d,i) (t^j)^{(i)} s^{d−i}
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=d.min(j) {
        let binom = (0..i).fold(1.0, |b, q| b * (d - q) as f64 / (q + 1) as f64);
        let falling = (0..i).fold(1.0, |f, q| f * (j - q) as f64);
        let power = if j - i == 0 { 1.0 } else { t.powi((j - i) as i32) };
        acc += binom * falling * power * s.powu(d - i);
    }
    acc * (s * t).exp()
}

/// Roots of `s³ + a s² + b s + c`: one real root by bisection and Newton,
/// then the deflated quadratic.
fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let p = |s: f64| ((s + a) * s + b) * s + c;
    let bound = 1.0 + a.abs().max(b.abs()).max(c.abs());
    let (mut lo, mut hi) = (-bound, bound);
    let mut root = 0.5 * (lo + hi);
    for _ in 0..400 {
        root = 0.5 * (lo + hi);
        let value = p(root);
        if value == 0.0 || hi - lo <= f64::EPSILON * root.abs().max(1.0) {
            break;
        }
        if value < 0.0 {
            lo = root;
        } else {
            hi = root;
        }
    }
    for _ in 0..3 {
        let dp = (3.0 * root + 2.0 * a) * root + b;
        let value = p(root);
        if dp == 0.0 || value == 0.0 {
            break;
        }
        let next = root - value / dp;
        if p(next).abs() < value.abs() {
            root = next;
        } else {
            break;
        }
    }
    // s³ + a s² + b s + c = (s − root)(s² + q1 s + q0)
    let q1 = a + root;
    let q0 = b + root * q1;
    let disc = q1 * q1 - 4.0 * q0;
    let scale = (q1 * q1).max(q0.abs()).max(f64::MIN_POSITIVE);
    let real = |x: f64| Complex64::new(x, 0.0);
    let (r2, r3) = if disc.abs() <= 1e-12 * scale {
        (real(-0.5 * q1), real(-0.5 * q1))
    } else if disc > 0.0 {
        let big = -0.5 * (q1 + q1.signum() * disc.sqrt());
        let big = if big == 0.0 { -0.5 * disc.sqrt() } else { big };
        (real(big), real(q0 / big))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(-0.5 * q1, im), Complex64::new(-0.5 * q1, -im))
    };
    [real(root), r2, r3]
}

fn group_roots(roots: &[Complex64]) -> Vec<(Complex64, u32)> {
    let mut groups: Vec<(Complex64, u32, Complex64)> = Vec::new();
    for &s in roots {
        match groups
            .iter_mut()
            .find(|(g, _, _)| (g - s).norm() <= ROOT_MERGE_TOLERANCE * (1.0 + s.norm()))
        {
            Some(group) => {
                group.1 += 1;
                group.2 += s;
                group.0 = group.2 / group.1 as f64;
            }
            None => groups.push((s, 1, s)),
        }
    }
    groups.into_iter().map(|(s, m, _)| (s, m)).collect()
}

fn solve3(mut m: [[Complex64; 3]; 3], mut rhs: [Complex64; 3]) -> [Complex64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .expect("nonempty range");
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let pivot_row = m[col];
            let factor = m[row][col] / pivot_row[col];
            for (x, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= factor * p;
            }
            let sub = factor * rhs[col];
            rhs[row] -= sub;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Strictness;

    fn maxwell() -> PronyKernel {
        PronyKernel::new([(2.0, 2.0)], Strictness::Glassy).unwrap()
    }

    fn single(lambda: f64) -> SpectralOperator {
        SpectralOperator::diagonal(vec![lambda]).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let k = maxwell();
        let d = modal_rhs(1.0, &k, &ModalState::at_rest(1.0, 0.0, 1)).unwrap();
        assert_eq!(d, ModalState { u: 0.0, v: -1.0, z: vec![2.0], w: vec![2.0] });

        let d = modal_rhs(3.7, &k, &ModalState::at_rest(0.0, 0.0, 1)).unwrap();
        assert_eq!(d, ModalState::at_rest(0.0, 0.0, 1));

        let s = ModalState { u: 0.0, v: 1.0, z: vec![1.0], w: vec![0.0] };
        let d = modal_rhs(1.0, &k, &s).unwrap();
        assert_eq!(d, ModalState { u: 1.0, v: 1.0, z: vec![-2.0], w: vec![0.0] });

        assert!(matches!(
            modal_rhs(1.0, &k, &ModalState::at_rest(0.0, 0.0, 2)),
            Err(SimError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grid_counts_points() {
        let g = TimeGrid::new(10.0, 1e-3).unwrap();
        assert_eq!(g.len(), 10_001);
        assert_eq!(TimeGrid::new(1.0, 0.3).unwrap().len(), 4);
        assert!(matches!(TimeGrid::new(1.0, 0.0), Err(SimError::InvalidStep(_))));
        assert!(matches!(TimeGrid::new(1.0, -1.0), Err(SimError::InvalidStep(_))));
        assert!(matches!(TimeGrid::new(1e-4, 1e-3), Err(SimError::HorizonTooShort { .. })));
        assert_eq!(g.index_of(2.5).unwrap(), 2500);
        assert!(g.index_of(2.5004).is_err());
        assert!(g.index_of(10.5).is_err());
    }

    #[test]
    fn reference_case_matches_closed_form() {
        let traj = simulate(
            &single(1.0),
            &maxwell(),
            &InitialData { u0: vec![1.0], v0: vec![0.0] },
            TimeGrid::new(10.0, 1e-3).unwrap(),
        )
        .unwrap();
        let err = traj
            .u(0)
            .iter()
            .zip(traj.times())
            .map(|(u, t)| (u - (1.0 + t) * (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-9, "max error {err:e}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let op = SpectralOperator::dirichlet_laplacian_1d(1.0, 3).unwrap();
        let grid = TimeGrid::new(1.0, 1e-2).unwrap();
        let zero = InitialData::zeros(&op);
        for traj in [
            simulate(&op, &maxwell(), &zero, grid).unwrap(),
            simulate_direct(&op, &maxwell(), &zero, grid).unwrap(),
        ] {
            for m in 0..3 {
                for j in 0..traj.len() {
                    let s = traj.view(j, m);
                    assert_eq!((s.u, s.v), (0.0, 0.0));
                    assert!(s.z.iter().chain(s.w).all(|&x| x == 0.0));
                }
            }
        }
    }

    #[test]
    fn empty_kernel_is_harmonic_oscillator() {
        let traj = simulate(
            &single(1.0),
            &PronyKernel::zero(),
            &InitialData { u0: vec![1.0], v0: vec![0.0] },
            TimeGrid::new(10.0, 1e-2).unwrap(),
        )
        .unwrap();
        let err = traj
            .u(0)
            .iter()
            .zip(traj.times())
            .map(|(u, t)| (u - t.cos()).abs())
            .fold(0.0, f64::max);
        // RK4 global error ~ T·(dt)⁴/120 scale
        assert!(err < 1e-8, "{err:e}");
        assert_eq!(traj.aux_width(), 0);
    }

    #[test]
    fn invalid_inputs_rejected_before_integration() {
        let op = single(1.0);
        let init = InitialData { u0: vec![1.0], v0: vec![0.0] };
        let grid = TimeGrid::new(1.0, 0.1).unwrap();
        let bad = PronyKernel::new([(3.0, 2.0)], Strictness::Raw).unwrap();
        assert!(matches!(simulate(&op, &bad, &init, grid), Err(SimError::InvalidKernel(_))));
        let wrong_len = InitialData { u0: vec![1.0, 0.0], v0: vec![0.0] };
        assert!(matches!(simulate(&op, &maxwell(), &wrong_len, grid), Err(SimError::Operator(_))));
    }

    #[test]
    fn direct_path_matches_reference_to_second_order() {
        let traj = simulate_direct(
            &single(1.0),
            &maxwell(),
            &InitialData { u0: vec![1.0], v0: vec![0.0] },
            TimeGrid::new(10.0, 1e-3).unwrap(),
        )
        .unwrap();
        let err = traj
            .u(0)
            .iter()
            .zip(traj.times())
            .map(|(u, t)| (u - (1.0 + t) * (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 5e-6, "max error {err:e}");
        // conv column holds 2t e^{-t}
        let j = 4000;
        let t = traj.time(j);
        assert!((traj.convolution(j, 0) - 2.0 * t * (-t).exp()).abs() < 1e-5);
    }

    #[test]
    fn direct_rejects_short_tables() {
        let table = crate::kernels::TabulatedKernel::from_fn(0.01, 11, |t| (-t).exp()).unwrap();
        let r = simulate_direct(
            &single(1.0),
            &table,
            &InitialData { u0: vec![1.0], v0: vec![0.0] },
            TimeGrid::new(2.0, 0.01).unwrap(),
        );
        assert!(matches!(r, Err(SimError::KernelHorizon { .. })));
    }

    #[test]
    fn exact_solution_reference() {
        let sol = ExactModalSolution::new(1.0, &maxwell(), 1.0, 0.0).unwrap();
        let roots = sol.roots();
        assert_eq!(roots.len(), 2);
        for &t in &[0.0, 0.5, 1.0, 3.0, 10.0] {
            let (u, v, z) = sol.eval(t);
            let e = (-t).exp();
            assert!((u - (1.0 + t) * e).abs() < 1e-13, "u at {t}");
            assert!((v + t * e).abs() < 1e-13, "v at {t}");
            assert!((z - 2.0 * t * e).abs() < 1e-12, "z at {t}");
        }
    }

    #[test]
    fn exact_solution_initial_conditions() {
        for (lambda, b, r, u0, v0) in [
            (1.0, 2.0, 2.0, 1.0, 0.0),
            (9.0, 0.5, 3.0, -0.3, 1.2),
            (0.25, 1.0, 1.0, 2.0, -1.0),
            (100.0, 4.0, 4.0, 0.0, 1.0),
        ] {
            let k = PronyKernel::new([(b, r)], Strictness::Raw).unwrap();
            let (u, v, z) = exact_modal_solution(lambda, &k, u0, v0, 0.0).unwrap();
            assert!((u - u0).abs() < 1e-12);
            assert!((v - v0).abs() < 1e-12);
            assert!(z.abs() < 1e-10);
        }
    }

    #[test]
    fn exact_solution_memoryless_limit() {
        let k = PronyKernel::new([(0.0, 3.0)], Strictness::Raw).unwrap();
        let (lambda, u0, v0) = (4.0f64, 0.7, -0.4);
        let sol = ExactModalSolution::new(lambda, &k, u0, v0).unwrap();
        let w = lambda.sqrt();
        for &t in &[0.1, 1.0, 5.0] {
            let (u, _, z) = sol.eval(t);
            assert!((u - (u0 * (w * t).cos() + v0 / w * (w * t).sin())).abs() < 1e-12);
            assert!(z.abs() < 1e-12);
        }
    }

    #[test]
    fn exact_solution_satisfies_the_ode() {
        // check u″ = −λu + λz and z′ = −rz + bu by central differences
        let k = PronyKernel::new([(1.5, 2.5)], Strictness::Raw).unwrap();
        let sol = ExactModalSolution::new(3.0, &k, 0.8, 0.2).unwrap();
        let h = 1e-4;
        for &t in &[0.3, 1.1, 4.0] {
            let (u, v, z) = sol.eval(t);
            let (_, vp, zp) = sol.eval(t + h);
            let (_, vm, zm) = sol.eval(t - h);
            assert!(((vp - vm) / (2.0 * h) - (-3.0 * u + 3.0 * z)).abs() < 1e-7);
            assert!(((zp - zm) / (2.0 * h) - (-2.5 * z + 1.5 * u)).abs() < 1e-7);
            let (up, _, _) = sol.eval(t + h);
            let (um, _, _) = sol.eval(t - h);
            assert!(((up - um) / (2.0 * h) - v).abs() < 1e-7);
        }
        let two = PronyKernel::new([(0.5, 1.0), (1.5, 3.0)], Strictness::Glassy).unwrap();
        assert!(matches!(
            ExactModalSolution::new(1.0, &two, 1.0, 0.0),
            Err(SimError::UnsupportedKernel(2))
        ));
    }

    #[test]
    fn cubic_roots_cover_all_cases() {
        // (s+1)(s+2)(s+3)
        let mut r: Vec<f64> = cubic_roots(6.0, 11.0, 6.0).iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        for (got, want) in r.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        // (s+1)³
        let g = group_roots(&cubic_roots(3.0, 3.0, 1.0));
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].1, 3);
        // (s+2)(s²+4)
        let roots = cubic_roots(2.0, 4.0, 8.0);
        assert!(roots.iter().any(|z| (z - Complex64::new(0.0, 2.0)).norm() < 1e-12));
    }
}

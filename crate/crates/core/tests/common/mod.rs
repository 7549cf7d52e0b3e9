//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use glassy_decay::kernels::{PronyKernel, Strictness};
use glassy_decay::operator::{InitialData, SpectralOperator};
use glassy_decay::simulator::{simulate, simulate_direct, TimeGrid, Trajectory};

/// Exact displacement of the reference problem
/// `u″ = −u + k∗u`, `k = 2e^{−2t}`, `u(0) = 1`, `u′(0) = 0`.
pub fn reference_u(t: f64) -> f64 {
    (1.0 + t) * (-t).exp()
}

pub fn reference_v(t: f64) -> f64 {
    -t * (-t).exp()
}

/// Closed-form energy of the reference solution.
pub fn reference_energy(t: f64) -> f64 {
    let e = (-t).exp();
    let e2 = e * e;
    let p = 1.0 + t;
    0.5 * t * t * e2
        + 0.5 * e2 * p * p * e2
        + 0.5 * (2.0 * e2 * (p.powi(3) - 1.0) / 3.0 - 2.0 * p * e * 2.0 * t * e + p * p * e2 * (1.0 - e2))
}

/// The same energy straight from its definition, history by composite Simpson.
pub fn reference_energy_quadrature(t: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = t / n as f64;
    let ut = reference_u(t);
    let f = |s: f64| 2.0 * (-2.0 * (t - s)).exp() * (reference_u(s) - ut).powi(2);
    let mut sum = f(0.0) + f(t);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let history = if n == 0 { 0.0 } else { sum * h / 3.0 };
    0.5 * reference_v(t).powi(2) + 0.5 * (-2.0 * t).exp() * ut * ut + 0.5 * history
}

pub fn maxwell() -> PronyKernel {
    PronyKernel::new([(2.0, 2.0)], Strictness::Glassy).unwrap()
}

pub fn reference_operator() -> SpectralOperator {
    SpectralOperator::diagonal(vec![1.0]).unwrap()
}

pub fn reference_initial() -> InitialData {
    InitialData {
        u0: vec![1.0],
        v0: vec![0.0],
    }
}

pub fn reference_fast(t_final: f64, dt: f64) -> Trajectory {
    simulate(
        &reference_operator(),
        &maxwell(),
        &reference_initial(),
        TimeGrid::new(t_final, dt).unwrap(),
    )
    .unwrap()
}

pub fn reference_direct(t_final: f64, dt: f64) -> Trajectory {
    simulate_direct(
        &reference_operator(),
        &maxwell(),
        &reference_initial(),
        TimeGrid::new(t_final, dt).unwrap(),
    )
    .unwrap()
}

/// `max_j |u(t_j) − reference_u(t_j)|` for mode 0.
pub fn reference_error(traj: &Trajectory) -> f64 {
    traj.u(0)
        .iter()
        .enumerate()
        .map(|(j, u)| (u - reference_u(traj.time(j))).abs())
        .fold(0.0, f64::max)
}

/// Observed orders `log₂(e_k/e_{k+1})` for errors at successively halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

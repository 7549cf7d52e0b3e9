//! Spectral simulation of `u″ + Au − k∗Au = 0` with Prony-sum memory kernels,
//! and numerical certification of its exponential energy decay.
//!
//! Each eigenmode of the operator evolves independently, and the memory term is
//! carried exactly by one auxiliary ODE per Prony term. A direct quadrature
//! path recomputes the convolution from stored history and serves as an
//! oracle for the fast path.
//!
//! | module | contents |
//! |---|---|
//! | [`kernels`] | Prony and tabulated kernels, mass and η, validation |
//! | [`operator`] | diagonal and 1-D Dirichlet Laplacian spectra, initial data |
//! | [`simulator`] | fast and direct RK4 paths, closed-form single-mode solution |
//! | [`energy`] | energy, its rate, and the multiplier identity residual |
//! | [`decay`] | decay constant, pointwise bound, integral criterion, fits, η sweeps |
//! | [`scenario`] | TOML scenario files and bundled presets |
//! | [`verify`] | the full check pipeline and its report |
//! | [`cli`] | the `glassy-decay` command line |
//!
//! With the default `parallel` feature, modes, time points and sweep rows are
//! spread over a rayon pool. Results are written to fixed slots and reduced in
//! a fixed order, so output is bitwise identical with or without the feature.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decay;
pub mod energy;
pub mod kernels;
pub mod operator;
mod par;
pub mod scenario;
pub mod simulator;
pub mod verify;

pub use decay::{theoretical_alpha, CheckSettings, DecayReport, Verdict};
pub use energy::{EnergyBreakdown, EnergySeries};
pub use kernels::{MemoryKernel, PronyKernel, Strictness, TabulatedKernel};
pub use operator::{InitialData, SpectralOperator};
pub use par::is_parallel;
pub use scenario::Scenario;
pub use simulator::{simulate, simulate_direct, Method, TimeGrid, Trajectory};

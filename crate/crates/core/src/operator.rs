//! The operator `A`, represented by its spectrum.
//!
//! Everything the energy analysis touches (`⟨Ax, x⟩`, `‖A^{1/2}x‖`) is
//! diagonal in the eigenbasis, so `A` is just a sorted list of positive
//! eigenvalues. Solutions are exact for data supported on the retained modes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("interval length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("at least one mode is required")]
    NoModes,
    #[error("eigenvalue {index} is {value}, eigenvalues must be positive and finite")]
    InvalidEigenvalue { index: usize, value: f64 },
    #[error("insufficient resolution: {points} samples for {modes} modes (need at least {needed})")]
    InsufficientResolution {
        points: usize,
        modes: usize,
        needed: usize,
    },
    #[error("projection needs a 1-D Dirichlet Laplacian")]
    NotDirichlet,
    #[error("length mismatch: expected {expected} coefficients, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("unknown initial-data preset {0:?}")]
    UnknownPreset(String),
    #[error("preset {name:?} needs between 1 and {modes} modes")]
    PresetModes { name: String, modes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `−d²/dx²` on `(0, length)` with Dirichlet conditions.
    Dirichlet1d { length: f64 },
    Diagonal,
}

/// Self-adjoint coercive operator in diagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    label: String,
    kind: OperatorKind,
}

impl SpectralOperator {
    /// Eigenvalues `(mπ/L)²`, eigenfunctions `√(2/L) sin(mπx/L)`, `m = 1..=modes`.
    pub fn dirichlet_laplacian_1d(length: f64, modes: usize) -> Result<Self, OperatorError> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(OperatorError::NonPositiveLength(length));
        }
        if modes == 0 {
            return Err(OperatorError::NoModes);
        }
        let eigenvalues = (1..=modes)
            .map(|m| {
                let w = m as f64 * PI / length;
                w * w
            })
            .collect();
        Ok(Self {
            eigenvalues,
            label: format!("dirichlet_1d(L={length}, M={modes})"),
            kind: OperatorKind::Dirichlet1d { length },
        })
    }

    /// User-supplied spectrum; sorted ascending.
    pub fn diagonal(mut eigenvalues: Vec<f64>) -> Result<Self, OperatorError> {
        if eigenvalues.is_empty() {
            return Err(OperatorError::NoModes);
        }
        if let Some((index, &value)) = eigenvalues
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(OperatorError::InvalidEigenvalue { index, value });
        }
        eigenvalues.sort_by(f64::total_cmp);
        let label = format!("diagonal({} modes)", eigenvalues.len());
        Ok(Self {
            eigenvalues,
            label,
            kind: OperatorKind::Diagonal,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Coercivity constant `C = λ₁`.
    pub fn coercivity(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Trapezoid projection of samples on the uniform grid
    /// `x_j = j·L/(n−1)`, `j = 0..n`, onto the sine eigenfunctions.
    pub fn project_function_1d(&self, samples: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let OperatorKind::Dirichlet1d { length } = self.kind else {
            return Err(OperatorError::NotDirichlet);
        };
        let modes = self.mode_count();
        let needed = 2 * modes + 1;
        if samples.len() < needed {
            return Err(OperatorError::InsufficientResolution {
                points: samples.len(),
                modes,
                needed,
            });
        }
        let n = samples.len();
        let h = length / (n - 1) as f64;
        let norm = (2.0 / length).sqrt();
        let coeffs = (1..=modes)
            .map(|m| {
                let k = m as f64 * PI / length;
                let sum: f64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| {
                        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                        w * f * (k * j as f64 * h).sin()
                    })
                    .sum();
                norm * h * sum
            })
            .collect();
        Ok(coeffs)
    }

    /// `‖A^{1/2}x‖² = Σ λₘ xₘ²`.
    pub fn h1_seminorm_sq(&self, coeffs: &[f64]) -> Result<f64, OperatorError> {
        self.check_len(coeffs.len())?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(coeffs)
            .map(|(l, c)| l * c * c)
            .sum())
    }

    pub(crate) fn check_len(&self, actual: usize) -> Result<(), OperatorError> {
        if actual == self.mode_count() {
            Ok(())
        } else {
            Err(OperatorError::LengthMismatch {
                expected: self.mode_count(),
                actual,
            })
        }
    }
}

/// Modal coefficients of `u(0)` and `u′(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
}

impl InitialData {
    pub fn new(op: &SpectralOperator, u0: Vec<f64>, v0: Vec<f64>) -> Result<Self, OperatorError> {
        op.check_len(u0.len())?;
        op.check_len(v0.len())?;
        Ok(Self { u0, v0 })
    }

    pub fn zeros(op: &SpectralOperator) -> Self {
        let n = op.mode_count();
        Self {
            u0: vec![0.0; n],
            v0: vec![0.0; n],
        }
    }

    /// `u₀ = e₁`, `u₁ = 0`.
    pub fn first_mode(op: &SpectralOperator) -> Self {
        let mut data = Self::zeros(op);
        data.u0[0] = 1.0;
        data
    }

    /// Equal share of `‖A^{1/2}u₀‖² = 1` on each of the first `k` modes, zero velocity.
    pub fn equipartition(op: &SpectralOperator, k: usize) -> Result<Self, OperatorError> {
        if k == 0 || k > op.mode_count() {
            return Err(OperatorError::PresetModes {
                name: format!("equipartition_{k}"),
                modes: op.mode_count(),
            });
        }
        let mut data = Self::zeros(op);
        for (c, l) in data.u0.iter_mut().zip(op.eigenvalues()).take(k) {
            *c = 1.0 / (k as f64 * l).sqrt();
        }
        Ok(data)
    }

    /// Seeded random displacement `u₀,ₘ ~ U(−1, 1)/m²`, zero velocity.
    ///
    /// Velocity is left at zero: for glassy kernels a nonzero `u₁` excites the
    /// stationary state `u ≡ const, k∗u = u`, whose energy tends to zero while
    /// the state does not, so the energy is only resolved down to roundoff.
    pub fn random(op: &SpectralOperator, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Self::zeros(op);
        for (m, c) in data.u0.iter_mut().enumerate() {
            let scale = ((m + 1) * (m + 1)) as f64;
            *c = rng.random_range(-1.0..1.0) / scale;
        }
        data
    }

    /// Named presets: `first_mode`, `equipartition_<k>`, `random`.
    pub fn preset(op: &SpectralOperator, name: &str, seed: u64) -> Result<Self, OperatorError> {
        match name {
            "first_mode" => Ok(Self::first_mode(op)),
            "random" => Ok(Self::random(op, seed)),
            _ => match name.strip_prefix("equipartition_").map(str::parse::<usize>) {
                Some(Ok(k)) => Self::equipartition(op, k),
                _ => Err(OperatorError::UnknownPreset(name.to_string())),
            },
        }
    }

    pub fn scaled_add(&self, a: f64, other: &Self) -> Self {
        let combine = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + q).collect();
        Self {
            u0: combine(&self.u0, &other.u0),
            v0: combine(&self.v0, &other.v0),
        }
    }
}

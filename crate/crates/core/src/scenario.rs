//! Scenario files: one TOML document describing kernel, operator, initial
//! data, time grid, check tolerances and output options.
//!
//! ```toml
//! [kernel]
//! terms = [{ b = 2.0, r = 2.0 }]
//! strictness = "glassy"
//!
//! [operator]
//! type = "diagonal"
//! eigenvalues = [1.0]
//!
//! [initial]
//! u0 = [1.0]
//! v0 = [0.0]
//!
//! [time]
//! final = 40.0
//! dt = 1e-3
//! ```
//!
//! Loading either yields a fully validated [`Scenario`] or every problem
//! found, never a partially valid run. Unknown keys are errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::decay::{theoretical_alpha, CheckSettings};
use crate::kernels::{KernelReport, PronyKernel, Strictness, DEFAULT_MASS_TOLERANCE};
use crate::operator::{InitialData, SpectralOperator};
use crate::simulator::TimeGrid;

/// Bundled scenarios as `(name, toml)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("maxwell_glassy", include_str!("../scenarios/maxwell_glassy.toml")),
    ("burger2", include_str!("../scenarios/burger2.toml")),
    ("wave_1d_multimode", include_str!("../scenarios/wave_1d_multimode.toml")),
    ("conservative", include_str!("../scenarios/conservative.toml")),
];

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("unknown preset '{name}' (available: {available})")]
    UnknownPreset { name: String, available: String },
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    kernel: RawKernel,
    operator: RawOperator,
    initial: RawInitial,
    time: RawTime,
    #[serde(default)]
    checks: RawChecks,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    b: f64,
    r: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(default)]
    terms: Vec<RawTerm>,
    strictness: Option<String>,
    #[serde(default)]
    normalize: bool,
    eta: Option<f64>,
    mass_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum RawOperator {
    #[serde(rename = "dirichlet_1d")]
    Dirichlet1d { length: f64, modes: usize },
    #[serde(rename = "diagonal")]
    Diagonal { eigenvalues: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    preset: Option<String>,
    seed: Option<u64>,
    u0: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(rename = "final")]
    final_time: f64,
    dt: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChecks {
    bound_tolerance: Option<f64>,
    komornik_tolerance: Option<f64>,
    truncation_cap: Option<f64>,
    fit_slack: Option<f64>,
    komornik_s: Option<Vec<f64>>,
    fit_window: Option<[f64; 2]>,
    monotonicity_tolerance: Option<f64>,
    rate_tolerance: Option<f64>,
    nonnegativity_tolerance: Option<f64>,
    lemma_tolerance: Option<f64>,
    lemma_points: Option<usize>,
    gap_tolerance: Option<f64>,
    direct_horizon: Option<f64>,
    rate_consistency_k: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    stride: Option<usize>,
}

/// Tolerances for every `verify` check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub decay: CheckSettings,
    /// `E(t_{j+1}) − E(t_j) ≤ tol·E(0)`.
    pub monotonicity_tolerance: f64,
    /// `E′ ≤ tol·E(0)·k(0)`.
    pub rate_tolerance: f64,
    /// Every energy component `≥ −tol·E(0)`.
    pub nonnegativity_tolerance: f64,
    pub lemma_tolerance: f64,
    /// Sub-grid size for the identity pairs.
    pub lemma_points: usize,
    pub gap_tolerance: f64,
    /// Horizon for direct-path runs; `None` uses the full grid.
    pub direct_horizon: Option<f64>,
    /// Centered differences of E must match `E′` within `K·dt²` relative.
    pub rate_consistency_k: f64,
    /// Overrides the theoretical decay constant.
    pub alpha: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            decay: CheckSettings::default(),
            monotonicity_tolerance: 1e-10,
            rate_tolerance: 1e-12,
            nonnegativity_tolerance: 1e-12,
            lemma_tolerance: 1e-5,
            lemma_points: 11,
            gap_tolerance: 1e-5,
            direct_horizon: None,
            rate_consistency_k: 10.0,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            stride: 1,
        }
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// As configured; may carry violations, see [`Scenario::kernel_report`].
    pub kernel: PronyKernel,
    pub mass_tolerance: f64,
    /// User-chosen η, already checked against the kernel.
    pub eta: Option<f64>,
    pub operator: SpectralOperator,
    pub initial: InitialData,
    pub grid: TimeGrid,
    pub checks: CheckConfig,
    pub output: OutputConfig,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let default_name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Self::parse(&text, default_name)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = preset_source(name).ok_or_else(|| ConfigError::UnknownPreset {
            name: name.to_string(),
            available: preset_names().join(", "),
        })?;
        Self::parse(text, name)
    }

    pub fn kernel_report(&self) -> KernelReport {
        self.kernel.validate(self.mass_tolerance)
    }

    /// Decay rate of the kernel: the configured η or the smallest rate.
    pub fn effective_eta(&self) -> Option<f64> {
        self.eta.or_else(|| self.kernel.extract_eta().ok())
    }

    /// Configured α, or the theoretical one for the kernel and operator.
    pub fn alpha(&self) -> Option<f64> {
        self.checks.alpha.or_else(|| {
            let eta = self.effective_eta()?;
            theoretical_alpha(self.kernel.k0(), self.operator.coercivity(), eta).ok()
        })
    }

    /// Whether the decay theorems cover this run.
    pub fn in_theorem_scope(&self) -> bool {
        self.kernel.strictness() == Strictness::Glassy && self.kernel_report().is_valid()
    }

    pub fn direct_grid(&self) -> TimeGrid {
        match self.checks.direct_horizon {
            Some(h) if h < self.grid.final_time() => TimeGrid::new(h, self.grid.dt()).unwrap_or(self.grid),
            _ => self.grid,
        }
    }

    pub fn parse(text: &str, default_name: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        let mut errors = Vec::new();

        let strictness = match raw.kernel.strictness.as_deref() {
            None => Strictness::Glassy,
            Some(s) => Strictness::from_str(s).unwrap_or_else(|e| {
                errors.push(format!("kernel.strictness: {e}"));
                Strictness::Glassy
            }),
        };
        let mass_tolerance = raw.kernel.mass_tolerance.unwrap_or(DEFAULT_MASS_TOLERANCE);
        if !(mass_tolerance > 0.0 && mass_tolerance.is_finite()) {
            errors.push(format!("kernel.mass_tolerance must be positive, got {mass_tolerance}"));
        }
        let kernel = match PronyKernel::new(raw.kernel.terms.iter().map(|t| (t.b, t.r)), strictness) {
            Ok(k) if raw.kernel.normalize => match k.normalized() {
                Ok(n) => Some(n),
                Err(e) => {
                    errors.push(format!("kernel.normalize: {e}"));
                    None
                }
            },
            Ok(k) => Some(k),
            Err(e) => {
                errors.push(format!("kernel.terms: {e}"));
                None
            }
        };
        let eta = match (&kernel, raw.kernel.eta) {
            (Some(k), Some(eta)) => match k.admissible_eta(eta) {
                Ok(e) => Some(e),
                Err(e) => {
                    errors.push(format!("kernel.eta: {e}"));
                    None
                }
            },
            _ => None,
        };

        let operator = match raw.operator {
            RawOperator::Dirichlet1d { length, modes } => SpectralOperator::dirichlet_laplacian_1d(length, modes),
            RawOperator::Diagonal { eigenvalues } => SpectralOperator::diagonal(eigenvalues),
        }
        .map_err(|e| errors.push(format!("operator: {e}")))
        .ok();

        let initial = operator.as_ref().and_then(|op| {
            let r = raw.initial;
            let result = match (r.preset, r.u0, r.v0) {
                (Some(name), None, None) => InitialData::preset(op, &name, r.seed.unwrap_or(0)),
                (None, Some(u0), v0) => {
                    if r.seed.is_some() {
                        errors.push("initial.seed only applies to presets".to_string());
                    }
                    let v0 = v0.unwrap_or_else(|| vec![0.0; u0.len()]);
                    if u0.iter().chain(&v0).any(|x| !x.is_finite()) {
                        errors.push("initial: coefficients must be finite".to_string());
                    }
                    InitialData::new(op, u0, v0)
                }
                (Some(_), _, _) => {
                    errors.push("initial: give either preset or u0/v0, not both".to_string());
                    return None;
                }
                (None, None, _) => {
                    errors.push("initial: needs preset or u0".to_string());
                    return None;
                }
            };
            result.map_err(|e| errors.push(format!("initial: {e}"))).ok()
        });

        let grid = TimeGrid::new(raw.time.final_time, raw.time.dt)
            .map_err(|e| errors.push(format!("time: {e}")))
            .ok();

        let checks = build_checks(raw.checks, &mut errors);
        if let Some(k) = &kernel {
            if k.is_empty() && checks.alpha.is_none() {
                errors.push("checks.alpha is required when the kernel has no terms".to_string());
            }
        }
        if let (Some(grid), Some(h)) = (grid, checks.direct_horizon) {
            if h < grid.dt() {
                errors.push(format!("checks.direct_horizon {h} is shorter than one step"));
            }
        }

        let output = OutputConfig {
            dir: raw.output.dir.unwrap_or_else(|| OutputConfig::default().dir),
            stride: raw.output.stride.unwrap_or(1),
        };
        if output.stride == 0 {
            errors.push("output.stride must be at least 1".to_string());
        }

        match (kernel, operator, initial, grid) {
            (Some(kernel), Some(operator), Some(initial), Some(grid)) if errors.is_empty() => Ok(Self {
                name: raw.name.unwrap_or_else(|| default_name.to_string()),
                kernel,
                mass_tolerance,
                eta,
                operator,
                initial,
                grid,
                checks,
                output,
            }),
            _ => Err(ConfigError::Invalid(errors)),
        }
    }
}

fn build_checks(raw: RawChecks, errors: &mut Vec<String>) -> CheckConfig {
    let defaults = CheckConfig::default();
    let mut positive = |name: &str, value: Option<f64>, default: f64| match value {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => {
            errors.push(format!("checks.{name} must be positive, got {v}"));
            default
        }
        None => default,
    };
    let decay = CheckSettings {
        bound_tolerance: positive("bound_tolerance", raw.bound_tolerance, defaults.decay.bound_tolerance),
        komornik_tolerance: positive("komornik_tolerance", raw.komornik_tolerance, defaults.decay.komornik_tolerance),
        truncation_cap: positive("truncation_cap", raw.truncation_cap, defaults.decay.truncation_cap),
        fit_slack: positive("fit_slack", raw.fit_slack, defaults.decay.fit_slack),
        komornik_s: raw.komornik_s,
        fit_window: raw.fit_window.map(|[a, b]| (a, b)),
    };
    let config = CheckConfig {
        monotonicity_tolerance: positive(
            "monotonicity_tolerance",
            raw.monotonicity_tolerance,
            defaults.monotonicity_tolerance,
        ),
        rate_tolerance: positive("rate_tolerance", raw.rate_tolerance, defaults.rate_tolerance),
        nonnegativity_tolerance: positive(
            "nonnegativity_tolerance",
            raw.nonnegativity_tolerance,
            defaults.nonnegativity_tolerance,
        ),
        lemma_tolerance: positive("lemma_tolerance", raw.lemma_tolerance, defaults.lemma_tolerance),
        lemma_points: raw.lemma_points.unwrap_or(defaults.lemma_points),
        gap_tolerance: positive("gap_tolerance", raw.gap_tolerance, defaults.gap_tolerance),
        direct_horizon: raw.direct_horizon.map(|h| positive("direct_horizon", Some(h), 1.0)),
        rate_consistency_k: positive("rate_consistency_k", raw.rate_consistency_k, defaults.rate_consistency_k),
        alpha: raw.alpha.map(|a| positive("alpha", Some(a), 1.0)),
        decay,
    };
    if config.lemma_points < 2 {
        errors.push(format!("checks.lemma_points must be at least 2, got {}", config.lemma_points));
    }
    if let Some((a, b)) = config.decay.fit_window {
        if !(a < b) {
            errors.push(format!("checks.fit_window [{a}, {b}] must be increasing"));
        }
    }
    config
}

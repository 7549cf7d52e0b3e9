//! Memory kernels.
//!
//! The fast path works with Prony sums `k(t) = Σ bᵢ e^{−rᵢ t}`, for which every
//! quantity the decay estimates need (k(0), η, total mass, tail mass) is
//! available in closed form. A sampled kernel ([`TabulatedKernel`]) is also
//! accepted by the history-quadrature simulator; it is checked on grid points
//! only.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default tolerance on `|Σ bᵢ/rᵢ − 1|` for kernels declared glassy.
pub const DEFAULT_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("kernel has no terms, eta is undefined")]
    Empty,
    #[error("non-finite kernel term (b = {weight}, r = {rate})")]
    NonFinite { weight: f64, rate: f64 },
    #[error("eta = {eta} must lie in (0, {max}] (the smallest decay rate)")]
    InvalidEta { eta: f64, max: f64 },
    #[error("cannot normalize a kernel with mass {0}")]
    Unnormalizable(f64),
    #[error("tabulated kernel: {0}")]
    Table(String),
}

/// How strictly the total mass `∫₀^∞ k` is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strictness {
    /// `Σ bᵢ/rᵢ = 1` up to the mass tolerance.
    Glassy,
    /// `Σ bᵢ/rᵢ < 1`, the classical dissipative setting.
    Subcritical,
    /// No mass constraint beyond the global `mass ≤ 1` rejection. May be empty.
    Raw,
}

impl Strictness {
    pub fn as_str(self) -> &'static str {
        match self {
            Strictness::Glassy => "glassy",
            Strictness::Subcritical => "subcritical",
            Strictness::Raw => "raw",
        }
    }
}

impl fmt::Display for Strictness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strictness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "glassy" => Ok(Strictness::Glassy),
            "subcritical" => Ok(Strictness::Subcritical),
            "raw" => Ok(Strictness::Raw),
            other => Err(format!(
                "unknown strictness {other:?} (expected glassy, subcritical or raw)"
            )),
        }
    }
}

/// One exponential `b e^{−r t}` of a Prony sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PronyTerm {
    pub weight: f64,
    pub rate: f64,
}

impl PronyTerm {
    #[inline]
    fn value(&self, t: f64) -> f64 {
        self.weight * (-self.rate * t).exp()
    }

    /// `∫₀ᵗ b e^{−r s} ds = (b/r)(1 − e^{−r t})`.
    #[inline]
    pub fn accumulated_mass(&self, t: f64) -> f64 {
        self.weight / self.rate * -(-self.rate * t).exp_m1()
    }
}

/// Finite exponential sum `k(t) = Σ bᵢ e^{−rᵢ t}`.
///
/// Terms sharing the same rate are merged at construction, so the rates of a
/// kernel are pairwise distinct. Signs are not checked here; [`validate`]
/// reports nonpositive weights or rates as violations.
///
/// [`validate`]: PronyKernel::validate
#[derive(Debug, Clone, PartialEq)]
pub struct PronyKernel {
    terms: Vec<PronyTerm>,
    strictness: Strictness,
}

impl PronyKernel {
    /// Builds a kernel from `(b, r)` pairs.
    pub fn new<I>(terms: I, strictness: Strictness) -> Result<Self, KernelError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut merged: Vec<PronyTerm> = Vec::new();
        for (weight, rate) in terms {
            if !weight.is_finite() || !rate.is_finite() {
                return Err(KernelError::NonFinite { weight, rate });
            }
            match merged.iter_mut().find(|t| t.rate == rate) {
                Some(existing) => existing.weight += weight,
                None => merged.push(PronyTerm { weight, rate }),
            }
        }
        Ok(Self {
            terms: merged,
            strictness,
        })
    }

    /// Single-term Maxwell kernel `b e^{−r t}`, glassy iff `b = r`.
    pub fn maxwell(weight: f64, rate: f64) -> Result<Self, KernelError> {
        let strictness = if weight == rate {
            Strictness::Glassy
        } else if weight < rate {
            Strictness::Subcritical
        } else {
            Strictness::Raw
        };
        Self::new([(weight, rate)], strictness)
    }

    /// `k ≡ 0`, the conservative limit.
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            strictness: Strictness::Raw,
        }
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn strictness(&self) -> Strictness {
        self.strictness
    }

    pub fn with_strictness(mut self, strictness: Strictness) -> Self {
        self.strictness = strictness;
        self
    }

    /// `k(0) = Σ bᵢ`.
    pub fn k0(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn eval(&self, t: f64) -> Result<f64, KernelError> {
        check_time(t)?;
        Ok(self.value_at(t))
    }

    pub fn eval_derivative(&self, t: f64) -> Result<f64, KernelError> {
        check_time(t)?;
        Ok(self.derivative_at(t))
    }

    /// `∫₀^∞ k = Σ bᵢ/rᵢ`. Zero for the empty kernel.
    pub fn mass(&self) -> f64 {
        self.terms.iter().map(|t| t.weight / t.rate).sum()
    }

    /// `∫ₜ^∞ k = Σ (bᵢ/rᵢ) e^{−rᵢ t}`.
    pub fn tail_mass(&self, t: f64) -> Result<f64, KernelError> {
        check_time(t)?;
        Ok(self.tail_at(t))
    }

    /// `∫₀ᵗ k = Σ (bᵢ/rᵢ)(1 − e^{−rᵢ t})`, summed term by term without
    /// subtracting from the mass.
    pub fn accumulated_mass(&self, t: f64) -> Result<f64, KernelError> {
        check_time(t)?;
        Ok(self.terms.iter().map(|term| term.accumulated_mass(t)).sum())
    }

    /// Largest η with `k′ ≤ −η k` for all t, which for a Prony sum is the
    /// smallest rate: `k′ + ηk = Σ bᵢ(η − rᵢ)e^{−rᵢt}`.
    pub fn extract_eta(&self) -> Result<f64, KernelError> {
        self.terms
            .iter()
            .map(|t| t.rate)
            .reduce(f64::min)
            .ok_or(KernelError::Empty)
    }

    /// Accepts a user-chosen η if it does not exceed the maximal one.
    pub fn admissible_eta(&self, eta: f64) -> Result<f64, KernelError> {
        let max = self.extract_eta()?;
        if eta > 0.0 && eta <= max {
            Ok(eta)
        } else {
            Err(KernelError::InvalidEta { eta, max })
        }
    }

    /// Rescales every weight by `1/mass` so that the kernel becomes glassy.
    pub fn normalized(&self) -> Result<Self, KernelError> {
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(KernelError::Unnormalizable(mass));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| PronyTerm {
                weight: t.weight / mass,
                rate: t.rate,
            })
            .collect();
        Ok(Self {
            terms,
            strictness: Strictness::Glassy,
        })
    }

    pub fn validate(&self, mass_tolerance: f64) -> KernelReport {
        let mut violations = Vec::new();
        if !(mass_tolerance > 0.0) {
            violations.push(Violation::InvalidTolerance(mass_tolerance));
        }
        if self.terms.is_empty() && self.strictness != Strictness::Raw {
            violations.push(Violation::EmptyKernel);
        }
        for (index, term) in self.terms.iter().enumerate() {
            if !(term.weight > 0.0) {
                violations.push(Violation::NonPositiveWeight {
                    index,
                    value: term.weight,
                });
            }
            if !(term.rate > 0.0) {
                violations.push(Violation::NonPositiveRate {
                    index,
                    value: term.rate,
                });
            }
        }
        let mass = self.mass();
        let is_glassy = (mass - 1.0).abs() <= mass_tolerance;
        match self.strictness {
            Strictness::Glassy if !is_glassy => violations.push(Violation::MassNotUnit(mass)),
            Strictness::Subcritical if mass >= 1.0 => {
                violations.push(Violation::MassNotSubcritical(mass))
            }
            _ => {}
        }
        if mass > 1.0 + mass_tolerance {
            violations.push(Violation::MassExceedsOne(mass));
        }
        KernelReport {
            strictness: self.strictness,
            term_count: self.terms.len(),
            mass,
            k0: self.k0(),
            eta: self.extract_eta().ok(),
            is_glassy,
            violations,
        }
    }

    #[inline]
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.value(t)).sum()
    }

    #[inline]
    pub(crate) fn derivative_at(&self, t: f64) -> f64 {
        -self
            .terms
            .iter()
            .map(|term| term.rate * term.value(t))
            .sum::<f64>()
    }

    #[inline]
    pub(crate) fn tail_at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.weight / term.rate * (-term.rate * t).exp())
            .sum()
    }
}

fn check_time(t: f64) -> Result<(), KernelError> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(KernelError::NegativeTime(t))
    }
}

/// A failed kernel assumption. Violations are data: [`PronyKernel::validate`]
/// collects all of them rather than stopping at the first.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveWeight { index: usize, value: f64 },
    NonPositiveRate { index: usize, value: f64 },
    EmptyKernel,
    MassNotUnit(f64),
    MassNotSubcritical(f64),
    MassExceedsOne(f64),
    InvalidTolerance(f64),
    /// Tabulated kernels only.
    NotMonotone { index: usize },
    NegativeValue { index: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveWeight { index, value } => {
                write!(f, "term {} has weight b = {value} ≤ 0", index + 1)
            }
            Violation::NonPositiveRate { index, value } => {
                write!(f, "term {} has rate r = {value} ≤ 0", index + 1)
            }
            Violation::EmptyKernel => f.write_str("kernel has no terms (only raw kernels may be empty)"),
            Violation::MassNotUnit(m) => write!(f, "mass {m} ≠ 1"),
            Violation::MassNotSubcritical(m) => write!(f, "mass {m} ≥ 1 for a subcritical kernel"),
            Violation::MassExceedsOne(m) => write!(f, "mass {m} > 1"),
            Violation::InvalidTolerance(tol) => write!(f, "mass tolerance {tol} must be positive"),
            Violation::NotMonotone { index } => {
                write!(f, "sample {index} increases (k must be nonincreasing)")
            }
            Violation::NegativeValue { index, value } => {
                write!(f, "sample {index} is negative ({value})")
            }
        }
    }
}

/// Kernel-level quantities consumed by the decay estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub strictness: Strictness,
    pub term_count: usize,
    pub mass: f64,
    pub k0: f64,
    /// `None` for the empty kernel.
    pub eta: Option<f64>,
    pub is_glassy: bool,
    pub violations: Vec<Violation>,
}

impl KernelReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Machine-readable `key=value` lines, one per field and one per violation.
    pub fn key_values(&self) -> String {
        let mut out = String::new();
        let eta = self
            .eta
            .map(|e| format!("{e:.16e}"))
            .unwrap_or_else(|| "undefined".to_string());
        out.push_str(&format!("strictness={}\n", self.strictness));
        out.push_str(&format!("terms={}\n", self.term_count));
        out.push_str(&format!("mass={:.16e}\n", self.mass));
        out.push_str(&format!("k0={:.16e}\n", self.k0));
        out.push_str(&format!("eta={eta}\n"));
        out.push_str(&format!("is_glassy={}\n", self.is_glassy));
        out.push_str(&format!("violations={}\n", self.violations.len()));
        for (i, v) in self.violations.iter().enumerate() {
            out.push_str(&format!("violation.{}={v}\n", i + 1));
        }
        out
    }
}

impl fmt::Display for KernelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel: terms {}, declared {}", self.term_count, self.strictness)?;
        writeln!(f, "  mass  ∫k = {}", self.mass)?;
        writeln!(f, "  k(0)     = {}", self.k0)?;
        match self.eta {
            Some(eta) => writeln!(f, "  eta      = {eta}")?,
            None => writeln!(f, "  eta      = undefined (empty kernel)")?,
        }
        writeln!(f, "  glassy   = {}", if self.is_glassy { "yes" } else { "no" })?;
        if self.violations.is_empty() {
            writeln!(f, "  no violations")
        } else {
            writeln!(f, "  {} violation(s):", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "    - {v}")?;
            }
            Ok(())
        }
    }
}

/// Anything the history-quadrature paths can integrate against.
pub trait MemoryKernel: Send + Sync {
    fn value(&self, t: f64) -> f64;

    fn derivative(&self, t: f64) -> f64;

    /// Weight of `½‖A^{1/2}u‖²` in the energy at time t.
    fn elastic_weight(&self, t: f64) -> f64;

    /// Largest time at which the kernel is known, if bounded.
    fn horizon(&self) -> Option<f64> {
        None
    }

    /// Assumption checks at the default mass tolerance.
    fn report(&self) -> KernelReport;
}

impl MemoryKernel for PronyKernel {
    fn value(&self, t: f64) -> f64 {
        self.value_at(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        self.derivative_at(t)
    }

    /// Glassy kernels use the tail form `∫ₜ^∞ k`; everything else uses
    /// `1 − ∫₀ᵗ k`, which is the only meaningful choice when the mass is not 1
    /// (and gives weight 1 for `k ≡ 0`).
    fn elastic_weight(&self, t: f64) -> f64 {
        match self.strictness {
            Strictness::Glassy => self.tail_at(t),
            Strictness::Subcritical | Strictness::Raw => {
                1.0 - self
                    .terms
                    .iter()
                    .map(|term| term.accumulated_mass(t))
                    .sum::<f64>()
            }
        }
    }

    fn report(&self) -> KernelReport {
        self.validate(DEFAULT_MASS_TOLERANCE)
    }
}

/// Kernel sampled on a uniform grid `t_j = j·step`, linearly interpolated in
/// between. Past the last sample the final value is held.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    step: f64,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedKernel {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self, KernelError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(KernelError::Table(format!("step must be positive, got {step}")));
        }
        if values.len() < 2 {
            return Err(KernelError::Table("need at least two samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::Table("non-finite sample".into()));
        }
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for pair in values.windows(2) {
            acc += 0.5 * step * (pair[0] + pair[1]);
            cumulative.push(acc);
        }
        Ok(Self {
            step,
            values,
            cumulative,
        })
    }

    /// Samples `f` at `count` grid points.
    pub fn from_fn(step: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self, KernelError> {
        Self::new(step, (0..count).map(|j| f(j as f64 * step)).collect())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let last = self.values.len() - 1;
        let x = (t / self.step).max(0.0);
        let i = (x.floor() as usize).min(last - 1);
        (i, (x - i as f64).min(1.0))
    }

    /// Grid version of the Prony checks: k(0) > 0, samples nonnegative and
    /// nonincreasing, trapezoid mass ≤ 1. η is the smallest log-slope
    /// `(ln k_j − ln k_{j+1})/step` and is undefined if any sample is zero.
    pub fn validate(&self, mass_tolerance: f64) -> KernelReport {
        let mut violations = Vec::new();
        if !(mass_tolerance > 0.0) {
            violations.push(Violation::InvalidTolerance(mass_tolerance));
        }
        for (index, &value) in self.values.iter().enumerate() {
            if value < 0.0 {
                violations.push(Violation::NegativeValue { index, value });
            }
        }
        if !(self.values[0] > 0.0) {
            violations.push(Violation::NonPositiveWeight {
                index: 0,
                value: self.values[0],
            });
        }
        for (index, pair) in self.values.windows(2).enumerate() {
            if pair[1] > pair[0] {
                violations.push(Violation::NotMonotone { index: index + 1 });
            }
        }
        let mass = *self.cumulative.last().expect("at least two samples");
        if mass > 1.0 + mass_tolerance {
            violations.push(Violation::MassExceedsOne(mass));
        }
        let eta = if self.values.iter().all(|&v| v > 0.0) {
            self.values
                .windows(2)
                .map(|p| (p[0].ln() - p[1].ln()) / self.step)
                .reduce(f64::min)
                .filter(|&e| e > 0.0)
        } else {
            None
        };
        KernelReport {
            strictness: Strictness::Raw,
            term_count: self.values.len(),
            mass,
            k0: self.values[0],
            eta,
            is_glassy: (mass - 1.0).abs() <= mass_tolerance,
            violations,
        }
    }
}

impl MemoryKernel for TabulatedKernel {
    fn value(&self, t: f64) -> f64 {
        let (i, frac) = self.locate(t);
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    fn derivative(&self, t: f64) -> f64 {
        let (i, _) = self.locate(t);
        (self.values[i + 1] - self.values[i]) / self.step
    }

    fn elastic_weight(&self, t: f64) -> f64 {
        let (i, frac) = self.locate(t);
        let partial = frac * self.step;
        let k_at = self.values[i] + frac * (self.values[i + 1] - self.values[i]);
        let integral = if t / self.step > (self.values.len() - 1) as f64 {
            let end = (self.values.len() - 1) as f64 * self.step;
            self.cumulative[self.values.len() - 1] + (t - end) * self.values[self.values.len() - 1]
        } else {
            self.cumulative[i] + 0.5 * partial * (self.values[i] + k_at)
        };
        1.0 - integral
    }

    fn horizon(&self) -> Option<f64> {
        Some((self.values.len() - 1) as f64 * self.step)
    }

    fn report(&self) -> KernelReport {
        self.validate(DEFAULT_MASS_TOLERANCE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maxwell() -> PronyKernel {
        PronyKernel::new([(2.0, 2.0)], Strictness::Glassy).unwrap()
    }

    fn burger() -> PronyKernel {
        PronyKernel::new([(0.5, 1.0), (1.5, 3.0)], Strictness::Glassy).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(maxwell().eval(0.0).unwrap(), 2.0);
        assert_eq!(burger().eval(0.0).unwrap(), 2.0);
        // 2e^{-2} to 16 digits
        let v = maxwell().eval(1.0).unwrap();
        assert!((v - 0.270_670_566_473_225_4).abs() < 1e-16);
        assert!(matches!(maxwell().eval(-1e-3), Err(KernelError::NegativeTime(_))));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(maxwell().eval_derivative(0.0).unwrap(), -4.0);
        assert_eq!(burger().eval_derivative(0.0).unwrap(), -5.0);
        let k = maxwell();
        for &t in &[0.0, 0.3, 1.7, 12.0] {
            assert_eq!(k.eval_derivative(t).unwrap(), -2.0 * k.eval(t).unwrap());
        }
        assert!(k.eval_derivative(-1.0).is_err());
    }

    #[test]
    fn mass_examples() {
        assert_eq!(maxwell().mass(), 1.0);
        assert_eq!(burger().mass(), 1.0);
        assert_eq!(PronyKernel::maxwell(1.0, 2.0).unwrap().mass(), 0.5);
        assert_eq!(PronyKernel::zero().mass(), 0.0);
    }

    #[test]
    fn tail_mass_examples() {
        assert_eq!(maxwell().tail_mass(0.0).unwrap(), 1.0);
        let v = maxwell().tail_mass(1.0).unwrap();
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-16);
        assert!(burger().tail_mass(800.0).unwrap() < 1e-300);
        assert!(burger().tail_mass(-0.5).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(maxwell().extract_eta().unwrap(), 2.0);
        assert_eq!(burger().extract_eta().unwrap(), 1.0);
        assert_eq!(PronyKernel::zero().extract_eta(), Err(KernelError::Empty));
        let k = burger();
        for j in 0..=200 {
            let t = j as f64 * 0.1;
            assert!(k.eval_derivative(t).unwrap() + k.eval(t).unwrap() <= 0.0);
        }
    }

    #[test]
    fn user_eta_must_not_exceed_min_rate() {
        let k = burger();
        assert_eq!(k.admissible_eta(0.5).unwrap(), 0.5);
        assert_eq!(k.admissible_eta(1.0).unwrap(), 1.0);
        assert!(k.admissible_eta(1.5).is_err());
        assert!(k.admissible_eta(0.0).is_err());
    }

    #[test]
    fn validate_examples() {
        let report = maxwell().validate(1e-12);
        assert!(report.is_glassy);
        assert_eq!(report.eta, Some(2.0));
        assert_eq!(report.k0, 2.0);
        assert!(report.violations.is_empty());

        let report = PronyKernel::new([(1.0, 2.0)], Strictness::Glassy)
            .unwrap()
            .validate(1e-12);
        assert_eq!(report.violations, vec![Violation::MassNotUnit(0.5)]);
        assert_eq!(report.violations[0].to_string(), "mass 0.5 ≠ 1");

        for strictness in [Strictness::Glassy, Strictness::Subcritical, Strictness::Raw] {
            let report = PronyKernel::new([(3.0, 2.0)], strictness)
                .unwrap()
                .validate(1e-12);
            assert!(report.violations.contains(&Violation::MassExceedsOne(1.5)));
            assert!(report.violations.iter().any(|v| v.to_string() == "mass 1.5 > 1"));
        }
    }

    #[test]
    fn validate_flags_signs_and_subcritical_mislabels() {
        let report = PronyKernel::new([(-1.0, 2.0), (1.0, 0.0)], Strictness::Raw)
            .unwrap()
            .validate(1e-9);
        assert!(matches!(report.violations[0], Violation::NonPositiveWeight { index: 0, .. }));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonPositiveRate { index: 1, .. })));

        let report = maxwell().with_strictness(Strictness::Subcritical).validate(1e-9);
        assert_eq!(report.violations, vec![Violation::MassNotSubcritical(1.0)]);

        let report = PronyKernel::zero().validate(1e-9);
        assert!(report.is_valid());
        assert_eq!(report.eta, None);

        let report = PronyKernel::new([], Strictness::Glassy).unwrap().validate(1e-9);
        assert!(report.violations.contains(&Violation::EmptyKernel));
    }

    #[test]
    fn duplicate_rates_are_merged() {
        let k = PronyKernel::new([(0.5, 2.0), (1.0, 1.0), (1.5, 2.0)], Strictness::Glassy).unwrap();
        assert_eq!(k.len(), 2);
        assert_eq!(k.terms()[0], PronyTerm { weight: 2.0, rate: 2.0 });
        assert_eq!(k.terms()[1], PronyTerm { weight: 1.0, rate: 1.0 });
    }

    #[test]
    fn normalize_forces_unit_mass() {
        let k = PronyKernel::new([(1.0, 4.0), (1.0, 2.0)], Strictness::Raw)
            .unwrap()
            .normalized()
            .unwrap();
        assert_eq!(k.strictness(), Strictness::Glassy);
        assert!((k.mass() - 1.0).abs() < 1e-15);
        assert!(PronyKernel::zero().normalized().is_err());
    }

    #[test]
    fn non_finite_terms_rejected() {
        assert!(PronyKernel::new([(f64::NAN, 1.0)], Strictness::Raw).is_err());
        assert!(PronyKernel::new([(1.0, f64::INFINITY)], Strictness::Raw).is_err());
    }

    #[test]
    fn tail_mass_derivative_is_minus_k() {
        let k = burger();
        let h = 1e-4;
        for &t in &[0.5, 1.0, 3.0, 7.5] {
            let fd = (k.tail_mass(t + h).unwrap() - k.tail_mass(t - h).unwrap()) / (2.0 * h);
            assert!((fd + k.eval(t).unwrap()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn elastic_weight_forms() {
        assert_eq!(PronyKernel::zero().elastic_weight(3.0), 1.0);
        let k = maxwell();
        assert_eq!(k.elastic_weight(1.0), k.tail_mass(1.0).unwrap());
        let sub = PronyKernel::maxwell(1.0, 2.0).unwrap();
        let expected = 1.0 - 0.5 * (1.0 - (-2.0f64).exp());
        assert!((sub.elastic_weight(1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn tabulated_matches_prony_on_grid() {
        let prony = maxwell();
        let table = TabulatedKernel::from_fn(1e-3, 20_001, |t| prony.value_at(t)).unwrap();
        for &t in &[0.0, 0.25, 1.0, 19.999] {
            assert!((table.value(t) - prony.value_at(t)).abs() < 1e-6);
            assert!((table.elastic_weight(t) - prony.elastic_weight(t)).abs() < 1e-6);
        }
        let report = table.validate(1e-6);
        assert!(report.is_valid(), "{report}");
        assert!((report.eta.unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(table.horizon(), Some(20.0));
    }

    #[test]
    fn tabulated_validation_catches_growth() {
        let table = TabulatedKernel::new(0.1, vec![1.0, 1.2, 0.5, -0.1]).unwrap();
        let report = table.validate(1e-9);
        assert!(report.violations.contains(&Violation::NotMonotone { index: 1 }));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeValue { index: 3, .. })));
        assert!(TabulatedKernel::new(0.0, vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn key_value_block() {
        let kv = maxwell().validate(1e-9).key_values();
        assert!(kv.contains("is_glassy=true\n"));
        assert!(kv.contains("violations=0\n"));
        let kv = PronyKernel::zero().validate(1e-9).key_values();
        assert!(kv.contains("eta=undefined\n"));
    }
}

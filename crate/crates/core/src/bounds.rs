//! Gaussian tails and the explicit ratio bounds for `P(X_n > x) / (1 - Φ(x))`.
//!
//! All evaluators are pure. Range conditions are reported through validity
//! flags on [`BoundEnvelope`] instead of errors so that sweeps can show where
//! the theory applies.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `1 - Φ(x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `Φ(x)`.
pub fn gaussian_cdf(x: f64) -> f64 {
    gaussian_tail(-x)
}

/// `ln(1 - Φ(x))`, accurate far into the upper tail where the tail underflows.
pub fn log_gaussian_tail(x: f64) -> f64 {
    if x < 30.0 {
        return gaussian_tail(x).ln();
    }
    // Mills ratio by its continued fraction 1/(x+1/(x+2/(x+3/(x+...))))
    let mut frac = x;
    for k in (1..=60).rev() {
        frac = x + k as f64 / frac;
    }
    -0.5 * x * x - LN_SQRT_2PI - frac.ln()
}

/// The closed-form brackets `e^{-x²/2}/(√(2π)(1+x)) <= 1-Φ(x) <= e^{-x²/2}/(√π(1+x))`.
pub fn mills_bounds(x: f64) -> (f64, f64) {
    let g = (-0.5 * x * x).exp() / (1.0 + x);
    let pi = std::f64::consts::PI;
    (g / (2.0 * pi).sqrt(), g / pi.sqrt())
}

/// `ε |ln ε|`, zero at `ε = 0`.
pub fn eps_log_eps(epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        0.0
    } else {
        epsilon * epsilon.ln().abs()
    }
}

/// `x³ε + x²δ² + (1+x)(ε|ln ε| + δ)`, the shape of the two-sided log-ratio bound.
pub fn log_ratio_expression(x: f64, epsilon: f64, delta: f64) -> f64 {
    x.powi(3) * epsilon + x * x * delta * delta + (1.0 + x) * (eps_log_eps(epsilon) + delta)
}

/// Logarithm of the upper ratio bound.
pub fn theorem1_log_upper(x: f64, epsilon: f64, delta: f64, c_alpha: f64) -> f64 {
    c_alpha * (x.powi(3) * epsilon + x * x * delta * delta)
        + (c_alpha * (1.0 + x) * (eps_log_eps(epsilon) + delta)).ln_1p()
}

/// `exp{c(x³ε + x²δ²)} (1 + c(1+x)(ε|ln ε| + δ))`.
pub fn theorem1_upper(x: f64, epsilon: f64, delta: f64, c_alpha: f64) -> f64 {
    theorem1_log_upper(x, epsilon, delta, c_alpha).exp()
}

/// Logarithm of the lower ratio bound.
pub fn theorem2_log_lower(x: f64, epsilon: f64, delta: f64, c_alpha0: f64) -> f64 {
    -c_alpha0 * log_ratio_expression(x, epsilon, delta)
}

/// `exp{-c(x³ε + x²δ² + (1+x)(ε|ln ε| + δ))}`.
pub fn theorem2_lower(x: f64, epsilon: f64, delta: f64, c_alpha0: f64) -> f64 {
    theorem2_log_lower(x, epsilon, delta, c_alpha0).exp()
}

/// Validity flag and an explanation when the flag is false.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeCheck {
    pub valid: bool,
    pub note: String,
}

impl RangeCheck {
    fn ok() -> Self {
        RangeCheck { valid: true, note: String::new() }
    }

    fn fail(note: String) -> Self {
        RangeCheck { valid: false, note }
    }

    fn and(self, other: RangeCheck) -> Self {
        match (self.valid, other.valid) {
            (true, _) => other,
            (false, true) => self,
            (false, false) => RangeCheck::fail(format!("{}; {}", self.note, other.note)),
        }
    }
}

/// `0 <= x <= α/ε` with `α ∈ (0, 1)`.
pub fn theorem1_range(x: f64, epsilon: f64, alpha: f64) -> RangeCheck {
    if !(alpha > 0.0 && alpha < 1.0) {
        return RangeCheck::fail(format!("alpha = {alpha} outside (0, 1)"));
    }
    if x < 0.0 {
        return RangeCheck::fail(format!("x = {x} < 0"));
    }
    if x > alpha / epsilon {
        return RangeCheck::fail(format!("x = {x} > alpha/epsilon = {}", alpha / epsilon));
    }
    RangeCheck::ok()
}

/// `0 <= x <= α₀/ε` and `δ <= α₀`.
pub fn theorem2_range(x: f64, epsilon: f64, delta: f64, alpha0: f64) -> RangeCheck {
    let mut check = if x < 0.0 {
        RangeCheck::fail(format!("x = {x} < 0"))
    } else if x > alpha0 / epsilon {
        RangeCheck::fail(format!("x = {x} > alpha0/epsilon = {}", alpha0 / epsilon))
    } else {
        RangeCheck::ok()
    };
    if delta > alpha0 {
        check = check.and(RangeCheck::fail(format!("delta = {delta} > alpha0 = {alpha0}")));
    }
    check
}

/// `0 <= x <= α₀ min{(ε|ln ε|)^{-1}, δ^{-1}}`.
pub fn corollary1_range(x: f64, epsilon: f64, delta: f64, alpha0: f64) -> RangeCheck {
    let a = 1.0 / eps_log_eps(epsilon);
    let b = if delta > 0.0 { 1.0 / delta } else { f64::INFINITY };
    let top = alpha0 * a.min(b);
    if x < 0.0 {
        RangeCheck::fail(format!("x = {x} < 0"))
    } else if x > top {
        RangeCheck::fail(format!("x = {x} > alpha0 min(1/(eps|ln eps|), 1/delta) = {top}"))
    } else {
        RangeCheck::ok()
    }
}

/// Constants used by the envelope evaluators. None of them is fixed by the
/// theory; the defaults are artifact choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_alpha: f64,
    pub alpha: f64,
    pub c_alpha0: f64,
    pub alpha0: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants { c_alpha: 1.0, alpha: 0.9, c_alpha0: 1.0, alpha0: 0.1 }
    }
}

/// Lower/upper bounds on `P(X_n > x)/(1 - Φ(x))` at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEnvelope {
    pub x: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub valid: bool,
    pub range_note: String,
}

/// Combined upper/lower envelope at `x`.
pub fn theorem_envelope(x: f64, epsilon: f64, delta: f64, consts: &BoundConstants) -> BoundEnvelope {
    let range = theorem1_range(x, epsilon, consts.alpha).and(theorem2_range(x, epsilon, delta, consts.alpha0));
    BoundEnvelope {
        x,
        lower_ratio: theorem2_lower(x, epsilon, delta, consts.c_alpha0),
        upper_ratio: theorem1_upper(x, epsilon, delta, consts.c_alpha),
        valid: range.valid,
        range_note: range.note,
    }
}

/// Envelope from the extremes `θ₁, θ₂ = ±1` of the two-factor expansion.
pub fn corollary1_envelope(x: f64, epsilon: f64, delta: f64, c_alpha0: f64, alpha0: f64) -> BoundEnvelope {
    let cubic = c_alpha0 * x.powi(3) * epsilon;
    let slack = c_alpha0 * (1.0 + x) * (eps_log_eps(epsilon) + delta);
    let range = corollary1_range(x, epsilon, delta, alpha0);
    let mut note = range.note;
    let lower = if slack > 1.0 {
        if !note.is_empty() {
            note.push_str("; ");
        }
        note.push_str("lower side clamped at 0 (slack term exceeds 1)");
        0.0
    } else {
        (-cubic).exp() * (1.0 - slack)
    };
    BoundEnvelope { x, lower_ratio: lower, upper_ratio: cubic.exp() * (1.0 + slack), valid: range.valid, range_note: note }
}

/// `c (ε|ln ε| + δ)`.
pub fn berry_esseen_bound(epsilon: f64, delta: f64, c: f64) -> f64 {
    c * (eps_log_eps(epsilon) + delta)
}

fn check_bolthausen_preconditions(epsilon: f64, n: usize) -> Result<()> {
    let floor = (3.0 / (4.0 * n as f64)).sqrt();
    // relative slack so that ε = sqrt(3/(4n)) computed elsewhere is accepted
    if epsilon < floor * (1.0 - 1e-12) {
        return Err(Error::PreconditionViolated(format!("epsilon = {epsilon} < sqrt(3/(4n)) = {floor}")));
    }
    if epsilon > 0.5 {
        return Err(Error::PreconditionViolated(format!("epsilon = {epsilon} > 1/2")));
    }
    Ok(())
}

/// `c₁ (ε³ n ln n + δ)`.
pub fn bolthausen_bound(epsilon: f64, delta: f64, n: usize, c1: f64) -> Result<f64> {
    check_bolthausen_preconditions(epsilon, n)?;
    let nf = n as f64;
    Ok(c1 * (epsilon.powi(3) * nf * nf.ln() + delta))
}

/// Whether `ε³ n ln n >= (3/4) ε |ln ε|`.
pub fn dominance_check(epsilon: f64, n: usize) -> Result<bool> {
    check_bolthausen_preconditions(epsilon, n)?;
    let nf = n as f64;
    Ok(epsilon.powi(3) * nf * nf.ln() >= 0.75 * eps_log_eps(epsilon))
}

/// Moderate-deviation limit `-x²/2` of `(1/a_n²) ln P(X_n > a_n x)`.
pub fn mdp_rate(x: f64) -> f64 {
    -0.5 * x * x
}

/// `(H+N) x³/√n`.
pub fn cubic_remainder(h: f64, n_const: f64, x: f64, n: usize) -> f64 {
    (h + n_const) * x.powi(3) / (n as f64).sqrt()
}

/// `(H+N)(1+x) ln n/√n`.
pub fn log_remainder(h: f64, n_const: f64, x: f64, n: usize) -> f64 {
    let nf = n as f64;
    (h + n_const) * (1.0 + x) * nf.ln() / nf.sqrt()
}

/// Range of `x` relative to `n` under the normalized-sum setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `x <= √(ln n)`: ratio `1 + O((H+N)(1+x) ln n/√n)`.
    LogRange,
    /// `√(ln n) < x <= n^{1/6}`: ratio `1 + O((H+N)x³/√n)`.
    CubicModerate,
    /// `n^{1/6} < x <= α₂√n`: log ratio `O((H+N)x³/√n)`.
    CubicLog,
    /// Past `α₂√n` or past `α/ε`.
    Beyond,
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::LogRange => "log_range",
            Regime::CubicModerate => "cubic_moderate",
            Regime::CubicLog => "cubic_log",
            Regime::Beyond => "beyond",
        }
    }
}

/// Thresholds for [`classify_regime`]. The absolute constants are unspecified
/// by the theory; these defaults are artifact choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub alpha: f64,
    pub alpha2: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        RegimeConfig { alpha: 0.9, alpha2: 0.1 }
    }
}

pub fn classify_regime(x: f64, n: usize, epsilon: f64, cfg: &RegimeConfig) -> Regime {
    let nf = n as f64;
    if x > cfg.alpha / epsilon {
        Regime::Beyond
    } else if x <= nf.ln().sqrt() {
        Regime::LogRange
    } else if x <= nf.powf(1.0 / 6.0) {
        Regime::CubicModerate
    } else if x <= cfg.alpha2 * nf.sqrt() {
        Regime::CubicLog
    } else {
        Regime::Beyond
    }
}

/// One row of an envelope sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub x: f64,
    pub lower: f64,
    pub upper: f64,
    pub valid: bool,
    pub regime_tag: String,
}

pub fn envelope_sweep(
    xs: &[f64],
    n: usize,
    epsilon: f64,
    delta: f64,
    consts: &BoundConstants,
    regimes: &RegimeConfig,
) -> Vec<EnvelopeRow> {
    xs.iter()
        .map(|&x| {
            let env = theorem_envelope(x, epsilon, delta, consts);
            EnvelopeRow {
                x,
                lower: env.lower_ratio,
                upper: env.upper_ratio,
                valid: env.valid,
                regime_tag: classify_regime(x, n, epsilon, regimes).tag().to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_values() {
        assert_eq!(gaussian_tail(0.0), 0.5);
        assert!((gaussian_tail(1.0) - 0.158655253931).abs() < 1e-12, "{:e}", gaussian_tail(1.0));
        assert!((gaussian_tail(3.0) / 1.349898031630e-3 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn log_tail_is_continuous_at_switch() {
        let a = gaussian_tail(29.999_999).ln();
        let b = log_gaussian_tail(30.0);
        assert!((a - b).abs() < 1e-4);
        let lo = gaussian_tail(30.0).ln();
        assert!((lo - b).abs() < 1e-12 * b.abs());
        assert!(log_gaussian_tail(200.0).is_finite());
    }

    #[test]
    fn mills_examples() {
        let (lo, hi) = mills_bounds(0.0);
        assert!((lo - 0.398942280401).abs() < 1e-11);
        assert!((hi - 0.564189583548).abs() < 1e-11);
        let (lo, hi) = mills_bounds(1.0);
        assert!((lo - 0.120985).abs() < 1e-6);
        assert!((hi - 0.171099).abs() < 1e-6);
    }

    #[test]
    fn theorem_evaluations() {
        let eps = 0.01;
        assert!((theorem1_upper(0.0, eps, 0.0, 1.0) - (1.0 + eps_log_eps(eps))).abs() < 1e-15);
        let e = 0.008333_f64;
        let manual = e.exp() * (1.0 + 2.0 * e * e.ln().abs());
        assert!((theorem1_upper(1.0, e, 0.0, 1.0) - manual).abs() < 1e-14);
        assert!((theorem1_upper(1.0, e, 0.0, 1.0) - 1.0885).abs() < 5e-4);
        assert!(theorem2_lower(0.0, eps, 0.0, 1.0) < 1.0);
        assert!((theorem2_lower(2.0, 1e-300, 0.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn range_flags() {
        assert!(theorem1_range(5.0, 0.1, 0.9).valid);
        let r = theorem1_range(10.0, 0.1, 0.9);
        assert!(!r.valid && r.note.contains("alpha/epsilon"));
        assert!(!theorem2_range(0.5, 0.1, 0.2, 0.1).valid);
        let env = theorem_envelope(20.0, 0.1, 0.0, &BoundConstants::default());
        assert!(!env.valid);
    }

    #[test]
    fn corollary1_examples() {
        let env = corollary1_envelope(0.0, 0.01, 0.0, 1.0, 0.1);
        assert!((env.lower_ratio - (1.0 - 0.046_051_701_859_880_91)).abs() < 1e-15);
        assert!((env.upper_ratio - (1.0 + 0.046_051_701_859_880_91)).abs() < 1e-15);
        assert!(env.valid);
        let clamped = corollary1_envelope(50.0, 0.1, 0.0, 1.0, 0.1);
        assert_eq!(clamped.lower_ratio, 0.0);
        assert!(clamped.range_note.contains("clamped"));
        let w0 = corollary1_envelope(1.0, 1e-2, 1e-2, 1.0, 0.1);
        let w1 = corollary1_envelope(1.0, 1e-5, 1e-5, 1.0, 0.1);
        assert!(w1.upper_ratio - w1.lower_ratio < w0.upper_ratio - w0.lower_ratio);
    }

    #[test]
    fn berry_esseen_examples() {
        assert!((berry_esseen_bound(0.1, 0.05, 1.0) - 0.2802585092994046).abs() < 1e-15);
        let e = (-1.0f64).exp();
        assert!((berry_esseen_bound(e, 0.0, 1.0) - 0.36787944117144233).abs() < 1e-15);
        assert!(berry_esseen_bound(1e-300, 0.0, 1.0) < 1e-296);
    }

    #[test]
    fn bolthausen_examples() {
        assert!(dominance_check(0.1, 100).unwrap());
        let v = bolthausen_bound(0.1, 0.0, 100, 1.0).unwrap();
        assert!((v - 0.001 * 100.0 * 100f64.ln()).abs() < 1e-14);
        let edge = (3.0 / (4.0 * 100.0_f64)).sqrt();
        assert!(dominance_check(edge, 100).is_ok());
        assert!(matches!(dominance_check(0.2, 4), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn mdp_values() {
        assert_eq!(mdp_rate(0.0), 0.0);
        assert_eq!(mdp_rate(1.0), -0.5);
        assert_eq!(mdp_rate(2.0), -2.0);
    }

    #[test]
    fn regimes() {
        let cfg = RegimeConfig::default();
        let n = 10_000;
        let eps = 0.2887 / 100.0;
        assert_eq!(classify_regime(1.0, n, eps, &cfg), Regime::LogRange);
        assert_eq!(classify_regime(4.0, n, eps, &cfg), Regime::CubicModerate);
        assert_eq!(classify_regime(8.0, n, eps, &cfg), Regime::CubicLog);
        assert_eq!(classify_regime(50.0, n, eps, &cfg), Regime::Beyond);
        assert_eq!(classify_regime(400.0, n, eps, &cfg), Regime::Beyond);
    }
}

//! Exact certification of the moment conditions.
//!
//! Bernstein's condition asks for `|E η^k| <= k!/2 · H^(k-2) · E η²` for all
//! `k >= 3`. For a known one-step law the smallest admissible `H` is a max over
//! `k` of a closed-form ratio, so certification is a finite scan. For laws with
//! bounded support the per-`k` ratio decays to zero, and for the Gaussian it
//! decays like `(2/k!!)^(1/(k-2))`, so the default scan to `k = 30` is enough.
//!
//! The module also hosts constructive conversions between the Bernstein,
//! Sakhanenko, factorial-moment and Cramér conditions.

use serde::{Deserialize, Serialize};

use crate::bounds::gaussian_tail;
use crate::error::{Error, Result};
use crate::model::{IncrementDistribution, IncrementRule, MartingaleSpec};

pub const DEFAULT_K_MAX: u32 = 30;
const RATIO_TOL: f64 = 1e-12;

/// Smallest admissible constant from a moment scan and the order that attains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentScan {
    pub constant: f64,
    pub binding_k: u32,
}

/// Witness for the Bernstein (A1)/(A1') and variance (A2)/(A2') conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCertificate {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "N")]
    pub n_const: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k_max: u32,
    pub binding_k: u32,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionName {
    A1,
    A2,
    A1prime,
    A2prime,
    Sakhanenko,
    Cramer,
    FactorialMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_name: ConditionName,
    pub holds: bool,
    pub witness: f64,
    pub detail: String,
}

fn factorial(k: u32) -> f64 {
    (2..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// `(2 m / (k! E η²))^(1/(k-2))`, the per-order constant for a moment of size `m`.
fn order_constant(m: f64, k: u32, var: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let direct = (2.0 * m / (factorial(k) * var)).powf(1.0 / (k - 2) as f64);
    if direct.is_finite() {
        direct
    } else {
        let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
        ((2.0 * m).ln() - ln_fact - var.ln()).exp().powf(1.0 / (k - 2) as f64)
    }
}

fn scan(dist: &IncrementDistribution, k_max: u32, absolute: bool) -> Result<MomentScan> {
    let var = dist.variance();
    let mut best = MomentScan { constant: 0.0, binding_k: 3 };
    for k in 3..=k_max {
        let m = if absolute { dist.abs_moment(k) } else { dist.moment(k).abs() };
        if !m.is_finite() {
            return Err(Error::Divergent(format!("moment of order {k} is not finite")));
        }
        let c = order_constant(m, k, var);
        if c > best.constant {
            best = MomentScan { constant: c, binding_k: k };
        }
    }
    Ok(best)
}

/// Smallest `H` with `|E η^k| <= k!/2 H^(k-2) E η²` for `3 <= k <= k_max`.
pub fn minimal_bernstein_h(dist: &IncrementDistribution, k_max: u32) -> Result<MomentScan> {
    if k_max < 4 {
        return Err(Error::InvalidArgument(format!("k_max must be >= 4, got {k_max}")));
    }
    scan(dist, k_max, false)
}

/// Smallest `ρ` with `E|η|^k <= k!/2 ρ^(k-2) E η²` for `3 <= k <= k_max`.
pub fn minimal_factorial_rho(dist: &IncrementDistribution, k_max: u32) -> Result<MomentScan> {
    if k_max < 3 {
        return Err(Error::InvalidArgument(format!("k_max must be >= 3, got {k_max}")));
    }
    scan(dist, k_max, true)
}

/// Largest `|E ξ^k| / (k!/2 ε^(k-2) E ξ²)` over `3 <= k <= k_max`.
pub fn bernstein_slack(dist: &IncrementDistribution, epsilon: f64, k_max: u32) -> f64 {
    let var = dist.variance();
    (3..=k_max)
        .map(|k| dist.moment(k).abs() / (0.5 * factorial(k) * epsilon.powi(k as i32 - 2) * var))
        .fold(0.0, f64::max)
}

/// Certify (A1)/(A2) for `spec`, reporting the constants of (A1')/(A2') alongside.
pub fn certify(spec: &MartingaleSpec, k_max: u32) -> Result<BernsteinCertificate> {
    let n = spec.n() as f64;
    let (epsilon, binding_k, delta) = match spec.rule() {
        IncrementRule::Iid { dist, normalized: true } => {
            let standardized = dist.scaled(1.0 / dist.variance().sqrt());
            let s = minimal_bernstein_h(&standardized, k_max)?;
            (s.constant / n.sqrt(), s.binding_k, 0.0)
        }
        IncrementRule::Iid { dist, normalized: false } => {
            let s = minimal_bernstein_h(dist, k_max)?;
            let total = n * dist.variance();
            (s.constant, s.binding_k, (total - 1.0).abs().sqrt())
        }
        IncrementRule::VarianceSwitching { .. } => {
            // sup over histories: each step uses one of the two branch laws
            let mut best = MomentScan { constant: 0.0, binding_k: 3 };
            for law in spec.step_laws() {
                let s = minimal_bernstein_h(law, k_max)?;
                if s.constant > best.constant {
                    best = s;
                }
            }
            (best.constant, best.binding_k, 0.0)
        }
    };
    if epsilon > 0.5 {
        return Err(Error::RangeExceeded(format!(
            "epsilon = {epsilon} exceeds 1/2 at n = {}; increase n",
            spec.n()
        )));
    }
    if delta > 0.5 {
        return Err(Error::RangeExceeded(format!("delta = {delta} exceeds 1/2 (|<X>_n - 1| = {})", delta * delta)));
    }
    let slack = spec.step_laws().iter().map(|law| bernstein_slack(law, epsilon, k_max)).fold(0.0, f64::max);
    Ok(BernsteinCertificate {
        h: epsilon * n.sqrt(),
        n_const: delta * n.sqrt(),
        epsilon,
        delta,
        k_max,
        binding_k,
        slack,
    })
}

/// Report whether (A1') holds for `dist` with constant `h`.
pub fn check_bernstein(dist: &IncrementDistribution, h: f64, k_max: u32) -> Result<ConditionReport> {
    let s = minimal_bernstein_h(dist, k_max)?;
    let holds = s.constant <= h * (1.0 + RATIO_TOL);
    Ok(ConditionReport {
        condition_name: ConditionName::A1prime,
        holds,
        witness: if holds { s.constant } else { s.binding_k as f64 },
        detail: if holds {
            format!("minimal H = {} <= {h} (binding k = {})", s.constant, s.binding_k)
        } else {
            format!("|E eta^{k}| > k!/2 H^(k-2) E eta^2 at k = {k} with H = {h}", k = s.binding_k)
        },
    })
}

/// Report whether (A2) holds along every path of `spec` with the given `delta`.
pub fn check_variance_condition(spec: &MartingaleSpec, delta: f64) -> ConditionReport {
    let n = spec.n() as f64;
    let deviation = match spec.rule() {
        IncrementRule::Iid { dist, normalized } => {
            if *normalized {
                0.0
            } else {
                (n * dist.variance() - 1.0).abs()
            }
        }
        IncrementRule::VarianceSwitching { .. } => 0.0,
    };
    let holds = deviation <= delta * delta * (1.0 + RATIO_TOL) && delta <= 0.5;
    ConditionReport {
        condition_name: ConditionName::A2,
        holds,
        witness: deviation.sqrt(),
        detail: if holds {
            format!("|<X>_n - 1| = {deviation} <= delta^2")
        } else {
            format!("|<X>_n - 1| = {deviation} > delta^2 = {}", delta * delta)
        },
    }
}

/// `6t/(1-t)^4`, the closed form of `t Σ (k+3)!/k! t^k`.
pub fn sakhanenko_g(t: f64) -> f64 {
    6.0 * t / (1.0 - t).powi(4)
}

/// Sakhanenko constant `K = t0 / H` where `g(t0) = 1` on `(0, 1/2)`.
pub fn sakhanenko_k_from_h(h: f64) -> f64 {
    assert!(h > 0.0, "H must be positive");
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if sakhanenko_g(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / h
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E(|η|^3 e^{K|η|})`.
pub fn sakhanenko_moment(dist: &IncrementDistribution, k: f64) -> f64 {
    match dist {
        IncrementDistribution::Gaussian { sigma2 } => {
            // complete the square: 2 e^{K²σ²/2} E[W³ 1{W>0}], W ~ N(Kσ², σ²)
            let sd = sigma2.sqrt();
            let mu = k * sigma2;
            let a = k * sd;
            let big_phi = gaussian_tail(-a);
            let phi = std_normal_pdf(a);
            let m0 = big_phi;
            let m1 = phi;
            let m2 = big_phi - a * phi;
            let m3 = (a * a + 2.0) * phi;
            let cubic = mu.powi(3) * m0 + 3.0 * mu * mu * sd * m1 + 3.0 * mu * sd * sd * m2 + sd.powi(3) * m3;
            2.0 * (0.5 * a * a).exp() * cubic
        }
        _ => dist
            .atoms()
            .expect("discrete law")
            .iter()
            .map(|(v, p)| p * v.abs().powi(3) * (k * v.abs()).exp())
            .sum(),
    }
}

/// Sakhanenko's condition `K E(|η|³ e^{K|η|}) <= E η²`.
pub fn check_sakhanenko(dist: &IncrementDistribution, k: f64) -> Result<ConditionReport> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("K must be > 0, got {k}")));
    }
    let m = sakhanenko_moment(dist, k);
    if !m.is_finite() {
        return Err(Error::Divergent(format!("E |eta|^3 exp(K|eta|) overflows at K = {k}")));
    }
    let ratio = k * m / dist.variance();
    let holds = ratio <= 1.0 + RATIO_TOL;
    Ok(ConditionReport {
        condition_name: ConditionName::Sakhanenko,
        holds,
        witness: ratio,
        detail: if holds {
            format!("K E(|eta|^3 e^(K|eta|)) / E eta^2 = {ratio} <= 1")
        } else {
            format!("K E(|eta|^3 e^(K|eta|)) = {} exceeds E eta^2 = {}", k * m, dist.variance())
        },
    })
}

/// Bernstein constant implied by Cramér's condition `c1 = E e^{|η|/c0}`.
pub fn cramer_to_bernstein(c0: f64, c1: f64, sigma2: f64) -> f64 {
    c0.max(2.0 * c0.powi(3) * c1 / sigma2)
}

/// `E e^{|η|/c0}`.
pub fn cramer_constant(dist: &IncrementDistribution, c0: f64) -> Result<f64> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("c0 must be > 0, got {c0}")));
    }
    let t = 1.0 / c0;
    let c1 = match dist {
        IncrementDistribution::Gaussian { sigma2 } => {
            let sd = sigma2.sqrt();
            2.0 * (0.5 * t * t * sigma2).exp() * gaussian_tail(-t * sd)
        }
        _ => dist.atoms().expect("discrete law").iter().map(|(v, p)| p * (t * v.abs()).exp()).sum(),
    };
    if !c1.is_finite() {
        return Err(Error::Divergent(format!("E exp(|eta|/c0) overflows at c0 = {c0}")));
    }
    Ok(c1)
}

/// Cramér's condition at scale `c0`, reported with the implied Bernstein constant.
pub fn check_cramer(dist: &IncrementDistribution, c0: f64) -> Result<ConditionReport> {
    let c1 = cramer_constant(dist, c0)?;
    let h = cramer_to_bernstein(c0, c1, dist.variance());
    Ok(ConditionReport {
        condition_name: ConditionName::Cramer,
        holds: true,
        witness: h,
        detail: format!("E exp(|eta|/{c0}) = {c1}; implied Bernstein H = {h}"),
    })
}

/// Factorial-moment condition `E|η|^k <= k!/2 ρ^(k-2) E η²` for `3 <= k <= k_max`.
pub fn check_factorial_moment(dist: &IncrementDistribution, rho: f64, k_max: u32) -> Result<ConditionReport> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
    }
    let s = minimal_factorial_rho(dist, k_max)?;
    let var = dist.variance();
    let (worst_k, worst) = (3..=k_max)
        .map(|k| (k, dist.abs_moment(k) / (0.5 * factorial(k) * rho.powi(k as i32 - 2) * var)))
        .fold((3, 0.0), |acc, (k, r)| if r > acc.1 { (k, r) } else { acc });
    let holds = worst <= 1.0 + RATIO_TOL;
    Ok(ConditionReport {
        condition_name: ConditionName::FactorialMoment,
        holds,
        witness: if holds { s.constant } else { worst_k as f64 },
        detail: if holds {
            format!("minimal rho = {} <= {rho} (binding k = {})", s.constant, s.binding_k)
        } else {
            format!("E|eta|^{worst_k} exceeds k!/2 rho^(k-2) E eta^2 by factor {worst} (need rho >= {})", s.constant)
        },
    })
}

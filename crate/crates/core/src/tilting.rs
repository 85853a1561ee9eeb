//! Conjugate-measure machinery.
//!
//! For a step law `ξ` and `λ >= 0` the tilted law has density `e^{λξ}/E e^{λξ}`.
//! Summing per-step quantities along a history gives the cumulant process
//! `Ψ_n(λ) = Σ log E(e^{λξ_i} | F_{i-1})` and the drift
//! `B_n(λ) = Σ E_λ(ξ_i | F_{i-1})`, with `X_n = Y_n(λ) + B_n(λ)` where
//! `Y_n(λ)` is a martingale under the tilted measure.
//!
//! Exponential sums over finite tables are max-shifted before exponentiation,
//! so large `λ·value` products do not overflow.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{certify, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::model::{IncrementDistribution, IncrementRule, MartingaleSpec, Path, StepSampler};

const LN_2: f64 = std::f64::consts::LN_2;

fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

fn sech2(t: f64) -> f64 {
    let a = t.abs();
    let e = (-a).exp();
    let s = 2.0 * e / (1.0 + e * e);
    s * s
}

/// Max-shifted tilted weights of a finite table, plus the log normaliser.
fn table_tilt(values: &[f64], probs: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = values
        .iter()
        .zip(probs)
        .map(|(v, p)| if *p > 0.0 { p.ln() + lambda * v } else { f64::NEG_INFINITY })
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = raw.iter().sum();
    (raw.iter().map(|w| w / total).collect(), m + total.ln())
}

/// `log E e^{λξ}`.
pub fn step_cumulant(dist: &IncrementDistribution, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    match dist {
        IncrementDistribution::FiniteTable(t) => table_tilt(t.values(), t.probs(), lambda).1,
        IncrementDistribution::Gaussian { sigma2 } => 0.5 * lambda * lambda * sigma2,
        IncrementDistribution::ScaledRademacher { scale } => log_cosh(lambda * scale),
    }
}

/// Tilted mean `E(ξ e^{λξ}) / E e^{λξ}`.
pub fn step_drift(dist: &IncrementDistribution, lambda: f64) -> f64 {
    tilted_law(dist, lambda).mean()
}

/// Tilted variance `E(ξ² e^{λξ}) / E e^{λξ} - b(λ)²`.
pub fn tilted_step_variance(dist: &IncrementDistribution, lambda: f64) -> f64 {
    match dist {
        IncrementDistribution::ScaledRademacher { scale } => scale * scale * sech2(lambda * scale),
        _ => tilted_law(dist, lambda).variance(),
    }
}

/// One-step law under the conjugate measure.
#[derive(Debug, Clone, PartialEq)]
pub enum TiltedLaw {
    TwoPoint { hi: f64, lo: f64, p_hi: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
    Normal { mean: f64, variance: f64 },
}

/// Exponentially tilted version of `dist`; `λ = 0` returns the base law unchanged.
pub fn tilted_law(dist: &IncrementDistribution, lambda: f64) -> TiltedLaw {
    match dist {
        IncrementDistribution::FiniteTable(t) => {
            let weights = if lambda == 0.0 { t.probs().to_vec() } else { table_tilt(t.values(), t.probs(), lambda).0 };
            TiltedLaw::Discrete { values: t.values().to_vec(), weights }
        }
        IncrementDistribution::Gaussian { sigma2 } => TiltedLaw::Normal { mean: lambda * sigma2, variance: *sigma2 },
        IncrementDistribution::ScaledRademacher { scale } => {
            TiltedLaw::TwoPoint { hi: *scale, lo: -scale, p_hi: 1.0 / (1.0 + (-2.0 * lambda * scale).exp()) }
        }
    }
}

impl TiltedLaw {
    pub fn mean(&self) -> f64 {
        match self {
            TiltedLaw::TwoPoint { hi, lo, p_hi } => {
                // hi = -lo for tilted Rademacher: s (2p - 1) = s tanh(λs)
                if *hi == -*lo {
                    hi * (2.0 * p_hi - 1.0)
                } else {
                    p_hi * hi + (1.0 - p_hi) * lo
                }
            }
            TiltedLaw::Discrete { values, weights } => values.iter().zip(weights).map(|(v, w)| v * w).sum(),
            TiltedLaw::Normal { mean, .. } => *mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            TiltedLaw::TwoPoint { hi, lo, p_hi } => p_hi * (1.0 - p_hi) * (hi - lo) * (hi - lo),
            TiltedLaw::Discrete { values, weights } => {
                let m = self.mean();
                values.iter().zip(weights).map(|(v, w)| w * (v - m) * (v - m)).sum()
            }
            TiltedLaw::Normal { variance, .. } => *variance,
        }
    }

    pub fn total_weight(&self) -> f64 {
        match self {
            TiltedLaw::Discrete { weights, .. } => weights.iter().sum(),
            _ => 1.0,
        }
    }

    /// Atoms `(value, prob)` of a discrete tilted law.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            TiltedLaw::TwoPoint { hi, lo, p_hi } => Some(vec![(*lo, 1.0 - p_hi), (*hi, *p_hi)]),
            TiltedLaw::Discrete { values, weights } => Some(values.iter().copied().zip(weights.iter().copied()).collect()),
            TiltedLaw::Normal { .. } => None,
        }
    }

    pub(crate) fn sampler(&self) -> StepSampler {
        match self {
            TiltedLaw::TwoPoint { hi, lo, p_hi } => StepSampler::TwoPoint { hi: *hi, lo: *lo, p_hi: *p_hi },
            TiltedLaw::Discrete { values, weights } => StepSampler::discrete(values, weights),
            TiltedLaw::Normal { mean, variance } => StepSampler::Normal { mean: *mean, sd: variance.sqrt() },
        }
    }
}

/// A martingale spec viewed under the conjugate measure `P_λ`.
#[derive(Debug, Clone)]
pub struct TiltedModel {
    base: MartingaleSpec,
    lambda: f64,
    laws: Vec<TiltedLaw>,
    cumulants: Vec<f64>,
    samplers: Vec<StepSampler>,
}

impl TiltedModel {
    pub fn new(base: &MartingaleSpec, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::OutOfRange(format!("lambda = {lambda} is not finite")));
        }
        let laws: Vec<TiltedLaw> = base.step_laws().iter().map(|l| tilted_law(l, lambda)).collect();
        let cumulants: Vec<f64> = base.step_laws().iter().map(|l| step_cumulant(l, lambda)).collect();
        if cumulants.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutOfRange(format!("cumulant is infinite at lambda = {lambda}")));
        }
        let samplers = laws.iter().map(TiltedLaw::sampler).collect();
        Ok(TiltedModel { base: base.clone(), lambda, laws, cumulants, samplers })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn base(&self) -> &MartingaleSpec {
        &self.base
    }

    /// Tilted laws indexed like [`MartingaleSpec::step_laws`].
    pub fn laws(&self) -> &[TiltedLaw] {
        &self.laws
    }

    /// Sample a path under `P_λ`, returning it with `Ψ_n(λ)` along the realised history.
    pub fn sample_path<R: Rng + ?Sized>(&self, rng: &mut R) -> (Path, f64) {
        let spec = &self.base;
        let n = spec.n();
        let variances: Vec<f64> = spec.step_laws().iter().map(|l| l.variance()).collect();
        let mut increments = Vec::with_capacity(n);
        let mut partial_sums = Vec::with_capacity(n + 1);
        let mut predictable_variances = Vec::with_capacity(n);
        partial_sums.push(0.0);
        let (mut x, mut psi, mut sign) = (0.0, 0.0, true);
        for i in 1..=n {
            if spec.starts_pair(i) {
                sign = spec.sign_of(x);
            }
            let idx = spec.law_index_for_sign(i, sign);
            let step = self.samplers[idx].draw(rng);
            x += step;
            psi += self.cumulants[idx];
            increments.push(step);
            partial_sums.push(x);
            predictable_variances.push(variances[idx]);
        }
        (Path { increments, partial_sums, predictable_variances }, psi)
    }

    /// `(X_n, Ψ_n(λ))` for one path under `P_λ`.
    #[inline]
    pub(crate) fn sample_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let spec = &self.base;
        if spec.is_iid() {
            let s = &self.samplers[0];
            let mut x = 0.0;
            for _ in 0..spec.n() {
                x += s.draw(rng);
            }
            return (x, spec.n() as f64 * self.cumulants[0]);
        }
        let (mut x, mut psi, mut sign) = (0.0, 0.0, true);
        for i in 1..=spec.n() {
            if spec.starts_pair(i) {
                sign = spec.sign_of(x);
            }
            let idx = spec.law_index_for_sign(i, sign);
            x += self.samplers[idx].draw(rng);
            psi += self.cumulants[idx];
        }
        (x, psi)
    }
}

/// Two-sided range of a predictable process over all reachable histories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessEnvelope {
    pub lower: f64,
    pub upper: f64,
}

impl ProcessEnvelope {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Largest `|value - target|` over the envelope.
    pub fn max_deviation(&self, target: f64) -> f64 {
        (self.lower - target).abs().max((self.upper - target).abs())
    }
}

/// Envelope of `Σ f(law_i)` over reachable histories.
fn process_envelope(spec: &MartingaleSpec, per_law: &[f64]) -> ProcessEnvelope {
    match spec.rule() {
        IncrementRule::Iid { .. } => {
            let v = spec.n() as f64 * per_law[0];
            ProcessEnvelope { lower: v, upper: v }
        }
        IncrementRule::VarianceSwitching { .. } => {
            // each pair is (hi, lo) or (lo, hi) depending on the sign at its start
            let pos = per_law[spec.law_index_for_sign(1, true)] + per_law[spec.law_index_for_sign(2, true)];
            let neg = per_law[spec.law_index_for_sign(1, false)] + per_law[spec.law_index_for_sign(2, false)];
            let pairs = (spec.n() / 2) as f64;
            ProcessEnvelope { lower: pairs * pos.min(neg), upper: pairs * pos.max(neg) }
        }
    }
}

/// `Ψ_n(λ)` over reachable histories.
pub fn cumulant_process(spec: &MartingaleSpec, lambda: f64) -> ProcessEnvelope {
    let per: Vec<f64> = spec.step_laws().iter().map(|l| step_cumulant(l, lambda)).collect();
    process_envelope(spec, &per)
}

/// `B_n(λ)` over reachable histories.
pub fn drift_process(spec: &MartingaleSpec, lambda: f64) -> ProcessEnvelope {
    let per: Vec<f64> = spec.step_laws().iter().map(|l| step_drift(l, lambda)).collect();
    process_envelope(spec, &per)
}

/// `(Y_n(λ), B_n(λ))` with `X_n = Y_n + B_n` along a realised path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateDecomposition {
    pub y_n: f64,
    pub b_n: f64,
}

pub fn conjugate_decomposition(path: &Path, spec: &MartingaleSpec, lambda: f64) -> ConjugateDecomposition {
    let drifts: Vec<f64> = spec.step_laws().iter().map(|l| step_drift(l, lambda)).collect();
    let b_n: f64 = (1..=spec.n()).map(|i| drifts[spec.law_index(i, &path.partial_sums)]).sum();
    ConjugateDecomposition { y_n: path.terminal() - b_n, b_n }
}

/// `Ψ_n(λ)` along a realised path.
pub fn path_cumulant(path: &Path, spec: &MartingaleSpec, lambda: f64) -> f64 {
    let per: Vec<f64> = spec.step_laws().iter().map(|l| step_cumulant(l, lambda)).collect();
    (1..=spec.n()).map(|i| per[spec.law_index(i, &path.partial_sums)]).sum()
}

/// Largest root of `λ + λδ² + cλ²ε = x`.
pub fn solve_lambda_bar(x: f64, epsilon: f64, delta: f64, c_alpha: f64) -> f64 {
    let a = 1.0 + delta * delta;
    2.0 * x / ((a * a + 4.0 * c_alpha * x * epsilon).sqrt() + a)
}

/// Residual of the defining equation for [`solve_lambda_bar`].
pub fn lambda_bar_residual(lambda: f64, x: f64, epsilon: f64, delta: f64, c_alpha: f64) -> f64 {
    lambda + lambda * delta * delta + c_alpha * lambda * lambda * epsilon - x
}

/// Smallest root of `λ - λδ² - cλ²ε = x`.
pub fn solve_lambda_under(x: f64, epsilon: f64, delta: f64, c_half: f64) -> Result<f64> {
    let a = 1.0 - delta * delta;
    let disc = a * a - 4.0 * c_half * x * epsilon;
    if !(disc > 0.0) {
        return Err(Error::OutOfRange(format!(
            "(1 - delta^2)^2 - 4 c x epsilon = {disc} <= 0: x = {x} is beyond the lower-bound range"
        )));
    }
    Ok(2.0 * x / (a + disc.sqrt()))
}

/// Residual of the defining equation for [`solve_lambda_under`].
pub fn lambda_under_residual(lambda: f64, x: f64, epsilon: f64, delta: f64, c_half: f64) -> f64 {
    lambda - lambda * delta * delta - c_half * lambda * lambda * epsilon - x
}

/// Lower bracket constant: `λ̄ >= c x` for `x <= α/ε` and `δ <= 1/2`.
pub fn lambda_bar_lower_constant(alpha: f64, c_alpha: f64) -> f64 {
    let a = 1.25;
    2.0 / ((a * a + 4.0 * c_alpha * alpha).sqrt() + a)
}

/// Saddlepoint tilt solving `B_n(λ) = x` by bisection on the exact drift.
pub fn saddlepoint_lambda(spec: &MartingaleSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let drift = |l: f64| drift_process(spec, l).midpoint();
    let mut hi = 1.0;
    let mut guard = 0;
    while drift(hi) < x {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 || !hi.is_finite() {
            return Err(Error::OutOfRange(format!("no tilt reaches drift {x}; threshold beyond the support")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if drift(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Moment-bound scan for one step law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub holds: bool,
    /// `max_k |E ξ^k| / (6 k! ε^k)`.
    pub moment_ratio: f64,
    pub moment_binding_k: u32,
    /// `max_k E|ξ|^k / (k! ε^(k-2) E ξ²)`.
    pub abs_moment_ratio: f64,
    pub abs_moment_binding_k: u32,
}

/// Check `|E ξ^k| <= 6 k! ε^k` and `E|ξ|^k <= k! ε^(k-2) E ξ²` for `2 <= k <= k_max`.
pub fn check_lemma1(dist: &IncrementDistribution, epsilon: f64, k_max: u32) -> Lemma1Report {
    let var = dist.variance();
    let mut fact = 1.0;
    let mut r1 = (0.0, 2);
    let mut r2 = (0.0, 2);
    for k in 2..=k_max {
        fact *= k as f64;
        let a = dist.moment(k).abs() / (6.0 * fact * epsilon.powi(k as i32));
        let b = dist.abs_moment(k) / (fact * epsilon.powi(k as i32 - 2) * var);
        if a > r1.0 {
            r1 = (a, k);
        }
        if b > r2.0 {
            r2 = (b, k);
        }
    }
    Lemma1Report {
        holds: r1.0 <= 1.0 + 1e-12 && r2.0 <= 1.0 + 1e-12,
        moment_ratio: r1.0,
        moment_binding_k: r1.1,
        abs_moment_ratio: r2.0,
        abs_moment_binding_k: r2.1,
    }
}

/// Exact drift and cumulant bounds at one tilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltReport {
    pub lambda: f64,
    pub psi_n: f64,
    pub b_n: f64,
    /// `|B_n - λ| - (λδ² + cλ²ε)` at the supplied `c`.
    pub lemma2_residual: f64,
    /// `|Ψ_n - λ²/2| - (cλ³ε + λ²δ²/2)` at the supplied `c`.
    pub lemma3_residual: f64,
    /// Smallest `c` making the drift bound hold across the whole grid.
    pub fitted_c2: f64,
    /// Smallest `c` making the cumulant bound hold across the whole grid.
    pub fitted_c3: f64,
}

// deviations below this relative size are floating-point noise
const ROUNDING_FLOOR: f64 = 1e-13;

fn floor_noise(dev: f64, scale: f64) -> f64 {
    if dev <= ROUNDING_FLOOR * scale {
        0.0
    } else {
        dev
    }
}

/// Evaluate the drift and cumulant bounds on a λ grid, `0 <= λ <= α/ε`.
pub fn check_lemma2_lemma3(
    spec: &MartingaleSpec,
    lambda_grid: &[f64],
    alpha: f64,
    c_alpha: f64,
) -> Result<Vec<TiltReport>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let cert = certify(spec, DEFAULT_K_MAX)?;
    let (eps, delta) = (cert.epsilon, cert.delta);
    let d2 = delta * delta;
    let mut rows = Vec::with_capacity(lambda_grid.len());
    let (mut c2, mut c3) = (0.0_f64, 0.0_f64);
    for &lambda in lambda_grid {
        if lambda < 0.0 || lambda > alpha / eps * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!("lambda = {lambda} outside [0, alpha/epsilon = {}]", alpha / eps)));
        }
        let b = drift_process(spec, lambda);
        let psi = cumulant_process(spec, lambda);
        let dev_b = floor_noise(b.max_deviation(lambda), lambda);
        let dev_psi = floor_noise(psi.max_deviation(0.5 * lambda * lambda), 0.5 * lambda * lambda);
        if lambda > 0.0 {
            c2 = c2.max((dev_b - lambda * d2) / (lambda * lambda * eps));
            c3 = c3.max((dev_psi - 0.5 * lambda * lambda * d2) / (lambda.powi(3) * eps));
        }
        rows.push(TiltReport {
            lambda,
            psi_n: psi.upper,
            b_n: b.upper,
            lemma2_residual: dev_b - (lambda * d2 + c_alpha * lambda * lambda * eps),
            lemma3_residual: dev_psi - (c_alpha * lambda.powi(3) * eps + 0.5 * lambda * lambda * d2),
            fitted_c2: 0.0,
            fitted_c3: 0.0,
        });
    }
    for row in &mut rows {
        row.fitted_c2 = c2;
        row.fitted_c3 = c3;
    }
    Ok(rows)
}

/// Smallest `c` with `|Δ<Y>_k - Δ<X>_k| <= c λ ε Δ<X>_k` across the grid.
pub fn tilted_variance_constant(spec: &MartingaleSpec, lambda_grid: &[f64]) -> Result<f64> {
    let eps = certify(spec, DEFAULT_K_MAX)?.epsilon;
    let mut c = 0.0_f64;
    for &lambda in lambda_grid.iter().filter(|l| **l > 0.0) {
        for law in spec.step_laws() {
            let dx = law.variance();
            let dy = tilted_step_variance(law, lambda);
            let dev = floor_noise((dy - dx).abs(), dx);
            c = c.max(dev / (lambda * eps * dx));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rad(s: f64) -> IncrementDistribution {
        IncrementDistribution::scaled_rademacher(s).unwrap()
    }

    #[test]
    fn closed_forms() {
        for (s, l) in [(1.0, 0.7), (0.1, 3.0), (2.0, -0.4)] {
            let d = rad(s);
            assert!((step_cumulant(&d, l) - (l * s).cosh().ln()).abs() < 1e-14);
            assert!((step_drift(&d, l) - s * (l * s).tanh()).abs() < 1e-14);
            let sech = 1.0 / (l * s).cosh();
            assert!((tilted_step_variance(&d, l) - s * s * sech * sech).abs() < 1e-14);
        }
        let g = IncrementDistribution::gaussian(2.5).unwrap();
        assert_eq!(step_cumulant(&g, 2.0), 5.0);
        assert_eq!(step_drift(&g, 2.0), 5.0);
        assert_eq!(tilted_step_variance(&g, 2.0), 2.5);
        assert_eq!(step_cumulant(&g, 0.0), 0.0);
        assert_eq!(step_drift(&rad(1.0), 0.0), 0.0);
        assert_eq!(tilted_step_variance(&rad(3.0), 0.0), 9.0);
    }

    #[test]
    fn table_matches_rademacher_and_resists_overflow() {
        let t = IncrementDistribution::finite_table(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        for l in [0.3, 2.0, 10.0] {
            assert!((step_cumulant(&t, l) - step_cumulant(&rad(1.0), l)).abs() < 1e-13);
            assert!((step_drift(&t, l) - step_drift(&rad(1.0), l)).abs() < 1e-13);
            assert!((tilted_step_variance(&t, l) - tilted_step_variance(&rad(1.0), l)).abs() < 1e-13);
        }
        let c = step_cumulant(&t, 2000.0);
        assert!((c - (2000.0 - LN_2)).abs() < 1e-9);
        assert!(step_drift(&t, 2000.0).is_finite());
    }

    #[test]
    fn tilted_weights_normalised() {
        let d = IncrementDistribution::finite_table_centered(vec![-2.0, 0.5, 1.0, 3.0], vec![0.2, 0.4, 0.3, 0.1])
            .unwrap();
        for l in [0.0, 0.5, 4.0, 40.0] {
            let law = tilted_law(&d, l);
            assert!((law.total_weight() - 1.0).abs() < 1e-12);
            assert!((law.mean() - step_drift(&d, l)).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_identity() {
        let spec = MartingaleSpec::iid(rad(1.0), 64, true).unwrap();
        let model = TiltedModel::new(&spec, 1.3).unwrap();
        let (path, psi) = model.sample_path(&mut crate::rng::path_stream(3, 1));
        let dec = conjugate_decomposition(&path, &spec, 1.3);
        assert!((dec.y_n + dec.b_n - path.terminal()).abs() < 1e-12);
        let expect = 8.0 * (1.3f64 / 8.0).tanh();
        assert!((dec.b_n - expect * 8.0 / 8.0).abs() < 1e-12);
        assert!((psi - path_cumulant(&path, &spec, 1.3)).abs() < 1e-12);
        let zero = conjugate_decomposition(&path, &spec, 0.0);
        assert_eq!(zero.b_n, 0.0);
        assert_eq!(zero.y_n, path.terminal());
    }

    #[test]
    fn lambda_bar_examples() {
        let l = solve_lambda_bar(1.0, 0.01, 0.0, 1.0);
        assert!((l - 2.0 / (1.04f64.sqrt() + 1.0)).abs() < 1e-15);
        assert!((l - 0.9901951).abs() < 1e-7);
        assert!((l + l * l * 0.01 - 1.0).abs() < 1e-7);
        assert_eq!(solve_lambda_bar(3.5, 0.2, 0.0, 0.0), 3.5);
        assert!(solve_lambda_bar(7.0, 0.05, 0.3, 2.0) <= 7.0);
    }

    #[test]
    fn lambda_under_examples() {
        let l = solve_lambda_under(1.0, 0.01, 0.0, 1.0).unwrap();
        assert!((l - 2.0 / (1.0 + 0.96f64.sqrt())).abs() < 1e-15);
        assert!((l - 1.0102051).abs() < 1e-7);
        assert!((l - l * l * 0.01 - 1.0).abs() < 1e-7);
        assert!((solve_lambda_under(2.0, 1e-12, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-10);
        let eps = 0.01;
        assert!(matches!(solve_lambda_under(0.3 / eps, eps, 0.0, 1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn saddlepoint_hits_target() {
        let spec = MartingaleSpec::iid(rad(1.0), 20, true).unwrap();
        let l = saddlepoint_lambda(&spec, 2.0).unwrap();
        assert!((drift_process(&spec, l).upper - 2.0).abs() < 1e-9);
        assert!((l - 2.1520447048200206).abs() < 1e-8);
        assert_eq!(saddlepoint_lambda(&spec, -1.0).unwrap(), 0.0);
        assert!(saddlepoint_lambda(&spec, 5.0).is_err());
    }

    #[test]
    fn lemma1_holds_at_minimal_epsilon() {
        use crate::conditions::minimal_bernstein_h;
        for d in [rad(0.05), IncrementDistribution::gaussian(0.01).unwrap()] {
            let eps = minimal_bernstein_h(&d, 30).unwrap().constant;
            let rep = check_lemma1(&d, eps, 30);
            assert!(rep.holds, "{rep:?}");
            // second moment bound E ξ² <= 12 ε²
            assert!(d.variance() <= 12.0 * eps * eps * (1.0 + 1e-12));
        }
        assert!(!check_lemma1(&rad(1.0), 0.1, 30).holds);
    }

    #[test]
    fn gaussian_lemmas_are_exact() {
        let spec = MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 100, true).unwrap();
        let grid: Vec<f64> = (0..=36).map(|i| i as f64 * 0.5).collect();
        let rows = check_lemma2_lemma3(&spec, &grid, 0.9, 1.0).unwrap();
        assert_eq!(rows[0].lemma2_residual, 0.0);
        assert_eq!(rows[0].lemma3_residual, 0.0);
        assert!(rows.iter().all(|r| r.fitted_c2 == 0.0 && r.fitted_c3 == 0.0));
    }

    #[test]
    fn lemma_grid_range_error() {
        let spec = MartingaleSpec::iid(rad(1.0), 100, true).unwrap();
        let eps = certify(&spec, 30).unwrap().epsilon;
        assert!(matches!(check_lemma2_lemma3(&spec, &[0.95 / eps], 0.9, 1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn switching_envelope_is_tight() {
        let spec = MartingaleSpec::variance_switching(rad(1.0), 0.6, 40).unwrap();
        let b = drift_process(&spec, 1.2);
        assert_eq!(b.lower, b.upper);
        let psi = cumulant_process(&spec, 1.2);
        let model = TiltedModel::new(&spec, 1.2).unwrap();
        for seed in 0..5 {
            let (path, p) = model.sample_path(&mut crate::rng::path_stream(seed, 0));
            assert!((p - psi.upper).abs() < 1e-12);
            let dec = conjugate_decomposition(&path, &spec, 1.2);
            assert!((dec.b_n - b.upper).abs() < 1e-12);
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{exact_log_tail, map_paths, run_estimator, EstimatorConfig, LatticeLaw, Method, SamplingConfig};
use crate::bounds::{eps_log_eps, gaussian_cdf, gaussian_tail, log_gaussian_tail, theorem1_log_upper, theorem2_log_lower, BoundConstants};
use crate::conditions::{certify, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::model::{sample_terminal, IncrementRule, MartingaleSpec, StepSampler};
use crate::rng::path_stream;
use crate::tilting::{drift_process, tilted_law};

/// `max_i value_i / bound_i`.
pub fn fit_constant(observed: &[(f64, f64)]) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::EmptyInput("no rows to fit a constant to".into()));
    }
    let mut c = 0.0_f64;
    for &(value, bound) in observed {
        if !(bound > 0.0) {
            return Err(Error::InvalidArgument(format!("bound expression must be > 0, got {bound}")));
        }
        c = c.max(value / bound);
    }
    Ok(c)
}

/// One threshold of a ratio experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub x: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub log_p: f64,
    pub gaussian_tail: f64,
    pub ratio: f64,
    pub log_ratio: f64,
    /// `x³ε + x²δ² + (1+x)(ε|ln ε| + δ)`.
    pub bound_expr: f64,
    pub theorem1_upper: f64,
    pub theorem2_lower: f64,
    /// Whether both one-sided envelopes, evaluated at the fitted constant, contain the ratio.
    pub within_envelope_at_fitted_c: bool,
    /// False when the event has probability zero (or no sampled hits).
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioExperiment {
    pub epsilon: f64,
    pub delta: f64,
    pub rows: Vec<RatioRow>,
    /// Smallest `c` with `|log ratio| <= c · bound_expr` on every feasible row.
    pub fitted_c: f64,
    /// First threshold where the one-sided envelopes at `fitted_c` fail.
    pub first_failure_x: Option<f64>,
}

fn bound_expression(x: f64, eps: f64, delta: f64) -> f64 {
    x.powi(3) * eps + x * x * delta * delta + (1.0 + x) * (eps_log_eps(eps) + delta)
}

/// `P(X_n > x)/(1 - Φ(x))` over a grid, with the fitted envelope constant.
pub fn ratio_experiment(
    spec: &MartingaleSpec,
    x_grid: &[f64],
    est: &EstimatorConfig,
    consts: &BoundConstants,
) -> Result<RatioExperiment> {
    if x_grid.is_empty() {
        return Err(Error::EmptyInput("empty x grid".into()));
    }
    let cert = certify(spec, DEFAULT_K_MAX)?;
    let (eps, delta) = (cert.epsilon, cert.delta);
    let mut rows = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (p_hat, std_err, log_p) = if est.method.is_exact() {
            let lp = exact_log_tail(spec, x, est.method)?;
            (lp.exp(), 0.0, lp)
        } else {
            let e = run_estimator(spec, x, est, consts.c_alpha)?;
            (e.p_hat, e.std_err, e.p_hat.ln())
        };
        let log_q = log_gaussian_tail(x);
        let log_ratio = log_p - log_q;
        rows.push(RatioRow {
            x,
            p_hat,
            std_err,
            log_p,
            gaussian_tail: gaussian_tail(x),
            ratio: log_ratio.exp(),
            log_ratio,
            bound_expr: bound_expression(x, eps, delta),
            theorem1_upper: theorem1_log_upper(x, eps, delta, consts.c_alpha).exp(),
            theorem2_lower: theorem2_log_lower(x, eps, delta, consts.c_alpha0).exp(),
            within_envelope_at_fitted_c: false,
            feasible: log_p.is_finite(),
        });
    }
    let observed: Vec<(f64, f64)> = rows.iter().filter(|r| r.feasible).map(|r| (r.log_ratio.abs(), r.bound_expr)).collect();
    if observed.is_empty() {
        return Err(Error::Infeasible("every threshold in the grid has zero estimated probability".into()));
    }
    let fitted_c = fit_constant(&observed)?;
    let mut first_failure_x = None;
    for r in rows.iter_mut().filter(|r| r.feasible) {
        let upper = theorem1_log_upper(r.x, eps, delta, fitted_c);
        let lower = theorem2_log_lower(r.x, eps, delta, fitted_c);
        // a non-positive lower factor makes the lower envelope vacuous
        let lower_ok = lower.is_nan() || r.log_ratio >= lower - 1e-12 * lower.abs().max(1.0);
        r.within_envelope_at_fitted_c = lower_ok && r.log_ratio <= upper + 1e-12 * upper.abs().max(1.0);
        if !r.within_envelope_at_fitted_c && first_failure_x.is_none() {
            first_failure_x = Some(r.x);
        }
    }
    Ok(RatioExperiment { epsilon: eps, delta, rows, fitted_c, first_failure_x })
}

/// One `n` (and tilt) of a rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub ks_distance: f64,
    pub bound_value: f64,
    pub fitted_c: f64,
    /// `exact` or `sampled` (DKW-corrected).
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub rows: Vec<RateRow>,
}

impl RateCurve {
    /// Largest row-wise fitted constant.
    pub fn fitted_c(&self) -> f64 {
        self.rows.iter().map(|r| r.fitted_c).fold(0.0, f64::max)
    }

    /// `max / min` of the row-wise fitted constants.
    pub fn spread(&self) -> f64 {
        let lo = self.rows.iter().map(|r| r.fitted_c).fold(f64::INFINITY, f64::min);
        self.fitted_c() / lo
    }
}

/// `sup_y |Φ(y/sd) - Φ(y)|`.
fn gaussian_scale_ks(sd: f64) -> f64 {
    if (sd - 1.0).abs() < 8.0 * f64::EPSILON {
        return 0.0;
    }
    // densities cross at y² = 2 sd² ln sd / (sd² - 1)
    let y = (2.0 * sd * sd * sd.ln() / (sd * sd - 1.0)).sqrt();
    (gaussian_cdf(y / sd) - gaussian_cdf(y)).abs()
}

fn total_variance(spec: &MartingaleSpec) -> f64 {
    let laws = spec.step_laws();
    match spec.rule() {
        IncrementRule::Iid { .. } => spec.n() as f64 * laws[0].variance(),
        IncrementRule::VarianceSwitching { .. } => (spec.n() / 2) as f64 * (laws[0].variance() + laws[1].variance()),
    }
}

// 95% DKW band half-width
fn dkw_half_width(samples: u64) -> f64 {
    ((2.0_f64 / 0.05).ln() / (2.0 * samples as f64)).sqrt()
}

fn sampled_ks(spec: &MartingaleSpec, sampling: &SamplingConfig) -> Result<f64> {
    let samplers: Vec<StepSampler> = spec.step_laws().iter().map(|l| l.sampler()).collect();
    let mut xs = map_paths(sampling.samples, sampling.threads, |i| sample_terminal(spec, &samplers, &mut path_stream(sampling.seed, i)))?;
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in xs.iter().enumerate() {
        let phi = gaussian_cdf(*x);
        d = d.max((i as f64 + 1.0) / m - phi).max(phi - i as f64 / m);
    }
    Ok(d + dkw_half_width(sampling.samples))
}

fn rate_row(spec: &MartingaleSpec, lambda: f64, ks: f64, method: &str) -> Result<RateRow> {
    let cert = certify(spec, DEFAULT_K_MAX)?;
    let bound_value = lambda * cert.epsilon + eps_log_eps(cert.epsilon) + cert.delta;
    Ok(RateRow {
        n: spec.n(),
        lambda,
        epsilon: cert.epsilon,
        delta: cert.delta,
        ks_distance: ks,
        bound_value,
        fitted_c: ks / bound_value,
        method: method.to_string(),
    })
}

/// Kolmogorov distance of `X_n` from `Φ` along `n_list`.
///
/// Gaussian and i.i.d. lattice models are exact; anything else needs `sampling`.
pub fn clt_rate_curve(spec: &MartingaleSpec, n_list: &[usize], sampling: Option<&SamplingConfig>) -> Result<RateCurve> {
    if n_list.is_empty() {
        return Err(Error::EmptyInput("empty n list".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = spec.with_n(n)?;
        let row = if s.base_distribution().is_gaussian() {
            rate_row(&s, 0.0, gaussian_scale_ks(total_variance(&s).sqrt()), "exact")?
        } else if s.is_iid() {
            let law = LatticeLaw::from_step_law(&s.step_laws()[0], n)?;
            rate_row(&s, 0.0, law.ks_to_gaussian(0.0, 1.0), "exact")?
        } else {
            let sampling = sampling.ok_or_else(|| Error::InvalidArgument("this model needs sampling for its KS distance".into()))?;
            rate_row(&s, 0.0, sampled_ks(&s, sampling)?, "sampled")?
        };
        rows.push(row);
    }
    Ok(RateCurve { rows })
}

/// Kolmogorov distance of `Y_n(λ) = X_n - B_n(λ)` under `P_λ` from `Φ`, for i.i.d. specs.
pub fn conjugate_clt_check(spec: &MartingaleSpec, lambda: f64, n_list: &[usize]) -> Result<RateCurve> {
    if !spec.is_iid() {
        return Err(Error::InvalidArgument("conjugate CLT check needs i.i.d. increments".into()));
    }
    if n_list.is_empty() {
        return Err(Error::EmptyInput("empty n list".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("tilt must be >= 0, got {lambda}")));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = spec.with_n(n)?;
        let law = tilted_law(&s.step_laws()[0], lambda);
        let ks = if s.base_distribution().is_gaussian() {
            gaussian_scale_ks((n as f64 * law.variance()).sqrt())
        } else {
            // B_n(0) = 0 exactly
            let b_n = if lambda == 0.0 { 0.0 } else { drift_process(&s, lambda).upper };
            LatticeLaw::from_tilted(&law, n)?.ks_to_gaussian(b_n, 1.0)
        };
        rows.push(rate_row(&s, lambda, ks, "exact")?);
    }
    Ok(RateCurve { rows })
}

/// Normalising sequence `a_n = n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnRule {
    pub exponent: f64,
}

impl Default for AnRule {
    fn default() -> Self {
        AnRule { exponent: 0.25 }
    }
}

impl AnRule {
    pub fn a_n(&self, n: usize) -> f64 {
        (n as f64).powf(self.exponent)
    }
}

/// One `n` of the moderate-deviation diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpRow {
    pub n: usize,
    pub a_n: f64,
    /// `a_n ε_n`, which must tend to zero.
    pub a_n_epsilon: f64,
    pub threshold: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub lambda_used: f64,
    /// `ln p̂ / a_n²`; `None` when `p̂ = 0`.
    pub log_p_over_an2: Option<f64>,
    /// Delta-method band `std_err / (p̂ a_n²)`.
    pub error_band: Option<f64>,
    /// Exact `ln P / a_n²` where an exact oracle exists.
    pub exact_log_p_over_an2: Option<f64>,
    pub target: f64,
    pub feasible: bool,
}

fn exact_oracle(spec: &MartingaleSpec) -> Option<Method> {
    if spec.base_distribution().is_gaussian() {
        Some(Method::ExactGaussian)
    } else if spec.is_iid() {
        Some(Method::ExactBinomial)
    } else {
        None
    }
}

/// `(1/a_n²) ln P(X_n > a_n x)` along `n_list`, against the limit `-x²/2`.
pub fn mdp_diagnostic(
    spec: &MartingaleSpec,
    rule: AnRule,
    x: f64,
    n_list: &[usize],
    est: &EstimatorConfig,
    c_alpha: f64,
) -> Result<Vec<MdpRow>> {
    if n_list.is_empty() {
        return Err(Error::EmptyInput("empty n list".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = spec.with_n(n)?;
        let a_n = rule.a_n(n);
        let a2 = a_n * a_n;
        let threshold = a_n * x;
        let cert = certify(&s, DEFAULT_K_MAX)?;
        let exact = exact_oracle(&s).and_then(|m| exact_log_tail(&s, threshold, m).ok()).filter(|v| v.is_finite());
        let (p_hat, std_err, lambda_used, log_p) = if est.method.is_exact() {
            let lp = exact_log_tail(&s, threshold, est.method)?;
            (lp.exp(), 0.0, 0.0, lp)
        } else {
            let e = run_estimator(&s, threshold, est, c_alpha)?;
            (e.p_hat, e.std_err, e.lambda_used, e.p_hat.ln())
        };
        let feasible = log_p.is_finite();
        rows.push(MdpRow {
            n,
            a_n,
            a_n_epsilon: a_n * cert.epsilon,
            threshold,
            p_hat,
            std_err,
            lambda_used,
            log_p_over_an2: feasible.then(|| log_p / a2),
            error_band: (feasible && !est.method.is_exact()).then(|| std_err / (p_hat * a2)),
            exact_log_p_over_an2: exact.map(|v| v / a2),
            target: -0.5 * x * x,
            feasible,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementDistribution;

    #[test]
    fn fit_constant_examples() {
        assert_eq!(fit_constant(&[(0.0, 1.0), (0.0, 2.0)]).unwrap(), 0.0);
        assert!((fit_constant(&[(0.3, 0.1)]).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(fit_constant(&[]), Err(Error::EmptyInput(_))));
        assert!(fit_constant(&[(1.0, 0.0)]).is_err());
    }

    #[test]
    fn gaussian_ratio_is_one() {
        let spec = MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 100, true).unwrap();
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let exp = ratio_experiment(&spec, &xs, &EstimatorConfig::exact(Method::ExactGaussian), &BoundConstants::default()).unwrap();
        assert!(exp.rows.iter().all(|r| (r.ratio - 1.0).abs() < 1e-10));
        assert_eq!(exp.fitted_c, 0.0);
    }

    #[test]
    fn ratio_at_zero_below_one_for_lattice() {
        let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 16, true).unwrap();
        let exp = ratio_experiment(&spec, &[0.0], &EstimatorConfig::exact(Method::ExactBinomial), &BoundConstants::default()).unwrap();
        let r = &exp.rows[0];
        assert!(r.ratio < 1.0);
        assert!(r.log_ratio.abs() <= r.bound_expr * exp.fitted_c + 1e-15);
    }

    #[test]
    fn rate_curve_small_cases() {
        let g = MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 10, true).unwrap();
        let c = clt_rate_curve(&g, &[10, 100], None).unwrap();
        assert!(c.rows.iter().all(|r| r.ks_distance == 0.0));
        let r = MartingaleSpec::iid(IncrementDistribution::rademacher(), 1, true).unwrap();
        let c = clt_rate_curve(&r, &[1], None).unwrap();
        assert!((c.rows[0].ks_distance - 0.341345).abs() < 1e-6);
        let row = &c.rows[0];
        assert!((row.fitted_c - row.ks_distance / (eps_log_eps(row.epsilon) + row.delta)).abs() < 1e-15);
    }

    #[test]
    fn conjugate_at_zero_equals_clt() {
        let r = MartingaleSpec::iid(IncrementDistribution::rademacher(), 10, true).unwrap();
        let a = clt_rate_curve(&r, &[50, 400], None).unwrap();
        let b = conjugate_clt_check(&r, 0.0, &[50, 400]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_scale_ks_closed_form() {
        let sd = 1.3_f64;
        let grid = (0..200_000).map(|i| i as f64 * 5e-5);
        let scan = grid.map(|y| (gaussian_cdf(y / sd) - gaussian_cdf(y)).abs()).fold(0.0, f64::max);
        assert!((gaussian_scale_ks(sd) - scan).abs() < 1e-9);
    }

    #[test]
    fn mdp_gaussian_value() {
        let spec = MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 10, true).unwrap();
        let rows = mdp_diagnostic(&spec, AnRule::default(), 1.0, &[10_000], &EstimatorConfig::exact(Method::ExactGaussian), 1.0).unwrap();
        let v = rows[0].log_p_over_an2.unwrap();
        assert!((v - (7.619_853_024_160_47e-24_f64).ln() / 100.0).abs() < 1e-9);
        assert!((v + 0.5323).abs() < 1e-3);
        let zero = mdp_diagnostic(&spec, AnRule::default(), 0.0, &[100], &EstimatorConfig::exact(Method::ExactGaussian), 1.0).unwrap();
        assert_eq!(zero[0].target, 0.0);
    }
}

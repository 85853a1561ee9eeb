//! Martingale-difference models.
//!
//! An [`IncrementDistribution`] is a centered one-step law with exact moment
//! access. A [`MartingaleSpec`] combines a horizon `n` with an increment rule
//! that may depend on the history of the partial sums.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-12;
// relative to one step's scale; far above accumulated rounding, far below any lattice spacing
const TIE_REL: f64 = 1e-9;

/// A finite support table `(value, prob)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteTable {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl FiniteTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Centered one-step law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawDistribution")]
pub enum IncrementDistribution {
    FiniteTable(FiniteTable),
    Gaussian { sigma2: f64 },
    ScaledRademacher { scale: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawDistribution {
    FiniteTable { values: Vec<f64>, probs: Vec<f64> },
    Gaussian { sigma2: f64 },
    ScaledRademacher { scale: f64 },
}

impl TryFrom<RawDistribution> for IncrementDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::FiniteTable { values, probs } => Self::finite_table(values, probs),
            RawDistribution::Gaussian { sigma2 } => Self::gaussian(sigma2),
            RawDistribution::ScaledRademacher { scale } => Self::scaled_rademacher(scale),
        }
    }
}

impl IncrementDistribution {
    /// Finite table that must already be centered.
    pub fn finite_table(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let table = validate_table(values, probs)?;
        let mean: f64 = table.iter().map(|(v, p)| v * p).sum();
        let scale = table.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if mean.abs() > MEAN_TOL * scale.max(1.0) {
            return Err(Error::InvalidDistribution(format!(
                "table mean is {mean}, expected 0 (use finite_table_centered to shift)"
            )));
        }
        Self::check_variance(IncrementDistribution::FiniteTable(table))
    }

    /// Finite table shifted by its mean.
    pub fn finite_table_centered(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let mut table = validate_table(values, probs)?;
        let mean: f64 = table.iter().map(|(v, p)| v * p).sum();
        for v in &mut table.values {
            *v -= mean;
        }
        Self::check_variance(IncrementDistribution::FiniteTable(table))
    }

    pub fn gaussian(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidDistribution(format!("gaussian sigma2 must be > 0, got {sigma2}")));
        }
        Ok(IncrementDistribution::Gaussian { sigma2 })
    }

    pub fn scaled_rademacher(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidDistribution(format!("rademacher scale must be > 0, got {scale}")));
        }
        Ok(IncrementDistribution::ScaledRademacher { scale })
    }

    pub fn rademacher() -> Self {
        IncrementDistribution::ScaledRademacher { scale: 1.0 }
    }

    pub fn standard_gaussian() -> Self {
        IncrementDistribution::Gaussian { sigma2: 1.0 }
    }

    fn check_variance(dist: Self) -> Result<Self> {
        let v = dist.variance();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidDistribution(format!("second moment must be finite and > 0, got {v}")));
        }
        Ok(dist)
    }

    /// `E η²`.
    pub fn variance(&self) -> f64 {
        match self {
            IncrementDistribution::FiniteTable(t) => t.iter().map(|(v, p)| p * v * v).sum(),
            IncrementDistribution::Gaussian { sigma2 } => *sigma2,
            IncrementDistribution::ScaledRademacher { scale } => scale * scale,
        }
    }

    /// Raw moment `E η^k`.
    pub fn moment(&self, k: u32) -> f64 {
        match self {
            IncrementDistribution::FiniteTable(t) => {
                if k % 2 == 1 && self.is_symmetric() {
                    0.0
                } else {
                    t.iter().map(|(v, p)| p * v.powi(k as i32)).sum()
                }
            }
            IncrementDistribution::Gaussian { sigma2 } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    double_factorial(k.saturating_sub(1)) * sigma2.sqrt().powi(k as i32)
                }
            }
            IncrementDistribution::ScaledRademacher { scale } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    scale.powi(k as i32)
                }
            }
        }
    }

    /// Absolute moment `E |η|^k`.
    pub fn abs_moment(&self, k: u32) -> f64 {
        match self {
            IncrementDistribution::FiniteTable(t) => t.iter().map(|(v, p)| p * v.abs().powi(k as i32)).sum(),
            IncrementDistribution::Gaussian { sigma2 } => gaussian_abs_moment(sigma2.sqrt(), k),
            IncrementDistribution::ScaledRademacher { scale } => scale.powi(k as i32),
        }
    }

    /// Law of `c·η`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            IncrementDistribution::FiniteTable(t) => IncrementDistribution::FiniteTable(FiniteTable {
                values: t.values.iter().map(|v| v * c).collect(),
                probs: t.probs.clone(),
            }),
            IncrementDistribution::Gaussian { sigma2 } => IncrementDistribution::Gaussian { sigma2: sigma2 * c * c },
            IncrementDistribution::ScaledRademacher { scale } => {
                IncrementDistribution::ScaledRademacher { scale: scale * c.abs() }
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            IncrementDistribution::FiniteTable(t) => {
                let mut pos: Vec<(f64, f64)> = t.iter().filter(|(v, _)| *v > 0.0).collect();
                let mut neg: Vec<(f64, f64)> = t.iter().filter(|(v, _)| *v < 0.0).map(|(v, p)| (-v, p)).collect();
                pos.sort_by(|a, b| a.0.total_cmp(&b.0));
                neg.sort_by(|a, b| a.0.total_cmp(&b.0));
                pos.len() == neg.len()
                    && pos.iter().zip(&neg).all(|(a, b)| (a.0 - b.0).abs() <= 1e-15 * a.0 && (a.1 - b.1).abs() <= 1e-15)
            }
            _ => true,
        }
    }

    /// Discrete atoms `(value, prob)`, `None` for continuous laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            IncrementDistribution::FiniteTable(t) => Some(t.iter().collect()),
            IncrementDistribution::ScaledRademacher { scale } => Some(vec![(-scale, 0.5), (*scale, 0.5)]),
            IncrementDistribution::Gaussian { .. } => None,
        }
    }

    /// Largest absolute support value, `None` for unbounded laws.
    pub fn max_abs(&self) -> Option<f64> {
        self.atoms().map(|a| a.iter().filter(|(_, p)| *p > 0.0).fold(0.0_f64, |m, (v, _)| m.max(v.abs())))
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, IncrementDistribution::Gaussian { .. })
    }

    pub(crate) fn sampler(&self) -> StepSampler {
        match self {
            IncrementDistribution::FiniteTable(t) => StepSampler::discrete(&t.values, &t.probs),
            IncrementDistribution::Gaussian { sigma2 } => StepSampler::Normal { mean: 0.0, sd: sigma2.sqrt() },
            IncrementDistribution::ScaledRademacher { scale } => {
                StepSampler::TwoPoint { hi: *scale, lo: -scale, p_hi: 0.5 }
            }
        }
    }
}

fn validate_table(values: Vec<f64>, probs: Vec<f64>) -> Result<FiniteTable> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(Error::InvalidDistribution(format!(
            "finite table needs matching non-empty values/probs, got {} and {}",
            values.len(),
            probs.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDistribution("finite table values must be finite".into()));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidDistribution("finite table probabilities must be >= 0".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, expected 1")));
    }
    Ok(FiniteTable { values, probs })
}

/// `k!!` with `0!! = (-1)!! = 1`.
pub(crate) fn double_factorial(k: u32) -> f64 {
    let mut acc = 1.0;
    let mut j = k;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

fn gaussian_abs_moment(sd: f64, k: u32) -> f64 {
    if k.is_multiple_of(2) {
        return double_factorial(k.saturating_sub(1)) * sd.powi(k as i32);
    }
    // E|Z|^(2m+1) = sqrt(2/pi) 2^m m!
    let m = (k - 1) / 2;
    let log_val = 0.5 * (2.0 / std::f64::consts::PI).ln() + m as f64 * std::f64::consts::LN_2 + ln_gamma(m as f64 + 1.0);
    log_val.exp() * sd.powi(k as i32)
}

/// Draws one increment from a (possibly tilted, uncentered) step law.
#[derive(Debug, Clone)]
pub(crate) enum StepSampler {
    TwoPoint { hi: f64, lo: f64, p_hi: f64 },
    Discrete { values: Vec<f64>, cumulative: Vec<f64> },
    Normal { mean: f64, sd: f64 },
}

impl StepSampler {
    pub(crate) fn discrete(values: &[f64], probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        StepSampler::Discrete { values: values.to_vec(), cumulative }
    }

    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            StepSampler::TwoPoint { hi, lo, p_hi } => {
                if rng.random::<f64>() < *p_hi {
                    *hi
                } else {
                    *lo
                }
            }
            StepSampler::Discrete { values, cumulative } => {
                let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let idx = cumulative.partition_point(|c| *c <= u).min(values.len() - 1);
                values[idx]
            }
            StepSampler::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

/// Increment rule of a martingale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum IncrementRule {
    /// `ξ_i = η_i`, or `η_i / sqrt(n E η²)` when normalized.
    Iid { dist: IncrementDistribution, normalized: bool },
    /// Paired steps with variances `(1 ± sρ)/n`, `s` the sign of the partial sum at the pair start.
    VarianceSwitching { base: IncrementDistribution, rho: f64 },
}

/// Horizon plus increment rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct MartingaleSpec {
    n: usize,
    rule: IncrementRule,
    #[serde(skip)]
    laws: Vec<IncrementDistribution>,
    /// Partial sums within this distance of a tie are treated as the tie.
    #[serde(skip)]
    tie: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    rule: IncrementRule,
}

impl TryFrom<RawSpec> for MartingaleSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        MartingaleSpec::new(raw.n, raw.rule)
    }
}

impl MartingaleSpec {
    pub fn iid(dist: IncrementDistribution, n: usize, normalized: bool) -> Result<Self> {
        Self::new(n, IncrementRule::Iid { dist, normalized })
    }

    pub fn variance_switching(base: IncrementDistribution, rho: f64, n: usize) -> Result<Self> {
        Self::new(n, IncrementRule::VarianceSwitching { base, rho })
    }

    pub fn new(n: usize, rule: IncrementRule) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("n must be positive".into()));
        }
        let laws = match &rule {
            IncrementRule::Iid { dist, normalized } => {
                if *normalized {
                    vec![dist.scaled(1.0 / (n as f64 * dist.variance()).sqrt())]
                } else {
                    vec![dist.clone()]
                }
            }
            IncrementRule::VarianceSwitching { base, rho } => {
                if !(0.0..1.0).contains(rho) {
                    return Err(Error::InvalidModel(format!("rho must lie in [0, 1), got {rho}")));
                }
                if !n.is_multiple_of(2) {
                    return Err(Error::InvalidModel(format!("variance switching needs even n, got {n}")));
                }
                let s2 = base.variance();
                let nf = n as f64;
                vec![
                    base.scaled(((1.0 + rho) / (nf * s2)).sqrt()),
                    base.scaled(((1.0 - rho) / (nf * s2)).sqrt()),
                ]
            }
        };
        let step = laws.iter().map(|l| l.variance().sqrt()).fold(0.0, f64::max);
        Ok(MartingaleSpec { n, rule, laws, tie: TIE_REL * step })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> &IncrementRule {
        &self.rule
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.rule, IncrementRule::Iid { .. })
    }

    /// The base one-step law the rule is built from.
    pub fn base_distribution(&self) -> &IncrementDistribution {
        match &self.rule {
            IncrementRule::Iid { dist, .. } => dist,
            IncrementRule::VarianceSwitching { base, .. } => base,
        }
    }

    /// Distinct step laws the rule can select (one for i.i.d., high/low variance for switching).
    pub fn step_laws(&self) -> &[IncrementDistribution] {
        &self.laws
    }

    /// Same horizon rule with a different `n`.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.rule.clone())
    }

    /// Index into [`step_laws`](Self::step_laws) for step `i` (1-based) given the
    /// sign of the partial sum at the current pair start.
    #[inline]
    pub(crate) fn law_index_for_sign(&self, i: usize, pair_sign_positive: bool) -> usize {
        match self.rule {
            IncrementRule::Iid { .. } => 0,
            IncrementRule::VarianceSwitching { .. } => {
                let odd = i % 2 == 1;
                if odd == pair_sign_positive {
                    0
                } else {
                    1
                }
            }
        }
    }

    /// Index of the step law governing step `i` (1-based) given `partial_sums[0..i]`.
    pub fn law_index(&self, i: usize, partial_sums: &[f64]) -> usize {
        assert!(i >= 1 && i <= self.n, "step index {i} outside 1..={}", self.n);
        match self.rule {
            IncrementRule::Iid { .. } => 0,
            IncrementRule::VarianceSwitching { .. } => {
                let start = if i % 2 == 1 { i - 1 } else { i - 2 };
                self.law_index_for_sign(i, self.sign_of(partial_sums[start]))
            }
        }
    }

    /// Conditional law of `ξ_i` given the history.
    pub fn step_law(&self, i: usize, partial_sums: &[f64]) -> &IncrementDistribution {
        &self.laws[self.law_index(i, partial_sums)]
    }

    /// Whether a partial sum counts as nonnegative for the switching rule.
    /// Sums that are zero in exact arithmetic can round to a tiny negative value.
    #[inline]
    pub(crate) fn sign_of(&self, partial_sum: f64) -> bool {
        partial_sum >= -self.tie
    }

    /// Whether a computed `X_n` lies strictly above threshold `x`, with
    /// rounding-level ties resolved as equality.
    #[inline]
    pub fn exceeds(&self, value: f64, x: f64) -> bool {
        value > self.tie_threshold(x)
    }

    /// `x` shifted up by the tie tolerance.
    #[inline]
    pub fn tie_threshold(&self, x: f64) -> f64 {
        x + self.tie.max(4.0 * f64::EPSILON * x.abs())
    }

    /// Whether `pair_start` marks the beginning of a new pair for step `i`.
    #[inline]
    pub(crate) fn starts_pair(&self, i: usize) -> bool {
        i % 2 == 1
    }

    /// Largest possible `|X_n|`, `None` for unbounded increments.
    pub fn max_abs_sum(&self) -> Option<f64> {
        let mut total = 0.0;
        for law in &self.laws {
            total = f64::max(total, law.max_abs()?);
        }
        Some(total * self.n as f64)
    }

    pub fn to_config(&self) -> ModelConfig {
        ModelConfig::from_spec(self)
    }
}

/// Sampled trajectory of a martingale.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub predictable_variances: Vec<f64>,
}

impl Path {
    pub fn n(&self) -> usize {
        self.increments.len()
    }

    pub fn terminal(&self) -> f64 {
        self.partial_sums[self.partial_sums.len() - 1]
    }

    pub fn quadratic_characteristic(&self, k: usize) -> f64 {
        quadratic_characteristic(self, k)
    }
}

/// Sample one path of `spec`.
pub fn sample_path<R: Rng + ?Sized>(spec: &MartingaleSpec, rng: &mut R) -> Path {
    let samplers: Vec<StepSampler> = spec.step_laws().iter().map(|l| l.sampler()).collect();
    let variances: Vec<f64> = spec.step_laws().iter().map(|l| l.variance()).collect();
    let n = spec.n();
    let mut increments = Vec::with_capacity(n);
    let mut partial_sums = Vec::with_capacity(n + 1);
    let mut predictable_variances = Vec::with_capacity(n);
    partial_sums.push(0.0);
    let mut x = 0.0;
    let mut sign = true;
    for i in 1..=n {
        if spec.starts_pair(i) {
            sign = spec.sign_of(x);
        }
        let idx = spec.law_index_for_sign(i, sign);
        let step = samplers[idx].draw(rng);
        x += step;
        increments.push(step);
        partial_sums.push(x);
        predictable_variances.push(variances[idx]);
    }
    Path { increments, partial_sums, predictable_variances }
}

/// Terminal value `X_n` without materialising the path.
pub(crate) fn sample_terminal<R: Rng + ?Sized>(spec: &MartingaleSpec, samplers: &[StepSampler], rng: &mut R) -> f64 {
    let mut x = 0.0;
    if spec.is_iid() {
        let s = &samplers[0];
        for _ in 0..spec.n() {
            x += s.draw(rng);
        }
        return x;
    }
    let mut sign = true;
    for i in 1..=spec.n() {
        if spec.starts_pair(i) {
            sign = spec.sign_of(x);
        }
        x += samplers[spec.law_index_for_sign(i, sign)].draw(rng);
    }
    x
}

/// Exact `E(ξ_i^k | F_{i-1})` given the partial sums `X_0..X_{i-1}`.
pub fn conditional_moment(spec: &MartingaleSpec, history: &[f64], i: usize, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    if i == 0 || i > spec.n() {
        return Err(Error::InvalidArgument(format!("step index {i} outside 1..={}", spec.n())));
    }
    if history.len() < i {
        return Err(Error::InvalidArgument(format!(
            "history has {} partial sums, step {i} needs {i}",
            history.len()
        )));
    }
    Ok(spec.step_law(i, history).moment(k))
}

/// `<X>_k`, the prefix sum of predictable variances.
pub fn quadratic_characteristic(path: &Path, k: usize) -> f64 {
    assert!(k <= path.n(), "index {k} exceeds horizon {}", path.n());
    path.predictable_variances[..k].iter().sum()
}

/// Key/value model description used by config files and JSON sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `rademacher`, `gaussian`, `finite` or `varswitch`.
    pub model: String,
    pub n: usize,
    #[serde(default = "default_true")]
    pub normalized: bool,
    #[serde(default)]
    pub params: ModelParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Base law for `varswitch`: `rademacher`, `gaussian` or `finite`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn base_dist(&self, kind: &str) -> Result<IncrementDistribution> {
        let p = &self.params;
        match kind {
            "rademacher" => IncrementDistribution::scaled_rademacher(p.scale.unwrap_or(1.0)),
            "gaussian" => IncrementDistribution::gaussian(p.sigma2.unwrap_or(1.0)),
            "finite" => {
                let values = p.values.clone().ok_or_else(|| Error::Config("finite model needs params.values".into()))?;
                let probs = p.probs.clone().ok_or_else(|| Error::Config("finite model needs params.probs".into()))?;
                IncrementDistribution::finite_table(values, probs)
            }
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn to_spec(&self) -> Result<MartingaleSpec> {
        match self.model.as_str() {
            "varswitch" => {
                let base = self.base_dist(self.params.base.as_deref().unwrap_or("rademacher"))?;
                let rho = self.params.rho.unwrap_or(0.5);
                MartingaleSpec::variance_switching(base, rho, self.n)
            }
            kind => MartingaleSpec::iid(self.base_dist(kind)?, self.n, self.normalized),
        }
    }

    pub fn from_spec(spec: &MartingaleSpec) -> Self {
        fn params_for(dist: &IncrementDistribution) -> (String, ModelParams) {
            match dist {
                IncrementDistribution::FiniteTable(t) => (
                    "finite".into(),
                    ModelParams { values: Some(t.values.clone()), probs: Some(t.probs.clone()), ..Default::default() },
                ),
                IncrementDistribution::Gaussian { sigma2 } => {
                    ("gaussian".into(), ModelParams { sigma2: Some(*sigma2), ..Default::default() })
                }
                IncrementDistribution::ScaledRademacher { scale } => {
                    ("rademacher".into(), ModelParams { scale: Some(*scale), ..Default::default() })
                }
            }
        }
        match spec.rule() {
            IncrementRule::Iid { dist, normalized } => {
                let (model, params) = params_for(dist);
                ModelConfig { model, n: spec.n(), normalized: *normalized, params }
            }
            IncrementRule::VarianceSwitching { base, rho } => {
                let (kind, mut params) = params_for(base);
                params.base = Some(kind);
                params.rho = Some(*rho);
                ModelConfig { model: "varswitch".into(), n: spec.n(), normalized: true, params }
            }
        }
    }
}

/// Parse a `value,prob` table (one atom per line, `#` comments allowed).
pub fn parse_finite_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values = Vec::new();
    let mut probs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case("value,prob") {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Config(format!("line {}: expected `value,prob`", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))
        };
        values.push(parse(parts.next())?);
        probs.push(parse(parts.next())?);
    }
    Ok((values, probs))
}

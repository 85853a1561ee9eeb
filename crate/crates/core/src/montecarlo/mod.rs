//! Tail estimators, exact oracles and the experiment drivers built on them.
//!
//! Every sampled path draws from its own ChaCha stream keyed by `(seed, path
//! index)`. Per-path values are collected in index order and reduced with a
//! pairwise tree sum, so results do not depend on the worker count.

mod curves;
mod estimators;
mod exact;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use curves::{
    clt_rate_curve, conjugate_clt_check, fit_constant, mdp_diagnostic, ratio_experiment, AnRule, MdpRow, RateCurve,
    RateRow, RatioExperiment, RatioRow,
};
pub use estimators::{
    crude_tail_estimate, likelihood_ratio_mean, resolve_lambda, run_estimator, tilted_tail_estimate, LambdaChoice,
    WeightCheck,
};
pub use exact::{exact_log_tail, exact_tail, lattice_ks, LatticeLaw, MAX_ENUMERATED_PATHS};

/// How a tail probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Crude,
    Tilted,
    ExactEnum,
    ExactBinomial,
    /// Closed form for Gaussian specs, where `X_n` is exactly centred normal.
    ExactGaussian,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Crude => "crude",
            Method::Tilted => "tilted",
            Method::ExactEnum => "exact_enum",
            Method::ExactBinomial => "exact_binomial",
            Method::ExactGaussian => "exact_gaussian",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Method::Crude | Method::Tilted)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crude" => Ok(Method::Crude),
            "tilted" => Ok(Method::Tilted),
            "exact_enum" => Ok(Method::ExactEnum),
            "exact_binomial" => Ok(Method::ExactBinomial),
            "exact_gaussian" => Ok(Method::ExactGaussian),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Estimate of `P(X_n > x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub x: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub n_samples: u64,
    pub method: Method,
    pub seed: u64,
    pub lambda_used: f64,
}

impl TailEstimate {
    pub(crate) fn exact(x: f64, p: f64, method: Method) -> Self {
        TailEstimate { x, p_hat: p.clamp(0.0, 1.0), std_err: 0.0, n_samples: 0, method, seed: 0, lambda_used: 0.0 }
    }
}

/// Sampling parameters shared by the stochastic estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub samples: u64,
    pub seed: u64,
    /// Worker cap; `None` reads `MLDE_THREADS`, then falls back to all cores.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl SamplingConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        SamplingConfig { samples, seed, threads: None }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

/// Estimator choice used by the experiment drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    #[serde(default)]
    pub lambda: LambdaChoice,
    pub sampling: SamplingConfig,
}

impl EstimatorConfig {
    pub fn exact(method: Method) -> Self {
        EstimatorConfig { method, lambda: LambdaChoice::Saddlepoint, sampling: SamplingConfig::new(0, 0) }
    }

    pub fn tilted(samples: u64, seed: u64) -> Self {
        EstimatorConfig { method: Method::Tilted, lambda: LambdaChoice::Saddlepoint, sampling: SamplingConfig::new(samples, seed) }
    }
}

/// Worker count: explicit value, else `MLDE_THREADS`, else rayon's default.
pub fn worker_count(explicit: Option<usize>) -> usize {
    if let Some(t) = explicit.filter(|t| *t > 0) {
        return t;
    }
    std::env::var("MLDE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|t| *t > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Evaluate `f(path_index)` for every path, in index order, on a bounded pool.
pub(crate) fn map_paths<T, F>(count: u64, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let workers = worker_count(threads);
    if workers == 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Sum with a fixed binary-tree association.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean and standard error from per-path values, reduced deterministically.
pub(crate) fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    let m1 = pairwise_sum(values) / n;
    let m2 = pairwise_sum(&squares) / n;
    (m1, std_err_from_moments(m1, m2, n))
}

pub(crate) fn std_err_from_moments(m1: f64, m2: f64, n: f64) -> f64 {
    ((m2 - m1 * m1).max(0.0) / n).sqrt()
}

use serde::{Deserialize, Serialize};

use super::{exact_tail, map_paths, mean_and_std_err, EstimatorConfig, Method, SamplingConfig, TailEstimate};
use crate::conditions::{certify, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::model::{sample_terminal, MartingaleSpec, StepSampler};
use crate::rng::path_stream;
use crate::tilting::{saddlepoint_lambda, solve_lambda_bar, TiltedModel};

const MIN_SAMPLES: u64 = 100;

/// Tilt used by the importance-sampling estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LambdaChoice {
    /// Root of `B_n(λ) = x`.
    #[default]
    Saddlepoint,
    /// The explicit `λ̄(x)` built from the certificate and `c_alpha`.
    Paper,
    Value(f64),
}

impl std::str::FromStr for LambdaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "saddlepoint" => Ok(LambdaChoice::Saddlepoint),
            "paper" => Ok(LambdaChoice::Paper),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(LambdaChoice::Value)
                .ok_or_else(|| Error::InvalidArgument(format!("lambda must be saddlepoint, paper or a value >= 0, got '{other}'"))),
        }
    }
}

impl std::fmt::Display for LambdaChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LambdaChoice::Saddlepoint => f.write_str("saddlepoint"),
            LambdaChoice::Paper => f.write_str("paper"),
            LambdaChoice::Value(v) => write!(f, "{v}"),
        }
    }
}

impl From<LambdaChoice> for String {
    fn from(c: LambdaChoice) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for LambdaChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Numeric tilt for threshold `x`.
pub fn resolve_lambda(spec: &MartingaleSpec, x: f64, choice: LambdaChoice, c_alpha: f64) -> Result<f64> {
    match choice {
        LambdaChoice::Value(v) => Ok(v),
        LambdaChoice::Saddlepoint => saddlepoint_lambda(spec, x),
        LambdaChoice::Paper => {
            if x <= 0.0 {
                return Ok(0.0);
            }
            let cert = certify(spec, DEFAULT_K_MAX)?;
            Ok(solve_lambda_bar(x, cert.epsilon, cert.delta, c_alpha))
        }
    }
}

fn check_samples(sampling: &SamplingConfig) -> Result<()> {
    if sampling.samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {}", sampling.samples)));
    }
    Ok(())
}

/// Fraction of paths with `X_n > x`.
pub fn crude_tail_estimate(spec: &MartingaleSpec, x: f64, sampling: &SamplingConfig) -> Result<TailEstimate> {
    check_samples(sampling)?;
    let samplers: Vec<StepSampler> = spec.step_laws().iter().map(|l| l.sampler()).collect();
    let hits = map_paths(sampling.samples, sampling.threads, |i| {
        let mut rng = path_stream(sampling.seed, i);
        if spec.exceeds(sample_terminal(spec, &samplers, &mut rng), x) {
            1.0
        } else {
            0.0
        }
    })?;
    let (p_hat, std_err) = mean_and_std_err(&hits);
    Ok(TailEstimate { x, p_hat, std_err, n_samples: sampling.samples, method: Method::Crude, seed: sampling.seed, lambda_used: 0.0 })
}

/// Mean of `exp(-λX_n + Ψ_n(λ)) 1{X_n > x}` over paths sampled under `P_λ`.
pub fn tilted_tail_estimate(spec: &MartingaleSpec, x: f64, lambda: f64, sampling: &SamplingConfig) -> Result<TailEstimate> {
    check_samples(sampling)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("tilt must be >= 0, got {lambda}")));
    }
    let model = TiltedModel::new(spec, lambda)?;
    let weights = map_paths(sampling.samples, sampling.threads, |i| {
        let mut rng = path_stream(sampling.seed, i);
        let (xn, psi) = model.sample_terminal(&mut rng);
        if spec.exceeds(xn, x) {
            (-lambda * xn + psi).exp()
        } else {
            0.0
        }
    })?;
    let (p_hat, std_err) = mean_and_std_err(&weights);
    Ok(TailEstimate {
        x,
        p_hat,
        std_err,
        n_samples: sampling.samples,
        method: Method::Tilted,
        seed: sampling.seed,
        lambda_used: lambda,
    })
}

/// Sample mean of the likelihood ratio under `P_λ`; should be 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCheck {
    pub lambda: f64,
    pub mean: f64,
    pub std_err: f64,
}

pub fn likelihood_ratio_mean(spec: &MartingaleSpec, lambda: f64, sampling: &SamplingConfig) -> Result<WeightCheck> {
    check_samples(sampling)?;
    let model = TiltedModel::new(spec, lambda)?;
    let weights = map_paths(sampling.samples, sampling.threads, |i| {
        let (xn, psi) = model.sample_terminal(&mut path_stream(sampling.seed, i));
        (-lambda * xn + psi).exp()
    })?;
    let (mean, std_err) = mean_and_std_err(&weights);
    Ok(WeightCheck { lambda, mean, std_err })
}

/// Dispatch on `cfg.method`.
pub fn run_estimator(spec: &MartingaleSpec, x: f64, cfg: &EstimatorConfig, c_alpha: f64) -> Result<TailEstimate> {
    match cfg.method {
        Method::Crude => crude_tail_estimate(spec, x, &cfg.sampling),
        Method::Tilted => {
            let lambda = resolve_lambda(spec, x, cfg.lambda, c_alpha)?;
            tilted_tail_estimate(spec, x, lambda, &cfg.sampling)
        }
        m => exact_tail(spec, x, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementDistribution;

    fn rad(n: usize) -> MartingaleSpec {
        MartingaleSpec::iid(IncrementDistribution::rademacher(), n, true).unwrap()
    }

    #[test]
    fn crude_sure_and_impossible_events() {
        let spec = rad(16);
        let s = SamplingConfig::new(1000, 1);
        assert_eq!(crude_tail_estimate(&spec, -5.0, &s).unwrap().p_hat, 1.0);
        assert_eq!(crude_tail_estimate(&spec, 4.0, &s).unwrap().p_hat, 0.0);
        assert!(crude_tail_estimate(&spec, 0.0, &SamplingConfig::new(10, 1)).is_err());
    }

    #[test]
    fn crude_matches_symmetry_oracle() {
        let est = crude_tail_estimate(&rad(16), 0.0, &SamplingConfig::new(100_000, 7)).unwrap();
        let exact: f64 = (1.0 - 12870.0 / 65536.0) / 2.0;
        assert!((exact - 0.40181).abs() < 1e-5);
        assert!((est.p_hat - exact).abs() < 4.0 * est.std_err);
    }

    #[test]
    fn threshold_on_an_atom_is_strict() {
        // X_n = 2 is an atom; float sums of ±0.1 can land a hair above it
        let spec = rad(100);
        let exact = exact_tail(&spec, 2.0, Method::ExactBinomial).unwrap().p_hat;
        let including_atom = exact_tail(&spec, 1.95, Method::ExactBinomial).unwrap().p_hat;
        assert!(including_atom > exact * 1.5);
        let s = SamplingConfig::new(100_000, 42);
        let crude = crude_tail_estimate(&spec, 2.0, &s).unwrap();
        assert!((crude.p_hat - exact).abs() < 4.0 * crude.std_err);
        let tilted = tilted_tail_estimate(&spec, 2.0, saddlepoint_lambda(&spec, 2.0).unwrap(), &s).unwrap();
        assert!((tilted.p_hat - exact).abs() < 4.0 * tilted.std_err, "{} vs {exact}", tilted.p_hat);
    }

    #[test]
    fn zero_tilt_is_crude() {
        for spec in [rad(12), MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 9, true).unwrap()] {
            let s = SamplingConfig::new(5000, 3);
            let a = crude_tail_estimate(&spec, 0.4, &s).unwrap();
            let b = tilted_tail_estimate(&spec, 0.4, 0.0, &s).unwrap();
            assert_eq!(a.p_hat, b.p_hat);
            assert_eq!(a.std_err, b.std_err);
        }
    }

    #[test]
    fn weights_average_to_one() {
        let spec = rad(20);
        for lambda in [0.5, 2.0] {
            let w = likelihood_ratio_mean(&spec, lambda, &SamplingConfig::new(20_000, 5)).unwrap();
            assert!((w.mean - 1.0).abs() < 3.5 * w.std_err.max(1e-12), "{w:?}");
        }
    }

    #[test]
    fn lambda_choice_parsing() {
        assert_eq!("paper".parse::<LambdaChoice>().unwrap(), LambdaChoice::Paper);
        assert_eq!("1.5".parse::<LambdaChoice>().unwrap(), LambdaChoice::Value(1.5));
        assert!("-1".parse::<LambdaChoice>().is_err());
        let json = serde_json::to_string(&LambdaChoice::Value(0.25)).unwrap();
        assert_eq!(serde_json::from_str::<LambdaChoice>(&json).unwrap(), LambdaChoice::Value(0.25));
    }
}

//! Sign-dependent variance switching: quadratic characteristic, tilted
//! processes and a sampled tail.
//!
//! cargo run --release --example variance_switching

use mlde::conditions::{certify, DEFAULT_K_MAX};
use mlde::model::sample_path;
use mlde::montecarlo::{resolve_lambda, tilted_tail_estimate, LambdaChoice, SamplingConfig};
use mlde::rng::path_stream;
use mlde::tilting::{cumulant_process, drift_process};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let spec = MartingaleSpec::variance_switching(IncrementDistribution::rademacher(), 0.6, 200)?;
    let cert = certify(&spec, DEFAULT_K_MAX)?;
    println!("epsilon = {:.5}, delta = {:.2e}", cert.epsilon, cert.delta);

    let path = sample_path(&spec, &mut path_stream(7, 0));
    for k in [1, 2, 50, 100, 200] {
        println!("<X>_{k:<3} = {:.6}", path.quadratic_characteristic(k));
    }
    for lambda in [0.5, 1.0, 2.0] {
        let b = drift_process(&spec, lambda);
        let psi = cumulant_process(&spec, lambda);
        println!("lambda = {lambda}: B_n in [{:.6}, {:.6}], Psi_n in [{:.6}, {:.6}]", b.lower, b.upper, psi.lower, psi.upper);
    }
    let x = 2.5;
    let lambda = resolve_lambda(&spec, x, LambdaChoice::Saddlepoint, 1.0)?;
    let est = tilted_tail_estimate(&spec, x, lambda, &SamplingConfig::new(100_000, 11))?;
    println!("P(X_n > {x}) = {:.6e} +- {:.1e}", est.p_hat, est.std_err);
    Ok(())
}

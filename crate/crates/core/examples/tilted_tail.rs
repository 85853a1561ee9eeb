//! Crude Monte Carlo against conjugate-measure importance sampling, with the
//! exact binomial tail as reference.
//!
//! cargo run --release --example tilted_tail

use mlde::montecarlo::{crude_tail_estimate, exact_tail, resolve_lambda, tilted_tail_estimate, LambdaChoice, Method, SamplingConfig};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 100, true)?;
    let sampling = SamplingConfig::new(100_000, 42);
    println!("{:>5} {:>13} {:>13} {:>11} {:>13} {:>11} {:>7}", "x", "exact", "crude", "se", "tilted", "se", "lambda");
    for x in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let exact = exact_tail(&spec, x, Method::ExactBinomial)?.p_hat;
        let crude = crude_tail_estimate(&spec, x, &sampling)?;
        let lambda = resolve_lambda(&spec, x, LambdaChoice::Saddlepoint, 1.0)?;
        let tilted = tilted_tail_estimate(&spec, x, lambda, &sampling)?;
        println!(
            "{x:>5.1} {exact:>13.6e} {:>13.6e} {:>11.2e} {:>13.6e} {:>11.2e} {lambda:>7.4}",
            crude.p_hat, crude.std_err, tilted.p_hat, tilted.std_err
        );
    }
    Ok(())
}

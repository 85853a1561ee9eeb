//! Moderate-deviation diagnostic: `(1/a_n²) ln P(X_n > a_n x)` against `-x²/2`.
//!
//! cargo run --release --example mdp

use mlde::montecarlo::{mdp_diagnostic, AnRule, EstimatorConfig};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 100, true)?;
    let rows = mdp_diagnostic(&spec, AnRule::default(), 1.0, &[100, 1000, 10_000], &EstimatorConfig::tilted(100_000, 2024), 1.0)?;
    println!("{:>7} {:>8} {:>12} {:>12} {:>10} {:>8}", "n", "a_n", "estimate", "exact", "band", "target");
    for r in rows {
        println!(
            "{:>7} {:>8.4} {:>12.6} {:>12.6} {:>10.2e} {:>8.3}",
            r.n,
            r.a_n,
            r.log_p_over_an2.unwrap_or(f64::NAN),
            r.exact_log_p_over_an2.unwrap_or(f64::NAN),
            r.error_band.unwrap_or(f64::NAN),
            r.target
        );
    }
    Ok(())
}

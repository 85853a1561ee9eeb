//! Kolmogorov distance to the normal law and its `ε|ln ε| + δ` scaling.
//!
//! cargo run --release --example clt_rate

use mlde::bounds::dominance_check;
use mlde::montecarlo::clt_rate_curve;
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 100, true)?;
    let curve = clt_rate_curve(&spec, &[100, 1000, 10_000], None)?;
    println!("{:>7} {:>10} {:>12} {:>12} {:>8} {:>9}", "n", "epsilon", "ks", "bound", "c", "dominance");
    for r in &curve.rows {
        // increments are bounded by 1/√n almost surely
        let dom = dominance_check(1.0 / (r.n as f64).sqrt(), r.n)?;
        println!("{:>7} {:>10.6} {:>12.4e} {:>12.4e} {:>8.4} {dom:>9}", r.n, r.epsilon, r.ks_distance, r.bound_value, r.fitted_c);
    }
    println!("spread of c across n: {:.3}", curve.spread());
    Ok(())
}

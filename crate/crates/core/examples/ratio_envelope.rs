//! Tail ratio against the standard normal and the fitted envelope constant,
//! from exact lattice tails.
//!
//! cargo run --release --example ratio_envelope

use mlde::bounds::BoundConstants;
use mlde::montecarlo::{ratio_experiment, EstimatorConfig, Method};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    for n in [400, 1600, 6400] {
        let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), n, true)?;
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).take_while(|x| *x * x * x / (n as f64).sqrt() < 30.0).collect();
        let exp = ratio_experiment(&spec, &xs, &EstimatorConfig::exact(Method::ExactBinomial), &BoundConstants::default())?;
        println!("n = {n}, epsilon = {:.5}, c* = {:.4}", exp.epsilon, exp.fitted_c);
        for r in exp.rows.iter().step_by(4) {
            println!("  x = {:>4.1}  ratio = {:>10.6}  log ratio = {:>9.5}  envelope = [{:.4}, {:.4}]", r.x, r.ratio, r.log_ratio, r.theorem2_lower, r.theorem1_upper);
        }
    }
    Ok(())
}

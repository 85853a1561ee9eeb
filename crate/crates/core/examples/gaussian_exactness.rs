//! Gaussian increments recover the normal tail exactly, so the fitted
//! envelope constant is zero.
//!
//! cargo run --example gaussian_exactness

use mlde::bounds::BoundConstants;
use mlde::montecarlo::{ratio_experiment, EstimatorConfig, Method};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let spec = MartingaleSpec::iid(IncrementDistribution::gaussian(2.0)?, 500, true)?;
    let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
    let exp = ratio_experiment(&spec, &xs, &EstimatorConfig::exact(Method::ExactGaussian), &BoundConstants::default())?;
    let worst = exp.rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    println!("max |ratio - 1| = {worst:.2e}, c* = {}", exp.fitted_c);
    Ok(())
}

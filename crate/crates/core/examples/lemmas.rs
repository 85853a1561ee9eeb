//! Exact moment, drift and cumulant bounds under the tilt, and the two
//! tilt-parameter solvers.
//!
//! cargo run --example lemmas

use mlde::conditions::{certify, DEFAULT_K_MAX};
use mlde::tilting::{check_lemma1, check_lemma2_lemma3, lambda_bar_residual, solve_lambda_bar, solve_lambda_under};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    for (name, dist) in [("rademacher", IncrementDistribution::rademacher()), ("gaussian", IncrementDistribution::standard_gaussian())] {
        let spec = MartingaleSpec::iid(dist, 400, true)?;
        let cert = certify(&spec, DEFAULT_K_MAX)?;
        let l1 = check_lemma1(&spec.step_laws()[0], cert.epsilon, DEFAULT_K_MAX);
        let grid: Vec<f64> = (0..=50).map(|i| 0.5 / cert.epsilon * i as f64 / 50.0).collect();
        let rows = check_lemma2_lemma3(&spec, &grid, 0.9, 1.0)?;
        println!(
            "{name}: moment ratios {:.3}/{:.3}, fitted c2 = {:.4}, c3 = {:.4}",
            l1.moment_ratio, l1.abs_moment_ratio, rows[0].fitted_c2, rows[0].fitted_c3
        );
    }

    let (eps, delta) = (0.02, 0.01);
    for x in [0.5, 2.0, 8.0] {
        let bar = solve_lambda_bar(x, eps, delta, 1.0);
        let under = solve_lambda_under(x, eps, delta, 0.5)?;
        println!("x = {x}: lambda_bar = {bar:.6} (residual {:.1e}), lambda_under = {under:.6}", lambda_bar_residual(bar, x, eps, delta, 1.0));
    }
    Ok(())
}

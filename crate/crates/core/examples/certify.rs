//! Certify the Bernstein constant and variance slack for a few models.
//!
//! cargo run --example certify

use mlde::conditions::{certify, check_variance_condition, DEFAULT_K_MAX};
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let models = [
        ("rademacher n=1200", MartingaleSpec::iid(IncrementDistribution::rademacher(), 1200, true)?),
        ("gaussian n=1200", MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 1200, true)?),
        (
            "three-point n=400",
            MartingaleSpec::iid(IncrementDistribution::finite_table(vec![-2.0, 0.0, 1.0], vec![0.2, 0.4, 0.4])?, 400, true)?,
        ),
        ("varswitch rho=0.5 n=400", MartingaleSpec::variance_switching(IncrementDistribution::rademacher(), 0.5, 400)?),
    ];
    println!("{:<26} {:>10} {:>10} {:>10} {:>4}", "model", "H", "epsilon", "delta", "k*");
    for (name, spec) in &models {
        let c = certify(spec, DEFAULT_K_MAX)?;
        println!("{name:<26} {:>10.6} {:>10.6} {:>10.2e} {:>4}", c.h, c.epsilon, c.delta, c.binding_k);
        assert!(check_variance_condition(spec, c.delta).holds);
    }
    Ok(())
}

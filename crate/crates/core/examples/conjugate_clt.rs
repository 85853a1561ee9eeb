//! Normal approximation of the centred martingale under the tilted measure.
//!
//! cargo run --release --example conjugate_clt

use mlde::montecarlo::conjugate_clt_check;
use mlde::{IncrementDistribution, MartingaleSpec};

fn main() -> mlde::Result<()> {
    let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 10_000, true)?;
    for lambda in [0.0, 0.5, 1.0, 2.0] {
        let curve = conjugate_clt_check(&spec, lambda, &[10_000])?;
        let r = &curve.rows[0];
        println!("lambda = {lambda:<4} ks = {:.4e}  bound = {:.4e}  c = {:.4}", r.ks_distance, r.bound_value, r.fitted_c);
    }
    Ok(())
}

//! Conversions between Bernstein, Sakhanenko and Cramér-type conditions.
//!
//! cargo run --example equivalences

use mlde::conditions::{
    check_cramer, check_factorial_moment, check_sakhanenko, cramer_constant, cramer_to_bernstein, minimal_bernstein_h,
    minimal_factorial_rho, sakhanenko_k_from_h, DEFAULT_K_MAX,
};
use mlde::IncrementDistribution;

fn main() -> mlde::Result<()> {
    let laws = [
        ("rademacher", IncrementDistribution::rademacher()),
        ("gaussian", IncrementDistribution::standard_gaussian()),
        ("skewed", IncrementDistribution::finite_table(vec![-2.0, 0.0, 1.0], vec![0.2, 0.4, 0.4])?),
    ];
    for (name, d) in &laws {
        let h = minimal_bernstein_h(d, DEFAULT_K_MAX)?;
        let k = sakhanenko_k_from_h(h.constant);
        let sak = check_sakhanenko(d, k)?;
        let rho = minimal_factorial_rho(d, DEFAULT_K_MAX)?;
        let fac = check_factorial_moment(d, rho.constant, DEFAULT_K_MAX)?;
        let c0 = 1.0;
        let c1 = cramer_constant(d, c0)?;
        let cr = check_cramer(d, c0)?;
        println!("{name}: H = {:.4} (k = {}), K = {k:.4}, sakhanenko {}, rho = {:.4} {}", h.constant, h.binding_k, sak.holds, rho.constant, fac.holds);
        println!("  cramer E e^(|x|/{c0}) = {c1:.4} ({}), implied H <= {:.4}", cr.holds, cramer_to_bernstein(c0, c1, d.variance()));
    }
    Ok(())
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Tests take a shared lock so runtime limits are measured without contention.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use mlde::bounds::{dominance_check, eps_log_eps, BoundConstants};
use mlde::conditions::certify;
use mlde::montecarlo::{
    clt_rate_curve, conjugate_clt_check, crude_tail_estimate, exact_log_tail, exact_tail, mdp_diagnostic, ratio_experiment,
    tilted_tail_estimate, AnRule, EstimatorConfig, Method, SamplingConfig, TailEstimate,
};
use mlde::output::csv_string;
use mlde::tilting::{
    check_lemma1, check_lemma2_lemma3, lambda_bar_lower_constant, lambda_bar_residual, lambda_under_residual,
    saddlepoint_lambda, solve_lambda_bar, solve_lambda_under, tilted_variance_constant,
};
use mlde::{Error, IncrementDistribution, MartingaleSpec};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: &str, ok: bool, detail: &str, elapsed: Duration) {
    let line = format!("criterion {id:>2}: {} ({:.2}s) {detail}\n", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    // written past the test harness capture so the summary is always visible
    let mut out = std::io::stdout();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn rademacher(n: usize) -> MartingaleSpec {
    MartingaleSpec::iid(IncrementDistribution::rademacher(), n, true).unwrap()
}

fn gaussian(n: usize) -> MartingaleSpec {
    MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), n, true).unwrap()
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

#[test]
fn criterion_01_gaussian_exactness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let xs: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
    let mut worst = 0.0_f64;
    let mut c_max = 0.0_f64;
    for n in [1, 7, 100, 1000, 10_000] {
        let exp = ratio_experiment(&gaussian(n), &xs, &EstimatorConfig::exact(Method::ExactGaussian), &BoundConstants::default())
            .unwrap();
        worst = exp.rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(worst, f64::max);
        c_max = c_max.max(exp.fitted_c);
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-10 && c_max == 0.0 && elapsed < Duration::from_secs(1);
    report("1", ok, &format!("max |ratio - 1| = {worst:e}, fitted c* = {c_max}"), elapsed);
    assert!(worst <= 1e-10, "ratio deviates by {worst}");
    assert_eq!(c_max, 0.0);
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

#[test]
fn criterion_02_oracle_equivalence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for normalized in [false, true] {
        for n in 1..=12 {
            let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), n, normalized).unwrap();
            let s = if normalized { 1.0 / (n as f64).sqrt() } else { 1.0 };
            // atoms are s(2k - n); thresholds sit halfway between them and just outside
            let mut xs: Vec<f64> = (0..n).map(|k| s * (2.0 * k as f64 - n as f64 + 1.0)).collect();
            xs.push(-s * (n as f64 + 1.0));
            xs.push(s * (n as f64 + 1.0));
            for x in xs {
                let a = exact_tail(&spec, x, Method::ExactEnum).unwrap().p_hat;
                let b = exact_tail(&spec, x, Method::ExactBinomial).unwrap().p_hat;
                worst = worst.max((a - b).abs());
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-14 && elapsed < Duration::from_secs(10);
    report("2", ok, &format!("{cases} thresholds, max |enum - binomial| = {worst:e}"), elapsed);
    assert!(worst <= 1e-14);
    assert!(elapsed < Duration::from_secs(10));
}

const C3_N: usize = 20;
const C3_X: f64 = 2.0;
const C3_SAMPLES: u64 = 100_000;
const C3_SEEDS: u64 = 200;

fn c3_runs(threads: usize) -> Vec<TailEstimate> {
    let spec = rademacher(C3_N);
    let lambda = saddlepoint_lambda(&spec, C3_X).unwrap();
    (0..C3_SEEDS)
        .map(|seed| {
            let s = SamplingConfig::new(C3_SAMPLES, 1000 + seed).with_threads(threads);
            tilted_tail_estimate(&spec, C3_X, lambda, &s).unwrap()
        })
        .collect()
}

#[test]
fn criterion_03a_tilted_unbiasedness() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let spec = rademacher(C3_N);
    let exact = exact_tail(&spec, C3_X, Method::ExactBinomial).unwrap().p_hat;
    // X_20 > 2 means at least 15 heads in 20 fair tosses
    let oracle: f64 = (15..=20u32).map(|k| binomial(20, k)).sum::<f64>() / 2f64.powi(20);
    let runs = c3_runs(1);
    let inside = runs.iter().filter(|e| (e.p_hat - exact).abs() <= 3.5 * e.std_err).count();
    let elapsed = start.elapsed();
    let ok = inside >= 198 && exact == oracle && elapsed < Duration::from_secs(120);
    report("3a", ok, &format!("{inside}/200 seeds within 3.5 std_err of {exact:.12}"), elapsed);
    assert!((exact - 0.020695).abs() < 5e-7);
    assert_eq!(exact, oracle);
    assert!(inside >= 198, "only {inside} of 200 seeds inside");
    assert!(elapsed < Duration::from_secs(120));
}

fn binomial(n: u32, k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * (n - k + j) as f64 / j as f64)
}

#[test]
fn criterion_03b_variance_reduction() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let spec = rademacher(C3_N);
    let lambda = saddlepoint_lambda(&spec, C3_X).unwrap();
    let s = SamplingConfig::new(C3_SAMPLES, 42).with_threads(1);
    let tilted = tilted_tail_estimate(&spec, C3_X, lambda, &s).unwrap();
    let crude = crude_tail_estimate(&spec, C3_X, &s).unwrap();
    let ratio = tilted.std_err / crude.std_err;
    let elapsed = start.elapsed();
    let ok = ratio < 0.1;
    report("3b", ok, &format!("std_err(tilted)/std_err(crude) = {ratio:.4} at lambda = {lambda:.4} (required < 0.1)"), elapsed);
    assert!(ratio < 0.1, "std_err ratio {ratio}");
}

#[test]
fn criterion_04_envelope_constant_bounded() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut cs = Vec::new();
    for n in [400, 1600, 6400] {
        let spec = rademacher(n);
        let eps = certify(&spec, 30).unwrap().epsilon;
        let top = 0.5 / eps;
        let xs: Vec<f64> = (0..=400).map(|i| top * i as f64 / 400.0).collect();
        let exp = ratio_experiment(&spec, &xs, &EstimatorConfig::exact(Method::ExactBinomial), &BoundConstants::default()).unwrap();
        cs.push(exp.fitted_c);
    }
    let elapsed = start.elapsed();
    let sp = spread(&cs);
    let ok = sp < 3.0 && cs.iter().all(|c| c.is_finite() && *c > 0.0) && elapsed < Duration::from_secs(60);
    report("4", ok, &format!("fitted c* = {cs:.4?}, spread {sp:.3}"), elapsed);
    assert!(sp < 3.0);
    assert!(elapsed < Duration::from_secs(60));
}

#[test]
fn criterion_05_clt_rate() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let curve = clt_rate_curve(&rademacher(100), &[100, 1000, 10_000], None).unwrap();
    let cs: Vec<f64> = curve.rows.iter().map(|r| r.fitted_c).collect();
    let mut dominance = Vec::new();
    for r in &curve.rows {
        // the comparison is stated for |ξ_i| <= ε, so it takes the almost-sure bound
        let bound = rademacher(r.n).step_laws()[0].max_abs().unwrap();
        match dominance_check(bound, r.n) {
            Ok(holds) => dominance.push(holds),
            Err(Error::PreconditionViolated(_)) => {}
            Err(e) => panic!("{e}"),
        }
        assert!((r.fitted_c - r.ks_distance / (eps_log_eps(r.epsilon) + r.delta)).abs() <= 1e-15 * r.fitted_c);
    }
    let elapsed = start.elapsed();
    let sp = spread(&cs);
    let ok = sp < 3.0 && !dominance.is_empty() && dominance.iter().all(|d| *d) && elapsed < Duration::from_secs(60);
    report("5", ok, &format!("fitted c = {cs:.4?}, spread {sp:.3}, dominance checks {dominance:?}"), elapsed);
    assert!(sp < 3.0);
    assert!(!dominance.is_empty() && dominance.iter().all(|d| *d));
    assert!(elapsed < Duration::from_secs(60));
}

#[test]
fn criterion_06_conjugate_clt() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let spec = rademacher(10_000);
    let mut cs = Vec::new();
    let mut bounded = true;
    for lambda in [0.0, 0.5, 1.0, 2.0] {
        let curve = conjugate_clt_check(&spec, lambda, &[10_000]).unwrap();
        let r = &curve.rows[0];
        bounded &= r.ks_distance <= r.fitted_c * r.bound_value * (1.0 + 1e-12);
        cs.push(r.fitted_c);
    }
    let base = clt_rate_curve(&spec, &[10_000], None).unwrap();
    let zero = conjugate_clt_check(&spec, 0.0, &[10_000]).unwrap();
    let identical = base == zero && base.rows[0].ks_distance.to_bits() == zero.rows[0].ks_distance.to_bits();
    let elapsed = start.elapsed();
    let sp = spread(&cs);
    let ok = bounded && identical && sp < 3.0 && elapsed < Duration::from_secs(60);
    report("6", ok, &format!("fitted c over lambda = {cs:.4?}, spread {sp:.3}, lambda=0 identical: {identical}"), elapsed);
    assert!(bounded && identical);
    assert!(sp < 3.0);
    assert!(elapsed < Duration::from_secs(60));
}

#[test]
fn criterion_07_lemma_checks() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in [("rademacher", rademacher(400)), ("gaussian", gaussian(400))] {
        let cert = certify(&spec, 30).unwrap();
        let top = 0.5 / cert.epsilon;
        let grid: Vec<f64> = (0..=200).map(|i| top * i as f64 / 200.0).collect();
        let first = check_lemma2_lemma3(&spec, &grid, 0.9, 1.0).unwrap();
        let (c2, c3) = (first[0].fitted_c2, first[0].fitted_c3);
        // residuals at the fitted constant must all be non-positive
        let c = c2.max(c3);
        let at_fit = check_lemma2_lemma3(&spec, &grid, 0.9, c).unwrap();
        let tol = |v: f64| 1e-12 * v.abs().max(1.0);
        let holds = at_fit.iter().all(|r| r.lemma2_residual <= tol(r.b_n) && r.lemma3_residual <= tol(r.psi_n));
        let lemma1 = spec.step_laws().iter().all(|l| check_lemma1(l, cert.epsilon, 30).holds);
        let tv = tilted_variance_constant(&spec, &grid).unwrap();
        ok &= holds && lemma1 && tv.is_finite();
        if name == "gaussian" {
            ok &= c2 == 0.0 && c3 == 0.0 && tv == 0.0;
        }
        lines.push(format!("{name}: c2 = {c2:.4}, c3 = {c3:.4}, tilted-variance c = {tv:.4}, lemma1 {lemma1}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(10);
    report("7", ok, &lines.join("; "), elapsed);
    assert!(ok);
}

#[test]
fn criterion_08_solver_residuals() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let xs: Vec<f64> = (0..10).map(|i| [0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0, 13.0, 25.0, 60.0][i]).collect();
    let epss: Vec<f64> = (0..10).map(|i| 10f64.powf(-4.0 + 3.7 * i as f64 / 9.0)).collect();
    let deltas: Vec<f64> = (0..10).map(|i| 0.5 * i as f64 / 9.0).collect();
    let cs: Vec<f64> = (0..10).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 9.0)).collect();
    let alpha = 0.9;
    let (mut points, mut worst, mut bracket_bad, mut bracket_checked) = (0, 0.0_f64, 0, 0);
    for &x in &xs {
        for &eps in &epss {
            for &delta in &deltas {
                for &c in &cs {
                    points += 1;
                    let scale = x.max(1.0);
                    let lb = solve_lambda_bar(x, eps, delta, c);
                    worst = worst.max(lambda_bar_residual(lb, x, eps, delta, c).abs() / scale);
                    if x <= alpha / eps {
                        bracket_checked += 1;
                        let c0 = lambda_bar_lower_constant(alpha, c);
                        if !(c0 * x <= lb * (1.0 + 1e-15) && lb <= x * (1.0 + 1e-15)) {
                            bracket_bad += 1;
                        }
                    }
                    if let Ok(lu) = solve_lambda_under(x, eps, delta, c) {
                        worst = worst.max(lambda_under_residual(lu, x, eps, delta, c).abs() / scale);
                        if (1.0..=0.01 / (c * eps)).contains(&x) {
                            bracket_checked += 1;
                            if !(x <= lu * (1.0 + 1e-15) && lu <= 2.0 * x) {
                                bracket_bad += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = points == 10_000 && worst <= 1e-12 && bracket_bad == 0 && elapsed < Duration::from_secs(5);
    report("8", ok, &format!("{points} grid points, max scaled residual {worst:e}, {bracket_bad}/{bracket_checked} bracket violations"), elapsed);
    assert!(ok);
}

const C9_SAMPLES: u64 = 100_000;

fn c9_rows(threads: usize) -> Vec<mlde::montecarlo::MdpRow> {
    let est = EstimatorConfig { sampling: SamplingConfig::new(C9_SAMPLES, 2024).with_threads(threads), ..EstimatorConfig::tilted(0, 0) };
    mdp_diagnostic(&rademacher(100), AnRule { exponent: 0.25 }, 1.0, &[10_000], &est, 1.0).unwrap()
}

#[test]
fn criterion_09_mdp_diagnostic() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let rows = c9_rows(1);
    let r = &rows[0];
    let value = r.log_p_over_an2.unwrap();
    let exact = exact_log_tail(&rademacher(10_000), 10.0, Method::ExactBinomial).unwrap() / 100.0;
    let within = ((value + 0.5) / 0.5).abs() <= 0.15;
    let agrees = (value - exact).abs() <= 3.5 * r.error_band.unwrap() + 1e-12;
    let elapsed = start.elapsed();
    let ok = within && agrees && r.a_n == 10.0 && elapsed < Duration::from_secs(300);
    report("9", ok, &format!("(1/a_n^2) ln p = {value:.5} +- {:.1e}, exact {exact:.5}, target -0.5", r.error_band.unwrap()), elapsed);
    assert!(within && agrees);
    assert!(elapsed < Duration::from_secs(300));
}

#[test]
fn criterion_10_determinism() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let same_c3 = csv_string(&c3_runs(1)).unwrap() == csv_string(&c3_runs(8)).unwrap();
    let spec = rademacher(C3_N);
    let crude = |t| crude_tail_estimate(&spec, C3_X, &SamplingConfig::new(C3_SAMPLES, 42).with_threads(t)).unwrap();
    let same_crude = csv_string(&[crude(1)]).unwrap() == csv_string(&[crude(8)]).unwrap();
    let same_c9 = csv_string(&c9_rows(1)).unwrap() == csv_string(&c9_rows(8)).unwrap();
    let elapsed = start.elapsed();
    let ok = same_c3 && same_crude && same_c9;
    report("10", ok, &format!("1 vs 8 workers identical: tilted {same_c3}, crude {same_crude}, mdp {same_c9}"), elapsed);
    assert!(ok);
}

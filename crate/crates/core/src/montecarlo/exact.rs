use libm::lgamma;

use super::{Method, TailEstimate};
use crate::bounds::{gaussian_cdf, gaussian_tail, log_gaussian_tail};
use crate::error::{Error, Result};
use crate::model::{IncrementDistribution, IncrementRule, MartingaleSpec};
use crate::tilting::TiltedLaw;

/// Largest number of weighted paths `exact_enum` will visit.
pub const MAX_ENUMERATED_PATHS: u64 = 1 << 24;

// largest n whose central binomial count fits a u128
const EXACT_COUNT_MAX_N: usize = 120;
// largest lattice built by direct convolution
const MAX_LATTICE_STATES: usize = 10_000_000;

/// Law of a sum of i.i.d. lattice steps, with atoms in increasing order.
#[derive(Debug, Clone)]
pub struct LatticeLaw {
    atoms: Vec<f64>,
    log_pmf: Vec<f64>,
    pmf: Vec<f64>,
    /// Exact path counts over `2^n` when the step is a fair coin and `n` is small.
    counts: Option<(Vec<u128>, i32)>,
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

impl LatticeLaw {
    /// Sum of `n` steps equal to `hi` with probability `p` and `lo` otherwise.
    pub fn binomial(lo: f64, hi: f64, p: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("two-point law needs lo < hi and p in [0, 1], got {lo}, {hi}, {p}")));
        }
        let atoms: Vec<f64> = (0..=n).map(|k| lo * (n - k) as f64 + hi * k as f64).collect();
        if p == 0.5 && n <= EXACT_COUNT_MAX_N {
            let mut row: Vec<u128> = vec![1];
            for _ in 0..n {
                let mut next = vec![1u128; row.len() + 1];
                for j in 1..row.len() {
                    next[j] = row[j - 1] + row[j];
                }
                row = next;
            }
            let scale = 2f64.powi(-(n as i32));
            let pmf: Vec<f64> = row.iter().map(|c| *c as f64 * scale).collect();
            let log_pmf = pmf.iter().map(|q| q.ln()).collect();
            return Ok(LatticeLaw { atoms, log_pmf, pmf, counts: Some((row, n as i32)) });
        }
        Ok(LatticeLaw::binomial_log_space(atoms, p, n))
    }

    fn binomial_log_space(atoms: Vec<f64>, p: f64, n: usize) -> Self {
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let lnf = lgamma(n as f64 + 1.0);
        let log_pmf: Vec<f64> = (0..=n)
            .map(|k| {
                let a = if k == 0 { 0.0 } else { k as f64 * lp };
                let b = if k == n { 0.0 } else { (n - k) as f64 * lq };
                lnf - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0) + a + b
            })
            .collect();
        let pmf = log_pmf.iter().map(|l| l.exp()).collect();
        LatticeLaw { atoms, log_pmf, pmf, counts: None }
    }

    /// Sum of `n` i.i.d. draws from a finite table whose values share a common spacing.
    pub fn convolution(values: &[f64], probs: &[f64], n: usize) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).filter(|(_, p)| *p > 0.0).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.len() == 1 {
            let v = pts[0].0 * n as f64;
            return Ok(LatticeLaw { atoms: vec![v], log_pmf: vec![0.0], pmf: vec![1.0], counts: None });
        }
        if pts.len() == 2 {
            return LatticeLaw::binomial(pts[0].0, pts[1].0, pts[1].1, n);
        }
        let vmin = pts[0].0;
        let step = pts.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::INFINITY, f64::min);
        let mut offsets = Vec::with_capacity(pts.len());
        for (v, _) in &pts {
            let r = (v - vmin) / step;
            if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::InvalidArgument("finite table values are not on a common lattice".into()));
            }
            offsets.push(r.round() as usize);
        }
        let width = *offsets.last().unwrap();
        let states = n.checked_mul(width).map(|s| s + 1).unwrap_or(usize::MAX);
        if states > MAX_LATTICE_STATES {
            return Err(Error::TooLarge(format!("lattice with {states} states exceeds {MAX_LATTICE_STATES}")));
        }
        let mut pmf = vec![1.0];
        for _ in 0..n {
            let mut next = vec![0.0; pmf.len() + width];
            for (j, q) in pmf.iter().enumerate() {
                for (o, (_, p)) in offsets.iter().zip(&pts) {
                    next[j + o] += q * p;
                }
            }
            pmf = next;
        }
        let atoms = (0..pmf.len()).map(|j| vmin * n as f64 + j as f64 * step).collect();
        let log_pmf = pmf.iter().map(|q| q.ln()).collect();
        Ok(LatticeLaw { atoms, log_pmf, pmf, counts: None })
    }

    /// Lattice law of the sum of `n` i.i.d. copies of `law`.
    pub fn from_step_law(law: &IncrementDistribution, n: usize) -> Result<Self> {
        match law {
            IncrementDistribution::ScaledRademacher { scale } => LatticeLaw::binomial(-scale, *scale, 0.5, n),
            IncrementDistribution::FiniteTable(t) => LatticeLaw::convolution(t.values(), t.probs(), n),
            IncrementDistribution::Gaussian { .. } => {
                Err(Error::InvalidArgument("gaussian increments have no lattice law".into()))
            }
        }
    }

    /// Lattice law of `n` i.i.d. steps from a tilted law.
    pub fn from_tilted(law: &TiltedLaw, n: usize) -> Result<Self> {
        match law {
            TiltedLaw::TwoPoint { hi, lo, p_hi } => LatticeLaw::binomial(*lo, *hi, *p_hi, n),
            TiltedLaw::Discrete { values, weights } => LatticeLaw::convolution(values, weights, n),
            TiltedLaw::Normal { .. } => Err(Error::InvalidArgument("gaussian increments have no lattice law".into())),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    fn first_above(&self, x: f64) -> usize {
        self.atoms.partition_point(|a| *a <= x)
    }

    /// `P(S > x)`.
    pub fn tail_above(&self, x: f64) -> f64 {
        let start = self.first_above(x);
        if let Some((counts, n)) = &self.counts {
            let total: u128 = counts[start..].iter().sum();
            return total as f64 * 2f64.powi(-n);
        }
        self.pmf[start..].iter().rev().sum::<f64>().min(1.0)
    }

    /// `ln P(S > x)`, finite even when the tail underflows.
    pub fn log_tail_above(&self, x: f64) -> f64 {
        let start = self.first_above(x);
        if self.counts.is_some() {
            return self.tail_above(x).ln();
        }
        log_sum_exp(self.log_pmf[start..].iter().copied()).min(0.0)
    }

    /// `sup_y |P((S - center)/scale <= y) - Φ(y)|`, attained at an atom or its left limit.
    pub fn ks_to_gaussian(&self, center: f64, scale: f64) -> f64 {
        let mut below = 0.0;
        let mut worst = 0.0_f64;
        let exact = self.counts.as_ref().map(|(c, n)| (c, 2f64.powi(-n)));
        let mut count_below: u128 = 0;
        for (k, a) in self.atoms.iter().enumerate() {
            let phi = gaussian_cdf((a - center) / scale);
            let at = match exact {
                Some((c, s)) => {
                    count_below += c[k];
                    count_below as f64 * s
                }
                None => below + self.pmf[k],
            };
            worst = worst.max((at - phi).abs()).max((below - phi).abs());
            below = at;
        }
        worst
    }
}

/// Exact KS distance of a lattice law recentred by `center` against `Φ`.
pub fn lattice_ks(law: &LatticeLaw, center: f64) -> f64 {
    law.ks_to_gaussian(center, 1.0)
}

fn impossible(spec: &MartingaleSpec, x: f64) -> bool {
    spec.max_abs_sum().is_some_and(|m| spec.tie_threshold(x) >= m)
}

fn gaussian_sd(spec: &MartingaleSpec) -> Option<f64> {
    if !spec.base_distribution().is_gaussian() {
        return None;
    }
    let laws = spec.step_laws();
    let total = match spec.rule() {
        IncrementRule::Iid { .. } => spec.n() as f64 * laws[0].variance(),
        IncrementRule::VarianceSwitching { .. } => (spec.n() / 2) as f64 * (laws[0].variance() + laws[1].variance()),
    };
    let sd = total.sqrt();
    // normalised specs carry unit variance up to rounding
    Some(if (sd - 1.0).abs() < 8.0 * f64::EPSILON { 1.0 } else { sd })
}

fn iid_lattice(spec: &MartingaleSpec) -> Result<LatticeLaw> {
    if !spec.is_iid() {
        return Err(Error::InvalidArgument("exact_binomial needs i.i.d. increments".into()));
    }
    LatticeLaw::from_step_law(&spec.step_laws()[0], spec.n())
}

fn enumerate(spec: &MartingaleSpec, x: f64) -> Result<f64> {
    let atoms: Vec<Vec<(f64, f64)>> = spec
        .step_laws()
        .iter()
        .map(|l| {
            l.atoms()
                .map(|a| a.into_iter().filter(|(_, p)| *p > 0.0).collect())
                .ok_or_else(|| Error::InvalidArgument("exact_enum needs discrete increments".into()))
        })
        .collect::<Result<_>>()?;
    let branching = atoms.iter().map(|a| a.len() as f64).fold(0.0, f64::max);
    let paths = branching.powi(spec.n() as i32);
    if paths > MAX_ENUMERATED_PATHS as f64 {
        return Err(Error::TooLarge(format!("{paths} weighted paths exceed 2^24")));
    }
    fn walk(spec: &MartingaleSpec, atoms: &[Vec<(f64, f64)>], i: usize, sum: f64, prob: f64, sign: bool, x: f64) -> f64 {
        if i > spec.n() {
            return if spec.exceeds(sum, x) { prob } else { 0.0 };
        }
        let sign = if spec.starts_pair(i) { spec.sign_of(sum) } else { sign };
        atoms[spec.law_index_for_sign(i, sign)]
            .iter()
            .map(|(v, p)| walk(spec, atoms, i + 1, sum + v, prob * p, sign, x))
            .sum()
    }
    Ok(walk(spec, &atoms, 1, 0.0, 1.0, true, x))
}

/// Exact `P(X_n > x)` by the requested oracle.
pub fn exact_tail(spec: &MartingaleSpec, x: f64, method: Method) -> Result<TailEstimate> {
    let p = match method {
        Method::ExactGaussian => {
            let sd = gaussian_sd(spec).ok_or_else(|| Error::InvalidArgument("exact_gaussian needs gaussian increments".into()))?;
            gaussian_tail(x / sd)
        }
        _ if impossible(spec, x) => 0.0,
        Method::ExactBinomial => iid_lattice(spec)?.tail_above(spec.tie_threshold(x)),
        Method::ExactEnum => enumerate(spec, x)?,
        m => return Err(Error::InvalidArgument(format!("{m} is not an exact method"))),
    };
    Ok(TailEstimate::exact(x, p, method))
}

/// Exact `ln P(X_n > x)`; `-inf` for impossible events.
pub fn exact_log_tail(spec: &MartingaleSpec, x: f64, method: Method) -> Result<f64> {
    match method {
        Method::ExactGaussian => {
            let sd = gaussian_sd(spec).ok_or_else(|| Error::InvalidArgument("exact_gaussian needs gaussian increments".into()))?;
            Ok(log_gaussian_tail(x / sd))
        }
        _ if impossible(spec, x) => Ok(f64::NEG_INFINITY),
        Method::ExactBinomial => Ok(iid_lattice(spec)?.log_tail_above(spec.tie_threshold(x))),
        Method::ExactEnum => Ok(enumerate(spec, x)?.ln()),
        m => Err(Error::InvalidArgument(format!("{m} is not an exact method"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncrementDistribution;

    #[test]
    fn enumeration_small_case() {
        let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 4, false).unwrap();
        assert_eq!(exact_tail(&spec, 3.0, Method::ExactEnum).unwrap().p_hat, 0.0625);
        assert_eq!(exact_tail(&spec, 3.0, Method::ExactBinomial).unwrap().p_hat, 0.0625);
        assert_eq!(exact_tail(&spec, 4.0, Method::ExactEnum).unwrap().p_hat, 0.0);
    }

    #[test]
    fn log_tail_matches_direct_tail() {
        let law = LatticeLaw::binomial(-0.1, 0.1, 0.5, 100).unwrap();
        let slow = LatticeLaw::binomial_log_space(law.atoms().to_vec(), 0.5, 100);
        for x in [0.05, 1.05, 3.05] {
            assert!((law.log_tail_above(x) - slow.log_tail_above(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn log_tail_survives_underflow() {
        let spec = MartingaleSpec::iid(IncrementDistribution::rademacher(), 6400, true).unwrap();
        let lt = exact_log_tail(&spec, 79.99, Method::ExactBinomial).unwrap();
        assert!((lt - (-6400.0 * std::f64::consts::LN_2)).abs() < 1e-8);
        assert_eq!(exact_log_tail(&spec, 80.0, Method::ExactBinomial).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn ks_single_step() {
        let law = LatticeLaw::binomial(-1.0, 1.0, 0.5, 1).unwrap();
        let ks = lattice_ks(&law, 0.0);
        assert!((ks - (gaussian_cdf(1.0) - 0.5)).abs() < 1e-15);
        assert!((ks - 0.341345).abs() < 1e-6);
    }

    #[test]
    fn ks_matches_grid_scan() {
        let law = LatticeLaw::binomial(-0.5, 0.5, 0.3, 5).unwrap();
        let center = 0.3;
        let ks = law.ks_to_gaussian(center, 0.9);
        let cdf = |y: f64| -> f64 {
            law.atoms().iter().zip(law.pmf()).filter(|(a, _)| (**a - center) / 0.9 <= y).map(|(_, p)| p).sum()
        };
        let mut grid: Vec<f64> = (0..=200_000).map(|i| -6.0 + i as f64 * 6e-5).collect();
        for a in law.atoms() {
            let y = (a - center) / 0.9;
            grid.extend([y, y - 1e-11]);
        }
        let scan = grid.iter().map(|y| (cdf(*y) - gaussian_cdf(*y)).abs()).fold(0.0, f64::max);
        assert!((ks - scan).abs() < 1e-9, "{ks} vs {scan}");
    }

    #[test]
    fn convolution_matches_enumeration() {
        let d = IncrementDistribution::finite_table_centered(vec![-1.0, 0.0, 2.0], vec![0.3, 0.5, 0.2]).unwrap();
        let spec = MartingaleSpec::iid(d, 7, false).unwrap();
        for x in [-3.5, -0.5, 0.5, 2.5, 6.5] {
            let a = exact_tail(&spec, x, Method::ExactBinomial).unwrap().p_hat;
            let b = exact_tail(&spec, x, Method::ExactEnum).unwrap().p_hat;
            assert!((a - b).abs() < 1e-14, "{x}: {a} {b}");
        }
    }

    #[test]
    fn gaussian_closed_form_and_errors() {
        let spec = MartingaleSpec::iid(IncrementDistribution::standard_gaussian(), 50, true).unwrap();
        assert_eq!(exact_tail(&spec, 1.0, Method::ExactGaussian).unwrap().p_hat, gaussian_tail(1.0));
        assert!(exact_tail(&spec, 1.0, Method::ExactBinomial).is_err());
        let big = MartingaleSpec::iid(IncrementDistribution::rademacher(), 30, true).unwrap();
        assert!(matches!(exact_tail(&big, 0.0, Method::ExactEnum), Err(Error::TooLarge(_))));
        let sw = MartingaleSpec::variance_switching(IncrementDistribution::standard_gaussian(), 0.5, 10).unwrap();
        assert_eq!(exact_tail(&sw, 2.0, Method::ExactGaussian).unwrap().p_hat, gaussian_tail(2.0));
    }
}

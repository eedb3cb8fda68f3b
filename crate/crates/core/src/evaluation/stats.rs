//! Average ranks, the Wilcoxon signed-rank test and Holm's step-down
//! correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::{Error, Result};

/// Largest non-zero pair count handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 25;
pub const MIN_PAIRS: usize = 5;

/// Mean ranks (1-based, ties share their mean) of `values`, ascending.
fn ranks_ascending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Per-alternative mean rank over groups (rows). The best alternative in a
/// group receives the highest rank, `m`.
pub fn average_ranks(scores: &[Vec<f64>], higher_better: bool) -> Result<Vec<f64>> {
    let m = scores
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("no groups to rank".into()))?;
    let mut sums = vec![0.0; m];
    for row in scores {
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("NaN score in rank table".into()));
        }
        let oriented: Vec<f64> = if higher_better {
            row.clone()
        } else {
            row.iter().map(|v| -v).collect()
        };
        for (s, r) in sums.iter_mut().zip(ranks_ascending(&oriented)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / scores.len() as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `a − b`.
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub zeros_discarded: usize,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1 by convention.
    pub all_zero: bool,
}

impl WilcoxonResult {
    /// More than a fifth of the pairs were dropped as ties at zero.
    pub fn many_zeros(&self) -> bool {
        let total = self.n + self.zeros_discarded;
        total > 0 && self.zeros_discarded * 5 > total
    }
}

/// Number of sign patterns whose doubled positive-rank sum equals each
/// value `0..=Σ ranks2`.
pub(crate) fn signed_rank_counts(ranks2: &[u64]) -> Vec<u64> {
    let total: u64 = ranks2.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided paired test on `a − b`, zero differences discarded.
///
/// Up to 25 non-zero pairs the p-value comes from the exact null
/// distribution over all sign patterns (ties handled with mid-ranks);
/// beyond that a normal approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("paired sample difference".into()));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let zeros = diffs.len() - nonzero.len();
    let n = nonzero.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            zeros_discarded: zeros,
            exact: true,
            all_zero: true,
        });
    }
    if n < MIN_PAIRS {
        return Err(Error::TooFewPairs(n));
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = ranks_ascending(&abs);
    // mid-ranks are multiples of ½
    let ranks2: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let w2: u64 = nonzero
        .iter()
        .zip(&ranks2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let counts = signed_rank_counts(&ranks2);
        let le: u64 = counts[..=w2 as usize].iter().sum();
        let ge: u64 = counts[w2 as usize..].iter().sum();
        let p = (2 * le.min(ge)) as f64 / (1u64 << n) as f64;
        return Ok(WilcoxonResult {
            statistic,
            p_value: p.min(1.0),
            n,
            zeros_discarded: zeros,
            exact: true,
            all_zero: false,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(WilcoxonResult {
        statistic,
        p_value: erfc(z / std::f64::consts::SQRT_2).min(1.0),
        n,
        zeros_discarded: zeros,
        exact: false,
        all_zero: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmResult {
    pub adjusted: Vec<f64>,
    pub reject: Vec<bool>,
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(pvalues: &[f64], alpha: f64) -> Result<HolmResult> {
    if let Some(p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (j, &i) in order.iter().enumerate() {
        let v = ((m - j) as f64 * pvalues[i]).min(1.0);
        running = running.max(v);
        adjusted[i] = running;
    }
    let reject = adjusted.iter().map(|&p| p <= alpha).collect();
    Ok(HolmResult { adjusted, reject })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(average_ranks(&[vec![0.9, 0.5, 0.7]], true).unwrap(), vec![3.0, 1.0, 2.0]);
        assert_eq!(
            average_ranks(&[vec![0.9, 0.9, 0.1, 0.5]], true).unwrap(),
            vec![3.5, 3.5, 1.0, 2.0]
        );
        assert_eq!(
            average_ranks(&[vec![0.4; 4], vec![0.2; 4]], true).unwrap(),
            vec![2.5; 4]
        );
        assert_eq!(average_ranks(&[vec![0.9, 0.5, 0.7]], false).unwrap(), vec![1.0, 3.0, 2.0]);
        assert!(average_ranks(&[vec![f64::NAN, 1.0]], true).is_err());
        assert!(average_ranks(&[], true).is_err());
    }

    #[test]
    fn all_positive_five() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 0.0625);
        assert!(r.exact);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.4, 0.5, 0.6, 0.7];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert!(r.all_zero);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = [0.2, 0.5, 0.1, 0.9, 0.4, 0.35, 0.8];
        let b = [0.3, 0.1, 0.15, 0.2, 0.45, 0.3, 0.1];
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.statistic + ba.statistic, 28.0);
    }

    #[test]
    fn too_few_pairs() {
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 0.0], &[0.0; 4]),
            Err(Error::TooFewPairs(3))
        ));
    }

    #[test]
    fn normal_approximation_regime() {
        // 30 positive differences: z is large, p tiny
        let a: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 30]).unwrap();
        assert!(!r.exact);
        assert_eq!(r.statistic, 465.0);
        // mean 232.5, sd sqrt(2363.75); z = (232.5-0.5)/48.618...
        let z = 232.0 / (30.0f64 * 31.0 * 61.0 / 24.0).sqrt();
        assert!((r.p_value - erfc(z / 2f64.sqrt())).abs() < 1e-15);
        assert!(r.p_value < 1e-5);
    }

    #[test]
    fn holm_examples() {
        let h = holm_adjust(&[0.01, 0.04, 0.03], 0.05).unwrap();
        let expected = [0.03, 0.06, 0.06];
        for (a, e) in h.adjusted.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert_eq!(h.reject, vec![true, false, false]);
        assert_eq!(holm_adjust(&[0.2], 0.05).unwrap().adjusted, vec![0.2]);
        assert_eq!(holm_adjust(&[0.0; 3], 0.05).unwrap().reject, vec![true; 3]);
        assert!(holm_adjust(&[1.2], 0.05).is_err());
    }

    #[test]
    fn counts_sum_to_all_patterns() {
        let c = signed_rank_counts(&[2, 4, 6, 8]);
        assert_eq!(c.iter().sum::<u64>(), 16);
        assert_eq!(c[20], 1);
    }
}

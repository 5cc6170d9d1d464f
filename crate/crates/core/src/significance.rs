//! Significance tests used to compare methods across repetitions.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{invalid, shape_mismatch, Result};

/// Marks results decided by a degenerate case rather than the test distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    AllDifferencesZero,
    ZeroVarianceEqualMeans,
    ZeroVarianceUnequalMeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub flag: Option<TestFlag>,
}

impl TestResult {
    fn flagged(p_value: f64, flag: TestFlag) -> Self {
        Self {
            statistic: if p_value == 1.0 { 0.0 } else { f64::INFINITY },
            p_value,
            flag: Some(flag),
        }
    }
}

/// Sample sizes up to this use the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// Two-sided Wilcoxon signed-rank test on paired samples; the statistic is `W+`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return shape_mismatch(format!("{} pairs", a.len()), b.len());
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() && !a.is_empty() {
        return Ok(TestResult::flagged(1.0, TestFlag::AllDifferencesZero));
    }
    if diffs.len() < 5 {
        return invalid(format!("need at least 5 nonzero differences, got {}", diffs.len()));
    }
    let n = diffs.len();
    let doubled = doubled_midranks(&diffs);
    let w2: usize = diffs.iter().zip(&doubled).filter(|(d, _)| **d > 0.0).map(|(_, r)| *r).sum();
    let statistic = w2 as f64 / 2.0;
    let p_value = if n <= WILCOXON_EXACT_MAX {
        exact_signed_rank_p(&doubled, w2)
    } else {
        normal_signed_rank_p(&diffs, &doubled, statistic)
    };
    Ok(TestResult {
        statistic,
        p_value,
        flag: None,
    })
}

/// Twice the average ranks of `|d|`, so tied ranks stay integral.
fn doubled_midranks(diffs: &[f64]) -> Vec<usize> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0usize; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // ranks start+1 ..= end, doubled average = start + 1 + end
        for &i in &order[start..end] {
            ranks[i] = start + 1 + end;
        }
        start = end;
    }
    ranks
}

fn exact_signed_rank_p(doubled: &[usize], w2: usize) -> f64 {
    let total: usize = doubled.iter().sum();
    // counts[s] = number of sign assignments whose positive doubled-rank sum is s
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled.len() as i32);
    let lower: f64 = counts[..=w2].iter().sum::<f64>() / all;
    let upper: f64 = counts[w2..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_signed_rank_p(diffs: &[f64], doubled: &[usize], statistic: f64) -> f64 {
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Welch's unequal-variance two-sample t-test (two-sided); statistic is `t` for `a − b`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return invalid("Welch test needs at least two values per sample");
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    if sa + sb == 0.0 {
        return Ok(if ma == mb {
            TestResult::flagged(1.0, TestFlag::ZeroVarianceEqualMeans)
        } else {
            TestResult::flagged(0.0, TestFlag::ZeroVarianceUnequalMeans)
        });
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    Ok(TestResult {
        statistic: t,
        p_value: student_t_two_sided(t, df),
        flag: None,
    })
}

/// Paired t-test on `a − b` (two-sided).
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return shape_mismatch(format!("{} pairs", a.len()), b.len());
    }
    if a.len() < 2 {
        return invalid("paired t-test needs at least two pairs");
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (m, v) = mean_var(&d);
    if v == 0.0 {
        return Ok(if m == 0.0 {
            TestResult::flagged(1.0, TestFlag::ZeroVarianceEqualMeans)
        } else {
            TestResult::flagged(0.0, TestFlag::ZeroVarianceUnequalMeans)
        });
    }
    let t = m / (v / d.len() as f64).sqrt();
    Ok(TestResult {
        statistic: t,
        p_value: student_t_two_sided(t, d.len() as f64 - 1.0),
        flag: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use approx::assert_abs_diff_eq;

    /// Enumerates all 2ⁿ sign flips of the observed |d|.
    fn brute_force_p(diffs: &[f64]) -> f64 {
        let n = diffs.len();
        let ranks = doubled_midranks(diffs);
        let observed: usize = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| ranks[i]).sum();
        let (mut le, mut ge) = (0usize, 0usize);
        for mask in 0u32..(1 << n) {
            let s: usize = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            if s <= observed {
                le += 1;
            }
            if s >= observed {
                ge += 1;
            }
        }
        let total = (1u64 << n) as f64;
        (2.0 * (le.min(ge) as f64) / total).min(1.0)
    }

    #[test]
    fn all_positive_six_pairs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [0.0; 6];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_abs_diff_eq!(r.p_value, 2.0 / 64.0, epsilon = 1e-15);
        assert_eq!(r.statistic, 21.0);
    }

    #[test]
    fn identical_samples_flagged() {
        let a = [0.3, 0.5, 0.1, 0.9, 0.2];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.flag, Some(TestFlag::AllDifferencesZero));
        assert!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn symmetric_differences_not_significant() {
        let a = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0];
        let r = wilcoxon_signed_rank(&a, &[0.0; 8]).unwrap();
        assert!(r.p_value > 0.9);
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..20 {
            let n = 5 + rng.next_below(8);
            let diffs: Vec<f64> = (0..n).map(|_| (rng.next_below(7) as f64 - 3.0).max(0.5) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 }).collect();
            let r = wilcoxon_signed_rank(&diffs, &vec![0.0; n]).unwrap();
            assert_abs_diff_eq!(r.p_value, brute_force_p(&diffs), epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_and_normal_agree_at_25() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..20 {
            let diffs: Vec<f64> = (0..25).map(|_| rng.normal(0.3, 1.0)).collect();
            let ranks = doubled_midranks(&diffs);
            let w2: usize = (0..25).filter(|&i| diffs[i] > 0.0).map(|i| ranks[i]).sum();
            let exact = exact_signed_rank_p(&ranks, w2);
            let approx = normal_signed_rank_p(&diffs, &ranks, w2 as f64 / 2.0);
            assert!((exact - approx).abs() < 0.02, "{exact} vs {approx}");
        }
    }

    #[test]
    fn welch_cases() {
        let a = [0.5, 0.6, 0.7];
        let r = welch_t_test(&a, &a).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
        let same = [2.0; 4];
        assert_eq!(welch_t_test(&same, &same).unwrap().flag, Some(TestFlag::ZeroVarianceEqualMeans));
        let r = welch_t_test(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!((r.p_value, r.flag), (0.0, Some(TestFlag::ZeroVarianceUnequalMeans)));
        let r = welch_t_test(&[0.0, 0.0, 0.0, 0.0], &[10.0, 10.0, 10.0, 10.0001]).unwrap();
        assert!(r.p_value < 1e-6);
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_reference_value() {
        // t = -1 / sqrt(1/3 + 1/3), df = 4 (equal n and variances); two-sided p from the t(4) cdf
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        let r = welch_t_test(&a, &b).unwrap();
        assert_abs_diff_eq!(r.statistic, -1.224744871391589, epsilon = 1e-12);
        // two-sided t(4) tail at |t| = 1.2247 (scipy.stats.t.sf): 0.287864
        assert_abs_diff_eq!(r.p_value, 0.287864, epsilon = 1e-5);
    }

    #[test]
    fn paired_t_cases() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.9, 1.8, 3.1, 3.7];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
        assert_eq!(paired_t_test(&a, &a).unwrap().flag, Some(TestFlag::ZeroVarianceEqualMeans));
    }
}

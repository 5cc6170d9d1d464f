//! Ranking and kernel-noise metrics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_mismatch, MklError, Result};
use crate::kernel::KernelMatrix;
use crate::labels::LabelVector;
use crate::rng::SplitMix64;

/// Non-interpolated average precision: mean over positives of the precision
/// at their rank. Scores are sorted descending; ties keep the original order.
pub fn average_precision(scores: &[f64], labels: &LabelVector) -> Result<f64> {
    if scores.len() != labels.len() {
        return shape_mismatch(format!("{} scores", labels.len()), scores.len());
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ap_from_order(&order, labels)
}

/// Average precision with ties broken uniformly at random.
pub fn average_precision_random_ties(scores: &[f64], labels: &LabelVector, rng: &mut SplitMix64) -> Result<f64> {
    if scores.len() != labels.len() {
        return shape_mismatch(format!("{} scores", labels.len()), scores.len());
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    rng.shuffle(&mut order);
    // stable sort keeps the shuffled order inside tied groups
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    ap_from_order(&order, labels)
}

fn ap_from_order(order: &[usize], labels: &LabelVector) -> Result<f64> {
    if labels.n_pos() == 0 {
        return Err(MklError::InvalidInput("average precision needs at least one positive".into()));
    }
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if labels.is_positive(i) {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / labels.n_pos() as f64)
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// `std(K | yᵢ = yⱼ) + std(K | yᵢ ≠ yⱼ)` over off-diagonal entries (population std).
pub fn conditional_std(k: &KernelMatrix, y: &LabelVector) -> Result<f64> {
    if k.n() != y.len() {
        return shape_mismatch(format!("{} labels", k.n()), y.len());
    }
    y.require_both_classes()?;
    let mut same = Vec::new();
    let mut diff = Vec::new();
    for i in 0..k.n() {
        let row = k.row(i);
        for j in 0..k.n() {
            if i == j {
                continue;
            }
            if y.get(i) == y.get(j) {
                same.push(row[j]);
            } else {
                diff.push(row[j]);
            }
        }
    }
    if same.is_empty() || diff.is_empty() {
        return Err(MklError::Degenerate(
            "conditional std needs at least two examples of one class and one of the other".into(),
        ));
    }
    Ok(population_std(&same) + population_std(&diff))
}

/// Per-unit scores of one method with their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method_name: String,
    pub per_unit_scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub n_units: usize,
}

impl EvalReport {
    pub fn new(method_name: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return invalid("report needs at least one score");
        }
        let (mean, std) = mean_and_sample_std(&scores);
        Ok(Self {
            method_name: method_name.into(),
            n_units: scores.len(),
            per_unit_scores: scores,
            mean,
            std,
        })
    }

    /// One row per unit: `unit,score`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,unit,score\n");
        for (i, s) in self.per_unit_scores.iter().enumerate() {
            out.push_str(&format!("{},{},{:.10}\n", self.method_name, i, s));
        }
        out
    }
}

pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::ideal_kernel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn labels(v: &[i8]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn perfect_ranking() {
        let y = labels(&[1, -1, 1, -1, -1]);
        assert_eq!(average_precision(&[0.9, 0.1, 0.8, 0.2, 0.3], &y).unwrap(), 1.0);
    }

    #[test]
    fn positive_second_of_two() {
        let y = labels(&[1, -1]);
        assert_eq!(average_precision(&[0.0, 1.0], &y).unwrap(), 0.5);
    }

    #[test]
    fn ties_break_by_index() {
        let y = labels(&[-1, 1]);
        assert_eq!(average_precision(&[1.0, 1.0], &y).unwrap(), 0.5);
        let y = labels(&[1, -1]);
        assert_eq!(average_precision(&[1.0, 1.0], &y).unwrap(), 1.0);
    }

    #[test]
    fn no_positives_rejected() {
        assert!(average_precision(&[0.1, 0.2], &labels(&[-1, -1])).is_err());
        assert!(average_precision(&[0.1], &labels(&[1, -1])).is_err());
    }

    #[test]
    fn single_positive_at_rank_r() {
        let n = 12;
        for r in 1..=n {
            let y = LabelVector::from_bools((0..n).map(|i| i == r - 1));
            let scores: Vec<f64> = (0..n).map(|i| -(i as f64)).collect();
            assert_abs_diff_eq!(average_precision(&scores, &y).unwrap(), 1.0 / r as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn random_scores_give_positive_ratio() {
        let n = 200;
        let y = LabelVector::from_bools((0..n).map(|i| i % 4 == 0));
        let mut rng = SplitMix64::new(77);
        let trials = 10_000;
        let mut total = 0.0;
        let zeros = vec![0.0; n];
        for _ in 0..trials {
            total += average_precision_random_ties(&zeros, &y, &mut rng).unwrap();
        }
        let mean = total / trials as f64;
        assert!((mean - 0.25).abs() < 0.02, "mean AP {mean}");
    }

    #[test]
    fn conditional_std_cases() {
        let balanced = labels(&[1, -1, 1, -1, -1, 1]);
        assert_abs_diff_eq!(conditional_std(&ideal_kernel(&balanced).unwrap(), &balanced).unwrap(), 0.0, epsilon = 1e-15);
        let y = labels(&[1, -1, 1, -1, -1]);
        let signs = KernelMatrix::from_fn(5, "yy", |i, j| f64::from(y.get(i) * y.get(j)));
        assert_eq!(conditional_std(&signs, &y).unwrap(), 0.0);
        // with unequal class sizes the rebalanced ideal kernel has two same-label levels
        assert!(conditional_std(&ideal_kernel(&y).unwrap(), &y).unwrap() > 0.0);
        assert_abs_diff_eq!(conditional_std(&KernelMatrix::constant(5, 0.7), &y).unwrap(), 0.0, epsilon = 1e-12);
        assert!(conditional_std(&KernelMatrix::identity(2), &labels(&[1, 1])).is_err());
        assert!(conditional_std(&KernelMatrix::identity(2), &labels(&[1, -1])).is_err());
    }

    #[test]
    fn conditional_std_double_loop() {
        let k = KernelMatrix::new(
            4,
            vec![
                1.0, 0.8, 0.1, 0.3, //
                0.8, 1.0, 0.2, 0.4, //
                0.1, 0.2, 1.0, 0.6, //
                0.3, 0.4, 0.6, 1.0,
            ],
            "h",
        )
        .unwrap();
        let y = labels(&[1, 1, -1, -1]);
        // same-label off-diagonal: (0,1),(1,0),(2,3),(3,2) -> 0.8,0.8,0.6,0.6
        // opposing: 0.1,0.3,0.2,0.4 each twice
        let same = [0.8, 0.8, 0.6, 0.6];
        let opp = [0.1, 0.3, 0.2, 0.4, 0.1, 0.2, 0.3, 0.4];
        let pstd = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
        };
        assert_abs_diff_eq!(conditional_std(&k, &y).unwrap(), pstd(&same) + pstd(&opp), epsilon = 1e-12);
        assert_abs_diff_eq!(conditional_std(&k, &y.flipped()).unwrap(), conditional_std(&k, &y).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn report_aggregates() {
        let r = EvalReport::new("m", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.mean, 2.5);
        assert_abs_diff_eq!(r.std, (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!(r.n_units, 4);
        assert!(EvalReport::new("m", vec![]).is_err());
    }

    proptest! {
        #[test]
        fn ap_invariant_under_monotone_transform(
            scores in proptest::collection::vec(-5.0f64..5.0, 2..40),
            seed in any::<u64>(),
        ) {
            let mut rng = SplitMix64::new(seed);
            let n = scores.len();
            let mut flags: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.4).collect();
            flags[0] = true;
            let y = LabelVector::from_bools(flags);
            let a = average_precision(&scores, &y).unwrap();
            let transformed: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() + 3.0).collect();
            let b = average_precision(&transformed, &y).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}

//! Kernel alignment and centered kernel-target alignment.

use rayon::prelude::*;

use crate::error::{invalid, shape_mismatch, MklError, Result};
use crate::kernel::KernelMatrix;
use crate::labels::LabelVector;

/// Cosine of the angle between two kernels under the Frobenius product.
pub fn kernel_alignment(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<f64> {
    if k1.n() != k2.n() {
        return shape_mismatch(format!("n = {}", k1.n()), format!("n = {}", k2.n()));
    }
    let (n1, n2) = (k1.frobenius_norm(), k2.frobenius_norm());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(MklError::Degenerate(format!(
            "alignment undefined for a zero matrix ('{}' or '{}')",
            k1.name(),
            k2.name()
        )));
    }
    let a = k1.frobenius_dot(k2)? / (n1 * n2);
    Ok(a.clamp(-1.0, 1.0))
}

/// Rebalanced label vector: `1/n₊` for positives, `-1/n₋` for negatives.
pub fn rebalanced_labels(y: &LabelVector) -> Result<Vec<f64>> {
    y.require_both_classes()?;
    let (p, q) = (1.0 / y.n_pos() as f64, -1.0 / y.n_neg() as f64);
    Ok(y.values().iter().map(|&v| if v > 0 { p } else { q }).collect())
}

/// Ideal target kernel `ỹỹᵀ`.
pub fn ideal_kernel(y: &LabelVector) -> Result<KernelMatrix> {
    let t = rebalanced_labels(y)?;
    Ok(KernelMatrix::from_fn(t.len(), "ideal", |i, j| t[i] * t[j]))
}

/// Alignment between `HKH` and the ideal kernel.
pub fn centered_kta(k: &KernelMatrix, y: &LabelVector) -> Result<f64> {
    if k.n() != y.len() {
        return shape_mismatch(format!("{} labels", k.n()), format!("{} labels", y.len()));
    }
    let ideal = ideal_kernel(y)?;
    let centered = k.center();
    if centered.frobenius_norm() <= 1e-12 * k.frobenius_norm().max(f64::MIN_POSITIVE) {
        return Err(MklError::Degenerate(format!(
            "kernel '{}' is constant; it centers to zero",
            k.name()
        )));
    }
    kernel_alignment(&centered, &ideal)
}

/// Pairwise alignments; `None` marks a degenerate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMatrix {
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
}

impl AlignmentMatrix {
    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.size() + j]
    }

    /// CSV with a header row of kernel names; missing values are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("kernel,");
        out.push_str(&self.names.join(","));
        out.push('\n');
        for i in 0..self.size() {
            out.push_str(&self.names[i]);
            for j in 0..self.size() {
                out.push(',');
                match self.get(i, j) {
                    Some(v) => out.push_str(&format!("{v:.10}")),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise alignments of the kernels; centers each kernel first when `centered`.
pub fn alignment_matrix(kernels: &[KernelMatrix], centered: bool) -> Result<AlignmentMatrix> {
    let m = kernels.len();
    if m == 0 {
        return invalid("alignment matrix needs at least one kernel");
    }
    let n = kernels[0].n();
    if let Some(bad) = kernels.iter().find(|k| k.n() != n) {
        return shape_mismatch(format!("n = {n}"), format!("n = {} for '{}'", bad.n(), bad.name()));
    }
    let prepared: Vec<KernelMatrix> = if centered {
        kernels.par_iter().map(KernelMatrix::center).collect()
    } else {
        kernels.to_vec()
    };
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let scores: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let zero = |k: &KernelMatrix| k.frobenius_norm() <= 1e-12 * kernels[0].frobenius_norm().max(1.0);
            if zero(&prepared[i]) || zero(&prepared[j]) {
                return None;
            }
            kernel_alignment(&prepared[i], &prepared[j]).ok()
        })
        .collect();
    let mut values = vec![None; m * m];
    for (&(i, j), s) in pairs.iter().zip(scores) {
        values[i * m + j] = s;
        values[j * m + i] = s;
    }
    Ok(AlignmentMatrix {
        names: kernels.iter().map(|k| k.name().to_string()).collect(),
        values,
    })
}

/// Centered KTA per kernel, optionally divided by the sum over kernels.
pub fn kta_profile(kernels: &[KernelMatrix], y: &LabelVector, normalize_to_sum_one: bool) -> Result<Vec<f64>> {
    y.require_both_classes()?;
    let scores = kernels
        .par_iter()
        .map(|k| centered_kta(k, y))
        .collect::<Result<Vec<f64>>>()?;
    if !normalize_to_sum_one {
        return Ok(scores);
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Err(MklError::Degenerate(format!(
            "KTA scores sum to {total:.3e}; cannot normalize to one"
        )));
    }
    Ok(scores.iter().map(|s| s / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gaussian_kernel, FeatureGroupMatrix};
    use crate::rng::SplitMix64;
    use approx::assert_abs_diff_eq;

    fn random_psd(n: usize, seed: u64) -> KernelMatrix {
        let mut rng = SplitMix64::new(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.standard_normal()).collect()).collect();
        gaussian_kernel(&FeatureGroupMatrix::from_rows(&rows, 0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn self_and_scaled_alignment() {
        let k = random_psd(5, 3);
        assert_abs_diff_eq!(kernel_alignment(&k, &k).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kernel_alignment(&k, &k.scaled(3.5)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_vs_ones() {
        let a = kernel_alignment(&KernelMatrix::identity(4), &KernelMatrix::constant(4, 1.0)).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
        assert!(kernel_alignment(&KernelMatrix::identity(4), &KernelMatrix::constant(4, 0.0)).is_err());
    }

    #[test]
    fn ideal_kernel_values() {
        let y = LabelVector::new(vec![1, -1]).unwrap();
        assert_eq!(ideal_kernel(&y).unwrap().as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        let y = LabelVector::new(vec![1, 1, -1]).unwrap();
        let k = ideal_kernel(&y).unwrap();
        assert_eq!(k.as_slice(), &[0.25, 0.25, -0.5, 0.25, 0.25, -0.5, -0.5, -0.5, 1.0]);
        let c = k.center();
        for (a, b) in c.as_slice().iter().zip(k.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert!(ideal_kernel(&LabelVector::new(vec![1, 1]).unwrap()).is_err());
    }

    #[test]
    fn kta_edge_cases() {
        let y = LabelVector::new(vec![1, -1, -1, 1, -1]).unwrap();
        let ideal = ideal_kernel(&y).unwrap();
        assert_abs_diff_eq!(centered_kta(&ideal, &y).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            centered_kta(&KernelMatrix::constant(5, 1.0), &y),
            Err(MklError::Degenerate(_))
        ));
    }

    #[test]
    fn kta_matches_hand_composed_oracle() {
        let k = random_psd(6, 11);
        let y = LabelVector::new(vec![1, 1, -1, -1, -1, 1]).unwrap();
        // H K H with explicit H, then cosine with ỹỹᵀ
        let n = 6;
        let h = |i: usize, j: usize| (if i == j { 1.0 } else { 0.0 }) - 1.0 / n as f64;
        let mut hk = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hk[i * n + j] = (0..n).map(|l| h(i, l) * k.get(l, j)).sum();
            }
        }
        let mut hkh = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hkh[i * n + j] = (0..n).map(|l| hk[i * n + l] * h(l, j)).sum();
            }
        }
        let yt: Vec<f64> = y.values().iter().map(|&v| if v > 0 { 1.0 / 3.0 } else { -1.0 / 3.0 }).collect();
        let (mut dot, mut nk, mut ny) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let t = yt[i] * yt[j];
                dot += hkh[i * n + j] * t;
                nk += hkh[i * n + j].powi(2);
                ny += t * t;
            }
        }
        let oracle = dot / (nk.sqrt() * ny.sqrt());
        assert_abs_diff_eq!(centered_kta(&k, &y).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn alignment_matrix_duplicates_and_blocks() {
        let k = random_psd(8, 1);
        let m = alignment_matrix(&[k.clone(), k.clone()], true).unwrap();
        for v in &m.values {
            assert_abs_diff_eq!(v.unwrap(), 1.0, epsilon = 1e-12);
        }

        let mut rng = SplitMix64::new(5);
        let base: Vec<Vec<f64>> = (0..20).map(|_| (0..2).map(|_| rng.standard_normal()).collect()).collect();
        let near: Vec<Vec<f64>> = base.iter().map(|r| r.iter().map(|v| v + 0.01 * rng.standard_normal()).collect()).collect();
        let other: Vec<Vec<f64>> = (0..20).map(|_| (0..2).map(|_| rng.standard_normal()).collect()).collect();
        let ks: Vec<KernelMatrix> = [base, near, other]
            .iter()
            .map(|r| gaussian_kernel(&FeatureGroupMatrix::from_rows(r, 0).unwrap(), 1.0).unwrap())
            .collect();
        let m = alignment_matrix(&ks, true).unwrap();
        let within = m.get(0, 1).unwrap();
        assert!(within > m.get(0, 2).unwrap());
        assert!(within > m.get(1, 2).unwrap());
        for i in 0..3 {
            assert_abs_diff_eq!(m.get(i, i).unwrap(), 1.0, epsilon = 1e-12);
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn alignment_matrix_marks_degenerate_pairs() {
        let k = random_psd(4, 2);
        let m = alignment_matrix(&[k, KernelMatrix::constant(4, 2.0)], true).unwrap();
        assert!(m.get(0, 0).is_some());
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(1, 1), None);
        assert!(m.to_csv().contains("NA"));
    }

    #[test]
    fn kta_profile_normalization() {
        let y = LabelVector::new(vec![1, -1, 1, -1, -1]).unwrap();
        let ideal = ideal_kernel(&y).unwrap();
        assert_eq!(kta_profile(&[ideal.clone()], &y, true).unwrap(), vec![1.0]);
        let ks = vec![ideal, random_psd(5, 9).scaled(2.0), ideal_kernel(&y).unwrap().scaled(0.5)];
        let prof = kta_profile(&ks, &y, true).unwrap();
        assert_abs_diff_eq!(prof.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}

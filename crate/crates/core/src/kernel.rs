//! Dense kernel matrices and the kernel constructions used by the learners.
//!
//! Storage is row-major `f64`. Square training kernels are [`KernelMatrix`];
//! rectangular train-by-test blocks used for prediction are [`CrossKernel`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_mismatch, MklError, Result};

/// Symmetry tolerance for square kernels.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Symmetric `n × n` similarity matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
    name: String,
    normalized: bool,
}

impl KernelMatrix {
    /// Builds a kernel from row-major entries, checking shape, finiteness and symmetry.
    pub fn new(n: usize, data: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if n == 0 {
            return invalid("kernel matrix must have n >= 1");
        }
        if data.len() != n * n {
            return shape_mismatch(format!("{} entries", n * n), format!("{} entries", data.len()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MklError::InvalidInput(format!(
                "non-finite kernel entry at ({}, {})",
                pos / n,
                pos % n
            )));
        }
        let k = Self {
            n,
            data,
            name: name.into(),
            normalized: false,
        };
        let asym = k.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return invalid(format!("kernel is not symmetric (max |K - K^T| = {asym:.3e})"));
        }
        Ok(k)
    }

    /// Builds from entries known to be symmetric and finite (internal constructions).
    pub(crate) fn from_parts(n: usize, data: Vec<f64>, name: String, normalized: bool) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self {
            n,
            data,
            name,
            normalized,
        }
    }

    pub fn from_fn(n: usize, name: impl Into<String>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::from_parts(n, data, name.into(), false)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, "identity", |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self::from_fn(n, "constant", |_, _| value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    /// Feature-space variance `(1/n) tr(K) - (1/n²) 1ᵀK1`.
    pub fn variance_statistic(&self) -> f64 {
        let n = self.n as f64;
        self.trace() / n - self.sum() / (n * n)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(
            self.n,
            self.data.iter().map(|v| v * factor).collect(),
            self.name.clone(),
            false,
        )
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Self::from_parts(m, data, self.name.clone(), self.normalized)
    }

    /// Rectangular block with rows `rows` and columns `cols`.
    pub fn cross_block(&self, rows: &[usize], cols: &[usize]) -> CrossKernel {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        CrossKernel {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Returns `K / v` with `v` the variance statistic, so that the result has
    /// unit variance in feature space.
    pub fn multiplicative_normalize(&self) -> Result<Self> {
        let v = self.normalization_factor()?;
        let mut out = self.scaled(1.0 / v);
        out.normalized = true;
        Ok(out)
    }

    /// The divisor used by [`Self::multiplicative_normalize`].
    pub fn normalization_factor(&self) -> Result<f64> {
        let v = self.variance_statistic();
        if !(v > 0.0) || !v.is_finite() {
            return Err(MklError::Degenerate(format!(
                "kernel '{}' has variance statistic {v:.3e}; normalization needs a positive value \
                 (constant or non-PSD kernel?)",
                self.name
            )));
        }
        Ok(v)
    }

    /// Centered kernel `HKH` with `H = I - (1/n) 11ᵀ`.
    pub fn center(&self) -> Self {
        let n = self.n;
        let nf = n as f64;
        let row_means: Vec<f64> = (0..n).map(|i| self.row(i).iter().sum::<f64>() / nf).collect();
        let grand = row_means.iter().sum::<f64>() / nf;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            let row = self.row(i);
            // K symmetric: column means equal row means.
            data.extend((0..n).map(|j| row[j] - row_means[i] - row_means[j] + grand));
        }
        let mut out = Self::from_parts(n, data, format!("centered({})", self.name), self.normalized);
        out.symmetrize();
        out
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Frobenius inner product.
    pub fn frobenius_dot(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return shape_mismatch(format!("n = {}", self.n), format!("n = {}", other.n));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }
}

/// Elementwise product of kernels sharing `n`.
pub fn product_kernel(kernels: &[&KernelMatrix]) -> Result<KernelMatrix> {
    let first = match kernels.first() {
        Some(k) => *k,
        None => return invalid("product kernel needs at least one factor"),
    };
    let n = first.n;
    let mut data = first.data.clone();
    for k in &kernels[1..] {
        if k.n != n {
            return shape_mismatch(format!("n = {n}"), format!("n = {} for '{}'", k.n, k.name));
        }
        for (d, v) in data.iter_mut().zip(&k.data) {
            *d *= v;
        }
    }
    let name = kernels.iter().map(|k| k.name.as_str()).collect::<Vec<_>>().join("*");
    Ok(KernelMatrix::from_parts(n, data, name, false))
}

/// Weighted sum `Σ w_j K_j` over kernels sharing `n`.
pub fn weighted_sum(kernels: &[KernelMatrix], weights: &[f64]) -> Result<KernelMatrix> {
    if kernels.is_empty() {
        return invalid("weighted sum needs at least one kernel");
    }
    if kernels.len() != weights.len() {
        return shape_mismatch(format!("{} weights", kernels.len()), format!("{} weights", weights.len()));
    }
    let n = kernels[0].n;
    let mut data = vec![0.0; n * n];
    for (k, &w) in kernels.iter().zip(weights) {
        if k.n != n {
            return shape_mismatch(format!("n = {n}"), format!("n = {}", k.n));
        }
        if w == 0.0 {
            continue;
        }
        for (d, v) in data.iter_mut().zip(&k.data) {
            *d += w * v;
        }
    }
    Ok(KernelMatrix::from_parts(n, data, "weighted_sum".into(), false))
}

/// Rectangular kernel block: rows index training examples, columns index
/// evaluation examples.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossKernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CrossKernel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape_mismatch(format!("{rows}x{cols} entries"), format!("{} entries", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite cross-kernel entry");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Block restricted to the given training rows (all columns kept).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn weighted_sum(blocks: &[CrossKernel], weights: &[f64]) -> Result<Self> {
        let first = match blocks.first() {
            Some(b) => b,
            None => return invalid("weighted sum needs at least one block"),
        };
        if blocks.len() != weights.len() {
            return shape_mismatch(format!("{} weights", blocks.len()), format!("{} weights", weights.len()));
        }
        let mut data = vec![0.0; first.data.len()];
        for (b, &w) in blocks.iter().zip(weights) {
            if b.rows != first.rows || b.cols != first.cols {
                return shape_mismatch(
                    format!("{}x{}", first.rows, first.cols),
                    format!("{}x{}", b.rows, b.cols),
                );
            }
            if w == 0.0 {
                continue;
            }
            for (d, v) in data.iter_mut().zip(&b.data) {
                *d += w * v;
            }
        }
        Ok(Self {
            rows: first.rows,
            cols: first.cols,
            data,
        })
    }
}

/// `n × d` feature block belonging to one feature group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroupMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    group_id: usize,
}

impl FeatureGroupMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>, group_id: usize) -> Result<Self> {
        if d == 0 {
            return invalid("feature dimension must be >= 1");
        }
        if values.len() != n * d {
            return shape_mismatch(format!("{n}x{d} values"), format!("{} values", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("feature matrix contains non-finite values");
        }
        Ok(Self { n, d, values, group_id })
    }

    pub fn from_rows(rows: &[Vec<f64>], group_id: usize) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return invalid("ragged feature rows");
        }
        Self::new(rows.len(), d, rows.concat(), group_id)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn group_id(&self) -> usize {
        self.group_id
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column-wise concatenation of feature blocks over the same examples.
    pub fn hconcat(blocks: &[&FeatureGroupMatrix], group_id: usize) -> Result<Self> {
        let n = match blocks.first() {
            Some(b) => b.n,
            None => return invalid("nothing to concatenate"),
        };
        if blocks.iter().any(|b| b.n != n) {
            return invalid("feature blocks disagree on n");
        }
        let d = blocks.iter().map(|b| b.d).sum();
        let mut values = Vec::with_capacity(n * d);
        for i in 0..n {
            for b in blocks {
                values.extend_from_slice(b.row(i));
            }
        }
        Self::new(n, d, values, group_id)
    }

    /// Rows selected by index, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n: idx.len(),
            d: self.d,
            values,
            group_id: self.group_id,
        }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return shape_mismatch(format!("d = {}", self.d), format!("d = {}", other.d));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Self {
            n: self.n + other.n,
            d: self.d,
            values,
            group_id: self.group_id,
        })
    }

    /// Population standard deviation per column.
    pub fn column_stds(&self) -> Vec<f64> {
        let nf = self.n as f64;
        (0..self.d)
            .map(|c| {
                let mean = (0..self.n).map(|i| self.row(i)[c]).sum::<f64>() / nf;
                let var = (0..self.n).map(|i| (self.row(i)[c] - mean).powi(2)).sum::<f64>() / nf;
                var.sqrt()
            })
            .collect()
    }
}

/// χ² distance `Σ_d (x_d - x'_d)² / (x_d + x'_d)`; terms with zero denominator contribute 0.
#[inline]
pub fn chi2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let s = x + y;
            if s > 0.0 {
                (x - y) * (x - y) / s
            } else {
                0.0
            }
        })
        .sum()
}

#[inline]
fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_nonnegative(x: &FeatureGroupMatrix) -> Result<()> {
    if let Some(pos) = x.values.iter().position(|&v| v < 0.0) {
        return invalid(format!(
            "chi2 kernel needs nonnegative features; found {} at row {}",
            x.values[pos],
            pos / x.d
        ));
    }
    Ok(())
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return invalid(format!("{name} must be positive and finite, got {value}"));
    }
    Ok(())
}

/// `K_ij = exp(-χ²(x_i, x_j) / bandwidth)`.
pub fn chi2_kernel(x: &FeatureGroupMatrix, bandwidth: f64) -> Result<KernelMatrix> {
    check_nonnegative(x)?;
    check_positive("bandwidth", bandwidth)?;
    Ok(KernelMatrix::from_fn(x.n, format!("chi2[g{}]", x.group_id), |i, j| {
        if i == j {
            1.0
        } else {
            (-chi2_distance(x.row(i), x.row(j)) / bandwidth).exp()
        }
    }))
}

/// χ² kernel between training rows `a` and evaluation rows `b`.
pub fn chi2_cross_kernel(a: &FeatureGroupMatrix, b: &FeatureGroupMatrix, bandwidth: f64) -> Result<CrossKernel> {
    check_nonnegative(a)?;
    check_nonnegative(b)?;
    check_positive("bandwidth", bandwidth)?;
    if a.d != b.d {
        return shape_mismatch(format!("d = {}", a.d), format!("d = {}", b.d));
    }
    let mut data = Vec::with_capacity(a.n * b.n);
    for i in 0..a.n {
        data.extend((0..b.n).map(|j| (-chi2_distance(a.row(i), b.row(j)) / bandwidth).exp()));
    }
    CrossKernel::new(a.n, b.n, data)
}

/// Mean χ² distance over unordered pairs `i < j`.
pub fn mean_chi2_bandwidth(x: &FeatureGroupMatrix) -> Result<f64> {
    check_nonnegative(x)?;
    mean_pairwise(x, chi2_distance)
}

/// Mean Euclidean distance over unordered pairs `i < j`; the default Gaussian width.
pub fn mean_euclidean_width(x: &FeatureGroupMatrix) -> Result<f64> {
    mean_pairwise(x, |a, b| squared_euclidean(a, b).sqrt())
}

/// Heuristic choice of the Gaussian width from training features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthRule {
    /// `width` = mean pairwise Euclidean distance.
    #[default]
    MeanDistance,
    /// `2·width²` = mean pairwise squared distance, i.e. `K = exp(−d²/mean d²)`.
    MeanSquaredDistance,
}

impl WidthRule {
    pub fn width(&self, x: &FeatureGroupMatrix) -> Result<f64> {
        match self {
            WidthRule::MeanDistance => mean_euclidean_width(x),
            WidthRule::MeanSquaredDistance => Ok((0.5 * mean_pairwise(x, squared_euclidean)?).sqrt()),
        }
    }
}

fn mean_pairwise(x: &FeatureGroupMatrix, dist: impl Fn(&[f64], &[f64]) -> f64) -> Result<f64> {
    if x.n < 2 {
        return invalid(format!("need at least two rows, got {}", x.n));
    }
    let mut total = 0.0;
    for i in 0..x.n {
        for j in (i + 1)..x.n {
            total += dist(x.row(i), x.row(j));
        }
    }
    let pairs = (x.n * (x.n - 1) / 2) as f64;
    let mean = total / pairs;
    if !(mean > 0.0) {
        return Err(MklError::Degenerate(
            "all rows identical: mean pairwise distance is zero".into(),
        ));
    }
    Ok(mean)
}

/// `K_ij = exp(-‖x_i - x_j‖² / (2 width²))`.
pub fn gaussian_kernel(x: &FeatureGroupMatrix, width: f64) -> Result<KernelMatrix> {
    check_positive("width", width)?;
    let gamma = 1.0 / (2.0 * width * width);
    Ok(KernelMatrix::from_fn(x.n, format!("gauss[g{}]", x.group_id), |i, j| {
        if i == j {
            1.0
        } else {
            (-gamma * squared_euclidean(x.row(i), x.row(j))).exp()
        }
    }))
}

pub fn gaussian_cross_kernel(a: &FeatureGroupMatrix, b: &FeatureGroupMatrix, width: f64) -> Result<CrossKernel> {
    check_positive("width", width)?;
    if a.d != b.d {
        return shape_mismatch(format!("d = {}", a.d), format!("d = {}", b.d));
    }
    let gamma = 1.0 / (2.0 * width * width);
    let mut data = Vec::with_capacity(a.n * b.n);
    for i in 0..a.n {
        let ra = a.row(i);
        data.extend((0..b.n).map(|j| (-gamma * squared_euclidean(ra, b.row(j))).exp()));
    }
    CrossKernel::new(a.n, b.n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fm(rows: &[&[f64]]) -> FeatureGroupMatrix {
        FeatureGroupMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), 0).unwrap()
    }

    #[test]
    fn chi2_identical_rows_give_one() {
        let x = fm(&[&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]]);
        let k = chi2_kernel(&x, 1.0).unwrap();
        assert_eq!(k.get(0, 1), 1.0);
    }

    #[test]
    fn chi2_orthogonal_histograms() {
        let x = fm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let k = chi2_kernel(&x, 2.0).unwrap();
        assert_abs_diff_eq!(k.get(0, 1), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(0, 1), 0.367879, epsilon = 1e-6);
    }

    #[test]
    fn chi2_matches_double_loop() {
        let x = fm(&[&[0.1, 0.0, 0.9], &[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0]]);
        let bw = 0.7;
        let k = chi2_kernel(&x, bw).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut d = 0.0;
                for c in 0..3 {
                    let (a, b) = (x.row(i)[c], x.row(j)[c]);
                    if a + b != 0.0 {
                        d += (a - b).powi(2) / (a + b);
                    }
                }
                assert_abs_diff_eq!(k.get(i, j), (-d / bw).exp(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn chi2_rejects_bad_input() {
        let neg = fm(&[&[-0.1, 1.0], &[0.0, 1.0]]);
        assert!(chi2_kernel(&neg, 1.0).is_err());
        let ok = fm(&[&[0.1, 1.0], &[0.0, 1.0]]);
        assert!(chi2_kernel(&ok, 0.0).is_err());
        assert!(chi2_kernel(&ok, -1.0).is_err());
    }

    #[test]
    fn chi2_bandwidth_means() {
        let two = fm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_abs_diff_eq!(mean_chi2_bandwidth(&two).unwrap(), 2.0, epsilon = 1e-15);
        // pairs: (0,1) = 2, (0,2) = 4, (1,2) = 2 + 4 = 6
        let three = fm(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 4.0]]);
        assert_abs_diff_eq!(mean_chi2_bandwidth(&three).unwrap(), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn chi2_bandwidth_errors() {
        assert!(mean_chi2_bandwidth(&fm(&[&[1.0, 2.0]])).is_err());
        assert!(matches!(
            mean_chi2_bandwidth(&fm(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]])),
            Err(MklError::Degenerate(_))
        ));
    }

    #[test]
    fn gaussian_values() {
        let x = fm(&[&[0.0], &[2.0]]);
        let k = gaussian_kernel(&x, 2.0).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert_abs_diff_eq!(k.get(0, 1), (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(0, 1), 0.606531, epsilon = 1e-6);
        assert!(gaussian_kernel(&x, 0.0).is_err());
    }

    #[test]
    fn gaussian_kernel_is_psd() {
        let x = fm(&[&[0.0, 1.0], &[0.3, -0.2], &[1.5, 0.7], &[-0.4, 0.1], &[2.0, 2.0]]);
        let k = gaussian_kernel(&x, 0.8).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(5, 5, k.as_slice());
        let eig = m.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-9));
    }

    #[test]
    fn product_identities() {
        let x = fm(&[&[0.1, 0.9], &[0.4, 0.6], &[0.7, 0.3]]);
        let k = chi2_kernel(&x, 0.5).unwrap();
        let single = product_kernel(&[&k]).unwrap();
        assert_eq!(single.as_slice(), k.as_slice());
        let ones = KernelMatrix::constant(3, 1.0);
        let p = product_kernel(&[&k, &ones]).unwrap();
        assert_eq!(p.as_slice(), k.as_slice());
        assert!(product_kernel(&[&k, &KernelMatrix::identity(2)]).is_err());
        assert!(product_kernel(&[]).is_err());
    }

    #[test]
    fn product_of_chi2_equals_concatenated_blocks() {
        let a = fm(&[&[0.1, 0.9], &[0.4, 0.6], &[0.7, 0.3], &[0.0, 1.0]]);
        let b = fm(&[&[0.3, 0.3, 0.4], &[0.0, 0.5, 0.5], &[1.0, 0.0, 0.0], &[0.2, 0.2, 0.6]]);
        let (bw_a, bw_b) = (0.8, 1.3);
        let prod = product_kernel(&[&chi2_kernel(&a, bw_a).unwrap(), &chi2_kernel(&b, bw_b).unwrap()]).unwrap();
        let cat = FeatureGroupMatrix::hconcat(&[&a, &b], 9).unwrap();
        // concatenated features with per-block bandwidths
        for i in 0..4 {
            for j in 0..4 {
                let (ri, rj) = (cat.row(i), cat.row(j));
                let d = chi2_distance(&ri[..2], &rj[..2]) / bw_a + chi2_distance(&ri[2..], &rj[2..]) / bw_b;
                assert_abs_diff_eq!(prod.get(i, j), (-d).exp(), epsilon = 1e-12);
            }
        }
        assert_eq!(prod.name(), "chi2[g0]*chi2[g0]");
    }

    #[test]
    fn normalize_identity() {
        let k = KernelMatrix::identity(2);
        assert_abs_diff_eq!(k.variance_statistic(), 0.5, epsilon = 1e-15);
        let out = k.multiplicative_normalize().unwrap();
        assert_eq!(out.as_slice(), &[2.0, 0.0, 0.0, 2.0]);
        assert!(out.is_normalized());
        assert_abs_diff_eq!(out.variance_statistic(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_constant_fails() {
        let err = KernelMatrix::constant(3, 1.0).multiplicative_normalize().unwrap_err();
        assert!(matches!(err, MklError::Degenerate(_)));
    }

    #[test]
    fn center_constant_is_zero_and_idempotent() {
        let c = KernelMatrix::constant(4, 1.0).center();
        assert!(c.as_slice().iter().all(|v| v.abs() < 1e-15));
        let x = fm(&[&[0.0, 1.0], &[0.3, -0.2], &[1.5, 0.7], &[-0.4, 0.1]]);
        let k = gaussian_kernel(&x, 0.8).unwrap();
        let c1 = k.center();
        for i in 0..4 {
            assert!(c1.row(i).iter().sum::<f64>().abs() < 1e-9);
        }
        let c2 = c1.center();
        for (a, b) in c1.as_slice().iter().zip(c2.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn constructor_checks() {
        assert!(KernelMatrix::new(0, vec![], "x").is_err());
        assert!(KernelMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0], "x").is_err());
        assert!(KernelMatrix::new(2, vec![1.0, f64::NAN, f64::NAN, 1.0], "x").is_err());
        assert!(KernelMatrix::new(2, vec![1.0; 3], "x").is_err());
        assert!(KernelMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0], "x").is_ok());
    }

    #[test]
    fn cross_block_matches_entries() {
        let k = KernelMatrix::from_fn(4, "k", |i, j| (i * 10 + j) as f64 + (j * 10 + i) as f64);
        let c = k.cross_block(&[0, 2], &[1, 3, 0]);
        assert_eq!((c.rows(), c.cols()), (2, 3));
        assert_eq!(c.get(1, 1), k.get(2, 3));
        let sub = k.submatrix(&[3, 1]);
        assert_eq!(sub.get(0, 1), k.get(3, 1));
    }
}

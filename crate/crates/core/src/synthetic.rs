//! Synthetic benchmarks with disjoint informative subsets.
//!
//! Each feature group `k` has an informative subset of the training examples
//! (sizes `n_k`, pairwise disjoint). On its subset, group `k` is drawn from
//! class-conditional Gaussians `N(0, σ_k)` / `N(m_k, σ_k)`; everywhere else
//! it is drawn from the label-independent mixture
//! `(1 − p₊) N(0, s) + p₊ N(m_k, s)` with `s` the noise std.
//!
//! Draw order for one split (train first, then test, from one stream):
//! 1. labels: `round(p₊ n)` positives followed by negatives, then shuffled;
//! 2. informative assignment: group ids repeated `n_k` times (plus
//!    `NO_GROUP` for any remainder), then shuffled;
//! 3. features: for each example, for each group, for each feature; a
//!    mixture draw consumes one uniform for the component before its normal.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_mismatch, Result};
use crate::kernel::{gaussian_kernel, mean_euclidean_width, FeatureGroupMatrix, KernelMatrix};
use crate::labels::LabelVector;
use crate::rng::{derive_seed, SplitMix64};

/// Assignment value for examples outside every informative subset.
pub const NO_GROUP: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelDraw {
    /// Exactly `round(p₊ n)` positives at random positions.
    #[default]
    ExactCount,
    /// Independent Bernoulli(p₊) labels.
    Iid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub group_sizes: Vec<usize>,
    pub pos_prior: f64,
    pub pos_means: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub noise_sigma: f64,
    pub features_per_group: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Extra groups drawn from the uninformative law for every example.
    #[serde(default)]
    pub noise_groups: usize,
    #[serde(default)]
    pub label_draw: LabelDraw,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn n_groups(&self) -> usize {
        self.group_sizes.len() + self.noise_groups
    }

    pub fn total_features(&self) -> usize {
        self.n_groups() * self.features_per_group
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.group_sizes.len();
        if k == 0 {
            return invalid("spec needs at least one informative group");
        }
        if self.pos_means.len() != k || self.sigmas.len() != k {
            return shape_mismatch(
                format!("{k} means and sigmas"),
                format!("{} means, {} sigmas", self.pos_means.len(), self.sigmas.len()),
            );
        }
        if !(self.pos_prior > 0.0 && self.pos_prior < 1.0) {
            return invalid(format!("positive prior must lie in (0, 1), got {}", self.pos_prior));
        }
        if self.sigmas.iter().chain([&self.noise_sigma]).any(|s| !(*s > 0.0)) {
            return invalid("all standard deviations must be positive");
        }
        if self.features_per_group == 0 {
            return invalid("features_per_group must be >= 1");
        }
        let total: usize = self.group_sizes.iter().sum();
        if total != self.n_train {
            return invalid(format!(
                "informative subset sizes sum to {total}, n_train is {}",
                self.n_train
            ));
        }
        if self.n_test == 0 {
            return invalid("n_test must be >= 1");
        }
        Ok(())
    }

    /// Test-set subset sizes mirroring the training proportions (largest remainder).
    pub fn test_group_sizes(&self) -> Vec<usize> {
        apportion(&self.group_sizes, self.n_test)
    }
}

/// Three kernels; informative subsets (300, 300, 500).
pub fn experiment1_spec() -> SyntheticSpec {
    SyntheticSpec {
        group_sizes: vec![300, 300, 500],
        pos_prior: 0.25,
        pos_means: vec![0.4, 0.4, 0.4],
        sigmas: vec![0.3, 0.3, 0.4],
        noise_sigma: 0.5,
        features_per_group: 6,
        n_train: 1100,
        n_test: 1100,
        noise_groups: 0,
        label_draw: LabelDraw::ExactCount,
        seed: 0,
    }
}

/// Five kernels; informative subsets (300, 300, 500, 200, 500).
pub fn experiment2_spec() -> SyntheticSpec {
    SyntheticSpec {
        group_sizes: vec![300, 300, 500, 200, 500],
        pos_prior: 0.25,
        pos_means: vec![0.4, 0.4, 0.4, 0.2, 0.2],
        sigmas: vec![0.3, 0.3, 0.4, 0.4, 0.4],
        noise_sigma: 0.5,
        features_per_group: 6,
        n_train: 1800,
        n_test: 1800,
        noise_groups: 0,
        label_draw: LabelDraw::ExactCount,
        seed: 0,
    }
}

fn apportion(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let mut sizes: Vec<usize> = weights.iter().map(|&w| w * total / sum).collect();
    let mut rema: Vec<(usize, usize)> = weights.iter().enumerate().map(|(i, &w)| ((w * total) % sum, i)).collect();
    // largest remainder first, lower index on ties
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - sizes.iter().sum::<usize>();
    for &(_, i) in rema.iter().take(short) {
        sizes[i] += 1;
    }
    sizes
}

/// One split of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSplit {
    /// One matrix per group (informative groups first, then noise groups).
    pub groups: Vec<FeatureGroupMatrix>,
    pub labels: LabelVector,
    /// Informative group index per example, `NO_GROUP` if none.
    pub informative_assignment: Vec<usize>,
}

impl SyntheticSplit {
    /// Indices in the informative subset of `group`.
    pub fn subset(&self, group: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.informative_assignment[i] == group)
            .collect()
    }

    /// All groups' features side by side, one row per example.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let n = self.labels.len();
        let header: Vec<String> = self
            .groups
            .iter()
            .flat_map(|g| (0..g.d()).map(move |d| format!("g{}_f{}", g.group_id() + 1, d + 1)))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..n {
            let row: Vec<String> = self
                .groups
                .iter()
                .flat_map(|g| g.row(i).iter().map(|v| format!("{v:.17e}")))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    pub train: SyntheticSplit,
    pub test: SyntheticSplit,
}

/// Draws train and test splits from one stream seeded by `seed`.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = SplitMix64::new(seed);
    let train = draw_split(spec, &spec.group_sizes, spec.n_train, &mut rng);
    let test = draw_split(spec, &spec.test_group_sizes(), spec.n_test, &mut rng);
    Ok(SyntheticDataset {
        spec: spec.clone().with_seed(seed),
        train,
        test,
    })
}

fn draw_labels(spec: &SyntheticSpec, n: usize, rng: &mut SplitMix64) -> LabelVector {
    match spec.label_draw {
        LabelDraw::ExactCount => {
            let n_pos = (spec.pos_prior * n as f64).round() as usize;
            let mut flags: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
            rng.shuffle(&mut flags);
            LabelVector::from_bools(flags)
        }
        LabelDraw::Iid => LabelVector::from_bools((0..n).map(|_| rng.next_f64() < spec.pos_prior)),
    }
}

fn draw_split(spec: &SyntheticSpec, sizes: &[usize], n: usize, rng: &mut SplitMix64) -> SyntheticSplit {
    let labels = draw_labels(spec, n, rng);
    let mut assignment: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat(k).take(s)).collect();
    assignment.resize(n, NO_GROUP);
    rng.shuffle(&mut assignment);

    let d = spec.features_per_group;
    let n_groups = spec.n_groups();
    let n_inf = spec.group_sizes.len();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(n * d); n_groups];
    for i in 0..n {
        for (g, vals) in values.iter_mut().enumerate() {
            // noise groups reuse the first group's mean for their mixture
            let mean = spec.pos_means[g.min(n_inf - 1)];
            if g < n_inf && assignment[i] == g {
                let (mu, sd) = if labels.is_positive(i) { (mean, spec.sigmas[g]) } else { (0.0, spec.sigmas[g]) };
                for _ in 0..d {
                    vals.push(rng.normal(mu, sd));
                }
            } else {
                for _ in 0..d {
                    let mu = if rng.next_f64() < spec.pos_prior { mean } else { 0.0 };
                    vals.push(rng.normal(mu, spec.noise_sigma));
                }
            }
        }
    }
    let groups = values
        .into_iter()
        .enumerate()
        .map(|(g, v)| FeatureGroupMatrix::new(n, d, v, g).expect("finite draws"))
        .collect();
    SyntheticSplit {
        groups,
        labels,
        informative_assignment: assignment,
    }
}

/// Gaussian kernels on independently perturbed copies of `base`.
///
/// Copy `r` adds noise with per-column std `noise_level · std(column)` and
/// uses the mean-distance width of the perturbed features.
pub fn noise_replicate_kernels(
    base: &FeatureGroupMatrix,
    y: &LabelVector,
    count: usize,
    noise_level: f64,
    seed: u64,
) -> Result<Vec<KernelMatrix>> {
    if y.len() != base.n() {
        return shape_mismatch(format!("{} labels", base.n()), y.len());
    }
    if count < 2 {
        return invalid("need at least two replicates");
    }
    if !(noise_level > 0.0) {
        return invalid(format!("noise level must be positive, got {noise_level}"));
    }
    let stds = base.column_stds();
    (0..count)
        .map(|r| {
            let mut rng = SplitMix64::new(derive_seed(seed, r as u64));
            let d = base.d();
            let values: Vec<f64> = base
                .values()
                .iter()
                .enumerate()
                .map(|(idx, v)| v + noise_level * stds[idx % d] * rng.standard_normal())
                .collect();
            let noisy = FeatureGroupMatrix::new(base.n(), d, values, r)?;
            let width = mean_euclidean_width(&noisy)?;
            Ok(gaussian_kernel(&noisy, width)?.with_name(format!("replicate{}", r + 1)))
        })
        .collect()
}

/// Settings for the single-group data behind the noise-replicate demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDemoSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub pos_prior: f64,
    pub pos_mean: f64,
    pub sigma: f64,
    pub features: usize,
    pub replicates: usize,
    pub noise_level: f64,
}

impl Default for NoiseDemoSpec {
    fn default() -> Self {
        Self {
            n_train: 300,
            n_test: 300,
            pos_prior: 0.25,
            pos_mean: 0.4,
            sigma: 0.3,
            features: 6,
            replicates: 10,
            noise_level: 1.0,
        }
    }
}

/// Class-conditional Gaussian features for train and test stacked (train rows first).
pub fn generate_noise_demo_base(spec: &NoiseDemoSpec, seed: u64) -> Result<(FeatureGroupMatrix, LabelVector, LabelVector)> {
    if !(spec.pos_prior > 0.0 && spec.pos_prior < 1.0) || !(spec.sigma > 0.0) || spec.features == 0 {
        return invalid("invalid noise demo settings");
    }
    let mut rng = SplitMix64::new(seed);
    let split = |n: usize, rng: &mut SplitMix64| {
        let n_pos = (spec.pos_prior * n as f64).round() as usize;
        let mut flags: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
        rng.shuffle(&mut flags);
        let y = LabelVector::from_bools(flags);
        let mut v = Vec::with_capacity(n * spec.features);
        for i in 0..n {
            let mu = if y.is_positive(i) { spec.pos_mean } else { 0.0 };
            for _ in 0..spec.features {
                v.push(rng.normal(mu, spec.sigma));
            }
        }
        (v, y)
    };
    let (mut v_train, y_train) = split(spec.n_train, &mut rng);
    let (v_test, y_test) = split(spec.n_test, &mut rng);
    v_train.extend(v_test);
    let x = FeatureGroupMatrix::new(spec.n_train + spec.n_test, spec.features, v_train, 0)?;
    Ok((x, y_train, y_test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_specs() {
        let s1 = experiment1_spec();
        s1.validate().unwrap();
        assert_eq!(s1.group_sizes.iter().sum::<usize>(), 1100);
        assert_eq!(s1.total_features(), 18);
        let s2 = experiment2_spec();
        s2.validate().unwrap();
        assert_eq!(s2.group_sizes.iter().sum::<usize>(), 1800);
        assert_eq!(s2.total_features(), 30);
    }

    #[test]
    fn invalid_specs() {
        let mut s = experiment1_spec();
        s.n_train = 1000;
        assert!(s.validate().is_err());
        let mut s = experiment1_spec();
        s.sigmas[0] = 0.0;
        assert!(s.validate().is_err());
        let mut s = experiment1_spec();
        s.pos_prior = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn partition_sizes_and_labels() {
        let s = experiment1_spec();
        let d = generate(&s, 3).unwrap();
        for (k, &n_k) in s.group_sizes.iter().enumerate() {
            assert_eq!(d.train.subset(k).len(), n_k);
            assert_eq!(d.test.subset(k).len(), n_k);
        }
        assert!(d.train.informative_assignment.iter().all(|&g| g < 3));
        assert_eq!(d.train.labels.n_pos(), 275);
        assert_eq!(d.train.groups.len(), 3);
        assert_eq!(d.train.groups[0].d(), 6);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = experiment2_spec();
        assert_eq!(generate(&s, 11).unwrap(), generate(&s, 11).unwrap());
        assert_ne!(generate(&s, 11).unwrap().train.labels, generate(&s, 12).unwrap().train.labels);
    }

    #[test]
    fn test_apportioning() {
        assert_eq!(apportion(&[300, 300, 500], 1100), vec![300, 300, 500]);
        assert_eq!(apportion(&[300, 300, 500], 100), vec![27, 27, 46]);
        assert_eq!(apportion(&[1, 1, 1], 10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn noise_groups_are_appended() {
        let mut s = experiment1_spec();
        s.noise_groups = 2;
        let d = generate(&s, 1).unwrap();
        assert_eq!(d.train.groups.len(), 5);
        assert_eq!(s.total_features(), 30);
    }

    #[test]
    fn replicate_kernels_shrink_to_base() {
        let (x, y, _) = generate_noise_demo_base(&NoiseDemoSpec { n_train: 30, n_test: 10, ..Default::default() }, 4).unwrap();
        let y_all = LabelVector::from_bools((0..40).map(|i| i < 30 && y.is_positive(i)));
        let base = gaussian_kernel(&x, mean_euclidean_width(&x).unwrap()).unwrap();
        let ks = noise_replicate_kernels(&x, &y_all, 3, 1e-9, 8).unwrap();
        for k in &ks {
            let diff = k.as_slice().iter().zip(base.as_slice()).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
            assert!(diff < 1e-7);
        }
        assert!(noise_replicate_kernels(&x, &y_all, 1, 0.5, 8).is_err());
        assert!(noise_replicate_kernels(&x, &y_all, 2, 0.0, 8).is_err());
    }
}

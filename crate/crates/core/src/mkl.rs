//! ℓp-norm multiple kernel learning.
//!
//! Alternates between an SVM solve on `K(β) = Σⱼ βⱼ Kⱼ` and the closed-form
//! weight update `βⱼ ∝ ‖wⱼ‖^(2/(p+1))`, `‖wⱼ‖² = βⱼ² αᵀYKⱼYα`, rescaled onto
//! the unit ℓp sphere. `p = ∞` fixes `β = 1/m` (the average-kernel SVM).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, shape_mismatch, MklError, Result};
use crate::kernel::{weighted_sum, CrossKernel, KernelMatrix};
use crate::labels::LabelVector;
use crate::svm::{SmoSolver, SvmModel, SvmParams, DEFAULT_EPSILON};

/// Weights below this are set to exactly zero at `p = 1`.
pub const ZERO_CLAMP: f64 = 1e-12;

/// Norm parameter `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    Finite(f64),
    Infinity,
}

impl Norm {
    pub fn finite(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return invalid(format!("norm parameter must be a finite value >= 1, got {p}"));
        }
        Ok(Norm::Finite(p))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Norm::Infinity)
    }

    /// Sort key; infinity sorts last.
    pub fn value(&self) -> f64 {
        match self {
            Norm::Finite(p) => *p,
            Norm::Infinity => f64::INFINITY,
        }
    }

    /// Exponent `2/(p+1)`; zero at infinity.
    pub fn info_exponent(&self) -> f64 {
        match self {
            Norm::Finite(p) => 2.0 / (p + 1.0),
            Norm::Infinity => 0.0,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Finite(p) => write!(f, "{p}"),
            Norm::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = MklError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Norm::Infinity);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| MklError::InvalidInput(format!("cannot parse norm '{t}'")))?;
        if p < 1.0 {
            return invalid(format!("p = {p} < 1 makes the problem nonconvex"));
        }
        Norm::finite(p)
    }
}

impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Norm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Norm::finite(p).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which quantity the weight update raises to `1/(p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightUpdate {
    /// `βⱼ ∝ (βⱼ² αᵀYKⱼYα)^(1/(p+1))`, the block-optimal update for the current iterate.
    #[default]
    ScaledNorm,
    /// `βⱼ ∝ (αᵀYKⱼYα)^(2/(p+1))`, ignoring the current weight.
    Unscaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MklParams {
    pub c: f64,
    pub p: Norm,
    pub svm_epsilon: f64,
    /// Stop when `max|Δβ| / max β` falls below this.
    pub tol: f64,
    pub max_outer: usize,
    pub update: WeightUpdate,
}

impl MklParams {
    pub fn new(c: f64, p: Norm) -> Self {
        Self {
            c,
            p,
            svm_epsilon: DEFAULT_EPSILON,
            tol: 1e-4,
            max_outer: 200,
            update: WeightUpdate::ScaledNorm,
        }
    }

    pub fn with_svm_epsilon(mut self, eps: f64) -> Self {
        self.svm_epsilon = eps;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn with_update(mut self, update: WeightUpdate) -> Self {
        self.update = update;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MklModel {
    pub svm: SvmModel,
    pub beta: Vec<f64>,
    pub p: Norm,
    pub c: f64,
    /// `‖wⱼ‖² = βⱼ² αᵀYKⱼYα` at the returned solution.
    pub w_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// SVM dual objective after every outer iteration.
    pub objective_history: Vec<f64>,
}

impl MklModel {
    pub fn dual_objective(&self) -> f64 {
        self.svm.dual_objective
    }

    /// Decision values from per-kernel train-by-test blocks.
    pub fn decision_values(&self, cross: &[CrossKernel], y_train: &LabelVector) -> Result<Vec<f64>> {
        if cross.len() != self.beta.len() {
            return shape_mismatch(format!("{} kernel blocks", self.beta.len()), cross.len());
        }
        let combined = CrossKernel::weighted_sum(cross, &self.beta)?;
        self.svm.decision_values(&combined, y_train)
    }
}

/// Initial weights: uniform on the unit ℓp sphere, `1/m` at infinity.
pub fn initial_weights(m: usize, p: Norm) -> Vec<f64> {
    match p {
        Norm::Finite(p) => vec![(m as f64).powf(-1.0 / p); m],
        Norm::Infinity => vec![1.0 / m as f64; m],
    }
}

pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    // scaled to avoid overflow for large p
    max * v.iter().map(|x| (x.abs() / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Closed-form weights from squared block norms `‖wⱼ‖²`, rescaled to `‖β‖_p = 1`.
pub fn update_weights(w_norms: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0) || !p.is_finite() {
        return invalid(format!("update needs a finite p >= 1, got {p}"));
    }
    if w_norms.iter().any(|w| !w.is_finite()) {
        return Err(MklError::Numerical("non-finite block norm".into()));
    }
    let raw: Vec<f64> = w_norms.iter().map(|&w| w.max(0.0).powf(1.0 / (p + 1.0))).collect();
    let norm = lp_norm(&raw, p);
    if norm == 0.0 {
        return Err(MklError::Numerical(
            "all block norms are zero; weight update stalls".into(),
        ));
    }
    Ok(raw.into_iter().map(|b| b / norm).collect())
}

/// `αᵀ Y K Y α` for each kernel.
pub fn quadratic_forms(alpha: &[f64], y: &LabelVector, kernels: &[KernelMatrix]) -> Vec<f64> {
    let sv: Vec<(usize, f64)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| (i, a * f64::from(y.get(i))))
        .collect();
    kernels
        .par_iter()
        .map(|k| {
            sv.iter()
                .map(|&(i, vi)| {
                    let row = k.row(i);
                    vi * sv.iter().map(|&(j, vj)| vj * row[j]).sum::<f64>()
                })
                .sum::<f64>()
        })
        .collect()
}

/// Split of `αᵀYKYα` into label-consistent and label-opposing parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationSplit {
    pub consistent: f64,
    pub opposing: f64,
}

impl InformationSplit {
    pub fn difference(&self) -> f64 {
        self.consistent - self.opposing
    }
}

pub fn information_split(alpha: &[f64], y: &LabelVector, k: &KernelMatrix) -> Result<InformationSplit> {
    if alpha.len() != k.n() || y.len() != k.n() {
        return shape_mismatch(format!("{} examples", k.n()), format!("{} duals / {} labels", alpha.len(), y.len()));
    }
    let (mut consistent, mut opposing) = (0.0, 0.0);
    for i in 0..k.n() {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = k.row(i);
        for j in 0..k.n() {
            let t = alpha[i] * row[j] * alpha[j];
            if y.get(i) == y.get(j) {
                consistent += t;
            } else {
                opposing += t;
            }
        }
    }
    Ok(InformationSplit { consistent, opposing })
}

/// Information content `(Σ_{yᵢ=yⱼ} αᵢKᵢⱼαⱼ − Σ_{yᵢ≠yⱼ} αᵢKᵢⱼαⱼ)^(2/(p+1))`.
pub fn kernel_information(alpha: &[f64], y: &LabelVector, k: &KernelMatrix, p: Norm) -> Result<f64> {
    let diff = information_split(alpha, y, k)?.difference();
    let e = p.info_exponent();
    if e == 0.0 {
        return Ok(if diff > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(diff.max(0.0).powf(e))
}

fn check_kernels(kernels: &[KernelMatrix], y: &LabelVector) -> Result<usize> {
    let first = match kernels.first() {
        Some(k) => k,
        None => return invalid("MKL needs at least one kernel"),
    };
    let n = first.n();
    if let Some(bad) = kernels.iter().find(|k| k.n() != n) {
        return shape_mismatch(format!("n = {n}"), format!("n = {} for '{}'", bad.n(), bad.name()));
    }
    if y.len() != n {
        return shape_mismatch(format!("{n} labels"), y.len());
    }
    y.require_both_classes()?;
    Ok(n)
}

/// Fits ℓp-norm MKL from a cold start.
pub fn solve_lp_mkl(kernels: &[KernelMatrix], y: &LabelVector, params: &MklParams) -> Result<MklModel> {
    solve_lp_mkl_warm(kernels, y, params, None)
}

/// Fits ℓp-norm MKL, optionally starting from a previous solution's β and α
/// (used along ascending C paths).
pub fn solve_lp_mkl_warm(
    kernels: &[KernelMatrix],
    y: &LabelVector,
    params: &MklParams,
    warm: Option<&MklModel>,
) -> Result<MklModel> {
    let n = check_kernels(kernels, y)?;
    let m = kernels.len();
    let solver = SmoSolver::new(SvmParams::new(params.c).with_epsilon(params.svm_epsilon));

    let mut beta = match warm {
        Some(w) if w.beta.len() == m && w.p == params.p && w.beta.iter().any(|&b| b > 0.0) => w.beta.clone(),
        _ => initial_weights(m, params.p),
    };
    let mut alpha_start: Option<Vec<f64>> = warm.filter(|w| w.svm.alpha.len() == n).map(|w| w.svm.alpha.clone());

    let mut history = Vec::new();
    let mut best: Option<MklModel> = None;
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let combined = weighted_sum(kernels, &beta)?;
        let svm = solver.solve_raw(combined.as_slice(), n, y, alpha_start.as_deref())?.model;
        iterations += 1;
        let q = quadratic_forms(&svm.alpha, y, kernels);
        let w_norms: Vec<f64> = beta.iter().zip(&q).map(|(b, q)| b * b * q.max(0.0)).collect();
        history.push(svm.dual_objective);
        alpha_start = Some(svm.alpha.clone());

        let current = MklModel {
            svm,
            beta: beta.clone(),
            p: params.p,
            c: params.c,
            w_norms,
            iterations,
            converged,
            objective_history: Vec::new(),
        };
        let p = match params.p {
            Norm::Infinity => {
                best = Some(MklModel { converged: true, ..current });
                break;
            }
            Norm::Finite(p) => p,
        };
        // p = 1 may oscillate: keep the iterate with the smallest objective.
        let keep = p > 1.0
            || best
                .as_ref()
                .map_or(true, |b| current.svm.dual_objective <= b.svm.dual_objective);
        let stop = converged || iterations >= params.max_outer;
        let next = if stop {
            None
        } else {
            let base = match params.update {
                WeightUpdate::ScaledNorm => current.w_norms.clone(),
                WeightUpdate::Unscaled => q.iter().map(|v| v.max(0.0).powi(2)).collect(),
            };
            let mut next = update_weights(&base, p)?;
            if p == 1.0 {
                clamp_small(&mut next);
            }
            Some(next)
        };
        if keep {
            best = Some(current);
        }
        let next = match next {
            Some(n) => n,
            None => break,
        };
        let change = relative_change(&beta, &next);
        beta = next;
        if change < params.tol {
            // one more solve at the final weights
            converged = true;
        }
    }

    let mut model = best.expect("at least one outer iteration");
    model.iterations = iterations;
    model.converged = converged || params.p.is_infinite();
    model.objective_history = history;
    Ok(model)
}

/// Largest `|Δβⱼ| / βⱼ` over the currently nonzero weights.
fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .filter(|(o, _)| **o > 0.0)
        .fold(0.0f64, |a, (o, n)| a.max((o - n).abs() / o))
}

fn clamp_small(beta: &mut [f64]) {
    for b in beta.iter_mut() {
        if *b < ZERO_CLAMP {
            *b = 0.0;
        }
    }
    let s: f64 = beta.iter().sum();
    if s > 0.0 {
        for b in beta.iter_mut() {
            *b /= s;
        }
    }
}

/// Pooled histogram of kernel weights over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Weights that are exactly zero (all land in the first bin as well).
    pub exact_zeros: usize,
}

impl WeightHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:.6},{:.6},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

pub fn weight_histogram(models: &[MklModel], bins: usize) -> Result<WeightHistogram> {
    if models.is_empty() {
        return invalid("histogram needs at least one model");
    }
    if bins == 0 {
        return invalid("histogram needs at least one bin");
    }
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    let mut exact_zeros = 0;
    for b in models.iter().flat_map(|m| m.beta.iter()) {
        if *b == 0.0 {
            exact_zeros += 1;
        }
        let idx = ((b.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(WeightHistogram {
        edges,
        counts,
        exact_zeros,
    })
}

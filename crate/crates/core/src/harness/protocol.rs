//! Shared fitting protocol: C paths, validation selection, refits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::{CrossKernel, KernelMatrix};
use crate::labels::LabelVector;
use crate::metrics::average_precision;
use crate::mkl::{solve_lp_mkl_warm, MklModel, MklParams, Norm, WeightUpdate};
use crate::rng::SplitMix64;

use super::config::RunConfig;

/// A model family evaluated by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// ℓp-norm MKL over all kernels (p = ∞ is the average kernel).
    Mkl(Norm),
    /// Plain SVM on one base kernel.
    Single(usize),
}

impl Method {
    pub fn label(&self, names: &[String]) -> String {
        match self {
            Method::Mkl(Norm::Infinity) => "sum".to_string(),
            Method::Mkl(Norm::Finite(p)) => format!("l{p}"),
            Method::Single(j) => format!("single:{}", names[*j]),
        }
    }
}

/// Solver settings shared by every fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub svm_epsilon: f64,
    pub mkl_tol: f64,
    pub mkl_max_outer: usize,
    pub update: WeightUpdate,
}

impl From<&RunConfig> for FitSettings {
    fn from(cfg: &RunConfig) -> Self {
        Self {
            svm_epsilon: cfg.svm_epsilon,
            mkl_tol: cfg.mkl_tol,
            mkl_max_outer: cfg.mkl_max_outer,
            update: cfg.weight_update,
        }
    }
}

/// Training kernels plus cross blocks to a set of evaluation examples.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<KernelMatrix>,
    pub y_train: LabelVector,
    pub eval: Vec<CrossKernel>,
    pub y_eval: LabelVector,
}

impl Split {
    /// Carves a split out of kernels over a pooled example set.
    pub fn from_pooled(kernels: &[KernelMatrix], y: &LabelVector, train_idx: &[usize], eval_idx: &[usize]) -> Self {
        Self {
            train: kernels.iter().map(|k| k.submatrix(train_idx)).collect(),
            y_train: y.subset(train_idx),
            eval: kernels.iter().map(|k| k.cross_block(train_idx, eval_idx)).collect(),
            y_eval: y.subset(eval_idx),
        }
    }

    /// Restricts an existing split's training side and evaluates on held-out training rows.
    pub fn holdout(&self, fit_idx: &[usize], val_idx: &[usize]) -> Self {
        Self::from_pooled(&self.train, &self.y_train, fit_idx, val_idx)
    }

    pub fn names(&self) -> Vec<String> {
        self.train.iter().map(|k| k.name().to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub c: f64,
    pub ap: f64,
    pub beta: Vec<f64>,
    pub converged: bool,
}

fn fit_one(split: &Split, method: Method, c: f64, settings: &FitSettings, warm: Option<&MklModel>) -> Result<(Fit, MklModel)> {
    let (kernels, cross, p) = match method {
        Method::Mkl(p) => (&split.train[..], &split.eval[..], p),
        Method::Single(j) => {
            if j >= split.train.len() {
                return invalid(format!("kernel index {j} out of range"));
            }
            (&split.train[j..=j], &split.eval[j..=j], Norm::Infinity)
        }
    };
    let params = MklParams::new(c, p)
        .with_svm_epsilon(settings.svm_epsilon)
        .with_tol(settings.mkl_tol)
        .with_max_outer(settings.mkl_max_outer)
        .with_update(settings.update);
    let model = solve_lp_mkl_warm(kernels, &split.y_train, &params, warm)?;
    let scores = model.decision_values(cross, &split.y_train)?;
    let ap = average_precision(&scores, &split.y_eval)?;
    let beta = match method {
        Method::Mkl(_) => model.beta.clone(),
        Method::Single(j) => {
            let mut b = vec![0.0; split.train.len()];
            b[j] = 1.0;
            b
        }
    };
    Ok((
        Fit {
            c,
            ap,
            beta,
            converged: model.converged && model.svm.converged,
        },
        model,
    ))
}

/// Fits `method` once at regularization `c` and scores the evaluation side.
pub fn fit_and_score(split: &Split, method: Method, c: f64, settings: &FitSettings) -> Result<Fit> {
    fit_one(split, method, c, settings, None).map(|(f, _)| f)
}

/// Fits `method` along an ascending C grid, warm-starting each point from the
/// previous one with duals rescaled by the C ratio.
pub fn c_path(split: &Split, method: Method, c_grid: &[f64], settings: &FitSettings) -> Result<Vec<Fit>> {
    let mut out = Vec::with_capacity(c_grid.len());
    let mut prev: Option<MklModel> = None;
    for &c in c_grid {
        let warm = prev.map(|mut m| {
            let r = c / m.c;
            m.svm.alpha.iter_mut().for_each(|a| *a *= r);
            m
        });
        let (fit, model) = fit_one(split, method, c, settings, warm.as_ref())?;
        out.push(fit);
        prev = Some(model);
    }
    Ok(out)
}

/// Index of the first maximal AP (smallest C on ties for an ascending grid).
pub fn best_index(path: &[Fit]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, f) in path.iter().enumerate() {
        if best.map_or(true, |b| f.ap > path[b].ap) {
            best = Some(i);
        }
    }
    best
}

/// Stratified holdout: `round(fraction · n_class)` examples of each class go to validation.
/// Returns sorted (fit, validation) index lists.
pub fn stratified_holdout(y: &LabelVector, fraction: f64, rng: &mut SplitMix64) -> Result<(Vec<usize>, Vec<usize>)> {
    y.require_both_classes()?;
    let mut val = Vec::new();
    for positive in [true, false] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y.is_positive(i) == positive).collect();
        rng.shuffle(&mut idx);
        let take = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..take]);
    }
    val.sort_unstable();
    let mut in_val = vec![false; y.len()];
    for &i in &val {
        in_val[i] = true;
    }
    let fit = (0..y.len()).filter(|&i| !in_val[i]).collect();
    Ok((fit, val))
}

//! Cross-validation over precomputed kernels with class-wise (C, p) selection.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_mismatch, Result};
use crate::kernel::KernelMatrix;
use crate::kmx;
use crate::labels::LabelVector;
use crate::metrics::EvalReport;
use crate::mkl::Norm;
use crate::rng::{derive_seed, SplitMix64};

use super::config::RunConfig;
use super::protocol::{c_path, FitSettings, Method, Split};

/// Fold assignment of every example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub fold_of: Vec<usize>,
    pub folds: usize,
}

impl CvSplit {
    /// Shuffles each class separately and deals examples round-robin, so
    /// every fold receives positives.
    pub fn stratified(y: &LabelVector, folds: usize, rng: &mut SplitMix64) -> Result<Self> {
        if folds < 2 {
            return invalid("cross-validation needs at least 2 folds");
        }
        if y.n_pos() < folds || y.n_neg() < folds {
            return invalid(format!(
                "{folds} folds need at least {folds} examples per class, got {} positive / {} negative",
                y.n_pos(),
                y.n_neg()
            ));
        }
        let mut fold_of = vec![0; y.len()];
        let mut next = 0;
        for positive in [true, false] {
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y.is_positive(i) == positive).collect();
            rng.shuffle(&mut idx);
            for i in idx {
                fold_of[i] = next;
                next = (next + 1) % folds;
            }
        }
        Ok(Self { fold_of, folds })
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }
}

/// Validation AP (percent) of one grid point on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRecord {
    pub class: String,
    pub fold: usize,
    pub p: Norm,
    pub c: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub p: Norm,
    /// C with the highest mean validation AP for this p.
    pub best_c: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub per_p: Vec<NormSummary>,
    pub selected_p: Norm,
    pub selected_c: f64,
    pub selected: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kernel_names: Vec<String>,
    pub folds: usize,
    pub records: Vec<CvRecord>,
    pub classes: Vec<ClassSummary>,
}

/// Divides both blocks by the variance statistic of the training block.
fn normalize_split(mut s: Split) -> Result<Split> {
    for (k, x) in s.train.iter_mut().zip(s.eval.iter_mut()) {
        let v = k.normalization_factor()?;
        *k = k.scaled(1.0 / v);
        *x = x.scaled(1.0 / v);
    }
    Ok(s)
}

fn fold_split(kernels: &[KernelMatrix], y: &LabelVector, split: &CvSplit, fold: usize) -> Result<Split> {
    let tr = split.train_indices(fold);
    let va = split.validation_indices(fold);
    normalize_split(Split::from_pooled(kernels, y, &tr, &va))
}

fn class_name(path: &Path, index: usize) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("class{index}"))
}

/// Reads kernels and label files and runs [`run_cv`].
pub fn run_cv_files(kernel_paths: &[PathBuf], label_paths: &[PathBuf], cfg: &RunConfig) -> Result<CvReport> {
    if kernel_paths.is_empty() || label_paths.is_empty() {
        return invalid("cross-validation needs at least one kernel and one label file");
    }
    let kernels = kernel_paths.iter().map(kmx::read).collect::<Result<Vec<_>>>()?;
    let classes = label_paths
        .iter()
        .enumerate()
        .map(|(i, p)| Ok((class_name(p, i), LabelVector::read(p)?)))
        .collect::<Result<Vec<_>>>()?;
    run_cv(&kernels, &classes, cfg)
}

/// Cross-validates every (C, p) for every class and selects the class-wise maximizer
/// of mean validation AP (first in grid order on ties).
pub fn run_cv(kernels: &[KernelMatrix], classes: &[(String, LabelVector)], cfg: &RunConfig) -> Result<CvReport> {
    if kernels.is_empty() {
        return invalid("no kernels given");
    }
    let n = kernels[0].n();
    for k in kernels {
        if k.n() != n {
            return shape_mismatch(format!("{n}x{n} kernels"), format!("{} is {}x{}", k.name(), k.n(), k.n()));
        }
    }
    for (name, y) in classes {
        if y.len() != n {
            return shape_mismatch(format!("{n} labels"), format!("{} labels in {name}", y.len()));
        }
        y.require_both_classes()?;
    }
    if cfg.p_grid.is_empty() || cfg.c_grid.is_empty() {
        return invalid("p and C grids must be nonempty");
    }
    let settings = FitSettings::from(cfg);
    let grid = cfg.sorted_c_grid();

    let splits = classes
        .iter()
        .enumerate()
        .map(|(ci, (_, y))| CvSplit::stratified(y, cfg.folds, &mut SplitMix64::new(derive_seed(cfg.seed, ci as u64))))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..classes.len()).flat_map(|c| (0..cfg.folds).map(move |f| (c, f))).collect();
    let per_job: Vec<Vec<CvRecord>> = jobs
        .par_iter()
        .map(|&(ci, fold)| {
            let (name, y) = &classes[ci];
            let split = fold_split(kernels, y, &splits[ci], fold)?;
            let mut out = Vec::new();
            for &p in &cfg.p_grid {
                for f in c_path(&split, Method::Mkl(p), &grid, &settings)? {
                    out.push(CvRecord {
                        class: name.clone(),
                        fold,
                        p,
                        c: f.c,
                        ap: 100.0 * f.ap,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<CvRecord> = per_job.into_iter().flatten().collect();

    let summaries = classes
        .iter()
        .map(|(name, _)| summarize_class(name, &records, &cfg.p_grid, &grid, cfg.folds))
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport {
        kernel_names: kernels.iter().map(|k| k.name().to_string()).collect(),
        folds: cfg.folds,
        records,
        classes: summaries,
    })
}

fn fold_scores(records: &[CvRecord], class: &str, p: Norm, c: f64, folds: usize) -> Vec<f64> {
    let mut v = vec![f64::NAN; folds];
    for r in records.iter().filter(|r| r.class == class && r.p == p && r.c == c) {
        v[r.fold] = r.ap;
    }
    v
}

fn summarize_class(class: &str, records: &[CvRecord], p_grid: &[Norm], c_grid: &[f64], folds: usize) -> Result<ClassSummary> {
    let mut per_p = Vec::new();
    let mut selected: Option<(Norm, f64, EvalReport)> = None;
    for &p in p_grid {
        let mut best: Option<(f64, EvalReport)> = None;
        for &c in c_grid {
            let rep = EvalReport::new(p.to_string(), fold_scores(records, class, p, c, folds))?;
            if best.as_ref().map_or(true, |(_, b)| rep.mean > b.mean) {
                best = Some((c, rep));
            }
        }
        let (c, rep) = best.expect("nonempty C grid");
        if selected.as_ref().map_or(true, |(_, _, s)| rep.mean > s.mean) {
            selected = Some((p, c, rep.clone()));
        }
        per_p.push(NormSummary { p, best_c: c, report: rep });
    }
    let (selected_p, selected_c, mut selected) = selected.expect("nonempty p grid");
    selected.method_name = "selected".into();
    Ok(ClassSummary {
        class: class.to_string(),
        per_p,
        selected_p,
        selected_c,
        selected,
    })
}

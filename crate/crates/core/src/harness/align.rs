//! Alignment diagnostics over precomputed kernels.

use std::path::PathBuf;

use serde::Serialize;

use crate::alignment::{alignment_matrix, centered_kta, AlignmentMatrix};
use crate::error::{invalid, shape_mismatch, Result};
use crate::kernel::KernelMatrix;
use crate::kmx;
use crate::labels::LabelVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KtaRow {
    pub class: String,
    pub kernel: String,
    /// `None` when the centered kernel vanishes.
    pub kta: Option<f64>,
    /// KTA divided by the class's sum over kernels.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignReport {
    pub matrix: AlignmentMatrix,
    pub profile: Vec<KtaRow>,
}

impl AlignReport {
    pub fn profile_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.10}"));
        let mut out = String::from("class,kernel,kta,kta_normalized\n");
        for r in &self.profile {
            out.push_str(&format!("{},{},{},{}\n", r.class, r.kernel, fmt(r.kta), fmt(r.normalized)));
        }
        out
    }

    /// Row of `class` with the largest KTA.
    pub fn best_kernel(&self, class: &str) -> Option<&str> {
        self.profile
            .iter()
            .filter(|r| r.class == class && r.kta.is_some())
            .fold(None::<&KtaRow>, |best, r| match best {
                Some(b) if b.kta >= r.kta => Some(b),
                _ => Some(r),
            })
            .map(|r| r.kernel.as_str())
    }
}

pub fn run_align_files(kernel_paths: &[PathBuf], label_paths: &[PathBuf], centered: bool) -> Result<AlignReport> {
    if kernel_paths.is_empty() {
        return invalid("alignment needs at least one kernel");
    }
    let kernels = kernel_paths.iter().map(kmx::read).collect::<Result<Vec<_>>>()?;
    let classes = label_paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("class{i}"));
            Ok((name, LabelVector::read(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    run_align(&kernels, &classes, centered)
}

/// Pairwise alignment matrix plus per-class centered KTA profiles.
/// Degenerate entries become `None` (written as `NA`).
pub fn run_align(kernels: &[KernelMatrix], classes: &[(String, LabelVector)], centered: bool) -> Result<AlignReport> {
    let matrix = alignment_matrix(kernels, centered)?;
    let n = kernels[0].n();
    let mut profile = Vec::new();
    for (class, y) in classes {
        if y.len() != n {
            return shape_mismatch(format!("{n} labels"), format!("{} labels in {class}", y.len()));
        }
        y.require_both_classes()?;
        let kta: Vec<Option<f64>> = kernels.iter().map(|k| centered_kta(k, y).ok()).collect();
        let total: f64 = kta.iter().flatten().sum();
        for (k, v) in kernels.iter().zip(kta) {
            profile.push(KtaRow {
                class: class.clone(),
                kernel: k.name().to_string(),
                kta: v,
                normalized: v.filter(|_| total > 0.0).map(|x| x / total),
            });
        }
    }
    Ok(AlignReport { matrix, profile })
}

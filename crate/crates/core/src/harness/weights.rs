//! Kernel-weight behavior across norms on synthetic data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MklError, Result};
use crate::mkl::{solve_lp_mkl, weight_histogram, MklModel, MklParams, Norm, WeightHistogram};
use crate::rng::derive_seed;
use crate::synthetic::{generate, SyntheticSpec};

use super::config::RunConfig;
use super::toy::build_kernels;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub rep: usize,
    pub p: Norm,
    pub beta: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormWeights {
    pub p: Norm,
    /// Mean over repetitions of the population variance of β / Σβ.
    pub mean_shape_variance: f64,
    /// Mean over repetitions of the population variance of raw β.
    pub mean_raw_variance: f64,
    /// Repetitions with at least one exactly-zero weight.
    pub reps_with_zero: usize,
    pub min_weight: f64,
    pub histogram: WeightHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightsReport {
    pub kernel_names: Vec<String>,
    pub c: f64,
    pub records: Vec<WeightRecord>,
    pub per_norm: Vec<NormWeights>,
}

impl WeightsReport {
    pub fn norm(&self, p: Norm) -> Option<&NormWeights> {
        self.per_norm.iter().find(|w| w.p == p)
    }

    pub fn weights_csv(&self) -> String {
        let mut out = String::from("rep,p,kernel,weight\n");
        for r in &self.records {
            for (name, b) in self.kernel_names.iter().zip(&r.beta) {
                out.push_str(&format!("{},{},{},{}\n", r.rep, r.p, name, b));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("p,mean_shape_variance,mean_raw_variance,reps_with_zero,min_weight\n");
        for w in &self.per_norm {
            out.push_str(&format!(
                "{},{:.10e},{:.10e},{},{:.10e}\n",
                w.p, w.mean_shape_variance, w.mean_raw_variance, w.reps_with_zero, w.min_weight
            ));
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("p,bin_lo,bin_hi,count\n");
        for w in &self.per_norm {
            let h = &w.histogram;
            for (i, c) in h.counts.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", w.p, h.edges[i], h.edges[i + 1], c));
            }
        }
        out
    }
}

fn population_variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Fits MKL on the full training set of each repetition at a fixed C for every norm.
pub fn run_weights(spec: &SyntheticSpec, cfg: &RunConfig, c: f64) -> Result<WeightsReport> {
    cfg.validate()?;
    spec.validate()?;
    let per_rep: Vec<Result<Vec<(MklModel, WeightRecord)>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let data = generate(spec, derive_seed(cfg.seed, rep as u64))?;
            let split = build_kernels(&data, cfg.width_rule)?;
            cfg.p_grid
                .iter()
                .map(|&p| {
                    let params = MklParams::new(c, p)
                        .with_svm_epsilon(cfg.svm_epsilon)
                        .with_tol(cfg.mkl_tol)
                        .with_max_outer(cfg.mkl_max_outer)
                        .with_update(cfg.weight_update);
                    let m = solve_lp_mkl(&split.train, &split.y_train, &params)?;
                    let rec = WeightRecord {
                        rep,
                        p,
                        beta: m.beta.clone(),
                        converged: m.converged,
                    };
                    Ok((m, rec))
                })
                .collect()
        })
        .collect();
    let mut fits = Vec::new();
    for r in per_rep {
        fits.push(r?);
    }
    if fits.is_empty() {
        return Err(MklError::Numerical("no repetitions".into()));
    }

    let mut per_norm = Vec::new();
    for (pi, &p) in cfg.p_grid.iter().enumerate() {
        let models: Vec<MklModel> = fits.iter().map(|f| f[pi].0.clone()).collect();
        let shape: Vec<f64> = models
            .iter()
            .map(|m| {
                let s: f64 = m.beta.iter().sum();
                population_variance(&m.beta.iter().map(|b| b / s).collect::<Vec<_>>())
            })
            .collect();
        let raw: Vec<f64> = models.iter().map(|m| population_variance(&m.beta)).collect();
        per_norm.push(NormWeights {
            p,
            mean_shape_variance: shape.iter().sum::<f64>() / shape.len() as f64,
            mean_raw_variance: raw.iter().sum::<f64>() / raw.len() as f64,
            reps_with_zero: models.iter().filter(|m| m.beta.iter().any(|&b| b == 0.0)).count(),
            min_weight: models.iter().flat_map(|m| m.beta.iter().copied()).fold(f64::INFINITY, f64::min),
            histogram: weight_histogram(&models, cfg.histogram_bins)?,
        });
    }
    let n_kernels = spec.n_groups() + spec.noise_groups;
    Ok(WeightsReport {
        kernel_names: (1..=n_kernels).map(|g| format!("group{g}")).collect(),
        c,
        records: fits.into_iter().flatten().map(|(_, r)| r).collect(),
        per_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::experiment1_spec;

    #[test]
    fn small_weights_run() {
        let mut spec = experiment1_spec();
        spec.group_sizes = vec![40, 40, 60];
        spec.n_train = 140;
        spec.n_test = 20;
        let mut cfg = RunConfig::for_task(super::super::Task::Weights);
        cfg.repetitions = 2;
        cfg.p_grid = vec![Norm::Finite(2.0), Norm::Infinity];
        let r = run_weights(&spec, &cfg, 1.0).unwrap();
        assert_eq!(r.records.len(), 4);
        let inf = r.norm(Norm::Infinity).unwrap();
        assert_eq!(inf.mean_shape_variance, 0.0);
        assert!(r.norm(Norm::Finite(2.0)).unwrap().min_weight > 0.0);
        assert_eq!(r.weights_csv().lines().count(), 1 + 4 * 3);
    }
}

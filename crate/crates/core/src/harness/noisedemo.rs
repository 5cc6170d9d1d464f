//! Averaging demonstration on noise-replicate kernels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MklError, Result};
use crate::kernel::{weighted_sum, KernelMatrix};
use crate::labels::LabelVector;
use crate::metrics::{conditional_std, mean_and_sample_std, EvalReport};
use crate::rng::derive_seed;
use crate::synthetic::{generate_noise_demo_base, noise_replicate_kernels};

use super::config::RunConfig;
use super::protocol::{Method, Split};
use super::toy::{select_and_test, MethodOutcome};

const REPLICATE_STREAM: u64 = 2;
const HOLDOUT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRep {
    pub rep: usize,
    pub seed: u64,
    pub outcomes: Vec<MethodOutcome>,
    /// Conditional std of each normalized replicate kernel (training block).
    pub replicate_cond_std: Vec<f64>,
    /// Conditional std of the β-combined kernel of every MKL method, renormalized.
    pub combined_cond_std: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub method: String,
    /// Test AP in percent across repetitions.
    pub report: EvalReport,
    pub conditional_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDemoReport {
    pub rows: Vec<DemoRow>,
    pub reps: Vec<NoiseRep>,
    pub failures: Vec<(usize, String)>,
}

impl NoiseDemoReport {
    pub fn row(&self, method: &str) -> Option<&DemoRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,ap_mean,ap_std,n,conditional_std\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{},{:.6}\n",
                r.method, r.report.mean, r.report.std, r.report.n_units, r.conditional_std
            ));
        }
        out
    }
}

fn normalized_cond_std(k: &KernelMatrix, y: &LabelVector) -> Result<f64> {
    conditional_std(&k.multiplicative_normalize()?, y)
}

pub fn noise_repetition(cfg: &RunConfig, rep: usize) -> Result<NoiseRep> {
    let spec = &cfg.noise_demo;
    let seed = derive_seed(cfg.seed, rep as u64);
    let (x, y_train, y_test) = generate_noise_demo_base(spec, seed)?;
    let y_all = LabelVector::new(y_train.values().iter().chain(y_test.values()).copied().collect())?;
    let kernels = noise_replicate_kernels(&x, &y_all, spec.replicates, spec.noise_level, derive_seed(seed, REPLICATE_STREAM))?;
    let train: Vec<usize> = (0..spec.n_train).collect();
    let test: Vec<usize> = (spec.n_train..spec.n_train + spec.n_test).collect();
    let mut split = Split::from_pooled(&kernels, &y_all, &train, &test);
    for (k, c) in split.train.iter_mut().zip(split.eval.iter_mut()) {
        let v = k.normalization_factor()?;
        *k = k.scaled(1.0 / v);
        *c = c.scaled(1.0 / v);
    }

    let mut methods: Vec<Method> = cfg.p_grid.iter().map(|&p| Method::Mkl(p)).collect();
    methods.extend((0..spec.replicates).map(Method::Single));
    let outcomes = select_and_test(&split, &methods, cfg, derive_seed(seed, HOLDOUT_STREAM))?;

    let replicate_cond_std = split
        .train
        .iter()
        .map(|k| conditional_std(k, &split.y_train))
        .collect::<Result<Vec<_>>>()?;
    let mut combined_cond_std = Vec::new();
    for o in outcomes.iter().take(cfg.p_grid.len()) {
        let k = weighted_sum(&split.train, &o.beta)?;
        combined_cond_std.push((o.method.clone(), normalized_cond_std(&k, &split.y_train)?));
    }
    Ok(NoiseRep {
        rep,
        seed,
        outcomes,
        replicate_cond_std,
        combined_cond_std,
    })
}

/// Runs the demonstration over `cfg.repetitions` seeds.
///
/// Rows: every MKL norm (`sum` is p = ∞), `best_single` (replicate with the
/// highest validation AP in each repetition), `oracle_single` (highest test AP)
/// and `mean_single` (average over replicates).
pub fn run_noisedemo(cfg: &RunConfig) -> Result<NoiseDemoReport> {
    cfg.validate()?;
    let total = cfg.repetitions;
    let results: Vec<(usize, Result<NoiseRep>)> = (0..total).into_par_iter().map(|r| (r, noise_repetition(cfg, r))).collect();
    let mut reps = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(v) => reps.push(v),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    if failures.len() * 100 > total || reps.is_empty() {
        return Err(MklError::Numerical(format!("{} of {total} repetitions failed", failures.len())));
    }

    let n_mkl = cfg.p_grid.len();
    let mut rows = Vec::new();
    for m in 0..n_mkl {
        let aps: Vec<f64> = reps.iter().map(|r| 100.0 * r.outcomes[m].test_ap).collect();
        let cs: Vec<f64> = reps.iter().map(|r| r.combined_cond_std[m].1).collect();
        rows.push(DemoRow {
            method: reps[0].outcomes[m].method.clone(),
            report: EvalReport::new(reps[0].outcomes[m].method.clone(), aps)?,
            conditional_std: mean_and_sample_std(&cs).0,
        });
    }
    let mut best = (Vec::new(), Vec::new());
    let mut oracle = Vec::new();
    let mut mean_ap = Vec::new();
    let mut mean_cs = Vec::new();
    for r in &reps {
        let singles = &r.outcomes[n_mkl..];
        let pick = (0..singles.len())
            .fold(0, |b, i| if singles[i].validation_ap > singles[b].validation_ap { i } else { b });
        best.0.push(100.0 * singles[pick].test_ap);
        best.1.push(r.replicate_cond_std[pick]);
        oracle.push(100.0 * singles.iter().map(|o| o.test_ap).fold(f64::NEG_INFINITY, f64::max));
        mean_ap.push(100.0 * singles.iter().map(|o| o.test_ap).sum::<f64>() / singles.len() as f64);
        mean_cs.push(mean_and_sample_std(&r.replicate_cond_std).0);
    }
    let cs_mean = mean_and_sample_std(&mean_cs).0;
    rows.push(DemoRow {
        method: "best_single".into(),
        report: EvalReport::new("best_single", best.0)?,
        conditional_std: mean_and_sample_std(&best.1).0,
    });
    rows.push(DemoRow {
        method: "oracle_single".into(),
        report: EvalReport::new("oracle_single", oracle)?,
        conditional_std: cs_mean,
    });
    rows.push(DemoRow {
        method: "mean_single".into(),
        report: EvalReport::new("mean_single", mean_ap)?,
        conditional_std: cs_mean,
    });
    Ok(NoiseDemoReport { rows, reps, failures })
}

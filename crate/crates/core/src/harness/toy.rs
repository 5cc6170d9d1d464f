//! Repeated synthetic experiments with per-method C selection.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MklError, Result};
use crate::kernel::{gaussian_cross_kernel, gaussian_kernel, WidthRule};
use crate::metrics::EvalReport;
use crate::rng::{derive_seed, SplitMix64};
use crate::significance::{paired_t_test, welch_t_test, TestResult};
use crate::synthetic::{experiment1_spec, experiment2_spec, generate, SyntheticDataset, SyntheticSpec};

use super::config::RunConfig;
use super::protocol::{best_index, c_path, fit_and_score, stratified_holdout, FitSettings, Method, Split};

/// Sub-stream used for the validation holdout of a repetition.
const HOLDOUT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: String,
    pub selected_c: f64,
    pub validation_ap: f64,
    pub test_ap: f64,
    pub beta: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRep {
    pub rep: usize,
    pub seed: u64,
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method_a: String,
    pub method_b: String,
    /// Mean of `a − b` in AP percent.
    pub mean_diff: f64,
    pub welch: TestResult,
    pub paired: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub spec: SyntheticSpec,
    pub kernel_names: Vec<String>,
    /// Test AP in percent, one report per method.
    pub reports: Vec<EvalReport>,
    pub comparisons: Vec<Comparison>,
    pub reps: Vec<ToyRep>,
    pub failures: Vec<(usize, String)>,
}

impl ToyReport {
    pub fn report(&self, method: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.method_name == method)
    }

    pub fn comparison(&self, a: &str, b: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.method_a == a && c.method_b == b)
    }
}

pub fn experiment_spec(experiment: u8) -> Result<SyntheticSpec> {
    match experiment {
        1 => Ok(experiment1_spec()),
        2 => Ok(experiment2_spec()),
        other => invalid(format!("unknown experiment {other}; expected 1 or 2")),
    }
}

/// MKL at every grid norm, then one SVM per base kernel when enabled.
pub fn toy_methods(cfg: &RunConfig, n_kernels: usize) -> Vec<Method> {
    let mut out: Vec<Method> = cfg.p_grid.iter().map(|&p| Method::Mkl(p)).collect();
    if cfg.single_kernels {
        out.extend((0..n_kernels).map(Method::Single));
    }
    out
}

/// Per-group Gaussian kernels with a heuristic width, each divided by the
/// variance statistic of its training block.
pub fn build_kernels(data: &SyntheticDataset, rule: WidthRule) -> Result<Split> {
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for (g, (tr, te)) in data.train.groups.iter().zip(&data.test.groups).enumerate() {
        let width = rule.width(tr)?;
        let k = gaussian_kernel(tr, width)?;
        let v = k.normalization_factor()?;
        train.push(k.scaled(1.0 / v).with_name(format!("group{}", g + 1)));
        eval.push(gaussian_cross_kernel(tr, te, width)?.scaled(1.0 / v));
    }
    Ok(Split {
        train,
        y_train: data.train.labels.clone(),
        eval,
        y_eval: data.test.labels.clone(),
    })
}

/// Selects C on a stratified holdout of the training set, then refits on
/// the full training set and scores the test set.
pub fn select_and_test(split: &Split, methods: &[Method], cfg: &RunConfig, holdout_seed: u64) -> Result<Vec<MethodOutcome>> {
    let settings = FitSettings::from(cfg);
    let grid = cfg.sorted_c_grid();
    let mut rng = SplitMix64::new(holdout_seed);
    let (fit_idx, val_idx) = stratified_holdout(&split.y_train, cfg.validation_fraction, &mut rng)?;
    let inner = split.holdout(&fit_idx, &val_idx);
    let names = split.names();
    methods
        .iter()
        .map(|&m| {
            let path = c_path(&inner, m, &grid, &settings)?;
            let b = best_index(&path).expect("nonempty C grid");
            let fit = fit_and_score(split, m, path[b].c, &settings)?;
            Ok(MethodOutcome {
                method: m.label(&names),
                selected_c: fit.c,
                validation_ap: path[b].ap,
                test_ap: fit.ap,
                beta: fit.beta,
                converged: fit.converged && path.iter().all(|f| f.converged),
            })
        })
        .collect()
}

pub fn toy_repetition(spec: &SyntheticSpec, cfg: &RunConfig, rep: usize) -> Result<ToyRep> {
    let seed = derive_seed(cfg.seed, rep as u64);
    let data = generate(spec, seed)?;
    let split = build_kernels(&data, cfg.width_rule)?;
    let methods = toy_methods(cfg, split.train.len());
    let outcomes = select_and_test(&split, &methods, cfg, derive_seed(seed, HOLDOUT_STREAM))?;
    Ok(ToyRep { rep, seed, outcomes })
}

pub fn run_toy(experiment: u8, cfg: &RunConfig) -> Result<ToyReport> {
    run_toy_with_spec(&experiment_spec(experiment)?, cfg, &|_, _| {})
}

/// Runs all repetitions; `progress(done, total)` is called after each one.
pub fn run_toy_with_spec(spec: &SyntheticSpec, cfg: &RunConfig, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<ToyReport> {
    cfg.validate()?;
    spec.validate()?;
    let total = cfg.repetitions;
    let done = AtomicUsize::new(0);
    let results: Vec<(usize, Result<ToyRep>)> = (0..total)
        .into_par_iter()
        .map(|rep| {
            let r = toy_repetition(spec, cfg, rep);
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            (rep, r)
        })
        .collect();

    let mut reps = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in results {
        match r {
            Ok(v) => reps.push(v),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if failures.len() * 100 > total {
        return Err(MklError::Numerical(format!(
            "{} of {total} repetitions failed; first: {}",
            failures.len(),
            failures[0].1
        )));
    }
    if reps.is_empty() {
        return Err(MklError::Numerical("no repetition succeeded".into()));
    }
    let n_kernels = spec.n_groups() + spec.noise_groups;
    let kernel_names = (1..=n_kernels).map(|g| format!("group{g}")).collect();
    let (reports, comparisons) = summarize(&reps)?;
    Ok(ToyReport {
        spec: spec.clone(),
        kernel_names,
        reports,
        comparisons,
        reps,
        failures,
    })
}

/// Per-method AP reports (percent) and pairwise tests over repetitions.
pub fn summarize(reps: &[ToyRep]) -> Result<(Vec<EvalReport>, Vec<Comparison>)> {
    let methods: Vec<String> = reps[0].outcomes.iter().map(|o| o.method.clone()).collect();
    let scores: Vec<Vec<f64>> = (0..methods.len())
        .map(|m| reps.iter().map(|r| 100.0 * r.outcomes[m].test_ap).collect())
        .collect();
    let reports = methods
        .iter()
        .zip(&scores)
        .map(|(name, s)| EvalReport::new(name.clone(), s.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut comparisons = Vec::new();
    if reps.len() >= 2 {
        for a in 0..methods.len() {
            for b in 0..methods.len() {
                if a == b {
                    continue;
                }
                let diff = scores[a].iter().zip(&scores[b]).map(|(x, y)| x - y).sum::<f64>() / reps.len() as f64;
                comparisons.push(Comparison {
                    method_a: methods[a].clone(),
                    method_b: methods[b].clone(),
                    mean_diff: diff,
                    welch: welch_t_test(&scores[a], &scores[b])?,
                    paired: paired_t_test(&scores[a], &scores[b])?,
                });
            }
        }
    }
    Ok((reports, comparisons))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mkl::Norm;

    fn small_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.repetitions = 2;
        cfg.p_grid = vec![Norm::Finite(1.0625), Norm::Infinity];
        cfg.c_grid = vec![0.1, 1.0];
        cfg
    }

    fn small_spec() -> SyntheticSpec {
        let mut spec = experiment1_spec();
        spec.group_sizes = vec![40, 40, 60];
        spec.n_train = 140;
        spec.n_test = 140;
        spec
    }

    #[test]
    fn repetition_reports_every_method() {
        let rep = toy_repetition(&small_spec(), &small_cfg(), 0).unwrap();
        let names: Vec<&str> = rep.outcomes.iter().map(|o| o.method.as_str()).collect();
        assert_eq!(names, ["l1.0625", "sum", "single:group1", "single:group2", "single:group3"]);
        for o in &rep.outcomes {
            assert!((0.0..=1.0).contains(&o.test_ap));
            assert!([0.1, 1.0].contains(&o.selected_c));
        }
        let sum = &rep.outcomes[1];
        assert!(sum.beta.iter().all(|&b| b == 1.0 / 3.0));
    }

    #[test]
    fn run_is_deterministic_and_summarized() {
        let a = run_toy_with_spec(&small_spec(), &small_cfg(), &|_, _| {}).unwrap();
        let b = run_toy_with_spec(&small_spec(), &small_cfg(), &|_, _| {}).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.reports.len(), 5);
        assert_eq!(a.comparisons.len(), 20);
        assert!(a.failures.is_empty());
        let r = a.report("sum").unwrap();
        assert_eq!(r.n_units, 2);
    }

    #[test]
    fn unknown_experiment_rejected() {
        assert!(experiment_spec(3).is_err());
    }
}

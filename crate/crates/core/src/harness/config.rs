use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::WidthRule;
use crate::mkl::{Norm, WeightUpdate};
use crate::synthetic::NoiseDemoSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Toy1,
    Toy2,
    Cv,
    Align,
    Weights,
    Noisedemo,
}

/// `{10^e : e = from, from + step, …, to}`.
pub fn log_grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step).round() as usize;
    (0..=count).map(|i| 10f64.powf(from + i as f64 * step)).collect()
}

/// C grid used for precomputed-kernel cross-validation.
pub fn cv_c_grid() -> Vec<f64> {
    log_grid(-1.0, 1.0, 0.5)
}

/// C grid used for the synthetic experiments.
pub fn toy_c_grid() -> Vec<f64> {
    log_grid(-2.0, 2.0, 0.5)
}

pub fn cv_p_grid() -> Vec<Norm> {
    vec![
        Norm::Finite(1.0),
        Norm::Finite(1.125),
        Norm::Finite(1.333),
        Norm::Finite(2.0),
        Norm::Infinity,
    ]
}

pub fn toy_p_grid() -> Vec<Norm> {
    vec![
        Norm::Finite(1.0),
        Norm::Finite(1.0625),
        Norm::Finite(1.125),
        Norm::Finite(1.25),
        Norm::Finite(1.333),
        Norm::Finite(2.0),
        Norm::Infinity,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub task: Task,
    pub p_grid: Vec<Norm>,
    pub c_grid: Vec<f64>,
    pub repetitions: usize,
    pub folds: usize,
    pub seed: u64,
    pub kernel_paths: Vec<PathBuf>,
    pub label_paths: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Fraction of each synthetic training set held out to select C.
    pub validation_fraction: f64,
    /// Also fit one SVM per base kernel in the synthetic experiments.
    pub single_kernels: bool,
    pub svm_epsilon: f64,
    pub mkl_tol: f64,
    pub mkl_max_outer: usize,
    pub weight_update: WeightUpdate,
    /// Center kernels before pairwise alignment.
    pub center_alignment: bool,
    pub histogram_bins: usize,
    pub width_rule: WidthRule,
    /// Pure-noise groups appended to the synthetic data (weights task).
    pub noise_groups: usize,
    pub noise_demo: NoiseDemoSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_task(Task::Toy1)
    }
}

impl RunConfig {
    pub fn for_task(task: Task) -> Self {
        let synthetic = matches!(task, Task::Toy1 | Task::Toy2 | Task::Weights | Task::Noisedemo);
        Self {
            task,
            p_grid: if synthetic { toy_p_grid() } else { cv_p_grid() },
            c_grid: if synthetic { toy_c_grid() } else { cv_c_grid() },
            repetitions: match task {
                Task::Toy1 | Task::Toy2 => 500,
                Task::Weights | Task::Noisedemo => 50,
                _ => 1,
            },
            folds: 5,
            seed: 1,
            kernel_paths: Vec::new(),
            label_paths: Vec::new(),
            out_dir: None,
            validation_fraction: 0.2,
            single_kernels: true,
            svm_epsilon: crate::svm::DEFAULT_EPSILON,
            mkl_tol: 1e-4,
            mkl_max_outer: 200,
            weight_update: WeightUpdate::ScaledNorm,
            center_alignment: true,
            histogram_bins: 20,
            width_rule: WidthRule::MeanDistance,
            noise_groups: if task == Task::Weights { 2 } else { 0 },
            noise_demo: NoiseDemoSpec::default(),
        }
    }

    /// Reads a JSON config; missing fields take the defaults of `task`.
    pub fn from_json_file(path: &Path, task: Task) -> Result<Self> {
        Self::for_task(task).overlay_json_file(path)
    }

    /// Replaces every field present in the JSON file, keeping the rest of `self`.
    pub fn overlay_json_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let Some(over) = value.as_object() else {
            return invalid(format!("{} is not a JSON object", path.display()));
        };
        let mut base = serde_json::to_value(self)?;
        if let serde_json::Value::Object(obj) = &mut base {
            for (k, v) in over {
                obj.insert(k.clone(), v.clone());
            }
        }
        let cfg: Self = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() || self.c_grid.is_empty() {
            return invalid("p and C grids must be nonempty");
        }
        if self.c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return invalid("C grid values must be positive and finite");
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be >= 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return invalid("validation fraction must lie in (0, 1)");
        }
        if self.task == Task::Cv && self.folds < 2 {
            return invalid("cross-validation needs at least 2 folds");
        }
        for p in self.kernel_paths.iter().chain(&self.label_paths) {
            if !p.exists() {
                return invalid(format!("input path {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    /// C grid in ascending order (warm starts walk upward).
    pub fn sorted_c_grid(&self) -> Vec<f64> {
        let mut g = self.c_grid.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = toy_c_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[8] - 100.0).abs() < 1e-12);
        assert_eq!(cv_c_grid().len(), 5);
    }

    #[test]
    fn json_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"repetitions": 7, "p_grid": [1.5, "inf"]}"#).unwrap();
        let cfg = RunConfig::from_json_file(&path, Task::Toy2).unwrap();
        assert_eq!(cfg.repetitions, 7);
        assert_eq!(cfg.p_grid, vec![Norm::Finite(1.5), Norm::Infinity]);
        assert_eq!(cfg.task, Task::Toy2);
        assert_eq!(cfg.c_grid.len(), 9);
    }

    #[test]
    fn validation_rejects_empty_grids() {
        let mut cfg = RunConfig::for_task(Task::Cv);
        cfg.p_grid.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::for_task(Task::Cv);
        cfg.folds = 1;
        assert!(cfg.validate().is_err());
    }
}

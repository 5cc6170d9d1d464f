//! Output directories: one CSV per table plus `manifest.json`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::kernel::{gaussian_kernel, WidthRule};
use crate::kmx;
use crate::synthetic::{generate, SyntheticSpec};

use super::align::AlignReport;
use super::config::RunConfig;
use super::cv::CvReport;
use super::noisedemo::NoiseDemoReport;
use super::toy::ToyReport;
use super::weights::WeightsReport;

#[derive(Serialize)]
struct Manifest<'a> {
    task: &'a str,
    version: &'a str,
    seed: u64,
    wall_time_seconds: f64,
    files: Vec<String>,
    config: &'a RunConfig,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn put(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, task: &str, cfg: &RunConfig, wall: f64) -> Result<()> {
        self.files.push("manifest.json".into());
        let m = Manifest {
            task,
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            wall_time_seconds: wall,
            files: self.files.clone(),
            config: cfg,
        };
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }
}

fn p_value(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn toy_table_csv(r: &ToyReport) -> String {
    let mut out = String::from("method,mean_ap,std_ap,n,diff_vs_sum,welch_p_vs_sum,paired_p_vs_sum\n");
    for rep in &r.reports {
        let cmp = r.comparison(&rep.method_name, "sum");
        let (d, w, p) = match cmp {
            Some(c) => (format!("{:.4}", c.mean_diff), p_value(c.welch.p_value), p_value(c.paired.p_value)),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!("{},{:.4},{:.4},{},{d},{w},{p}\n", rep.method_name, rep.mean, rep.std, rep.n_units));
    }
    out
}

pub fn write_toy(dir: &Path, r: &ToyReport, cfg: &RunConfig, wall: f64) -> Result<()> {
    let mut w = Writer::new(dir)?;
    w.put("table6.csv", toy_table_csv(r))?;

    let mut reps = String::from("rep,seed,method,selected_c,validation_ap,test_ap,converged\n");
    let mut weights = String::from("rep,method,kernel,weight\n");
    for rep in &r.reps {
        for o in &rep.outcomes {
            reps.push_str(&format!(
                "{},{},{},{},{:.10},{:.10},{}\n",
                rep.rep, rep.seed, o.method, o.selected_c, o.validation_ap, o.test_ap, o.converged
            ));
            if !o.method.starts_with("single:") {
                for (k, b) in r.kernel_names.iter().zip(&o.beta) {
                    weights.push_str(&format!("{},{},{},{}\n", rep.rep, o.method, k, b));
                }
            }
        }
    }
    w.put("repetitions.csv", reps)?;
    w.put("weights.csv", weights)?;

    let mut cmp = String::from("method_a,method_b,mean_diff,welch_t,welch_p,paired_t,paired_p\n");
    for c in &r.comparisons {
        cmp.push_str(&format!(
            "{},{},{:.6},{:.6},{},{:.6},{}\n",
            c.method_a,
            c.method_b,
            c.mean_diff,
            c.welch.statistic,
            p_value(c.welch.p_value),
            c.paired.statistic,
            p_value(c.paired.p_value)
        ));
    }
    w.put("comparisons.csv", cmp)?;

    let mut fails = String::from("rep,error\n");
    for (rep, e) in &r.failures {
        fails.push_str(&format!("{rep},\"{}\"\n", e.replace('"', "'")));
    }
    w.put("failures.csv", fails)?;
    w.put("spec.json", serde_json::to_string_pretty(&r.spec)?)?;
    w.finish("toy", cfg, wall)
}

pub fn write_cv(dir: &Path, r: &CvReport, cfg: &RunConfig, wall: f64) -> Result<()> {
    let mut w = Writer::new(dir)?;
    let mut grid = String::from("class,fold,p,c,validation_ap\n");
    for rec in &r.records {
        grid.push_str(&format!("{},{},{},{},{:.10}\n", rec.class, rec.fold, rec.p, rec.c, rec.ap));
    }
    w.put("cv_grid.csv", grid)?;
    let mut per_p = String::from("class,p,best_c,mean_ap,std_ap,folds\n");
    let mut sel = String::from("class,selected_p,selected_c,mean_ap,std_ap\n");
    for c in &r.classes {
        for s in &c.per_p {
            per_p.push_str(&format!(
                "{},{},{},{:.4},{:.4},{}\n",
                c.class, s.p, s.best_c, s.report.mean, s.report.std, s.report.n_units
            ));
        }
        sel.push_str(&format!(
            "{},{},{},{:.4},{:.4}\n",
            c.class, c.selected_p, c.selected_c, c.selected.mean, c.selected.std
        ));
    }
    w.put("cv_per_norm.csv", per_p)?;
    w.put("cv_selection.csv", sel)?;
    w.finish("cv", cfg, wall)
}

pub fn write_align(dir: &Path, r: &AlignReport, cfg: &RunConfig, wall: f64) -> Result<()> {
    let mut w = Writer::new(dir)?;
    w.put("alignment_matrix.csv", r.matrix.to_csv())?;
    w.put("kta_profile.csv", r.profile_csv())?;
    w.finish("align", cfg, wall)
}

pub fn write_noisedemo(dir: &Path, r: &NoiseDemoReport, cfg: &RunConfig, wall: f64) -> Result<()> {
    let mut w = Writer::new(dir)?;
    w.put("table7.csv", r.to_csv())?;
    let mut reps = String::from("rep,seed,method,selected_c,validation_ap,test_ap\n");
    for rep in &r.reps {
        for o in &rep.outcomes {
            reps.push_str(&format!(
                "{},{},{},{},{:.10},{:.10}\n",
                rep.rep, rep.seed, o.method, o.selected_c, o.validation_ap, o.test_ap
            ));
        }
    }
    w.put("repetitions.csv", reps)?;
    w.finish("noisedemo", cfg, wall)
}

pub fn write_weights(dir: &Path, r: &WeightsReport, cfg: &RunConfig, wall: f64) -> Result<()> {
    let mut w = Writer::new(dir)?;
    w.put("weights.csv", r.weights_csv())?;
    w.put("weight_summary.csv", r.summary_csv())?;
    w.put("weight_histogram.csv", r.histogram_csv())?;
    w.finish("weights", cfg, wall)
}

/// Writes a synthetic dataset: feature CSVs, label files, the generator settings as JSON,
/// and optionally the raw Gaussian training kernels as KMX1 files.
/// Returns the kernel paths written.
pub fn export_dataset(dir: &Path, spec: &SyntheticSpec, seed: u64, kernels: Option<WidthRule>) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let data = generate(spec, seed)?;
    fs::write(dir.join("train.csv"), data.train.to_csv())?;
    fs::write(dir.join("test.csv"), data.test.to_csv())?;
    data.train.labels.write(dir.join("train_labels.txt"))?;
    data.test.labels.write(dir.join("test_labels.txt"))?;
    fs::write(dir.join("spec.json"), serde_json::to_string_pretty(&data.spec)?)?;
    let mut paths = Vec::new();
    if let Some(rule) = kernels {
        for (g, x) in data.train.groups.iter().enumerate() {
            let k = gaussian_kernel(x, rule.width(x)?)?.with_name(format!("group{}", g + 1));
            let path = dir.join(format!("group{}.kmx", g + 1));
            kmx::write(&path, &k)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lpmkl::harness::align::run_align_files;
use lpmkl::harness::cv::run_cv_files;
use lpmkl::harness::noisedemo::run_noisedemo;
use lpmkl::harness::output::{export_dataset, write_align, write_cv, write_noisedemo, write_toy, write_weights};
use lpmkl::harness::toy::{experiment_spec, run_toy_with_spec};
use lpmkl::harness::weights::run_weights;
use lpmkl::harness::{RunConfig, Task};
use lpmkl::kernel::WidthRule;
use lpmkl::Norm;

#[derive(Parser)]
#[command(name = "lpmkl", version, about = "lp-norm multiple kernel learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated synthetic experiment (sum kernel vs lp-MKL vs single kernels).
    Toy(ToyArgs),
    /// Cross-validation over precomputed KMX1 kernels with class-wise (C, p) selection.
    Cv(CvArgs),
    /// Pairwise kernel alignment and per-class KTA profiles.
    Align(AlignArgs),
    /// Averaging demonstration on noise-replicate kernels.
    Noisedemo(NoiseArgs),
    /// Kernel-weight behavior across norms at a fixed C.
    Weights(WeightsArgs),
    /// Writes one synthetic dataset (features, labels, KMX1 kernels).
    Export(ExportArgs),
}

#[derive(Args)]
struct Common {
    /// JSON file whose fields override the command-line values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated norms; `inf` is the uniform sum kernel.
    #[arg(long, value_delimiter = ',', value_parser = parse_norm)]
    p_grid: Option<Vec<Norm>>,
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Width {
    MeanDistance,
    MeanSquaredDistance,
}

impl From<Width> for WidthRule {
    fn from(w: Width) -> Self {
        match w {
            Width::MeanDistance => WidthRule::MeanDistance,
            Width::MeanSquaredDistance => WidthRule::MeanSquaredDistance,
        }
    }
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    experiment: u8,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_enum)]
    width_rule: Option<Width>,
    /// Skip the per-kernel SVM baselines.
    #[arg(long)]
    no_singles: bool,
    #[arg(long)]
    quiet: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    kernels: Vec<PathBuf>,
    /// One label file per class; the file stem names the class.
    #[arg(long, value_delimiter = ',', required = true)]
    labels: Vec<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    kernels: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    labels: Vec<PathBuf>,
    /// Use uncentered alignment for the pairwise matrix.
    #[arg(long)]
    uncentered: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    experiment: u8,
    #[arg(long)]
    reps: Option<usize>,
    /// Fixed regularization constant.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Pure-noise kernels appended to the informative groups.
    #[arg(long)]
    noise_groups: Option<usize>,
    #[arg(long, value_enum)]
    width_rule: Option<Width>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    experiment: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    noise_groups: usize,
    /// Features and labels only.
    #[arg(long)]
    no_kernels: bool,
    #[arg(long, value_enum, default_value = "mean-distance")]
    width_rule: Width,
    #[arg(long)]
    out: PathBuf,
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    s.parse().map_err(|e: lpmkl::MklError| e.to_string())
}

fn configure(task: Task, common: &Common, apply: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let mut cfg = RunConfig::for_task(task);
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = &common.p_grid {
        cfg.p_grid = p.clone();
    }
    if let Some(c) = &common.c_grid {
        cfg.c_grid = c.clone();
    }
    cfg.out_dir = Some(common.out.clone());
    apply(&mut cfg);
    finish_config(cfg, common.config.as_deref())
}

fn finish_config(cfg: RunConfig, config: Option<&Path>) -> Result<RunConfig> {
    let cfg = match config {
        Some(path) => cfg
            .overlay_json_file(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    match cfg.out_dir.as_deref() {
        Some(p) => Ok(p),
        None => bail!("no output directory given"),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let start = Instant::now();
    match cli.command {
        Command::Toy(a) => {
            let task = if a.experiment == 1 { Task::Toy1 } else { Task::Toy2 };
            let cfg = configure(task, &a.common, |c| {
                if let Some(r) = a.reps {
                    c.repetitions = r;
                }
                if let Some(w) = a.width_rule {
                    c.width_rule = w.into();
                }
                if a.no_singles {
                    c.single_kernels = false;
                }
            })?;
            let spec = experiment_spec(if cfg.task == Task::Toy2 { 2 } else { 1 })?;
            let quiet = a.quiet;
            let report = run_toy_with_spec(&spec, &cfg, &|done, total| {
                if !quiet && (done % 10 == 0 || done == total) {
                    eprintln!("{done}/{total} repetitions");
                }
            })?;
            write_toy(out_dir(&cfg)?, &report, &cfg, start.elapsed().as_secs_f64())?;
            for r in &report.reports {
                println!("{:<16} {:>7.2} ± {:.2}", r.method_name, r.mean, r.std);
            }
            if !report.failures.is_empty() {
                eprintln!("{} repetitions failed", report.failures.len());
            }
        }
        Command::Cv(a) => {
            let cfg = configure(Task::Cv, &a.common, |c| {
                c.kernel_paths = a.kernels.clone();
                c.label_paths = a.labels.clone();
                if let Some(f) = a.folds {
                    c.folds = f;
                }
            })?;
            let report = run_cv_files(&cfg.kernel_paths, &cfg.label_paths, &cfg)?;
            write_cv(out_dir(&cfg)?, &report, &cfg, start.elapsed().as_secs_f64())?;
            for c in &report.classes {
                println!(
                    "{}: p={} C={} AP {:.2} ± {:.2}",
                    c.class, c.selected_p, c.selected_c, c.selected.mean, c.selected.std
                );
            }
        }
        Command::Align(a) => {
            let mut cfg = RunConfig::for_task(Task::Align);
            cfg.kernel_paths = a.kernels;
            cfg.label_paths = a.labels;
            cfg.center_alignment = !a.uncentered;
            cfg.out_dir = Some(a.out);
            let cfg = finish_config(cfg, a.config.as_deref())?;
            let report = run_align_files(&cfg.kernel_paths, &cfg.label_paths, cfg.center_alignment)?;
            write_align(out_dir(&cfg)?, &report, &cfg, start.elapsed().as_secs_f64())?;
        }
        Command::Noisedemo(a) => {
            let cfg = configure(Task::Noisedemo, &a.common, |c| {
                if let Some(r) = a.reps {
                    c.repetitions = r;
                }
            })?;
            let report = run_noisedemo(&cfg)?;
            write_noisedemo(out_dir(&cfg)?, &report, &cfg, start.elapsed().as_secs_f64())?;
            print!("{}", report.to_csv());
        }
        Command::Weights(a) => {
            let cfg = configure(Task::Weights, &a.common, |c| {
                if let Some(r) = a.reps {
                    c.repetitions = r;
                }
                if let Some(g) = a.noise_groups {
                    c.noise_groups = g;
                }
                if let Some(w) = a.width_rule {
                    c.width_rule = w.into();
                }
            })?;
            let mut spec = experiment_spec(a.experiment)?;
            spec.noise_groups = cfg.noise_groups;
            let report = run_weights(&spec, &cfg, a.c)?;
            write_weights(out_dir(&cfg)?, &report, &cfg, start.elapsed().as_secs_f64())?;
            print!("{}", report.summary_csv());
        }
        Command::Export(a) => {
            let mut spec = experiment_spec(a.experiment)?;
            spec.noise_groups = a.noise_groups;
            let kernels = (!a.no_kernels).then(|| a.width_rule.into());
            for p in export_dataset(&a.out, &spec, a.seed, kernels)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

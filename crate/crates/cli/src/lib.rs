//! Experiment runner behind the `cct` binary.

pub mod config;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use cct_core::{full_retrain_baseline, run_experiment};
use clap::{Args, Parser, Subcommand};

use config::{ConfigErrors, Overrides, RunConfigFile};

#[derive(Debug, Parser)]
#[command(name = "cct", version, about = "Incremental class learning with a confidence threshold")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one incremental experiment.
    Run(RunArgs),
    /// Run the experiment and the full-retrain control on the same seed.
    Compare(RunArgs),
    /// Check a configuration file and print it with defaults filled in.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "ct-a", allow_negative_numbers = true)]
    pub ct_a: Option<f64>,
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug)]
pub enum Failure {
    /// Exit status 2.
    Config(ConfigErrors),
    /// Exit status 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(errors) => {
                for e in &errors.0 {
                    writeln!(f, "config error: {e}")?;
                }
                Ok(())
            }
            Failure::Runtime(e) => writeln!(f, "error: {e:#}"),
        }
    }
}

impl From<ConfigErrors> for Failure {
    fn from(e: ConfigErrors) -> Self {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn prepare(args: &RunArgs) -> Result<RunConfigFile, Failure> {
    let mut cfg = RunConfigFile::load(&args.config)?;
    cfg.apply(&Overrides {
        seed: args.seed,
        out: args.out.clone(),
        ct_a: args.ct_a,
        no_plot: args.no_plot,
    });
    cfg.validate()?;
    Ok(cfg.normalized())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare(args)?;
    let dataset = cfg.build_dataset().context("loading dataset")?;
    let start = Instant::now();
    let log = run_experiment(&dataset, &cfg.experiment_config()).context("running experiment")?;
    let elapsed = start.elapsed().as_secs_f64();

    let dir = &cfg.output.dir;
    create_dir(dir)?;
    output::write(dir, "iterations.csv", &output::iterations_csv(&log.reports))?;
    output::write(dir, "summary.json", &output::summary_json(&cfg, &log))?;
    output::write(dir, "timing.json", &output::timing_json(&[("run", elapsed)]))?;
    if cfg.output.plot {
        output::write(dir, "accuracy.svg", &output::accuracy_svg(&log))?;
    }
    match log.ila {
        Some(ila) => println!("ila {ila} over {} iterations", log.reports.len()),
        None => println!("no iterations"),
    }
    Ok(())
}

pub fn cmd_compare(args: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare(args)?;
    let experiment = cfg.experiment_config();
    if experiment.iteration_count() == 0 {
        return Err(ConfigErrors(vec!["no iterations to compare".into()]).into());
    }
    let dataset = cfg.build_dataset().context("loading dataset")?;
    let start = Instant::now();
    let cct = run_experiment(&dataset, &experiment).context("running experiment")?;
    let cct_time = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let baseline = full_retrain_baseline(&dataset, &experiment).context("running full-retrain baseline")?;
    let baseline_time = start.elapsed().as_secs_f64();

    let dir = &cfg.output.dir;
    create_dir(dir)?;
    output::write(dir, "compare.csv", &output::compare_csv(&cct, &baseline))?;
    output::write(
        dir,
        "timing.json",
        &output::timing_json(&[("cct", cct_time), ("baseline", baseline_time)]),
    )?;
    if cfg.output.plot {
        output::write(dir, "compare.svg", &output::compare_svg(&cct, &baseline))?;
    }
    println!(
        "ila cct {} baseline {}",
        cct.ila.unwrap_or(f64::NAN),
        baseline.ila.unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<(), Failure> {
    let cfg = RunConfigFile::load(&args.config)?;
    cfg.validate()?;
    let text = toml::to_string(&cfg.normalized())
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("echoing config: {e}")))?;
    print!("{text}");
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

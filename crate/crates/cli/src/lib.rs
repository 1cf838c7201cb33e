//! Batch runner for the hypboundary experiments.

pub mod cache;
pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use config::{ConfigError, Experiment, ExperimentConfig, ValueList};
use experiments::{Context, RunError};

#[derive(Parser, Debug)]
#[command(name = "hypboundary", about = "Run boundary-representation experiments on free groups")]
struct Args {
    /// Experiment name; may instead come from the config file.
    experiment: Option<String>,
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    spec1: Option<String>,
    #[arg(long)]
    spec2: Option<String>,
    /// JSON file with an ExperimentConfig; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Radii, levels or word lengths: "3..8", "8" or "1,2,5".
    #[arg(long = "R")]
    radii: Option<String>,
    /// Kernel: "one" or "indicator:<u>,<v>".
    #[arg(long = "K")]
    kernel: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    rho_double: Option<f64>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
}

fn flags(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let experiment = args
        .experiment
        .as_deref()
        .map(|s| s.parse::<Experiment>().map_err(ConfigError::Invalid))
        .transpose()?;
    Ok(ExperimentConfig {
        experiment,
        spec: args.spec.clone(),
        spec1: args.spec1.clone(),
        spec2: args.spec2.clone(),
        radii: args.radii.clone().map(ValueList::Text),
        kernel: args.kernel.clone(),
        depth: args.depth,
        max_len: args.max_len,
        rho: args.rho,
        rho_double: args.rho_double,
        half_width: args.half_width,
        threshold: args.threshold,
        seed: args.seed,
        out: args.out.clone(),
    })
}

fn load(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    Ok(file.overlay(flags(args)?))
}

/// Parses arguments, runs one experiment and writes its artifacts. Returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return RunError::Config(e).exit_code();
        }
    };
    let exp = match cfg.experiment() {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context {
        cache_dir: cache::cache_dir(&out_dir),
    };
    let outcome = match experiments::run(exp, &cfg, &ctx) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    // the echo leaves out the output path so artifacts do not depend on where they land
    let echo = ExperimentConfig {
        out: None,
        ..cfg.clone()
    };
    let echo = serde_json::to_value(&echo).expect("config serializes");
    let (csv_path, json_path) = match outcome.write(&out_dir, exp.name(), &echo) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: writing artifacts to {}: {e}", out_dir.display());
            return 2;
        }
    };
    println!("{}", csv_path.display());
    println!("{}", json_path.display());
    if outcome.passed() {
        0
    } else {
        for (name, a) in outcome.assertions.iter().filter(|(_, a)| !a.pass) {
            eprintln!("assertion {name} failed: observed {} bound {}", a.observed, a.bound);
            for row in &a.failing {
                eprintln!("  {row}");
            }
        }
        1
    }
}

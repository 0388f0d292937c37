//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{Command, ExperimentConfig};
use crate::output::{write_images, write_summary, write_tables};
use crate::plot::emit_plot_data;
use crate::pool::worker_count;
use crate::run::{build_problems, median, solve_all, Method, RunRecord};

/// Exit status for bad arguments or config.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when a solver diverges.
pub const EXIT_SOLVER: u8 = 3;
/// Exit status for I/O and format failures.
pub const EXIT_OTHER: u8 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "lowrank",
    version,
    about = "Low-rank matrix recovery experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Complete an 8-bit PGM/PPM image from sampled pixels or DCT coefficients.
    Complete(RunArgs),
    /// Sweep synthetic low-rank recovery from partial DCT measurements.
    DctSynth(RunArgs),
    /// Record the singular value profiles behind each rank estimate.
    SveTrace(RunArgs),
    /// Compare the rank-0 baseline with estimated-rank recovery.
    Compare(RunArgs),
    /// Turn runs.csv / sve_profile.csv tables into tidy plotting tables.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` config file, applied before any flag.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    /// Inner solver; a comma-separated list is accepted by compare.
    #[arg(long, value_name = "admm|apgl|admmap")]
    pub solver: Option<String>,
    /// Explicit rank-estimation threshold.
    #[arg(long, value_name = "X", conflicts_with_all = ["kappa_mode", "kappa_s"])]
    pub kappa: Option<f64>,
    /// Threshold heuristic.
    #[arg(long, value_name = "real|synth")]
    pub kappa_mode: Option<String>,
    /// Scale of the threshold heuristic.
    #[arg(long, value_name = "S")]
    pub kappa_s: Option<f64>,
    /// Measurement-ball radius.
    #[arg(long, value_name = "X")]
    pub delta: Option<f64>,
    /// Penalty weight for apgl.
    #[arg(long, value_name = "X")]
    pub mu: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also try ranks within W of the estimate and keep the best.
    #[arg(long, value_name = "W", num_args = 0..=1, default_missing_value = "2")]
    pub adjust: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub image: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub mask: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub keep: Option<PathBuf>,
    #[arg(long, value_name = "mask|dct")]
    pub operator: Option<String>,
    #[arg(long, value_name = "N")]
    pub m: Option<usize>,
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,
    /// Rank of synthetic ground truth.
    #[arg(long, value_name = "N")]
    pub rank: Option<usize>,
    /// Sample ratio; comma-separated values sweep in dct-synth.
    #[arg(long, value_name = "LIST")]
    pub sr: Option<String>,
    /// Noise level; comma-separated values sweep in dct-synth.
    #[arg(long, value_name = "LIST")]
    pub std: Option<String>,
    /// Any config key, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// runs.csv and/or sve_profile.csv tables.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = "plots")]
    pub out: PathBuf,
}

impl RunArgs {
    /// Defaults, then config file, then `--set`, then dedicated flags.
    pub fn resolve(&self, command: Command) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(command);
        if command == Command::SveTrace {
            cfg.baseline = false;
        }
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got '{pair}'"))?;
            cfg.set(k, v)
                .map_err(|e| e.context(format!("--set {pair}")))?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let flags: [(&str, Option<String>); 18] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("solver", self.solver.clone()),
            ("kappa", self.kappa.map(|v| v.to_string())),
            ("kappa_mode", self.kappa_mode.clone()),
            ("kappa_s", self.kappa_s.map(|v| v.to_string())),
            ("delta", self.delta.map(|v| v.to_string())),
            ("mu", self.mu.map(|v| v.to_string())),
            ("out", path(&self.out)),
            ("adjust", self.adjust.map(|v| v.to_string())),
            ("image", path(&self.image)),
            ("mask", path(&self.mask)),
            ("keep", path(&self.keep)),
            ("operator", self.operator.clone()),
            ("m", self.m.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("rank", self.rank.map(|v| v.to_string())),
            ("sr", self.sr.clone()),
        ];
        for (key, value) in flags.iter().chain([("std", self.std.clone())].iter()) {
            if let Some(v) = value {
                cfg.set(key, v)
                    .map_err(|e| e.context(format!("--{}", key.replace('_', "-"))))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one experiment command and writes its outputs. Returns the records.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let workers = worker_count()?;
    let problems = build_problems(cfg)?;
    let records = solve_all(cfg, &problems, workers)?;
    write_tables(&cfg.out, cfg, &problems, &records)?;
    match cfg.command {
        Command::Complete => {
            write_images(&cfg.out, cfg, &problems, &records)?;
        }
        Command::Compare | Command::DctSynth => {
            write_summary(&cfg.out.join("summary.csv"), &records)?
        }
        Command::SveTrace => {}
    }
    Ok(records)
}

fn report(cfg: &ExperimentConfig, records: &[RunRecord]) {
    if cfg.command == Command::SveTrace {
        for r in records.iter().filter(|r| r.method == Method::Lrisd) {
            println!(
                "{} seed {}: estimates {:?}, rank {}{}",
                r.experiment,
                r.seed,
                r.channels[0].estimates,
                r.report.rank_recovered,
                r.rank_true
                    .map_or(String::new(), |t| format!(" (true {t})"))
            );
        }
        return;
    }
    let mut keys: Vec<(String, String, Method)> = Vec::new();
    for r in records {
        let key = (r.experiment.clone(), r.solver.to_string(), r.method);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (experiment, solver, method) in keys {
        let group: Vec<&RunRecord> = records
            .iter()
            .filter(|r| {
                r.experiment == experiment && r.solver.to_string() == solver && r.method == method
            })
            .collect();
        let mut reer: Vec<f64> = group.iter().map(|r| r.report.reer).collect();
        let mut psnr: Vec<f64> = group.iter().map(|r| r.report.psnr_db).collect();
        println!(
            "{experiment} {solver} {:<12} trials {:>3}  median Reer {:.4e}  median PSNR {:.2} dB",
            method.name(),
            group.len(),
            median(&mut reer),
            median(&mut psnr)
        );
    }
    println!("outputs in {}", cfg.out.display());
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let solver_failure = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<lowrank::Error>(),
            Some(lowrank::Error::Diverged { .. })
        )
    });
    if solver_failure {
        EXIT_SOLVER
    } else {
        EXIT_OTHER
    }
}

/// Parses `args` and runs the chosen command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let (command, args) = match &cli.command {
        Sub::PlotData(p) => {
            return match emit_plot_data(&p.inputs, &p.out) {
                Ok(paths) => {
                    for path in paths {
                        println!("wrote {}", path.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_OTHER)
                }
            };
        }
        Sub::Complete(a) => (Command::Complete, a),
        Sub::DctSynth(a) => (Command::DctSynth, a),
        Sub::SveTrace(a) => (Command::SveTrace, a),
        Sub::Compare(a) => (Command::Compare, a),
    };
    let cfg = match args.resolve(command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(&cfg) {
        Ok(records) => {
            report(&cfg, &records);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

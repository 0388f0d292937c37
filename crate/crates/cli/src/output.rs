//! CSV and image outputs of a run.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lowrank::data::{save_image, write_metrics_csv, Image, MetricsRow};
use nalgebra::DMatrix;

use crate::config::ExperimentConfig;
use crate::run::{median, Problem, RunRecord};

pub const RUNS_HEADER: &str =
    "experiment,seed,solver,method,operator,m,n,sr,std,rank_true,rank_recovered,\
estimates,outer_rounds,inner_iterations,reer,psnr_db";
pub const TRACE_HEADER: &str =
    "experiment,seed,solver,method,channel,stage,rank,l,k,objective,residual,beta";
pub const PROFILE_HEADER: &str =
    "experiment,seed,solver,method,channel,round,index,s,st,stt,kappa,rank";
pub const SUMMARY_HEADER: &str =
    "experiment,solver,method,trials,reer_median,reer_mean,psnr_median,rank_exact";
pub const TIMINGS_HEADER: &str = "experiment,seed,solver,method,seconds";

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("{}: cannot create", path.display())
    })?))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush()
        .with_context(|| format!("{}: write failed", path.display()))
}

/// Method label; carries the solver when several are compared.
pub fn method_label(cfg: &ExperimentConfig, r: &RunRecord) -> String {
    if cfg.solvers.len() > 1 {
        format!("{}/{}", r.method.name(), r.solver)
    } else {
        r.method.name().to_string()
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Writes every CSV of a run into `dir` and returns the paths written.
pub fn write_tables(
    dir: &Path,
    cfg: &ExperimentConfig,
    problems: &[Problem],
    records: &[RunRecord],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("{}: cannot create directory", dir.display()))?;
    let mut written = Vec::new();

    let path = dir.join("config.txt");
    std::fs::write(&path, cfg.to_text())
        .with_context(|| format!("{}: write failed", path.display()))?;
    written.push(path);

    let path = dir.join("metrics.csv");
    let rows: Vec<MetricsRow> = records
        .iter()
        .map(|r| MetricsRow {
            experiment: r.experiment.clone(),
            seed: r.seed,
            method: method_label(cfg, r),
            report: r.report,
        })
        .collect();
    let mut w = create(&path)?;
    write_metrics_csv(&mut w, &rows)
        .with_context(|| format!("{}: write failed", path.display()))?;
    finish(w, &path)?;
    written.push(path);

    let path = dir.join("runs.csv");
    let mut w = create(&path)?;
    writeln!(w, "{RUNS_HEADER}")?;
    for r in records {
        let (m, n) = problems[r.problem].op.shape();
        let estimates: Vec<String> = r
            .channels
            .iter()
            .map(|c| {
                c.estimates
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.seed,
            r.solver,
            r.method.name(),
            problems[r.problem].op.kind(),
            m,
            n,
            r.sr,
            r.std,
            opt(r.rank_true),
            r.report.rank_recovered,
            estimates.join(";"),
            r.outer_rounds(),
            r.inner_iterations(),
            r.report.reer,
            r.report.psnr_db
        )?;
    }
    finish(w, &path)?;
    written.push(path);

    let path = dir.join("trace.csv");
    let mut w = create(&path)?;
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        for (c, run) in r.channels.iter().enumerate() {
            for stage in &run.stages {
                for it in &stage.records {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.experiment,
                        r.seed,
                        r.solver,
                        r.method.name(),
                        c,
                        it.stage,
                        stage.rank,
                        it.l,
                        it.k,
                        it.objective,
                        it.residual,
                        it.beta
                    )?;
                }
            }
        }
    }
    finish(w, &path)?;
    written.push(path);

    let path = dir.join("sve_profile.csv");
    let mut w = create(&path)?;
    writeln!(w, "{PROFILE_HEADER}")?;
    for r in records {
        for (c, run) in r.channels.iter().enumerate() {
            for (round, p) in run.profiles.iter().enumerate() {
                for (i, s) in p.s.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.experiment,
                        r.seed,
                        r.solver,
                        r.method.name(),
                        c,
                        round + 1,
                        i + 1,
                        s,
                        opt(p.st.get(i)),
                        opt(p.stt.get(i)),
                        p.kappa,
                        p.rank
                    )?;
                }
            }
        }
    }
    finish(w, &path)?;
    written.push(path);

    let path = dir.join("timings.csv");
    let mut w = create(&path)?;
    writeln!(w, "{TIMINGS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{:.3}",
            r.experiment,
            r.seed,
            r.solver,
            r.method.name(),
            r.seconds
        )?;
    }
    finish(w, &path)?;
    written.push(path);
    Ok(written)
}

/// Per (experiment, solver, method) aggregates, in first-seen order.
pub fn write_summary(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut keys: Vec<(String, String, String)> = Vec::new();
    for r in records {
        let key = (
            r.experiment.clone(),
            r.solver.to_string(),
            r.method.name().to_string(),
        );
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut w = create(path)?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for (experiment, solver, method) in keys {
        let group: Vec<&RunRecord> = records
            .iter()
            .filter(|r| {
                r.experiment == experiment
                    && r.solver.to_string() == solver
                    && r.method.name() == method
            })
            .collect();
        let mut reer: Vec<f64> = group.iter().map(|r| r.report.reer).collect();
        let mut psnr: Vec<f64> = group.iter().map(|r| r.report.psnr_db).collect();
        let mean = reer.iter().sum::<f64>() / reer.len() as f64;
        let exact = group
            .iter()
            .filter(|r| r.rank_true == Some(r.report.rank_recovered))
            .count();
        writeln!(
            w,
            "{experiment},{solver},{method},{},{},{mean},{},{exact}",
            group.len(),
            median(&mut reer),
            median(&mut psnr)
        )?;
    }
    finish(w, path)
}

fn extension(channels: usize) -> &'static str {
    if channels == 1 {
        "pgm"
    } else {
        "ppm"
    }
}

/// Saves the observed data and each recovery as images.
pub fn write_images(
    dir: &Path,
    cfg: &ExperimentConfig,
    problems: &[Problem],
    records: &[RunRecord],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for problem in problems {
        let ext = extension(problem.bs.len());
        let observed = problem
            .bs
            .iter()
            .map(|b| problem.op.data_matrix(b))
            .collect::<lowrank::Result<Vec<DMatrix<f64>>>>()?;
        let path = dir.join(format!("observed_seed{}.{ext}", problem.seed));
        save_image(&Image::new(observed)?, &path)?;
        written.push(path);
    }
    for r in records {
        let ext = extension(r.channels.len());
        let label = method_label(cfg, r).replace('/', "-");
        let path = dir.join(format!("recovered_{label}_seed{}.{ext}", r.seed));
        save_image(
            &Image::new(r.channels.iter().map(|c| c.x.clone()).collect())?,
            &path,
        )?;
        written.push(path);
    }
    Ok(written)
}

//! Builds problem instances from a config, solves them and collects records.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use lowrank::data::{
    load_image, psnr, relative_error, synth_lowrank, EvalSet, Image, MetricsReport, SyntheticSpec,
    PSNR_CAP_DB,
};
use lowrank::operators::{read_keep_file, read_mask_file};
use lowrank::rng::{stream_rng, Stream};
use lowrank::{
    lrisd, InnerSolver, LinearMap, LrisdOutput, OperatorKind, RankPolicy, SamplingMask, StageTrace,
    SveProfile,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{Command, ExperimentConfig};
use crate::pool::run_indexed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// Rank-0 baseline: plain nuclear-norm recovery.
    Lr,
    Lrisd,
    /// Best of the ranks around the estimate, scored against the truth.
    LrisdAdjust,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::Lrisd => "lrisd",
            Method::LrisdAdjust => "lrisd-adjust",
        }
    }
}

/// One recovery task: shared operator, one measurement vector per channel.
#[derive(Clone, Debug)]
pub struct Problem {
    pub experiment: String,
    pub seed: u64,
    pub sr: f64,
    pub std: f64,
    pub rank_true: Option<usize>,
    pub op: LinearMap<f64>,
    pub bs: Vec<DVector<f64>>,
    pub truth: Vec<DMatrix<f64>>,
    /// Score as 8-bit image data instead of a plain matrix.
    pub image: bool,
}

impl Problem {
    /// Observed positions when only some pixels are seen.
    fn partial_mask(&self) -> Option<&SamplingMask> {
        match &self.op {
            LinearMap::SamplingMask(mask) => {
                let (m, n) = mask.shape();
                (mask.len() < m * n).then_some(mask)
            }
            LinearMap::PartialDct2D(_) => None,
        }
    }

    fn eval_set(&self) -> EvalSet<'_> {
        self.partial_mask().map_or(EvalSet::All, EvalSet::Missing)
    }

    /// Squared error used to rank adjusted candidates.
    fn channel_error(&self, x: &DMatrix<f64>, c: usize) -> f64 {
        let truth = &self.truth[c];
        if !self.image {
            return (x - truth).norm_squared();
        }
        let d = |i: usize, j: usize| (x[(i, j)].clamp(0.0, 255.0) - truth[(i, j)]).powi(2);
        match self.partial_mask() {
            Some(mask) => mask.complement().iter().map(|&(i, j)| d(i, j)).sum(),
            None => (0..x.nrows())
                .flat_map(|i| (0..x.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| d(i, j))
                .sum(),
        }
    }
}

/// Result of one method on one channel.
#[derive(Clone, Debug)]
pub struct ChannelRun {
    pub x: DMatrix<f64>,
    pub stages: Vec<StageTrace>,
    pub profiles: Vec<SveProfile<f64>>,
    pub estimates: Vec<usize>,
    pub rank: usize,
    pub outer_rounds: usize,
}

impl From<LrisdOutput<f64>> for ChannelRun {
    fn from(o: LrisdOutput<f64>) -> Self {
        ChannelRun {
            x: o.x,
            stages: o.stages,
            profiles: o.profiles,
            estimates: o.estimates,
            rank: o.rank,
            outer_rounds: o.outer_rounds,
        }
    }
}

/// One method on one problem, all channels.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub problem: usize,
    pub experiment: String,
    pub seed: u64,
    pub solver: InnerSolver,
    pub method: Method,
    pub sr: f64,
    pub std: f64,
    pub rank_true: Option<usize>,
    pub report: MetricsReport,
    pub channels: Vec<ChannelRun>,
    pub seconds: f64,
}

impl RunRecord {
    pub fn inner_iterations(&self) -> usize {
        self.channels
            .iter()
            .flat_map(|c| &c.stages)
            .map(StageTrace::total_inner_iterations)
            .sum()
    }

    pub fn outer_rounds(&self) -> usize {
        self.channels
            .iter()
            .map(|c| c.outer_rounds)
            .max()
            .unwrap_or(0)
    }
}

fn experiment_name(cfg: &ExperimentConfig, sr: f64, std: f64) -> String {
    format!(
        "{}-{}x{}-r{}-sr{}-std{}",
        cfg.operator, cfg.m, cfg.n, cfg.rank, sr, std
    )
}

/// Image stem with CSV-unsafe characters replaced.
fn image_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map_or("image".into(), |s| s.to_string_lossy().into_owned());
    stem.chars()
        .map(|c| {
            if c == ',' || c.is_whitespace() {
                '_'
            } else {
                c
            }
        })
        .collect()
}

pub fn build_problems(cfg: &ExperimentConfig) -> Result<Vec<Problem>> {
    if cfg.command == Command::Complete {
        let path = cfg.image.as_ref().context("no input image")?;
        let image = load_image(path)?;
        return image_problems(cfg, &image_name(path), &image);
    }
    let mut out = Vec::new();
    for &sr in &cfg.sr {
        for &std in &cfg.std {
            for t in 0..cfg.trials as u64 {
                let seed = cfg.seed + t;
                let mut spec =
                    SyntheticSpec::new(cfg.m, cfg.n, cfg.rank, sr, std, seed, cfg.operator);
                spec.keep_dc = cfg.keep_dc;
                let inst = synth_lowrank(&spec)?;
                out.push(Problem {
                    experiment: experiment_name(cfg, sr, std),
                    seed,
                    sr,
                    std,
                    rank_true: Some(cfg.rank),
                    op: inst.op,
                    bs: vec![inst.b],
                    truth: vec![inst.truth],
                    image: false,
                });
            }
        }
    }
    Ok(out)
}

/// Completion problems for a loaded image, one per trial seed.
pub fn image_problems(cfg: &ExperimentConfig, name: &str, image: &Image) -> Result<Vec<Problem>> {
    let (rows, cols) = image.shape();
    let fixed = cfg.mask.is_some() || cfg.keep.is_some();
    if fixed && cfg.trials > 1 {
        bail!("a mask or keep file fixes the operator, so trials must be 1");
    }
    let sr = cfg.sr[0];
    let std = cfg.std[0];
    let mut out = Vec::new();
    for t in 0..cfg.trials as u64 {
        let seed = cfg.seed + t;
        let op = match (&cfg.mask, &cfg.keep, cfg.operator) {
            (Some(path), _, _) => LinearMap::SamplingMask(read_mask_file(path)?),
            (_, Some(path), _) => LinearMap::PartialDct2D(read_keep_file(path)?),
            (None, None, OperatorKind::SamplingMask) => {
                LinearMap::random_mask(rows, cols, sr, seed)?
            }
            (None, None, OperatorKind::PartialDct2D) => {
                LinearMap::random_dct(rows, cols, sr, seed, cfg.keep_dc)?
            }
        };
        if op.shape() != (rows, cols) {
            bail!(
                "operator is {}x{} but the image is {rows}x{cols}",
                op.shape().0,
                op.shape().1
            );
        }
        let mut noise = stream_rng(seed, Stream::Noise);
        let mut bs = Vec::with_capacity(image.channels.len());
        for channel in &image.channels {
            let mut b = op.apply(channel)?;
            if std > 0.0 {
                for v in b.iter_mut() {
                    *v += std * noise.sample::<f64, _>(StandardNormal);
                }
            }
            bs.push(b);
        }
        let measured = op.len() as f64 / (rows * cols) as f64;
        out.push(Problem {
            experiment: name.to_string(),
            seed,
            sr: if fixed { measured } else { sr },
            std,
            rank_true: None,
            op,
            bs,
            truth: image.channels.clone(),
            image: true,
        });
    }
    Ok(out)
}

/// Methods a command runs, in output order.
pub fn methods(cfg: &ExperimentConfig) -> Vec<Method> {
    let mut out = Vec::new();
    if cfg.baseline {
        out.push(Method::Lr);
    }
    out.push(Method::Lrisd);
    if cfg.adjust.is_some() {
        out.push(Method::LrisdAdjust);
    }
    out
}

/// Runs every method on one channel. The baseline is LRISD pinned to rank 0.
fn solve_channel(
    problem: &Problem,
    c: usize,
    solver: InnerSolver,
    cfg: &ExperimentConfig,
) -> Result<ChannelResults> {
    let b = &problem.bs[c];
    let mut out = Vec::new();
    if cfg.baseline {
        let t = Instant::now();
        let o = lrisd(&problem.op, b, solver, RankPolicy::Fixed(0), &cfg.solver).context("lr")?;
        out.push((Method::Lr, o.into(), t.elapsed().as_secs_f64()));
    }
    let t = Instant::now();
    let est: ChannelRun = lrisd(
        &problem.op,
        b,
        solver,
        RankPolicy::Estimate(cfg.sve),
        &cfg.solver,
    )
    .context("lrisd")?
    .into();
    let est_secs = t.elapsed().as_secs_f64();
    out.push((Method::Lrisd, est.clone(), est_secs));

    if let Some(w) = cfg.adjust {
        let t = Instant::now();
        let (m, n) = problem.op.shape();
        let lo = est.rank.saturating_sub(w).max(1);
        let hi = (est.rank + w).min(m.min(n) - 1);
        let mut best_err = problem.channel_error(&est.x, c);
        let mut best = ChannelRun {
            profiles: Vec::new(),
            ..est.clone()
        };
        for r in lo..=hi {
            if r == est.rank {
                continue;
            }
            let o = lrisd(&problem.op, b, solver, RankPolicy::Fixed(r), &cfg.solver)
                .with_context(|| format!("lrisd-adjust rank {r}"))?;
            let err = problem.channel_error(&o.x, c);
            if err < best_err {
                best_err = err;
                best = ChannelRun {
                    estimates: est.estimates.iter().copied().chain([r]).collect(),
                    outer_rounds: est.outer_rounds,
                    profiles: Vec::new(),
                    ..o.into()
                };
            }
        }
        out.push((
            Method::LrisdAdjust,
            best,
            est_secs + t.elapsed().as_secs_f64(),
        ));
    }
    Ok(out)
}

/// Metrics of a recovered matrix against synthetic truth. PSNR uses the
/// largest truth magnitude as peak.
pub fn matrix_report(x: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<MetricsReport> {
    let reer = relative_error(x, truth)?;
    let se = (x - truth).norm_squared();
    let t_count = truth.len();
    let mse = se / t_count as f64;
    let peak = truth.amax();
    let psnr_db = if mse > 0.0 {
        (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
    } else {
        PSNR_CAP_DB
    };
    Ok(MetricsReport {
        psnr_db,
        reer,
        se,
        mse,
        t_count,
        rank_recovered: 0,
    })
}

fn report(problem: &Problem, channels: &[ChannelRun]) -> Result<MetricsReport> {
    let mut r = if problem.image {
        let xs: Vec<DMatrix<f64>> = channels.iter().map(|c| c.x.clone()).collect();
        psnr(&xs, &problem.truth, problem.eval_set())?
    } else {
        matrix_report(&channels[0].x, &problem.truth[0])?
    };
    r.rank_recovered = channels.iter().map(|c| c.rank).max().unwrap_or(0);
    Ok(r)
}

/// Every method's result on one channel, with its wall time.
type ChannelResults = Vec<(Method, ChannelRun, f64)>;

/// Solves every (problem, solver, channel) job on the pool and merges the
/// results ordered by problem, method, then solver.
pub fn solve_all(
    cfg: &ExperimentConfig,
    problems: &[Problem],
    workers: usize,
) -> Result<Vec<RunRecord>> {
    let mut jobs = Vec::new();
    for (p, problem) in problems.iter().enumerate() {
        for &solver in &cfg.solvers {
            for c in 0..problem.bs.len() {
                jobs.push((p, solver, c));
            }
        }
    }
    let results = run_indexed(jobs.len(), workers, |i| {
        let (p, solver, c) = jobs[i];
        solve_channel(&problems[p], c, solver, cfg)
    });

    let mut grouped: Vec<(usize, InnerSolver, Vec<ChannelResults>)> = Vec::new();
    for (&(p, solver, c), result) in jobs.iter().zip(results) {
        let problem = &problems[p];
        let runs = result.with_context(|| {
            format!(
                "{} seed {} solver {solver} channel {c}",
                problem.experiment, problem.seed
            )
        })?;
        match grouped.last_mut() {
            Some((gp, gs, chans)) if *gp == p && *gs == solver => chans.push(runs),
            _ => grouped.push((p, solver, vec![runs])),
        }
    }

    let mut records = Vec::new();
    for (p, solver, chans) in grouped {
        let problem = &problems[p];
        for (k, &method) in methods(cfg).iter().enumerate() {
            let channels: Vec<ChannelRun> = chans.iter().map(|runs| runs[k].1.clone()).collect();
            let seconds = chans.iter().map(|runs| runs[k].2).sum();
            records.push(RunRecord {
                problem: p,
                experiment: problem.experiment.clone(),
                seed: problem.seed,
                solver,
                method,
                sr: problem.sr,
                std: problem.std,
                rank_true: problem.rank_true,
                report: report(problem, &channels)?,
                channels,
                seconds,
            });
        }
    }
    records.sort_by_key(|r| (r.problem, r.seed, r.method, solver_order(cfg, r.solver)));
    Ok(records)
}

fn solver_order(cfg: &ExperimentConfig, s: InnerSolver) -> usize {
    cfg.solvers
        .iter()
        .position(|&x| x == s)
        .unwrap_or(usize::MAX)
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

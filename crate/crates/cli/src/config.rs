//! Experiment configuration and its `key = value` text form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use lowrank::{InnerSolver, KappaMode, KappaRule, OperatorKind, SolverConfig, SveConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Complete,
    DctSynth,
    SveTrace,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Complete => "complete",
            Command::DctSynth => "dct-synth",
            Command::SveTrace => "sve-trace",
            Command::Compare => "compare",
        }
    }
}

/// Everything one run needs. Built from per-command defaults, then a config
/// file, then `--set` pairs, then dedicated flags.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub operator: OperatorKind,
    pub m: usize,
    pub n: usize,
    /// Ground-truth rank of synthetic instances.
    pub rank: usize,
    /// Sample ratios; more than one only for sweeps.
    pub sr: Vec<f64>,
    /// Noise levels; more than one only for sweeps.
    pub std: Vec<f64>,
    pub keep_dc: bool,
    pub image: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub keep: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub solvers: Vec<InnerSolver>,
    pub sve: SveConfig,
    pub solver: SolverConfig,
    /// Half-width of the rank window tried around the estimate.
    pub adjust: Option<usize>,
    /// Also run the rank-0 baseline.
    pub baseline: bool,
    pub out: PathBuf,
}

/// Keys accepted in config files and by `--set`, in serialisation order.
pub const KEYS: &[&str] = &[
    "operator",
    "m",
    "n",
    "rank",
    "sr",
    "std",
    "keep_dc",
    "image",
    "mask",
    "keep",
    "seed",
    "trials",
    "solver",
    "kappa",
    "kappa_mode",
    "kappa_s",
    "max_outer",
    "stability",
    "delta",
    "mu",
    "beta",
    "gamma",
    "inner_tol",
    "outer_tol",
    "max_inner_iters",
    "max_refreshes",
    "beta_max",
    "rho0",
    "eps_adapt",
    "apgl_monotone",
    "adjust",
    "baseline",
    "out",
];

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let synthetic = command != Command::Complete;
        let mode = if synthetic {
            KappaMode::SyntheticHeuristic
        } else {
            KappaMode::RealHeuristic
        };
        ExperimentConfig {
            command,
            operator: if synthetic {
                OperatorKind::PartialDct2D
            } else {
                OperatorKind::SamplingMask
            },
            m: 100,
            n: 100,
            rank: 5,
            sr: vec![0.5],
            std: vec![if synthetic { 0.5 } else { 0.0 }],
            keep_dc: false,
            image: None,
            mask: None,
            keep: None,
            seed: 0,
            trials: 1,
            solvers: vec![InnerSolver::Admm],
            sve: SveConfig::new(KappaRule::Heuristic { mode, s: 1.0 }),
            solver: SolverConfig::default(),
            adjust: None,
            baseline: true,
            out: PathBuf::from(format!("out/{}", command.name())),
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "operator" => self.operator = parse(v)?,
            "m" => self.m = parse(v)?,
            "n" => self.n = parse(v)?,
            "rank" => self.rank = parse(v)?,
            "sr" => self.sr = parse_list(v)?,
            "std" => self.std = parse_list(v)?,
            "keep_dc" => self.keep_dc = parse(v)?,
            "image" => self.image = optional_path(v),
            "mask" => self.mask = optional_path(v),
            "keep" => self.keep = optional_path(v),
            "seed" => self.seed = parse(v)?,
            "trials" => self.trials = parse(v)?,
            "solver" => self.solvers = parse_list(v)?,
            "kappa" => self.sve.kappa = KappaRule::Explicit(parse(v)?),
            "kappa_mode" => {
                let mode = match v {
                    "real" => KappaMode::RealHeuristic,
                    "synth" => KappaMode::SyntheticHeuristic,
                    other => bail!("unknown kappa mode '{other}' (real|synth)"),
                };
                let s = match self.sve.kappa {
                    KappaRule::Heuristic { s, .. } => s,
                    KappaRule::Explicit(_) => 1.0,
                };
                self.sve.kappa = KappaRule::Heuristic { mode, s };
            }
            "kappa_s" => {
                let s = parse(v)?;
                let mode = match self.sve.kappa {
                    KappaRule::Heuristic { mode, .. } => mode,
                    KappaRule::Explicit(_) => default_mode(self.command),
                };
                self.sve.kappa = KappaRule::Heuristic { mode, s };
            }
            "max_outer" => self.sve.max_outer = parse(v)?,
            "stability" => self.sve.stability = parse(v)?,
            "delta" => self.solver.delta = parse(v)?,
            "mu" => self.solver.mu = parse(v)?,
            "beta" => self.solver.beta = parse(v)?,
            "gamma" => self.solver.gamma = parse(v)?,
            "inner_tol" => self.solver.inner_tol = parse(v)?,
            "outer_tol" => self.solver.outer_tol = parse(v)?,
            "max_inner_iters" => self.solver.max_inner_iters = parse(v)?,
            "max_refreshes" => self.solver.max_refreshes = parse(v)?,
            "beta_max" => self.solver.beta_max = parse(v)?,
            "rho0" => self.solver.rho0 = parse(v)?,
            "eps_adapt" => self.solver.eps_adapt = parse(v)?,
            "apgl_monotone" => self.solver.apgl_monotone = parse(v)?,
            "adjust" => {
                self.adjust = match v {
                    "off" | "" => None,
                    w => Some(parse(w)?),
                }
            }
            "baseline" => self.baseline = parse(v)?,
            "out" => self.out = PathBuf::from(v),
            other => bail!("unknown key '{other}'"),
        }
        Ok(())
    }

    /// Applies a config file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("{}: cannot read config", path.display()))?;
        let mut explicit_kappa = false;
        let mut heuristic_kappa = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected 'key = value'", path.display(), i + 1))?;
            let key = key.trim();
            match key {
                "kappa" => explicit_kappa = true,
                "kappa_mode" | "kappa_s" => heuristic_kappa = true,
                _ => {}
            }
            if explicit_kappa && heuristic_kappa {
                bail!(
                    "{}:{}: 'kappa' cannot be combined with 'kappa_mode'/'kappa_s'",
                    path.display(),
                    i + 1
                );
            }
            self.set(key, value)
                .with_context(|| format!("{}:{}: field '{key}'", path.display(), i + 1))?;
        }
        Ok(())
    }

    /// Checks value ranges and that the inputs suit the command.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate().context("solver settings")?;
        self.sve.validate().context("rank estimation settings")?;
        if let KappaRule::Explicit(k) = self.sve.kappa {
            if !(k > 0.0) {
                bail!("kappa must be positive, got {k}");
            }
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.solvers.is_empty() {
            bail!("at least one solver is required");
        }
        if self.sr.is_empty() || self.std.is_empty() {
            bail!("sr and std need at least one value");
        }
        if let Some(s) = self.sr.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            bail!("sample ratio {s} outside (0, 1]");
        }
        if let Some(s) = self.std.iter().find(|s| !(**s >= 0.0)) {
            bail!("noise std {s} must be nonnegative");
        }
        let sweep = self.sr.len() > 1 || self.std.len() > 1;
        match self.command {
            Command::Complete => {
                if self.image.is_none() {
                    bail!("complete needs an input image ('image' key or --image)");
                }
                if self.mask.is_some() && self.operator != OperatorKind::SamplingMask {
                    bail!("a mask file requires operator = mask");
                }
                if self.keep.is_some() && self.operator != OperatorKind::PartialDct2D {
                    bail!("a keep file requires operator = dct");
                }
                if sweep {
                    bail!("complete takes a single sr value");
                }
            }
            Command::DctSynth | Command::SveTrace | Command::Compare => {
                if self.image.is_some() || self.mask.is_some() || self.keep.is_some() {
                    bail!(
                        "{} works on synthetic data and takes no image, mask or keep file",
                        self.command.name()
                    );
                }
                if self.command == Command::DctSynth && self.operator != OperatorKind::PartialDct2D
                {
                    bail!("dct-synth requires operator = dct");
                }
                if sweep && self.command != Command::DctSynth {
                    bail!("lists of sr/std values are only accepted by dct-synth");
                }
                if self.m < 3 || self.n < 3 {
                    bail!("m and n must be at least 3");
                }
                if self.rank == 0 || self.rank >= self.m.min(self.n) {
                    bail!("rank must be in 1..min(m, n)");
                }
            }
        }
        if self.solvers.len() > 1 && self.command != Command::Compare {
            bail!("several solvers are only accepted by compare");
        }
        Ok(())
    }

    /// Text form that [`apply_file`](Self::apply_file) reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let _ = writeln!(s, "# lowrank {}", self.command.name());
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("operator", self.operator.to_string());
        kv("m", self.m.to_string());
        kv("n", self.n.to_string());
        kv("rank", self.rank.to_string());
        kv("sr", join(&self.sr));
        kv("std", join(&self.std));
        kv("keep_dc", self.keep_dc.to_string());
        kv("image", path(&self.image));
        kv("mask", path(&self.mask));
        kv("keep", path(&self.keep));
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("solver", join(&self.solvers));
        match self.sve.kappa {
            KappaRule::Explicit(k) => kv("kappa", k.to_string()),
            KappaRule::Heuristic { mode, s } => {
                kv(
                    "kappa_mode",
                    match mode {
                        KappaMode::RealHeuristic => "real",
                        KappaMode::SyntheticHeuristic => "synth",
                    }
                    .into(),
                );
                kv("kappa_s", s.to_string());
            }
        }
        kv("max_outer", self.sve.max_outer.to_string());
        kv("stability", self.sve.stability.to_string());
        let c = &self.solver;
        kv("delta", c.delta.to_string());
        kv("mu", c.mu.to_string());
        kv("beta", c.beta.to_string());
        kv("gamma", c.gamma.to_string());
        kv("inner_tol", c.inner_tol.to_string());
        kv("outer_tol", c.outer_tol.to_string());
        kv("max_inner_iters", c.max_inner_iters.to_string());
        kv("max_refreshes", c.max_refreshes.to_string());
        kv("beta_max", c.beta_max.to_string());
        kv("rho0", c.rho0.to_string());
        kv("eps_adapt", c.eps_adapt.to_string());
        kv("apgl_monotone", c.apgl_monotone.to_string());
        kv(
            "adjust",
            self.adjust.map_or("off".into(), |w| w.to_string()),
        );
        kv("baseline", self.baseline.to_string());
        kv("out", self.out.display().to_string());
        s
    }
}

fn default_mode(command: Command) -> KappaMode {
    if command == Command::Complete {
        KappaMode::RealHeuristic
    } else {
        KappaMode::SyntheticHeuristic
    }
}

fn parse<T: FromStr>(v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| anyhow::anyhow!("cannot parse '{v}': {e}"))
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',').map(|item| parse(item.trim())).collect()
}

fn optional_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

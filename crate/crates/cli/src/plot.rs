//! Tidy tables for plotting, derived from run outputs.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lowrank::{Error, Result};

use crate::run::median;

const RUNS_COLUMNS: &[&str] = &[
    "experiment",
    "seed",
    "method",
    "sr",
    "std",
    "reer",
    "rank_true",
    "rank_recovered",
];
const PROFILE_COLUMNS: &[&str] = &[
    "experiment",
    "seed",
    "method",
    "round",
    "index",
    "stt",
    "kappa",
];

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let rows = reader
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| csv_error(path, e))?;
        Ok(Table {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    fn has(&self, column: &str) -> bool {
        self.header.iter().any(|h| h == column)
    }

    fn require(&self, columns: &[&str]) -> Result<()> {
        let missing: Vec<&str> = columns.iter().copied().filter(|c| !self.has(c)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Format {
                path: self.path.clone(),
                message: format!("missing column(s): {}", missing.join(", ")),
            })
        }
    }

    fn column(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .expect("column checked")
    }

    fn text<'a>(&self, row: &'a csv::StringRecord, name: &str) -> &'a str {
        row.get(self.column(name)).unwrap_or("").trim()
    }

    fn number<T: std::str::FromStr>(&self, row: usize, name: &str) -> Result<Option<T>> {
        let v = self.text(&self.rows[row], name);
        if v.is_empty() {
            return Ok(None);
        }
        v.parse().map(Some).map_err(|_| Error::Format {
            path: self.path.clone(),
            message: format!("data row {}: column '{name}' has bad value '{v}'", row + 1),
        })
    }

    fn required<T: std::str::FromStr>(&self, row: usize, name: &str) -> Result<T> {
        self.number(row, name)?.ok_or_else(|| Error::Format {
            path: self.path.clone(),
            message: format!("data row {}: column '{name}' is empty", row + 1),
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

struct RunRow {
    experiment: String,
    seed: u64,
    solver: String,
    method: String,
    sr: f64,
    std: f64,
    reer: f64,
    rank_true: Option<usize>,
    rank_recovered: usize,
}

struct ProfileRow {
    experiment: String,
    seed: u64,
    solver: String,
    method: String,
    channel: String,
    round: usize,
    index: usize,
    stt: f64,
    kappa: f64,
}

fn runs_rows(t: &Table) -> Result<Vec<RunRow>> {
    t.require(RUNS_COLUMNS)?;
    (0..t.rows.len())
        .map(|i| {
            let row = &t.rows[i];
            Ok(RunRow {
                experiment: t.text(row, "experiment").to_string(),
                seed: t.required(i, "seed")?,
                solver: if t.has("solver") {
                    t.text(row, "solver").to_string()
                } else {
                    String::new()
                },
                method: t.text(row, "method").to_string(),
                sr: t.required(i, "sr")?,
                std: t.required(i, "std")?,
                reer: t.required(i, "reer")?,
                rank_true: t.number(i, "rank_true")?,
                rank_recovered: t.required(i, "rank_recovered")?,
            })
        })
        .collect()
}

fn profile_rows(t: &Table) -> Result<Vec<ProfileRow>> {
    t.require(PROFILE_COLUMNS)?;
    let mut out = Vec::new();
    for i in 0..t.rows.len() {
        let row = &t.rows[i];
        let Some(stt) = t.number(i, "stt")? else {
            continue;
        };
        out.push(ProfileRow {
            experiment: t.text(row, "experiment").to_string(),
            seed: t.required(i, "seed")?,
            solver: if t.has("solver") {
                t.text(row, "solver").to_string()
            } else {
                String::new()
            },
            method: t.text(row, "method").to_string(),
            channel: if t.has("channel") {
                t.text(row, "channel").to_string()
            } else {
                "0".into()
            },
            round: t.required(i, "round")?,
            index: t.required(i, "index")?,
            stt,
            kappa: t.required(i, "kappa")?,
        });
    }
    Ok(out)
}

/// Median and mean Reer per (solver, method, outer, inner), sorted on those
/// keys with the swept variable last.
fn sweep_table(
    runs: &[RunRow],
    outer: fn(&RunRow) -> f64,
    inner: fn(&RunRow) -> f64,
    names: (&str, &str),
) -> String {
    let mut sorted: Vec<&RunRow> = runs.iter().collect();
    let key = |a: &&RunRow, b: &&RunRow| -> Ordering {
        a.solver
            .cmp(&b.solver)
            .then_with(|| a.method.cmp(&b.method))
            .then_with(|| outer(a).total_cmp(&outer(b)))
            .then_with(|| inner(a).total_cmp(&inner(b)))
    };
    sorted.sort_by(key);
    let mut s = format!(
        "solver,method,{},{},trials,reer_median,reer_mean\n",
        names.0, names.1
    );
    for group in sorted.chunk_by(|a, b| key(a, b) == Ordering::Equal) {
        let mut reer: Vec<f64> = group.iter().map(|r| r.reer).collect();
        let mean = reer.iter().sum::<f64>() / reer.len() as f64;
        let r = group[0];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{mean}",
            r.solver,
            r.method,
            outer(r),
            inner(r),
            group.len(),
            median(&mut reer)
        );
    }
    s
}

/// Writes `reer_vs_std.csv`, `reer_vs_sr.csv`, `rank_recovery.csv` and
/// `stt_vs_index.csv` into `out`. Each input is a `runs.csv` (has `reer`) or
/// an `sve_profile.csv` (has `stt`); families without input are skipped.
pub fn emit_plot_data(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(Error::Argument(
            "plot-data needs at least one input table".into(),
        ));
    }
    let mut runs = Vec::new();
    let mut profiles = Vec::new();
    for path in inputs {
        let t = Table::read(path)?;
        if t.has("stt") {
            profiles.extend(profile_rows(&t)?);
        } else if t.has("reer") {
            runs.extend(runs_rows(&t)?);
        } else {
            return Err(Error::Format {
                path: path.clone(),
                message: "neither a runs table (reer column) nor a profile table (stt column)"
                    .into(),
            });
        }
    }
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, body: String| -> Result<()> {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        written.push(path);
        Ok(())
    };

    if !runs.is_empty() {
        emit(
            "reer_vs_std.csv",
            sweep_table(&runs, |r| r.sr, |r| r.std, ("sr", "std")),
        )?;
        emit(
            "reer_vs_sr.csv",
            sweep_table(&runs, |r| r.std, |r| r.sr, ("std", "sr")),
        )?;

        let mut ranked: Vec<&RunRow> = runs
            .iter()
            .filter(|r| r.rank_true.is_some() && r.method != "lr")
            .collect();
        ranked.sort_by(|a, b| {
            a.rank_true
                .cmp(&b.rank_true)
                .then_with(|| a.experiment.cmp(&b.experiment))
                .then_with(|| a.seed.cmp(&b.seed))
                .then_with(|| a.solver.cmp(&b.solver))
                .then_with(|| a.method.cmp(&b.method))
        });
        let mut s = String::from("experiment,seed,solver,method,rank_true,rank_recovered\n");
        for r in ranked {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.experiment,
                r.seed,
                r.solver,
                r.method,
                r.rank_true.unwrap_or_default(),
                r.rank_recovered
            );
        }
        emit("rank_recovery.csv", s)?;
    }

    if !profiles.is_empty() {
        let mut s = String::from("experiment,seed,solver,method,channel,round,index,stt,kappa\n");
        for p in &profiles {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                p.experiment,
                p.seed,
                p.solver,
                p.method,
                p.channel,
                p.round,
                p.index,
                p.stt,
                p.kappa
            );
        }
        emit("stt_vs_index.csv", s)?;
    }
    Ok(written)
}

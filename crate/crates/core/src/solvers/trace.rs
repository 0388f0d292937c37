use std::io::{self, Write};

/// One inner iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub stage: usize,
    /// Index of the `(L, R)` refresh within the stage, starting at 1.
    pub l: usize,
    /// Inner iteration, starting at 1.
    pub k: usize,
    /// `‖X‖_* − Tr(L X Rᵀ)` at the new iterate.
    pub objective: f64,
    /// `‖A(X) − b‖`.
    pub residual: f64,
    /// Penalty in effect for the ADMM family; proximal step size for APGL.
    pub beta: f64,
}

/// Diagnostics for one fixed-rank stage of the outer loop.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTrace {
    pub stage: usize,
    /// Truncation rank used throughout the stage.
    pub rank: usize,
    /// Inner iteration count of each `(L, R)` refresh.
    pub inner_iterations: Vec<usize>,
    /// `‖X_{l+1} − X_l‖_F² / ‖Data‖_F²` after each refresh.
    pub outer_changes: Vec<f64>,
    pub records: Vec<IterRecord>,
    /// Whether every inner solve met its tolerance before the iteration cap.
    pub inner_converged: bool,
    /// Whether the refresh loop met its tolerance before its cap.
    pub outer_converged: bool,
}

impl StageTrace {
    pub(crate) fn new(stage: usize, rank: usize) -> Self {
        StageTrace {
            stage,
            rank,
            inner_converged: true,
            ..Default::default()
        }
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.inner_iterations.iter().sum()
    }

    pub fn last_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// Folds a single-solve trace into this stage as refresh `l`.
    pub(crate) fn absorb(&mut self, l: usize, inner: StageTrace) {
        self.inner_iterations.extend(inner.inner_iterations);
        self.inner_converged &= inner.inner_converged;
        self.records.extend(inner.records.into_iter().map(|mut r| {
            r.stage = self.stage;
            r.l = l;
            r
        }));
    }
}

/// Writes `stage,l,k,objective,residual,beta`, one row per inner iteration.
pub fn write_trace_csv<W: Write>(mut out: W, stages: &[StageTrace]) -> io::Result<()> {
    writeln!(out, "stage,l,k,objective,residual,beta")?;
    for stage in stages {
        for r in &stage.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.stage, r.l, r.k, r.objective, r.residual, r.beta
            )?;
        }
    }
    Ok(())
}

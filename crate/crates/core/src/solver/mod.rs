//! Branch and bound with interleaved elicitation.
//!
//! [`ifcsp_scheme`] runs one of the sixteen (Who, What, When) instances,
//! [`baseline_random_tree`] the random-elicitation baseline. Both return a
//! partial completion `q` of the input together with a total assignment that
//! is necessarily optimal in `q`, which [`verify_nos`] checks by enumeration
//! on small problems.

mod baseline;
mod search;
mod strategy;
mod verify;

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use baseline::baseline_random_tree;
pub use search::{bb, ifcsp_scheme, next_variable, order_values, upper_bound};
pub use strategy::{Strategy, StrategyConfig, What, When, Who};
pub use verify::{brute_force_optimal, verify_nos, ENUMERATION_GUARD};
#[doc(hidden)]
pub use verify::brute_force_optimal_unguarded;

use crate::error::SolveError;
use crate::model::{Assignment, Ifcsp};
use crate::oracle::{EffortLedger, Exchange, Oracle};

/// Knobs that are not part of the strategy triple.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Treat the problem as a hard CSP: `What=worst` becomes "is there a 0?"
    /// and a negative answer fixes every queried preference to 1.
    pub hard: bool,
    /// Collect a [`TraceEvent`] log.
    pub trace: bool,
    /// Start elimination from a lower bound of 0 instead of the preference
    /// of the 0-completion optimum.
    pub zero_initial_bound: bool,
    /// Tuples revealed per round by the baseline.
    pub baseline_k: usize,
    /// Seed of the baseline's tuple choice.
    pub seed: u64,
    /// Live snapshot for observers of a running solve.
    pub progress: Option<Arc<Mutex<Progress>>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { hard: false, trace: false, zero_initial_bound: false, baseline_k: 1, seed: 0, progress: None }
    }
}

/// One point of the anytime quality curve: the best necessarily-valid
/// preference after `event` queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityPoint {
    pub event: usize,
    pub lb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub elicited: usize,
    pub effort: usize,
    pub examinations: usize,
    pub queries: usize,
    pub missing_initial: usize,
    pub wall_time_ms: f64,
    /// Search nodes of the largest single branch and bound pass.
    pub max_pass_nodes: u64,
    pub total_nodes: u64,
    pub passes: usize,
    pub quality_trace: Vec<QualityPoint>,
}

impl RunStats {
    pub fn elicited_pct(&self) -> f64 {
        pct(self.elicited, self.missing_initial)
    }

    pub fn effort_pct(&self) -> f64 {
        pct(self.effort, self.missing_initial)
    }

    /// The quality trace as one value per event index.
    pub fn dense_trace(&self) -> Vec<f64> {
        let len = self.quality_trace.last().map_or(0, |p| p.event + 1);
        let mut out = Vec::with_capacity(len);
        let mut it = self.quality_trace.iter().peekable();
        let mut current = 0.0;
        for e in 0..len {
            while let Some(p) = it.next_if(|p| p.event <= e) {
                current = p.lb;
            }
            out.push(current);
        }
        out
    }
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Partial completion of the input in which `sol` is necessarily optimal.
    pub q: Ifcsp,
    pub sol: Assignment,
    pub pref: f64,
    pub stats: RunStats,
    pub ledger: EffortLedger,
    pub transcript: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<TraceEvent>,
}

/// Search log entry, one per line in `--trace` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Pass { index: usize, lb: f64 },
    Visit { depth: usize, var: usize, value: usize },
    Prune { depth: usize, ub: f64, lb: f64 },
    Elicit { id: u64, kind: String, tuples: usize, elicited: usize },
    Improve { lb: f64, sol: Assignment },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Pass { index, lb } => write!(f, "pass {index} lb={lb}"),
            TraceEvent::Visit { depth, var, value } => write!(f, "visit depth={depth} x{var}={value}"),
            TraceEvent::Prune { depth, ub, lb } => write!(f, "prune depth={depth} ub={ub} lb={lb}"),
            TraceEvent::Elicit { id, kind, tuples, elicited } => {
                write!(f, "elicit #{id} {kind} tuples={tuples} elicited={elicited}")
            }
            TraceEvent::Improve { lb, sol } => write!(f, "improve lb={lb} sol={sol}"),
        }
    }
}

/// Snapshot of a running solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub ledger: EffortLedger,
    pub best_pref: Option<f64>,
    pub best_sol: Option<Assignment>,
    pub quality_trace: Vec<QualityPoint>,
}

/// Runs `strategy` on `problem`, asking `oracle` for missing preferences.
pub fn solve(
    problem: &Ifcsp,
    strategy: Strategy,
    oracle: impl Oracle,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    match strategy {
        Strategy::Scheme(cfg) => ifcsp_scheme(problem, cfg, oracle, options),
        Strategy::Baseline => baseline_random_tree(problem, oracle, options),
    }
}

/// Convenience for experiments: solve against the ground truth.
pub fn solve_simulated(
    visible: &Ifcsp,
    truth: &Ifcsp,
    strategy: Strategy,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    solve(visible, strategy, crate::oracle::SimulatedOracle::new(truth.clone()), options)
}

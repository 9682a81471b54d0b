//! Batch experiments over generated instances.
//!
//! A grid sweeps one generator parameter, solves `trials` instances per
//! point with every listed strategy and aggregates the percentages of
//! elicited and examined preferences. All strategies at a point see the same
//! instances. Results are a pure function of the grid unless wall time is
//! recorded.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{GenError, SolveError};
use crate::generator::{generate, GenParams, ProblemKind};
use crate::solver::{solve_simulated, verify_nos, SolveOptions, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    I,
    D,
    T,
}

impl std::fmt::Display for SweepVar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepVar::I => "i",
            SweepVar::D => "d",
            SweepVar::T => "t",
        })
    }
}

fn default_trials() -> u32 {
    100
}

fn default_true() -> bool {
    true
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::all()
}

/// One experiment: `sweep` takes each of `values` while the other generator
/// parameters stay at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub sweep: SweepVar,
    pub values: Vec<u32>,
    #[serde(default)]
    pub base: GenParams,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default)]
    pub base_seed: u64,
    /// Check every result by enumeration when the instance is small enough.
    #[serde(default = "default_true")]
    pub verify: bool,
    /// Fill the `mean_ms` column. Off makes the output reproducible byte for
    /// byte.
    #[serde(default = "default_true")]
    pub record_time: bool,
}

impl ExperimentGrid {
    pub fn new(sweep: SweepVar, values: Vec<u32>, base: GenParams) -> Self {
        ExperimentGrid {
            sweep,
            values,
            base,
            strategies: Strategy::all(),
            trials: default_trials(),
            base_seed: 0,
            verify: true,
            record_time: true,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |msg: String| Err(MetricsError::InvalidGrid(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.values.is_empty() || self.strategies.is_empty() {
            return bad("a grid needs at least one sweep value and one strategy".into());
        }
        if let Some(v) = self.values.iter().find(|&&v| v > 100) {
            return bad(format!("sweep value {v} is not a percentage"));
        }
        self.params_at(self.values[0], 0).validate()?;
        Ok(())
    }

    /// Generator parameters of one trial.
    pub fn params_at(&self, value: u32, trial: u32) -> GenParams {
        let mut p = self.base;
        match self.sweep {
            SweepVar::I => p.i = value,
            SweepVar::D => p.d = value,
            SweepVar::T => p.t = value,
        }
        p.seed = instance_seed(self.base_seed, value, trial);
        p
    }
}

/// Seed of the `trial`-th instance at sweep value `value`.
pub fn instance_seed(base: u64, value: u32, trial: u32) -> u64 {
    base ^ ((value as u64) << 32) ^ trial as u64
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{strategy} failed on instance seed {seed}: {source}")]
    Solve { strategy: Strategy, seed: u64, source: SolveError },
    #[error("{strategy} returned a solution that is not necessarily optimal on instance seed {seed}")]
    NotOptimal { strategy: Strategy, seed: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    /// Sums in the given order, so equal inputs give equal bits.
    pub fn of(xs: &[f64]) -> Stat {
        if xs.is_empty() {
            return Stat::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub sweep_var: SweepVar,
    pub value: u32,
    pub strategy: Strategy,
    pub trials: u32,
    pub elicited_pct: Stat,
    pub effort_pct: Stat,
    pub wall_ms: Stat,
    pub max_ms: f64,
    /// Mean normalized quality per query index; shorter runs are padded with
    /// their final value.
    pub quality: Vec<f64>,
    /// Runs whose normalized trace is not non-decreasing or does not end at 1.
    pub trace_violations: usize,
    pub verified: usize,
    /// Runs too large for enumeration.
    pub unverified: usize,
    pub max_passes: usize,
    pub max_pass_nodes: u64,
}

/// Quality trace relative to the final preference of the same run; all 1
/// when that preference is 0.
pub fn normalize_quality(trace: &[f64], final_pref: f64) -> Vec<f64> {
    if final_pref == 0.0 {
        return vec![1.0; trace.len()];
    }
    trace.iter().map(|lb| lb / final_pref).collect()
}

struct Run {
    elicited_pct: f64,
    effort_pct: f64,
    ms: f64,
    quality: Vec<f64>,
    verified: Option<bool>,
    passes: usize,
    max_pass_nodes: u64,
}

fn run_one(grid: &ExperimentGrid, value: u32, trial: u32, strategy: Strategy) -> Result<Run, MetricsError> {
    let params = grid.params_at(value, trial);
    let g = generate(&params)?;
    let options = SolveOptions {
        hard: params.kind == ProblemKind::Hard,
        seed: params.seed,
        ..Default::default()
    };
    let seed = params.seed;
    let r = solve_simulated(&g.visible, &g.truth, strategy, &options)
        .map_err(|source| MetricsError::Solve { strategy, seed, source })?;
    let verified = if grid.verify {
        match verify_nos(&r.q, &r.sol, r.pref) {
            Ok(true) => Some(true),
            Ok(false) => return Err(MetricsError::NotOptimal { strategy, seed }),
            Err(SolveError::TooLarge(..)) => None,
            Err(source) => return Err(MetricsError::Solve { strategy, seed, source }),
        }
    } else {
        None
    };
    Ok(Run {
        elicited_pct: r.stats.elicited_pct(),
        effort_pct: r.stats.effort_pct(),
        ms: if grid.record_time { r.stats.wall_time_ms } else { 0.0 },
        quality: normalize_quality(&r.stats.dense_trace(), r.pref),
        verified,
        passes: r.stats.passes,
        max_pass_nodes: r.stats.max_pass_nodes,
    })
}

fn summarize(grid: &ExperimentGrid, value: u32, strategy: Strategy, runs: &[Run]) -> PointSummary {
    let col = |f: fn(&Run) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let len = runs.iter().map(|r| r.quality.len()).max().unwrap_or(0);
    let mut quality = vec![0.0; len];
    for r in runs {
        let last = r.quality.last().copied().unwrap_or(1.0);
        for (k, q) in quality.iter_mut().enumerate() {
            *q += r.quality.get(k).copied().unwrap_or(last);
        }
    }
    quality.iter_mut().for_each(|q| *q /= runs.len() as f64);
    let trace_violations = runs
        .iter()
        .filter(|r| !r.quality.windows(2).all(|w| w[0] <= w[1]) || r.quality.last() != Some(&1.0))
        .count();
    PointSummary {
        sweep_var: grid.sweep,
        value,
        strategy,
        trials: grid.trials,
        elicited_pct: Stat::of(&col(|r| r.elicited_pct)),
        effort_pct: Stat::of(&col(|r| r.effort_pct)),
        wall_ms: Stat::of(&col(|r| r.ms)),
        max_ms: runs.iter().map(|r| r.ms).fold(0.0, f64::max),
        quality,
        trace_violations,
        verified: runs.iter().filter(|r| r.verified == Some(true)).count(),
        unverified: runs.iter().filter(|r| r.verified.is_none()).count(),
        max_passes: runs.iter().map(|r| r.passes).max().unwrap_or(0),
        max_pass_nodes: runs.iter().map(|r| r.max_pass_nodes).max().unwrap_or(0),
    }
}

/// Runs every point of the grid, trials in parallel. Summaries come out in
/// sweep order, then strategy order.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<PointSummary>, MetricsError> {
    grid.validate()?;
    let mut out = Vec::with_capacity(grid.values.len() * grid.strategies.len());
    for &value in &grid.values {
        for &strategy in &grid.strategies {
            let runs = (0..grid.trials)
                .into_par_iter()
                .map(|trial| run_one(grid, value, trial, strategy))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(summarize(grid, value, strategy, &runs));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ResultRow {
    sweep_var: String,
    value: u32,
    strategy: String,
    mean_elicited_pct: String,
    #[serde(rename = "sd")]
    sd_elicited: String,
    mean_effort_pct: String,
    #[serde(rename = "sd")]
    sd_effort: String,
    mean_ms: String,
    trials: u32,
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

/// `results.csv`: one row per point and strategy.
pub fn results_csv(points: &[PointSummary]) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(ResultRow {
            sweep_var: p.sweep_var.to_string(),
            value: p.value,
            strategy: p.strategy.to_string(),
            mean_elicited_pct: num(p.elicited_pct.mean),
            sd_elicited: num(p.elicited_pct.sd),
            mean_effort_pct: num(p.effort_pct.mean),
            sd_effort: num(p.effort_pct.sd),
            mean_ms: num(p.wall_ms.mean),
            trials: p.trials,
        })?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

/// `quality_trace.csv`: mean normalized quality per query index, one row
/// per point, strategy and index.
pub fn quality_csv(points: &[PointSummary]) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sweep_var", "value", "strategy", "event", "mean_quality"])?;
    for p in points {
        for (event, q) in p.quality.iter().enumerate() {
            w.write_record([
                p.sweep_var.to_string(),
                p.value.to_string(),
                p.strategy.to_string(),
                event.to_string(),
                num(*q),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

/// gnuplot data: one indexed block per strategy with columns value,
/// elicited mean and sd, effort mean and sd.
pub fn results_dat(points: &[PointSummary]) -> String {
    let mut out = String::new();
    let mut strategies: Vec<Strategy> = Vec::new();
    for p in points {
        if !strategies.contains(&p.strategy) {
            strategies.push(p.strategy);
        }
    }
    for (k, s) in strategies.iter().enumerate() {
        if k > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {s}");
        for p in points.iter().filter(|p| p.strategy == *s) {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                p.value,
                num(p.elicited_pct.mean),
                num(p.elicited_pct.sd),
                num(p.effort_pct.mean),
                num(p.effort_pct.sd)
            );
        }
    }
    out
}

/// Writes `results.csv`, `quality_trace.csv` and, with `dat`, `results.dat`
/// into `dir`.
pub fn write_outputs(points: &[PointSummary], dir: &Path, dat: bool) -> Result<(), MetricsError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(points)?)?;
    fs::write(dir.join("quality_trace.csv"), quality_csv(points)?)?;
    if dat {
        fs::write(dir.join("results.dat"), results_dat(points))?;
    }
    Ok(())
}

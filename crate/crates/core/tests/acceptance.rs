//! Acceptance criteria, one line each.
//!
//! Runs without the test harness so every line is printed. Criteria listed in
//! `KNOWN_RED` are reported as FAIL without failing the run; any other
//! failure exits non-zero.

use std::process::ExitCode;
use std::time::Instant;

use ifcsp::generator::ProblemKind;
use ifcsp::metrics::{quality_csv, results_csv, run_grid, ExperimentGrid, PointSummary, SweepVar};
use ifcsp::model::CompletionKind;
use ifcsp::{bb, brute_force_optimal, generate, solve_simulated, verify_nos, GenParams, SolveOptions, Strategy};

/// Reproduced criteria whose outcome is analysed in the README.
const KNOWN_RED: &[&str] = &["ordering", "hard-csp"];

const HEADLINE_SWEEP: [u32; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
const TRIALS: u32 = 100;

struct Report {
    unexpected: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, name: &'static str, ok: bool, detail: String, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        let status = match (ok, KNOWN_RED.contains(&name)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                self.unexpected.push(name);
                "FAIL"
            }
        };
        println!("{status:12} {name:18} {detail} [{secs:.1}s]");
    }
}

fn strategy(s: &str) -> Strategy {
    s.parse().expect("strategy name")
}

fn point<'a>(points: &'a [PointSummary], s: &str, value: u32) -> &'a PointSummary {
    let s = strategy(s);
    points.iter().find(|p| p.strategy == s && p.value == value).expect("point in grid")
}

fn soundness(r: &mut Report) {
    let t = Instant::now();
    let mut instances = 0;
    let mut failures = Vec::new();
    for n in [4usize, 5, 6] {
        for m in [3usize, 4] {
            for d in [30, 50, 80] {
                for tight in [10, 35] {
                    for i in [10, 30, 100] {
                        for rep in 0..2u64 {
                            let seed = (n as u64) << 40 ^ (m as u64) << 32 ^ (d as u64) << 24 ^ (tight as u64) << 16
                                ^ (i as u64) << 8
                                ^ rep;
                            let g = generate(&GenParams { n, m, d, t: tight, i, seed, ..Default::default() })
                                .expect("valid params");
                            instances += 1;
                            let missing = g.visible.num_incomplete();
                            let node_bound: u64 = (1..=n as u32).map(|k| (m as u64).pow(k)).sum();
                            for s in Strategy::all() {
                                let res = solve_simulated(&g.visible, &g.truth, s, &SolveOptions { seed, ..Default::default() });
                                let ok = match &res {
                                    Ok(res) => {
                                        verify_nos(&res.q, &res.sol, res.pref).unwrap_or(false)
                                            && res.q.is_partial_completion_of(&g.visible)
                                            && res.stats.max_pass_nodes <= node_bound
                                            && res.stats.passes <= missing + 2
                                            && res.stats.elicited <= missing
                                    }
                                    Err(_) => false,
                                };
                                if !ok {
                                    failures.push(format!("{s}@{seed}"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let ok = instances >= 200 && failures.is_empty();
    r.line(
        "soundness",
        ok,
        format!("{instances} instances x 17 strategies, {} failures {:?}", failures.len(), &failures[..failures.len().min(5)]),
        t,
    );
}

fn oracle_equivalence(r: &mut Report) {
    let t = Instant::now();
    let mut mismatches = 0;
    for seed in 0..200u64 {
        let n = 3 + (seed % 5) as usize;
        let m = 2 + (seed % 3) as usize;
        let d = [30, 50, 80, 100][(seed % 4) as usize];
        let tight = [0, 10, 35, 60][(seed / 4 % 4) as usize];
        let g = generate(&GenParams { n, m, d, t: tight, i: 0, seed, ..Default::default() }).expect("valid params");
        let (_, expected) = brute_force_optimal(&g.truth).expect("small instance");
        let found = bb(&g.truth, f64::NEG_INFINITY).expect("complete").expect("some solution").1;
        if found != expected {
            mismatches += 1;
        }
    }
    r.line("oracle-equivalence", mismatches == 0, format!("200 complete instances, {mismatches} mismatches"), t);
}

fn headline_grid() -> Vec<PointSummary> {
    let mut grid = ExperimentGrid::new(SweepVar::I, HEADLINE_SWEEP.to_vec(), GenParams::default());
    grid.trials = TRIALS;
    grid.verify = false;
    run_grid(&grid).expect("headline grid")
}

fn headline(r: &mut Report, points: &[PointSummary], t: Instant) {
    let max = |s: &str| HEADLINE_SWEEP.iter().map(|&v| point(points, s, v).elicited_pct.mean).fold(0.0, f64::max);
    let su = max("SU.WORST.BRANCH");
    let dpi = max("DPI.WORST.BRANCH");
    let base50 = point(points, Strategy::BASELINE_NAME, 50).elicited_pct.mean;
    let dpi50 = point(points, "DPI.WORST.BRANCH", 50).elicited_pct.mean;
    let ok = su <= 10.0 && dpi <= 20.0 && base50 >= 3.0 * dpi50;
    r.line(
        "headline",
        ok,
        format!(
            "max SU.WORST.BRANCH {su:.2}% (<=10), max DPI.WORST.BRANCH {dpi:.2}% (<=20), i=50 baseline {base50:.2}% vs 3x{dpi50:.2}%"
        ),
        t,
    );
}

fn ordering(r: &mut Report, points: &[PointSummary]) {
    let t = Instant::now();
    let el = |s: String, v: u32| point(points, &s, v).elicited_pct.mean;
    let mut worst_vs_all = 0;
    let mut branch_vs_node = 0;
    let mut branch_vs_tree = 0;
    for &v in &HEADLINE_SWEEP {
        for who in ["DP", "DPI", "LU", "SU"] {
            for when in ["TREE", "BRANCH", "NODE"] {
                if when != "BRANCH" && (who == "LU" || who == "SU") {
                    continue;
                }
                if el(format!("{who}.WORST.{when}"), v) >= el(format!("{who}.ALL.{when}"), v) {
                    worst_vs_all += 1;
                }
            }
        }
        for who in ["DP", "DPI"] {
            for what in ["ALL", "WORST"] {
                let branch = el(format!("{who}.{what}.BRANCH"), v);
                if branch >= el(format!("{who}.{what}.NODE"), v) {
                    branch_vs_node += 1;
                }
                if branch >= el(format!("{who}.{what}.TREE"), v) {
                    branch_vs_tree += 1;
                }
            }
        }
    }
    let ok = worst_vs_all + branch_vs_node + branch_vs_tree <= 2;
    r.line(
        "ordering",
        ok,
        format!(
            "exceptions: worst<all {worst_vs_all}/100, branch<node {branch_vs_node}/40, branch<tree {branch_vs_tree}/40 (<=2 total)"
        ),
        t,
    );
}

fn effort(r: &mut Report, points: &[PointSummary]) {
    let t = Instant::now();
    let e = point(points, "DPI.WORST.BRANCH", 100).effort_pct.mean;
    r.line("effort", e <= 70.0, format!("DPI.WORST.BRANCH effort at i=100 {e:.2}% (<=70)"), t);
}

fn anytime(r: &mut Report, points: &[PointSummary]) {
    let t = Instant::now();
    let violations: usize = points.iter().map(|p| p.trace_violations).sum();
    let mut exceptions = 0;
    let mut indices = 0;
    for &v in &HEADLINE_SWEEP {
        let ours = &point(points, "DPI.WORST.BRANCH", v).quality;
        let base = &point(points, Strategy::BASELINE_NAME, v).quality;
        let len = ours.len().max(base.len());
        let at = |q: &[f64], k: usize| q.get(k).copied().unwrap_or_else(|| q.last().copied().unwrap_or(1.0));
        for k in 0..len {
            indices += 1;
            if at(ours, k) + 1e-12 < at(base, k) {
                exceptions += 1;
            }
        }
    }
    let runs = points.len() as u32 * TRIALS;
    r.line(
        "anytime",
        violations == 0 && exceptions <= 2,
        format!(
            "{violations} of {runs} per-run traces not monotone or not ending at 1; DPI.WORST.BRANCH below baseline at {exceptions}/{indices} indices (<=2)"
        ),
        t,
    );
}

fn hard_csp(r: &mut Report) {
    let t = Instant::now();
    let sweep: Vec<u32> = (1..=16).map(|k| 5 * k).collect();
    let mut grid = ExperimentGrid::new(
        SweepVar::T,
        sweep.clone(),
        GenParams { d: 50, i: 30, kind: ProblemKind::Hard, ..Default::default() },
    );
    grid.trials = TRIALS;
    grid.verify = false;
    let points = run_grid(&grid).expect("hard grid");
    let curve: Vec<f64> = sweep
        .iter()
        .map(|&v| {
            let at: Vec<f64> = points.iter().filter(|p| p.value == v).map(|p| p.elicited_pct.mean).collect();
            at.iter().sum::<f64>() / at.len() as f64
        })
        .collect();
    let top = (0..curve.len()).max_by(|&a, &b| curve[a].total_cmp(&curve[b])).expect("non-empty");
    let peak_t = sweep[top];
    // Single: any other local maximum stays below half the peak.
    let single = (1..curve.len() - 1)
        .filter(|&k| k != top && curve[k] > curve[k - 1] && curve[k] >= curve[k + 1])
        .all(|k| curve[k] < curve[top] / 2.0);
    let interior = top > 0 && top < curve.len() - 1 && (25..=45).contains(&peak_t);
    let mut over = Vec::new();
    for s in Strategy::all() {
        let peak = points.iter().filter(|p| p.strategy == s).map(|p| p.elicited_pct.mean).fold(0.0, f64::max);
        if peak > 25.0 {
            over.push(format!("{s} {peak:.1}%"));
        }
    }
    r.line(
        "hard-csp",
        single && interior && over.is_empty(),
        format!(
            "mean curve peaks at t={peak_t} ({:.2}%, single={single}); strategies above 25%: {over:?}",
            curve[top]
        ),
        t,
    );
}

fn temporal(r: &mut Report) {
    let t = Instant::now();
    let mut grid = ExperimentGrid::new(
        SweepVar::I,
        HEADLINE_SWEEP.to_vec(),
        GenParams { kind: ProblemKind::Temporal, ..Default::default() },
    );
    grid.strategies = vec![strategy("DPI.WORST.BRANCH")];
    grid.trials = TRIALS;
    grid.verify = false;
    let points = run_grid(&grid).expect("temporal grid");
    let worst = points.iter().map(|p| p.elicited_pct.mean).fold(0.0, f64::max);
    let slowest = points.iter().map(|p| p.max_ms).fold(0.0, f64::max);
    r.line(
        "temporal",
        worst <= 20.0 && slowest < 5000.0,
        format!("max mean elicited {worst:.2}% (<=20), slowest instance {slowest:.1} ms (<5000)"),
        t,
    );
}

fn determinism(r: &mut Report) {
    let t = Instant::now();
    let mut grid = ExperimentGrid::new(SweepVar::I, vec![10, 50, 100], GenParams::default());
    grid.trials = 20;
    grid.verify = false;
    grid.record_time = false;
    let a = run_grid(&grid).expect("grid");
    let b = run_grid(&grid).expect("grid");
    let same = results_csv(&a).unwrap() == results_csv(&b).unwrap() && quality_csv(&a).unwrap() == quality_csv(&b).unwrap();
    // The 0-completion optimum is reproducible too.
    let g = generate(&GenParams { seed: 3, ..Default::default() }).unwrap();
    let p0 = g.visible.completion(CompletionKind::Zero);
    let same_bb = bb(&p0, f64::NEG_INFINITY).unwrap() == bb(&p0, f64::NEG_INFINITY).unwrap();
    r.line("determinism", same && same_bb, format!("two runs of a {}-row grid give identical CSV bytes: {same}", a.len()), t);
}

fn main() -> ExitCode {
    let mut r = Report { unexpected: Vec::new() };
    soundness(&mut r);
    oracle_equivalence(&mut r);
    let t = Instant::now();
    let points = headline_grid();
    headline(&mut r, &points, t);
    ordering(&mut r, &points);
    effort(&mut r, &points);
    anytime(&mut r, &points);
    hard_csp(&mut r);
    temporal(&mut r);
    determinism(&mut r);
    if r.unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {:?}", r.unexpected);
        ExitCode::FAILURE
    }
}

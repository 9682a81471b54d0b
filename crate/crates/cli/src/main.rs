//! `ifcsp`: generate instances, solve them against a simulated user,
//! run benchmark grids and serve interactive sessions.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 input or output,
//! 4 inconsistent strategy, 5 verification failure.

use std::fs;
use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use ifcsp::metrics::{results_csv, run_grid, write_outputs, ExperimentGrid, MetricsError};
use ifcsp::{
    brute_force_optimal, generate, solve_simulated, verify_nos, Assignment, GenParams, GeneratedInstance, Ifcsp,
    ProblemKind, SolveError, SolveOptions, SolveResult, Strategy, StrategyConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "ifcsp", version, about = "Incomplete fuzzy constraint problems with preference elicitation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance; writes `{params, visible, truth}` JSON.
    Gen(GenArgs),
    /// Solve an instance, answering queries from its ground truth.
    Solve(SolveArgs),
    /// Run an experiment grid and write CSV summaries.
    Bench(BenchArgs),
    /// Solve and check necessary optimality by enumeration.
    Verify(VerifyArgs),
    /// Serve interactive elicitation sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Density, percent.
    #[arg(long, default_value_t = 50)]
    d: u32,
    /// Tightness, percent.
    #[arg(long, default_value_t = 10)]
    t: u32,
    /// Incompleteness, percent.
    #[arg(long, default_value_t = 30)]
    i: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fuzzy, hard or temporal.
    #[arg(long, default_value = "fuzzy")]
    kind: ProblemKind,
    /// Write only the visible problem.
    #[arg(long)]
    visible_only: bool,
    /// Output file; stdout by default.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StrategyArgs {
    /// Dotted form such as DPI.WORST.BRANCH or DPI.RANDOM.TREE. Overrides
    /// --who/--what/--when.
    #[arg(long, short)]
    strategy: Option<String>,
    #[arg(long, default_value = "dpi")]
    who: String,
    #[arg(long, default_value = "worst")]
    what: String,
    #[arg(long, default_value = "branch")]
    when: String,
}

impl StrategyArgs {
    fn resolve(&self) -> Result<Strategy, SolveError> {
        match &self.strategy {
            Some(s) => s.parse(),
            None => Ok(Strategy::Scheme(StrategyConfig::new(
                self.who.parse()?,
                self.what.parse()?,
                self.when.parse()?,
            )?)),
        }
    }
}

#[derive(Args)]
struct ProblemArgs {
    /// Instance file from `ifcsp gen`, or a bare problem; `-` reads stdin.
    #[arg(long, short)]
    problem: PathBuf,
    /// Ground truth for a bare problem file.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Hard-CSP elicitation; defaults to the instance kind.
    #[arg(long)]
    hard: Option<bool>,
    /// Seed of the random baseline; defaults to the instance seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Print the search log to stderr, one event per line.
    #[arg(long)]
    trace: bool,
    /// Include the completed problem and the query transcript.
    #[arg(long)]
    full: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment grid as JSON.
    #[arg(long)]
    grid_file: PathBuf,
    #[arg(long, env = "IFCSP_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,
    /// Write 0 for timings so that repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
    /// Also write gnuplot blocks to results.dat.
    #[arg(long)]
    dat: bool,
    /// Override the grid's trial count.
    #[arg(long)]
    trials: Option<u32>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Check all seventeen strategies.
    #[arg(long)]
    all_strategies: bool,
    /// Also check that the verifier rejects tampered results.
    #[arg(long)]
    mutate: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "IFCSP_PORT", default_value_t = 8080)]
    port: u16,
    /// Idle seconds before a session is aborted.
    #[arg(long, default_value_t = 1800)]
    session_ttl: u64,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 3, error: error.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = if matches!(e, SolveError::InconsistentStrategy(_)) { 4 } else { 1 };
        Failure { code, error: e.into() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
        Command::Serve(a) => serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text).map_err(Failure::io)?;
    } else {
        text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::io)?;
    }
    Ok(text)
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(Failure::io),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.write_all(b"\n")).map_err(Failure::io)
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn gen(a: GenArgs) -> CliResult {
    let params = GenParams { n: a.n, m: a.m, d: a.d, t: a.t, i: a.i, seed: a.seed, kind: a.kind };
    let g = generate(&params).map_err(|e| Failure { code: 2, error: e.into() })?;
    let text = if a.visible_only { to_json(&g.visible) } else { to_json(&g) };
    write_output(a.out.as_deref(), &text)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProblemFile {
    Instance(GeneratedInstance),
    Bare(Ifcsp),
}

struct Loaded {
    visible: Ifcsp,
    truth: Ifcsp,
    options: SolveOptions,
}

fn load(a: &ProblemArgs) -> CliResult<Loaded> {
    let parse = |text: &str, what: &Path| {
        serde_json::from_str::<ProblemFile>(text)
            .with_context(|| format!("{} is neither an instance nor a problem", what.display()))
            .map_err(Failure::io)
    };
    let (visible, truth, params) = match parse(&read_input(&a.problem)?, &a.problem)? {
        ProblemFile::Instance(g) => (g.visible, Some(g.truth), Some(g.params)),
        ProblemFile::Bare(p) => (p, None, None),
    };
    let truth = match (&a.truth, truth) {
        (Some(path), _) => match parse(&read_input(path)?, path)? {
            ProblemFile::Instance(g) => g.truth,
            ProblemFile::Bare(p) => p,
        },
        (None, Some(t)) => t,
        (None, None) if visible.is_complete() => visible.clone(),
        (None, None) => return Err(anyhow!("the problem has missing preferences; pass --truth").into()),
    };
    if !truth.is_complete() || !truth.is_partial_completion_of(&visible) {
        return Err(anyhow!("the ground truth must be a complete version of the problem").into());
    }
    let options = SolveOptions {
        hard: a.hard.unwrap_or(params.is_some_and(|p| p.kind == ProblemKind::Hard)),
        seed: a.seed.or(params.map(|p| p.seed)).unwrap_or(0),
        ..Default::default()
    };
    Ok(Loaded { visible, truth, options })
}

/// The `solve` report.
#[derive(Serialize)]
struct Report<'a> {
    strategy: Strategy,
    hard: bool,
    pref: f64,
    sol: &'a Assignment,
    elicited_pct: f64,
    effort_pct: f64,
    stats: &'a ifcsp::RunStats,
    /// Necessary optimality by enumeration; null when too large.
    nos: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<&'a Ifcsp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transcript: Option<&'a [ifcsp::Exchange]>,
}

fn nos_or_skip(r: &SolveResult) -> CliResult<Option<bool>> {
    match verify_nos(&r.q, &r.sol, r.pref) {
        Ok(ok) => Ok(Some(ok)),
        Err(SolveError::TooLarge(..)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn solve(a: SolveArgs) -> CliResult {
    let strategy = a.strategy.resolve()?;
    let mut loaded = load(&a.problem)?;
    loaded.options.trace = a.trace;
    let r = solve_simulated(&loaded.visible, &loaded.truth, strategy, &loaded.options)?;
    if a.trace {
        let mut err = io::stderr().lock();
        for e in &r.events {
            writeln!(err, "{e}").map_err(Failure::io)?;
        }
    }
    let report = Report {
        strategy,
        hard: loaded.options.hard,
        pref: r.pref,
        sol: &r.sol,
        elicited_pct: r.stats.elicited_pct(),
        effort_pct: r.stats.effort_pct(),
        stats: &r.stats,
        nos: nos_or_skip(&r)?,
        q: a.full.then_some(&r.q),
        transcript: a.full.then_some(&r.transcript[..]),
    };
    write_output(a.out.as_deref(), &to_json(&report))
}

fn bench(a: BenchArgs) -> CliResult {
    let text = read_input(&a.grid_file)?;
    let mut grid: ExperimentGrid = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.grid_file.display()))
        .map_err(Failure::io)?;
    if let Some(t) = a.trials {
        grid.trials = t;
    }
    if a.no_timing {
        grid.record_time = false;
    }
    let points = run_grid(&grid).map_err(|e| match e {
        MetricsError::InvalidGrid(_) => Failure { code: 2, error: e.into() },
        MetricsError::NotOptimal { .. } => Failure { code: 5, error: e.into() },
        MetricsError::Solve { source: SolveError::InconsistentStrategy(_), .. } => Failure { code: 4, error: e.into() },
        e => Failure { code: 1, error: e.into() },
    })?;
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))
        .map_err(Failure::io)?;
    write_outputs(&points, &a.out_dir, a.dat).map_err(Failure::io)?;
    let csv = results_csv(&points).map_err(Failure::io)?;
    write_output(None, csv.trim_end())
}

fn verify(a: VerifyArgs) -> CliResult {
    let strategies = if a.all_strategies { Strategy::all() } else { vec![a.strategy.resolve()?] };
    let loaded = load(&a.problem)?;
    let optimum = match brute_force_optimal(&loaded.truth) {
        Ok((_, best)) => best,
        Err(SolveError::TooLarge(count, guard)) => {
            println!("skipped: {count} assignments exceed the enumeration guard of {guard}");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let mut failures = 0;
    for s in strategies {
        let r = solve_simulated(&loaded.visible, &loaded.truth, s, &loaded.options)?;
        let mut problems = Vec::new();
        if !verify_nos(&r.q, &r.sol, r.pref)? {
            problems.push("not necessarily optimal".to_owned());
        }
        if r.pref != optimum {
            problems.push(format!("pref {} differs from the optimum {optimum}", r.pref));
        }
        if a.mutate {
            problems.extend(mutations(&r)?);
        }
        let status = if problems.is_empty() { "ok" } else { "FAIL" };
        println!(
            "{status:4} {:18} pref={:.4} elicited={}/{} {}",
            s.to_string(),
            r.pref,
            r.stats.elicited,
            r.stats.missing_initial,
            problems.join("; ")
        );
        failures += usize::from(!problems.is_empty());
    }
    if failures > 0 {
        return Err(Failure { code: 5, error: anyhow!("{failures} strategies failed verification") });
    }
    Ok(())
}

/// Tampered variants of `r` that the verifier must reject.
fn mutations(r: &SolveResult) -> CliResult<Vec<String>> {
    let mut missed = Vec::new();
    let shifted = if r.pref >= 0.5 { r.pref - 0.25 } else { r.pref + 0.25 };
    if verify_nos(&r.q, &r.sol, shifted)? {
        missed.push(format!("accepted pref {shifted}"));
    }
    // Some assignment that is worse in the completed problem, if any.
    let q0 = r.q.completion(ifcsp::model::CompletionKind::Zero);
    let (n, m) = (r.q.num_vars(), r.q.domain_size());
    for x in 0..n {
        for v in 0..m {
            let mut values = r.sol.values().expect("total");
            values[x] = v;
            let alt = Assignment::total(values);
            if q0.pref_of(&alt).map_err(SolveError::from)? < r.pref {
                if verify_nos(&r.q, &alt, r.pref)? {
                    missed.push(format!("accepted the worse assignment {alt}"));
                }
                return Ok(missed);
            }
        }
    }
    Ok(missed)
}

fn serve(a: ServeArgs) -> CliResult {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .with_context(|| format!("bad address {}:{}", a.host, a.port))
        .map_err(|e| Failure { code: 2, error: e })?;
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::io)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(Failure::io)?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(Failure::io)?);
        ifcsp_service::serve(listener, Duration::from_secs(a.session_ttl)).await.map_err(Failure::io)
    })
}

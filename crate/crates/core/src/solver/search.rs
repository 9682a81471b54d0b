use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::error::SolveError;
use crate::model::{Assignment, CompletionKind, Ifcsp, PreferenceEntry, Scope, TupleRef};
use crate::oracle::{Interviewer, Oracle, OracleAnswer, OracleQuery, SuggestContext};

use super::{Progress, QualityPoint, RunStats, SolveOptions, SolveResult, StrategyConfig, TraceEvent, What, When, Who};

/// Upper bound on the preference of any completion of `s`: the minimum over
/// the cells of fully bound constraints in the 1-completion, `1` if none.
pub fn upper_bound(p: &Ifcsp, s: &Assignment) -> f64 {
    let m = p.domain_size();
    let mut ub = 1.0f64;
    for c in p.constraints() {
        let cell = match c.scope {
            Scope::Unary(x) => match s.get(x) {
                Some(v) => v,
                None => continue,
            },
            Scope::Binary(x, y) => match (s.get(x), s.get(y)) {
                (Some(vx), Some(vy)) => vx * m + vy,
                _ => continue,
            },
        };
        ub = ub.min(c.table[cell].optimistic());
    }
    ub
}

/// Most-constrained-first: the unbound variable with the most constraints
/// to bound variables, ties to the smallest id.
pub fn next_variable(p: &Ifcsp, s: &Assignment) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for var in (0..p.num_vars()).filter(|&v| !s.is_bound(v)) {
        let degree = p.links(var).iter().filter(|l| s.is_bound(l.other)).count();
        if best.is_none_or(|(_, d)| degree > d) {
            best = Some((var, degree));
        }
    }
    best.map(|(var, _)| var)
}

/// Values of `var` by decreasing unary preference, missing preferences read
/// as 1 (dp) or as their 0-completion value (dpi); ties to smaller values.
fn static_order(p: &Ifcsp, var: usize, optimistic: bool) -> Vec<usize> {
    let key = |v: usize| {
        let e = p.entry(p.unary_cell(var, v));
        if optimistic {
            e.optimistic()
        } else {
            e.pessimistic()
        }
    };
    let mut values: Vec<usize> = (0..p.domain_size()).collect();
    values.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    values
}

/// Order in which the values of `var` are tried.
///
/// For the user-driven `lu` and `su` the oracle's suggestion comes first and
/// the remaining values follow in dpi order; during search the user is asked
/// again among the remaining values after every backtrack.
pub fn order_values(
    var: usize,
    who: Who,
    p: &Ifcsp,
    s: &Assignment,
    ask: &mut Interviewer<'_>,
) -> Result<Vec<usize>, SolveError> {
    match who {
        Who::Dp => Ok(static_order(p, var, true)),
        Who::Dpi => Ok(static_order(p, var, false)),
        Who::Lu | Who::Su => {
            let mut rest = static_order(p, var, false);
            let candidates: Vec<usize> = (0..p.domain_size()).collect();
            let (first, _) = suggest(p, s, var, who, candidates, ask)?;
            rest.retain(|&v| v != first);
            rest.insert(0, first);
            Ok(rest)
        }
    }
}

fn suggest(
    p: &Ifcsp,
    s: &Assignment,
    var: usize,
    who: Who,
    candidates: Vec<usize>,
    ask: &mut Interviewer<'_>,
) -> Result<(usize, bool), SolveError> {
    let context = if who == Who::Su { SuggestContext::Smart } else { SuggestContext::Lazy };
    let mut examined = Vec::new();
    for &v in &candidates {
        let t = p.unary_cell(var, v);
        if !p.entry(t).is_known() {
            examined.push(t);
        }
        if context == SuggestContext::Smart {
            for link in p.links(var) {
                if let Some(other) = s.get(link.other) {
                    let t = p.link_cell(link, v, other);
                    if !p.entry(t).is_known() {
                        examined.push(t);
                    }
                }
            }
        }
    }
    if examined.is_empty() {
        // Everything the user would look at is known already.
        let score = |v: usize| {
            let mut score = p.entry(p.unary_cell(var, v)).optimistic();
            if context == SuggestContext::Smart {
                for link in p.links(var) {
                    if let Some(other) = s.get(link.other) {
                        score = score.min(p.entry(p.link_cell(link, v, other)).optimistic());
                    }
                }
            }
            score
        };
        let best = candidates.iter().copied().fold(None, |best: Option<(usize, f64)>, v| {
            let sv = score(v);
            if best.is_none_or(|(bv, bs)| sv > bs || (sv == bs && v < bv)) {
                Some((v, sv))
            } else {
                best
            }
        });
        return Ok((best.expect("candidates are not empty").0, false));
    }
    let bound_vars = s.clone();
    match ask.ask(p, OracleQuery::SuggestValue { var, candidates, context, bound_vars, examined })? {
        OracleAnswer::Suggested { value } => Ok((value, true)),
        other => unreachable!("validated answer {other:?}"),
    }
}

/// Depth-first branch and bound on a complete problem. Returns an optimal
/// assignment whose preference strictly exceeds `lb`, or `None`.
pub fn bb(p: &Ifcsp, lb: f64) -> Result<Option<(Assignment, f64)>, SolveError> {
    if !p.is_complete() {
        return Err(SolveError::Incomplete);
    }
    let mut search = PlainSearch {
        p,
        s: Assignment::empty(p.num_vars()),
        lb,
        best: None,
        orders: (0..p.num_vars()).map(|v| static_order(p, v, true)).collect(),
    };
    search.run(1.0, 0);
    Ok(search.best.map(|sol| (sol, search.lb)))
}

struct PlainSearch<'a> {
    p: &'a Ifcsp,
    s: Assignment,
    lb: f64,
    best: Option<Assignment>,
    orders: Vec<Vec<usize>>,
}

impl PlainSearch<'_> {
    fn run(&mut self, ub_parent: f64, depth: usize) {
        let Some(var) = next_variable(self.p, &self.s) else { return };
        for k in 0..self.orders[var].len() {
            let value = self.orders[var][k];
            // Tables are fixed, so the bound can be extended incrementally.
            let mut ub = ub_parent.min(self.p.entry(self.p.unary_cell(var, value)).optimistic());
            for link in self.p.links(var) {
                if let Some(other) = self.s.get(link.other) {
                    ub = ub.min(self.p.entry(self.p.link_cell(link, value, other)).optimistic());
                }
            }
            if ub <= self.lb {
                continue;
            }
            self.s.bind(var, value);
            if depth + 1 == self.p.num_vars() {
                self.lb = ub;
                self.best = Some(self.s.clone());
            } else {
                self.run(ub, depth + 1);
            }
            self.s.unbind(var);
        }
    }
}

/// Search state shared by the scheme and the baseline.
pub(super) struct SearchState<'o> {
    pub(super) p: Ifcsp,
    cfg: StrategyConfig,
    hard: bool,
    pub(super) ask: Interviewer<'o>,
    s: Assignment,
    pass_nodes: u64,
    max_pass_nodes: u64,
    total_nodes: u64,
    pub(super) passes: usize,
    incumbent: f64,
    quality: Vec<f64>,
    events: Option<Vec<TraceEvent>>,
    progress: Option<Arc<Mutex<Progress>>>,
    started: Instant,
    missing_initial: usize,
}

impl<'o> SearchState<'o> {
    pub(super) fn new(problem: &Ifcsp, cfg: StrategyConfig, oracle: impl Oracle + 'o, options: &SolveOptions) -> Self {
        SearchState {
            p: problem.clone(),
            cfg,
            hard: options.hard,
            ask: Interviewer::new(oracle),
            s: Assignment::empty(problem.num_vars()),
            pass_nodes: 0,
            max_pass_nodes: 0,
            total_nodes: 0,
            passes: 0,
            incumbent: f64::NEG_INFINITY,
            quality: Vec::new(),
            events: options.trace.then(Vec::new),
            progress: options.progress.clone(),
            started: Instant::now(),
            missing_initial: problem.num_incomplete(),
        }
    }

    fn log(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(events) = &mut self.events {
            events.push(event());
        }
    }

    pub(super) fn begin_pass(&mut self, lb: f64) {
        self.passes += 1;
        self.pass_nodes = 0;
        let index = self.passes;
        self.log(|| TraceEvent::Pass { index, lb });
    }

    pub(super) fn count_nodes(&mut self, nodes: u64) {
        self.pass_nodes += nodes;
        self.total_nodes += nodes;
        self.max_pass_nodes = self.max_pass_nodes.max(self.pass_nodes);
    }

    /// Records a solution whose preference holds in every completion
    /// consistent with what has been elicited.
    pub(super) fn improve(&mut self, sol: &Assignment, pref: f64) {
        if pref <= self.incumbent {
            return;
        }
        self.incumbent = pref;
        match self.quality.last_mut() {
            Some(last) => *last = pref,
            None => self.quality.push(pref),
        }
        self.log(|| TraceEvent::Improve { lb: pref, sol: sol.clone() });
        if let Some(progress) = &self.progress {
            let mut g = progress.lock().unwrap();
            g.best_pref = Some(pref);
            g.best_sol = Some(sol.clone());
            g.quality_trace = quality_points(&self.quality);
        }
    }

    pub(super) fn query(&mut self, query: OracleQuery) -> Result<OracleAnswer, SolveError> {
        let kind = query.kind();
        let tuples = query.examined().len();
        let answer = self.ask.ask(&self.p, query)?;
        self.note_query(kind, tuples, answer.elicited());
        Ok(answer)
    }

    /// Bookkeeping after every answered query.
    fn note_query(&mut self, kind: &'static str, tuples: usize, elicited: usize) {
        self.quality.push(self.incumbent.max(0.0));
        let id = self.ask.transcript().last().map_or(0, |e| e.id);
        self.log(|| TraceEvent::Elicit { id, kind: kind.to_owned(), tuples, elicited });
        if let Some(progress) = &self.progress {
            let mut g = progress.lock().unwrap();
            g.ledger = self.ask.ledger().clone();
            g.quality_trace = quality_points(&self.quality);
        }
    }

    /// Asks about the missing preferences among `cells`, whose known minimum
    /// is `known_min`, and folds the answer into the problem.
    fn elicit(&mut self, cells: Vec<TupleRef>, known_min: f64) -> Result<(), SolveError> {
        let mut missing: Vec<TupleRef> = cells.into_iter().filter(|&t| !self.p.entry(t).is_known()).collect();
        match (self.cfg.what, self.hard) {
            (What::All, _) => {
                if missing.is_empty() {
                    return Ok(());
                }
                if let OracleAnswer::Revealed { values } = self.query(OracleQuery::RevealAll { tuples: missing })? {
                    for c in values {
                        self.p.reveal_in_place(c.tuple, c.value)?;
                    }
                }
            }
            (What::Worst, true) => {
                // A 0 is only news if every known preference is 1.
                if missing.is_empty() || known_min < 1.0 {
                    return Ok(());
                }
                match self.query(OracleQuery::HasZero { tuples: missing.clone() })? {
                    OracleAnswer::ZeroAt { tuple } => self.p.reveal_in_place(tuple, 0.0)?,
                    _ => {
                        for t in missing {
                            self.p.reveal_in_place(t, 1.0)?;
                        }
                    }
                }
            }
            (What::Worst, false) => {
                // Bounded tuples at or above the known minimum cannot be worse.
                missing.retain(|&t| match self.p.entry(t) {
                    PreferenceEntry::AtLeast(f) => f < known_min,
                    _ => known_min > 0.0,
                });
                if missing.is_empty() {
                    return Ok(());
                }
                let answer = self.query(OracleQuery::RevealWorst { tuples: missing.clone(), known_min })?;
                let floor = match answer {
                    OracleAnswer::Worst { tuple, value } => {
                        self.p.reveal_in_place(tuple, value)?;
                        value
                    }
                    _ => known_min,
                };
                for t in missing {
                    self.p.raise_floor(t, floor)?;
                }
            }
        }
        Ok(())
    }

    /// The cells touched by binding `var`: its unary cell and the cells of
    /// its constraints with bound variables.
    fn node_cells(&self, var: usize) -> Vec<TupleRef> {
        let value = self.s.get(var).expect("var is bound");
        let mut cells = vec![self.p.unary_cell(var, value)];
        for link in self.p.links(var) {
            if let Some(other) = self.s.get(link.other) {
                cells.push(self.p.link_cell(link, value, other));
            }
        }
        cells
    }

    /// Node-level elicitation right after `var` was bound; returns the new
    /// upper bound.
    fn elicit_at_node(&mut self, var: usize) -> Result<f64, SolveError> {
        let cells = self.node_cells(var);
        let known_min = upper_bound(&self.p, &self.s);
        self.elicit(cells, known_min)?;
        Ok(upper_bound(&self.p, &self.s))
    }

    /// Elicitation on the current total assignment; returns its exact
    /// preference.
    fn elicit_at_branch(&mut self) -> Result<f64, SolveError> {
        let cells = self.p.projected_tuples(&self.s).into_iter().map(|(t, _)| t).collect();
        let known_min = upper_bound(&self.p, &self.s);
        self.elicit(cells, known_min)?;
        Ok(self.p.pref_in(CompletionKind::One, &self.s)?)
    }

    /// Elicitation on the winner of a tree-level pass.
    fn elicit_at_tree(&mut self, sol: &Assignment) -> Result<f64, SolveError> {
        let saved = std::mem::replace(&mut self.s, sol.clone());
        let pref = self.elicit_at_branch();
        self.s = saved;
        pref
    }

    fn next_value(&mut self, var: usize, remaining: &mut Vec<usize>) -> Result<Option<usize>, SolveError> {
        if remaining.is_empty() {
            return Ok(None);
        }
        let value = match self.cfg.who {
            Who::Dp | Who::Dpi => remaining[0],
            // A single candidate needs no advice.
            _ if remaining.len() == 1 => remaining[0],
            who => {
                let mut candidates = remaining.clone();
                candidates.sort_unstable();
                let (value, asked) = suggest(&self.p, &self.s, var, who, candidates, &mut self.ask)?;
                if asked {
                    let examined = self.ask.transcript().last().map_or(0, |e| e.query.examined().len());
                    self.note_query("suggest_value", examined, 0);
                }
                value
            }
        };
        remaining.retain(|&v| v != value);
        Ok(Some(value))
    }

    /// One branch and bound pass over the 1-completion.
    fn search(&mut self, depth: usize, best: &mut Option<Assignment>, lb: &mut f64) -> Result<(), SolveError> {
        let n = self.p.num_vars();
        let var = next_variable(&self.p, &self.s).expect("an unbound variable below full depth");
        let mut remaining = match self.cfg.who {
            Who::Dp => static_order(&self.p, var, true),
            Who::Dpi => static_order(&self.p, var, false),
            Who::Lu | Who::Su => (0..self.p.domain_size()).collect(),
        };
        while let Some(value) = self.next_value(var, &mut remaining)? {
            self.s.bind(var, value);
            self.count_nodes(1);
            self.log(|| TraceEvent::Visit { depth, var, value });
            if self.cfg.when == When::Node {
                self.elicit_at_node(var)?;
            }
            let ub = upper_bound(&self.p, &self.s);
            if ub > *lb {
                if depth + 1 == n {
                    let pref = if self.cfg.when == When::Branch { self.elicit_at_branch()? } else { ub };
                    if pref > *lb {
                        *lb = self.p.pref_in(CompletionKind::One, &self.s)?;
                        *best = Some(self.s.clone());
                        if self.cfg.when != When::Tree {
                            let sol = self.s.clone();
                            self.improve(&sol, *lb);
                        } else {
                            let (lb, sol) = (*lb, self.s.clone());
                            self.log(|| TraceEvent::Improve { lb, sol });
                        }
                    }
                } else {
                    self.search(depth + 1, best, lb)?;
                }
            } else {
                let lb = *lb;
                self.log(|| TraceEvent::Prune { depth, ub, lb });
            }
            self.s.unbind(var);
        }
        Ok(())
    }

    /// A pass from the root; returns the last strictly improving solution.
    fn pass(&mut self, lb: &mut f64) -> Result<Option<Assignment>, SolveError> {
        self.begin_pass(*lb);
        let mut best = None;
        self.search(0, &mut best, lb)?;
        Ok(best)
    }

    pub(super) fn start(&mut self, pref: f64, sol: &Assignment) {
        self.quality.clear();
        self.quality.push(pref.max(0.0));
        self.incumbent = f64::NEG_INFINITY;
        self.improve(sol, pref);
    }

    pub(super) fn finish(self, q: Ifcsp, sol: Assignment, pref: f64) -> SolveResult {
        let wall_time_ms = self.started.elapsed().as_secs_f64() * 1e3;
        let mut quality = self.quality;
        // The trace ends at the returned preference.
        if let Some(last) = quality.last_mut() {
            *last = pref;
        }
        let (ledger, transcript) = self.ask.into_parts();
        let stats = RunStats {
            elicited: ledger.elicited,
            effort: ledger.effort,
            examinations: ledger.examinations,
            queries: ledger.queries,
            missing_initial: self.missing_initial,
            wall_time_ms,
            max_pass_nodes: self.max_pass_nodes,
            total_nodes: self.total_nodes,
            passes: self.passes,
            quality_trace: quality_points(&quality),
        };
        if let Some(progress) = &self.progress {
            let mut g = progress.lock().unwrap();
            g.ledger = ledger.clone();
            g.best_pref = Some(pref);
            g.best_sol = Some(sol.clone());
            g.quality_trace = stats.quality_trace.clone();
        }
        SolveResult { q, sol, pref, stats, ledger, transcript, events: self.events.unwrap_or_default() }
    }
}

pub(super) fn quality_points(quality: &[f64]) -> Vec<QualityPoint> {
    quality.iter().enumerate().map(|(event, &lb)| QualityPoint { event, lb }).collect()
}

/// Elimination with elicitation from the incumbent `(sol, lb)`.
///
/// Returns the final incumbent and whether it beats the one passed in. With
/// `When=tree` every pass searches the current 1-completion to exhaustion,
/// elicits on its winner and starts over until a pass finds nothing better;
/// otherwise a single pass elicits at every complete assignment or node.
fn bbe(
    state: &mut SearchState<'_>,
    sol: Assignment,
    lb: f64,
) -> Result<(bool, Assignment, f64), SolveError> {
    if state.cfg.when != When::Tree {
        let mut bound = lb;
        return Ok(match state.pass(&mut bound)? {
            Some(best) => (true, best, bound),
            None => (false, sol, lb),
        });
    }
    let (mut inc_sol, mut inc_pref, mut improved) = (sol, lb, false);
    loop {
        let mut bound = inc_pref;
        let Some(found) = state.pass(&mut bound)? else { break };
        let pref = state.elicit_at_tree(&found)?;
        if pref > inc_pref {
            state.improve(&found, pref);
            inc_sol = found;
            inc_pref = pref;
            improved = true;
        }
    }
    Ok((improved, inc_sol, inc_pref))
}

/// Runs one instance of the scheme.
///
/// The 0-completion optimum `(s_max, pref_max)` seeds the lower bound. If
/// elimination improves on it, the elicited partial completion and its
/// necessarily optimal solution are returned; otherwise the 0-completion of
/// the input together with `s_max`.
pub fn ifcsp_scheme(
    problem: &Ifcsp,
    cfg: StrategyConfig,
    oracle: impl Oracle,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    cfg.check()?;
    let p0 = problem.completion(CompletionKind::Zero);
    let mut state = SearchState::new(problem, cfg, oracle, options);
    let (s_max, pref_max) = bb(&p0, f64::NEG_INFINITY)?.expect("any assignment beats -inf");
    state.start(pref_max, &s_max);
    let lb = if options.zero_initial_bound { 0.0 } else { pref_max };
    let (improved, sol, pref) = bbe(&mut state, s_max.clone(), lb)?;
    Ok(if improved && pref > pref_max {
        let q = state.p.clone();
        state.finish(q, sol, pref)
    } else {
        state.finish(p0, s_max, pref_max)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncompleteConstraint;
    use crate::model::PreferenceEntry::{Known, Unknown};
    use crate::oracle::{ScriptedOracle, SimulatedOracle};
    use crate::solver::{verify_nos, Strategy};

    fn two_var() -> Ifcsp {
        Ifcsp::new(
            2,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(1.0); 2]),
                IncompleteConstraint::unary(1, vec![Known(1.0); 2]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.2), Known(0.5), Known(0.9), Known(0.1)]),
            ],
        )
        .unwrap()
    }

    fn cfg(s: &str) -> StrategyConfig {
        s.parse().unwrap()
    }

    #[test]
    fn bb_single_variable() {
        let p = Ifcsp::new(1, 2, vec![IncompleteConstraint::unary(0, vec![Known(0.4), Known(0.9)])]).unwrap();
        assert_eq!(bb(&p, 0.0).unwrap(), Some((Assignment::total(vec![1]), 0.9)));
    }

    #[test]
    fn bb_two_variables_and_strict_bound() {
        let p = two_var();
        assert_eq!(bb(&p, 0.0).unwrap(), Some((Assignment::total(vec![1, 0]), 0.9)));
        assert_eq!(bb(&p, 0.9).unwrap(), None);
        let incomplete = Ifcsp::new(1, 1, vec![IncompleteConstraint::unary(0, vec![Unknown])]).unwrap();
        assert_eq!(bb(&incomplete, 0.0), Err(SolveError::Incomplete));
    }

    #[test]
    fn upper_bound_examples() {
        let p = Ifcsp::new(
            2,
            1,
            vec![
                IncompleteConstraint::unary(0, vec![Known(0.7)]),
                IncompleteConstraint::unary(1, vec![Known(1.0)]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.5)]),
            ],
        )
        .unwrap();
        let mut s = Assignment::empty(2);
        assert_eq!(upper_bound(&p, &s), 1.0);
        s.bind(0, 0);
        assert_eq!(upper_bound(&p, &s), 0.7);
        s.bind(1, 0);
        assert_eq!(upper_bound(&p, &s), 0.5);
    }

    #[test]
    fn variable_heuristic() {
        // Star around 0 with leaves 1..=3.
        let table = vec![Known(1.0); 4];
        let star = Ifcsp::new(
            4,
            2,
            (1..4).map(|y| IncompleteConstraint::binary(0, y, table.clone())).collect(),
        )
        .unwrap();
        let mut s = Assignment::empty(4);
        assert_eq!(next_variable(&star, &s), Some(0));
        s.bind(2, 0);
        assert_eq!(next_variable(&star, &s), Some(0));

        let chain = Ifcsp::new(
            3,
            2,
            vec![IncompleteConstraint::binary(0, 1, table.clone()), IncompleteConstraint::binary(1, 2, table)],
        )
        .unwrap();
        let mut s = Assignment::empty(3);
        s.bind(1, 0);
        assert_eq!(next_variable(&chain, &s), Some(0));
        s.bind(0, 0);
        s.bind(2, 0);
        assert_eq!(next_variable(&chain, &s), None);
    }

    #[test]
    fn value_orders() {
        let p = Ifcsp::new(1, 2, vec![IncompleteConstraint::unary(0, vec![Unknown, Known(0.6)])]).unwrap();
        let truth = Ifcsp::new(1, 2, vec![IncompleteConstraint::unary(0, vec![Known(0.2), Known(0.9)])]).unwrap();
        let s = Assignment::empty(1);
        let mut ask = Interviewer::new(SimulatedOracle::new(truth));
        assert_eq!(order_values(0, Who::Dp, &p, &s, &mut ask).unwrap(), vec![0, 1]);
        assert_eq!(order_values(0, Who::Dpi, &p, &s, &mut ask).unwrap(), vec![1, 0]);
        assert_eq!(ask.ledger().queries, 0);
        let lu = order_values(0, Who::Lu, &p, &s, &mut ask).unwrap();
        assert_eq!(lu[0], 1);
        assert_eq!(ask.ledger().queries, 1);
        assert_eq!(ask.ledger().effort, 1);
    }

    #[test]
    fn complete_problem_needs_no_elicitation() {
        let p = two_var();
        for c in StrategyConfig::all() {
            let r = ifcsp_scheme(&p, c, ScriptedOracle::default(), &SolveOptions::default()).unwrap();
            assert_eq!(r.pref, 0.9, "{c}");
            assert_eq!(r.stats.elicited, 0);
            assert_eq!(r.stats.queries, 0);
        }
    }

    /// The optimal tuple (1,0) is missing with truth 0.9.
    fn hidden_optimum() -> (Ifcsp, Ifcsp) {
        let visible = Ifcsp::new(
            2,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(1.0); 2]),
                IncompleteConstraint::unary(1, vec![Known(1.0); 2]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.2), Known(0.5), Unknown, Known(0.1)]),
            ],
        )
        .unwrap();
        (visible, two_var())
    }

    #[test]
    fn branch_elicits_the_single_missing_optimum() {
        let (visible, truth) = hidden_optimum();
        let r = ifcsp_scheme(&visible, cfg("DPI.ALL.BRANCH"), SimulatedOracle::new(truth), &SolveOptions::default())
            .unwrap();
        assert_eq!(r.stats.elicited, 1);
        assert_eq!(r.pref, 0.9);
        assert_eq!(r.sol, Assignment::total(vec![1, 0]));
        assert_eq!(r.q.entry(TupleRef::new(2, 2)), Known(0.9));
        assert!(verify_nos(&r.q, &r.sol, r.pref).unwrap());
    }

    #[test]
    fn node_elicitation_happens_before_the_bound() {
        let (visible, truth) = hidden_optimum();
        let r = ifcsp_scheme(
            &visible,
            cfg("DPI.ALL.NODE"),
            SimulatedOracle::new(truth),
            &SolveOptions { trace: true, ..Default::default() },
        )
        .unwrap();
        // Binding x1=0 under x0=1 touches the missing cell; the query follows the visit.
        let elicit = r.events.iter().position(|e| matches!(e, TraceEvent::Elicit { .. })).unwrap();
        assert!(matches!(r.events[elicit], TraceEvent::Elicit { tuples: 1, elicited: 1, .. }));
        assert_eq!(r.events[elicit - 1], TraceEvent::Visit { depth: 1, var: 1, value: 0 });
        assert_eq!(r.events[elicit - 2], TraceEvent::Visit { depth: 0, var: 0, value: 1 });
        assert_eq!(r.pref, 0.9);
        assert!(verify_nos(&r.q, &r.sol, r.pref).unwrap());
    }

    #[test]
    fn worst_at_branch_bounds_the_rest() {
        // Three missing cells on the leaf (1,0): hidden {0.3, 0.6} + known 0.5.
        let visible = Ifcsp::new(
            2,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(0.1), Unknown]),
                IncompleteConstraint::unary(1, vec![Known(0.5), Known(0.1)]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.1), Known(0.1), Unknown, Known(0.1)]),
            ],
        )
        .unwrap();
        let truth = Ifcsp::new(
            2,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(0.1), Known(0.3)]),
                IncompleteConstraint::unary(1, vec![Known(0.5), Known(0.1)]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.1), Known(0.1), Known(0.6), Known(0.1)]),
            ],
        )
        .unwrap();
        let r = ifcsp_scheme(&visible, cfg("DPI.WORST.BRANCH"), SimulatedOracle::new(truth.clone()), &SolveOptions::default())
            .unwrap();
        assert_eq!(r.pref, 0.3);
        assert_eq!(r.stats.elicited, 1);
        assert_eq!(r.stats.effort, 2);
        assert_eq!(r.q.entry(TupleRef::new(0, 1)), Known(0.3));
        assert_eq!(r.q.entry(TupleRef::new(2, 2)), PreferenceEntry::AtLeast(0.3));
        assert!(verify_nos(&r.q, &r.sol, r.pref).unwrap());

        // Same leaf with hidden {0.7, 0.9}: nothing is worse than the known 0.5.
        let truth_high = Ifcsp::new(
            2,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(0.1), Known(0.7)]),
                IncompleteConstraint::unary(1, vec![Known(0.5), Known(0.1)]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.1), Known(0.1), Known(0.9), Known(0.1)]),
            ],
        )
        .unwrap();
        let r = ifcsp_scheme(&visible, cfg("DPI.WORST.BRANCH"), SimulatedOracle::new(truth_high), &SolveOptions::default())
            .unwrap();
        assert_eq!(r.pref, 0.5);
        assert_eq!(r.stats.elicited, 0);
        assert_eq!(r.stats.effort, 2);
        assert!(verify_nos(&r.q, &r.sol, r.pref).unwrap());
    }

    #[test]
    fn tree_on_complete_problem_is_one_pass() {
        let r = ifcsp_scheme(&two_var(), cfg("DP.ALL.TREE"), ScriptedOracle::default(), &SolveOptions::default()).unwrap();
        assert_eq!(r.stats.passes, 1);
        assert_eq!(r.stats.queries, 0);
    }

    #[test]
    fn all_unknown_terminates_soundly() {
        let visible = Ifcsp::new(
            3,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Unknown; 2]),
                IncompleteConstraint::unary(1, vec![Unknown; 2]),
                IncompleteConstraint::unary(2, vec![Unknown; 2]),
                IncompleteConstraint::binary(0, 1, vec![Unknown; 4]),
                IncompleteConstraint::binary(1, 2, vec![Unknown; 4]),
            ],
        )
        .unwrap();
        let truth = Ifcsp::new(
            3,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(0.4), Known(0.8)]),
                IncompleteConstraint::unary(1, vec![Known(0.9), Known(0.3)]),
                IncompleteConstraint::unary(2, vec![Known(0.5), Known(0.6)]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.7), Known(0.2), Known(0.5), Known(1.0)]),
                IncompleteConstraint::binary(1, 2, vec![Known(0.1), Known(0.75), Known(0.65), Known(0.35)]),
            ],
        )
        .unwrap();
        for s in Strategy::all() {
            let r = crate::solver::solve_simulated(&visible, &truth, s, &SolveOptions::default()).unwrap();
            assert!(r.stats.elicited <= visible.num_incomplete(), "{s}");
            assert!(verify_nos(&r.q, &r.sol, r.pref).unwrap(), "{s}");
            assert!(r.q.is_partial_completion_of(&visible), "{s}");
        }
    }

    #[test]
    fn tree_elicits_only_on_one_completion_optima() {
        let (visible, truth) = hidden_optimum();
        let r = ifcsp_scheme(&visible, cfg("DP.ALL.TREE"), SimulatedOracle::new(truth), &SolveOptions::default()).unwrap();
        // (1,0) is the unique optimum of the 1-completion.
        assert_eq!(r.transcript.len(), 1);
        assert_eq!(r.transcript[0].query.examined(), &[TupleRef::new(2, 2)]);
    }

    #[test]
    fn hard_mode_infers_ones() {
        let visible = Ifcsp::new(
            2,
            2,
            vec![
                IncompleteConstraint::unary(0, vec![Known(0.0), Unknown]),
                IncompleteConstraint::unary(1, vec![Unknown, Known(0.0)]),
                IncompleteConstraint::binary(0, 1, vec![Known(0.0), Known(0.0), Unknown, Known(0.0)]),
            ],
        )
        .unwrap();
        let truth = visible.completion(CompletionKind::One);
        let options = SolveOptions { hard: true, ..Default::default() };
        let r = ifcsp_scheme(&visible, cfg("DPI.WORST.BRANCH"), SimulatedOracle::new(truth), &options).unwrap();
        assert_eq!(r.pref, 1.0);
        assert_eq!(r.stats.elicited, 0);
        assert_eq!(r.stats.effort, 3);
        assert!(r.q.is_complete());
        assert!(verify_nos(&r.q, &r.sol, r.pref).unwrap());
    }

    #[test]
    fn rejects_inconsistent_strategy() {
        let bad = StrategyConfig { who: Who::Su, what: What::Worst, when: When::Tree };
        assert!(matches!(
            ifcsp_scheme(&two_var(), bad, ScriptedOracle::default(), &SolveOptions::default()),
            Err(SolveError::InconsistentStrategy(_))
        ));
    }
}

//! The user side of elicitation.
//!
//! The solver talks to an [`Oracle`] through an [`Interviewer`], which checks
//! every query against the solver's current view, checks every answer against
//! its query, numbers the exchanges and keeps the [`EffortLedger`]. Oracles
//! therefore only have to produce answers:
//!
//! * [`SimulatedOracle`] answers from a hidden ground truth,
//! * [`ScriptedOracle`] replays canned answers,
//! * [`RemoteOracle`] waits for a human to answer through a [`Mailbox`].

use std::collections::{BTreeSet, VecDeque};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::model::{check_unit, Assignment, Ifcsp, TupleRef};

/// What the user looks at when suggesting a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestContext {
    /// Only the candidates' unary preferences.
    Lazy,
    /// Also the binary preferences linking each candidate to the variables
    /// bound so far.
    Smart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleQuery {
    /// Reveal every listed preference.
    RevealAll { tuples: Vec<TupleRef> },
    /// Reveal the worst listed preference if it is below `known_min`.
    RevealWorst { tuples: Vec<TupleRef>, known_min: f64 },
    /// Hard problems: is any listed preference 0?
    HasZero { tuples: Vec<TupleRef> },
    /// Pick the most promising candidate for `var`. `examined` lists the
    /// missing preferences the user has to consider to answer.
    SuggestValue {
        var: usize,
        candidates: Vec<usize>,
        context: SuggestContext,
        bound_vars: Assignment,
        examined: Vec<TupleRef>,
    },
}

impl OracleQuery {
    pub fn kind(&self) -> &'static str {
        match self {
            OracleQuery::RevealAll { .. } => "reveal_all",
            OracleQuery::RevealWorst { .. } => "reveal_worst",
            OracleQuery::HasZero { .. } => "has_zero",
            OracleQuery::SuggestValue { .. } => "suggest_value",
        }
    }

    /// The missing preferences a user must consider to answer.
    pub fn examined(&self) -> &[TupleRef] {
        match self {
            OracleQuery::RevealAll { tuples }
            | OracleQuery::RevealWorst { tuples, .. }
            | OracleQuery::HasZero { tuples } => tuples,
            OracleQuery::SuggestValue { examined, .. } => examined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevealedCell {
    #[serde(flatten)]
    pub tuple: TupleRef,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleAnswer {
    Revealed { values: Vec<RevealedCell> },
    Worst { tuple: TupleRef, value: f64 },
    NoneWorse,
    ZeroAt { tuple: TupleRef },
    NoZero,
    Suggested { value: usize },
}

impl OracleAnswer {
    /// Number of preference values this answer transfers.
    pub fn elicited(&self) -> usize {
        match self {
            OracleAnswer::Revealed { values } => values.len(),
            OracleAnswer::Worst { .. } | OracleAnswer::ZeroAt { .. } => 1,
            _ => 0,
        }
    }
}

/// A query with its session-unique id, as exchanged on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEnvelope {
    pub id: u64,
    #[serde(flatten)]
    pub query: OracleQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerEnvelope {
    pub id: u64,
    #[serde(flatten)]
    pub answer: OracleAnswer,
}

/// One answered query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub id: u64,
    pub query: OracleQuery,
    pub answer: OracleAnswer,
}

/// Elicitation counters of one session.
///
/// `effort` counts *distinct* missing preferences the user had to consider;
/// `examinations` counts them with repetition across queries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffortLedger {
    pub elicited: usize,
    pub effort: usize,
    pub examinations: usize,
    pub queries: usize,
    #[serde(skip)]
    seen: BTreeSet<TupleRef>,
}

impl EffortLedger {
    pub fn record(&mut self, query: &OracleQuery, answer: &OracleAnswer) {
        let examined = query.examined();
        self.queries += 1;
        self.examinations += examined.len();
        self.effort += examined.iter().filter(|t| self.seen.insert(**t)).count();
        self.elicited += answer.elicited();
    }
}

pub trait Oracle {
    fn answer(&mut self, id: u64, query: &OracleQuery) -> Result<OracleAnswer, OracleError>;
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn answer(&mut self, id: u64, query: &OracleQuery) -> Result<OracleAnswer, OracleError> {
        (**self).answer(id, query)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn answer(&mut self, id: u64, query: &OracleQuery) -> Result<OracleAnswer, OracleError> {
        (**self).answer(id, query)
    }
}

fn mismatch(query: &OracleQuery, answer: &OracleAnswer) -> OracleError {
    OracleError::Mismatch(format!("{} cannot answer {}", answer_kind(answer), query.kind()))
}

fn answer_kind(answer: &OracleAnswer) -> &'static str {
    match answer {
        OracleAnswer::Revealed { .. } => "revealed",
        OracleAnswer::Worst { .. } => "worst",
        OracleAnswer::NoneWorse => "none_worse",
        OracleAnswer::ZeroAt { .. } => "zero_at",
        OracleAnswer::NoZero => "no_zero",
        OracleAnswer::Suggested { .. } => "suggested",
    }
}

/// Checks that `answer` has the shape `query` asks for and that every value
/// is a preference.
pub fn validate_answer(query: &OracleQuery, answer: &OracleAnswer) -> Result<(), OracleError> {
    let range = |v: f64| check_unit(v).map_err(|_| OracleError::OutOfRange(v));
    let member = |tuples: &[TupleRef], t: &TupleRef| {
        if tuples.contains(t) {
            Ok(())
        } else {
            Err(OracleError::Mismatch(format!("tuple {t} was not asked about")))
        }
    };
    match (query, answer) {
        (OracleQuery::RevealAll { tuples }, OracleAnswer::Revealed { values }) => {
            let asked: BTreeSet<_> = tuples.iter().collect();
            let given: BTreeSet<_> = values.iter().map(|c| &c.tuple).collect();
            if given.len() != values.len() || asked != given {
                return Err(OracleError::Mismatch(
                    "revealed tuples must be exactly the queried ones".into(),
                ));
            }
            values.iter().try_for_each(|c| range(c.value))
        }
        (OracleQuery::RevealWorst { tuples, known_min }, OracleAnswer::Worst { tuple, value }) => {
            member(tuples, tuple)?;
            range(*value)?;
            if value > known_min {
                return Err(OracleError::Mismatch(format!(
                    "worst value {value} is above the known minimum {known_min}; answer none_worse"
                )));
            }
            Ok(())
        }
        (OracleQuery::RevealWorst { .. }, OracleAnswer::NoneWorse) => Ok(()),
        (OracleQuery::HasZero { tuples }, OracleAnswer::ZeroAt { tuple }) => member(tuples, tuple),
        (OracleQuery::HasZero { .. }, OracleAnswer::NoZero) => Ok(()),
        (OracleQuery::SuggestValue { candidates, .. }, OracleAnswer::Suggested { value }) => {
            if candidates.contains(value) {
                Ok(())
            } else {
                Err(OracleError::Mismatch(format!("{value} is not a candidate")))
            }
        }
        _ => Err(mismatch(query, answer)),
    }
}

/// The solver's side of an elicitation session.
pub struct Interviewer<'o> {
    oracle: Box<dyn Oracle + 'o>,
    ledger: EffortLedger,
    transcript: Vec<Exchange>,
    next_id: u64,
}

impl<'o> Interviewer<'o> {
    pub fn new(oracle: impl Oracle + 'o) -> Self {
        Interviewer { oracle: Box::new(oracle), ledger: EffortLedger::default(), transcript: Vec::new(), next_id: 1 }
    }

    /// Checks `query` against the solver's `view`, forwards it and accounts
    /// the answer.
    pub fn ask(&mut self, view: &Ifcsp, query: OracleQuery) -> Result<OracleAnswer, OracleError> {
        check_query(view, &query)?;
        let id = self.next_id;
        let answer = self.oracle.answer(id, &query)?;
        validate_answer(&query, &answer)?;
        self.next_id += 1;
        self.ledger.record(&query, &answer);
        self.transcript.push(Exchange { id, query, answer: answer.clone() });
        Ok(answer)
    }

    pub fn ledger(&self) -> &EffortLedger {
        &self.ledger
    }

    pub fn transcript(&self) -> &[Exchange] {
        &self.transcript
    }

    pub fn into_parts(self) -> (EffortLedger, Vec<Exchange>) {
        (self.ledger, self.transcript)
    }
}

fn check_query(view: &Ifcsp, query: &OracleQuery) -> Result<(), OracleError> {
    let missing = |t: &TupleRef| {
        if !view.contains(*t) {
            Err(OracleError::NoSuchTuple(*t))
        } else if view.entry(*t).is_known() {
            Err(OracleError::NotMissing(*t))
        } else {
            Ok(())
        }
    };
    match query {
        OracleQuery::RevealAll { tuples }
        | OracleQuery::RevealWorst { tuples, .. }
        | OracleQuery::HasZero { tuples } => {
            if tuples.is_empty() {
                return Err(OracleError::EmptyQuery);
            }
            tuples.iter().try_for_each(missing)
        }
        OracleQuery::SuggestValue { var, candidates, examined, .. } => {
            if *var >= view.num_vars() {
                return Err(OracleError::UnknownVariable(*var));
            }
            if candidates.is_empty() {
                return Err(OracleError::NoCandidates);
            }
            examined.iter().try_for_each(missing)
        }
    }
}

/// Answers truthfully from a complete ground-truth problem.
#[derive(Debug, Clone)]
pub struct SimulatedOracle {
    truth: Ifcsp,
}

impl SimulatedOracle {
    pub fn new(truth: Ifcsp) -> Self {
        debug_assert!(truth.is_complete());
        SimulatedOracle { truth }
    }

    fn value(&self, t: TupleRef) -> Result<f64, OracleError> {
        if !self.truth.contains(t) {
            return Err(OracleError::NoSuchTuple(t));
        }
        self.truth
            .entry(t)
            .known_value()
            .ok_or(OracleError::NotMissing(t))
    }

    fn score(&self, var: usize, value: usize, context: SuggestContext, bound: &Assignment) -> Result<f64, OracleError> {
        let mut score = self.value(self.truth.unary_cell(var, value))?;
        if context == SuggestContext::Smart {
            for link in self.truth.links(var) {
                if let Some(other) = bound.get(link.other) {
                    score = score.min(self.value(self.truth.link_cell(link, value, other))?);
                }
            }
        }
        Ok(score)
    }
}

impl Oracle for SimulatedOracle {
    fn answer(&mut self, _id: u64, query: &OracleQuery) -> Result<OracleAnswer, OracleError> {
        match query {
            OracleQuery::RevealAll { tuples } => Ok(OracleAnswer::Revealed {
                values: tuples
                    .iter()
                    .map(|&t| Ok(RevealedCell { tuple: t, value: self.value(t)? }))
                    .collect::<Result<_, OracleError>>()?,
            }),
            OracleQuery::RevealWorst { tuples, known_min } => {
                let mut worst: Option<(TupleRef, f64)> = None;
                for &t in tuples {
                    let v = self.value(t)?;
                    if worst.is_none_or(|(wt, wv)| v < wv || (v == wv && t < wt)) {
                        worst = Some((t, v));
                    }
                }
                match worst {
                    Some((tuple, value)) if value < *known_min => Ok(OracleAnswer::Worst { tuple, value }),
                    Some(_) => Ok(OracleAnswer::NoneWorse),
                    None => Err(OracleError::EmptyQuery),
                }
            }
            OracleQuery::HasZero { tuples } => {
                let mut zero = None;
                for &t in tuples {
                    if self.value(t)? == 0.0 && zero.is_none_or(|z| t < z) {
                        zero = Some(t);
                    }
                }
                Ok(zero.map_or(OracleAnswer::NoZero, |tuple| OracleAnswer::ZeroAt { tuple }))
            }
            OracleQuery::SuggestValue { var, candidates, context, bound_vars, .. } => {
                if *var >= self.truth.num_vars() {
                    return Err(OracleError::UnknownVariable(*var));
                }
                let mut best: Option<(usize, f64)> = None;
                for &value in candidates {
                    let score = self.score(*var, value, *context, bound_vars)?;
                    if best.is_none_or(|(bv, bs)| score > bs || (score == bs && value < bv)) {
                        best = Some((value, score));
                    }
                }
                best.map(|(value, _)| OracleAnswer::Suggested { value })
                    .ok_or(OracleError::NoCandidates)
            }
        }
    }
}

/// Replays a fixed sequence of answers.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    script: VecDeque<OracleAnswer>,
    replayed: usize,
}

impl ScriptedOracle {
    pub fn new(answers: impl IntoIterator<Item = OracleAnswer>) -> Self {
        ScriptedOracle { script: answers.into_iter().collect(), replayed: 0 }
    }

    pub fn from_transcript(transcript: &[Exchange]) -> Self {
        Self::new(transcript.iter().map(|e| e.answer.clone()))
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }
}

impl Oracle for ScriptedOracle {
    fn answer(&mut self, _id: u64, query: &OracleQuery) -> Result<OracleAnswer, OracleError> {
        let answer = self
            .script
            .front()
            .ok_or(OracleError::ScriptExhausted(self.replayed))?;
        validate_answer(query, answer)?;
        self.replayed += 1;
        Ok(self.script.pop_front().expect("checked above"))
    }
}

/// A query waiting for a human answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub id: u64,
    pub query: OracleQuery,
    #[serde(skip)]
    asked_at: Option<Instant>,
}

#[derive(Debug, Default)]
struct MailboxState {
    pending: Option<PendingQuery>,
    answer: Option<(u64, OracleAnswer)>,
    transcript: Vec<Exchange>,
    closed: bool,
}

/// Rendezvous between a blocked [`RemoteOracle`] and whoever answers for it.
///
/// At most one query is pending at a time. Answers are checked against the
/// pending query's id and shape before the solver sees them.
#[derive(Debug, Default)]
pub struct Mailbox {
    state: Mutex<MailboxState>,
    ready: Condvar,
}

impl Mailbox {
    pub fn new() -> Arc<Self> {
        Arc::new(Mailbox::default())
    }

    /// A mailbox whose transcript starts with already-answered exchanges.
    pub fn resumed(transcript: Vec<Exchange>) -> Arc<Self> {
        let mailbox = Mailbox::default();
        mailbox.state.lock().unwrap().transcript = transcript;
        Arc::new(mailbox)
    }

    pub fn pending(&self) -> Option<PendingQuery> {
        self.state.lock().unwrap().pending.clone()
    }

    pub fn submit(&self, id: u64, answer: OracleAnswer) -> Result<(), OracleError> {
        let mut state = self.state.lock().unwrap();
        if state.closed {
            return Err(OracleError::Closed);
        }
        let pending = match &state.pending {
            Some(p) if p.id == id => p,
            Some(p) => {
                return Err(OracleError::Mismatch(format!(
                    "query {id} is stale, the pending query is {}",
                    p.id
                )))
            }
            None => return Err(OracleError::Mismatch(format!("query {id} is not pending"))),
        };
        validate_answer(&pending.query, &answer)?;
        let pending = state.pending.take().expect("matched above");
        state.transcript.push(Exchange { id, query: pending.query, answer: answer.clone() });
        state.answer = Some((id, answer));
        self.ready.notify_all();
        Ok(())
    }

    pub fn close(&self) {
        let mut state = self.state.lock().unwrap();
        state.closed = true;
        state.pending = None;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().unwrap().closed
    }

    pub fn transcript(&self) -> Vec<Exchange> {
        self.state.lock().unwrap().transcript.clone()
    }

    /// Time since the pending query was published.
    pub fn pending_for(&self) -> Option<Duration> {
        self.state.lock().unwrap().pending.as_ref().and_then(|p| p.asked_at).map(|t| t.elapsed())
    }
}

/// Blocks the solver until an answer arrives through a [`Mailbox`].
#[derive(Debug, Clone)]
pub struct RemoteOracle {
    mailbox: Arc<Mailbox>,
    timeout: Duration,
    replay: VecDeque<OracleAnswer>,
}

impl RemoteOracle {
    pub fn new(mailbox: Arc<Mailbox>, timeout: Duration) -> Self {
        let replay = mailbox.transcript().into_iter().map(|e| e.answer).collect();
        RemoteOracle { mailbox, timeout, replay }
    }
}

impl Oracle for RemoteOracle {
    fn answer(&mut self, id: u64, query: &OracleQuery) -> Result<OracleAnswer, OracleError> {
        // Exchanges of a resumed session are replayed before asking anew.
        if let Some(answer) = self.replay.pop_front() {
            validate_answer(query, &answer)?;
            return Ok(answer);
        }
        let deadline = Instant::now() + self.timeout;
        let mut state = self.mailbox.state.lock().unwrap();
        if state.closed {
            return Err(OracleError::Closed);
        }
        state.answer = None;
        state.pending = Some(PendingQuery { id, query: query.clone(), asked_at: Some(Instant::now()) });
        loop {
            if state.closed {
                return Err(OracleError::Closed);
            }
            if let Some((got, _)) = &state.answer {
                if *got == id {
                    let (_, answer) = state.answer.take().expect("checked above");
                    return Ok(answer);
                }
            }
            let now = Instant::now();
            if now >= deadline {
                state.pending = None;
                return Err(OracleError::Timeout(self.timeout));
            }
            state = self.mailbox.ready.wait_timeout(state, deadline - now).unwrap().0;
        }
    }
}

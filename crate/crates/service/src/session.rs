use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use ifcsp::oracle::QueryEnvelope;
use ifcsp::solver::Progress;
use ifcsp::{
    solve, verify_nos, Exchange, GenParams, Ifcsp, Mailbox, OracleError, RemoteOracle, SolveError, SolveOptions,
    SolveResult, Strategy,
};
use serde::Serialize;

/// Where a session stands.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionState {
    /// The solver is computing; no query is pending.
    #[serde(rename = "working")]
    Solving,
    AwaitingAnswer { query: QueryEnvelope },
    Done { result: Box<SolveResult> },
    Aborted { reason: String },
}

impl SessionState {
    pub fn name(&self) -> &'static str {
        match self {
            SessionState::Solving => "working",
            SessionState::AwaitingAnswer { .. } => "awaiting_answer",
            SessionState::Done { .. } => "done",
            SessionState::Aborted { .. } => "aborted",
        }
    }

    pub fn is_final(&self) -> bool {
        matches!(self, SessionState::Done { .. } | SessionState::Aborted { .. })
    }
}

/// How the solver thread ended.
#[derive(Debug, Clone)]
enum Outcome {
    Done(Box<SolveResult>),
    Aborted(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionMeta {
    pub id: String,
    pub strategy: Strategy,
    pub hard: bool,
    /// Generator parameters, seed included, when the problem was generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen: Option<GenParams>,
    /// The ground truth stays on the server and is only used by the
    /// verification endpoint.
    pub truth_retained: bool,
    pub resumed_exchanges: usize,
}

pub struct Session {
    pub meta: SessionMeta,
    pub problem: Ifcsp,
    truth: Option<Ifcsp>,
    mailbox: Arc<Mailbox>,
    progress: Arc<Mutex<Progress>>,
    outcome: Arc<Mutex<Option<Outcome>>>,
    expires: Mutex<Instant>,
    ttl: Duration,
    /// Set when the reaper first found the session idle.
    expired_once: AtomicBool,
}

impl Session {
    pub fn state(&self) -> SessionState {
        if let Some(outcome) = self.outcome.lock().unwrap().clone() {
            return match outcome {
                Outcome::Done(result) => SessionState::Done { result },
                Outcome::Aborted(reason) => SessionState::Aborted { reason },
            };
        }
        match self.mailbox.pending() {
            Some(p) => SessionState::AwaitingAnswer { query: QueryEnvelope { id: p.id, query: p.query } },
            None => SessionState::Solving,
        }
    }

    pub fn progress(&self) -> Progress {
        self.progress.lock().unwrap().clone()
    }

    pub fn transcript(&self) -> Vec<Exchange> {
        self.mailbox.transcript()
    }

    pub fn submit(&self, id: u64, answer: ifcsp::OracleAnswer) -> Result<(), OracleError> {
        self.touch();
        self.mailbox.submit(id, answer)
    }

    /// Postpones expiry by one TTL.
    pub fn touch(&self) {
        *self.expires.lock().unwrap() = Instant::now() + self.ttl;
    }

    pub fn is_expired(&self, now: Instant) -> bool {
        now >= *self.expires.lock().unwrap()
    }

    /// Stops the solver; the transcript stays available for export.
    pub fn abort(&self, reason: &str) {
        let mut outcome = self.outcome.lock().unwrap();
        if outcome.is_none() {
            *outcome = Some(Outcome::Aborted(reason.to_owned()));
        }
        drop(outcome);
        self.mailbox.close();
    }

    /// Waits until the solver either publishes a query or finishes, at most
    /// `limit`.
    pub fn settle(&self, limit: Duration) -> SessionState {
        let deadline = Instant::now() + limit;
        loop {
            let state = self.state();
            if !matches!(state, SessionState::Solving) || Instant::now() >= deadline {
                return state;
            }
            thread::sleep(Duration::from_millis(1));
        }
    }

    /// Checks the finished result against the retained ground truth.
    pub fn verification(&self) -> Option<Verification> {
        let truth = self.truth.as_ref()?;
        let SessionState::Done { result } = self.state() else { return None };
        let nos = verify_nos(&result.q, &result.sol, result.pref).ok();
        let truth_pref = truth.pref_of(&result.sol).ok();
        let truth_optimum = ifcsp::brute_force_optimal(truth).ok().map(|(_, best)| best);
        Some(Verification { nos, truth_pref, truth_optimum })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    /// `None` when the instance is too large to enumerate.
    pub nos: Option<bool>,
    pub truth_pref: Option<f64>,
    pub truth_optimum: Option<f64>,
}

pub struct NewSession {
    pub problem: Ifcsp,
    pub truth: Option<Ifcsp>,
    pub strategy: Strategy,
    pub hard: bool,
    pub gen: Option<GenParams>,
    pub transcript: Vec<Exchange>,
}

#[derive(Clone)]
pub struct Registry {
    sessions: Arc<Mutex<HashMap<String, Arc<Session>>>>,
    pub ttl: Duration,
}

impl Registry {
    pub fn new(ttl: Duration) -> Self {
        Registry { sessions: Arc::default(), ttl }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a session and starts its solver thread.
    pub fn create(&self, new: NewSession) -> Arc<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let resumed_exchanges = new.transcript.len();
        let mailbox = if new.transcript.is_empty() { Mailbox::new() } else { Mailbox::resumed(new.transcript) };
        let session = Arc::new(Session {
            meta: SessionMeta {
                id: id.clone(),
                strategy: new.strategy,
                hard: new.hard,
                gen: new.gen,
                truth_retained: new.truth.is_some(),
                resumed_exchanges,
            },
            problem: new.problem,
            truth: new.truth,
            mailbox: mailbox.clone(),
            progress: Arc::default(),
            outcome: Arc::default(),
            expires: Mutex::new(Instant::now() + self.ttl),
            ttl: self.ttl,
            expired_once: AtomicBool::new(false),
        });
        let options = SolveOptions {
            hard: new.hard,
            seed: new.gen.map_or(0, |g| g.seed),
            progress: Some(session.progress.clone()),
            ..Default::default()
        };
        let (problem, strategy, outcome) = (session.problem.clone(), new.strategy, session.outcome.clone());
        // The solver blocks on its oracle, so it gets a thread of its own. The
        // reaper normally closes idle sessions; the timeout is a backstop.
        let ttl = self.ttl * 2;
        thread::spawn(move || {
            let result = solve(&problem, strategy, RemoteOracle::new(mailbox, ttl), &options);
            let mut slot = outcome.lock().unwrap();
            if slot.is_none() {
                *slot = Some(match result {
                    Ok(r) => Outcome::Done(Box::new(r)),
                    Err(SolveError::Oracle(OracleError::Closed)) => Outcome::Aborted("closed".into()),
                    Err(SolveError::Oracle(OracleError::Timeout(_))) => Outcome::Aborted("expired".into()),
                    Err(e) => Outcome::Aborted(e.to_string()),
                });
            }
        });
        self.sessions.lock().unwrap().insert(id, session.clone());
        session
    }

    /// Aborts sessions idle past their TTL and forgets them once they stay
    /// idle for another TTL, which leaves time to export the transcript.
    pub fn reap(&self, now: Instant) {
        let mut sessions = self.sessions.lock().unwrap();
        sessions.retain(|_, s| {
            if !s.is_expired(now) {
                return true;
            }
            if s.expired_once.swap(true, Ordering::SeqCst) {
                return false;
            }
            s.abort("expired");
            s.touch();
            true
        });
    }
}

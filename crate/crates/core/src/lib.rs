//! Fuzzy constraint satisfaction with missing preferences.
//!
//! A problem ([`Ifcsp`]) holds unary and binary constraints whose tables may
//! contain unknown cells. The solvers in [`solver`] interleave branch and
//! bound with queries to an [`Oracle`] and return a solution that is
//! necessarily optimal: optimal however the remaining unknowns turn out.
//!
//! ```
//! use ifcsp::{generate, solve_simulated, GenParams, SolveOptions, Strategy};
//!
//! let g = generate(&GenParams { n: 5, m: 3, seed: 7, ..Default::default() }).unwrap();
//! let strategy: Strategy = "DPI.WORST.BRANCH".parse().unwrap();
//! let r = solve_simulated(&g.visible, &g.truth, strategy, &SolveOptions::default()).unwrap();
//! assert!(ifcsp::verify_nos(&r.q, &r.sol, r.pref).unwrap());
//! ```

pub mod error;
pub mod generator;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod solver;

pub use error::{GenError, ModelError, OracleError, SolveError};
pub use generator::{generate, GenParams, GeneratedInstance, ProblemKind};
pub use model::{Assignment, CompletionKind, Ifcsp, IncompleteConstraint, PreferenceEntry, Scope, TupleRef};
pub use oracle::{
    EffortLedger, Exchange, Interviewer, Mailbox, Oracle, OracleAnswer, OracleQuery, RemoteOracle, ScriptedOracle,
    SimulatedOracle,
};
pub use solver::{
    bb, brute_force_optimal, ifcsp_scheme, solve, solve_simulated, verify_nos, RunStats, SolveOptions, SolveResult,
    Strategy, StrategyConfig, What, When, Who,
};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/strategies.md")]
    mod strategies {}
    #[doc = include_str!("../../../book/src/elicitation.md")]
    mod elicitation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

use thiserror::Error;

use crate::model::TupleRef;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("problem needs at least one variable and one domain value (n={n}, m={m})")]
    EmptyProblem { n: usize, m: usize },
    #[error("variable {0} does not exist")]
    UnknownVariable(usize),
    #[error("variable {0} appears twice in one scope")]
    RepeatedVariable(usize),
    #[error("more than one constraint over scope {0:?}")]
    DuplicateScope(Vec<usize>),
    #[error("scopes must hold one or two variables, found {0}")]
    BadScope(usize),
    #[error("constraint {constraint} has {found} cells, expected {expected}")]
    TableSize { constraint: usize, expected: usize, found: usize },
    #[error("preference {0} is outside [0,1]")]
    OutOfRange(f64),
    #[error("domain value {0} is out of range")]
    ValueOutOfDomain(usize),
    #[error("assignment does not bind every variable")]
    PartialAssignment,
    #[error("tuple {0} does not exist")]
    NoSuchTuple(TupleRef),
    #[error("tuple {0} is already known")]
    AlreadyKnown(TupleRef),
    #[error("value {value} for tuple {tuple} contradicts the established bound {floor}")]
    BelowBound { tuple: TupleRef, value: f64, floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("query asks about no tuples")]
    EmptyQuery,
    #[error("suggestion requested among no candidates")]
    NoCandidates,
    #[error("tuple {0} is not missing in the solver's view")]
    NotMissing(TupleRef),
    #[error("tuple {0} does not exist")]
    NoSuchTuple(TupleRef),
    #[error("variable {0} does not exist")]
    UnknownVariable(usize),
    #[error("answer does not fit the query: {0}")]
    Mismatch(String),
    #[error("preference {0} is outside [0,1]")]
    OutOfRange(f64),
    #[error("script exhausted after {0} answers")]
    ScriptExhausted(usize),
    #[error("no answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("session closed")]
    Closed,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("inconsistent strategy {0}: tree- and node-level elicitation require who=dp or who=dpi")]
    InconsistentStrategy(String),
    #[error("problem still has missing preferences")]
    Incomplete,
    #[error("{0} assignments exceed the enumeration guard of {1}")]
    TooLarge(u128, u128),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

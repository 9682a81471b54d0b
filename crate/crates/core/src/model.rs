//! Incomplete fuzzy constraint problems.
//!
//! A problem has `n` variables over the uniform domain `0..m`, one unary
//! constraint per variable and at most one binary constraint per pair of
//! variables. Every constraint carries a dense preference table; a missing
//! preference is a cell holding [`PreferenceEntry::Unknown`], never an absent
//! row.
//!
//! The preference of a total assignment is the minimum over the *known*
//! projected cells. When no projected cell is known the minimum over the empty
//! set is taken to be `1`, the top of the fuzzy scale.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// A cell of a preference table.
///
/// `AtLeast(v)` is still an incomplete tuple: its exact value was never
/// transferred, but a worst-preference answer established that it is not
/// below `v`. The 0-completion maps it to `v` instead of `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreferenceEntry {
    Known(f64),
    Unknown,
    AtLeast(f64),
}

impl PreferenceEntry {
    pub fn known(value: f64) -> Result<Self, ModelError> {
        check_unit(value)?;
        Ok(PreferenceEntry::Known(value))
    }

    pub fn is_known(&self) -> bool {
        matches!(self, PreferenceEntry::Known(_))
    }

    pub fn known_value(&self) -> Option<f64> {
        match *self {
            PreferenceEntry::Known(v) => Some(v),
            _ => None,
        }
    }

    /// Value in the 1-completion.
    #[inline]
    pub fn optimistic(&self) -> f64 {
        match *self {
            PreferenceEntry::Known(v) => v,
            _ => 1.0,
        }
    }

    /// Value in the 0-completion.
    #[inline]
    pub fn pessimistic(&self) -> f64 {
        match *self {
            PreferenceEntry::Known(v) => v,
            PreferenceEntry::Unknown => 0.0,
            PreferenceEntry::AtLeast(v) => v,
        }
    }
}

pub(crate) fn check_unit(value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::OutOfRange(value))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CellRepr {
    Number(f64),
    Marker(String),
    AtLeast { at_least: f64 },
}

impl Serialize for PreferenceEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            PreferenceEntry::Known(v) => CellRepr::Number(v),
            PreferenceEntry::Unknown => CellRepr::Marker("?".to_owned()),
            PreferenceEntry::AtLeast(v) => CellRepr::AtLeast { at_least: v },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PreferenceEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match CellRepr::deserialize(d)? {
            CellRepr::Number(v) => PreferenceEntry::known(v).map_err(D::Error::custom),
            CellRepr::Marker(m) if m == "?" => Ok(PreferenceEntry::Unknown),
            CellRepr::Marker(m) => Err(D::Error::custom(format!(
                "expected a number in [0,1] or \"?\", found {m:?}"
            ))),
            CellRepr::AtLeast { at_least } => {
                check_unit(at_least).map_err(D::Error::custom)?;
                Ok(PreferenceEntry::AtLeast(at_least))
            }
        }
    }
}

/// The variables a constraint ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Unary(usize),
    Binary(usize, usize),
}

impl Scope {
    pub fn vars(&self) -> Vec<usize> {
        match *self {
            Scope::Unary(x) => vec![x],
            Scope::Binary(x, y) => vec![x, y],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Scope::Unary(_) => 1,
            Scope::Binary(..) => 2,
        }
    }

    fn key(&self) -> (usize, usize) {
        match *self {
            Scope::Unary(x) => (x, x),
            Scope::Binary(x, y) => (x.min(y), x.max(y)),
        }
    }
}

/// A stable address of one preference cell: constraint index plus the
/// row-major index of the value tuple in that constraint's table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TupleRef {
    pub constraint: usize,
    pub cell: usize,
}

impl TupleRef {
    pub fn new(constraint: usize, cell: usize) -> Self {
        TupleRef { constraint, cell }
    }
}

impl fmt::Display for TupleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}[{}]", self.constraint, self.cell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteConstraint {
    pub scope: Scope,
    pub table: Vec<PreferenceEntry>,
}

impl IncompleteConstraint {
    pub fn unary(var: usize, table: Vec<PreferenceEntry>) -> Self {
        IncompleteConstraint { scope: Scope::Unary(var), table }
    }

    pub fn binary(x: usize, y: usize, table: Vec<PreferenceEntry>) -> Self {
        IncompleteConstraint { scope: Scope::Binary(x, y), table }
    }
}

/// A (possibly partial) assignment of domain values to variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<Option<usize>>);

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment(vec![None; n])
    }

    pub fn total(values: Vec<usize>) -> Self {
        Assignment(values.into_iter().map(Some).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(var).copied().flatten()
    }

    #[inline]
    pub fn bind(&mut self, var: usize, value: usize) {
        self.0[var] = Some(value);
    }

    #[inline]
    pub fn unbind(&mut self, var: usize) {
        self.0[var] = None;
    }

    pub fn is_bound(&self, var: usize) -> bool {
        self.get(var).is_some()
    }

    pub fn is_total(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn bound_count(&self) -> usize {
        self.0.iter().filter(|v| v.is_some()).count()
    }

    /// Values of a total assignment.
    pub fn values(&self) -> Option<Vec<usize>> {
        self.0.iter().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<usize>> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match v {
                Some(v) => write!(f, "{v}")?,
                None => f.write_str("_")?,
            }
        }
        f.write_str(")")
    }
}

/// Which value replaces the missing preferences in a completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionKind {
    Zero,
    One,
}

/// A binary constraint seen from one of its variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Link {
    pub other: usize,
    pub constraint: usize,
    /// Whether the owning variable is the first (row) variable of the scope.
    pub first: bool,
}

/// An incomplete fuzzy constraint problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Ifcsp {
    n: usize,
    m: usize,
    constraints: Vec<IncompleteConstraint>,
    unary: Vec<usize>,
    links: Vec<Vec<Link>>,
}

impl Ifcsp {
    /// Builds a problem, checking table shapes and scope uniqueness.
    ///
    /// Variables without a unary constraint get an implicit all-`1` table,
    /// appended after the given constraints.
    pub fn new(
        n: usize,
        m: usize,
        mut constraints: Vec<IncompleteConstraint>,
    ) -> Result<Self, ModelError> {
        if n == 0 || m == 0 {
            return Err(ModelError::EmptyProblem { n, m });
        }
        let mut seen = BTreeMap::new();
        let mut unary = vec![usize::MAX; n];
        let mut links = vec![Vec::new(); n];
        for (idx, c) in constraints.iter().enumerate() {
            match c.scope {
                Scope::Unary(x) => {
                    if x >= n {
                        return Err(ModelError::UnknownVariable(x));
                    }
                    unary[x] = idx;
                }
                Scope::Binary(x, y) => {
                    if x >= n {
                        return Err(ModelError::UnknownVariable(x));
                    }
                    if y >= n {
                        return Err(ModelError::UnknownVariable(y));
                    }
                    if x == y {
                        return Err(ModelError::RepeatedVariable(x));
                    }
                    links[x].push(Link { other: y, constraint: idx, first: true });
                    links[y].push(Link { other: x, constraint: idx, first: false });
                }
            }
            if seen.insert(c.scope.key(), idx).is_some() {
                return Err(ModelError::DuplicateScope(c.scope.vars()));
            }
            let expected = m.pow(c.scope.arity() as u32);
            if c.table.len() != expected {
                return Err(ModelError::TableSize {
                    constraint: idx,
                    expected,
                    found: c.table.len(),
                });
            }
            for entry in &c.table {
                match *entry {
                    PreferenceEntry::Known(v) | PreferenceEntry::AtLeast(v) => check_unit(v)?,
                    PreferenceEntry::Unknown => {}
                }
            }
        }
        for (x, slot) in unary.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = constraints.len();
                constraints.push(IncompleteConstraint::unary(
                    x,
                    vec![PreferenceEntry::Known(1.0); m],
                ));
            }
        }
        Ok(Ifcsp { n, m, constraints, unary, links })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn domain_size(&self) -> usize {
        self.m
    }

    pub fn constraints(&self) -> &[IncompleteConstraint] {
        &self.constraints
    }

    pub fn unary_constraint(&self, var: usize) -> usize {
        self.unary[var]
    }

    pub(crate) fn links(&self, var: usize) -> &[Link] {
        &self.links[var]
    }

    /// Index of the binary constraint between `x` and `y`, if any.
    pub fn binary_between(&self, x: usize, y: usize) -> Option<usize> {
        self.links[x].iter().find(|l| l.other == y).map(|l| l.constraint)
    }

    pub fn entry(&self, t: TupleRef) -> PreferenceEntry {
        self.constraints[t.constraint].table[t.cell]
    }

    pub fn contains(&self, t: TupleRef) -> bool {
        self.constraints
            .get(t.constraint)
            .is_some_and(|c| t.cell < c.table.len())
    }

    /// The cell of `var`'s unary constraint at `value`.
    #[inline]
    pub fn unary_cell(&self, var: usize, value: usize) -> TupleRef {
        TupleRef::new(self.unary[var], value)
    }

    #[inline]
    pub(crate) fn link_cell(&self, link: &Link, own: usize, other: usize) -> TupleRef {
        let cell = if link.first { own * self.m + other } else { other * self.m + own };
        TupleRef::new(link.constraint, cell)
    }

    /// The cell of the binary constraint between `x` and `y` at `(vx, vy)`.
    pub fn binary_cell(&self, x: usize, vx: usize, y: usize, vy: usize) -> Option<TupleRef> {
        self.links[x]
            .iter()
            .find(|l| l.other == y)
            .map(|l| self.link_cell(l, vx, vy))
    }

    /// The variable values a cell stands for, paired with their variables.
    pub fn tuple_values(&self, t: TupleRef) -> Vec<(usize, usize)> {
        match self.constraints[t.constraint].scope {
            Scope::Unary(x) => vec![(x, t.cell)],
            Scope::Binary(x, y) => vec![(x, t.cell / self.m), (y, t.cell % self.m)],
        }
    }

    /// All cells of constraints whose scope is fully bound by `s`, at the
    /// bound values.
    pub fn projected_tuples(&self, s: &Assignment) -> Vec<(TupleRef, PreferenceEntry)> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(idx, c)| {
                let cell = match c.scope {
                    Scope::Unary(x) => s.get(x)?,
                    Scope::Binary(x, y) => s.get(x)? * self.m + s.get(y)?,
                };
                Some((TupleRef::new(idx, cell), c.table[cell]))
            })
            .collect()
    }

    /// Preference of a total assignment: minimum over known projections,
    /// `1` when none is known.
    pub fn pref_of(&self, s: &Assignment) -> Result<f64, ModelError> {
        self.check_total(s)?;
        Ok(self
            .projected_tuples(s)
            .into_iter()
            .filter_map(|(_, e)| e.known_value())
            .fold(1.0, f64::min))
    }

    /// Preference of a total assignment in the given completion, without
    /// materialising the completion.
    pub fn pref_in(&self, kind: CompletionKind, s: &Assignment) -> Result<f64, ModelError> {
        self.check_total(s)?;
        Ok(self
            .projected_tuples(s)
            .into_iter()
            .map(|(_, e)| match kind {
                CompletionKind::Zero => e.pessimistic(),
                CompletionKind::One => e.optimistic(),
            })
            .fold(1.0, f64::min))
    }

    fn check_total(&self, s: &Assignment) -> Result<(), ModelError> {
        if s.len() != self.n || !s.is_total() {
            return Err(ModelError::PartialAssignment);
        }
        if let Some(v) = s.iter().flatten().find(|&v| v >= self.m) {
            return Err(ModelError::ValueOutOfDomain(v));
        }
        Ok(())
    }

    pub fn completion(&self, kind: CompletionKind) -> Ifcsp {
        let mut out = self.clone();
        for c in &mut out.constraints {
            for e in &mut c.table {
                *e = PreferenceEntry::Known(match kind {
                    CompletionKind::Zero => e.pessimistic(),
                    CompletionKind::One => e.optimistic(),
                });
            }
        }
        out
    }

    /// The incomplete tuples, in `TupleRef` order.
    pub fn incomplete_tuples(&self) -> Vec<TupleRef> {
        self.cells()
            .filter(|&(_, e)| !e.is_known())
            .map(|(t, _)| t)
            .collect()
    }

    pub fn num_incomplete(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| c.table.iter().filter(|e| !e.is_known()).count())
            .sum()
    }

    pub fn is_complete(&self) -> bool {
        self.constraints
            .iter()
            .all(|c| c.table.iter().all(PreferenceEntry::is_known))
    }

    pub fn num_cells(&self) -> usize {
        self.constraints.iter().map(|c| c.table.len()).sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = (TupleRef, PreferenceEntry)> + '_ {
        self.constraints.iter().enumerate().flat_map(|(ci, c)| {
            c.table
                .iter()
                .enumerate()
                .map(move |(cell, e)| (TupleRef::new(ci, cell), *e))
        })
    }

    /// Returns a partial completion equal to `self` except that `t` is known
    /// to be `value`.
    pub fn reveal(&self, t: TupleRef, value: f64) -> Result<Ifcsp, ModelError> {
        let mut out = self.clone();
        out.reveal_in_place(t, value)?;
        Ok(out)
    }

    /// In-place form of [`Ifcsp::reveal`].
    pub fn reveal_in_place(&mut self, t: TupleRef, value: f64) -> Result<(), ModelError> {
        check_unit(value)?;
        if !self.contains(t) {
            return Err(ModelError::NoSuchTuple(t));
        }
        let slot = &mut self.constraints[t.constraint].table[t.cell];
        match *slot {
            PreferenceEntry::Known(_) => Err(ModelError::AlreadyKnown(t)),
            PreferenceEntry::AtLeast(floor) if value < floor => {
                Err(ModelError::BelowBound { tuple: t, value, floor })
            }
            _ => {
                *slot = PreferenceEntry::Known(value);
                Ok(())
            }
        }
    }

    /// Records that an incomplete tuple is not below `floor`. Known cells and
    /// higher existing bounds are left alone.
    pub fn raise_floor(&mut self, t: TupleRef, floor: f64) -> Result<(), ModelError> {
        check_unit(floor)?;
        if !self.contains(t) {
            return Err(ModelError::NoSuchTuple(t));
        }
        let slot = &mut self.constraints[t.constraint].table[t.cell];
        match *slot {
            PreferenceEntry::Known(_) => {}
            PreferenceEntry::AtLeast(f) if f >= floor => {}
            _ if floor == 0.0 => {}
            _ => *slot = PreferenceEntry::AtLeast(floor),
        }
        Ok(())
    }

    /// Whether `self` can be obtained from `original` by filling in (or
    /// bounding) some of its missing preferences.
    pub fn is_partial_completion_of(&self, original: &Ifcsp) -> bool {
        if self.n != original.n
            || self.m != original.m
            || self.constraints.len() != original.constraints.len()
        {
            return false;
        }
        self.constraints
            .iter()
            .zip(&original.constraints)
            .all(|(a, b)| {
                a.scope == b.scope
                    && a.table.len() == b.table.len()
                    && a.table.iter().zip(&b.table).all(|(x, y)| match (*x, *y) {
                        (_, PreferenceEntry::Known(v)) => *x == PreferenceEntry::Known(v),
                        (PreferenceEntry::Known(v), PreferenceEntry::AtLeast(f)) => v >= f,
                        (PreferenceEntry::AtLeast(v), PreferenceEntry::AtLeast(f)) => v >= f,
                        (PreferenceEntry::Unknown, PreferenceEntry::AtLeast(_)) => false,
                        (_, PreferenceEntry::Unknown) => true,
                    })
            })
    }
}

#[derive(Serialize, Deserialize)]
struct ConstraintRepr {
    scope: Vec<usize>,
    table: Vec<PreferenceEntry>,
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    n: usize,
    m: usize,
    constraints: Vec<ConstraintRepr>,
}

impl Serialize for Ifcsp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ProblemRepr {
            n: self.n,
            m: self.m,
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintRepr { scope: c.scope.vars(), table: c.table.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ifcsp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ProblemRepr::deserialize(d)?;
        let constraints = repr
            .constraints
            .into_iter()
            .map(|c| {
                let scope = match c.scope[..] {
                    [x] => Scope::Unary(x),
                    [x, y] => Scope::Binary(x, y),
                    _ => return Err(ModelError::BadScope(c.scope.len())),
                };
                Ok(IncompleteConstraint { scope, table: c.table })
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Ifcsp::new(repr.n, repr.m, constraints).map_err(D::Error::custom)
    }
}

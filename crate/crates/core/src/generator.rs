//! Random instances with a hidden ground truth.
//!
//! Every instance is a pure function of its [`GenParams`]. Draws come from a
//! ChaCha8 stream seeded with `seed` and are consumed in a fixed order:
//!
//! 1. the binary scopes, as a sample without replacement over the pairs
//!    `(x, y)`, `x < y`, in lexicographic order;
//! 2. the unary tables of variables `0..n`, then the binary tables in scope
//!    order. Per table: the preference values, then the zeroed cells, then
//!    the masked cells.
//!
//! Percentages become counts with round-half-up: `(pct * size + 50) / 100`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GenError;
use crate::model::{Ifcsp, IncompleteConstraint, PreferenceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Fuzzy,
    Hard,
    Temporal,
}

impl std::str::FromStr for ProblemKind {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fuzzy" => Ok(ProblemKind::Fuzzy),
            "hard" => Ok(ProblemKind::Hard),
            "temporal" => Ok(ProblemKind::Temporal),
            other => Err(GenError::InvalidParams(format!("unknown problem kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    /// Density: percentage of the `n(n-1)/2` binary constraints present.
    pub d: u32,
    /// Tightness: percentage of zero cells per table. Ignored by temporal
    /// instances, whose zeros come from the difference intervals.
    pub t: u32,
    /// Incompleteness: percentage of masked cells per table.
    pub i: u32,
    pub seed: u64,
    pub kind: ProblemKind,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { n: 10, m: 5, d: 50, t: 10, i: 30, seed: 0, kind: ProblemKind::Fuzzy }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n == 0 || self.m == 0 {
            return Err(GenError::InvalidParams(format!(
                "n and m must be positive (n={}, m={})",
                self.n, self.m
            )));
        }
        for (name, v) in [("d", self.d), ("t", self.t), ("i", self.i)] {
            if v > 100 {
                return Err(GenError::InvalidParams(format!("{name}={v} is not a percentage")));
            }
        }
        Ok(())
    }
}

/// Round-half-up share of `size`.
pub fn percent_count(pct: u32, size: usize) -> usize {
    (pct as usize * size + 50) / 100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub params: GenParams,
    /// What the solver sees.
    pub visible: Ifcsp,
    /// The hidden ground truth; same structure, every cell known.
    pub truth: Ifcsp,
}

/// Generates an instance of `params.kind`.
pub fn generate(params: &GenParams) -> Result<GeneratedInstance, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scopes = binary_scopes(params, &mut rng);
    let mut truth = Vec::with_capacity(params.n + scopes.len());
    let mut visible = Vec::with_capacity(params.n + scopes.len());

    let mut push = |c: IncompleteConstraint, rng: &mut ChaCha8Rng| {
        let masked = mask(&c.table, params.i, rng);
        visible.push(IncompleteConstraint { scope: c.scope, table: masked });
        truth.push(c);
    };

    for x in 0..params.n {
        let table = match params.kind {
            ProblemKind::Temporal => vec![1.0; params.m],
            kind => random_table(params.m, params.t, kind, &mut rng),
        };
        push(IncompleteConstraint::unary(x, known(table)), &mut rng);
    }
    for (x, y) in scopes {
        let size = params.m * params.m;
        let table = match params.kind {
            ProblemKind::Temporal => temporal_table(params.m, &mut rng),
            kind => random_table(size, params.t, kind, &mut rng),
        };
        push(IncompleteConstraint::binary(x, y, known(table)), &mut rng);
    }

    let build = |cs| Ifcsp::new(params.n, params.m, cs).expect("generated tables are well formed");
    Ok(GeneratedInstance { params: *params, visible: build(visible), truth: build(truth) })
}

/// Generates a fuzzy simple temporal instance regardless of `params.kind`.
pub fn generate_temporal(params: &GenParams) -> Result<GeneratedInstance, GenError> {
    generate(&GenParams { kind: ProblemKind::Temporal, ..*params })
}

fn binary_scopes(params: &GenParams, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let pairs: Vec<(usize, usize)> = (0..params.n)
        .flat_map(|x| (x + 1..params.n).map(move |y| (x, y)))
        .collect();
    let count = percent_count(params.d, pairs.len());
    let mut picked = sample(rng, pairs.len(), count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| pairs[k]).collect()
}

fn random_table(size: usize, tightness: u32, kind: ProblemKind, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut table: Vec<f64> = match kind {
        // 1 - U[0,1) lies in (0,1].
        ProblemKind::Fuzzy => (0..size).map(|_| 1.0 - rng.random::<f64>()).collect(),
        _ => vec![1.0; size],
    };
    for k in sample(rng, size, percent_count(tightness, size)) {
        table[k] = 0.0;
    }
    table
}

/// A difference constraint `a <= x - y <= b` with a triangular preference
/// profile over `x - y` peaking at an integer inside the interval.
fn temporal_table(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let span = m as i64 - 1;
    let p = rng.random_range(-span..=span);
    let q = rng.random_range(-span..=span);
    let (a, b) = (p.min(q), p.max(q));
    let peak = rng.random_range(a..=b);
    let height = 1.0 - rng.random::<f64>();
    (0..m * m)
        .map(|cell| {
            let delta = (cell / m) as i64 - (cell % m) as i64;
            difference_preference(delta, a, b, peak, height)
        })
        .collect()
}

/// Preference of the difference `delta` under the interval `[a, b]` with a
/// triangular profile of the given peak position and height. Zero outside
/// the interval, strictly positive inside.
pub fn difference_preference(delta: i64, a: i64, b: i64, peak: i64, height: f64) -> f64 {
    if delta < a || delta > b {
        0.0
    } else if delta <= peak {
        height * (delta - a + 1) as f64 / (peak - a + 1) as f64
    } else {
        height * (b - delta + 1) as f64 / (b - peak + 1) as f64
    }
}

fn known(table: Vec<f64>) -> Vec<PreferenceEntry> {
    table.into_iter().map(PreferenceEntry::Known).collect()
}

fn mask(table: &[PreferenceEntry], incompleteness: u32, rng: &mut ChaCha8Rng) -> Vec<PreferenceEntry> {
    let mut out = table.to_vec();
    for k in sample(rng, table.len(), percent_count(incompleteness, table.len())) {
        out[k] = PreferenceEntry::Unknown;
    }
    out
}

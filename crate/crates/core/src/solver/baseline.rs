use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolveError;
use crate::model::{CompletionKind, Ifcsp};
use crate::oracle::{Oracle, OracleAnswer, OracleQuery};

use super::search::{bb, SearchState};
use super::{SolveOptions, SolveResult, StrategyConfig, What, When, Who};

/// Random elicitation: solve both completions, stop once their optima agree,
/// otherwise reveal `options.baseline_k` missing tuples drawn uniformly at
/// random (seeded by `options.seed`) and try again.
pub fn baseline_random_tree(
    problem: &Ifcsp,
    oracle: impl Oracle,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let k = options.baseline_k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let cfg = StrategyConfig { who: Who::Dpi, what: What::All, when: When::Tree };
    let mut state = SearchState::new(problem, cfg, oracle, options);

    let (mut sol, mut pref) = bb(&state.p.completion(CompletionKind::Zero), f64::NEG_INFINITY)?
        .expect("any assignment beats -inf");
    state.start(pref, &sol);
    loop {
        state.begin_pass(pref);
        // The 1-completion optimum is never below the 0-completion one.
        if bb(&state.p.completion(CompletionKind::One), pref)?.is_none() {
            break;
        }
        let missing = state.p.incomplete_tuples();
        let picked = index::sample(&mut rng, missing.len(), k.min(missing.len()));
        let mut tuples: Vec<_> = picked.into_iter().map(|i| missing[i]).collect();
        tuples.sort_unstable();
        if let OracleAnswer::Revealed { values } = state.query(OracleQuery::RevealAll { tuples })? {
            for c in values {
                state.p.reveal_in_place(c.tuple, c.value)?;
            }
        }
        if let Some((s, p)) = bb(&state.p.completion(CompletionKind::Zero), pref)? {
            sol = s;
            pref = p;
            state.improve(&sol, pref);
        }
    }
    let q = state.p.clone();
    Ok(state.finish(q, sol, pref))
}

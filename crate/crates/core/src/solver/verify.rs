use crate::error::SolveError;
use crate::model::{Assignment, CompletionKind, Ifcsp};

/// Largest search space [`brute_force_optimal`] agrees to enumerate.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

const EPS: f64 = 1e-12;

/// All optimal assignments of `p` (under [`Ifcsp::pref_of`]) in
/// lexicographic order, with the optimal preference. Refuses problems with
/// more than [`ENUMERATION_GUARD`] assignments.
pub fn brute_force_optimal(p: &Ifcsp) -> Result<(Vec<Assignment>, f64), SolveError> {
    let size = (p.domain_size() as u128).checked_pow(p.num_vars() as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_GUARD {
        return Err(SolveError::TooLarge(size, ENUMERATION_GUARD));
    }
    Ok(brute_force_optimal_unguarded(p))
}

#[doc(hidden)]
pub fn brute_force_optimal_unguarded(p: &Ifcsp) -> (Vec<Assignment>, f64) {
    let (n, m) = (p.num_vars(), p.domain_size());
    let mut values = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    let mut optima = Vec::new();
    loop {
        let s = Assignment::total(values.clone());
        let pref = p.pref_of(&s).expect("total assignment");
        if pref > best + EPS {
            best = pref;
            optima.clear();
        }
        if (pref - best).abs() <= EPS {
            optima.push(s);
        }
        // Odometer with the last variable fastest.
        let mut i = n;
        loop {
            if i == 0 {
                return (optima, best);
            }
            i -= 1;
            values[i] += 1;
            if values[i] < m {
                break;
            }
            values[i] = 0;
        }
    }
}

/// Whether `sol` with preference `pref` is necessarily optimal in `q`: its
/// preference in the 0-completion equals `pref`, which is also the optimum
/// of both the 0- and the 1-completion.
pub fn verify_nos(q: &Ifcsp, sol: &Assignment, pref: f64) -> Result<bool, SolveError> {
    let q0 = q.completion(CompletionKind::Zero);
    let q1 = q.completion(CompletionKind::One);
    let (_, opt0) = brute_force_optimal(&q0)?;
    let (_, opt1) = brute_force_optimal(&q1)?;
    let own = q0.pref_of(sol)?;
    let same = |a: f64, b: f64| (a - b).abs() <= EPS;
    Ok(same(own, pref) && same(opt0, pref) && same(opt1, pref))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IncompleteConstraint;
    use crate::model::PreferenceEntry::{AtLeast, Known, Unknown};

    #[test]
    fn enumerates_ties_in_order() {
        let p = Ifcsp::new(
            2,
            2,
            vec![IncompleteConstraint::binary(0, 1, vec![Known(0.5), Known(0.2), Known(0.5), Known(0.1)])],
        )
        .unwrap();
        let (optima, best) = brute_force_optimal(&p).unwrap();
        assert_eq!(best, 0.5);
        assert_eq!(optima, vec![Assignment::total(vec![0, 0]), Assignment::total(vec![1, 0])]);
    }

    #[test]
    fn guard() {
        let p = Ifcsp::new(21, 2, vec![]).unwrap();
        assert!(matches!(brute_force_optimal(&p), Err(SolveError::TooLarge(2_097_152, ENUMERATION_GUARD))));
        let (optima, best) = brute_force_optimal_unguarded(&Ifcsp::new(3, 2, vec![]).unwrap());
        assert_eq!((optima.len(), best), (8, 1.0));
    }

    #[test]
    fn nos_checks() {
        let single = |e| {
            Ifcsp::new(
                2,
                1,
                vec![IncompleteConstraint::unary(0, vec![Known(0.6)]), IncompleteConstraint::unary(1, vec![e])],
            )
            .unwrap()
        };
        let only = Assignment::total(vec![0, 0]);
        assert!(!verify_nos(&single(Unknown), &only, 0.6).unwrap());
        assert!(!verify_nos(&single(AtLeast(0.5)), &only, 0.6).unwrap());
        assert!(verify_nos(&single(AtLeast(0.6)), &only, 0.6).unwrap());
        let a = Assignment::total(vec![0]);
        let open = Ifcsp::new(1, 2, vec![IncompleteConstraint::unary(0, vec![Known(0.6), AtLeast(0.6)])]).unwrap();
        assert!(!verify_nos(&open, &a, 0.6).unwrap());
        let closed = Ifcsp::new(1, 2, vec![IncompleteConstraint::unary(0, vec![Known(0.6), Known(0.3)])]).unwrap();
        assert!(verify_nos(&closed, &a, 0.6).unwrap());
        assert!(!verify_nos(&closed, &a, 0.3).unwrap());
        // A zero optimum must also be zero in the 1-completion.
        let zero = Ifcsp::new(1, 2, vec![IncompleteConstraint::unary(0, vec![Known(0.0), Unknown])]).unwrap();
        assert!(!verify_nos(&zero, &a, 0.0).unwrap());
    }
}

//! Bounded unfoldings of one-counter machines into weighted automata, and the
//! polynomial bounds that make them sufficient for equivalence.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::automaton::{Alphabet, Configuration, Dwroca, Guard, StateId, SymbolId};
use crate::dwa::{Dwa, WaConfig, WeightedView};
use crate::field::{FieldElement, FieldSpec};

/// Largest number of states [`unfold`] materialises by default.
pub const DEFAULT_STATE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnfoldError {
    #[error("unfolding needs {required} states, above the cap of {cap}")]
    BoundTooLarge { required: BigUint, cap: u64 },
}

/// Counter bound `M` of an unfolding. Arbitrary precision: bounds that do not
/// fit in 64 bits can never be reached by an explicit run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnfoldBound(BigUint);

impl UnfoldBound {
    pub fn new(m: BigUint) -> Self {
        UnfoldBound(m)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn as_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn admits(&self, counter: u64) -> bool {
        self.as_u64().map_or(true, |m| counter <= m)
    }
}

impl From<u64> for UnfoldBound {
    fn from(m: u64) -> Self {
        UnfoldBound(m.into())
    }
}

impl fmt::Display for UnfoldBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// On-demand view of `A^M`: states are pairs `(q, n)` with `n <= M`, row zero
/// follows the zero map and every other row the positive map. Transitions
/// that would leave the strip are dropped.
#[derive(Debug, Clone)]
pub struct Unfolding<'a> {
    automaton: &'a Dwroca,
    limit: Option<u64>,
    start: Configuration,
}

impl<'a> Unfolding<'a> {
    pub fn new(automaton: &'a Dwroca, bound: UnfoldBound) -> Self {
        Self::from_configuration(automaton, automaton.initial_configuration(), bound)
    }

    pub fn from_configuration(automaton: &'a Dwroca, start: Configuration, bound: UnfoldBound) -> Self {
        Unfolding {
            automaton,
            limit: bound.as_u64(),
            start,
        }
    }

    fn admits(&self, counter: u64) -> bool {
        self.limit.map_or(true, |m| counter <= m)
    }
}

impl WeightedView for Unfolding<'_> {
    type State = (StateId, u64);

    fn alphabet(&self) -> &Alphabet {
        self.automaton.alphabet()
    }

    fn field(&self) -> FieldSpec {
        self.automaton.field()
    }

    fn start(&self) -> Option<((StateId, u64), FieldElement)> {
        self.admits(self.start.counter)
            .then(|| ((self.start.state, self.start.counter), self.start.weight.clone()))
    }

    fn next(&self, &(state, counter): &(StateId, u64), symbol: SymbolId) -> Option<((StateId, u64), FieldElement)> {
        let t = self.automaton.transition(Guard::of(counter), state, symbol)?;
        let next = counter.checked_add_signed(i64::from(t.effect))?;
        self.admits(next).then(|| ((t.target, next), t.weight.clone()))
    }

    fn final_weight(&self, &(state, _): &(StateId, u64)) -> FieldElement {
        self.automaton.final_weight(state).clone()
    }

    fn row(&self, &(_, counter): &(StateId, u64)) -> u64 {
        counter
    }
}

/// Materialises `A^M` with `|Q| * (M + 1)` states named `q#n`. State
/// `(q, n)` gets index `n * |Q| + q`.
pub fn unfold(a: &Dwroca, bound: &UnfoldBound, cap: u64) -> Result<Dwa, UnfoldError> {
    let required = BigUint::from(a.size()) * (bound.value() + BigUint::one());
    let too_large = || UnfoldError::BoundTooLarge {
        required: required.clone(),
        cap,
    };
    if required > BigUint::from(cap) {
        return Err(too_large());
    }
    let m = bound.as_u64().ok_or_else(too_large)?;
    let width = a.size();
    let index = |q: StateId, n: u64| n as usize * width + q;
    let names = (0..=m)
        .flat_map(|n| a.states().iter().map(move |q| format!("{q}#{n}")))
        .collect();
    let mut b = Dwa::new(a.field(), names, a.alphabet().clone());
    let view = Unfolding::new(a, bound.clone());
    for n in 0..=m {
        for q in 0..width {
            for symbol in 0..a.alphabet().len() {
                if let Some(((to, n2), w)) = view.next(&(q, n), symbol) {
                    b.set_transition(index(q, n), symbol, index(to, n2), w)
                        .expect("unfolded transitions are unique and non-zero");
                }
            }
            b.set_final(index(q, n), a.final_weight(q).clone()).expect("same field");
        }
    }
    let start = a.initial_configuration();
    let b = if start.counter <= m {
        b.initialised(WaConfig::new(index(start.state, start.counter), start.weight))
            .expect("initial weight is non-zero")
    } else {
        b
    };
    Ok(b)
}

/// Polynomials `P1(K) = c1 * K^e1` and `P2(K) = c2 * K^e2` from which the
/// other bounds are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundPolynomials {
    pub p1_coefficient: u64,
    pub p1_exponent: u32,
    pub p2_coefficient: u64,
    pub p2_exponent: u32,
}

impl Default for BoundPolynomials {
    fn default() -> Self {
        BoundPolynomials {
            p1_coefficient: 14,
            p1_exponent: 6,
            p2_coefficient: 6,
            p2_exponent: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub k: u64,
    pub p1: BigUint,
    pub p2: BigUint,
    pub p3: BigUint,
    pub p0: BigUint,
}

/// Bounds for a pair of machines with `size1` and `size2` states.
pub fn compute_bounds(size1: usize, size2: usize) -> BoundReport {
    compute_bounds_with(&BoundPolynomials::default(), size1, size2)
}

/// `P3 = P1 + 2((K^2 P2)^2 + 1)` and `P0 = 2 (K P3)^2` with `K = size1 + size2`.
pub fn compute_bounds_with(polys: &BoundPolynomials, size1: usize, size2: usize) -> BoundReport {
    let k = (size1 + size2) as u64;
    let kb = BigUint::from(k);
    let p1 = BigUint::from(polys.p1_coefficient) * kb.pow(polys.p1_exponent);
    let p2 = BigUint::from(polys.p2_coefficient) * kb.pow(polys.p2_exponent);
    let inner = &kb * &kb * &p2;
    let p3 = &p1 + 2u32 * (&inner * &inner + 1u32);
    let kp3 = &kb * &p3;
    let p0 = 2u32 * &kp3 * &kp3;
    BoundReport { k, p1, p2, p3, p0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::tests::{doubling, updown};
    use crate::dwa::bounded_equiv;

    fn q(n: i64) -> FieldElement {
        FieldElement::from_i64(FieldSpec::Rational, n)
    }

    #[test]
    fn doubling_unfolded_once() {
        let b = unfold(&doubling(), &1u64.into(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(b.size(), 2);
        assert_eq!(b.states(), ["q0#0", "q0#1"]);
        assert_eq!(b.transition(0, 0), Some(&(1, q(2))));
        assert_eq!(b.transition(1, 0), None);
        assert_eq!(b.weight(&[0]).unwrap(), q(2));
        assert_eq!(b.weight(&[0, 0]).unwrap(), q(0));
    }

    #[test]
    fn unfolding_matches_bounded_runs() {
        let a = updown();
        for m in 0..5u64 {
            let b = unfold(&a, &m.into(), DEFAULT_STATE_CAP).unwrap();
            assert_eq!(b.size() as u64, a.size() as u64 * (m + 1));
            let view = Unfolding::new(&a, m.into());
            assert!(bounded_equiv(&view, &b, 8).unwrap());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = unfold(&doubling(), &10u64.into(), 5).unwrap_err();
        assert_eq!(
            err,
            UnfoldError::BoundTooLarge {
                required: 11u32.into(),
                cap: 5
            }
        );
        let huge = UnfoldBound::new(BigUint::from(u64::MAX) * 4u32);
        assert!(unfold(&doubling(), &huge, DEFAULT_STATE_CAP).is_err());
        assert!(huge.admits(u64::MAX));
    }

    #[test]
    fn bounds_for_two_states() {
        let r = compute_bounds(1, 1);
        assert_eq!(r.k, 2);
        assert_eq!(r.p1, 896u32.into());
        assert_eq!(r.p2, 96u32.into());
        assert_eq!(r.p3, 295_810u32.into());
        assert_eq!(r.p0, 700_028_448_800u64.into());
    }

    #[test]
    fn bounds_are_monotone() {
        let mut prev = compute_bounds(1, 1);
        for k in 3..20 {
            let r = compute_bounds(k - 1, 1);
            assert!(r.p0 > prev.p0 && r.p3 > prev.p3);
            prev = r;
        }
    }
}

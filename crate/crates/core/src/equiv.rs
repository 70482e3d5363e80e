//! Equivalence of two one-counter machines by reduction to weighted automata.
//!
//! Both machines are unfolded up to a counter bound `M` (by default the
//! polynomial `P0(K)`, beyond which no minimal witness can reach), lazily, and
//! the unfoldings are compared with the basis worklist of [`crate::dwa`].

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::automaton::{Configuration, Dwroca, Guard, ModelError, RunOutcome, StateId, Violation};
use crate::dwa::{explore, DwaError, ExploreOptions, ExploreStats, Termination, Witness};
use crate::field::FieldElement;
use crate::unfold::{compute_bounds_with, BoundPolynomials, UnfoldBound, Unfolding};

/// Default ceiling on words taken off the worklist.
pub const DEFAULT_BUDGET: usize = 250_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("automaton {index} is invalid: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidAutomaton { index: usize, violations: Vec<Violation> },
    #[error("the automata have different alphabets")]
    AlphabetMismatch,
    #[error("the automata are over different fields")]
    FieldMismatch,
    #[error("resource budget exceeded after exploring {explored} words")]
    ResourceBudgetExceeded { explored: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<DwaError> for EquivError {
    fn from(e: DwaError) -> Self {
        match e {
            DwaError::AlphabetMismatch => EquivError::AlphabetMismatch,
            DwaError::FieldMismatch => EquivError::FieldMismatch,
            DwaError::BudgetExceeded { explored } => EquivError::ResourceBudgetExceeded { explored },
            other => unreachable!("unexpected error from the worklist: {other}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Equivalent,
    NotEquivalent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Mode {
    /// The bound is at least `P0(K)`: an equivalent verdict is a proof.
    Theoretical,
    /// A user bound below `P0(K)`: an equivalent verdict only means no
    /// witness of length at most `M` exists.
    BoundedBy(BigUint),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Theoretical => f.write_str("theoretical"),
            Mode::BoundedBy(m) => write!(f, "bounded by {m}"),
        }
    }
}

/// What the verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Evidence {
    /// A distinguishing word.
    Witness,
    /// The worklist saturated: every further word is in the span.
    Saturation,
    /// All words up to the bound were covered.
    LengthBound,
    /// Both machines move in lockstep with a fixed weight ratio per state pair.
    Lockstep,
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Evidence::Witness => "witness",
            Evidence::Saturation => "saturation",
            Evidence::LengthBound => "length-bound",
            Evidence::Lockstep => "lockstep",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceVerdict {
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub mode: Mode,
    pub evidence: Evidence,
    /// The counter bound `M` that was used.
    pub bound: BigUint,
    pub stats: ExploreStats,
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        self.outcome == Outcome::Equivalent
    }
}

#[derive(Debug, Clone)]
pub struct EquivOptions {
    pub bound_override: Option<BigUint>,
    pub budget: usize,
    pub polynomials: BoundPolynomials,
}

impl Default for EquivOptions {
    fn default() -> Self {
        EquivOptions {
            bound_override: None,
            budget: DEFAULT_BUDGET,
            polynomials: BoundPolynomials::default(),
        }
    }
}

impl EquivOptions {
    pub fn bounded(m: u64) -> Self {
        EquivOptions {
            bound_override: Some(m.into()),
            ..EquivOptions::default()
        }
    }
}

fn check_pair(a1: &Dwroca, a2: &Dwroca) -> Result<(), EquivError> {
    for (index, a) in [(1, a1), (2, a2)] {
        let violations = a.validate();
        if !violations.is_empty() {
            return Err(EquivError::InvalidAutomaton { index, violations });
        }
    }
    if a1.alphabet().symbols() != a2.alphabet().symbols() {
        return Err(EquivError::AlphabetMismatch);
    }
    if a1.field() != a2.field() {
        return Err(EquivError::FieldMismatch);
    }
    Ok(())
}

/// Decides whether `a1` and `a2` assign the same weight to every word,
/// returning a shortest (then lexicographically least) witness otherwise.
pub fn check_equivalence(a1: &Dwroca, a2: &Dwroca, options: &EquivOptions) -> Result<EquivalenceVerdict, EquivError> {
    check_pair(a1, a2)?;
    let p0 = compute_bounds_with(&options.polynomials, a1.size(), a2.size()).p0;
    let (bound, mode) = match &options.bound_override {
        Some(m) if *m < p0 => (m.clone(), Mode::BoundedBy(m.clone())),
        Some(m) => (m.clone(), Mode::Theoretical),
        None => (p0, Mode::Theoretical),
    };

    if mode == Mode::Theoretical {
        if let Some(pairs) = lockstep_certificate(a1, a2) {
            return Ok(EquivalenceVerdict {
                outcome: Outcome::Equivalent,
                witness: None,
                mode,
                evidence: Evidence::Lockstep,
                bound,
                stats: ExploreStats {
                    explored: pairs,
                    ..ExploreStats::default()
                },
            });
        }
    }

    let left = Unfolding::new(a1, UnfoldBound::new(bound.clone()));
    let right = Unfolding::new(a2, UnfoldBound::new(bound.clone()));
    let run = explore(
        &left,
        &right,
        &ExploreOptions {
            max_depth: bound.to_u64(),
            budget: Some(options.budget),
            prune: true,
        },
    )?;
    let (outcome, evidence) = match run.termination {
        Termination::Witness => (Outcome::NotEquivalent, Evidence::Witness),
        Termination::Saturated => (Outcome::Equivalent, Evidence::Saturation),
        Termination::DepthLimit => (Outcome::Equivalent, Evidence::LengthBound),
    };
    Ok(EquivalenceVerdict {
        outcome,
        witness: run.witness,
        mode,
        evidence,
        bound,
        stats: run.stats,
    })
}

/// Sufficient condition for equivalence: from the initial pair, the two
/// machines take transitions with equal counter effects on every symbol
/// (so their counters agree), both or neither side is defined, and each
/// reachable state pair has one fixed weight ratio under which the final
/// weights agree. Returns the number of abstract pairs visited on success.
pub fn lockstep_certificate(a1: &Dwroca, a2: &Dwroca) -> Option<usize> {
    type Node = (StateId, StateId, Guard);
    let ratio0 = a1.initial_weight().checked_div(a2.initial_weight()).ok()?;
    let start: Node = (a1.initial_state(), a2.initial_state(), Guard::Zero);
    let mut ratios: HashMap<Node, FieldElement> = HashMap::from([(start, ratio0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(node @ (p, q, guard)) = queue.pop_front() {
        let r = ratios[&node].clone();
        if &r * a1.final_weight(p) != *a2.final_weight(q) {
            return None;
        }
        for symbol in 0..a1.alphabet().len() {
            let (t1, t2) = match (a1.transition(guard, p, symbol), a2.transition(guard, q, symbol)) {
                (None, None) => continue,
                (Some(t1), Some(t2)) if t1.effect == t2.effect => (t1, t2),
                _ => return None,
            };
            let child_ratio = (&r * &t1.weight).checked_div(&t2.weight).ok()?;
            let guards: &[Guard] = match (guard, t1.effect) {
                (Guard::Zero, 0) => &[Guard::Zero],
                (Guard::Positive, -1) => &[Guard::Zero, Guard::Positive],
                _ => &[Guard::Positive],
            };
            for &g in guards {
                let child = (t1.target, t2.target, g);
                match ratios.get(&child) {
                    Some(existing) if *existing != child_ratio => return None,
                    Some(_) => {}
                    None => {
                        ratios.insert(child, child_ratio.clone());
                        queue.push_back(child);
                    }
                }
            }
        }
    }
    Some(ratios.len())
}

/// Both acceptance weights of a word (undefined runs weigh zero) and both runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub f1: FieldElement,
    pub f2: FieldElement,
    pub left: RunOutcome,
    pub right: RunOutcome,
}

pub fn replay_witness(a1: &Dwroca, a2: &Dwroca, word: &[usize]) -> Result<Replay, EquivError> {
    Ok(Replay {
        f1: a1.weight_or_zero(word)?,
        f2: a2.weight_or_zero(word)?,
        left: a1.run_word(&a1.initial_configuration(), word)?,
        right: a2.run_word(&a2.initial_configuration(), word)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigurationPair {
    pub left: Configuration,
    pub right: Configuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Both,
}

/// Where a synchronised run got stuck: the symbol at `position` has no
/// transition on `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stuck {
    pub position: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncTrace {
    pub pairs: Vec<ConfigurationPair>,
    pub stuck: Option<Stuck>,
}

/// The pairwise trace of both machines on `word`, cut at the first position
/// where either side has no transition.
pub fn synchronized_run(a1: &Dwroca, a2: &Dwroca, word: &[usize]) -> Result<SyncTrace, EquivError> {
    a1.alphabet().check_word(word)?;
    a2.alphabet().check_word(word)?;
    let mut current = ConfigurationPair {
        left: a1.initial_configuration(),
        right: a2.initial_configuration(),
    };
    let mut pairs = vec![current.clone()];
    for (position, &symbol) in word.iter().enumerate() {
        let next = (a1.step(&current.left, symbol)?, a2.step(&current.right, symbol)?);
        let side = match next {
            (Some(left), Some(right)) => {
                current = ConfigurationPair { left, right };
                pairs.push(current.clone());
                continue;
            }
            (None, None) => Side::Both,
            (None, Some(_)) => Side::Left,
            (Some(_), None) => Side::Right,
        };
        return Ok(SyncTrace {
            pairs,
            stuck: Some(Stuck { position, side }),
        });
    }
    Ok(SyncTrace { pairs, stuck: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::tests::doubling;
    use crate::automaton::{Alphabet, DwrocaBuilder};
    use crate::field::FieldSpec;

    fn q(n: i64) -> FieldElement {
        FieldElement::from_i64(FieldSpec::Rational, n)
    }

    fn tripling() -> Dwroca {
        DwrocaBuilder::new(FieldSpec::Rational, ["q0"], Alphabet::new(["a"]).unwrap())
            .unwrap()
            .edge(Guard::Zero, "q0", "a", "q0", 1, q(3))
            .unwrap()
            .edge(Guard::Positive, "q0", "a", "q0", 1, q(3))
            .unwrap()
            .final_weight(0, q(1))
            .build()
    }

    /// Doubling spread over two states: the zero-test step moves to a
    /// second state that carries the loop.
    fn split_doubling() -> Dwroca {
        DwrocaBuilder::new(FieldSpec::Rational, ["p0", "p1"], Alphabet::new(["a"]).unwrap())
            .unwrap()
            .edge(Guard::Zero, "p0", "a", "p1", 1, q(4))
            .unwrap()
            .edge(Guard::Positive, "p1", "a", "p1", 1, q(2))
            .unwrap()
            .final_weight(0, q(1))
            .final_weight(1, FieldElement::ratio(1, 2).unwrap())
            .build()
    }

    #[test]
    fn self_equivalence() {
        let v = check_equivalence(&doubling(), &doubling(), &EquivOptions::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Equivalent);
        assert_eq!(v.mode, Mode::Theoretical);
        assert_eq!(v.bound, 700_028_448_800u64.into());
    }

    #[test]
    fn different_loop_weights() {
        let v = check_equivalence(&doubling(), &tripling(), &EquivOptions::default()).unwrap();
        assert_eq!(v.outcome, Outcome::NotEquivalent);
        assert_eq!(v.witness, Some(Witness { word: vec![0], left: q(2), right: q(3) }));
        assert_eq!(v.evidence, Evidence::Witness);
        assert!(v.stats.max_row <= 1);
    }

    #[test]
    fn split_weights_are_equivalent() {
        let (e1, e2) = (doubling(), split_doubling());
        for n in 0..=10 {
            let w = vec![0; n];
            assert_eq!(e1.weight_or_zero(&w).unwrap(), e2.weight_or_zero(&w).unwrap());
        }
        let v = check_equivalence(&e1, &e2, &EquivOptions::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Equivalent);
        assert_eq!(v.evidence, Evidence::Lockstep);

        let v = check_equivalence(&e1, &e2, &EquivOptions::bounded(10)).unwrap();
        assert_eq!(v.outcome, Outcome::Equivalent);
        assert_eq!(v.mode, Mode::BoundedBy(10u32.into()));
    }

    #[test]
    fn growing_counters_exhaust_the_budget_without_a_certificate() {
        // Same weights, but one side never leaves a state it cannot match in lockstep.
        let other = DwrocaBuilder::new(FieldSpec::Rational, ["r"], Alphabet::new(["a"]).unwrap())
            .unwrap()
            .edge(Guard::Zero, "r", "a", "r", 0, q(2))
            .unwrap()
            .final_weight(0, q(1))
            .build();
        let options = EquivOptions {
            budget: 50,
            ..EquivOptions::default()
        };
        let err = check_equivalence(&doubling(), &other, &options).unwrap_err();
        assert_eq!(err, EquivError::ResourceBudgetExceeded { explored: 50 });
        let v = check_equivalence(&doubling(), &other, &EquivOptions::bounded(30)).unwrap();
        assert_eq!((v.outcome, v.evidence), (Outcome::Equivalent, Evidence::LengthBound));
    }

    #[test]
    fn replay_examples() {
        let r = replay_witness(&doubling(), &tripling(), &[0, 0]).unwrap();
        assert_eq!((r.f1, r.f2), (q(4), q(9)));
        let r = replay_witness(&doubling(), &doubling(), &[]).unwrap();
        assert_eq!((r.f1, r.f2), (q(1), q(1)));
    }

    #[test]
    fn synchronized_run_examples() {
        let t = synchronized_run(&doubling(), &tripling(), &[]).unwrap();
        assert_eq!(t.pairs.len(), 1);
        let t = synchronized_run(&doubling(), &tripling(), &[0]).unwrap();
        assert_eq!(
            t.pairs,
            vec![
                ConfigurationPair {
                    left: Configuration::new(0, 0, q(1)),
                    right: Configuration::new(0, 0, q(1)),
                },
                ConfigurationPair {
                    left: Configuration::new(0, 1, q(2)),
                    right: Configuration::new(0, 1, q(3)),
                },
            ]
        );
        assert!(t.stuck.is_none());

        let t = synchronized_run(&split_doubling(), &doubling(), &[0, 0, 0]).unwrap();
        assert!(t.stuck.is_none());
        let stuck_left = DwrocaBuilder::new(FieldSpec::Rational, ["s"], Alphabet::new(["a"]).unwrap())
            .unwrap()
            .edge(Guard::Zero, "s", "a", "s", 1, q(1))
            .unwrap()
            .build();
        let t = synchronized_run(&stuck_left, &doubling(), &[0, 0, 0]).unwrap();
        assert_eq!(t.pairs.len(), 2);
        assert_eq!(t.stuck, Some(Stuck { position: 1, side: Side::Left }));
    }

    #[test]
    fn mismatches_are_reported() {
        let b = DwrocaBuilder::new(FieldSpec::Rational, ["q0"], Alphabet::new(["b"]).unwrap())
            .unwrap()
            .build();
        assert_eq!(
            check_equivalence(&doubling(), &b, &EquivOptions::default()),
            Err(EquivError::AlphabetMismatch)
        );
        let gf = FieldSpec::prime(7).unwrap();
        let c = DwrocaBuilder::new(gf, ["q0"], Alphabet::new(["a"]).unwrap()).unwrap().build();
        assert_eq!(
            check_equivalence(&doubling(), &c, &EquivOptions::default()),
            Err(EquivError::FieldMismatch)
        );
    }
}

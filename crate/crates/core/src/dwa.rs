//! Deterministic weighted automata and their equivalence.
//!
//! Equivalence uses a breadth-first worklist over words. Every word `w`
//! carries a difference vector: the forward configuration of the left
//! machine minus that of the right one, over the disjoint union of both state
//! spaces. Its dot product with the final-weight vector is `f1(w) - f2(w)`.
//! Words whose vector lies in the span of earlier kept vectors are not
//! extended. Since words are processed in length-lexicographic order, the
//! first witness found is a shortest one, and the lexicographically smallest
//! among those.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use thiserror::Error;

use crate::automaton::{Alphabet, Configuration, Dwroca, Guard, StateId, SymbolId, Word};
use crate::basis::{Basis, SparseVector};
use crate::field::{FieldElement, FieldSpec};
use crate::unfold::Unfolding;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DwaError {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("the automata have different alphabets")]
    AlphabetMismatch,
    #[error("the automata are over different fields")]
    FieldMismatch,
    #[error("the automaton has no initial configuration")]
    Uninitialised,
    #[error("zero weight at {0}")]
    ZeroWeight(String),
    #[error("more than one transition at ({state}, {symbol})")]
    DuplicateTransition { state: String, symbol: String },
    #[error("exploration budget exhausted after {explored} words")]
    BudgetExceeded { explored: usize },
}

/// A configuration of a weighted automaton: a state and a non-zero weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WaConfig {
    pub state: StateId,
    pub weight: FieldElement,
}

impl WaConfig {
    pub fn new(state: StateId, weight: FieldElement) -> Self {
        WaConfig { state, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dwa {
    field: FieldSpec,
    states: Vec<String>,
    alphabet: Alphabet,
    transitions: Vec<Option<(StateId, FieldElement)>>,
    final_weights: Vec<FieldElement>,
    initial: Option<WaConfig>,
}

impl Dwa {
    /// An uninitialised automaton with no transitions and zero final weights.
    pub fn new(field: FieldSpec, states: Vec<String>, alphabet: Alphabet) -> Self {
        Dwa {
            field,
            transitions: vec![None; states.len() * alphabet.len()],
            final_weights: vec![field.zero(); states.len()],
            states,
            alphabet,
            initial: None,
        }
    }

    pub fn set_transition(
        &mut self,
        from: StateId,
        symbol: SymbolId,
        to: StateId,
        weight: FieldElement,
    ) -> Result<(), DwaError> {
        if from >= self.states.len() || to >= self.states.len() {
            return Err(DwaError::UnknownState(format!("#{}", from.max(to))));
        }
        if symbol >= self.alphabet.len() {
            return Err(DwaError::UnknownSymbol(format!("#{symbol}")));
        }
        let location = || (self.states[from].clone(), self.alphabet.symbol(symbol).to_string());
        if weight.is_zero() {
            let (s, a) = location();
            return Err(DwaError::ZeroWeight(format!("({s},{a})")));
        }
        if weight.spec() != self.field {
            return Err(DwaError::FieldMismatch);
        }
        let cell = from * self.alphabet.len() + symbol;
        if self.transitions[cell].is_some() {
            let (state, symbol) = location();
            return Err(DwaError::DuplicateTransition { state, symbol });
        }
        self.transitions[cell] = Some((to, weight));
        Ok(())
    }

    pub fn set_final(&mut self, state: StateId, weight: FieldElement) -> Result<(), DwaError> {
        if weight.spec() != self.field {
            return Err(DwaError::FieldMismatch);
        }
        self.final_weights[state] = weight;
        Ok(())
    }

    /// A copy of this automaton initialised at `start`.
    pub fn initialised(&self, start: WaConfig) -> Result<Dwa, DwaError> {
        if start.state >= self.states.len() {
            return Err(DwaError::UnknownState(format!("#{}", start.state)));
        }
        if start.weight.is_zero() {
            return Err(DwaError::ZeroWeight("initial".into()));
        }
        if start.weight.spec() != self.field {
            return Err(DwaError::FieldMismatch);
        }
        Ok(Dwa {
            initial: Some(start),
            ..self.clone()
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial(&self) -> Option<&WaConfig> {
        self.initial.as_ref()
    }

    pub fn final_weight(&self, state: StateId) -> &FieldElement {
        &self.final_weights[state]
    }

    pub fn transition(&self, state: StateId, symbol: SymbolId) -> Option<&(StateId, FieldElement)> {
        self.transitions[state * self.alphabet.len() + symbol].as_ref()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (StateId, SymbolId, &(StateId, FieldElement))> {
        let width = self.alphabet.len();
        self.transitions
            .iter()
            .enumerate()
            .filter_map(move |(cell, t)| t.as_ref().map(|t| (cell / width, cell % width, t)))
    }

    /// Acceptance weight of `word` from `start`; a missing transition gives zero.
    pub fn accept_weight(&self, start: &WaConfig, word: &[SymbolId]) -> Result<FieldElement, DwaError> {
        if let Some(s) = word.iter().find(|&&s| s >= self.alphabet.len()) {
            return Err(DwaError::UnknownSymbol(format!("#{s}")));
        }
        let mut state = start.state;
        let mut weight = start.weight.clone();
        for &symbol in word {
            match self.transition(state, symbol) {
                Some((next, w)) => {
                    state = *next;
                    weight = &weight * w;
                }
                None => return Ok(self.field.zero()),
            }
        }
        Ok(&weight * &self.final_weights[state])
    }

    /// Acceptance weight from the initial configuration.
    pub fn weight(&self, word: &[SymbolId]) -> Result<FieldElement, DwaError> {
        let start = self.initial.as_ref().ok_or(DwaError::Uninitialised)?;
        self.accept_weight(start, word)
    }

    /// View of this automaton started at `start` instead of its own initial
    /// configuration.
    pub fn from_config(&self, start: WaConfig) -> Started<'_> {
        Started { dwa: self, start }
    }
}

/// A weighted automaton as seen by the equivalence worklist: states may be
/// generated on demand.
pub trait WeightedView {
    type State: Clone + Eq + Hash;

    fn alphabet(&self) -> &Alphabet;
    fn field(&self) -> FieldSpec;
    fn start(&self) -> Option<(Self::State, FieldElement)>;
    fn next(&self, state: &Self::State, symbol: SymbolId) -> Option<(Self::State, FieldElement)>;
    fn final_weight(&self, state: &Self::State) -> FieldElement;

    /// Number of states, when finite and known up front.
    fn dimension(&self) -> Option<usize> {
        None
    }

    /// Counter row of a state, for unfolded one-counter machines.
    fn row(&self, _state: &Self::State) -> u64 {
        0
    }
}

impl WeightedView for Dwa {
    type State = StateId;

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn field(&self) -> FieldSpec {
        self.field
    }

    fn start(&self) -> Option<(StateId, FieldElement)> {
        self.initial.as_ref().map(|c| (c.state, c.weight.clone()))
    }

    fn next(&self, state: &StateId, symbol: SymbolId) -> Option<(StateId, FieldElement)> {
        self.transition(*state, symbol).cloned()
    }

    fn final_weight(&self, state: &StateId) -> FieldElement {
        self.final_weights[*state].clone()
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.states.len())
    }
}

/// A [`Dwa`] read from an explicit start configuration.
#[derive(Debug, Clone)]
pub struct Started<'a> {
    dwa: &'a Dwa,
    start: WaConfig,
}

impl WeightedView for Started<'_> {
    type State = StateId;

    fn alphabet(&self) -> &Alphabet {
        &self.dwa.alphabet
    }

    fn field(&self) -> FieldSpec {
        self.dwa.field
    }

    fn start(&self) -> Option<(StateId, FieldElement)> {
        Some((self.start.state, self.start.weight.clone()))
    }

    fn next(&self, state: &StateId, symbol: SymbolId) -> Option<(StateId, FieldElement)> {
        self.dwa.next(state, symbol)
    }

    fn final_weight(&self, state: &StateId) -> FieldElement {
        self.dwa.final_weight(*state).clone()
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dwa.size())
    }
}

/// The automaton whose every weight is zero.
#[derive(Debug, Clone)]
pub struct Null<'a> {
    alphabet: &'a Alphabet,
    field: FieldSpec,
}

impl<'a> Null<'a> {
    pub fn new(alphabet: &'a Alphabet, field: FieldSpec) -> Self {
        Null { alphabet, field }
    }
}

impl WeightedView for Null<'_> {
    type State = ();

    fn alphabet(&self) -> &Alphabet {
        self.alphabet
    }

    fn field(&self) -> FieldSpec {
        self.field
    }

    fn start(&self) -> Option<((), FieldElement)> {
        None
    }

    fn next(&self, _: &(), _: SymbolId) -> Option<((), FieldElement)> {
        None
    }

    fn final_weight(&self, _: &()) -> FieldElement {
        self.field.zero()
    }

    fn dimension(&self) -> Option<usize> {
        Some(0)
    }
}

/// A word on which two machines disagree, with both acceptance weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub word: Word,
    pub left: FieldElement,
    pub right: FieldElement,
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    /// Words of this length are checked but not extended.
    pub max_depth: Option<u64>,
    /// Maximum number of words taken off the worklist.
    pub budget: Option<usize>,
    /// Skip extending words whose vector is in the span of kept vectors.
    pub prune: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_depth: None,
            budget: None,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ExploreStats {
    /// Words taken off the worklist.
    pub explored: usize,
    /// Linearly independent difference vectors kept.
    pub basis_size: usize,
    /// Largest counter row seen on either side.
    pub max_row: u64,
    /// Length of the longest word examined.
    pub max_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Witness found.
    Witness,
    /// Worklist emptied: every extension was in the span.
    Saturated,
    /// Worklist emptied, but some words were cut off at the depth limit.
    DepthLimit,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub witness: Option<Witness>,
    pub termination: Termination,
    pub stats: ExploreStats,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Coord<L, R> {
    Left(L),
    Right(R),
}

struct Node<L, R> {
    parent: Option<usize>,
    symbol: SymbolId,
    depth: u64,
    left: Option<(L, FieldElement)>,
    right: Option<(R, FieldElement)>,
}

fn check_compatible<L: WeightedView, R: WeightedView>(left: &L, right: &R) -> Result<(), DwaError> {
    if left.alphabet().symbols() != right.alphabet().symbols() {
        return Err(DwaError::AlphabetMismatch);
    }
    if left.field() != right.field() {
        return Err(DwaError::FieldMismatch);
    }
    Ok(())
}

/// Runs the difference-vector worklist on two machines over the same
/// alphabet and field.
pub fn explore<L: WeightedView, R: WeightedView>(
    left: &L,
    right: &R,
    options: &ExploreOptions,
) -> Result<Exploration, DwaError> {
    check_compatible(left, right)?;
    let field = left.field();
    let dimension = left.dimension().zip(right.dimension()).map(|(a, b)| a + b);
    let symbols = left.alphabet().len();

    let mut coords: HashMap<Coord<L::State, R::State>, usize> = HashMap::new();
    let mut basis = Basis::new();
    let mut nodes: Vec<Node<L::State, R::State>> = vec![Node {
        parent: None,
        symbol: 0,
        depth: 0,
        left: left.start(),
        right: right.start(),
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut stats = ExploreStats::default();
    let mut truncated = false;

    while let Some(id) = queue.pop_front() {
        if options.budget.is_some_and(|b| stats.explored >= b) {
            return Err(DwaError::BudgetExceeded {
                explored: stats.explored,
            });
        }
        stats.explored += 1;
        let node = &nodes[id];
        stats.max_length = stats.max_length.max(node.depth as usize);

        let f1 = node
            .left
            .as_ref()
            .map_or_else(|| field.zero(), |(s, w)| w * &left.final_weight(s));
        let f2 = node
            .right
            .as_ref()
            .map_or_else(|| field.zero(), |(s, w)| w * &right.final_weight(s));
        if let Some((s, _)) = &node.left {
            stats.max_row = stats.max_row.max(left.row(s));
        }
        if let Some((s, _)) = &node.right {
            stats.max_row = stats.max_row.max(right.row(s));
        }
        if f1 != f2 {
            let mut word = Vec::with_capacity(node.depth as usize);
            let mut cursor = id;
            while let Some(parent) = nodes[cursor].parent {
                word.push(nodes[cursor].symbol);
                cursor = parent;
            }
            word.reverse();
            stats.basis_size = basis.len();
            return Ok(Exploration {
                witness: Some(Witness {
                    word,
                    left: f1,
                    right: f2,
                }),
                termination: Termination::Witness,
                stats,
            });
        }

        let mut vector = SparseVector::new();
        let next_coord = coords.len();
        if let Some((s, w)) = &node.left {
            let k = *coords.entry(Coord::Left(s.clone())).or_insert(next_coord);
            vector.insert(k, w.clone());
        }
        let next_coord = coords.len();
        if let Some((s, w)) = &node.right {
            let k = *coords.entry(Coord::Right(s.clone())).or_insert(next_coord);
            vector.insert(k, w.negate());
        }
        let independent = basis.insert(vector);
        if let Some(d) = dimension {
            assert!(basis.len() <= d, "kept {} vectors in dimension {d}", basis.len());
        }
        if !independent && options.prune {
            continue;
        }
        if options.max_depth.is_some_and(|m| node.depth >= m) {
            truncated = true;
            continue;
        }

        let depth = node.depth + 1;
        for symbol in 0..symbols {
            let node = &nodes[id];
            let step_left = node.left.as_ref().and_then(|(s, w)| {
                left.next(s, symbol).map(|(t, x)| (t, w * &x))
            });
            let step_right = node.right.as_ref().and_then(|(s, w)| {
                right.next(s, symbol).map(|(t, x)| (t, w * &x))
            });
            nodes.push(Node {
                parent: Some(id),
                symbol,
                depth,
                left: step_left,
                right: step_right,
            });
            queue.push_back(nodes.len() - 1);
        }
    }

    stats.basis_size = basis.len();
    Ok(Exploration {
        witness: None,
        termination: if truncated {
            Termination::DepthLimit
        } else {
            Termination::Saturated
        },
        stats,
    })
}

/// Outcome of comparing two initialised weighted automata.
#[derive(Debug, Clone)]
pub struct DwaVerdict {
    /// Shortest (then lexicographically least) distinguishing word, if any.
    pub witness: Option<Witness>,
    pub stats: ExploreStats,
}

impl DwaVerdict {
    pub fn is_equivalent(&self) -> bool {
        self.witness.is_none()
    }
}

/// Decides equivalence of two initialised weighted automata.
pub fn dwa_equiv(b1: &Dwa, b2: &Dwa) -> Result<DwaVerdict, DwaError> {
    if b1.initial.is_none() || b2.initial.is_none() {
        return Err(DwaError::Uninitialised);
    }
    let run = explore(b1, b2, &ExploreOptions::default())?;
    Ok(DwaVerdict {
        witness: run.witness,
        stats: run.stats,
    })
}

/// Agreement on every word of length at most `k`, for arbitrary views.
pub fn bounded_equiv<L: WeightedView, R: WeightedView>(left: &L, right: &R, k: u64) -> Result<bool, DwaError> {
    let options = ExploreOptions {
        max_depth: Some(k),
        ..ExploreOptions::default()
    };
    Ok(explore(left, right, &options)?.witness.is_none())
}

/// Whether two initialised weighted automata agree on all words of length at
/// most `k`.
pub fn bounded_k_equiv(c_side: &Dwa, d_side: &Dwa, k: u64) -> Result<bool, DwaError> {
    if c_side.initial.is_none() || d_side.initial.is_none() {
        return Err(DwaError::Uninitialised);
    }
    bounded_equiv(c_side, d_side, k)
}

/// The underlying weighted automaton: the positive-counter map with counter
/// effects erased, no initial configuration.
pub fn underlying_wa(a: &Dwroca) -> Dwa {
    let mut b = Dwa::new(a.field(), a.states().to_vec(), a.alphabet().clone());
    for (from, symbol, t) in a.transitions(Guard::Positive) {
        b.set_transition(from, symbol, t.target, t.weight.clone())
            .expect("transitions of a valid automaton are non-zero and unique");
    }
    for (state, w) in a.final_weights().iter().enumerate() {
        b.set_final(state, w.clone()).expect("same field");
    }
    b
}

/// First word (shortest, then lexicographically least) of length at most `k`
/// with a non-zero weight, together with that weight.
fn first_nonzero<V: WeightedView>(view: &V, k: u64) -> Result<Option<(Word, FieldElement)>, DwaError> {
    let zero = Null::new(view.alphabet(), view.field());
    let options = ExploreOptions {
        max_depth: Some(k),
        ..ExploreOptions::default()
    };
    Ok(explore(view, &zero, &options)?.witness.map(|w| (w.word, w.left)))
}

/// Looks for a configuration of `b` that agrees with configuration `c` of
/// `a` on all words of length at most `k`.
///
/// The weight of `(q, t)` on `w` is `t * g_q(w)`, so for each state `q` the
/// weight `t` is pinned by the first word on which either side is non-zero;
/// the candidate is then verified by a bounded comparison. Returns `None`
/// when no state of `b` admits any weight.
pub fn find_k_equiv_wa_config(
    a: &Dwroca,
    c: &Configuration,
    b: &Dwa,
    k: u64,
) -> Result<Option<WaConfig>, DwaError> {
    if a.alphabet().symbols() != b.alphabet().symbols() {
        return Err(DwaError::AlphabetMismatch);
    }
    if a.field() != b.field() || c.weight.spec() != a.field() {
        return Err(DwaError::FieldMismatch);
    }
    let bound = c.counter.saturating_add(k);
    let from_c = Unfolding::from_configuration(a, c.clone(), bound.into());
    let target = first_nonzero(&from_c, k)?;
    let one = b.field().one();
    for q in 0..b.size() {
        let unit = b.from_config(WaConfig::new(q, one.clone()));
        let candidate = match (&target, first_nonzero(&unit, k)?) {
            (None, None) => WaConfig::new(q, one.clone()),
            (Some((w1, fa)), Some((w2, g))) if *w1 == w2 => {
                let t = fa.checked_div(&g).expect("g is non-zero");
                WaConfig::new(q, t)
            }
            _ => continue,
        };
        if bounded_equiv(&from_c, &b.from_config(candidate.clone()), k)? {
            return Ok(Some(candidate));
        }
    }
    Ok(None)
}

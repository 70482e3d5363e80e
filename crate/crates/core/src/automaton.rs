//! Deterministic weighted real-time one-counter automata.
//!
//! A machine reads one symbol per step. When the counter is zero it consults
//! the zero-test map (`delta0`, which may only keep or increment the
//! counter), otherwise the positive map (`delta1`). The weight of a run is the
//! product of the start weight and the transition weights; the acceptance
//! weight additionally multiplies by the final weight of the last state.
//!
//! Both maps are partial. A word without a run has no acceptance weight;
//! wherever two machines are compared, a missing run counts as weight zero.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};

pub type StateId = usize;
pub type SymbolId = usize;
pub type Word = Vec<SymbolId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("alphabet must be non-empty")]
    EmptyAlphabet,
    #[error("automaton must have at least one state")]
    NoStates,
    #[error("empty symbol name")]
    EmptySymbol,
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("more than one {guard} transition at ({state}, {symbol})")]
    DuplicateTransition {
        guard: Guard,
        state: String,
        symbol: String,
    },
    #[error("interval [{start}, {end}] is out of bounds for a word of length {len}")]
    IntervalOutOfBounds { start: usize, end: usize, len: usize },
    #[error("intervals must be non-empty, sorted and pairwise disjoint")]
    MalformedIntervals,
    #[error("the run is undefined at position {position}")]
    UndefinedRun { position: usize },
}

/// The input alphabet. Symbol order is significant: it is the order used for
/// lexicographic tie-breaking between words of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, SymbolId>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self, ModelError> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(ModelError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(ModelError::EmptySymbol);
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(ModelError::DuplicateName(s.clone()));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, id: SymbolId) -> &str {
        &self.symbols[id]
    }

    pub fn index_of(&self, symbol: &str) -> Option<SymbolId> {
        self.index.get(symbol).copied()
    }

    pub fn parse_word<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Word, ModelError> {
        symbols
            .iter()
            .map(|s| {
                self.index_of(s.as_ref())
                    .ok_or_else(|| ModelError::UnknownSymbol(s.as_ref().to_string()))
            })
            .collect()
    }

    pub fn check_word(&self, word: &[SymbolId]) -> Result<(), ModelError> {
        match word.iter().find(|&&s| s >= self.len()) {
            Some(s) => Err(ModelError::UnknownSymbol(format!("#{s}"))),
            None => Ok(()),
        }
    }

    /// Concatenates the symbols when they are all single characters, and
    /// joins them with commas otherwise.
    pub fn render(&self, word: &[SymbolId]) -> String {
        let single = self.symbols.iter().all(|s| s.chars().count() == 1);
        let parts: Vec<&str> = word.iter().map(|&s| self.symbol(s)).collect();
        if single {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    pub fn names(&self, word: &[SymbolId]) -> Vec<String> {
        word.iter().map(|&s| self.symbols[s].clone()).collect()
    }
}

/// Which transition map a step consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Guard {
    /// Counter is zero: `delta0`.
    Zero,
    /// Counter is positive: `delta1`.
    Positive,
}

impl Guard {
    pub fn of(counter: u64) -> Self {
        if counter == 0 {
            Guard::Zero
        } else {
            Guard::Positive
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guard::Zero => "delta0",
            Guard::Positive => "delta1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub target: StateId,
    pub effect: i8,
    pub weight: FieldElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dwroca {
    field: FieldSpec,
    states: Vec<String>,
    alphabet: Alphabet,
    initial_state: StateId,
    initial_weight: FieldElement,
    delta0: Vec<Option<Transition>>,
    delta1: Vec<Option<Transition>>,
    final_weights: Vec<FieldElement>,
}

/// Incremental construction of a [`Dwroca`]. Structural problems (unknown
/// names, two transitions for the same key) are reported by the builder;
/// semantic ones (zero weights, decrements on zero) by [`Dwroca::validate`].
#[derive(Debug, Clone)]
pub struct DwrocaBuilder {
    field: FieldSpec,
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    alphabet: Alphabet,
    initial_state: StateId,
    initial_weight: FieldElement,
    delta0: Vec<Option<Transition>>,
    delta1: Vec<Option<Transition>>,
    final_weights: Vec<FieldElement>,
}

impl DwrocaBuilder {
    /// Starts a machine whose initial state is the first listed state, with
    /// initial weight one and all final weights zero.
    pub fn new<S: Into<String>>(
        field: FieldSpec,
        states: impl IntoIterator<Item = S>,
        alphabet: Alphabet,
    ) -> Result<Self, ModelError> {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.is_empty() {
            return Err(ModelError::NoStates);
        }
        let mut state_index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if state_index.insert(s.clone(), i).is_some() {
                return Err(ModelError::DuplicateName(s.clone()));
            }
        }
        let cells = states.len() * alphabet.len();
        Ok(DwrocaBuilder {
            field,
            final_weights: vec![field.zero(); states.len()],
            states,
            state_index,
            alphabet,
            initial_state: 0,
            initial_weight: field.one(),
            delta0: vec![None; cells],
            delta1: vec![None; cells],
        })
    }

    pub fn state(&self, name: &str) -> Result<StateId, ModelError> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn symbol(&self, name: &str) -> Result<SymbolId, ModelError> {
        self.alphabet
            .index_of(name)
            .ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))
    }

    pub fn initial(mut self, state: StateId, weight: FieldElement) -> Self {
        self.initial_state = state;
        self.initial_weight = weight;
        self
    }

    pub fn final_weight(mut self, state: StateId, weight: FieldElement) -> Self {
        self.final_weights[state] = weight;
        self
    }

    pub fn transition(
        mut self,
        guard: Guard,
        from: StateId,
        symbol: SymbolId,
        to: StateId,
        effect: i8,
        weight: FieldElement,
    ) -> Result<Self, ModelError> {
        if from >= self.states.len() || to >= self.states.len() {
            return Err(ModelError::UnknownState(format!("#{}", from.max(to))));
        }
        if symbol >= self.alphabet.len() {
            return Err(ModelError::UnknownSymbol(format!("#{symbol}")));
        }
        let cell = from * self.alphabet.len() + symbol;
        let map = match guard {
            Guard::Zero => &mut self.delta0,
            Guard::Positive => &mut self.delta1,
        };
        if map[cell].is_some() {
            return Err(ModelError::DuplicateTransition {
                guard,
                state: self.states[from].clone(),
                symbol: self.alphabet.symbol(symbol).to_string(),
            });
        }
        map[cell] = Some(Transition {
            target: to,
            effect,
            weight,
        });
        Ok(self)
    }

    /// Name-based variant of [`DwrocaBuilder::transition`].
    pub fn edge(
        self,
        guard: Guard,
        from: &str,
        symbol: &str,
        to: &str,
        effect: i8,
        weight: FieldElement,
    ) -> Result<Self, ModelError> {
        let (from, symbol, to) = (self.state(from)?, self.symbol(symbol)?, self.state(to)?);
        self.transition(guard, from, symbol, to, effect, weight)
    }

    pub fn build(self) -> Dwroca {
        Dwroca {
            field: self.field,
            states: self.states,
            alphabet: self.alphabet,
            initial_state: self.initial_state,
            initial_weight: self.initial_weight,
            delta0: self.delta0,
            delta1: self.delta1,
            final_weights: self.final_weights,
        }
    }
}

/// A broken invariant found by [`Dwroca::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.message, self.location)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: StateId,
    pub counter: u64,
    pub weight: FieldElement,
}

impl Configuration {
    pub fn new(state: StateId, counter: u64, weight: FieldElement) -> Self {
        Configuration {
            state,
            counter,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStep {
    pub symbol: SymbolId,
    pub guard: Guard,
    pub from: StateId,
    pub to: StateId,
    pub effect: i8,
    pub weight: FieldElement,
}

/// The unique run of a word from a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub start: Configuration,
    pub steps: Vec<RunStep>,
    pub end: Configuration,
}

impl Run {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn word(&self) -> Word {
        self.steps.iter().map(|s| s.symbol).collect()
    }

    /// The product of the transition weights, without the start weight.
    pub fn weight_effect(&self) -> FieldElement {
        let one = self.start.weight.spec().one();
        self.steps.iter().fold(one, |acc, s| &acc * &s.weight)
    }

    /// Counter value before each step, followed by the final counter value.
    pub fn counters(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut n = self.start.counter;
        out.push(n);
        for s in &self.steps {
            n = n.checked_add_signed(i64::from(s.effect)).expect("run counters are non-negative");
            out.push(n);
        }
        out
    }

    /// State before each step, followed by the final state.
    pub fn states(&self) -> Vec<StateId> {
        let mut out: Vec<StateId> = self.steps.iter().map(|s| s.from).collect();
        out.push(self.end.state);
        out
    }

    pub fn zero_tests(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.guard == Guard::Zero)
            .map(|(i, _)| i)
    }
}

/// Result of running a word: either the complete run, or the position of the
/// first symbol that had no transition, together with the run up to there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Complete(Run),
    Stuck { position: usize, prefix: Run },
}

impl RunOutcome {
    pub fn complete(self) -> Option<Run> {
        match self {
            RunOutcome::Complete(r) => Some(r),
            RunOutcome::Stuck { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterProfile {
    /// Counter effect of every non-empty prefix.
    pub prefix: Vec<i64>,
    pub min: i64,
    pub max: i64,
    /// Whether any step consulted the zero-test map.
    pub grounded: bool,
}

pub fn counter_effect_profile(run: &Run) -> CounterProfile {
    let mut acc = 0i64;
    let prefix: Vec<i64> = run
        .steps
        .iter()
        .map(|s| {
            acc += i64::from(s.effect);
            acc
        })
        .collect();
    CounterProfile {
        min: prefix.iter().copied().min().unwrap_or(0),
        max: prefix.iter().copied().max().unwrap_or(0),
        grounded: run.steps.iter().any(|s| s.guard == Guard::Zero),
        prefix,
    }
}

impl Dwroca {
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// Number of control states, the size of the machine.
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn initial_weight(&self) -> &FieldElement {
        &self.initial_weight
    }

    pub fn final_weight(&self, state: StateId) -> &FieldElement {
        &self.final_weights[state]
    }

    pub fn final_weights(&self) -> &[FieldElement] {
        &self.final_weights
    }

    pub fn initial_configuration(&self) -> Configuration {
        Configuration::new(self.initial_state, 0, self.initial_weight.clone())
    }

    pub fn transition(&self, guard: Guard, state: StateId, symbol: SymbolId) -> Option<&Transition> {
        let cell = state * self.alphabet.len() + symbol;
        match guard {
            Guard::Zero => self.delta0[cell].as_ref(),
            Guard::Positive => self.delta1[cell].as_ref(),
        }
    }

    /// All defined transitions of one map as `(from, symbol, transition)`.
    pub fn transitions(&self, guard: Guard) -> impl Iterator<Item = (StateId, SymbolId, &Transition)> {
        let width = self.alphabet.len();
        let map = match guard {
            Guard::Zero => &self.delta0,
            Guard::Positive => &self.delta1,
        };
        map.iter()
            .enumerate()
            .filter_map(move |(cell, t)| t.as_ref().map(|t| (cell / width, cell % width, t)))
    }

    /// Lists every broken invariant; an empty list means the machine is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |location: String, message: &str| {
            out.push(Violation {
                location,
                message: message.to_string(),
            })
        };
        if self.initial_state >= self.states.len() {
            push("initial".into(), "initial state out of range");
        }
        if self.initial_weight.is_zero() {
            push("initial".into(), "zero initial weight");
        }
        if self.initial_weight.spec() != self.field {
            push("initial".into(), "field mismatch");
        }
        for (i, w) in self.final_weights.iter().enumerate() {
            if w.spec() != self.field {
                push(format!("final({})", self.states[i]), "field mismatch");
            }
        }
        for guard in [Guard::Zero, Guard::Positive] {
            for (from, symbol, t) in self.transitions(guard) {
                let location = format!(
                    "{guard} ({},{})",
                    self.states[from],
                    self.alphabet.symbol(symbol)
                );
                match (guard, t.effect) {
                    (Guard::Zero, -1) => push(location.clone(), "zero-test decrement"),
                    (Guard::Zero, 0 | 1) | (Guard::Positive, -1..=1) => {}
                    _ => push(location.clone(), "counter effect out of range"),
                }
                if t.weight.is_zero() {
                    push(location.clone(), "zero transition weight");
                }
                if t.weight.spec() != self.field {
                    push(location.clone(), "field mismatch");
                }
                if t.target >= self.states.len() {
                    push(location, "target state out of range");
                }
            }
        }
        out
    }

    /// One step from `c`. `Ok(None)` when the consulted map has no entry.
    pub fn step(&self, c: &Configuration, symbol: SymbolId) -> Result<Option<Configuration>, ModelError> {
        if symbol >= self.alphabet.len() {
            return Err(ModelError::UnknownSymbol(format!("#{symbol}")));
        }
        Ok(self.step_inner(c, symbol).map(|(next, _)| next))
    }

    fn step_inner(&self, c: &Configuration, symbol: SymbolId) -> Option<(Configuration, RunStep)> {
        let guard = Guard::of(c.counter);
        let t = self.transition(guard, c.state, symbol)?;
        let counter = c.counter.checked_add_signed(i64::from(t.effect))?;
        let weight = &c.weight * &t.weight;
        let step = RunStep {
            symbol,
            guard,
            from: c.state,
            to: t.target,
            effect: t.effect,
            weight: t.weight.clone(),
        };
        Some((Configuration::new(t.target, counter, weight), step))
    }

    pub fn run_word(&self, start: &Configuration, word: &[SymbolId]) -> Result<RunOutcome, ModelError> {
        self.alphabet.check_word(word)?;
        let mut steps = Vec::with_capacity(word.len());
        let mut current = start.clone();
        for (position, &symbol) in word.iter().enumerate() {
            match self.step_inner(&current, symbol) {
                Some((next, step)) => {
                    steps.push(step);
                    current = next;
                }
                None => {
                    return Ok(RunOutcome::Stuck {
                        position,
                        prefix: Run {
                            start: start.clone(),
                            steps,
                            end: current,
                        },
                    })
                }
            }
        }
        Ok(RunOutcome::Complete(Run {
            start: start.clone(),
            steps,
            end: current,
        }))
    }

    /// Acceptance weight of `word` from `start`: the configuration weight at
    /// the end of the run times the final weight there. `None` if the run is
    /// undefined.
    pub fn accept_weight_from(
        &self,
        start: &Configuration,
        word: &[SymbolId],
    ) -> Result<Option<FieldElement>, ModelError> {
        self.alphabet.check_word(word)?;
        let mut current = start.clone();
        for &symbol in word {
            match self.step_inner(&current, symbol) {
                Some((next, _)) => current = next,
                None => return Ok(None),
            }
        }
        Ok(Some(&current.weight * &self.final_weights[current.state]))
    }

    /// Acceptance weight from the initial configuration.
    pub fn accept_weight(&self, word: &[SymbolId]) -> Result<Option<FieldElement>, ModelError> {
        self.accept_weight_from(&self.initial_configuration(), word)
    }

    /// Acceptance weight with undefined runs read as zero.
    pub fn weight_or_zero(&self, word: &[SymbolId]) -> Result<FieldElement, ModelError> {
        Ok(self.accept_weight(word)?.unwrap_or_else(|| self.field.zero()))
    }

    pub fn weight_or_zero_from(&self, start: &Configuration, word: &[SymbolId]) -> Result<FieldElement, ModelError> {
        Ok(self.accept_weight_from(start, word)?.unwrap_or_else(|| self.field.zero()))
    }

    /// Whether removing the intervals `I` from `word` is a pumping from `c`.
    ///
    /// The residual word is replayed from `c` and must:
    /// - have every interval be a loop (same state before and after) in the
    ///   original run,
    /// - be defined and take, at every kept position, the same transition
    ///   from the same map as the original run (so no zero-test is added or
    ///   lost),
    /// - keep the last zero-test of the original run (it may not lie inside
    ///   a removed interval),
    /// - not lower the minimal prefix counter effect.
    ///
    /// A run without zero-tests preserves its last zero-test vacuously.
    pub fn check_pumping(
        &self,
        c: &Configuration,
        word: &[SymbolId],
        intervals: &PumpingIntervals,
    ) -> Result<bool, ModelError> {
        let original = match self.run_word(c, word)? {
            RunOutcome::Complete(r) => r,
            RunOutcome::Stuck { position, .. } => return Err(ModelError::UndefinedRun { position }),
        };
        intervals.check_bounds(word.len())?;
        let states = original.states();
        if intervals.iter().any(|(i, j)| states[i] != states[j + 1]) {
            return Ok(false);
        }
        if let Some(last) = original.zero_tests().last() {
            if intervals.contains(last) {
                return Ok(false);
            }
        }
        let kept: Vec<usize> = (0..word.len()).filter(|&p| !intervals.contains(p)).collect();
        let residual_word: Word = kept.iter().map(|&p| word[p]).collect();
        let residual = match self.run_word(c, &residual_word)? {
            RunOutcome::Complete(r) => r,
            RunOutcome::Stuck { .. } => return Ok(false),
        };
        let same_transitions = kept.iter().zip(&residual.steps).all(|(&p, step)| {
            let orig = &original.steps[p];
            orig.guard == step.guard && orig.from == step.from && orig.to == step.to
        });
        if !same_transitions {
            return Ok(false);
        }
        Ok(counter_effect_profile(&residual).min >= counter_effect_profile(&original).min)
    }
}

/// A sorted list of pairwise disjoint, inclusive position intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PumpingIntervals {
    intervals: Vec<(usize, usize)>,
}

impl PumpingIntervals {
    pub fn new(mut intervals: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        intervals.sort_unstable();
        let ok = intervals.iter().all(|(i, j)| i <= j) && intervals.windows(2).all(|w| w[0].1 < w[1].0);
        if !ok {
            return Err(ModelError::MalformedIntervals);
        }
        Ok(PumpingIntervals { intervals })
    }

    pub fn empty() -> Self {
        PumpingIntervals::default()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.intervals.iter().copied()
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn contains(&self, position: usize) -> bool {
        self.intervals.iter().any(|&(i, j)| i <= position && position <= j)
    }

    /// Whether the two lists share no position.
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intervals
            .iter()
            .all(|&(i, j)| other.intervals.iter().all(|&(k, l)| j < k || l < i))
    }

    /// Disjoint union; fails when the lists overlap.
    pub fn union(&self, other: &Self) -> Result<Self, ModelError> {
        if !self.is_disjoint(other) {
            return Err(ModelError::MalformedIntervals);
        }
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        PumpingIntervals::new(all)
    }

    pub fn check_bounds(&self, len: usize) -> Result<(), ModelError> {
        match self.intervals.iter().find(|&&(_, j)| j >= len) {
            Some(&(start, end)) => Err(ModelError::IntervalOutOfBounds { start, end, len }),
            None => Ok(()),
        }
    }
}

/// `word` with every position covered by `intervals` removed.
pub fn remove_intervals<T: Clone>(word: &[T], intervals: &PumpingIntervals) -> Result<Vec<T>, ModelError> {
    intervals.check_bounds(word.len())?;
    Ok(word
        .iter()
        .enumerate()
        .filter(|(p, _)| !intervals.contains(*p))
        .map(|(_, s)| s.clone())
        .collect())
}

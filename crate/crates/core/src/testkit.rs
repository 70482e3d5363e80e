//! Random instances, brute-force oracles and pumping drivers for testing.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automaton::{
    Alphabet, Configuration, Dwroca, DwrocaBuilder, Guard, ModelError, PumpingIntervals, RunOutcome, StateId,
    SymbolId, Transition, Word,
};
use crate::dwa::{Dwa, WaConfig};
use crate::field::{FieldElement, FieldSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub states: RangeInclusive<usize>,
    pub alphabet_size: RangeInclusive<usize>,
    pub field: FieldSpec,
    /// Non-zero weights to draw from; `None` picks [`default_pool`].
    pub weight_pool: Option<Vec<FieldElement>>,
    /// Probability that a given (state, symbol) entry exists, per map.
    pub density: f64,
    pub zero_final_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            states: 1..=3,
            alphabet_size: 2..=2,
            field: FieldSpec::Rational,
            weight_pool: None,
            density: 0.75,
            zero_final_prob: 0.3,
        }
    }
}

impl GeneratorConfig {
    pub fn pool(&self) -> Vec<FieldElement> {
        self.weight_pool.clone().unwrap_or_else(|| default_pool(self.field))
    }
}

/// `{1, 2, 3, 1/2, -1}` over the rationals, every non-zero residue otherwise.
pub fn default_pool(field: FieldSpec) -> Vec<FieldElement> {
    match field {
        FieldSpec::Rational => ["1", "2", "3", "1/2", "-1"]
            .iter()
            .map(|s| field.parse(s).expect("literal"))
            .collect(),
        FieldSpec::Prime(p) => (1..p.get()).map(|x| FieldElement::from_i64(field, x.into())).collect(),
    }
}

pub fn symbol_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                char::from(b'a' + i as u8).to_string()
            } else {
                format!("s{i}")
            }
        })
        .collect()
}

/// Mutable copy of an automaton's tables.
#[derive(Debug, Clone)]
struct Draft {
    field: FieldSpec,
    states: Vec<String>,
    alphabet: Alphabet,
    initial: (StateId, FieldElement),
    finals: Vec<FieldElement>,
    delta: [Vec<Option<Transition>>; 2],
}

impl Draft {
    fn of(a: &Dwroca) -> Self {
        let cells = a.size() * a.alphabet().len();
        let mut delta = [vec![None; cells], vec![None; cells]];
        for (g, table) in [Guard::Zero, Guard::Positive].into_iter().zip(delta.iter_mut()) {
            for (from, symbol, t) in a.transitions(g) {
                table[from * a.alphabet().len() + symbol] = Some(t.clone());
            }
        }
        Draft {
            field: a.field(),
            states: a.states().to_vec(),
            alphabet: a.alphabet().clone(),
            initial: (a.initial_state(), a.initial_weight().clone()),
            finals: a.final_weights().to_vec(),
            delta,
        }
    }

    fn width(&self) -> usize {
        self.alphabet.len()
    }

    fn build(self) -> Dwroca {
        let width = self.width();
        let mut b = DwrocaBuilder::new(self.field, self.states, self.alphabet)
            .expect("states are distinct")
            .initial(self.initial.0, self.initial.1);
        for (state, w) in self.finals.into_iter().enumerate() {
            b = b.final_weight(state, w);
        }
        for (g, table) in [Guard::Zero, Guard::Positive].into_iter().zip(self.delta) {
            for (cell, t) in table.into_iter().enumerate() {
                if let Some(t) = t {
                    b = b
                        .transition(g, cell / width, cell % width, t.target, t.effect, t.weight)
                        .expect("cells are unique");
                }
            }
        }
        b.build()
    }
}

fn pick<'a, T>(rng: &mut impl Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty")
}

fn generate_with(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng, states: usize, symbols: usize) -> Dwroca {
    let pool = cfg.pool();
    let names: Vec<String> = (0..states).map(|i| format!("q{i}")).collect();
    let alphabet = Alphabet::new(symbol_names(symbols)).expect("generated names are distinct");
    let mut draft = Draft {
        field: cfg.field,
        states: names,
        alphabet,
        initial: (0, pick(rng, &pool).clone()),
        finals: Vec::with_capacity(states),
        delta: [vec![None; states * symbols], vec![None; states * symbols]],
    };
    for g in 0..2 {
        for cell in 0..states * symbols {
            if rng.gen_bool(cfg.density) {
                let effect = if g == 0 { rng.gen_range(0..=1) } else { rng.gen_range(-1..=1) };
                draft.delta[g][cell] = Some(Transition {
                    target: rng.gen_range(0..states),
                    effect,
                    weight: pick(rng, &pool).clone(),
                });
            }
        }
    }
    for _ in 0..states {
        let w = if rng.gen_bool(cfg.zero_final_prob) {
            cfg.field.zero()
        } else {
            pick(rng, &pool).clone()
        };
        draft.finals.push(w);
    }
    draft.build()
}

/// A random valid automaton; the same configuration gives the same result.
pub fn generate(cfg: &GeneratorConfig) -> Dwroca {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let states = rng.gen_range(cfg.states.clone());
    let symbols = rng.gen_range(cfg.alphabet_size.clone());
    generate_with(cfg, &mut rng, states, symbols)
}

/// The underlying weighted automaton of a random machine, initialised at its
/// initial state and weight.
pub fn generate_dwa(cfg: &GeneratorConfig) -> Dwa {
    let a = generate(cfg);
    crate::dwa::underlying_wa(&a)
        .initialised(WaConfig::new(a.initial_state(), a.initial_weight().clone()))
        .expect("initial weight is non-zero")
}

/// Duplicates `state` and redirects a random subset of the transitions into
/// it to the copy. The result is equivalent to `a`.
pub fn split_state(a: &Dwroca, state: StateId, rng: &mut impl Rng) -> Dwroca {
    let mut d = Draft::of(a);
    let width = d.width();
    let copy = d.states.len();
    let mut name = format!("{}'", d.states[state]);
    while d.states.contains(&name) {
        name.push('\'');
    }
    d.states.push(name);
    d.finals.push(d.finals[state].clone());
    for table in d.delta.iter_mut() {
        let row: Vec<Option<Transition>> = table[state * width..(state + 1) * width].to_vec();
        table.extend(row);
        for t in table.iter_mut().flatten() {
            if t.target == state && rng.gen_bool(0.5) {
                t.target = copy;
            }
        }
    }
    if d.initial.0 == state && rng.gen_bool(0.5) {
        d.initial.0 = copy;
    }
    d.build()
}

/// Rescales every state by a random non-zero potential `m(q)`: transitions
/// `p -> q` are multiplied by `m(q) / m(p)`, the initial weight by `m(q0)` and
/// final weights divided by `m(q)`. The result is equivalent to `a`.
pub fn reweight(a: &Dwroca, pool: &[FieldElement], rng: &mut impl Rng) -> Dwroca {
    let mut d = Draft::of(a);
    let width = d.width();
    let potential: Vec<FieldElement> = (0..d.states.len()).map(|_| pick(rng, pool).clone()).collect();
    for table in d.delta.iter_mut() {
        for (cell, t) in table.iter_mut().enumerate() {
            if let Some(t) = t {
                let from = &potential[cell / width];
                t.weight = (&t.weight * &potential[t.target]).checked_div(from).expect("non-zero");
            }
        }
    }
    d.initial.1 = &d.initial.1 * &potential[d.initial.0];
    for (q, f) in d.finals.iter_mut().enumerate() {
        *f = f.checked_div(&potential[q]).expect("non-zero");
    }
    d.build()
}

/// A small random edit: a changed weight, target, counter effect or final
/// weight, or an added or removed transition. Usually breaks equivalence,
/// sometimes only on long words.
pub fn perturb(a: &Dwroca, pool: &[FieldElement], rng: &mut impl Rng) -> Dwroca {
    let mut d = Draft::of(a);
    let states = d.states.len();
    let cells = states * d.width();
    let g = rng.gen_range(0..2);
    let cell = rng.gen_range(0..cells);
    match rng.gen_range(0..5) {
        0 => {
            let q = rng.gen_range(0..states);
            let mut choices: Vec<FieldElement> = pool.to_vec();
            choices.push(d.field.zero());
            choices.retain(|w| *w != d.finals[q]);
            d.finals[q] = pick(rng, &choices).clone();
        }
        1 => {
            d.delta[g][cell] = match d.delta[g][cell] {
                Some(_) => None,
                None => Some(Transition {
                    target: rng.gen_range(0..states),
                    effect: if g == 0 { rng.gen_range(0..=1) } else { rng.gen_range(-1..=1) },
                    weight: pick(rng, pool).clone(),
                }),
            };
        }
        kind => {
            let present: Vec<(usize, usize)> = (0..2)
                .flat_map(|g| (0..cells).map(move |c| (g, c)))
                .filter(|&(g, c)| d.delta[g][c].is_some())
                .collect();
            let Some(&(g, cell)) = present.choose(rng) else {
                d.finals[0] = if d.finals[0].is_zero() { d.field.one() } else { d.field.zero() };
                return d.build();
            };
            let t = d.delta[g][cell].as_mut().expect("present");
            match kind {
                2 => {
                    let others: Vec<FieldElement> = pool.iter().filter(|w| **w != t.weight).cloned().collect();
                    if let Some(w) = others.choose(rng) {
                        t.weight = w.clone();
                    } else {
                        t.target = (t.target + 1) % states;
                    }
                }
                3 => t.target = rng.gen_range(0..states),
                _ => {
                    let effects: &[i8] = if g == 0 { &[0, 1] } else { &[-1, 0, 1] };
                    t.effect = *pick(rng, effects);
                }
            }
        }
    }
    d.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    Independent,
    Perturbed,
    Split,
    Reweighted,
}

/// A random pair over a shared alphabet, mixing independent machines,
/// perturbations and equivalence-preserving transforms.
pub fn generate_pair(cfg: &GeneratorConfig) -> (Dwroca, Dwroca, PairKind) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let symbols = rng.gen_range(cfg.alphabet_size.clone());
    let states = rng.gen_range(cfg.states.clone());
    let a = generate_with(cfg, &mut rng, states, symbols);
    let pool = cfg.pool();
    let kind = *pick(
        &mut rng,
        &[
            PairKind::Independent,
            PairKind::Perturbed,
            PairKind::Perturbed,
            PairKind::Split,
            PairKind::Reweighted,
        ],
    );
    let b = match kind {
        PairKind::Independent => {
            let states = rng.gen_range(cfg.states.clone());
            generate_with(cfg, &mut rng, states, symbols)
        }
        PairKind::Perturbed => perturb(&a, &pool, &mut rng),
        PairKind::Split => {
            let q = rng.gen_range(0..a.size());
            split_state(&a, q, &mut rng)
        }
        PairKind::Reweighted => {
            let b = reweight(&a, &pool, &mut rng);
            if rng.gen_bool(0.5) {
                perturb(&b, &pool, &mut rng)
            } else {
                b
            }
        }
    };
    (a, b, kind)
}

/// Underlying weighted automata of a [`generate_pair`] pair, initialised at
/// the machines' initial configurations.
pub fn generate_dwa_pair(cfg: &GeneratorConfig) -> (Dwa, Dwa) {
    let (a, b, _) = generate_pair(cfg);
    let init = |m: &Dwroca| {
        crate::dwa::underlying_wa(m)
            .initialised(WaConfig::new(m.initial_state(), m.initial_weight().clone()))
            .expect("initial weight is non-zero")
    };
    (init(&a), init(&b))
}

pub fn random_word(rng: &mut impl Rng, symbols: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..symbols)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumerating all words up to length {max_len} needs {required} words, over the budget of {budget}")]
    BudgetExceeded { max_len: usize, required: u128, budget: u128 },
    #[error("the automata have different alphabets")]
    AlphabetMismatch,
    #[error("the automata are over different fields")]
    FieldMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// The shortest, then lexicographically least, distinguishing word.
    pub shortest_witness: Option<Word>,
    /// Every word up to this length was compared (or is longer than the witness).
    pub checked_up_to: usize,
    /// Number of words of each length on which the machines agree. When a
    /// witness exists the table stops at its length, whose entry counts the
    /// agreeing words that precede it.
    pub agreement_table: Vec<u64>,
}

/// Default ceiling on the number of words [`brute_force_witness`] enumerates.
pub const DEFAULT_ORACLE_BUDGET: u128 = 50_000_000;

/// Enumerates words up to `max_len` by direct simulation and returns the
/// first mismatch in length-lexicographic order.
pub fn brute_force_witness(
    a1: &Dwroca,
    a2: &Dwroca,
    max_len: usize,
    budget: u128,
) -> Result<OracleResult, OracleError> {
    if a1.alphabet().symbols() != a2.alphabet().symbols() {
        return Err(OracleError::AlphabetMismatch);
    }
    if a1.field() != a2.field() {
        return Err(OracleError::FieldMismatch);
    }
    let k = a1.alphabet().len() as u128;
    let required = (0..=max_len as u32).fold(0u128, |acc, l| acc.saturating_add(k.saturating_pow(l)));
    if required > budget {
        return Err(OracleError::BudgetExceeded {
            max_len,
            required,
            budget,
        });
    }
    let mut search = Search {
        a1,
        a2,
        zero: a1.field().zero(),
        limit: max_len,
        word: Vec::new(),
        best: None,
        table: vec![0; max_len + 1],
    };
    search.visit(Some(a1.initial_configuration()), Some(a2.initial_configuration()));
    if let Some(w) = &search.best {
        search.table.truncate(w.len() + 1);
    }
    Ok(OracleResult {
        checked_up_to: max_len,
        agreement_table: search.table,
        shortest_witness: search.best,
    })
}

/// Depth-first search in lexicographic order. Once a witness of length `d`
/// is known, only shorter words are still of interest.
struct Search<'a> {
    a1: &'a Dwroca,
    a2: &'a Dwroca,
    zero: FieldElement,
    limit: usize,
    word: Word,
    best: Option<Word>,
    table: Vec<u64>,
}

impl Search<'_> {
    fn weight(&self, a: &Dwroca, c: &Option<Configuration>) -> FieldElement {
        c.as_ref()
            .map_or_else(|| self.zero.clone(), |c| &c.weight * a.final_weight(c.state))
    }

    fn visit(&mut self, c1: Option<Configuration>, c2: Option<Configuration>) {
        let depth = self.word.len();
        if self.weight(self.a1, &c1) != self.weight(self.a2, &c2) {
            if self.best.as_ref().map_or(true, |b| depth < b.len()) {
                self.best = Some(self.word.clone());
                self.limit = depth.saturating_sub(1);
            }
            return;
        }
        self.table[depth] += 1;
        if c1.is_none() && c2.is_none() {
            let symbols = self.a1.alphabet().len() as u64;
            for (extra, slot) in self.table[depth + 1..=self.limit.max(depth)].iter_mut().enumerate() {
                *slot += symbols.pow(extra as u32 + 1);
            }
            return;
        }
        if depth >= self.limit || self.best.as_ref().is_some_and(|b| depth + 1 >= b.len()) {
            return;
        }
        for symbol in 0..self.a1.alphabet().len() {
            let n1 = c1.as_ref().and_then(|c| self.a1.step(c, symbol).expect("symbol in range"));
            let n2 = c2.as_ref().and_then(|c| self.a2.step(c, symbol).expect("symbol in range"));
            self.word.push(symbol);
            self.visit(n1, n2);
            self.word.pop();
        }
    }
}

/// Loop intervals of the run of `word` from `c`: `[i, j]` such that the state
/// before position `i` equals the state after position `j`.
fn loop_intervals(a: &Dwroca, c: &Configuration, word: &[SymbolId]) -> Vec<(usize, usize)> {
    let Ok(RunOutcome::Complete(run)) = a.run_word(c, word) else {
        return Vec::new();
    };
    let states = run.states();
    let mut out = Vec::new();
    for i in 0..word.len() {
        for j in i..word.len() {
            if states[i] == states[j + 1] {
                out.push((i, j));
            }
        }
    }
    out
}

/// Interval lists passing the pumping check for `word` from `c`, the empty
/// list first, at most `cap` of them.
pub fn find_pumpings(a: &Dwroca, c: &Configuration, word: &[SymbolId], cap: usize) -> Vec<PumpingIntervals> {
    common_pumpings(&[(a, c)], word, cap)
}

/// Interval lists that are pumpings of `word` from every listed configuration.
pub fn common_pumpings(sides: &[(&Dwroca, &Configuration)], word: &[SymbolId], cap: usize) -> Vec<PumpingIntervals> {
    let Some(&(a, c)) = sides.first() else {
        return Vec::new();
    };
    let candidates = loop_intervals(a, c, word);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    collect_pumpings(sides, word, &candidates, 0, &mut chosen, &mut out, cap);
    out
}

fn collect_pumpings(
    sides: &[(&Dwroca, &Configuration)],
    word: &[SymbolId],
    candidates: &[(usize, usize)],
    from: usize,
    chosen: &mut Vec<(usize, usize)>,
    out: &mut Vec<PumpingIntervals>,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    let intervals = PumpingIntervals::new(chosen.clone()).expect("chosen intervals are disjoint");
    let ok = sides
        .iter()
        .all(|(a, c)| a.check_pumping(c, word, &intervals).unwrap_or(false));
    if ok {
        out.push(intervals);
    }
    for (k, &(i, j)) in candidates.iter().enumerate().skip(from) {
        if chosen.last().is_some_and(|&(_, end)| i <= end) {
            continue;
        }
        chosen.push((i, j));
        collect_pumpings(sides, word, candidates, k + 1, chosen, out, cap);
        chosen.pop();
    }
}

/// Which residual words distinguish the two configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Residual {
    I,
    J,
    Union,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    /// `I ⊎ J` is a pumping from both configurations.
    pub union_is_pumping: bool,
    /// Residual words on which the two configurations disagree.
    pub distinguishing: Vec<Residual>,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.union_is_pumping && !self.distinguishing.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrialError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Checks the two conclusions of the pumping theorem on one instance: for
/// disjoint pumpings `I` and `J` of `word` from `c` (in `a1`) and `c2` (in
/// `a2`), with the word distinguishing the configurations, `I ⊎ J` is again a
/// pumping from both, and one of `w_I`, `w_J`, `w_{I⊎J}` still distinguishes.
pub fn theorem1_trial(
    a1: &Dwroca,
    a2: &Dwroca,
    c: &Configuration,
    c2: &Configuration,
    word: &[SymbolId],
    i: &PumpingIntervals,
    j: &PumpingIntervals,
) -> Result<TrialOutcome, TrialError> {
    let violated = |msg: &str| TrialError::PreconditionViolated(msg.to_string());
    if !i.is_disjoint(j) {
        return Err(violated("I and J are not disjoint"));
    }
    let is_pumping = |a: &Dwroca, start: &Configuration, p: &PumpingIntervals| -> Result<bool, TrialError> {
        match a.check_pumping(start, word, p) {
            Ok(b) => Ok(b),
            Err(ModelError::UndefinedRun { .. }) => Err(violated("the run of the word is undefined")),
            Err(e) => Err(e.into()),
        }
    };
    for (name, p) in [("I", i), ("J", j)] {
        if !is_pumping(a1, c, p)? || !is_pumping(a2, c2, p)? {
            return Err(TrialError::PreconditionViolated(format!(
                "{name} is not a pumping from both configurations"
            )));
        }
    }
    let differs = |w: &[SymbolId]| -> Result<bool, TrialError> {
        Ok(a1.weight_or_zero_from(c, w)? != a2.weight_or_zero_from(c2, w)?)
    };
    if !differs(word)? {
        return Err(violated("the word does not distinguish the configurations"));
    }
    let union = i.union(j)?;
    let union_is_pumping = is_pumping(a1, c, &union)? && is_pumping(a2, c2, &union)?;
    let mut distinguishing = Vec::new();
    for (which, p) in [(Residual::I, i), (Residual::J, j), (Residual::Union, &union)] {
        if differs(&crate::automaton::remove_intervals(word, p)?)? {
            distinguishing.push(which);
        }
    }
    Ok(TrialOutcome {
        union_is_pumping,
        distinguishing,
    })
}

/// One instance for [`theorem1_trial`].
#[derive(Debug, Clone)]
pub struct Theorem1Instance {
    pub a1: Dwroca,
    pub a2: Dwroca,
    pub c: Configuration,
    pub c2: Configuration,
    pub word: Word,
    pub i: PumpingIntervals,
    pub j: PumpingIntervals,
}

/// Searches random small pairs for instances satisfying the theorem's
/// hypotheses with both `I` and `J` non-empty: every word up to `max_len` is
/// tried from the initial configurations. At most `per_word` pairs `(I, J)`
/// are taken from any one word.
pub fn harvest_theorem1(cfg: &GeneratorConfig, max_len: usize, target: usize, per_word: usize) -> Vec<Theorem1Instance> {
    let mut out = Vec::new();
    let mut seed = cfg.seed;
    while out.len() < target {
        let (a1, a2, _) = generate_pair(&GeneratorConfig { seed, ..cfg.clone() });
        seed = seed.wrapping_add(1);
        let (c, c2) = (a1.initial_configuration(), a2.initial_configuration());
        let symbols = a1.alphabet().len();
        for len in 2..=max_len {
            for index in 0..symbols.pow(len as u32) {
                let word = nth_word(index, len, symbols);
                let differs = a1.weight_or_zero(&word).ok() != a2.weight_or_zero(&word).ok();
                let both_defined = [(&a1, &c), (&a2, &c2)]
                    .iter()
                    .all(|(a, c)| matches!(a.run_word(c, &word), Ok(RunOutcome::Complete(_))));
                if !differs || !both_defined {
                    continue;
                }
                let pumpings = common_pumpings(&[(&a1, &c), (&a2, &c2)], &word, 64);
                let mut taken = 0;
                'pairs: for (k, i) in pumpings.iter().enumerate().filter(|(_, p)| !p.is_empty()) {
                    for j in pumpings[k + 1..].iter().filter(|p| !p.is_empty() && i.is_disjoint(p)) {
                        out.push(Theorem1Instance {
                            a1: a1.clone(),
                            a2: a2.clone(),
                            c: c.clone(),
                            c2: c2.clone(),
                            word: word.clone(),
                            i: i.clone(),
                            j: j.clone(),
                        });
                        taken += 1;
                        if taken >= per_word || out.len() >= target {
                            break 'pairs;
                        }
                    }
                }
                if out.len() >= target {
                    return out;
                }
            }
        }
    }
    out
}

/// The `index`-th word of length `len` in lexicographic order.
pub fn nth_word(mut index: usize, len: usize, symbols: usize) -> Word {
    let mut word = vec![0; len];
    for slot in word.iter_mut().rev() {
        *slot = index % symbols;
        index /= symbols;
    }
    word
}

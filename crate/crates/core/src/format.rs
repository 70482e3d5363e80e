//! JSON encodings of automata, verdicts and bound reports. Field elements are
//! written as strings in the textual syntax of [`FieldElement::parse`].

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Alphabet, Dwroca, DwrocaBuilder, Guard, ModelError, Violation};
use crate::dwa::{Dwa, DwaError, ExploreStats, WaConfig};
use crate::equiv::{EquivalenceVerdict, Mode, Outcome};
use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::unfold::BoundReport;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad weight {text:?}: {source}")]
    Weight { text: String, source: FieldError },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dwa(#[from] DwaError),
    #[error("no final weight for state {0:?}")]
    MissingFinal(String),
    #[error("final weight for unknown state {0:?}")]
    UnknownFinal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldJson {
    Rational,
    Gf { p: u64 },
}

impl FieldJson {
    pub fn spec(self) -> Result<FieldSpec, FieldError> {
        match self {
            FieldJson::Rational => Ok(FieldSpec::Rational),
            FieldJson::Gf { p } => FieldSpec::prime(p),
        }
    }

    pub fn of(spec: FieldSpec) -> Self {
        match spec {
            FieldSpec::Rational => FieldJson::Rational,
            FieldSpec::Prime(p) => FieldJson::Gf { p: p.get().into() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialJson {
    pub state: String,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub from: String,
    pub on: String,
    pub to: String,
    pub ce: i8,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonJson {
    pub field: FieldJson,
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub initial: InitialJson,
    pub delta0: Vec<EdgeJson>,
    pub delta1: Vec<EdgeJson>,
    #[serde(rename = "final")]
    pub final_weights: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwaEdgeJson {
    pub from: String,
    pub on: String,
    pub to: String,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DwaJson {
    pub field: FieldJson,
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialJson>,
    pub delta1: Vec<DwaEdgeJson>,
    #[serde(rename = "final")]
    pub final_weights: BTreeMap<String, String>,
}

fn weight(spec: FieldSpec, text: &str) -> Result<FieldElement, FormatError> {
    spec.parse(text).map_err(|source| FormatError::Weight {
        text: text.to_string(),
        source,
    })
}

fn index_of(states: &[String], name: &str) -> Result<usize, ModelError> {
    states
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| ModelError::UnknownState(name.to_string()))
}

fn final_weights(
    spec: FieldSpec,
    states: &[String],
    finals: &BTreeMap<String, String>,
) -> Result<Vec<FieldElement>, FormatError> {
    if let Some(name) = finals.keys().find(|k| !states.contains(k)) {
        return Err(FormatError::UnknownFinal(name.clone()));
    }
    states
        .iter()
        .map(|s| match finals.get(s) {
            Some(text) => weight(spec, text),
            None => Err(FormatError::MissingFinal(s.clone())),
        })
        .collect()
}

/// A parsed automaton together with structural problems that the builder
/// tolerated: repeated transitions (the first one is kept).
#[derive(Debug, Clone)]
pub struct Loaded {
    pub automaton: Dwroca,
    pub violations: Vec<Violation>,
}

impl Loaded {
    /// All violations, structural and semantic.
    pub fn all_violations(&self) -> Vec<Violation> {
        let mut out = self.violations.clone();
        out.extend(self.automaton.validate());
        out
    }
}

pub fn automaton_from_json(text: &str) -> Result<Loaded, FormatError> {
    let json: AutomatonJson = serde_json::from_str(text)?;
    let spec = json.field.spec()?;
    let alphabet = Alphabet::new(json.alphabet)?;
    let finals = final_weights(spec, &json.states, &json.final_weights)?;
    let mut b = DwrocaBuilder::new(spec, json.states.iter().cloned(), alphabet)?;
    let initial = b.state(&json.initial.state)?;
    b = b.initial(initial, weight(spec, &json.initial.weight)?);
    for (state, w) in finals.into_iter().enumerate() {
        b = b.final_weight(state, w);
    }
    let mut violations = Vec::new();
    for (guard, edges) in [(Guard::Zero, &json.delta0), (Guard::Positive, &json.delta1)] {
        for e in edges {
            let w = weight(spec, &e.weight)?;
            match b.clone().edge(guard, &e.from, &e.on, &e.to, e.ce, w) {
                Ok(next) => b = next,
                Err(ModelError::DuplicateTransition { .. }) => violations.push(Violation {
                    location: format!("{guard} ({},{})", e.from, e.on),
                    message: "duplicate transition".into(),
                }),
                Err(other) => return Err(other.into()),
            }
        }
    }
    Ok(Loaded {
        automaton: b.build(),
        violations,
    })
}

pub fn automaton_to_json(a: &Dwroca) -> AutomatonJson {
    let edges = |guard| {
        a.transitions(guard)
            .map(|(from, symbol, t)| EdgeJson {
                from: a.states()[from].clone(),
                on: a.alphabet().symbol(symbol).to_string(),
                to: a.states()[t.target].clone(),
                ce: t.effect,
                weight: t.weight.to_string(),
            })
            .collect()
    };
    AutomatonJson {
        field: FieldJson::of(a.field()),
        states: a.states().to_vec(),
        alphabet: a.alphabet().symbols().to_vec(),
        initial: InitialJson {
            state: a.states()[a.initial_state()].clone(),
            weight: a.initial_weight().to_string(),
        },
        delta0: edges(Guard::Zero),
        delta1: edges(Guard::Positive),
        final_weights: a
            .states()
            .iter()
            .zip(a.final_weights())
            .map(|(s, w)| (s.clone(), w.to_string()))
            .collect(),
    }
}

pub fn dwa_from_json(text: &str) -> Result<Dwa, FormatError> {
    let json: DwaJson = serde_json::from_str(text)?;
    let spec = json.field.spec()?;
    let alphabet = Alphabet::new(json.alphabet)?;
    let finals = final_weights(spec, &json.states, &json.final_weights)?;
    let mut seen = std::collections::HashSet::new();
    for s in &json.states {
        if !seen.insert(s) {
            return Err(ModelError::DuplicateName(s.clone()).into());
        }
    }
    let mut b = Dwa::new(spec, json.states.clone(), alphabet.clone());
    for (state, w) in finals.into_iter().enumerate() {
        b.set_final(state, w)?;
    }
    for e in &json.delta1 {
        let symbol = alphabet
            .index_of(&e.on)
            .ok_or_else(|| ModelError::UnknownSymbol(e.on.clone()))?;
        b.set_transition(
            index_of(&json.states, &e.from)?,
            symbol,
            index_of(&json.states, &e.to)?,
            weight(spec, &e.weight)?,
        )?;
    }
    match &json.initial {
        Some(init) => {
            let start = WaConfig::new(index_of(&json.states, &init.state)?, weight(spec, &init.weight)?);
            Ok(b.initialised(start)?)
        }
        None => Ok(b),
    }
}

pub fn dwa_to_json(b: &Dwa) -> DwaJson {
    DwaJson {
        field: FieldJson::of(b.field()),
        states: b.states().to_vec(),
        alphabet: b.alphabet().symbols().to_vec(),
        initial: b.initial().map(|c| InitialJson {
            state: b.states()[c.state].clone(),
            weight: c.weight.to_string(),
        }),
        delta1: b
            .transitions()
            .map(|(from, symbol, (to, w))| DwaEdgeJson {
                from: b.states()[from].clone(),
                on: b.alphabet().symbol(symbol).to_string(),
                to: b.states()[*to].clone(),
                weight: w.to_string(),
            })
            .collect(),
        final_weights: b
            .states()
            .iter()
            .enumerate()
            .map(|(q, s)| (s.clone(), b.final_weight(q).to_string()))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsJson {
    pub explored: usize,
    pub basis_size: usize,
    pub max_row: u64,
    pub max_length: usize,
}

impl From<&ExploreStats> for StatsJson {
    fn from(s: &ExploreStats) -> Self {
        StatsJson {
            explored: s.explored,
            basis_size: s.basis_size,
            max_row: s.max_row,
            max_length: s.max_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictJson {
    pub outcome: &'static str,
    pub witness: Option<String>,
    pub witness_symbols: Option<Vec<String>>,
    pub f1: Option<String>,
    pub f2: Option<String>,
    pub mode: &'static str,
    pub bound: String,
    pub evidence: String,
    pub stats: StatsJson,
}

pub fn verdict_to_json(v: &EquivalenceVerdict, alphabet: &Alphabet) -> VerdictJson {
    VerdictJson {
        outcome: match v.outcome {
            Outcome::Equivalent => "equivalent",
            Outcome::NotEquivalent => "not_equivalent",
        },
        witness: v.witness.as_ref().map(|w| alphabet.render(&w.word)),
        witness_symbols: v.witness.as_ref().map(|w| alphabet.names(&w.word)),
        f1: v.witness.as_ref().map(|w| w.left.to_string()),
        f2: v.witness.as_ref().map(|w| w.right.to_string()),
        mode: match v.mode {
            Mode::Theoretical => "theoretical",
            Mode::BoundedBy(_) => "bounded",
        },
        bound: v.bound.to_string(),
        evidence: v.evidence.to_string(),
        stats: (&v.stats).into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsJson {
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "P1")]
    pub p1: String,
    #[serde(rename = "P2")]
    pub p2: String,
    #[serde(rename = "P3")]
    pub p3: String,
    #[serde(rename = "P0")]
    pub p0: String,
}

pub fn bounds_to_json(r: &BoundReport) -> BoundsJson {
    let s = |x: &BigUint| x.to_string();
    BoundsJson {
        k: r.k,
        p1: s(&r.p1),
        p2: s(&r.p2),
        p3: s(&r.p3),
        p0: s(&r.p0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::tests::doubling;

    const DOUBLING: &str = r#"{
        "field": {"kind": "rational"},
        "states": ["q0"], "alphabet": ["a"],
        "initial": {"state": "q0", "weight": "1"},
        "delta0": [{"from": "q0", "on": "a", "to": "q0", "ce": 1, "weight": "2"}],
        "delta1": [{"from": "q0", "on": "a", "to": "q0", "ce": 1, "weight": "2"}],
        "final": {"q0": "1"}
    }"#;

    #[test]
    fn reads_the_doubling_machine() {
        let loaded = automaton_from_json(DOUBLING).unwrap();
        assert!(loaded.all_violations().is_empty());
        assert_eq!(loaded.automaton, doubling());
        let again = serde_json::to_string(&automaton_to_json(&loaded.automaton)).unwrap();
        assert_eq!(automaton_from_json(&again).unwrap().automaton, doubling());
    }

    #[test]
    fn rejects_malformed_input() {
        let extra = DOUBLING.replace(r#""alphabet""#, r#""colour": 1, "alphabet""#);
        assert!(matches!(automaton_from_json(&extra), Err(FormatError::Json(_))));
        let no_final = DOUBLING.replace(r#""q0": "1""#, "");
        assert!(matches!(automaton_from_json(&no_final), Err(FormatError::MissingFinal(_))));
        let bad_weight = DOUBLING.replace(r#""weight": "2"}],
        "delta1""#, r#""weight": "2/0"}],
        "delta1""#);
        assert!(matches!(automaton_from_json(&bad_weight), Err(FormatError::Weight { .. })));
        let bad_state = DOUBLING.replace(r#""to": "q0", "ce": 1, "weight": "2"}],
        "delta1""#, r#""to": "q9", "ce": 1, "weight": "2"}],
        "delta1""#);
        assert!(matches!(automaton_from_json(&bad_state), Err(FormatError::Model(_))));
        let gf = DOUBLING.replace(r#"{"kind": "rational"}"#, r#"{"kind": "gf", "p": 8}"#);
        assert!(matches!(automaton_from_json(&gf), Err(FormatError::Field(_))));
    }

    #[test]
    fn duplicates_and_decrements_are_violations() {
        let dup = DOUBLING.replace(
            r#""delta1": ["#,
            r#""delta1": [{"from": "q0", "on": "a", "to": "q0", "ce": 0, "weight": "3"}, "#,
        );
        let loaded = automaton_from_json(&dup).unwrap();
        assert_eq!(loaded.violations.len(), 1);
        assert_eq!(loaded.violations[0].to_string(), "duplicate transition at delta1 (q0,a)");

        let dec = DOUBLING.replace(r#""ce": 1, "weight": "2"}],
        "delta1""#, r#""ce": -1, "weight": "2"}],
        "delta1""#);
        let v = automaton_from_json(&dec).unwrap().all_violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "zero-test decrement at delta0 (q0,a)");
    }

    #[test]
    fn dwa_round_trip() {
        let b = crate::unfold::unfold(&doubling(), &3u64.into(), 100).unwrap();
        let text = serde_json::to_string(&dwa_to_json(&b)).unwrap();
        assert!(text.contains(r#""q0#3""#));
        assert_eq!(dwa_from_json(&text).unwrap(), b);
        let uninit = crate::dwa::underlying_wa(&doubling());
        let text = serde_json::to_string(&dwa_to_json(&uninit)).unwrap();
        assert!(!text.contains("initial"));
        assert_eq!(dwa_from_json(&text).unwrap(), uninit);
    }

    #[test]
    fn gf_field_round_trip() {
        let text = DOUBLING.replace(r#"{"kind": "rational"}"#, r#"{"kind": "gf", "p": 7}"#);
        let a = automaton_from_json(&text).unwrap().automaton;
        assert_eq!(a.field(), FieldSpec::prime(7).unwrap());
        let json = serde_json::to_value(automaton_to_json(&a)).unwrap();
        assert_eq!(json["field"], serde_json::json!({"kind": "gf", "p": 7}));
    }
}

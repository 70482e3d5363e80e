//! Incremental row-echelon basis over sparse vectors with exact entries.

use std::collections::{BTreeMap, HashMap};

use crate::field::FieldElement;

/// Sparse vector: coordinate index to non-zero entry.
pub type SparseVector = BTreeMap<usize, FieldElement>;

/// Rows are kept with their smallest coordinate as pivot, normalised to one.
/// Reducing a vector therefore only ever introduces coordinates above the
/// pivot being eliminated, so one left-to-right sweep suffices.
#[derive(Debug, Clone, Default)]
pub struct Basis {
    rows: Vec<Vec<(usize, FieldElement)>>,
    pivots: HashMap<usize, usize>,
}

impl Basis {
    pub fn new() -> Self {
        Basis::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The residue of `v` after elimination against the basis; empty iff `v`
    /// lies in the span.
    pub fn reduce(&self, mut v: SparseVector) -> SparseVector {
        v.retain(|_, x| !x.is_zero());
        let mut cursor = 0usize;
        loop {
            let next = v
                .range(cursor..)
                .find(|(k, _)| self.pivots.contains_key(k))
                .map(|(k, x)| (*k, x.clone()));
            let Some((pivot, coefficient)) = next else {
                return v;
            };
            for (k, x) in &self.rows[self.pivots[&pivot]] {
                let delta = &coefficient * x;
                let updated = match v.get(k) {
                    Some(cur) => cur - &delta,
                    None => delta.negate(),
                };
                if updated.is_zero() {
                    v.remove(k);
                } else {
                    v.insert(*k, updated);
                }
            }
            cursor = pivot + 1;
        }
    }

    /// Adds `v` if it is independent of the current rows. Returns whether the
    /// basis grew.
    pub fn insert(&mut self, v: SparseVector) -> bool {
        let reduced = self.reduce(v);
        let Some((&pivot, lead)) = reduced.iter().next() else {
            return false;
        };
        let scale = lead.inverse().expect("pivot entries are non-zero");
        let row: Vec<(usize, FieldElement)> = reduced.iter().map(|(k, x)| (*k, x * &scale)).collect();
        self.pivots.insert(pivot, self.rows.len());
        self.rows.push(row);
        true
    }

    pub fn contains(&self, v: SparseVector) -> bool {
        self.reduce(v).is_empty()
    }
}

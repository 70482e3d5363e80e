//! Weighted real-time one-counter automata with a deterministic transition
//! structure, and a polynomial-time equivalence check.

pub mod automaton;
pub mod basis;
pub mod dwa;
pub mod equiv;
pub mod field;
pub mod format;
pub mod testkit;
pub mod unfold;

pub use automaton::{
    Alphabet, Configuration, Dwroca, DwrocaBuilder, Guard, ModelError, PumpingIntervals, Run, RunOutcome,
    StateId, SymbolId, Transition, Violation, Word,
};
pub use dwa::{Dwa, DwaError, WaConfig, WeightedView, Witness};
pub use field::{FieldElement, FieldError, FieldSpec};
pub use unfold::{compute_bounds, unfold, BoundReport, UnfoldBound, UnfoldError, Unfolding};
pub use equiv::{check_equivalence, EquivError, EquivOptions, EquivalenceVerdict, Mode, Outcome};

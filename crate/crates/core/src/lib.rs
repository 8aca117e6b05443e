//! Büchi automata on k-ary trees whose transitions carry RCC8 constraints
//! over chains of concrete features.
//!
//! * [`relalg`]: the RCC8 algebra and a qualitative constraint solver.
//! * [`formula`]: positive boolean transition formulas and their DNF.
//! * [`automata`]: alternating and nondeterministic automata, run prefixes.
//! * [`simulate`]: alternating to nondeterministic translation.
//! * [`emptiness`]: the finite-tree-model emptiness search and witness checks.
//! * [`dsl`]: the textual automaton format.

pub mod automata;
pub mod dsl;
pub mod emptiness;
pub mod formula;
pub mod relalg;
pub mod simulate;
pub mod word;

pub use automata::{AlternatingAutomaton, NondetAutomaton};
pub use relalg::{Atom, Qcsp, Relation};

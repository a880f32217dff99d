//! The Tsetlin Machine: automata, clauses, voting, feedback and training.

mod automaton;
mod clause;
mod machine;

pub use automaton::{Action, TsetlinAutomaton};
pub use clause::{Clause, Mode, Polarity};
pub use machine::{
    default_class_weights, feedback_probability, EpochRecord, LearningCurve, TmParams,
    TsetlinMachine, DEFAULT_SEED,
};

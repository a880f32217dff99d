//! Clinical and statistical comparators.

pub mod eortc;
pub mod logistic;

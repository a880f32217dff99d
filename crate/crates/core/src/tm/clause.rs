use rand::Rng;
use serde::{Deserialize, Serialize};

use super::automaton::TsetlinAutomaton;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schema::{Label, LiteralVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Votes for recurrence.
    Positive,
    /// Votes for no recurrence.
    Negative,
}

impl Polarity {
    pub fn votes_for(self) -> Label {
        match self {
            Polarity::Positive => Label::Recurrence,
            Polarity::Negative => Label::NoRecurrence,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

/// Clause evaluation mode. Empty clauses fire while training and never at inference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A conjunction over literals, learned by one automaton per literal.
///
/// Automaton states are stored flat; a packed include mask mirrors the
/// `state > N` set so evaluation is a word-wise `include & !x == 0` test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    polarity: Polarity,
    n: u16,
    states: Vec<u16>,
    include: Vec<u64>,
    included: usize,
}

impl Clause {
    /// All automata start at state `N`, the exclude side of the boundary.
    pub fn new(polarity: Polarity, literals: usize, n: u16) -> Self {
        assert!((1..=u16::MAX / 2).contains(&n), "states per action out of range");
        Clause {
            polarity,
            n,
            states: vec![n; literals],
            include: vec![0; literals.div_ceil(64)],
            included: 0,
        }
    }

    pub fn from_states(polarity: Polarity, n: u16, states: Vec<u16>) -> Result<Self> {
        if n == 0 || n > u16::MAX / 2 {
            return Err(Error::InvalidParams(format!("states per action {n} out of range")));
        }
        if let Some(bad) = states.iter().find(|&&s| s < 1 || s > 2 * n) {
            return Err(Error::InvalidParams(format!(
                "automaton state {bad} outside [1, {}]",
                2 * n
            )));
        }
        let mut clause = Clause::new(polarity, states.len(), n);
        for (i, &s) in states.iter().enumerate() {
            clause.states[i] = s;
            if s > n {
                clause.include[i / 64] |= 1 << (i % 64);
                clause.included += 1;
            }
        }
        Ok(clause)
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn literal_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u16] {
        &self.states
    }

    pub fn states_per_action(&self) -> u16 {
        self.n
    }

    pub fn automaton(&self, literal: usize) -> TsetlinAutomaton {
        TsetlinAutomaton::new(self.states[literal], self.n)
    }

    pub fn is_included(&self, literal: usize) -> bool {
        self.include[literal / 64] >> (literal % 64) & 1 == 1
    }

    /// Literal indices whose automaton selects include.
    pub fn included_literals(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.is_included(i)).collect()
    }

    pub fn included_count(&self) -> usize {
        self.included
    }

    pub fn is_empty(&self) -> bool {
        self.included == 0
    }

    /// Conjunction of included literals, checked against the input length.
    pub fn eval(&self, x: &LiteralVector, mode: Mode) -> Result<bool> {
        if x.len() != self.states.len() {
            return Err(Error::LengthMismatch {
                expected: self.states.len(),
                actual: x.len(),
            });
        }
        Ok(self.fires(x, mode))
    }

    #[inline]
    pub(crate) fn fires(&self, x: &LiteralVector, mode: Mode) -> bool {
        if self.included == 0 {
            return mode == Mode::Train;
        }
        self.include
            .iter()
            .zip(x.words())
            .all(|(&inc, &word)| inc & !word == 0)
    }

    #[inline]
    fn increment(&mut self, literal: usize) {
        let s = &mut self.states[literal];
        if *s < 2 * self.n {
            *s += 1;
            if *s == self.n + 1 {
                self.include[literal / 64] |= 1 << (literal % 64);
                self.included += 1;
            }
        }
    }

    #[inline]
    fn decrement(&mut self, literal: usize) {
        let s = &mut self.states[literal];
        if *s > 1 {
            *s -= 1;
            if *s == self.n {
                self.include[literal / 64] &= !(1 << (literal % 64));
                self.included -= 1;
            }
        }
    }

    /// Type I feedback (recognition), with `fired` the clause output in train mode.
    ///
    /// Fired: true literals move toward include with probability `(s-1)/s`,
    /// false (hence excluded) literals move toward exclude with probability `1/s`.
    /// Not fired: every literal moves toward exclude with probability `1/s`.
    pub fn type_i_feedback<F: Real, R: Rng + ?Sized>(
        &mut self,
        x: &LiteralVector,
        fired: bool,
        specificity: F,
        rng: &mut R,
    ) {
        let s = specificity.as_f64();
        let p_exclude = 1.0 / s;
        let p_include = (s - 1.0) / s;
        for literal in 0..self.states.len() {
            if fired {
                if x.get(literal) {
                    if rng.gen::<f64>() < p_include {
                        self.increment(literal);
                    }
                } else if !self.is_included(literal) && rng.gen::<f64>() < p_exclude {
                    self.decrement(literal);
                }
            } else if rng.gen::<f64>() < p_exclude {
                self.decrement(literal);
            }
        }
    }

    /// Type II feedback (rejection): when the clause fired, every false and
    /// excluded literal moves one step toward include.
    pub fn type_ii_feedback(&mut self, x: &LiteralVector, fired: bool) {
        if !fired {
            return;
        }
        for w in 0..self.include.len() {
            let mut candidates = !x.words()[w] & !self.include[w];
            while candidates != 0 {
                let bit = candidates.trailing_zeros() as usize;
                candidates &= candidates - 1;
                let literal = w * 64 + bit;
                if literal >= self.states.len() {
                    break;
                }
                self.increment(literal);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::rngs::mock::StepRng;

    use super::*;

    /// Every `gen::<f64>()` draw is 0.0.
    fn always() -> StepRng {
        StepRng::new(0, 0)
    }

    /// Every `gen::<f64>()` draw is just below 1.0.
    fn never() -> StepRng {
        StepRng::new(u64::MAX, 0)
    }

    fn x(raw: &[bool]) -> LiteralVector {
        LiteralVector::from_raw(raw)
    }

    // literals for 3 raw bits: x0 x1 x2 !x0 !x1 !x2
    fn clause_including(literals: &[usize]) -> Clause {
        let mut states = vec![100u16; 6];
        for &l in literals {
            states[l] = 150;
        }
        Clause::from_states(Polarity::Positive, 100, states).unwrap()
    }

    #[test]
    fn eval_examples() {
        // includes x1 and NOT x3 (1-based), i.e. literal 0 and literal 3+2
        let c = clause_including(&[0, 5]);
        assert!(c.eval(&x(&[true, false, false]), Mode::Infer).unwrap());
        assert!(!c.eval(&x(&[true, false, true]), Mode::Infer).unwrap());
        let empty = clause_including(&[]);
        assert!(empty.eval(&x(&[true, true, true]), Mode::Train).unwrap());
        assert!(!empty.eval(&x(&[true, true, true]), Mode::Infer).unwrap());
        assert!(matches!(
            c.eval(&x(&[true]), Mode::Infer),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn type_i_fired_true_literal_includes() {
        let mut c = Clause::new(Polarity::Positive, 2, 100);
        let input = x(&[true]);
        c.type_i_feedback(&input, true, 4.0, &mut always());
        assert_eq!(c.states()[0], 101);
        assert!(c.is_included(0));
        // negation literal is false and excluded: reinforced exclude
        assert_eq!(c.states()[1], 99);
    }

    #[test]
    fn type_i_saturates_at_top() {
        let mut c = Clause::from_states(Polarity::Positive, 100, vec![200, 50]).unwrap();
        c.type_i_feedback(&x(&[true]), true, 4.0, &mut always());
        assert_eq!(c.states()[0], 200);
    }

    #[test]
    fn type_i_not_fired_excludes() {
        let mut c = Clause::from_states(Polarity::Positive, 100, vec![101, 1]).unwrap();
        c.type_i_feedback(&x(&[false]), false, 4.0, &mut always());
        assert_eq!(c.states(), [100, 1]);
        assert!(c.is_empty());
        let mut c = Clause::from_states(Polarity::Positive, 100, vec![101, 101]).unwrap();
        c.type_i_feedback(&x(&[false]), false, 4.0, &mut never());
        assert_eq!(c.states(), [101, 101]);
    }

    #[test]
    fn type_ii_examples() {
        // literal 1 (negation) is false for input [true]
        let mut c = Clause::from_states(Polarity::Negative, 100, vec![100, 100]).unwrap();
        c.type_ii_feedback(&x(&[true]), true);
        assert_eq!(c.states(), [100, 101]);

        let mut c = Clause::from_states(Polarity::Negative, 100, vec![150, 40]).unwrap();
        c.type_ii_feedback(&x(&[false]), true);
        // literal 0 is false but included: untouched; literal 1 true: untouched
        assert_eq!(c.states(), [150, 40]);

        let mut c = Clause::from_states(Polarity::Negative, 100, vec![100, 100]).unwrap();
        c.type_ii_feedback(&x(&[true]), false);
        assert_eq!(c.states(), [100, 100]);
    }

    #[test]
    fn type_ii_handles_multiword_vectors() {
        let raw: Vec<bool> = (0..70).map(|i| i % 3 == 0).collect();
        let input = x(&raw);
        let mut c = Clause::new(Polarity::Negative, 140, 100);
        c.type_ii_feedback(&input, true);
        for l in 0..140 {
            let expected = if input.get(l) { 100 } else { 101 };
            assert_eq!(c.states()[l], expected, "literal {l}");
        }
        assert_eq!(c.included_count(), input.iter().filter(|b| !b).count());
    }

    #[test]
    fn from_states_rejects_out_of_bounds() {
        assert!(Clause::from_states(Polarity::Positive, 100, vec![0]).is_err());
        assert!(Clause::from_states(Polarity::Positive, 100, vec![201]).is_err());
    }
}

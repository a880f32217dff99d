use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Include,
    Exclude,
}

/// A two-action Tsetlin automaton with `2N` states.
///
/// States `1..=N` select [`Action::Exclude`], `N+1..=2N` select [`Action::Include`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TsetlinAutomaton {
    state: u16,
    n: u16,
}

impl TsetlinAutomaton {
    /// Panics if `n == 0`, `n > u16::MAX / 2` or `state` is outside `[1, 2n]`.
    pub fn new(state: u16, n: u16) -> Self {
        assert!((1..=u16::MAX / 2).contains(&n), "states per action out of range");
        assert!((1..=2 * n).contains(&state), "state {state} outside [1, {}]", 2 * n);
        TsetlinAutomaton { state, n }
    }

    pub fn state(self) -> u16 {
        self.state
    }

    pub fn states_per_action(self) -> u16 {
        self.n
    }

    pub fn action(self) -> Action {
        if self.state > self.n {
            Action::Include
        } else {
            Action::Exclude
        }
    }

    /// Moves one state toward the include end, saturating at `2N`.
    pub fn increment(&mut self) {
        if self.state < 2 * self.n {
            self.state += 1;
        }
    }

    /// Moves one state toward the exclude end, saturating at `1`.
    pub fn decrement(&mut self) {
        if self.state > 1 {
            self.state -= 1;
        }
    }
}

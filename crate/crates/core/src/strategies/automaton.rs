use serde::{Deserialize, Serialize};

use crate::games::Action;

/// A deterministic Moore machine: each state emits an action and moves on the
/// opponent's last action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyAutomaton {
    pub name: String,
    pub initial: usize,
    /// Action emitted in each state.
    pub actions: Vec<Action>,
    /// `transitions[state][opponent_action.index()]` is the next state.
    pub transitions: Vec<[usize; 2]>,
    /// When reputations are public, play C against good-standing opponents
    /// and D against bad-standing ones instead of reading `actions`.
    #[serde(default)]
    pub reputation_conditioned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("automaton has no states")]
    Empty,
    #[error("actions and transitions disagree on state count ({actions} vs {transitions})")]
    ShapeMismatch { actions: usize, transitions: usize },
    #[error("state {0} out of range")]
    StateOutOfRange(usize),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

impl StrategyAutomaton {
    pub fn new(
        name: impl Into<String>,
        initial: usize,
        actions: Vec<Action>,
        transitions: Vec<[usize; 2]>,
    ) -> Result<Self, AutomatonError> {
        let a = StrategyAutomaton {
            name: name.into(),
            initial,
            actions,
            transitions,
            reputation_conditioned: false,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), AutomatonError> {
        if self.actions.is_empty() {
            return Err(AutomatonError::Empty);
        }
        if self.actions.len() != self.transitions.len() {
            return Err(AutomatonError::ShapeMismatch {
                actions: self.actions.len(),
                transitions: self.transitions.len(),
            });
        }
        let n = self.actions.len();
        if self.initial >= n {
            return Err(AutomatonError::StateOutOfRange(self.initial));
        }
        if let Some(&bad) = self.transitions.iter().flatten().find(|&&s| s >= n) {
            return Err(AutomatonError::StateOutOfRange(bad));
        }
        Ok(())
    }

    pub fn all_c() -> Self {
        Self::new("allc", 0, vec![Action::C], vec![[0, 0]]).expect("valid")
    }

    pub fn all_d() -> Self {
        Self::new("alld", 0, vec![Action::D], vec![[0, 0]]).expect("valid")
    }

    /// Cooperate until the opponent defects once, then defect forever.
    pub fn grim() -> Self {
        Self::new("grim", 0, vec![Action::C, Action::D], vec![[0, 1], [1, 1]]).expect("valid")
    }

    pub fn tit_for_tat() -> Self {
        Self::new("tft", 0, vec![Action::C, Action::D], vec![[0, 1], [0, 1]]).expect("valid")
    }

    /// Grim in private play; with public reputations it cooperates exactly
    /// with good-standing opponents.
    pub fn reputation_grim() -> Self {
        StrategyAutomaton {
            name: "reputation-grim".into(),
            reputation_conditioned: true,
            ..Self::grim()
        }
    }

    pub fn by_name(name: &str) -> Result<Self, AutomatonError> {
        match name {
            "allc" => Ok(Self::all_c()),
            "alld" => Ok(Self::all_d()),
            "grim" => Ok(Self::grim()),
            "tft" => Ok(Self::tit_for_tat()),
            "reputation-grim" => Ok(Self::reputation_grim()),
            other => Err(AutomatonError::UnknownStrategy(other.to_string())),
        }
    }

    pub fn state_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, state: usize) -> Action {
        self.actions[state]
    }

    pub fn next(&self, state: usize, opponent: Action) -> usize {
        self.transitions[state][opponent.index()]
    }

    /// Action given the opponent's public standing, when reputations are visible.
    pub fn action_with_reputation(&self, state: usize, opponent_good: Option<bool>) -> Action {
        match (self.reputation_conditioned, opponent_good) {
            (true, Some(true)) => Action::C,
            (true, Some(false)) => Action::D,
            _ => self.action(state),
        }
    }
}

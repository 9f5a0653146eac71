//! Actions, payoffs and round resolution for the repeated two-action game.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// One of the two moves available each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "C")]
    Cooperate,
    #[serde(rename = "D")]
    Defect,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Cooperate, Action::Defect];

    /// Canonical single-letter code.
    pub fn code(self) -> char {
        match self {
            Action::Cooperate => 'C',
            Action::Defect => 'D',
        }
    }

    pub fn from_code(c: char) -> Option<Action> {
        match c.to_ascii_uppercase() {
            'C' => Some(Action::Cooperate),
            'D' => Some(Action::Defect),
            _ => None,
        }
    }

    pub fn is_cooperate(self) -> bool {
        self == Action::Cooperate
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Integer points awarded per round.
pub type Points = i64;

/// Symmetric payoff table: temptation, reward, punishment and sucker's payoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PayoffMatrix {
    #[serde(rename = "T")]
    pub temptation: Points,
    #[serde(rename = "R")]
    pub reward: Points,
    #[serde(rename = "P")]
    pub punishment: Points,
    #[serde(rename = "S")]
    pub sucker: Points,
}

impl Default for PayoffMatrix {
    fn default() -> Self {
        PayoffMatrix { temptation: 5, reward: 3, punishment: 1, sucker: 0 }
    }
}

/// A violated dilemma inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixViolation {
    /// T > R fails.
    TemptationNotAboveReward,
    /// R > P fails.
    RewardNotAbovePunishment,
    /// P > S fails.
    PunishmentNotAboveSucker,
    /// 2R > T + S fails.
    AlternationBeatsCooperation,
}

impl fmt::Display for MatrixViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixViolation::TemptationNotAboveReward => "T > R fails",
            MatrixViolation::RewardNotAbovePunishment => "R > P fails",
            MatrixViolation::PunishmentNotAboveSucker => "P > S fails",
            MatrixViolation::AlternationBeatsCooperation => "2R > T + S fails",
        })
    }
}

impl PayoffMatrix {
    pub fn new(temptation: Points, reward: Points, punishment: Points, sucker: Points) -> Self {
        PayoffMatrix { temptation, reward, punishment, sucker }
    }

    /// Checks T > R > P > S and 2R > T + S, listing every inequality that fails.
    pub fn validate(&self) -> Result<(), Vec<MatrixViolation>> {
        let mut violations = Vec::new();
        if self.temptation <= self.reward {
            violations.push(MatrixViolation::TemptationNotAboveReward);
        }
        if self.reward <= self.punishment {
            violations.push(MatrixViolation::RewardNotAbovePunishment);
        }
        if self.punishment <= self.sucker {
            violations.push(MatrixViolation::PunishmentNotAboveSucker);
        }
        // i128 so extreme configured values cannot overflow the comparison
        if 2 * (self.reward as i128) <= self.temptation as i128 + self.sucker as i128 {
            violations.push(MatrixViolation::AlternationBeatsCooperation);
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Payoff to the player choosing `own` against `other`.
    pub fn payoff(&self, own: Action, other: Action) -> Points {
        match (own, other) {
            (Action::Cooperate, Action::Cooperate) => self.reward,
            (Action::Cooperate, Action::Defect) => self.sucker,
            (Action::Defect, Action::Cooperate) => self.temptation,
            (Action::Defect, Action::Defect) => self.punishment,
        }
    }

    /// Payoffs for both players of one simultaneous round.
    pub fn resolve(&self, first: Action, second: Action) -> (Points, Points) {
        (self.payoff(first, second), self.payoff(second, first))
    }
}

/// Free-function form of [`PayoffMatrix::validate`].
pub fn validate_matrix(m: &PayoffMatrix) -> Result<(), Vec<MatrixViolation>> {
    m.validate()
}

/// Free-function form of [`PayoffMatrix::resolve`].
pub fn resolve_round(first: Action, second: Action, m: &PayoffMatrix) -> (Points, Points) {
    m.resolve(first, second)
}

/// One resolved round from a single player's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u32,
    pub own_action: Action,
    pub other_action: Action,
    pub own_payoff: Points,
    pub other_payoff: Points,
}

impl RoundOutcome {
    pub fn resolve(round: u32, own: Action, other: Action, m: &PayoffMatrix) -> RoundOutcome {
        let (own_payoff, other_payoff) = m.resolve(own, other);
        RoundOutcome { round, own_action: own, other_action: other, own_payoff, other_payoff }
    }

    /// The same round seen from the opponent's side.
    pub fn mirrored(&self) -> RoundOutcome {
        RoundOutcome {
            round: self.round,
            own_action: self.other_action,
            other_action: self.own_action,
            own_payoff: self.other_payoff,
            other_payoff: self.own_payoff,
        }
    }
}

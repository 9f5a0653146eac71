//! Agent state and policies. Scripted policies exist to drive the engine
//! with known behavior; `ModelBacked` agents are resolved by the engine via a
//! [`ChatBackend`](crate::gateway::ChatBackend).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::game::{Action, Points, RoundOutcome};
use crate::gateway::ModelConfig;
use crate::prompt::Treatment;
use crate::seed::{derive_seed, domain, rng_from_seed, Rng};
use crate::topology::NodeId;

pub type AgentId = NodeId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: AgentId,
    pub round: u32,
    pub text: String,
}

/// Everything one agent knows: its opponents, per-opponent outcomes, and
/// received messages per round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub agent_id: AgentId,
    /// Sorted opponent ids (one in dyadic play, the graph neighborhood otherwise).
    pub neighbors: Vec<AgentId>,
    pub history: BTreeMap<AgentId, Vec<RoundOutcome>>,
    /// `inbox[r - 1]` holds the messages received in round `r`.
    pub inbox: Vec<Vec<Message>>,
    pub score: Points,
}

impl AgentState {
    pub fn new(agent_id: AgentId, mut neighbors: Vec<AgentId>) -> AgentState {
        neighbors.sort_unstable();
        neighbors.dedup();
        let history = neighbors.iter().map(|&n| (n, Vec::new())).collect();
        AgentState { agent_id, neighbors, history, inbox: Vec::new(), score: 0 }
    }

    pub fn completed_rounds(&self) -> u32 {
        self.history.values().map(|h| h.len() as u32).max().unwrap_or(0)
    }

    /// 1-based index of the round being played.
    pub fn current_round(&self) -> u32 {
        self.completed_rounds() + 1
    }

    pub fn last_outcome(&self, opponent: AgentId) -> Option<&RoundOutcome> {
        self.history.get(&opponent).and_then(|h| h.last())
    }

    pub fn record(&mut self, opponent: AgentId, outcome: RoundOutcome) {
        self.score += outcome.own_payoff;
        self.history.entry(opponent).or_default().push(outcome);
    }

    pub fn receive(&mut self, round: u32, messages: Vec<Message>) {
        let idx = round as usize - 1;
        if self.inbox.len() <= idx {
            self.inbox.resize(idx + 1, Vec::new());
        }
        self.inbox[idx].extend(messages);
    }

    /// Messages received in `round`, or an empty slice.
    pub fn messages_for(&self, round: u32) -> &[Message] {
        round.checked_sub(1).and_then(|i| self.inbox.get(i as usize)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Copy of the state as it stood after `rounds` completed rounds.
    pub fn truncated(&self, rounds: u32) -> AgentState {
        let mut out = AgentState::new(self.agent_id, self.neighbors.clone());
        for (&opp, hist) in &self.history {
            for o in hist.iter().take(rounds as usize) {
                out.record(opp, *o);
            }
        }
        out.inbox = self.inbox.iter().take(rounds as usize).cloned().collect();
        out
    }
}

/// Cooperation probability curve over rounds plus a uniform shock of
/// amplitude `noise` per round.
///
/// The shock for round `r` is a pure function of `(shock_seed, r)`, so every
/// agent sharing this policy sees the same shock and the population
/// trajectory carries it. Rounds past the end of the curve reuse its last
/// value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyTrend {
    pub curve: Vec<f64>,
    pub noise: f64,
    #[serde(default)]
    pub shock_seed: u64,
}

impl NoisyTrend {
    pub fn base(&self, round: u32) -> f64 {
        let i = (round as usize).saturating_sub(1).min(self.curve.len().saturating_sub(1));
        self.curve.get(i).copied().unwrap_or(0.5)
    }

    pub fn shock(&self, round: u32) -> f64 {
        if self.noise <= 0.0 {
            return 0.0;
        }
        let mut rng = rng_from_seed(derive_seed(self.shock_seed, domain::TREND_SHOCK, round as u64));
        rng.gen_range(-self.noise..self.noise)
    }

    /// Cooperation probability in `round` after shock and clamping.
    pub fn probability(&self, round: u32) -> f64 {
        (self.base(round) + self.shock(round)).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    AlwaysCooperate,
    AlwaysDefect,
    TitForTat,
    Bernoulli { p_coop: f64 },
    NoisyTrend(NoisyTrend),
    ModelBacked(ModelConfig),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("cooperation probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("trend curve value {0} outside [0, 1]")]
    Curve(f64),
    #[error("trend curve is empty")]
    EmptyCurve,
    #[error("noise amplitude {0} is negative or not finite")]
    Noise(f64),
    #[error("model-backed policies are decided by the engine's backend")]
    NeedsBackend,
}

fn unit(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl Policy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        match self {
            Policy::Bernoulli { p_coop } if !unit(*p_coop) => Err(PolicyError::Probability(*p_coop)),
            Policy::NoisyTrend(t) => {
                if t.curve.is_empty() {
                    return Err(PolicyError::EmptyCurve);
                }
                if let Some(&bad) = t.curve.iter().find(|&&v| !unit(v)) {
                    return Err(PolicyError::Curve(bad));
                }
                if !(t.noise >= 0.0 && t.noise.is_finite()) {
                    return Err(PolicyError::Noise(t.noise));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_model_backed(&self) -> bool {
        matches!(self, Policy::ModelBacked(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Policy::AlwaysCooperate => "always-cooperate",
            Policy::AlwaysDefect => "always-defect",
            Policy::TitForTat => "tit-for-tat",
            Policy::Bernoulli { .. } => "bernoulli",
            Policy::NoisyTrend(_) => "noisy-trend",
            Policy::ModelBacked(_) => "model-backed",
        }
    }
}

/// Scripted decision against `opponent` for the state's current round.
///
/// Bernoulli and NoisyTrend draw exactly one uniform from `rng`; the
/// deterministic policies draw nothing.
pub fn decide(policy: &Policy, state: &AgentState, opponent: AgentId, rng: &mut Rng) -> Result<Action, PolicyError> {
    let coop_if = |p: f64, rng: &mut Rng| {
        if rng.gen::<f64>() < p {
            Action::Cooperate
        } else {
            Action::Defect
        }
    };
    Ok(match policy {
        Policy::AlwaysCooperate => Action::Cooperate,
        Policy::AlwaysDefect => Action::Defect,
        Policy::TitForTat => state.last_outcome(opponent).map_or(Action::Cooperate, |o| o.other_action),
        Policy::Bernoulli { p_coop } => coop_if(*p_coop, rng),
        Policy::NoisyTrend(t) => coop_if(t.probability(state.current_round()), rng),
        Policy::ModelBacked(_) => return Err(PolicyError::NeedsBackend),
    })
}

fn template_word(policy: &Policy) -> &'static str {
    match policy {
        Policy::AlwaysDefect => "compete",
        _ => "cooperate",
    }
}

fn template_sentence(policy: &Policy) -> &'static str {
    match policy {
        Policy::AlwaysDefect => "I will look after my own interests.",
        Policy::TitForTat => "I will match whatever you did last time.",
        _ => "I plan to cooperate with you.",
    }
}

/// Scripted message for the current round, `None` under no messaging.
pub fn compose_message(
    policy: &Policy,
    state: &AgentState,
    treatment: Treatment,
) -> Result<Option<Message>, PolicyError> {
    if policy.is_model_backed() {
        return Err(PolicyError::NeedsBackend);
    }
    let text = match treatment {
        Treatment::NoMessaging => return Ok(None),
        Treatment::OneWord => template_word(policy),
        Treatment::FullMessage => template_sentence(policy),
    };
    Ok(Some(Message { sender: state.agent_id, round: state.current_round(), text: text.into() }))
}

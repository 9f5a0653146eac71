//! Replays a transcript to rebuild each prompt from earlier rounds only.

use cheaptalk_core::agent::AgentState;
use cheaptalk_core::engine::{SimulationConfig, Transcript};
use cheaptalk_core::game::{PayoffMatrix, RoundOutcome};
use cheaptalk_core::prompt::{build_round_prompt, Phase};

/// Rebuilds what agent `rec` knew at the start of `round` from the plays
/// and messages of earlier rounds only.
pub fn knowledge_before(t: &Transcript, agent: usize, round: u32, neighbors: Vec<u32>, m: &PayoffMatrix) -> AgentState {
    let rec = &t.agents[agent];
    let mut s = AgentState::new(rec.id, neighbors);
    for r in rec.rounds.iter().filter(|r| r.round < round) {
        for p in &r.plays {
            s.record(p.opponent, RoundOutcome::resolve(r.round, p.action, p.opponent_action, m));
        }
        if !r.messages_received.is_empty() {
            s.receive(r.round, r.messages_received.clone());
        }
    }
    s
}

/// The first recorded prompt that differs from the prompt rebuilt from
/// strictly earlier rounds plus this round's delivered messages.
pub fn future_dependent_prompt(t: &Transcript, cfg: &SimulationConfig, adjacency: &[Vec<u32>]) -> Option<String> {
    let key = &cfg.condition;
    let mode = key.mode.play_mode();
    for (i, rec) in t.agents.iter().enumerate() {
        for r in &rec.rounds {
            let mut state = knowledge_before(t, i, r.round, adjacency[i].clone(), &cfg.matrix);
            for p in &r.prompts {
                let incoming = match p.phase {
                    Phase::Message => Vec::new(),
                    Phase::Action => r.messages_received.clone(),
                };
                let rebuilt = build_round_prompt(key.regime, &state, p.phase, &incoming, key.treatment, mode).ok();
                if rebuilt.as_deref() != Some(p.text.as_str()) {
                    return Some(format!("agent {i} round {}: {:?}", r.round, p.text));
                }
            }
            if !r.messages_received.is_empty() {
                state.receive(r.round, r.messages_received.clone());
            }
        }
    }
    None
}

//! Core of a laboratory for measuring how pre-play communication changes the
//! stability of cooperation among agents in repeated two-action games.
//!
//! The crate is `no_std` (with `alloc`): it contains the game, network
//! generators, agent policies, prompt construction, completion parsing, the
//! simulation loop and the statistics engine. Transport, file formats and the
//! command line live in the `cheaptalk` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agent;
pub mod engine;
pub mod game;
pub mod gateway;
pub mod prompt;
pub mod seed;
pub mod stats;
pub mod topology;

pub use agent::{AgentId, AgentState, Message, NoisyTrend, Policy};
pub use engine::{ConditionKey, Mode, SimulationConfig, Transcript};
pub use game::{Action, PayoffMatrix, RoundOutcome};
pub use gateway::{ChatBackend, ChatTurn, ModelConfig};
pub use prompt::{ContextFrame, PromptRegime, Treatment};
pub use topology::{gen_graph, Graph, NetworkSpec};

/// Engine version stamped into transcripts and manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

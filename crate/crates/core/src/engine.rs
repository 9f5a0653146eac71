//! Repeated-game orchestration for dyadic pairs and networks.
//!
//! Each simulation is a pure function of its configuration, the policies,
//! the simulation index and (for model-backed agents) the backend's replies.
//! Batch scheduling is left to callers; `run_dyadic`/`run_network` here are
//! the sequential reference.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::agent::{self, AgentId, AgentState, Message, Policy, PolicyError};
use crate::game::{Action, MatrixViolation, PayoffMatrix, Points, RoundOutcome};
use crate::gateway::{self, ChatBackend, ChatTurn, Completion, GatewayError, ModelConfig, ParseError};
use crate::prompt::{
    self, build_round_prompt, build_system_prompt, ContextFrame, Phase, PlayMode, PromptError, PromptRegime,
    TemplateSet, Treatment,
};
use crate::seed::{derive_seed, domain, fnv1a64, rng_from_seed, Rng};
use crate::stats::RoundTally;
use crate::topology::{gen_graph, Graph, NetworkSpec, NodeId, TopologyError, TopologyKind};
use crate::ENGINE_VERSION;

pub const DEFAULT_ROUNDS: u32 = 10;
pub const DEFAULT_DYADIC_SIMULATIONS: u32 = 100;
pub const DEFAULT_NETWORK_SIMULATIONS: u32 = 10;
pub const DEFAULT_NETWORK_AGENTS: u32 = 50;

/// Dyadic play or play on one of the network families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Dyadic,
    ErdosRenyi,
    PowerLaw,
    CorePeriphery,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dyadic => "dyadic",
            Mode::ErdosRenyi => "erdos-renyi",
            Mode::PowerLaw => "power-law",
            Mode::CorePeriphery => "core-periphery",
        }
    }

    pub fn play_mode(self) -> PlayMode {
        if self == Mode::Dyadic {
            PlayMode::Dyadic
        } else {
            PlayMode::Network
        }
    }

    pub fn topology(self) -> Option<TopologyKind> {
        match self {
            Mode::Dyadic => None,
            Mode::ErdosRenyi => Some(TopologyKind::ErdosRenyi),
            Mode::PowerLaw => Some(TopologyKind::PowerLaw),
            Mode::CorePeriphery => Some(TopologyKind::CorePeriphery),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifies one cell of the experiment grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionKey {
    pub model: String,
    pub frame: ContextFrame,
    pub regime: PromptRegime,
    pub treatment: Treatment,
    pub temperature: f64,
    pub mode: Mode,
}

impl ConditionKey {
    /// Stable textual form used for hashing and display.
    pub fn canonical(&self) -> String {
        format!(
            "model={};frame={};regime={};treatment={};temperature={};mode={}",
            self.model, self.frame, self.regime, self.treatment, self.temperature, self.mode
        )
    }

    pub fn fingerprint(&self) -> u64 {
        fnv1a64(self.canonical().as_bytes())
    }

    /// 16-hex-digit id, used as the results directory name.
    pub fn id(&self) -> String {
        format!("{:016x}", self.fingerprint())
    }

    /// Same cell with a different treatment.
    pub fn with_treatment(&self, treatment: Treatment) -> ConditionKey {
        ConditionKey { treatment, ..self.clone() }
    }

    /// Key that must match between the two sides of a messaging comparison.
    pub fn pairing_key(&self) -> String {
        self.with_treatment(Treatment::NoMessaging).canonical()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub condition: ConditionKey,
    pub rounds: u32,
    pub n_simulations: u32,
    /// Agents per network; ignored in dyadic mode.
    pub agents: u32,
    pub matrix: PayoffMatrix,
    pub master_seed: u64,
    /// Graph family parameters for network modes. Defaults follow the mode.
    pub network: Option<NetworkSpec>,
    /// Store system and round prompts in transcripts.
    pub record_prompts: bool,
}

impl SimulationConfig {
    pub fn new(condition: ConditionKey, master_seed: u64) -> SimulationConfig {
        let dyadic = condition.mode == Mode::Dyadic;
        SimulationConfig {
            n_simulations: if dyadic { DEFAULT_DYADIC_SIMULATIONS } else { DEFAULT_NETWORK_SIMULATIONS },
            agents: if dyadic { 2 } else { DEFAULT_NETWORK_AGENTS },
            network: None,
            condition,
            rounds: DEFAULT_ROUNDS,
            matrix: PayoffMatrix::default(),
            master_seed,
            record_prompts: true,
        }
    }

    pub fn simulation_seed(&self, index: u32) -> u64 {
        derive_seed(self.master_seed, domain::SIMULATION, index as u64)
    }

    pub fn graph_seed(&self, index: u32) -> u64 {
        derive_seed(self.master_seed, domain::GRAPH, index as u64)
    }

    /// Network spec for this configuration: the explicit one, or the default
    /// for the mode's family sized to `agents`.
    pub fn network_spec(&self) -> Option<NetworkSpec> {
        let kind = self.condition.mode.topology()?;
        Some(self.network.clone().unwrap_or_else(|| NetworkSpec { n: self.agents, ..NetworkSpec::default_for(kind) }))
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.rounds == 0 {
            return Err(EngineError::Config("rounds must be at least 1".into()));
        }
        self.matrix.validate().map_err(EngineError::Matrix)?;
        if let Some(spec) = self.network_spec() {
            spec.validate().map_err(EngineError::Topology)?;
            if spec.kind() != self.condition.mode.topology().expect("network mode") {
                return Err(EngineError::Config("network spec family does not match the mode".into()));
            }
            if spec.n != self.agents {
                return Err(EngineError::Config(format!(
                    "network spec has {} nodes but {} agents are configured",
                    spec.n, self.agents
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid payoff matrix: {0:?}")]
    Matrix(Vec<MatrixViolation>),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("graph has {graph} nodes but {expected} agents are configured")]
    GraphSize { graph: u32, expected: u32 },
    #[error("{assigned} policies assigned to {agents} agents")]
    Assignment { assigned: usize, agents: u32 },
}

/// One move against one opponent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Play {
    pub opponent: AgentId,
    pub action: Action,
    pub opponent_action: Action,
    pub payoff: Points,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub phase: Phase,
    pub text: String,
}

/// Cost of one model exchange.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub phase: Phase,
    pub attempts: u32,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRound {
    pub round: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_sent: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages_received: Vec<Message>,
    pub plays: Vec<Play>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prompts: Vec<PromptRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calls: Vec<CallRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub policy: String,
    pub rounds: Vec<AgentRound>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub seed: u64,
    pub node_count: u32,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl GraphRecord {
    pub fn from_graph(graph: &Graph, seed: u64) -> GraphRecord {
        GraphRecord { seed, node_count: graph.node_count(), edges: graph.edges().collect() }
    }

    pub fn to_graph(&self) -> Result<Graph, TopologyError> {
        Graph::from_edges(self.node_count, self.edges.iter().copied())
    }
}

/// Full record of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub condition: ConditionKey,
    pub simulation: u32,
    pub seed: u64,
    pub rounds: u32,
    pub engine_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
    pub agents: Vec<AgentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl Transcript {
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }

    /// Per-round cooperation counts over every agent and every edge.
    pub fn tally(&self) -> RoundTally {
        let mut tally = RoundTally::new(self.rounds as usize);
        for agent in &self.agents {
            for r in &agent.rounds {
                let idx = r.round as usize - 1;
                for play in &r.plays {
                    tally.add(idx, play.action.is_cooperate());
                }
            }
        }
        tally
    }

    /// Every prompt text in the transcript, system prompt first.
    pub fn prompts(&self) -> impl Iterator<Item = &str> {
        self.system_prompt.iter().map(String::as_str).chain(
            self.agents.iter().flat_map(|a| a.rounds.iter()).flat_map(|r| r.prompts.iter().map(|p| p.text.as_str())),
        )
    }

    pub fn score(&self, agent: AgentId) -> Points {
        self.agents
            .iter()
            .find(|a| a.id == agent)
            .map(|a| a.rounds.iter().flat_map(|r| &r.plays).map(|p| p.payoff).sum())
            .unwrap_or(0)
    }
}

/// Tallies of the completed transcripts, plus the number skipped as aborted.
pub fn completed_tallies(transcripts: &[Transcript]) -> (Vec<RoundTally>, usize) {
    let tallies: Vec<RoundTally> = transcripts.iter().filter(|t| t.is_complete()).map(Transcript::tally).collect();
    let aborted = transcripts.len() - tallies.len();
    (tallies, aborted)
}

/// Why a simulation stopped early.
#[derive(Debug, Clone, PartialEq)]
struct Abort(String);

impl Abort {
    fn at(agent: AgentId, round: u32, phase: Phase, cause: impl fmt::Display) -> Abort {
        let phase = match phase {
            Phase::Message => "message",
            Phase::Action => "action",
        };
        Abort(format!("agent {agent}, round {round}, {phase} phase: {cause}"))
    }
}

/// Conversation state of one model-backed agent.
struct ModelSeat<'p> {
    config: &'p ModelConfig,
    turns: Vec<ChatTurn>,
    calls: u64,
}

/// Context shared by all simulations of a run.
pub struct Engine<'a, B: ChatBackend + ?Sized> {
    pub templates: &'a TemplateSet,
    pub backend: &'a B,
}

impl<'a, B: ChatBackend + ?Sized> Clone for Engine<'a, B> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<'a, B: ChatBackend + ?Sized> Copy for Engine<'a, B> {}

fn reprompt(phase: Phase, treatment: Treatment, mode: PlayMode) -> &'static str {
    match (phase, mode) {
        (Phase::Action, PlayMode::Dyadic) => {
            "Your reply could not be read. Answer again and finish with a line ACTION: C or ACTION: D."
        }
        (Phase::Action, PlayMode::Network) => {
            "Your reply could not be read. Answer again with exactly one line AGENT_<id>: C or AGENT_<id>: D per neighbor."
        }
        (Phase::Message, _) if treatment == Treatment::OneWord => {
            "Your reply could not be read. Answer again with a single word."
        }
        (Phase::Message, _) => "Your reply could not be read. Answer again with one sentence.",
    }
}

/// Per-round data collected for one agent before it is written out.
#[derive(Default)]
struct RoundLog {
    message_sent: Option<String>,
    prompts: Vec<PromptRecord>,
    calls: Vec<CallRecord>,
}

struct Sim<'e, 'p, B: ChatBackend + ?Sized> {
    engine: Engine<'e, B>,
    cfg: &'p SimulationConfig,
    policies: Vec<&'p Policy>,
    states: Vec<AgentState>,
    seats: Vec<Option<ModelSeat<'p>>>,
    records: Vec<AgentRecord>,
    seed: u64,
    rng: Rng,
    system_prompt: Option<String>,
}

impl<'e, 'p, B: ChatBackend + ?Sized> Sim<'e, 'p, B> {
    fn new(
        engine: Engine<'e, B>,
        cfg: &'p SimulationConfig,
        policies: Vec<&'p Policy>,
        adjacency: Vec<Vec<AgentId>>,
        index: u32,
    ) -> Result<Self, EngineError> {
        let key = &cfg.condition;
        let needs_prompts = cfg.record_prompts || policies.iter().any(|p| p.is_model_backed());
        let system_prompt = if needs_prompts {
            Some(build_system_prompt(
                engine.templates,
                key.frame,
                key.regime,
                &cfg.matrix,
                key.treatment,
                key.mode.play_mode(),
            )?)
        } else {
            None
        };
        let seats = policies
            .iter()
            .map(|p| match p {
                Policy::ModelBacked(config) => Some(ModelSeat {
                    config,
                    turns: vec![ChatTurn::system(system_prompt.clone().unwrap_or_default())],
                    calls: 0,
                }),
                _ => None,
            })
            .collect();
        let states: Vec<AgentState> =
            adjacency.into_iter().enumerate().map(|(i, nbrs)| AgentState::new(i as AgentId, nbrs)).collect();
        let records = policies
            .iter()
            .enumerate()
            .map(|(i, p)| AgentRecord { id: i as AgentId, policy: p.label().to_string(), rounds: Vec::new() })
            .collect();
        let seed = cfg.simulation_seed(index);
        Ok(Sim {
            engine,
            cfg,
            policies,
            states,
            seats,
            records,
            seed,
            rng: rng_from_seed(seed),
            system_prompt: if cfg.record_prompts { system_prompt } else { None },
        })
    }

    fn mode(&self) -> PlayMode {
        self.cfg.condition.mode.play_mode()
    }

    fn wants_prompt(&self, agent: usize) -> bool {
        self.cfg.record_prompts || self.seats[agent].is_some()
    }

    fn round_prompt(&self, agent: usize, phase: Phase, incoming: &[Message]) -> Result<String, PromptError> {
        let key = &self.cfg.condition;
        build_round_prompt(key.regime, &self.states[agent], phase, incoming, key.treatment, self.mode())
    }

    /// Sends `prompt` to the agent's model and parses the reply, re-prompting
    /// once on a parse failure.
    fn ask<T>(
        &mut self,
        agent: usize,
        phase: Phase,
        prompt: String,
        log: &mut RoundLog,
        parse: impl Fn(&str) -> Result<T, ParseError>,
    ) -> Result<T, Abort> {
        let round = self.states[agent].current_round();
        let treatment = self.cfg.condition.treatment;
        let mode = self.mode();
        let backend = self.engine.backend;
        let sim_seed = self.seed;
        let seat = self.seats[agent].as_mut().expect("model-backed agent has a seat");
        seat.turns.push(ChatTurn::user(prompt));
        let mut record = CallRecord { phase, attempts: 0, latency_ms: 0, prompt_tokens: None, completion_tokens: None };
        let mut outcome = Err(ParseError::NoAction);
        for attempt in 0..2 {
            let request_seed = seat
                .config
                .sampler_seed
                .map(|s| derive_seed(s ^ sim_seed, domain::SAMPLER, ((agent as u64) << 32) | seat.calls));
            seat.calls += 1;
            record.attempts += 1;
            let reply: Result<Completion, GatewayError> = backend.complete(seat.config, &seat.turns, request_seed);
            let reply = match reply {
                Ok(c) => c,
                Err(e) => {
                    log.calls.push(record);
                    return Err(Abort::at(agent as AgentId, round, phase, e));
                }
            };
            record.latency_ms += reply.latency_ms;
            record.prompt_tokens = add_tokens(record.prompt_tokens, reply.prompt_tokens);
            record.completion_tokens = add_tokens(record.completion_tokens, reply.completion_tokens);
            outcome = parse(&reply.text);
            seat.turns.push(ChatTurn::assistant(reply.text));
            if outcome.is_ok() || attempt == 1 {
                break;
            }
            seat.turns.push(ChatTurn::user(reprompt(phase, treatment, mode)));
        }
        log.calls.push(record);
        outcome.map_err(|e| Abort::at(agent as AgentId, round, phase, GatewayError::Parse(e)))
    }

    fn compose(&mut self, agent: usize, log: &mut RoundLog) -> Result<String, Abort> {
        let round = self.states[agent].current_round();
        let treatment = self.cfg.condition.treatment;
        let prompt = if self.wants_prompt(agent) {
            let p = self
                .round_prompt(agent, Phase::Message, &[])
                .map_err(|e| Abort::at(agent as AgentId, round, Phase::Message, e))?;
            log.prompts.push(PromptRecord { phase: Phase::Message, text: p.clone() });
            Some(p)
        } else {
            None
        };
        if self.seats[agent].is_some() {
            let prompt = prompt.expect("model agents always get prompts");
            self.ask(agent, Phase::Message, prompt, log, |t| gateway::parse_message(t, treatment))
        } else {
            let msg = agent::compose_message(self.policies[agent], &self.states[agent], treatment)
                .map_err(|e| Abort::at(agent as AgentId, round, Phase::Message, e))?;
            Ok(msg.map(|m| m.text).unwrap_or_default())
        }
    }

    /// Actions of `agent` toward each of its neighbors, in neighbor order.
    fn act(&mut self, agent: usize, log: &mut RoundLog) -> Result<Vec<(AgentId, Action)>, Abort> {
        let round = self.states[agent].current_round();
        let neighbors = self.states[agent].neighbors.clone();
        if neighbors.is_empty() {
            return Ok(Vec::new());
        }
        let prompt = if self.wants_prompt(agent) {
            let incoming = self.states[agent].messages_for(round).to_vec();
            let p = self
                .round_prompt(agent, Phase::Action, &incoming)
                .map_err(|e| Abort::at(agent as AgentId, round, Phase::Action, e))?;
            log.prompts.push(PromptRecord { phase: Phase::Action, text: p.clone() });
            Some(p)
        } else {
            None
        };
        if self.seats[agent].is_some() {
            let prompt = prompt.expect("model agents always get prompts");
            match self.mode() {
                PlayMode::Dyadic => {
                    let a = self.ask(agent, Phase::Action, prompt, log, gateway::parse_action)?;
                    Ok(vec![(neighbors[0], a)])
                }
                PlayMode::Network => {
                    let map: BTreeMap<NodeId, Action> =
                        self.ask(agent, Phase::Action, prompt, log, |t| gateway::parse_network_actions(t, &neighbors))?;
                    Ok(map.into_iter().collect())
                }
            }
        } else {
            neighbors
                .iter()
                .map(|&n| {
                    agent::decide(self.policies[agent], &self.states[agent], n, &mut self.rng)
                        .map(|a| (n, a))
                        .map_err(|e| Abort::at(agent as AgentId, round, Phase::Action, e))
                })
                .collect()
        }
    }

    fn play_round(&mut self, round: u32) -> Result<(), Abort> {
        let n = self.states.len();
        let mut logs: Vec<RoundLog> = (0..n).map(|_| RoundLog::default()).collect();

        // Message phase: everyone composes before anything is delivered.
        let mut delivered: Vec<Vec<Message>> = vec![Vec::new(); n];
        if self.cfg.condition.treatment.is_messaging() {
            let mut outgoing = Vec::with_capacity(n);
            for (agent, log) in logs.iter_mut().enumerate() {
                if self.states[agent].neighbors.is_empty() {
                    outgoing.push(None);
                    continue;
                }
                let text = self.compose(agent, log)?;
                log.message_sent = Some(text.clone());
                outgoing.push(Some(Message { sender: agent as AgentId, round, text }));
            }
            for (agent, inbox) in delivered.iter_mut().enumerate() {
                for &nb in &self.states[agent].neighbors {
                    if let Some(m) = &outgoing[nb as usize] {
                        inbox.push(m.clone());
                    }
                }
            }
            for (state, inbox) in self.states.iter_mut().zip(&delivered) {
                state.receive(round, inbox.clone());
            }
        }

        // Action phase: every agent commits before any outcome is resolved.
        let mut chosen: Vec<BTreeMap<AgentId, Action>> = Vec::with_capacity(n);
        for (agent, log) in logs.iter_mut().enumerate() {
            chosen.push(self.act(agent, log)?.into_iter().collect());
        }

        let mut plays: Vec<Vec<Play>> = vec![Vec::new(); n];
        for u in 0..n {
            for &v in &self.states[u].neighbors.clone() {
                if (v as usize) < u {
                    continue;
                }
                let a_u = chosen[u][&v];
                let a_v = chosen[v as usize][&(u as AgentId)];
                let outcome = RoundOutcome::resolve(round, a_u, a_v, &self.cfg.matrix);
                self.states[u].record(v, outcome);
                self.states[v as usize].record(u as AgentId, outcome.mirrored());
                plays[u].push(Play { opponent: v, action: a_u, opponent_action: a_v, payoff: outcome.own_payoff });
                plays[v as usize].push(Play {
                    opponent: u as AgentId,
                    action: a_v,
                    opponent_action: a_u,
                    payoff: outcome.other_payoff,
                });
            }
        }
        for (agent, ((log, mut agent_plays), received)) in logs.into_iter().zip(plays).zip(delivered).enumerate() {
            agent_plays.sort_by_key(|p| p.opponent);
            self.records[agent].rounds.push(AgentRound {
                round,
                message_sent: log.message_sent,
                messages_received: received,
                plays: agent_plays,
                prompts: log.prompts,
                calls: log.calls,
            });
        }
        Ok(())
    }

    fn run(mut self, index: u32, graph: Option<GraphRecord>) -> Transcript {
        let mut aborted = None;
        for round in 1..=self.cfg.rounds {
            if let Err(Abort(reason)) = self.play_round(round) {
                aborted = Some(reason);
                break;
            }
        }
        Transcript {
            condition: self.cfg.condition.clone(),
            simulation: index,
            seed: self.seed,
            rounds: self.cfg.rounds,
            engine_version: ENGINE_VERSION.to_string(),
            graph,
            system_prompt: self.system_prompt,
            agents: self.records,
            aborted,
        }
    }
}

fn add_tokens(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
    }
}

impl<'a, B: ChatBackend + ?Sized> Engine<'a, B> {
    pub fn new(templates: &'a TemplateSet, backend: &'a B) -> Self {
        Engine { templates, backend }
    }

    fn check_dyadic(cfg: &SimulationConfig, policies: &[Policy; 2]) -> Result<(), EngineError> {
        cfg.validate()?;
        if cfg.condition.mode != Mode::Dyadic {
            return Err(EngineError::Config(format!("mode {} is not dyadic", cfg.condition.mode)));
        }
        for p in policies {
            p.validate()?;
        }
        Ok(())
    }

    /// Plays simulation `index` of a dyadic condition.
    pub fn run_dyadic_simulation(
        &self,
        cfg: &SimulationConfig,
        policies: &[Policy; 2],
        index: u32,
    ) -> Result<Transcript, EngineError> {
        Self::check_dyadic(cfg, policies)?;
        let sim = Sim::new(*self, cfg, policies.iter().collect(), vec![vec![1], vec![0]], index)?;
        Ok(sim.run(index, None))
    }

    /// All `n_simulations` dyadic games, in index order.
    pub fn run_dyadic(&self, cfg: &SimulationConfig, policies: &[Policy; 2]) -> Result<Vec<Transcript>, EngineError> {
        (0..cfg.n_simulations).map(|i| self.run_dyadic_simulation(cfg, policies, i)).collect()
    }

    fn check_network(cfg: &SimulationConfig, graph: &Graph, policies: &[Policy]) -> Result<(), EngineError> {
        if cfg.condition.mode == Mode::Dyadic {
            return Err(EngineError::Config("network run requested for a dyadic condition".into()));
        }
        if cfg.rounds == 0 {
            return Err(EngineError::Config("rounds must be at least 1".into()));
        }
        cfg.matrix.validate().map_err(EngineError::Matrix)?;
        if graph.node_count() != cfg.agents {
            return Err(EngineError::GraphSize { graph: graph.node_count(), expected: cfg.agents });
        }
        if policies.len() != cfg.agents as usize {
            return Err(EngineError::Assignment { assigned: policies.len(), agents: cfg.agents });
        }
        for p in policies {
            p.validate()?;
        }
        Ok(())
    }

    /// Plays simulation `index` on a given graph. `policies[i]` drives node `i`.
    pub fn run_network_simulation(
        &self,
        cfg: &SimulationConfig,
        graph: &Graph,
        graph_seed: u64,
        policies: &[Policy],
        index: u32,
    ) -> Result<Transcript, EngineError> {
        Self::check_network(cfg, graph, policies)?;
        let sim = Sim::new(*self, cfg, policies.iter().collect(), graph.adjacency(), index)?;
        Ok(sim.run(index, Some(GraphRecord::from_graph(graph, graph_seed))))
    }

    /// All simulations on one fixed graph.
    pub fn run_network(
        &self,
        cfg: &SimulationConfig,
        graph: &Graph,
        policies: &[Policy],
    ) -> Result<Vec<Transcript>, EngineError> {
        (0..cfg.n_simulations).map(|i| self.run_network_simulation(cfg, graph, 0, policies, i)).collect()
    }

    /// Simulation `index` on a fresh graph drawn from the configured family
    /// with seed [`SimulationConfig::graph_seed`].
    pub fn run_generated_network_simulation(
        &self,
        cfg: &SimulationConfig,
        policies: &[Policy],
        index: u32,
    ) -> Result<Transcript, EngineError> {
        cfg.validate()?;
        let spec = cfg.network_spec().ok_or_else(|| EngineError::Config("dyadic condition has no network".into()))?;
        let seed = cfg.graph_seed(index);
        let graph = gen_graph(&spec, seed)?;
        self.run_network_simulation(cfg, &graph, seed, policies, index)
    }

    /// One freshly generated network per simulation, in index order.
    pub fn run_generated_networks(
        &self,
        cfg: &SimulationConfig,
        policies: &[Policy],
    ) -> Result<Vec<Transcript>, EngineError> {
        (0..cfg.n_simulations).map(|i| self.run_generated_network_simulation(cfg, policies, i)).collect()
    }
}

/// Policies for every node, cycling through `pattern`.
pub fn assign_cyclic(pattern: &[Policy], agents: u32) -> Vec<Policy> {
    (0..agents as usize).map(|i| pattern[i % pattern.len()].clone()).collect()
}

/// Spec the network runner would use for the given mode and size.
pub fn default_network_spec(mode: Mode, agents: u32) -> Option<NetworkSpec> {
    mode.topology().map(|kind| NetworkSpec { n: agents, ..NetworkSpec::default_for(kind) })
}

/// Checks a prompt for leaks of the game's name or the horizon.
pub fn prompt_leak(text: &str, horizon: u32) -> Option<prompt::Leak> {
    prompt::find_leak(text, horizon)
}

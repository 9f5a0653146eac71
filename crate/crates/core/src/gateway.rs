//! Model-facing types and the parsers that turn free-form completions into
//! actions and messages. The HTTP transport lives in the std companion crate
//! and plugs in through [`ChatBackend`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::game::Action;
use crate::prompt::Treatment;
use crate::topology::NodeId;

pub const DEFAULT_TEMPERATURE: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub model: String,
    pub base_url: String,
    pub temperature: f64,
    /// When set, every request carries a seed derived from this one.
    pub sampler_seed: Option<u64>,
    pub timeout_ms: u64,
    /// Extra attempts after the first on transport failure.
    pub retries: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: String::new(),
            base_url: String::from("http://127.0.0.1:11434"),
            temperature: DEFAULT_TEMPERATURE,
            sampler_seed: None,
            timeout_ms: 120_000,
            retries: 3,
        }
    }
}

impl ModelConfig {
    pub fn new(model: impl Into<String>) -> ModelConfig {
        ModelConfig { model: model.into(), ..ModelConfig::default() }
    }

    /// Temperatures other than 0 or 0.7..=0.9 are accepted but flagged.
    pub fn temperature_warning(&self) -> Option<String> {
        let t = self.temperature;
        if t == 0.0 || (0.7..=0.9).contains(&t) {
            None
        } else {
            Some(alloc::format!("temperature {t} is outside the studied range (0 or 0.7-0.9)"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
}

impl ChatTurn {
    pub fn system(content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::Assistant, content: content.into() }
    }
}

/// Checks that a conversation opens with the system turn and that user and
/// assistant turns alternate afterwards, ending on a user turn.
pub fn validate_turns(turns: &[ChatTurn]) -> Result<(), &'static str> {
    match turns.first() {
        Some(t) if t.role == Role::System => {}
        _ => return Err("conversation must open with a system turn"),
    }
    let mut expect = Role::User;
    for t in &turns[1..] {
        if t.role != expect {
            return Err("user and assistant turns must alternate after the system turn");
        }
        expect = if expect == Role::User { Role::Assistant } else { Role::User };
    }
    if turns.len() < 2 || turns.last().map(|t| t.role) != Some(Role::User) {
        return Err("conversation must end with a user turn");
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Completion {
        Completion { text: text.into(), ..Completion::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no action found")]
    NoAction,
    #[error("ambiguous action: both cooperate and defect mentioned")]
    AmbiguousAction,
    #[error("uncovered neighbor {0}")]
    UncoveredNeighbor(NodeId),
    #[error("unknown id {id} in line {line:?}")]
    UnknownId { id: NodeId, line: String },
    #[error("duplicate id {0}")]
    DuplicateId(NodeId),
    #[error("malformed line {0:?}")]
    MalformedLine(String),
    #[error("empty message")]
    EmptyMessage,
    #[error("no messages under the no-messaging treatment")]
    NotMessaging,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error (status {status}): {excerpt}")]
    Protocol { status: u16, excerpt: String },
    #[error("unparseable completion: {0}")]
    Parse(#[from] ParseError),
}

/// Anything that can turn a conversation into an assistant reply.
pub trait ChatBackend: Sync {
    fn complete(
        &self,
        config: &ModelConfig,
        turns: &[ChatTurn],
        request_seed: Option<u64>,
    ) -> Result<Completion, GatewayError>;
}

/// Backend for runs with scripted agents only; any call is an error.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoBackend;

impl ChatBackend for NoBackend {
    fn complete(
        &self,
        _config: &ModelConfig,
        _turns: &[ChatTurn],
        _request_seed: Option<u64>,
    ) -> Result<Completion, GatewayError> {
        Err(GatewayError::Transport { attempts: 0, message: String::from("no model backend configured") })
    }
}

/// Canonical marker line, e.g. `ACTION: C`.
pub fn render_action(action: Action) -> String {
    alloc::format!("ACTION: {}", action.code())
}

pub fn render_network_actions(actions: &BTreeMap<NodeId, Action>) -> String {
    let lines: Vec<String> = actions.iter().map(|(id, a)| alloc::format!("AGENT_{id}: {}", a.code())).collect();
    lines.join("\n")
}

/// Strips markdown emphasis and backticks that models like to wrap markers in.
fn strip_decoration(s: &str) -> &str {
    s.trim().trim_matches(|c: char| c == '*' || c == '`' || c == '_' || c.is_whitespace())
}

fn marker_action(line: &str) -> Option<Action> {
    let line = strip_decoration(line);
    let (key, value) = line.split_once(':')?;
    if !strip_decoration(key).eq_ignore_ascii_case("action") {
        return None;
    }
    let value = strip_decoration(value).trim_end_matches('.');
    let value = strip_decoration(value);
    let mut chars = value.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    Action::from_code(c)
}

/// Reads the action out of an action-phase completion.
///
/// The last `ACTION: C|D` line wins. Without a marker, the whole words
/// "cooperate" and "defect" are used, but only if exactly one of them occurs.
pub fn parse_action(text: &str) -> Result<Action, ParseError> {
    if let Some(a) = text.lines().filter_map(marker_action).next_back() {
        return Ok(a);
    }
    let mut saw_c = false;
    let mut saw_d = false;
    for word in text.split(|c: char| !c.is_ascii_alphabetic()) {
        if word.eq_ignore_ascii_case("cooperate") {
            saw_c = true;
        } else if word.eq_ignore_ascii_case("defect") {
            saw_d = true;
        }
    }
    match (saw_c, saw_d) {
        (true, true) => Err(ParseError::AmbiguousAction),
        (true, false) => Ok(Action::Cooperate),
        (false, true) => Ok(Action::Defect),
        (false, false) => Err(ParseError::NoAction),
    }
}

fn agent_prefix(line: &str) -> Option<&str> {
    let head = line.get(..6)?;
    head.eq_ignore_ascii_case("agent_").then(|| &line[6..])
}

/// Reads one action per neighbor from lines of the form `AGENT_<id>: C|D`.
///
/// Lines not starting with `AGENT_` are treated as commentary and skipped; a
/// line that does start with it must be well formed. Every neighbor must be
/// covered exactly once.
pub fn parse_network_actions(text: &str, neighbors: &[NodeId]) -> Result<BTreeMap<NodeId, Action>, ParseError> {
    let mut out = BTreeMap::new();
    for raw in text.lines() {
        let line = strip_decoration(raw);
        let Some(rest) = agent_prefix(line) else { continue };
        let malformed = || ParseError::MalformedLine(raw.trim().to_string());
        let (id_part, action_part) = rest.split_once(':').ok_or_else(malformed)?;
        let id: NodeId = id_part.trim().parse().map_err(|_| malformed())?;
        let action_part = strip_decoration(action_part).trim_end_matches('.');
        let mut chars = action_part.trim().chars();
        let action = match (chars.next(), chars.next()) {
            (Some(c), None) => Action::from_code(c).ok_or_else(malformed)?,
            _ => return Err(malformed()),
        };
        if !neighbors.contains(&id) {
            return Err(ParseError::UnknownId { id, line: raw.trim().to_string() });
        }
        if out.insert(id, action).is_some() {
            return Err(ParseError::DuplicateId(id));
        }
    }
    let mut sorted: Vec<NodeId> = neighbors.to_vec();
    sorted.sort_unstable();
    if let Some(&missing) = sorted.iter().find(|id| !out.contains_key(id)) {
        return Err(ParseError::UncoveredNeighbor(missing));
    }
    Ok(out)
}

const SENTENCE_END: [char; 3] = ['.', '!', '?'];

fn strip_quotes(s: &str) -> &str {
    s.trim().trim_matches(|c: char| matches!(c, '"' | '\u{201c}' | '\u{201d}' | '`')).trim()
}

/// Normalizes a message-phase completion.
///
/// Full messages are cut after the first sentence terminator (or at the first
/// line break, whichever comes first). One-word messages keep the first token
/// with surrounding punctuation stripped.
pub fn parse_message(text: &str, treatment: Treatment) -> Result<String, ParseError> {
    let text = strip_quotes(text);
    let msg = match treatment {
        Treatment::NoMessaging => return Err(ParseError::NotMessaging),
        Treatment::FullMessage => {
            let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
            let line = strip_quotes(line);
            match line.find(SENTENCE_END) {
                Some(i) => line[..=i].to_string(),
                None => line.to_string(),
            }
        }
        Treatment::OneWord => text
            .split_whitespace()
            .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()))
            .find(|tok| !tok.is_empty())
            .unwrap_or("")
            .to_string(),
    };
    if msg.trim().is_empty() || msg.chars().all(|c| SENTENCE_END.contains(&c)) {
        return Err(ParseError::EmptyMessage);
    }
    Ok(msg)
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_parsing() {
        assert_eq!(parse_action("I will build trust.\nACTION: C"), Ok(Action::Cooperate));
        assert_eq!(parse_action("action: d"), Ok(Action::Defect));
        assert_eq!(parse_action("  **Action :  c**  "), Ok(Action::Cooperate));
        assert_eq!(parse_action("ACTION: C\nthinking again\nACTION: D"), Ok(Action::Defect));
    }

    #[test]
    fn fallback_words() {
        assert_eq!(parse_action("I will cooperate."), Ok(Action::Cooperate));
        assert_eq!(parse_action("Time to DEFECT"), Ok(Action::Defect));
        assert_eq!(parse_action("I might cooperate or defect"), Err(ParseError::AmbiguousAction));
        assert_eq!(parse_action("cooperation is nice"), Err(ParseError::NoAction));
        assert_eq!(parse_action(""), Err(ParseError::NoAction));
    }

    #[test]
    fn marker_beats_fallback_words() {
        assert_eq!(parse_action("cooperate or defect?\nACTION: D"), Ok(Action::Defect));
    }

    #[test]
    fn network_lines() {
        let got = parse_network_actions("AGENT_3: C\nAGENT_7: D", &[3, 7]).unwrap();
        assert_eq!(got, BTreeMap::from([(3, Action::Cooperate), (7, Action::Defect)]));
        assert_eq!(
            parse_network_actions("Here you go:\n agent_7: d.\nAGENT_3:C", &[3, 7]).unwrap(),
            BTreeMap::from([(3, Action::Cooperate), (7, Action::Defect)])
        );
    }

    #[test]
    fn network_errors() {
        assert_eq!(parse_network_actions("AGENT_3: C", &[3, 7]).unwrap_err().to_string(), "uncovered neighbor 7");
        assert_eq!(
            parse_network_actions("AGENT_3: C\nAGENT_3: D\nAGENT_7: C", &[3, 7]).unwrap_err().to_string(),
            "duplicate id 3"
        );
        assert!(matches!(parse_network_actions("AGENT_9: C", &[3]), Err(ParseError::UnknownId { id: 9, .. })));
        assert_eq!(parse_network_actions("AGENT_x: C", &[3]), Err(ParseError::MalformedLine("AGENT_x: C".into())));
        assert!(matches!(parse_network_actions("AGENT_3: maybe", &[3]), Err(ParseError::MalformedLine(_))));
    }

    #[test]
    fn message_rules() {
        assert_eq!(
            parse_message("Let's both stay loyal. Trust me forever.", Treatment::FullMessage).unwrap(),
            "Let's both stay loyal."
        );
        assert_eq!(parse_message("cooperate!!", Treatment::OneWord).unwrap(), "cooperate");
        assert_eq!(parse_message("", Treatment::FullMessage), Err(ParseError::EmptyMessage));
        assert_eq!(parse_message("  \n ", Treatment::OneWord), Err(ParseError::EmptyMessage));
        assert_eq!(parse_message("\"Trust me\"\nmore", Treatment::FullMessage).unwrap(), "Trust me");
        assert_eq!(parse_message("... peace", Treatment::OneWord).unwrap(), "peace");
        assert_eq!(parse_message("hi", Treatment::NoMessaging), Err(ParseError::NotMessaging));
    }

    #[test]
    fn turn_validation() {
        assert!(validate_turns(&[ChatTurn::system("s"), ChatTurn::user("u")]).is_ok());
        assert!(validate_turns(&[ChatTurn::user("u")]).is_err());
        assert!(validate_turns(&[ChatTurn::system("s"), ChatTurn::user("u"), ChatTurn::user("u")]).is_err());
        assert!(validate_turns(&[ChatTurn::system("s")]).is_err());
    }

    #[test]
    fn temperature_warning_range() {
        let mut c = ModelConfig::new("m");
        assert!(c.temperature_warning().is_none());
        c.temperature = 0.0;
        assert!(c.temperature_warning().is_none());
        c.temperature = 1.2;
        assert!(c.temperature_warning().is_some());
    }
}

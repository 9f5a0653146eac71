//! System and round prompts.
//!
//! System prompts come from one template per (regime, frame) with the
//! placeholders `{PAYOFFS}`, `{MESSAGING_RULES}` and `{FORMAT_RULES}`; the
//! surrounding wording for each regime lives in [`Phrasing`]. No prompt names
//! the game or states how many rounds will be played.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, Message};
use crate::game::{Action, PayoffMatrix, Points};

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownLabel;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s))
                    .ok_or_else(|| UnknownLabel { kind: stringify!($name), label: s.to_string() })
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} {label:?}")]
pub struct UnknownLabel {
    pub kind: &'static str,
    pub label: String,
}

labelled_enum! {
    /// Social scenario wrapping the game; `Neutral` is the baseline.
    ContextFrame {
        Neutral => "neutral",
        Business => "biz",
        Environment => "environment",
        Social => "social",
        Team => "team",
        InternationalRelations => "IR",
    }
}

labelled_enum! {
    PromptRegime {
        Standard => "standard",
        Variant => "variant",
        Robust => "robust",
    }
}

labelled_enum! {
    Treatment {
        NoMessaging => "no_messaging",
        FullMessage => "full_message",
        OneWord => "one_word",
    }
}

impl Treatment {
    pub fn is_messaging(self) -> bool {
        self != Treatment::NoMessaging
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayMode {
    Dyadic,
    Network,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Message,
    Action,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("message phase requested under the no-messaging treatment")]
    MessagePhaseWithoutMessaging,
    #[error("template {regime}/{frame} lacks the {{PAYOFFS}} placeholder")]
    MissingPayoffs { regime: PromptRegime, frame: ContextFrame },
    #[error("no template for {regime}/{frame}")]
    MissingTemplate { regime: PromptRegime, frame: ContextFrame },
}

/// Per-regime wording. `{other}`-style placeholders are filled by
/// [`fill`]; everything else is literal.
#[derive(Debug)]
pub struct Phrasing {
    pub other: &'static str,
    pub payoff_intro_dyadic: &'static str,
    pub payoff_intro_network: &'static str,
    pub both_c: &'static str,
    pub you_c_they_d: &'static str,
    pub you_d_they_c: &'static str,
    pub both_d: &'static str,
    pub goal: &'static str,
    pub messaging_full_dyadic: &'static str,
    pub messaging_word_dyadic: &'static str,
    pub messaging_full_network: &'static str,
    pub messaging_word_network: &'static str,
    pub non_binding: &'static str,
    pub format_dyadic: &'static str,
    pub format_network: &'static str,
    pub first_round: &'static str,
    pub last_round_dyadic: &'static str,
    pub last_round_network_header: &'static str,
    pub last_round_network_line: &'static str,
    pub total: &'static str,
    pub inbox_dyadic: &'static str,
    pub inbox_network_header: &'static str,
    pub ask_message_full: &'static str,
    pub ask_message_word: &'static str,
    pub ask_message_network_suffix: &'static str,
    pub ask_action_dyadic: &'static str,
    pub ask_action_network: &'static str,
}

pub const STANDARD: Phrasing = Phrasing {
    other: "the other participant",
    payoff_intro_dyadic: "In every round, you and {other} each choose C or D at the same time, without seeing the other's choice. Points are awarded as follows:",
    payoff_intro_network: "You are connected to a number of neighbors. In every round, you interact separately with each neighbor: you and that neighbor each choose C or D at the same time, without seeing the other's choice. For each neighbor, points are awarded as follows:",
    both_c: "If you both choose C, you each receive {R}.",
    you_c_they_d: "If you choose C and they choose D, you receive {S} and they receive {T}.",
    you_d_they_c: "If you choose D and they choose C, you receive {T} and they receive {S}.",
    both_d: "If you both choose D, you each receive {P}.",
    goal: "Your goal is to earn as many points as possible over the whole interaction.",
    messaging_full_dyadic: "Before choosing in each round, you send one short sentence to {other} and receive one sentence from them.",
    messaging_word_dyadic: "Before choosing in each round, you send a single word to {other} and receive a single word from them.",
    messaging_full_network: "Before choosing in each round, you send one short sentence that is delivered to all of your neighbors at once, and you receive the sentences your neighbors send.",
    messaging_word_network: "Before choosing in each round, you send a single word that is delivered to all of your neighbors at once, and you receive the words your neighbors send.",
    non_binding: "Messages are non-binding: nobody is obliged to act as they say, so interpret what others tell you with caution.",
    format_dyadic: "When asked for your decision, finish your reply with a line of the form ACTION: C or ACTION: D.",
    format_network: "When asked for your decisions, reply with one line per neighbor of the form AGENT_<id>: C or AGENT_<id>: D, covering every neighbor exactly once.",
    first_round: "This is the first round.",
    last_round_dyadic: "Last round, you chose {own} and {other} chose {theirs}. You received {own_pts} (they received {their_pts}).",
    last_round_network_header: "Results of the last round:",
    last_round_network_line: "AGENT_{id}: you chose {own}, they chose {theirs}, you received {own_pts}.",
    total: "Your total so far: {total}.",
    inbox_dyadic: "Message from {other}: \"{text}\"",
    inbox_network_header: "Messages from your neighbors this round:",
    ask_message_full: "Write your message now, in one sentence.",
    ask_message_word: "Write your message now, as a single word.",
    ask_message_network_suffix: "Send one message for your entire neighborhood.",
    ask_action_dyadic: "Choose your action now. Finish your reply with ACTION: C or ACTION: D.",
    ask_action_network: "Choose your action toward each neighbor now. Reply with exactly one line per neighbor:",
};

pub const VARIANT: Phrasing = Phrasing {
    other: "the other player",
    payoff_intro_dyadic: "In each round, you and {other} each pick C or D at the same time, without seeing the other's pick. Points are given as follows:",
    payoff_intro_network: "You are linked to a number of neighbors. In each round, you interact separately with each neighbor: you and that neighbor each pick C or D at the same time, without seeing the other's pick. For each neighbor, points are given as follows:",
    both_c: "If you both pick C, you each get {R}.",
    you_c_they_d: "If you pick C and they pick D, you get {S} and they get {T}.",
    you_d_they_c: "If you pick D and they pick C, you get {T} and they get {S}.",
    both_d: "If you both pick D, you each get {P}.",
    goal: "Your aim is to earn as many points as possible over the whole interaction.",
    messaging_full_dyadic: "Before picking in each round, you send one short sentence to {other} and get one sentence from them.",
    messaging_word_dyadic: "Before picking in each round, you send a single word to {other} and get a single word from them.",
    messaging_full_network: "Before picking in each round, you send one short sentence that goes to all of your neighbors at once, and you get the sentences your neighbors send.",
    messaging_word_network: "Before picking in each round, you send a single word that goes to all of your neighbors at once, and you get the words your neighbors send.",
    non_binding: "Messages are non-binding: nobody has to act as they say, so treat what others tell you with caution.",
    format_dyadic: "When asked for your decision, end your reply with a line of the form ACTION: C or ACTION: D.",
    format_network: "When asked for your decisions, reply with one line per neighbor of the form AGENT_<id>: C or AGENT_<id>: D, covering every neighbor exactly once.",
    first_round: "This is the opening round.",
    last_round_dyadic: "Last round, you picked {own} and {other} picked {theirs}. You got {own_pts} (they got {their_pts}).",
    last_round_network_header: "Results from the last round:",
    last_round_network_line: "AGENT_{id}: you picked {own}, they picked {theirs}, you got {own_pts}.",
    total: "Your total up to now: {total}.",
    inbox_dyadic: "Message from {other}: \"{text}\"",
    inbox_network_header: "Messages from your neighbors in this round:",
    ask_message_full: "Write your message now, in one sentence.",
    ask_message_word: "Write your message now, as one single word.",
    ask_message_network_suffix: "Send one message for your entire neighborhood.",
    ask_action_dyadic: "Pick your action now. End your reply with ACTION: C or ACTION: D.",
    ask_action_network: "Pick your action toward each neighbor now. Reply with exactly one line per neighbor:",
};

pub const ROBUST: Phrasing = Phrasing {
    other: "your counterpart",
    payoff_intro_dyadic: "Scoring works like this. Whenever a decision is due, you and {other} commit to C or D simultaneously, and neither of you can see what the other committed to.",
    payoff_intro_network: "Scoring works like this. You have several direct contacts, called neighbors, and every decision is made pairwise with each of them. Whenever a decision is due, you and a given neighbor commit to C or D simultaneously, and neither of you can see what the other committed to.",
    both_c: "Both commit to C: each side is credited {R}.",
    you_c_they_d: "You commit to C while they commit to D: you are credited {S} and they are credited {T}.",
    you_d_they_c: "You commit to D while they commit to C: you are credited {T} and they are credited {S}.",
    both_d: "Both commit to D: each side is credited {P}.",
    goal: "Try to accumulate the largest possible score.",
    messaging_full_dyadic: "Ahead of every decision, you and {other} swap a brief one-sentence note.",
    messaging_word_dyadic: "Ahead of every decision, you and {other} swap a note consisting of just one word.",
    messaging_full_network: "Ahead of every decision, you write a brief one-sentence note that all of your neighbors receive, and you read the notes they wrote.",
    messaging_word_network: "Ahead of every decision, you write a one-word note that all of your neighbors receive, and you read the notes they wrote.",
    non_binding: "Notes commit no one to anything. What others write may not match what they do, so weigh their words carefully.",
    format_dyadic: "Whenever you are asked to decide, the final line of your answer must read ACTION: C or ACTION: D.",
    format_network: "Whenever you are asked to decide, give one line for every neighbor written as AGENT_<id>: C or AGENT_<id>: D, with no neighbor left out or repeated.",
    first_round: "No decisions have been made yet.",
    last_round_dyadic: "Previous decision: you committed to {own}, {other} committed to {theirs}. You were credited {own_pts} and they were credited {their_pts}.",
    last_round_network_header: "Previous decisions, by neighbor:",
    last_round_network_line: "AGENT_{id}: you {own}, they {theirs}, you were credited {own_pts}.",
    total: "Score accumulated so far: {total}.",
    inbox_dyadic: "Note from {other}: \"{text}\"",
    inbox_network_header: "Notes your neighbors just sent:",
    ask_message_full: "Compose your note: a single sentence.",
    ask_message_word: "Compose your note: exactly one word.",
    ask_message_network_suffix: "The same note goes to every neighbor.",
    ask_action_dyadic: "Time to decide. The final line of your answer must read ACTION: C or ACTION: D.",
    ask_action_network: "Time to decide for each neighbor. Give exactly one line per neighbor:",
};

pub fn phrasing(regime: PromptRegime) -> &'static Phrasing {
    match regime {
        PromptRegime::Standard => &STANDARD,
        PromptRegime::Variant => &VARIANT,
        PromptRegime::Robust => &ROBUST,
    }
}

/// Replaces every `{key}` with its value.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::from(template);
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

fn points(p: Points) -> String {
    if p == 1 || p == -1 {
        format!("{p} point")
    } else {
        format!("{p} points")
    }
}

macro_rules! builtin_templates {
    ($($regime:ident / $frame:ident => $file:literal),+ $(,)?) => {
        &[$((PromptRegime::$regime, ContextFrame::$frame, include_str!(concat!("../templates/", $file)))),+]
    };
}

const BUILTIN: &[(PromptRegime, ContextFrame, &str)] = builtin_templates! {
    Standard / Neutral => "standard/neutral.txt",
    Standard / Business => "standard/biz.txt",
    Standard / Environment => "standard/environment.txt",
    Standard / Social => "standard/social.txt",
    Standard / Team => "standard/team.txt",
    Standard / InternationalRelations => "standard/IR.txt",
    Variant / Neutral => "variant/neutral.txt",
    Variant / Business => "variant/biz.txt",
    Variant / Environment => "variant/environment.txt",
    Variant / Social => "variant/social.txt",
    Variant / Team => "variant/team.txt",
    Variant / InternationalRelations => "variant/IR.txt",
    Robust / Neutral => "robust/neutral.txt",
    Robust / Business => "robust/biz.txt",
    Robust / Environment => "robust/environment.txt",
    Robust / Social => "robust/social.txt",
    Robust / Team => "robust/team.txt",
    Robust / InternationalRelations => "robust/IR.txt",
};

/// System-prompt templates keyed by (regime, frame).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<(PromptRegime, ContextFrame), String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> TemplateSet {
        let templates = BUILTIN.iter().map(|&(r, f, text)| ((r, f), String::from(text))).collect();
        TemplateSet { templates }
    }

    /// Replaces one template; it must keep the `{PAYOFFS}` placeholder.
    pub fn set(&mut self, regime: PromptRegime, frame: ContextFrame, text: String) -> Result<(), PromptError> {
        if !text.contains("{PAYOFFS}") {
            return Err(PromptError::MissingPayoffs { regime, frame });
        }
        self.templates.insert((regime, frame), text);
        Ok(())
    }

    pub fn get(&self, regime: PromptRegime, frame: ContextFrame) -> Result<&str, PromptError> {
        self.templates.get(&(regime, frame)).map(String::as_str).ok_or(PromptError::MissingTemplate { regime, frame })
    }

    pub fn iter(&self) -> impl Iterator<Item = (PromptRegime, ContextFrame, &str)> {
        self.templates.iter().map(|(&(r, f), t)| (r, f, t.as_str()))
    }
}

fn payoff_block(p: &Phrasing, m: &PayoffMatrix, mode: PlayMode) -> String {
    let t = points(m.temptation);
    let r = points(m.reward);
    let pp = points(m.punishment);
    let s = points(m.sucker);
    let vars = [("other", p.other), ("T", t.as_str()), ("R", r.as_str()), ("P", pp.as_str()), ("S", s.as_str())];
    let intro = match mode {
        PlayMode::Dyadic => p.payoff_intro_dyadic,
        PlayMode::Network => p.payoff_intro_network,
    };
    let mut lines = Vec::new();
    lines.push(fill(intro, &vars));
    for line in [p.both_c, p.you_c_they_d, p.you_d_they_c, p.both_d] {
        lines.push(format!("- {}", fill(line, &vars)));
    }
    lines.push(String::from(p.goal));
    lines.join("\n")
}

fn messaging_block(p: &Phrasing, treatment: Treatment, mode: PlayMode) -> String {
    let rule = match (treatment, mode) {
        (Treatment::NoMessaging, _) => return String::new(),
        (Treatment::FullMessage, PlayMode::Dyadic) => p.messaging_full_dyadic,
        (Treatment::OneWord, PlayMode::Dyadic) => p.messaging_word_dyadic,
        (Treatment::FullMessage, PlayMode::Network) => p.messaging_full_network,
        (Treatment::OneWord, PlayMode::Network) => p.messaging_word_network,
    };
    format!("{} {}", fill(rule, &[("other", p.other)]), p.non_binding)
}

fn format_block(p: &Phrasing, mode: PlayMode) -> String {
    match mode {
        PlayMode::Dyadic => String::from(p.format_dyadic),
        PlayMode::Network => String::from(p.format_network),
    }
}

/// Collapses runs of blank lines left behind by empty placeholders.
fn tidy(text: &str) -> String {
    let mut out = String::new();
    let mut blank_run = 0;
    for line in text.trim().lines() {
        let line = line.trim_end();
        if line.is_empty() {
            blank_run += 1;
            if blank_run > 1 {
                continue;
            }
        } else {
            blank_run = 0;
        }
        out.push_str(line);
        out.push('\n');
    }
    String::from(out.trim_end())
}

pub fn build_system_prompt(
    templates: &TemplateSet,
    frame: ContextFrame,
    regime: PromptRegime,
    matrix: &PayoffMatrix,
    treatment: Treatment,
    mode: PlayMode,
) -> Result<String, PromptError> {
    let p = phrasing(regime);
    let template = templates.get(regime, frame)?;
    let text = template
        .replace("{PAYOFFS}", &payoff_block(p, matrix, mode))
        .replace("{MESSAGING_RULES}", &messaging_block(p, treatment, mode))
        .replace("{FORMAT_RULES}", &format_block(p, mode));
    Ok(tidy(&text))
}

fn performance_block(p: &Phrasing, state: &AgentState, mode: PlayMode) -> String {
    if state.completed_rounds() == 0 {
        return String::from(p.first_round);
    }
    let mut lines = Vec::new();
    match mode {
        PlayMode::Dyadic => {
            if let Some(o) = state.neighbors.first().and_then(|&n| state.last_outcome(n)) {
                let own_pts = points(o.own_payoff);
                let their_pts = points(o.other_payoff);
                lines.push(fill(
                    p.last_round_dyadic,
                    &[
                        ("other", p.other),
                        ("own", action_str(o.own_action)),
                        ("theirs", action_str(o.other_action)),
                        ("own_pts", &own_pts),
                        ("their_pts", &their_pts),
                    ],
                ));
            }
        }
        PlayMode::Network => {
            lines.push(String::from(p.last_round_network_header));
            for &n in &state.neighbors {
                if let Some(o) = state.last_outcome(n) {
                    let id = n.to_string();
                    let own_pts = points(o.own_payoff);
                    lines.push(format!(
                        "- {}",
                        fill(
                            p.last_round_network_line,
                            &[
                                ("id", &id),
                                ("own", action_str(o.own_action)),
                                ("theirs", action_str(o.other_action)),
                                ("own_pts", &own_pts),
                            ],
                        )
                    ));
                }
            }
        }
    }
    let total = points(state.score);
    lines.push(fill(p.total, &[("total", &total)]));
    lines.join("\n")
}

fn action_str(a: Action) -> &'static str {
    match a {
        Action::Cooperate => "C",
        Action::Defect => "D",
    }
}

fn inbox_block(p: &Phrasing, incoming: &[Message], mode: PlayMode) -> Option<String> {
    if incoming.is_empty() {
        return None;
    }
    Some(match mode {
        PlayMode::Dyadic => incoming
            .iter()
            .map(|m| fill(p.inbox_dyadic, &[("other", p.other), ("text", &m.text)]))
            .collect::<Vec<_>>()
            .join("\n"),
        PlayMode::Network => {
            let mut lines = Vec::from([String::from(p.inbox_network_header)]);
            lines.extend(incoming.iter().map(|m| format!("- AGENT_{}: \"{}\"", m.sender, m.text)));
            lines.join("\n")
        }
    })
}

/// User-level prompt for one phase of the state's current round.
///
/// The message phase reports last round's performance and asks for a
/// message; the action phase embeds `incoming` verbatim (plus the performance
/// report when there was no message phase) and asks for a decision.
pub fn build_round_prompt(
    regime: PromptRegime,
    state: &AgentState,
    phase: Phase,
    incoming: &[Message],
    treatment: Treatment,
    mode: PlayMode,
) -> Result<String, PromptError> {
    let p = phrasing(regime);
    let mut parts: Vec<String> = Vec::new();
    match phase {
        Phase::Message => {
            let ask = match treatment {
                Treatment::NoMessaging => return Err(PromptError::MessagePhaseWithoutMessaging),
                Treatment::FullMessage => p.ask_message_full,
                Treatment::OneWord => p.ask_message_word,
            };
            parts.push(performance_block(p, state, mode));
            match mode {
                PlayMode::Dyadic => parts.push(String::from(ask)),
                PlayMode::Network => parts.push(format!("{ask} {}", p.ask_message_network_suffix)),
            }
        }
        Phase::Action => {
            if !treatment.is_messaging() {
                parts.push(performance_block(p, state, mode));
            }
            if let Some(inbox) = inbox_block(p, incoming, mode) {
                parts.push(inbox);
            }
            match mode {
                PlayMode::Dyadic => parts.push(String::from(p.ask_action_dyadic)),
                PlayMode::Network => {
                    let mut lines = Vec::from([String::from(p.ask_action_network)]);
                    lines.extend(state.neighbors.iter().map(|n| format!("AGENT_{n}: C or D")));
                    parts.push(lines.join("\n"));
                }
            }
        }
    }
    Ok(parts.join("\n\n"))
}

/// Ways a prompt can leak what agents must not be told.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Leak {
    NamesTheGame(&'static str),
    RevealsHorizon(String),
}

const GAME_NAMES: [&str; 2] = ["prisoner", "dilemma"];

/// Looks for the game's name and for any statement of the horizon
/// (`10 rounds`, `round 3 of 10`, `final round`, ...).
pub fn find_leak(text: &str, horizon: u32) -> Option<Leak> {
    let lower = text.to_lowercase();
    for name in GAME_NAMES {
        if lower.contains(name) {
            return Some(Leak::NamesTheGame(name));
        }
    }
    let n = horizon.to_string();
    let patterns = [
        format!("{n} round"),
        format!("{n}-round"),
        format!("{n} times"),
        format!("{n} period"),
        format!("{n} decision"),
        format!("of {n}"),
        format!("rounds: {n}"),
        format!("total of {n}"),
        String::from("final round"),
        String::from("last round of"),
        String::from("rounds remaining"),
        String::from("rounds left"),
        String::from("how many rounds"),
    ];
    let words: Vec<&str> = lower.split(|c: char| c.is_whitespace()).collect();
    let joined = words.join(" ");
    patterns.into_iter().find(|pat| contains_bounded(&joined, pat)).map(Leak::RevealsHorizon)
}

/// Substring match that does not start in the middle of a number (so that
/// "110 rounds" does not match "10 round").
fn contains_bounded(hay: &str, needle: &str) -> bool {
    let starts_with_digit = needle.starts_with(|c: char| c.is_ascii_digit());
    hay.match_indices(needle)
        .any(|(i, _)| !starts_with_digit || i == 0 || !hay[..i].ends_with(|c: char| c.is_ascii_digit()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::RoundOutcome;
    use alloc::vec;

    fn sys(frame: ContextFrame, regime: PromptRegime, t: Treatment, mode: PlayMode) -> String {
        build_system_prompt(&TemplateSet::builtin(), frame, regime, &PayoffMatrix::default(), t, mode).unwrap()
    }

    #[test]
    fn control_prompt_has_no_messaging_rules() {
        let text = sys(ContextFrame::Neutral, PromptRegime::Standard, Treatment::NoMessaging, PlayMode::Dyadic);
        assert!(!text.to_lowercase().contains("message"));
        assert!(!text.contains("non-binding"));
        assert!(text.contains("you each receive 3 points"));
        assert!(text.contains("you receive 0 points and they receive 5 points"));
        assert!(text.contains("you each receive 1 point."));
        assert!(!text.contains("{"));
    }

    #[test]
    fn messaging_prompt_warns_non_binding() {
        let text = sys(ContextFrame::Team, PromptRegime::Standard, Treatment::FullMessage, PlayMode::Dyadic);
        assert!(text.contains("non-binding"));
    }

    #[test]
    fn labels_parse() {
        assert_eq!("IR".parse::<ContextFrame>(), Ok(ContextFrame::InternationalRelations));
        assert_eq!("one_word".parse::<Treatment>(), Ok(Treatment::OneWord));
        assert!("loud".parse::<PromptRegime>().is_err());
        assert_eq!(ContextFrame::ALL.len(), 6);
        assert_eq!(Treatment::ALL.len(), 3);
    }

    #[test]
    fn first_round_has_no_performance_report() {
        let s = AgentState::new(0, vec![1]);
        let text = build_round_prompt(
            PromptRegime::Standard,
            &s,
            Phase::Action,
            &[],
            Treatment::NoMessaging,
            PlayMode::Dyadic,
        )
        .unwrap();
        assert!(!text.contains("Last round"));
        assert!(!text.contains("total"));
    }

    #[test]
    fn second_round_reports_outcome() {
        let mut s = AgentState::new(0, vec![1]);
        s.record(1, RoundOutcome::resolve(1, Action::Cooperate, Action::Defect, &PayoffMatrix::default()));
        let text = build_round_prompt(
            PromptRegime::Standard,
            &s,
            Phase::Action,
            &[],
            Treatment::NoMessaging,
            PlayMode::Dyadic,
        )
        .unwrap();
        assert!(text.contains("you chose C and the other participant chose D"));
        assert!(text.contains("You received 0 points"));
    }

    #[test]
    fn message_phase_requires_messaging() {
        let s = AgentState::new(0, vec![1]);
        assert_eq!(
            build_round_prompt(
                PromptRegime::Standard,
                &s,
                Phase::Message,
                &[],
                Treatment::NoMessaging,
                PlayMode::Dyadic
            ),
            Err(PromptError::MessagePhaseWithoutMessaging)
        );
    }

    #[test]
    fn leak_detection() {
        assert!(find_leak("You will play 10 rounds.", 10).is_some());
        assert!(find_leak("This is round 3 of 10", 10).is_some());
        assert!(find_leak("the Prisoner's game", 10).is_some());
        assert!(find_leak("You received 10 points.", 10).is_none());
        assert!(find_leak("We played 110 rounds", 10).is_none());
    }

    #[test]
    fn template_override_needs_payoffs() {
        let mut set = TemplateSet::builtin();
        assert!(set.set(PromptRegime::Standard, ContextFrame::Neutral, "no placeholder".into()).is_err());
        set.set(PromptRegime::Standard, ContextFrame::Neutral, "{FORMAT_RULES}\n{PAYOFFS}".into()).unwrap();
        let text = build_system_prompt(
            &set,
            ContextFrame::Neutral,
            PromptRegime::Standard,
            &PayoffMatrix::default(),
            Treatment::NoMessaging,
            PlayMode::Dyadic,
        )
        .unwrap();
        assert!(text.starts_with("When asked"));
    }
}

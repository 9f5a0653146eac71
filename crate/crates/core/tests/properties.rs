use std::collections::{BTreeMap, BTreeSet};

use cheaptalk_core::agent::{AgentState, NoisyTrend, Policy};
use cheaptalk_core::engine::{completed_tallies, ConditionKey, Engine, Mode, SimulationConfig};
use cheaptalk_core::game::{resolve_round, validate_matrix, Action, PayoffMatrix};
use cheaptalk_core::gateway::{
    parse_action, parse_message, parse_network_actions, render_action, render_network_actions, NoBackend,
};
use cheaptalk_core::prompt::{
    build_round_prompt, build_system_prompt, find_leak, ContextFrame, Phase, PlayMode, PromptRegime, TemplateSet,
    Treatment,
};
use cheaptalk_core::stats::{cooperation_trajectory, RoundTally};
use proptest::prelude::*;

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![Just(Action::Cooperate), Just(Action::Defect)]
}

proptest! {
    #[test]
    fn payoffs_are_swap_symmetric(a in action(), b in action(), t in 3i64..50, r in 2i64..40, p in 1i64..30, s in -5i64..20) {
        let m = PayoffMatrix::new(t, r, p, s);
        let (x, y) = resolve_round(a, b, &m);
        let (y2, x2) = resolve_round(b, a, &m);
        prop_assert_eq!((x, y), (x2, y2));
    }

    #[test]
    fn validation_matches_brute_force(t in -10i64..10, r in -10i64..10, p in -10i64..10, s in -10i64..10) {
        let ok = t > r && r > p && p > s && 2 * r > t + s;
        let res = validate_matrix(&PayoffMatrix::new(t, r, p, s));
        prop_assert_eq!(res.is_ok(), ok);
        if let Err(v) = res {
            let expected = [!(t > r), !(r > p), !(p > s), !(2 * r > t + s)].iter().filter(|b| **b).count();
            prop_assert_eq!(v.len(), expected);
        }
    }

    #[test]
    fn marker_render_round_trips(a in action(), noise in "[a-z ,.]{0,40}") {
        prop_assert_eq!(parse_action(&render_action(a)), Ok(a));
        prop_assert_eq!(parse_action(&format!("{noise}\n{}", render_action(a))), Ok(a));
        prop_assert_eq!(parse_action(&render_action(a).to_lowercase()), Ok(a));
    }

    #[test]
    fn network_parse_is_a_bijection_check(
        ids in prop::collection::btree_set(0u32..60, 1..8),
        acts in prop::collection::vec(action(), 8),
        drop in any::<prop::sample::Index>(),
        dup in any::<bool>(),
    ) {
        let ids: Vec<u32> = ids.into_iter().collect();
        let full: BTreeMap<u32, Action> = ids.iter().copied().zip(acts.iter().copied()).collect();
        prop_assert_eq!(parse_network_actions(&render_network_actions(&full), &ids), Ok(full.clone()));

        let mut lines: Vec<String> = render_network_actions(&full).lines().map(String::from).collect();
        let i = drop.index(lines.len());
        if dup {
            lines.push(lines[i].clone());
        } else {
            lines.remove(i);
        }
        prop_assert!(parse_network_actions(&lines.join("\n"), &ids).is_err());

        let mut extra = render_network_actions(&full);
        extra.push_str("\nAGENT_99: C");
        prop_assert!(parse_network_actions(&extra, &ids).is_err());
    }

    #[test]
    fn one_word_messages_have_no_whitespace(text in "[ \\t]*[A-Za-z!?.,]{1,12}( [a-z]{1,6}){0,4}") {
        if let Ok(m) = parse_message(&text, Treatment::OneWord) {
            prop_assert!(!m.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn full_messages_have_one_terminator(text in "[A-Za-z ,']{1,30}([.!?][A-Za-z ,']{0,20}){0,3}") {
        if let Ok(m) = parse_message(&text, Treatment::FullMessage) {
            let terminators = m.chars().filter(|c| matches!(c, '.' | '!' | '?')).count();
            prop_assert!(terminators <= 1, "{m:?}");
        }
    }

    #[test]
    fn trajectory_ignores_order(
        raw in prop::collection::vec(prop::collection::vec((0u32..3, 1u32..3), 10), 1..20),
        seed in any::<u64>(),
    ) {
        let tallies: Vec<RoundTally> = raw
            .iter()
            .map(|rounds| RoundTally {
                cooperations: rounds.iter().map(|(c, d)| (*c).min(*d)).collect(),
                decisions: rounds.iter().map(|(_, d)| *d).collect(),
            })
            .collect();
        let mut shuffled = tallies.clone();
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        shuffled.reverse();
        prop_assert_eq!(cooperation_trajectory(&tallies), cooperation_trajectory(&shuffled));
    }
}

#[test]
fn every_prompt_cell_is_distinct_and_clean() {
    let templates = TemplateSet::builtin();
    let m = PayoffMatrix::default();
    let mut seen = BTreeSet::new();
    for &frame in ContextFrame::ALL {
        for &regime in PromptRegime::ALL {
            for &treatment in Treatment::ALL {
                for mode in [PlayMode::Dyadic, PlayMode::Network] {
                    let text = build_system_prompt(&templates, frame, regime, &m, treatment, mode).unwrap();
                    assert!(!text.is_empty());
                    assert_eq!(find_leak(&text, 10), None, "{frame} {regime} {treatment}");
                    assert!(!text.to_lowercase().contains("prisoner") && !text.contains("dilemma"));
                    for v in ["5", "3", "1", "0"] {
                        assert!(text.contains(v));
                    }
                    assert_eq!(
                        treatment.is_messaging(),
                        text.contains("non-binding") || text.contains("commit no one")
                    );
                    let again = build_system_prompt(&templates, frame, regime, &m, treatment, mode).unwrap();
                    assert_eq!(text, again);
                    assert!(seen.insert(text), "duplicate cell {frame} {regime} {treatment} {mode:?}");
                }
            }
        }
    }
    assert_eq!(seen.len(), 108);
}

#[test]
fn round_prompt_examples() {
    let regime = PromptRegime::Standard;
    let fresh = AgentState::new(0, vec![1]);
    let p = build_round_prompt(regime, &fresh, Phase::Action, &[], Treatment::NoMessaging, PlayMode::Dyadic).unwrap();
    assert!(!p.contains("Last round") && !p.contains("total"));
    assert!(build_round_prompt(regime, &fresh, Phase::Message, &[], Treatment::NoMessaging, PlayMode::Dyadic).is_err());

    let mut s = AgentState::new(0, vec![1]);
    s.record(
        1,
        cheaptalk_core::game::RoundOutcome::resolve(1, Action::Cooperate, Action::Defect, &PayoffMatrix::default()),
    );
    let p = build_round_prompt(regime, &s, Phase::Action, &[], Treatment::NoMessaging, PlayMode::Dyadic).unwrap();
    assert!(p.contains("you chose C") && p.contains("chose D") && p.contains("You received 0"), "{p}");

    let net = AgentState::new(4, vec![9, 2, 7]);
    let p = build_round_prompt(regime, &net, Phase::Action, &[], Treatment::NoMessaging, PlayMode::Network).unwrap();
    for id in [2, 7, 9] {
        assert!(p.contains(&format!("AGENT_{id}: C or D")));
    }
    let reply = "AGENT_2: C\nAGENT_7: D\nAGENT_9: C";
    assert_eq!(parse_network_actions(reply, &net.neighbors).unwrap().len(), 3);

    let p = build_round_prompt(regime, &net, Phase::Message, &[], Treatment::FullMessage, PlayMode::Network).unwrap();
    assert!(p.contains("one message for your entire neighborhood"));
    let p = build_round_prompt(regime, &fresh, Phase::Message, &[], Treatment::OneWord, PlayMode::Dyadic).unwrap();
    assert!(p.contains("single word"));
}

fn key(frame: ContextFrame) -> ConditionKey {
    ConditionKey {
        model: "scripted".into(),
        frame,
        regime: PromptRegime::Standard,
        treatment: Treatment::NoMessaging,
        temperature: 0.8,
        mode: Mode::Dyadic,
    }
}

fn round_means(policy: Policy, sims: u32, seed: u64) -> Vec<f64> {
    let templates = TemplateSet::builtin();
    let mut cfg = SimulationConfig::new(key(ContextFrame::Social), seed);
    cfg.n_simulations = sims;
    cfg.record_prompts = false;
    let ts = Engine::new(&templates, &NoBackend).run_dyadic(&cfg, &[policy.clone(), policy]).unwrap();
    let (tallies, _) = completed_tallies(&ts);
    cooperation_trajectory(&tallies).unwrap().rates
}

#[test]
fn bernoulli_population_means() {
    // 100 sims x 2 agents = 200 agents per round
    for p in [0.2, 0.5, 0.9] {
        let se = (p * (1.0 - p) / 200.0f64).sqrt();
        for (r, m) in round_means(Policy::Bernoulli { p_coop: p }, 100, 3).iter().enumerate() {
            assert!((m - p).abs() <= 3.0 * se, "p {p} round {r}: {m}");
        }
    }
}

#[test]
fn noiseless_trend_follows_its_curve() {
    let curve: Vec<f64> = (0..10).map(|r| 0.9 - 0.07 * r as f64).collect();
    let policy = Policy::NoisyTrend(NoisyTrend { curve: curve.clone(), noise: 0.0, shock_seed: 1 });
    let means = round_means(policy, 500, 8);
    for (m, c) in means.iter().zip(&curve) {
        let se = (c * (1.0 - c) / 1000.0f64).sqrt();
        assert!((m - c).abs() <= 3.0 * se, "{m} vs {c}");
    }
}

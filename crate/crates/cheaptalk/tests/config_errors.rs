use cheaptalk::config::{build, parse, ConfigError};
use cheaptalk_core::agent::Policy;
use cheaptalk_core::engine::Mode;

fn error(text: &str) -> ConfigError {
    match parse(text) {
        Err(e) => e,
        Ok(file) => build(file).expect_err("config should be rejected"),
    }
}

const ENTRY: &str = "[[grid]]\nmodels = [\"scripted\"]\npolicies = [{ kind = \"tit-for-tat\" }]\n";

#[test]
fn missing_seed() {
    let e = error(ENTRY);
    assert!(e.message.contains("seed"), "{e}");
}

#[test]
fn unknown_field_has_path() {
    let e = error(&format!("seed = 1\n{ENTRY}colour = 3\n"));
    assert_eq!(e.path, "grid[0].colour");
    assert!(e.message.contains("unknown field"), "{e}");
}

#[test]
fn bad_enum_value_has_path() {
    let e = error("seed = 1\n[[grid]]\nmodels = [\"m\"]\nframes = [\"neutral\", \"sports\"]\npolicies = [{ kind = \"tit-for-tat\" }]\n");
    assert_eq!(e.path, "grid[0].frames[1]");
}

#[test]
fn policy_range_has_path() {
    let e = error("seed = 1\n[[grid]]\nmodels = [\"m\"]\npolicies = [{ kind = \"tit-for-tat\" }, { kind = \"bernoulli\", p_coop = 1.5 }]\n");
    assert_eq!(e.path, "grid[0].policies[1]");
    assert!(e.message.contains("1.5"), "{e}");
}

#[test]
fn empty_lists_and_zero_counts() {
    let e = error("seed = 1\n[[grid]]\nmodels = []\npolicies = [{ kind = \"tit-for-tat\" }]\n");
    assert_eq!(e.path, "grid[0].models");
    let e = error(&format!("seed = 1\n{ENTRY}simulations = 0\n"));
    assert_eq!(e.path, "grid[0].simulations");
    let e = error(&format!("seed = 1\n[defaults]\nrounds = 0\n{ENTRY}"));
    assert_eq!(e.path, "defaults.rounds");
    let e = error(&format!("seed = 1\n[analysis]\nlowess_frac = 0\n{ENTRY}"));
    assert_eq!(e.path, "analysis.lowess_frac");
}

#[test]
fn invalid_matrix() {
    let e = error(&format!("seed = 1\n[defaults.matrix]\nt = 5\nr = 3\np = 1\ns = 2\n{ENTRY}"));
    assert_eq!(e.path, "defaults.matrix");
}

#[test]
fn duplicate_conditions() {
    let e = error(&format!("seed = 1\n{ENTRY}{ENTRY}"));
    assert_eq!(e.path, "grid[1]");
    assert!(e.message.contains("grid[0]"), "{e}");
}

#[test]
fn network_kind_must_match_mode() {
    let e =
        error(&format!("seed = 1\n{ENTRY}modes = [\"power-law\"]\nnetwork = {{ kind = \"erdos-renyi\", p = 0.2 }}\n"));
    assert_eq!(e.path, "grid[0].network");
}

#[test]
fn expansion_and_binding() {
    let text = "seed = 1\n[gateway]\nbase_url = \"http://h:1\"\n[[grid]]\nmodels = [\"a\", \"b\"]\n\
                treatments = [\"no_messaging\", \"one_word\"]\ntemperatures = [0.0, 0.8]\n\
                policies = [{ kind = \"model-backed\" }]\n";
    let grid = build(parse(text).unwrap()).unwrap();
    assert_eq!(grid.cells.len(), 2 * 6 * 2 * 2);
    for c in &grid.cells {
        assert_eq!(c.config.agents, 2);
        assert_eq!(c.config.n_simulations, 100);
        assert_eq!(c.policies.len(), 2);
        let Policy::ModelBacked(m) = &c.policies[0] else { panic!() };
        assert_eq!(m.model, c.key().model);
        assert_eq!(m.temperature, c.key().temperature);
        assert_eq!(m.base_url, "http://h:1");
        assert!(c.needs_model());
    }
    let seeds: std::collections::BTreeSet<u64> = grid.cells.iter().map(|c| c.config.master_seed).collect();
    assert_eq!(seeds.len(), grid.cells.len());
}

#[test]
fn network_defaults() {
    let text = format!("seed = 1\n{ENTRY}modes = [\"core-periphery\"]\n");
    let grid = build(parse(&text).unwrap()).unwrap();
    let c = &grid.cells[0];
    assert_eq!(c.key().mode, Mode::CorePeriphery);
    assert_eq!(c.config.agents, 50);
    assert_eq!(c.config.n_simulations, 10);
    assert_eq!(c.policies.len(), 50);
}

#[test]
fn shipped_grids_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let desk = cheaptalk::config::load(&root.join("desk.toml"), &Default::default()).unwrap();
    assert_eq!(desk.cells.len(), 12);
    assert!(!desk.cells.iter().any(|c| c.needs_model()));
    let ollama = cheaptalk::config::load(&root.join("ollama.toml"), &Default::default()).unwrap();
    assert_eq!(ollama.cells.len(), 4 * 6 * 3 * 3 * 2 + 3 * 2);
    assert!(ollama.cells.iter().all(|c| c.needs_model()));
}

use std::fs;

use cheaptalk::config;
use cheaptalk::graphfile;
use cheaptalk::simulate::{header_for, run_cell, thread_pool};
use cheaptalk::store::{self, LoadError};
use cheaptalk_core::gateway::NoBackend;
use cheaptalk_core::topology::{gen_graph, NetworkSpec, TopologyKind};

const GRID: &str = r#"
seed = 3

[[grid]]
models = ["scripted"]
frames = ["neutral"]
treatments = ["full_message"]
simulations = 100
policies = [{ kind = "bernoulli", p_coop = 0.6 }, { kind = "tit-for-tat" }]
"#;

fn cell() -> (config::Grid, usize) {
    let grid = config::build(config::parse(GRID).unwrap()).unwrap();
    assert_eq!(grid.cells.len(), 1);
    (grid, 0)
}

#[test]
fn transcripts_round_trip() {
    let (grid, i) = cell();
    let c = &grid.cells[i];
    let transcripts = run_cell(c, &grid.templates, &NoBackend, &thread_pool(2).unwrap()).unwrap();
    assert_eq!(transcripts.len(), 100);
    let dir = tempfile::tempdir().unwrap();
    let path = store::transcripts_path(dir.path(), c.key());
    store::persist(&path, &header_for(c), &transcripts).unwrap();
    let (header, back) = store::load(&path).unwrap();
    assert_eq!(header, header_for(c));
    assert_eq!(header.simulation_seeds.len(), 100);
    assert_eq!(back, transcripts);
    assert_eq!(store::load_header(&path).unwrap(), header);
    // nothing but the final file is left behind
    let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from(store::TRANSCRIPTS_FILE)]);
}

#[test]
fn empty_store_has_only_a_header() {
    let (grid, i) = cell();
    let c = &grid.cells[i];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    store::persist(&path, &header_for(c), &[]).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1);
    let (_, back) = store::load(&path).unwrap();
    assert!(back.is_empty());
}

#[test]
fn corrupted_line_is_named() {
    let (grid, i) = cell();
    let c = &grid.cells[i];
    let transcripts = run_cell(c, &grid.templates, &NoBackend, &thread_pool(1).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    store::persist(&path, &header_for(c), &transcripts[..10]).unwrap();
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    let half = lines[6].len() / 2;
    lines[6].truncate(half);
    fs::write(&path, lines.join("\n")).unwrap();
    match store::load(&path) {
        Err(LoadError::Line { line, .. }) => assert_eq!(line, 7),
        other => panic!("unexpected {other:?}"),
    }
    let msg = store::load(&path).unwrap_err().to_string();
    assert!(msg.contains("line 7"), "{msg}");

    fs::write(&path, "").unwrap();
    assert!(matches!(store::load(&path), Err(LoadError::MissingHeader { .. })));
}

#[test]
fn edge_list_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [TopologyKind::ErdosRenyi, TopologyKind::PowerLaw, TopologyKind::CorePeriphery] {
        let spec = NetworkSpec::default_for(kind);
        let g = gen_graph(&spec, 11).unwrap();
        let path = dir.path().join(format!("{}.edges", kind.as_str()));
        graphfile::write(&path, &spec, 11, &g).unwrap();
        let back = graphfile::read(&path).unwrap();
        assert_eq!(back.spec, spec);
        assert_eq!(back.seed, 11);
        assert_eq!(back.graph, g);
    }
}

#[test]
fn core_periphery_header_lists_ten_core_ids() {
    let spec = NetworkSpec::default_for(TopologyKind::CorePeriphery);
    let g = gen_graph(&spec, 5).unwrap();
    let text = graphfile::render(&spec, 5, &g);
    let core = text.lines().find_map(|l| l.strip_prefix("# core: ")).unwrap();
    let ids: Vec<u32> = core.split(' ').map(|s| s.parse().unwrap()).collect();
    assert_eq!(ids, (0..10).collect::<Vec<_>>());
    let er = NetworkSpec::default_for(TopologyKind::ErdosRenyi);
    assert!(!graphfile::render(&er, 5, &gen_graph(&er, 5).unwrap()).contains("# core:"));
}

#[test]
fn malformed_edge_line_is_named() {
    let spec = NetworkSpec::default_for(TopologyKind::ErdosRenyi);
    let g = gen_graph(&spec, 1).unwrap();
    let mut text = graphfile::render(&spec, 1, &g);
    text.push_str("3 x\n");
    let err = graphfile::parse(&text).unwrap_err();
    let line = text.lines().count();
    assert!(err.contains(&format!("line {line}")), "{err}");
}

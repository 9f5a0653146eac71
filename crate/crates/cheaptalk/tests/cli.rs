use std::collections::BTreeMap;
use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cheaptalk::mock::{MockConfig, MockServer};
use cheaptalk::simulate::{Manifest, MANIFEST_FILE};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cheaptalk"));
    c.env_remove("CHEAPTALK_BASE_URL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SCRIPTED: &str = r#"
seed = 99

[[grid]]
models = ["scripted"]
frames = ["neutral", "biz", "team"]
simulations = 20
policies = [{ kind = "bernoulli", p_coop = 0.7 }, { kind = "tit-for-tat" }]

[[grid]]
models = ["scripted"]
frames = ["IR"]
modes = ["erdos-renyi"]
simulations = 3
rounds = 4
agents = 12
network = { kind = "erdos-renyi", p = 0.3 }
policies = [{ kind = "bernoulli", p_coop = 0.5 }, { kind = "tit-for-tat" }]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("grid.toml");
    fs::write(&p, text).unwrap();
    p
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn simulate(config: &Path, out: &Path, workers: &str) -> Output {
    run(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers])
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["simulate"])), 1);
    assert_eq!(code(&run(&["graph-gen", "--kind", "erdos-renyi", "--p", "2", "--out", "/tmp/x"])), 1);
}

#[test]
fn config_errors_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SCRIPTED.replace("p_coop = 0.7", "p_coop = 7"));
    let o = simulate(&cfg, &dir.path().join("out"), "1");
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("grid[0].policies[0]"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_results_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "--results", dir.path().join("nothing").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn identical_output_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SCRIPTED);
    let (a, b) = (dir.path().join("w1"), dir.path().join("w4"));
    assert_eq!(code(&simulate(&cfg, &a, "1")), 0);
    assert_eq!(code(&simulate(&cfg, &b, "4")), 0);
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert!(sa.keys().any(|k| k.ends_with("transcripts.jsonl")));
    assert!(sa.keys().any(|k| k.to_string_lossy().contains("graph-002.edges")));
    assert_eq!(sa, sb);

    // analysis is likewise independent of the worker count
    for (results, workers) in [(&a, "1"), (&b, "3")] {
        let o = run(&["analyze", "--results", results.to_str().unwrap(), "--iterations", "300", "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(fs::read(a.join("analysis.json")).unwrap(), fs::read(b.join("analysis.json")).unwrap());
    let o = run(&["report", "--analysis", a.join("analysis.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("full_message vs no_messaging | standard | temperature 0.8 | dyadic"), "{text}");
    assert!(text.contains("| erdos-renyi"), "{text}");
    assert!(text.contains("3/3 positive") || text.contains("/3 positive"), "{text}");
    assert!(text.contains("Directional consistency     n/a"), "{text}");
}

#[test]
fn resume_skips_completed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SCRIPTED);
    let (full, partial) = (dir.path().join("full"), dir.path().join("partial"));
    assert_eq!(code(&simulate(&cfg, &full, "2")), 0);
    assert_eq!(code(&simulate(&cfg, &partial, "2")), 0);

    // interrupt: drop two cells as if the run had stopped before them
    let text = fs::read_to_string(partial.join(MANIFEST_FILE)).unwrap();
    let mut manifest: Manifest = serde_json::from_str(&text).unwrap();
    let ids: Vec<String> = manifest.cells.keys().take(2).cloned().collect();
    manifest.cells.remove(&ids[0]);
    fs::remove_dir_all(partial.join(&ids[1])).unwrap();
    fs::write(partial.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest).unwrap()).unwrap();

    let o = simulate(&cfg, &partial, "3");
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("2 cells run, 6 skipped"), "{}", stdout(&o));
    assert_eq!(snapshot(&full), snapshot(&partial));

    let o = simulate(&cfg, &partial, "1");
    assert!(stdout(&o).starts_with("0 cells run, 8 skipped"), "{}", stdout(&o));
}

const MODEL_GRID: &str = r#"
seed = 5

[gateway]
timeout_ms = 2000
retries = 0

[[grid]]
models = ["llama3"]
frames = ["neutral"]
simulations = 3
rounds = 3
policies = [{ kind = "model-backed" }]
"#;

#[test]
fn unreachable_model_server_fails_preflight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MODEL_GRID);
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", l.local_addr().unwrap());
    drop(l);
    let out = dir.path().join("out");
    let o = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("CHEAPTALK_BASE_URL", &url)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not usable"), "{}", stderr(&o));
    assert!(!out.join(MANIFEST_FILE).exists());
}

#[test]
fn model_backed_grid_against_mock() {
    let server = MockServer::start(MockConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{MODEL_GRID}\n[[grid]]\nmodels = [\"llama3\"]\nframes = [\"biz\"]\nmodes = [\"power-law\"]\nsimulations = 1\nrounds = 2\nagents = 8\nnetwork = {{ kind = \"power-law\", m = 2, p_triangle = 0.1 }}\npolicies = [{{ kind = \"model-backed\" }}]\n"),
    );
    let out = dir.path().join("out");
    let o = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"])
        .args(["--base-url", &server.base_url()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("4 cells run, 0 skipped, 8 simulations, 0 aborted"), "{}", stdout(&o));
    let reqs = server.requests();
    // dyadic: 2 agents x 3 rounds x 3 sims, one call per agent per round without messaging and two with
    let dyadic = 2 * 3 * 3;
    let network = 8 * 2;
    assert_eq!(reqs.len(), dyadic + 2 * dyadic + network + 2 * network);
    assert!(reqs.iter().all(|r| r["model"] == "llama3"));
}

#[test]
fn unpaired_and_cross_context_pairs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let one = SCRIPTED.replace(
        "frames = [\"neutral\", \"biz\", \"team\"]",
        "frames = [\"neutral\", \"biz\"]\ntreatments = [\"no_messaging\", \"full_message\", \"one_word\"]",
    );
    let cfg = write_config(dir.path(), &one);
    let out = dir.path().join("out");
    assert_eq!(code(&simulate(&cfg, &out, "2")), 0);
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    let id_of = |frame: &str, treatment: &str| {
        manifest
            .cells
            .iter()
            .find(|(_, c)| c.condition.frame.to_string() == frame && c.condition.treatment.to_string() == treatment)
            .map(|(id, _)| id.clone())
            .unwrap()
    };

    // remove one control so its messaging partners are orphans
    let orphan_ctl = id_of("biz", "no_messaging");
    let moved = dir.path().join("moved");
    fs::rename(out.join(&orphan_ctl), &moved).unwrap();
    let o = run(&["analyze", "--results", out.to_str().unwrap(), "--iterations", "50"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains(&id_of("biz", "full_message")), "{}", stderr(&o));
    assert!(stderr(&o).contains(&id_of("biz", "one_word")), "{}", stderr(&o));
    fs::rename(&moved, out.join(&orphan_ctl)).unwrap();

    let pairs = dir.path().join("pairs.toml");
    fs::write(
        &pairs,
        format!(
            "[[pair]]\nno_messaging = \"{}\"\nmessaging = \"{}\"\n",
            id_of("neutral", "no_messaging"),
            id_of("biz", "full_message")
        ),
    )
    .unwrap();
    let o = run(&["analyze", "--results", out.to_str().unwrap(), "--pairs", pairs.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("differ in context"), "{}", stderr(&o));

    fs::write(
        &pairs,
        format!(
            "[[pair]]\nno_messaging = \"{}\"\nmessaging = \"{}\"\n",
            id_of("biz", "no_messaging"),
            id_of("biz", "one_word")
        ),
    )
    .unwrap();
    let rep = dir.path().join("rep");
    let o = run(&[
        "analyze",
        "--results",
        out.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
        "--iterations",
        "200",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["report", "--analysis", rep.join("analysis.json").to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("one_word vs no_messaging"));
    assert!(stdout(&o).contains("Excess significant results  n/a"));
    assert_eq!(fs::read_to_string(rep.join("report.csv")).unwrap().lines().count(), 2);
    assert_eq!(fs::read_to_string(rep.join("report.txt")).unwrap(), stdout(&o));
    let traj = fs::read_to_string(rep.join(id_of("biz", "one_word")).join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("round,rate,n"));
    assert_eq!(traj.lines().count(), 11);
}

#[test]
fn graph_gen_writes_edge_lists() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cp.edges");
    let o = run(&["graph-gen", "--kind", "core-periphery", "--seed", "3", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let f = cheaptalk::graphfile::read(&p).unwrap();
    assert_eq!(f.graph.node_count(), 50);
    assert!(f.graph.is_connected());
    assert!(fs::read_to_string(&p).unwrap().contains("# core: 0 1 2 3 4 5 6 7 8 9\n"));

    let p = dir.path().join("pl.edges");
    let o = run(&["graph-gen", "--kind", "power-law", "--m", "4", "--seed", "3", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let g = cheaptalk::graphfile::read(&p).unwrap().graph;
    assert!(g.degrees().iter().all(|&d| d >= 4));

    let p = dir.path().join("er.edges");
    let o = run(&[
        "graph-gen",
        "--kind",
        "erdos-renyi",
        "--p",
        "0.1",
        "--seed",
        "7",
        "--allow-disconnected",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let a = fs::read(&p).unwrap();
    run(&[
        "graph-gen",
        "--kind",
        "erdos-renyi",
        "--p",
        "0.1",
        "--seed",
        "7",
        "--allow-disconnected",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&p).unwrap(), a);
}

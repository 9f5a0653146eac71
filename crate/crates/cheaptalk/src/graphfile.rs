//! Edge-list files: `#`-prefixed header lines, then one `u v` pair per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cheaptalk_core::topology::{Graph, NetworkSpec};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeListFile {
    pub spec: NetworkSpec,
    pub seed: u64,
    pub graph: Graph,
}

pub fn render(spec: &NetworkSpec, seed: u64, graph: &Graph) -> String {
    let mut out = String::from("# cheaptalk edge list\n");
    let _ = writeln!(out, "# spec: {}", serde_json::to_string(spec).expect("spec serializes"));
    let _ = writeln!(out, "# seed: {seed}");
    let _ = writeln!(out, "# nodes: {}", graph.node_count());
    let _ = writeln!(out, "# edges: {}", graph.edge_count());
    if let Some(core) = spec.core_size() {
        let ids: Vec<String> = (0..core).map(|i| i.to_string()).collect();
        let _ = writeln!(out, "# core: {}", ids.join(" "));
    }
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn write(path: &Path, spec: &NetworkSpec, seed: u64, graph: &Graph) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, render(spec, seed, graph)).map_err(|e| Error::io(path, e))
}

pub fn parse(text: &str) -> std::result::Result<EdgeListFile, String> {
    let mut spec: Option<NetworkSpec> = None;
    let mut seed = None;
    let mut nodes = None;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let n = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let Some((key, value)) = rest.split_once(':') else { continue };
            let value = value.trim();
            let num = |v: &str| v.parse::<u64>().map_err(|e| format!("line {n}: {e}"));
            match key.trim() {
                "spec" => spec = Some(serde_json::from_str(value).map_err(|e| format!("line {n}: {e}"))?),
                "seed" => seed = Some(num(value)?),
                "nodes" => nodes = Some(num(value)? as u32),
                _ => {}
            }
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<u32>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
            _ => return Err(format!("line {n}: expected \"u v\", found {line:?}")),
        }
    }
    let spec = spec.ok_or("missing \"# spec:\" header")?;
    let seed = seed.ok_or("missing \"# seed:\" header")?;
    let nodes = nodes.unwrap_or(spec.n);
    let graph = Graph::from_edges(nodes, edges).map_err(|e| e.to_string())?;
    Ok(EdgeListFile { spec, seed, graph })
}

pub fn read(path: &Path) -> Result<EdgeListFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text).map_err(|m| Error::Runtime(format!("{}: {m}", path.display())))
}

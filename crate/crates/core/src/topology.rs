//! Random interaction networks: Erdős–Rényi, Holme–Kim power-law and a
//! two-block core–periphery stochastic block model.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::{self, derive_seed, rng_from_seed, Rng};

pub type NodeId = u32;

/// Upper bound on generation attempts when connectivity is required.
pub const MAX_CONNECT_ATTEMPTS: u32 = 100;

/// Undirected simple graph over `0..node_count`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    node_count: u32,
    /// Stored with `u < v`.
    edges: BTreeSet<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(&'static str),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(NodeId, NodeId),
    #[error("edge ({u}, {v}) references a node outside 0..{node_count}")]
    NodeOutOfRange { u: NodeId, v: NodeId, node_count: u32 },
    #[error("no connected graph after {attempts} attempts")]
    NotConnected { attempts: u32 },
}

impl Graph {
    pub fn empty(node_count: u32) -> Graph {
        Graph { node_count, edges: BTreeSet::new() }
    }

    pub fn complete(node_count: u32) -> Graph {
        let mut g = Graph::empty(node_count);
        for u in 0..node_count {
            for v in (u + 1)..node_count {
                g.edges.insert((u, v));
            }
        }
        g
    }

    pub fn star(leaves: u32) -> Graph {
        let mut g = Graph::empty(leaves + 1);
        for v in 1..=leaves {
            g.edges.insert((0, v));
        }
        g
    }

    /// Builds a graph from an edge list, rejecting self-loops and out-of-range ids.
    /// Duplicate pairs (in either orientation) collapse to one edge.
    pub fn from_edges<I>(node_count: u32, edges: I) -> Result<Graph, TopologyError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Graph::empty(node_count);
        for (u, v) in edges {
            g.try_add_edge(u, v)?;
        }
        Ok(g)
    }

    fn try_add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool, TopologyError> {
        if u == v {
            return Err(TopologyError::SelfLoop(u, v));
        }
        if u >= self.node_count || v >= self.node_count {
            return Err(TopologyError::NodeOutOfRange { u, v, node_count: self.node_count });
        }
        Ok(self.edges.insert((u.min(v), u.max(v))))
    }

    fn add_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        debug_assert!(u != v && u < self.node_count && v < self.node_count);
        self.edges.insert((u.min(v), u.max(v)))
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.node_count as usize];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count as usize];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Connected in the usual sense; graphs with fewer than two nodes count as
    /// connected only when non-empty.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count as usize;
        if n == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    reached += 1;
                    queue.push_back(v as usize);
                }
            }
        }
        reached == n
    }

    pub fn triangle_count(&self) -> usize {
        let adj = self.adjacency();
        let mut count = 0;
        for &(u, v) in &self.edges {
            // count each triangle once via its smallest-id apex ordering u < v < w
            count += adj[u as usize].iter().filter(|&&w| w > v && adj[v as usize].binary_search(&w).is_ok()).count();
        }
        count
    }
}

/// Generator family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NetworkModel {
    ErdosRenyi {
        p: f64,
    },
    /// Holme–Kim preferential attachment with triad formation.
    PowerLaw {
        m: u32,
        p_triangle: f64,
    },
    /// Two-block SBM; the first `ceil(core_fraction * n)` ids form the core.
    CorePeriphery {
        core_fraction: f64,
        p_core_core: f64,
        p_core_periphery: f64,
        p_periphery_periphery: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    ErdosRenyi,
    PowerLaw,
    CorePeriphery,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::ErdosRenyi => "erdos-renyi",
            TopologyKind::PowerLaw => "power-law",
            TopologyKind::CorePeriphery => "core-periphery",
        }
    }
}

impl NetworkModel {
    pub fn kind(&self) -> TopologyKind {
        match self {
            NetworkModel::ErdosRenyi { .. } => TopologyKind::ErdosRenyi,
            NetworkModel::PowerLaw { .. } => TopologyKind::PowerLaw,
            NetworkModel::CorePeriphery { .. } => TopologyKind::CorePeriphery,
        }
    }

    /// Parameters used for the 50-agent experiments.
    pub fn default_for(kind: TopologyKind) -> NetworkModel {
        match kind {
            TopologyKind::ErdosRenyi => NetworkModel::ErdosRenyi { p: 0.1 },
            TopologyKind::PowerLaw => NetworkModel::PowerLaw { m: 4, p_triangle: 0.1 },
            TopologyKind::CorePeriphery => NetworkModel::CorePeriphery {
                core_fraction: 0.2,
                p_core_core: 0.56,
                p_core_periphery: 0.10,
                p_periphery_periphery: 0.06,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n: u32,
    pub model: NetworkModel,
    pub require_connected: bool,
}

impl NetworkSpec {
    pub fn new(n: u32, model: NetworkModel) -> NetworkSpec {
        NetworkSpec { n, model, require_connected: true }
    }

    pub fn default_for(kind: TopologyKind) -> NetworkSpec {
        NetworkSpec::new(50, NetworkModel::default_for(kind))
    }

    pub fn kind(&self) -> TopologyKind {
        self.model.kind()
    }

    /// Number of core nodes, if this is a core–periphery spec.
    pub fn core_size(&self) -> Option<u32> {
        match self.model {
            NetworkModel::CorePeriphery { core_fraction, .. } => Some(core_size(self.n, core_fraction)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        fn prob(p: f64) -> bool {
            (0.0..=1.0).contains(&p)
        }
        if self.n == 0 {
            return Err(TopologyError::InvalidSpec("n must be positive"));
        }
        match self.model {
            NetworkModel::ErdosRenyi { p } => {
                if !prob(p) {
                    return Err(TopologyError::InvalidSpec("p must lie in [0, 1]"));
                }
            }
            NetworkModel::PowerLaw { m, p_triangle } => {
                if m < 1 {
                    return Err(TopologyError::InvalidSpec("m must be at least 1"));
                }
                if m >= self.n {
                    return Err(TopologyError::InvalidSpec("m must be smaller than n"));
                }
                if !prob(p_triangle) {
                    return Err(TopologyError::InvalidSpec("p_triangle must lie in [0, 1]"));
                }
            }
            NetworkModel::CorePeriphery { core_fraction, p_core_core, p_core_periphery, p_periphery_periphery } => {
                if !(core_fraction > 0.0 && core_fraction < 1.0) {
                    return Err(TopologyError::InvalidSpec("core_fraction must lie in (0, 1)"));
                }
                if !(prob(p_core_core) && prob(p_core_periphery) && prob(p_periphery_periphery)) {
                    return Err(TopologyError::InvalidSpec("block probabilities must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn core_size(n: u32, core_fraction: f64) -> u32 {
    // tolerance so that e.g. 0.2 * 50 is 10, not 11
    let raw = libm::ceil(core_fraction * n as f64 - 1e-9);
    (raw.max(0.0) as u32).min(n)
}

/// Draws one graph. With `require_connected`, rejected samples are redrawn
/// from seeds derived from `seed` until one is connected or the attempt cap
/// is hit.
pub fn gen_graph(spec: &NetworkSpec, seed: u64) -> Result<Graph, TopologyError> {
    spec.validate()?;
    if !spec.require_connected {
        return Ok(sample(spec, &mut rng_from_seed(seed)));
    }
    for attempt in 0..MAX_CONNECT_ATTEMPTS {
        let attempt_seed =
            if attempt == 0 { seed } else { derive_seed(seed, seed::domain::GRAPH_RETRY, attempt as u64) };
        let g = sample(spec, &mut rng_from_seed(attempt_seed));
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(TopologyError::NotConnected { attempts: MAX_CONNECT_ATTEMPTS })
}

fn sample(spec: &NetworkSpec, rng: &mut Rng) -> Graph {
    match spec.model {
        NetworkModel::ErdosRenyi { p } => erdos_renyi(spec.n, p, rng),
        NetworkModel::PowerLaw { m, p_triangle } => holme_kim(spec.n, m, p_triangle, rng),
        NetworkModel::CorePeriphery { core_fraction, p_core_core, p_core_periphery, p_periphery_periphery } => {
            let core = core_size(spec.n, core_fraction);
            two_block(spec.n, core, [p_core_core, p_core_periphery, p_periphery_periphery], rng)
        }
    }
}

fn erdos_renyi(n: u32, p: f64, rng: &mut Rng) -> Graph {
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    g
}

fn two_block(n: u32, core: u32, probs: [f64; 3], rng: &mut Rng) -> Graph {
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            let p = match (u < core, v < core) {
                (true, true) => probs[0],
                (false, false) => probs[2],
                _ => probs[1],
            };
            if rng.gen::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Holme–Kim growth. Seed graph is a clique on `m` nodes; each arriving node
/// makes exactly `m` distinct links. The first is preferential; every later
/// one is, with probability `p_triangle`, a triad-closing link to a random
/// unlinked neighbor of the most recent preferential target, and otherwise
/// preferential again.
fn holme_kim(n: u32, m: u32, p_triangle: f64, rng: &mut Rng) -> Graph {
    let mut g = Graph::empty(n);
    let mut degree = vec![0usize; n as usize];
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n as usize];
    fn link(g: &mut Graph, degree: &mut [usize], adj: &mut [Vec<NodeId>], u: NodeId, v: NodeId) {
        g.add_edge(u, v);
        degree[u as usize] += 1;
        degree[v as usize] += 1;
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    for u in 0..m {
        for v in (u + 1)..m {
            link(&mut g, &mut degree, &mut adj, u, v);
        }
    }
    for source in m..n {
        let mut linked: Vec<NodeId> = Vec::with_capacity(m as usize);
        let mut last_target: Option<NodeId> = None;
        while (linked.len() as u32) < m {
            if let Some(t) = last_target {
                if rng.gen::<f64>() < p_triangle {
                    let candidates: Vec<NodeId> =
                        adj[t as usize].iter().copied().filter(|&w| w != source && !linked.contains(&w)).collect();
                    if !candidates.is_empty() {
                        let w = candidates[rng.gen_range(0..candidates.len())];
                        link(&mut g, &mut degree, &mut adj, source, w);
                        linked.push(w);
                        continue;
                    }
                }
            }
            let t = preferential_pick(&degree[..source as usize], &linked, rng);
            link(&mut g, &mut degree, &mut adj, source, t);
            linked.push(t);
            last_target = Some(t);
        }
    }
    g
}

/// Degree-proportional choice among `0..degree.len()` excluding `exclude`;
/// uniform when every eligible degree is zero.
fn preferential_pick(degree: &[usize], exclude: &[NodeId], rng: &mut Rng) -> NodeId {
    let eligible = |i: usize| !exclude.contains(&(i as NodeId));
    let total: usize = (0..degree.len()).filter(|&i| eligible(i)).map(|i| degree[i]).sum();
    if total == 0 {
        let pool: Vec<usize> = (0..degree.len()).filter(|&i| eligible(i)).collect();
        return pool[rng.gen_range(0..pool.len())] as NodeId;
    }
    let mut ticket = rng.gen_range(0..total);
    for (i, &d) in degree.iter().enumerate() {
        if !eligible(i) {
            continue;
        }
        if ticket < d {
            return i as NodeId;
        }
        ticket -= d;
    }
    unreachable!("ticket drawn below total weight")
}

/// Edge densities of the two blocks and the cross block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDensities {
    pub core_size: u32,
    pub core_core: f64,
    pub core_periphery: f64,
    pub periphery_periphery: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: u32,
    pub edge_count: usize,
    pub density: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub connected: bool,
    pub triangles: usize,
    pub blocks: Option<BlockDensities>,
}

fn ratio(count: usize, pairs: u64) -> f64 {
    if pairs == 0 {
        0.0
    } else {
        count as f64 / pairs as f64
    }
}

fn pairs(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

pub fn graph_stats(g: &Graph, spec: &NetworkSpec) -> GraphStats {
    let n = g.node_count();
    let degrees = g.degrees();
    let blocks = spec.core_size().map(|core| {
        let mut counts = [0usize; 3];
        for (u, v) in g.edges() {
            match (u < core, v < core) {
                (true, true) => counts[0] += 1,
                (false, false) => counts[2] += 1,
                _ => counts[1] += 1,
            }
        }
        let periphery = (n - core) as u64;
        BlockDensities {
            core_size: core,
            core_core: ratio(counts[0], pairs(core as u64)),
            core_periphery: ratio(counts[1], core as u64 * periphery),
            periphery_periphery: ratio(counts[2], pairs(periphery)),
        }
    });
    GraphStats {
        node_count: n,
        edge_count: g.edge_count(),
        density: ratio(g.edge_count(), pairs(n as u64)),
        min_degree: degrees.iter().copied().min().unwrap_or(0),
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        mean_degree: if n == 0 { 0.0 } else { 2.0 * g.edge_count() as f64 / n as f64 },
        connected: g.is_connected(),
        triangles: g.triangle_count(),
        blocks,
    }
}

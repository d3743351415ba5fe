//! Tree builders: the forward recursion and the growth-coalescent reversal.
//!
//! The forward construction reads the sequence left to right; a `+1` step
//! attaches a new vertex to a uniform active vertex, a `-1` step freezes a
//! uniform active vertex. The reversed construction scans right to left over
//! a forest of rooted trees: a `-1` step at index `i` inserts a singleton
//! labelled `i`, a `+1` step joins the roots of a uniform ordered pair of
//! distinct trees with an edge labelled `i`. Both yield the same law once the
//! active labels are collapsed; the reversed build additionally records the
//! merge genealogy used for coalescence-time queries.

use crate::sequences::{walk, FreezeSequence};
use rand::Rng;
use thiserror::Error;

pub type VertexId = u32;

const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("walk extinct at step {tau}, cannot read {n} steps")]
    Extinct { tau: usize, n: usize },
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
}

/// Vertex label: the freezing step index, or the active rank `1..=S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexLabel {
    Frozen(u32),
    Active(u32),
}

impl std::fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexLabel::Frozen(t) => write!(f, "{t}"),
            VertexLabel::Active(j) => write!(f, "a{j}"),
        }
    }
}

impl std::str::FromStr for VertexLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix('a') {
            let j: u32 = rest
                .parse()
                .map_err(|_| format!("bad active label `{s}`"))?;
            Ok(VertexLabel::Active(j))
        } else {
            let t: u32 = s
                .parse()
                .map_err(|_| format!("bad frozen label `{s}`"))?;
            Ok(VertexLabel::Frozen(t))
        }
    }
}

/// Rooted, vertex- and edge-labelled tree produced by either construction.
#[derive(Debug, Clone)]
pub struct FrozenTree {
    n: usize,
    parent: Vec<u32>,
    edge_label: Vec<u32>,
    /// Freezing step index per vertex; 0 means still active.
    frozen_time: Vec<u32>,
    /// Active vertex ids in increasing order; rank gives the active label.
    active_ids: Vec<u32>,
    root: u32,
}

impl FrozenTree {
    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    /// Number of steps the build read.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        let p = self.parent[v as usize];
        (p != NO_PARENT).then_some(p)
    }

    /// Step index at which the edge to the parent appeared; `None` at the root.
    pub fn edge_label(&self, v: VertexId) -> Option<u32> {
        let e = self.edge_label[v as usize];
        (e != 0).then_some(e)
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.frozen_time[v as usize] == 0
    }

    pub fn vertex_label(&self, v: VertexId) -> VertexLabel {
        let t = self.frozen_time[v as usize];
        if t > 0 {
            VertexLabel::Frozen(t)
        } else {
            let rank = self
                .active_ids
                .binary_search(&v)
                .expect("active vertex present in active_ids");
            VertexLabel::Active(rank as u32 + 1)
        }
    }

    /// Reversed-time birth index: `i - 1` for a vertex frozen at `i`, `n` for
    /// an active vertex.
    pub fn birth(&self, v: VertexId) -> u32 {
        let t = self.frozen_time[v as usize];
        if t > 0 {
            t - 1
        } else {
            self.n as u32
        }
    }

    pub fn actives(&self) -> &[VertexId] {
        &self.active_ids
    }

    pub fn vertex_with_label(&self, label: VertexLabel) -> Option<VertexId> {
        match label {
            VertexLabel::Active(j) => self.active_ids.get(j as usize - 1).copied(),
            VertexLabel::Frozen(t) => self
                .frozen_time
                .iter()
                .position(|&ft| ft == t)
                .map(|i| i as u32),
        }
    }

    /// Per-vertex depth (edge count to the root), for trees built in any
    /// vertex order.
    pub fn depths(&self) -> Vec<u32> {
        let n = self.vertex_count();
        let mut depth = vec![u32::MAX; n];
        depth[self.root as usize] = 0;
        let mut chain: Vec<u32> = Vec::new();
        for v in 0..n as u32 {
            if depth[v as usize] != u32::MAX {
                continue;
            }
            let mut w = v;
            while depth[w as usize] == u32::MAX {
                chain.push(w);
                w = self.parent[w as usize];
            }
            let mut d = depth[w as usize];
            while let Some(x) = chain.pop() {
                d += 1;
                depth[x as usize] = d;
            }
        }
        depth
    }

    /// Children adjacency, index by vertex id.
    pub fn children_lists(&self) -> Vec<Vec<VertexId>> {
        let mut children = vec![Vec::new(); self.vertex_count()];
        for v in 0..self.vertex_count() as u32 {
            if let Some(p) = self.parent(v) {
                children[p as usize].push(v);
            }
        }
        children
    }

}

/// Outcome of the forward construction. `stalled` is set when the walk died
/// before all steps were read; the remaining steps left the tree unchanged.
#[derive(Debug, Clone)]
pub struct ForwardBuild {
    pub tree: FrozenTree,
    pub stalled: bool,
}

/// Forward construction. Never fails: a stalled build returns the tree as of
/// the extinction time together with the flag.
pub fn build_forward<R: Rng + ?Sized>(seq: &FreezeSequence, rng: &mut R) -> ForwardBuild {
    let n = seq.len();
    let cap = n / 2 + 2;
    let mut parent: Vec<u32> = Vec::with_capacity(cap);
    let mut edge_label: Vec<u32> = Vec::with_capacity(cap);
    let mut frozen_time: Vec<u32> = Vec::with_capacity(cap);
    let mut active: Vec<u32> = Vec::with_capacity(cap);

    parent.push(NO_PARENT);
    edge_label.push(0);
    frozen_time.push(0);
    active.push(0);

    let mut stalled = false;
    for (idx, &step) in seq.steps().iter().enumerate() {
        if active.is_empty() {
            stalled = true;
            break;
        }
        let i = (idx + 1) as u32;
        let j = rng.random_range(0..active.len());
        if step > 0 {
            let p = active[j];
            let v = parent.len() as u32;
            parent.push(p);
            edge_label.push(i);
            frozen_time.push(0);
            active.push(v);
        } else {
            let v = active.swap_remove(j);
            frozen_time[v as usize] = i;
        }
    }
    active.sort_unstable();
    ForwardBuild {
        tree: FrozenTree {
            n,
            parent,
            edge_label,
            frozen_time,
            active_ids: active,
            root: 0,
        },
        stalled,
    }
}

/// Forward construction that rejects sequences whose walk dies early.
pub fn build_forward_strict<R: Rng + ?Sized>(
    seq: &FreezeSequence,
    rng: &mut R,
) -> Result<FrozenTree, BuildError> {
    let n = seq.len();
    if let Some(tau) = walk(seq).tau() {
        if tau < n {
            return Err(BuildError::Extinct { tau, n });
        }
    }
    Ok(build_forward(seq, rng).tree)
}

/// One coalescence event: at scan step `time` (a `+1` step) the roots of two
/// clusters were joined; `surviving` kept the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeEvent {
    pub time: u32,
    pub root_a: VertexId,
    pub root_b: VertexId,
    pub surviving: VertexId,
}

/// Merge genealogy of the reversed construction: a binary merge tree whose
/// leaves are the tree vertices and whose internal nodes carry coalescence
/// times, supporting `coal(u, v)` queries by lowest common ancestor.
#[derive(Debug, Clone)]
pub struct MergeGenealogy {
    events: Vec<MergeEvent>,
    node_parent: Vec<u32>,
    node_time: Vec<u32>,
    node_depth: Vec<u32>,
    leaf_of: Vec<u32>,
    n: usize,
}

impl MergeGenealogy {
    pub fn events(&self) -> &[MergeEvent] {
        &self.events
    }

    pub fn vertex_count(&self) -> usize {
        self.leaf_of.len()
    }

    /// Birth time of a vertex (the time label of its merge-tree leaf).
    pub fn birth(&self, v: VertexId) -> u32 {
        self.node_time[self.leaf_of[v as usize] as usize]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest reversed-time index at which `u` and `v` lie in one cluster.
    /// By convention `coal(u, u)` is the birth time of `u`.
    pub fn coal_time(&self, u: VertexId, v: VertexId) -> Result<u32, BuildError> {
        let nv = self.leaf_of.len() as u32;
        if u >= nv {
            return Err(BuildError::UnknownVertex(u));
        }
        if v >= nv {
            return Err(BuildError::UnknownVertex(v));
        }
        let mut a = self.leaf_of[u as usize];
        let mut b = self.leaf_of[v as usize];
        while self.node_depth[a as usize] > self.node_depth[b as usize] {
            a = self.node_parent[a as usize];
        }
        while self.node_depth[b as usize] > self.node_depth[a as usize] {
            b = self.node_parent[b as usize];
        }
        while a != b {
            a = self.node_parent[a as usize];
            b = self.node_parent[b as usize];
        }
        Ok(self.node_time[a as usize])
    }
}

/// Growth-coalescent construction: scan the sequence backwards, inserting
/// frozen singletons at `-1` steps and merging a uniform ordered pair of
/// cluster roots at `+1` steps. Requires the walk to survive through `n - 1`
/// (the final step may hit zero).
pub fn build_coalescent<R: Rng + ?Sized>(
    seq: &FreezeSequence,
    rng: &mut R,
) -> Result<(FrozenTree, MergeGenealogy), BuildError> {
    let n = seq.len();
    let w = walk(seq);
    if let Some(tau) = w.tau() {
        if tau < n {
            return Err(BuildError::Extinct { tau, n });
        }
    }
    let s_n = w.value(n) as usize;
    let n_vertices = (s_n + n).div_ceil(2);
    let n_nodes = 2 * n_vertices - 1;

    let mut parent = vec![NO_PARENT; n_vertices];
    let mut edge_label = vec![0u32; n_vertices];
    let mut frozen_time = vec![0u32; n_vertices];
    let mut next_vertex = s_n as u32;

    let mut node_parent = vec![NO_PARENT; n_nodes];
    let mut node_time = vec![0u32; n_nodes];
    let mut leaf_of = vec![0u32; n_vertices];
    let mut next_node = 0u32;
    let mut events = Vec::with_capacity(n_vertices - 1);

    // Live clusters as (root vertex, merge-tree node).
    let mut roots: Vec<(u32, u32)> = Vec::with_capacity(w.max_value() as usize + 1);
    for v in 0..s_n as u32 {
        let node = next_node;
        next_node += 1;
        node_time[node as usize] = n as u32;
        leaf_of[v as usize] = node;
        roots.push((v, node));
    }

    for i in (1..=n).rev() {
        if seq.step(i) < 0 {
            let v = next_vertex;
            next_vertex += 1;
            frozen_time[v as usize] = i as u32;
            let node = next_node;
            next_node += 1;
            node_time[node as usize] = (i - 1) as u32;
            leaf_of[v as usize] = node;
            roots.push((v, node));
        } else {
            let m = roots.len();
            debug_assert!(m >= 2, "a +1 step needs at least two clusters");
            let j1 = rng.random_range(0..m);
            let mut j2 = rng.random_range(0..m - 1);
            if j2 >= j1 {
                j2 += 1;
            }
            let (rv1, rn1) = roots[j1];
            let (rv2, rn2) = roots[j2];
            parent[rv2 as usize] = rv1;
            edge_label[rv2 as usize] = i as u32;
            events.push(MergeEvent {
                time: i as u32,
                root_a: rv1,
                root_b: rv2,
                surviving: rv1,
            });
            let node = next_node;
            next_node += 1;
            node_time[node as usize] = (i - 1) as u32;
            node_parent[rn1 as usize] = node;
            node_parent[rn2 as usize] = node;
            roots[j1] = (rv1, node);
            roots.swap_remove(j2);
        }
    }
    debug_assert_eq!(roots.len(), 1);
    debug_assert_eq!(next_vertex as usize, n_vertices);
    debug_assert_eq!(next_node as usize, n_nodes);
    let root = roots[0].0;

    // Merge-tree depths; parents always have larger ids than their children.
    let mut node_depth = vec![0u32; n_nodes];
    for id in (0..n_nodes).rev() {
        let p = node_parent[id];
        if p != NO_PARENT {
            node_depth[id] = node_depth[p as usize] + 1;
        }
    }

    let active_ids: Vec<u32> = (0..s_n as u32).collect();
    let tree = FrozenTree {
        n,
        parent,
        edge_label,
        frozen_time,
        active_ids,
        root,
    };
    let gen = MergeGenealogy {
        events,
        node_parent,
        node_time,
        node_depth,
        leaf_of,
        n,
    };
    Ok((tree, gen))
}

/// Convenience for `gen.coal_time(u, v)`.
pub fn coal_time(gen: &MergeGenealogy, u: VertexId, v: VertexId) -> Result<u32, BuildError> {
    gen.coal_time(u, v)
}

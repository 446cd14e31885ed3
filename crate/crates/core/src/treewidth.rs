//! Tree decompositions of small graphs.
//!
//! Exact treewidth is computed by dynamic programming over vertex subsets
//! (the best elimination ordering of every prefix set); larger graphs get a
//! minimum-fill-in elimination ordering. Every decomposition can be checked
//! with [`verify_decomposition`].

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};

/// Largest graph [`exact_treewidth`] accepts.
pub const EXACT_TREEWIDTH_LIMIT: usize = 20;

/// Simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Adds `{u, v}`; loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    /// Edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.range(u + 1..).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<usize>>,
    pub tree_edges: Vec<(usize, usize)>,
    pub width: usize,
    pub exactness: Exactness,
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeConfig {
    /// Graphs with at most this many vertices are decomposed exactly.
    pub exact_threshold: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { exact_threshold: 14 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("bags and tree edges do not form a tree")]
    NotATree,
    #[error("bag {bag} mentions vertex {vertex}, which is not in the graph")]
    UnknownVertex { bag: usize, vertex: usize },
    #[error("vertex {0} is in no bag")]
    VertexUncovered(usize),
    #[error("edge uncovered: ({0}, {1})")]
    EdgeUncovered(usize, usize),
    #[error("connectivity: the bags containing vertex {0} are not connected")]
    Disconnected(usize),
    #[error("claimed width {claimed}, actual width {actual}")]
    WidthMismatch { claimed: usize, actual: usize },
}

fn bag_width(bags: &[BTreeSet<usize>]) -> usize {
    bags.iter().map(BTreeSet::len).max().unwrap_or(0).saturating_sub(1)
}

/// Checks the decomposition axioms and returns the recomputed width.
pub fn verify_decomposition(g: &Graph, td: &TreeDecomposition) -> Result<usize, DecompositionError> {
    let n_bags = td.bags.len();
    if n_bags == 0 || td.tree_edges.len() != n_bags - 1 {
        return Err(DecompositionError::NotATree);
    }
    let mut tree = vec![Vec::new(); n_bags];
    for &(x, y) in &td.tree_edges {
        if x >= n_bags || y >= n_bags || x == y {
            return Err(DecompositionError::NotATree);
        }
        tree[x].push(y);
        tree[y].push(x);
    }
    // n-1 edges plus connectivity makes it a tree.
    if connected_count(&tree, |_| true) != 1 {
        return Err(DecompositionError::NotATree);
    }
    for (i, bag) in td.bags.iter().enumerate() {
        if let Some(&v) = bag.iter().find(|&&v| v >= g.vertex_count()) {
            return Err(DecompositionError::UnknownVertex { bag: i, vertex: v });
        }
    }
    for v in 0..g.vertex_count() {
        if !td.bags.iter().any(|b| b.contains(&v)) {
            return Err(DecompositionError::VertexUncovered(v));
        }
    }
    for (u, v) in g.edges() {
        if !td.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return Err(DecompositionError::EdgeUncovered(u, v));
        }
    }
    for v in 0..g.vertex_count() {
        if connected_count(&tree, |bag| td.bags[bag].contains(&v)) != 1 {
            return Err(DecompositionError::Disconnected(v));
        }
    }
    let actual = bag_width(&td.bags);
    if actual != td.width {
        return Err(DecompositionError::WidthMismatch {
            claimed: td.width,
            actual,
        });
    }
    Ok(actual)
}

/// Number of connected components among tree nodes selected by `keep`.
fn connected_count(tree: &[Vec<usize>], keep: impl Fn(usize) -> bool) -> usize {
    let mut seen = vec![false; tree.len()];
    let mut components = 0;
    for start in 0..tree.len() {
        if seen[start] || !keep(start) {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in &tree[x] {
                if !seen[y] && keep(y) {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    components
}

/// Builds the decomposition induced by eliminating vertices in `order`.
pub fn decomposition_from_order(g: &Graph, order: &[usize], exactness: Exactness) -> TreeDecomposition {
    let n = g.vertex_count();
    if n == 0 {
        return TreeDecomposition {
            bags: vec![BTreeSet::new()],
            tree_edges: Vec::new(),
            width: 0,
            exactness,
        };
    }
    let mut position = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let mut adj = g.adj.clone();
    let mut bags = vec![BTreeSet::new(); n];
    let mut parent = vec![None; n];
    for &v in order {
        let later: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &x) in later.iter().enumerate() {
            adj[x].remove(&v);
            for &y in &later[i + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        parent[v] = later.iter().copied().min_by_key(|&u| position[u]);
        let mut bag: BTreeSet<usize> = later.into_iter().collect();
        bag.insert(v);
        bags[v] = bag;
    }
    // Bags are indexed by their eliminated vertex, in elimination order.
    let mut index = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        index[v] = i;
    }
    let mut tree_edges = Vec::with_capacity(n - 1);
    let mut roots = Vec::new();
    for &v in order {
        match parent[v] {
            Some(p) => tree_edges.push((index[v], index[p])),
            None => roots.push(index[v]),
        }
    }
    for w in roots.windows(2) {
        tree_edges.push((w[0], w[1]));
    }
    let bags: Vec<_> = order.iter().map(|&v| std::mem::take(&mut bags[v])).collect();
    TreeDecomposition {
        width: bag_width(&bags),
        bags,
        tree_edges,
        exactness,
    }
}

/// Greedy minimum-fill-in elimination ordering (ties: degree, then index).
pub fn min_fill_order(g: &Graph) -> Vec<usize> {
    let n = g.vertex_count();
    let mut adj = g.adj.clone();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !alive.is_empty() {
        let v = *alive
            .iter()
            .min_by_key(|&&v| {
                let ns: Vec<usize> = adj[v].iter().copied().collect();
                let mut fill = 0;
                for (i, &x) in ns.iter().enumerate() {
                    fill += ns[i + 1..].iter().filter(|&&y| !adj[x].contains(&y)).count();
                }
                (fill, ns.len(), v)
            })
            .expect("non-empty");
        let ns: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &x) in ns.iter().enumerate() {
            adj[x].remove(&v);
            for &y in &ns[i + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        adj[v].clear();
        alive.remove(&v);
        order.push(v);
    }
    order
}

/// Subset DP: `best[S]` is the minimum over orderings of `S` (eliminated
/// first) of the largest set of vertices outside `S` reachable through `S`.
/// Returns the width and an optimal ordering.
fn exact_order(g: &Graph) -> (usize, Vec<usize>) {
    let n = g.vertex_count();
    if n == 0 {
        return (0, Vec::new());
    }
    let masks: Vec<u32> = g.adj.iter().map(|ns| ns.iter().fold(0u32, |m, &v| m | 1 << v)).collect();
    // Vertices outside `set ∪ {v}` adjacent to the component of v in `set ∪ {v}`.
    let boundary = |set: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut stack = vec![v];
        let mut out = 0u32;
        while let Some(u) = stack.pop() {
            let mut fresh = masks[u] & !seen;
            seen |= fresh;
            out |= fresh & !set;
            fresh &= set;
            while fresh != 0 {
                let w = fresh.trailing_zeros() as usize;
                fresh &= fresh - 1;
                stack.push(w);
            }
        }
        out
    };
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut best = vec![u8::MAX; 1usize << n];
    let mut last = vec![0u8; 1usize << n];
    best[0] = 0;
    for set in 1..=full {
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = set & !(1 << v);
            let q = boundary(prev, v).count_ones() as u8;
            let cost = best[prev as usize].max(q);
            if cost < best[set as usize] {
                best[set as usize] = cost;
                last[set as usize] = v as u8;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut set = full;
    while set != 0 {
        let v = last[set as usize] as usize;
        order.push(v);
        set &= !(1 << v);
    }
    order.reverse();
    (best[full as usize] as usize, order)
}

/// Exact treewidth by subset dynamic programming (at most
/// [`EXACT_TREEWIDTH_LIMIT`] vertices).
pub fn exact_treewidth(g: &Graph) -> Result<usize> {
    if g.vertex_count() > EXACT_TREEWIDTH_LIMIT {
        return Err(Error::GraphTooLarge(g.vertex_count()));
    }
    Ok(exact_order(g).0)
}

/// A valid decomposition: exact up to `exact_threshold` vertices, min-fill
/// beyond.
pub fn decompose(g: &Graph, cfg: DecomposeConfig) -> TreeDecomposition {
    if g.vertex_count() <= cfg.exact_threshold.min(EXACT_TREEWIDTH_LIMIT) {
        let (width, order) = exact_order(g);
        let td = decomposition_from_order(g, &order, Exactness::Exact);
        debug_assert_eq!(td.width, width);
        td
    } else {
        decomposition_from_order(g, &min_fill_order(g), Exactness::UpperBound)
    }
}

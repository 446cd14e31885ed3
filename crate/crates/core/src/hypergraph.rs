//! S-hypergraphs of queries: S-components, star sizes and the contract
//! operator.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::ConjunctiveQuery;
use crate::treewidth::Graph;

pub const DEFAULT_STAR_CAP: usize = 20;

pub type VertexSet = BTreeSet<usize>;

/// A hypergraph on labelled vertices `0..n` with a distinguished vertex set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SHypergraph {
    labels: Vec<String>,
    edges: BTreeSet<VertexSet>,
    s_set: VertexSet,
}

impl SHypergraph {
    /// Empty edges are dropped; edges and `s_set` must refer to existing vertices.
    pub fn new(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = VertexSet>,
        s_set: VertexSet,
    ) -> Result<Self> {
        let n = labels.len();
        let edges: BTreeSet<VertexSet> = edges.into_iter().filter(|e| !e.is_empty()).collect();
        if let Some(&v) = edges.iter().flatten().chain(&s_set).find(|&&v| v >= n) {
            return Err(Error::HypergraphMismatch(format!("vertex {v} out of range")));
        }
        Ok(Self { labels, edges, s_set })
    }

    /// The S-hypergraph of a query: one edge per tuple (its element set),
    /// `S` = the free variables.
    pub fn of_query(q: &ConjunctiveQuery) -> Self {
        let a = q.structure();
        let edges = a
            .relations()
            .flat_map(|(_, tuples)| tuples.iter())
            .map(|t| t.iter().map(|&e| e as usize).collect::<VertexSet>());
        Self::new(
            a.domain().to_vec(),
            edges,
            q.free_vars().iter().map(|&v| v as usize).collect(),
        )
        .expect("tuples index the domain")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &BTreeSet<VertexSet> {
        &self.edges
    }

    pub fn s_set(&self) -> &VertexSet {
        &self.s_set
    }

    /// Clique per edge.
    pub fn primal_graph(&self) -> Graph {
        let mut g = Graph::new(self.vertex_count());
        for e in &self.edges {
            let vs: Vec<usize> = e.iter().copied().collect();
            for (i, &u) in vs.iter().enumerate() {
                for &v in &vs[i + 1..] {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    /// Primal graph edges by label, for comparisons across vertex numberings.
    pub fn labelled_primal_edges(&self) -> BTreeSet<(String, String)> {
        self.primal_graph()
            .edges()
            .map(|(u, v)| {
                let (a, b) = (&self.labels[u], &self.labels[v]);
                if a <= b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                }
            })
            .collect()
    }

    pub fn label_set(&self, vs: &VertexSet) -> BTreeSet<&str> {
        vs.iter().map(|&v| self.labels[v].as_str()).collect()
    }
}

/// One S-component: a connected component `C` of the quantified part, the
/// edges `E_C` meeting it and their union `V_C`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SComponent {
    pub component_core: VertexSet,
    pub touched_edges: BTreeSet<VertexSet>,
    pub closure: VertexSet,
}

impl SComponent {
    /// `V_C ∩ S`.
    pub fn free_part(&self, h: &SHypergraph) -> VertexSet {
        self.closure.intersection(h.s_set()).copied().collect()
    }
}

/// S-components in order of their smallest vertex.
pub fn s_components(h: &SHypergraph) -> Vec<SComponent> {
    let n = h.vertex_count();
    let quantified: Vec<bool> = (0..n).map(|v| !h.s_set.contains(&v)).collect();
    // Union-find over quantified vertices sharing an edge.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    for e in &h.edges {
        let mut qs = e.iter().copied().filter(|&v| quantified[v]);
        if let Some(first) = qs.next() {
            for v in qs {
                let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, VertexSet> = BTreeMap::new();
    for v in (0..n).filter(|&v| quantified[v]) {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().insert(v);
    }
    let mut comps: Vec<SComponent> = groups
        .into_values()
        .map(|core| {
            let touched: BTreeSet<VertexSet> = h
                .edges
                .iter()
                .filter(|e| e.iter().any(|v| core.contains(v)))
                .cloned()
                .collect();
            let closure = touched.iter().flatten().copied().collect();
            SComponent {
                component_core: core,
                touched_edges: touched,
                closure,
            }
        })
        .collect();
    comps.sort_by_key(|c| *c.component_core.first().expect("non-empty component"));
    comps
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StarSizes {
    /// Largest independent set of free vertices inside one S-component.
    pub s_star_size: usize,
    /// Largest number of free vertices inside one S-component.
    pub strict_s_star_size: usize,
}

fn max_independent_set(adj: &[u32]) -> usize {
    fn go(candidates: u32, adj: &[u32], size: usize, best: &mut usize) {
        if candidates == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + candidates.count_ones() as usize <= *best {
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        let without_v = candidates & !(1 << v);
        go(without_v & !adj[v], adj, size + 1, best);
        // If v has no candidate neighbours, taking it is always optimal.
        if adj[v] & without_v != 0 {
            go(without_v, adj, size, best);
        }
    }
    let mut best = 0;
    let all = if adj.len() == 32 { u32::MAX } else { (1u32 << adj.len()) - 1 };
    go(all, adj, 0, &mut best);
    best
}

/// Quantified and strict star sizes. Two free vertices are adjacent when
/// some edge of the hypergraph contains both (the induced subhypergraph on
/// `V_C ∩ S`).
pub fn star_sizes(h: &SHypergraph, cap: usize) -> Result<StarSizes> {
    let mut sizes = StarSizes {
        s_star_size: 0,
        strict_s_star_size: 0,
    };
    for comp in s_components(h) {
        let free: Vec<usize> = comp.free_part(h).into_iter().collect();
        if free.len() > cap.min(32) {
            return Err(Error::ComponentCap {
                count: free.len(),
                cap,
            });
        }
        let mut adj = vec![0u32; free.len()];
        for e in &h.edges {
            let inside: Vec<usize> = (0..free.len()).filter(|&i| e.contains(&free[i])).collect();
            for &i in &inside {
                for &j in &inside {
                    if i != j {
                        adj[i] |= 1 << j;
                    }
                }
            }
        }
        sizes.strict_s_star_size = sizes.strict_s_star_size.max(free.len());
        sizes.s_star_size = sizes.s_star_size.max(max_independent_set(&adj));
    }
    Ok(sizes)
}

/// Restricts every edge to `S` (dropping emptied edges), adds `{u, v}` for
/// every pair of free vertices sharing an S-component, and deletes the
/// quantified vertices. The result has `S` = all of its vertices.
pub fn contract(h: &SHypergraph) -> SHypergraph {
    let keep: Vec<usize> = h.s_set.iter().copied().collect();
    let mut renumber = vec![usize::MAX; h.vertex_count()];
    for (new, &old) in keep.iter().enumerate() {
        renumber[old] = new;
    }
    let mut edges: BTreeSet<VertexSet> = h
        .edges
        .iter()
        .map(|e| e.iter().filter(|&&v| h.s_set.contains(&v)).map(|&v| renumber[v]).collect())
        .collect();
    for comp in s_components(h) {
        let free: Vec<usize> = comp.free_part(h).into_iter().map(|v| renumber[v]).collect();
        for (i, &u) in free.iter().enumerate() {
            for &v in &free[i + 1..] {
                edges.insert(BTreeSet::from([u, v]));
            }
        }
    }
    SHypergraph::new(
        keep.iter().map(|&v| h.labels[v].clone()).collect(),
        edges,
        (0..keep.len()).collect(),
    )
    .expect("renumbered vertices are in range")
}

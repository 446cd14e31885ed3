//! Seeded random instances for cross-checking.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::structure::{ConjunctiveQuery, RelationalStructure, Tuple, Vocabulary};
use crate::treewidth::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `U/1`, `E/2`, `R/3`, up to `max_arity`.
pub fn default_symbols(max_arity: usize) -> Vec<(String, usize)> {
    [("U", 1), ("E", 2), ("R", 3)]
        .into_iter()
        .filter(|&(_, k)| k <= max_arity)
        .map(|(n, k)| (n.to_string(), k))
        .collect()
}

fn vocabulary(symbols: &[(String, usize)]) -> Vocabulary {
    Vocabulary::from_symbols(symbols.iter().map(|(n, k)| (n.clone(), *k))).expect("distinct symbols")
}

#[derive(Clone, Debug)]
pub struct QueryShape {
    pub max_vars: usize,
    pub max_atoms: usize,
    pub symbols: Vec<(String, usize)>,
    /// Probability that a variable is free.
    pub free_prob: f64,
}

impl Default for QueryShape {
    fn default() -> Self {
        Self {
            max_vars: 8,
            max_atoms: 8,
            symbols: default_symbols(3),
            free_prob: 0.5,
        }
    }
}

/// A query over variables `v0, v1, ...`; its domain is the variables used
/// by some atom plus the free ones.
pub fn random_query<R: Rng>(rng: &mut R, shape: &QueryShape) -> ConjunctiveQuery {
    let n = rng.gen_range(1..=shape.max_vars);
    let atoms = rng.gen_range(1..=shape.max_atoms);
    let mut used = vec![false; n];
    let mut tuples = Vec::new();
    for _ in 0..atoms {
        let (name, k) = &shape.symbols[rng.gen_range(0..shape.symbols.len())];
        let t: Tuple = (0..*k).map(|_| rng.gen_range(0..n as u32)).collect();
        for &v in &t {
            used[v as usize] = true;
        }
        tuples.push((name.clone(), t));
    }
    let mut free: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(shape.free_prob)).collect();
    free.shuffle(rng);
    for &v in &free {
        used[v as usize] = true;
    }
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let kept: Vec<String> = names.iter().zip(&used).filter(|(_, &u)| u).map(|(s, _)| s.clone()).collect();
    let structure = RelationalStructure::from_named(
        vocabulary(&shape.symbols),
        kept,
        tuples
            .iter()
            .map(|(name, t)| (name.as_str(), t.iter().map(|&v| names[v as usize].as_str()).collect::<Vec<_>>())),
    )
    .expect("well-formed");
    let free_names: Vec<&str> = free.iter().map(|&v| names[v as usize].as_str()).collect();
    ConjunctiveQuery::from_names(structure, &free_names).expect("distinct free variables")
}

/// Every possible tuple is included independently with probability `density`.
pub fn random_structure<R: Rng>(rng: &mut R, symbols: &[(String, usize)], n: usize, density: f64) -> RelationalStructure {
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let mut relations = Vec::new();
    for (name, k) in symbols {
        let mut tuples = Vec::new();
        let total = n.pow(*k as u32);
        for code in 0..total {
            if rng.gen_bool(density) {
                let mut t = Vec::with_capacity(*k);
                let mut c = code;
                for _ in 0..*k {
                    t.push((c % n) as u32);
                    c /= n;
                }
                tuples.push(t);
            }
        }
        relations.push((name.clone(), tuples));
    }
    RelationalStructure::from_indexed(vocabulary(symbols), names, relations).expect("well-formed")
}

/// Erdős–Rényi graph.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

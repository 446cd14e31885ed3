//! Count-preserving transformations: counting answers of `A*` (every
//! element pinned to a unary relation) through a counting oracle for `A`,
//! and lifting an instance over a contracted hypergraph back to the
//! original hypergraph.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cores::is_core;
use crate::error::{Error, Result};
use crate::hom::{self, HomSearchConfig};
use crate::hypergraph::{contract, s_components, SHypergraph, DEFAULT_STAR_CAP};
use crate::structure::{augment, star_structure, ConjunctiveQuery, RelationalStructure, Tuple, Vocabulary, STAR_PREFIX};

/// Largest `|S|` for the oracle reduction, which makes `2^|S| (|S|+1)` calls.
pub const MAX_ORACLE_FREE_VARS: usize = 12;

/// The structure `D` on pairs `(a, b)` with `b` in the unary `R_a` of `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairDomainStructure {
    pub structure: RelationalStructure,
    /// `(a, b)` for every element of `structure`, by index.
    pub pairs: Vec<(u32, u32)>,
}

impl PairDomainStructure {
    pub fn first(&self, d: u32) -> u32 {
        self.pairs[d as usize].0
    }

    pub fn second(&self, d: u32) -> u32 {
        self.pairs[d as usize].1
    }
}

fn star_relation<'b>(b: &'b RelationalStructure, a_name: &str) -> Result<&'b BTreeSet<Tuple>> {
    let name = format!("{STAR_PREFIX}{a_name}");
    match b.vocabulary().arity(&name) {
        Some(1) => Ok(b.relation(&name).expect("declared")),
        Some(k) => Err(Error::ArityMismatch {
            name,
            expected: 1,
            found: k,
        }),
        None => Err(Error::UnknownRelation(name)),
    }
}

/// `B` extended by the unary relations `__star_a` for every element `a` of
/// the query. `pins` restricts some of them; the others are the full domain.
pub fn star_target(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    pins: &BTreeMap<String, BTreeSet<u32>>,
) -> Result<RelationalStructure> {
    let mut out = b.clone();
    for a in q.structure().domain() {
        let tuples: Vec<Tuple> = match pins.get(a) {
            Some(set) => set.iter().map(|&v| vec![v]).collect(),
            None => (0..b.len() as u32).map(|v| vec![v]).collect(),
        };
        if tuples.iter().any(|t| t[0] as usize >= b.len()) {
            return Err(Error::UnknownElement(format!("pin for `{a}` out of range")));
        }
        out = out.with_relation(&format!("{STAR_PREFIX}{a}"), 1, tuples)?;
    }
    Ok(out)
}

/// The query `(A*, S)`.
pub fn star_query(q: &ConjunctiveQuery) -> Result<ConjunctiveQuery> {
    ConjunctiveQuery::new(star_structure(q.structure())?, q.free_vars().to_vec())
}

pub fn pair_structure(q: &ConjunctiveQuery, b: &RelationalStructure) -> Result<PairDomainStructure> {
    let a = q.structure();
    a.vocabulary().check_subvocabulary_of(b.vocabulary())?;
    let mut labelled = Vec::new();
    for x in 0..a.len() as u32 {
        for t in star_relation(b, a.name(x))? {
            labelled.push((format!("({},{})", a.name(x), b.name(t[0])), (x, t[0])));
        }
    }
    labelled.sort();
    let index: BTreeMap<(u32, u32), u32> = labelled.iter().enumerate().map(|(i, (_, p))| (*p, i as u32)).collect();
    let mut relations: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    for (name, a_tuples) in a.relations() {
        let b_tuples = b.relation(name).expect("checked vocabulary");
        let out = relations.entry(name.to_string()).or_default();
        for ta in a_tuples {
            for tb in b_tuples {
                let mapped: Option<Tuple> = ta.iter().zip(tb).map(|(&x, &y)| index.get(&(x, y)).copied()).collect();
                out.extend(mapped);
            }
        }
    }
    let pairs = labelled.iter().map(|(_, p)| *p).collect();
    let names = labelled.into_iter().map(|(n, _)| n).collect();
    let structure = RelationalStructure::from_indexed(a.vocabulary().clone(), names, relations)?;
    let d = PairDomainStructure { structure, pairs };
    let firsts: Vec<u32> = d.pairs.iter().map(|p| p.0).collect();
    debug_assert!(hom::is_homomorphism(&d.structure, a, &firsts));
    Ok(d)
}

/// `D_{j,T}`: every element whose first coordinate lies in `t` is replaced
/// by `j` copies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blowup {
    pub structure: RelationalStructure,
    /// The element of `D` each element was copied from.
    pub origin: Vec<u32>,
}

pub fn blowup(d: &PairDomainStructure, t: &BTreeSet<u32>, j: usize) -> Result<Blowup> {
    if j == 0 {
        return Err(Error::Unsupported("blow-up needs at least one copy".into()));
    }
    let base = &d.structure;
    let mut names = Vec::new();
    let mut origin = Vec::new();
    let mut copies: Vec<Vec<u32>> = Vec::with_capacity(base.len());
    for x in 0..base.len() as u32 {
        let (a, _) = d.pairs[x as usize];
        let count = if t.contains(&a) { j } else { 1 };
        let mut ids = Vec::with_capacity(count);
        for k in 1..=count {
            ids.push(names.len() as u32);
            names.push(if t.contains(&a) {
                format!("{}#{k}", base.name(x))
            } else {
                base.name(x).to_string()
            });
            origin.push(x);
        }
        copies.push(ids);
    }
    let mut relations: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    for (name, tuples) in base.relations() {
        let out = relations.entry(name.to_string()).or_default();
        for tuple in tuples {
            let mut partial: Vec<Tuple> = vec![Vec::with_capacity(tuple.len())];
            for &x in tuple {
                partial = partial
                    .into_iter()
                    .flat_map(|p| {
                        copies[x as usize].iter().map(move |&c| {
                            let mut next = p.clone();
                            next.push(c);
                            next
                        })
                    })
                    .collect();
            }
            out.extend(partial);
        }
    }
    // from_indexed sorts the domain; carry the origin map along.
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&x, &y| names[x].cmp(&names[y]));
    let sorted_origin = order.iter().map(|&i| origin[i]).collect();
    let structure = RelationalStructure::from_indexed(base.vocabulary().clone(), names, relations)?;
    Ok(Blowup {
        structure,
        origin: sorted_origin,
    })
}

/// Solves `Σ_i nodes[r]^i · x_i = rhs[r]` exactly. Fraction-free elimination
/// followed by rational back substitution; every coefficient must come out
/// integral.
pub fn solve_vandermonde(nodes: &[u64], rhs: &[BigInt]) -> Result<Vec<BigInt>> {
    let n = nodes.len();
    if rhs.len() != n {
        return Err(Error::InvalidSystem(format!("{n} nodes but {} right-hand sides", rhs.len())));
    }
    if nodes.contains(&0) || nodes.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(Error::InvalidSystem("nodes must be distinct and positive".into()));
    }
    let mut m: Vec<Vec<BigInt>> = nodes
        .iter()
        .zip(rhs)
        .map(|(&x, c)| {
            let x = BigInt::from(x);
            let mut row: Vec<BigInt> = std::iter::successors(Some(BigInt::one()), |p| Some(p * &x)).take(n).collect();
            row.push(c.clone());
            row
        })
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n)
            .find(|&r| !m[r][k].is_zero())
            .ok_or_else(|| Error::InvalidSystem("singular system".into()))?;
        m.swap(k, pivot);
        for i in k + 1..n {
            for c in k + 1..=n {
                let v = (&m[i][c] * &m[k][k] - &m[i][k] * &m[k][c]) / &prev;
                m[i][c] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x: Vec<BigRational> = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(m[i][n].clone());
        for c in i + 1..n {
            acc -= BigRational::from_integer(m[i][c].clone()) * &x[c];
        }
        x[i] = acc / BigRational::from_integer(m[i][i].clone());
    }
    x.into_iter()
        .enumerate()
        .map(|(i, v)| {
            if v.is_integer() {
                Ok(v.to_integer())
            } else {
                Err(Error::NonIntegral(format!("coefficient {i} is {v}")))
            }
        })
        .collect()
}

/// Intermediate quantities of one oracle reduction run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarOracleTrace {
    pub count: BigUint,
    /// `|N'|`: answers into `D` whose first coordinates cover `S`.
    pub covering_answers: BigUint,
    pub free_automorphisms: usize,
    /// `N_T` for every `T ⊆ S`, keyed by the free-variable bitmask in head order.
    pub subset_counts: BTreeMap<u64, BigUint>,
    pub oracle_calls: usize,
}

fn subset_of(q: &ConjunctiveQuery, mask: u64) -> BTreeSet<u32> {
    q.free_vars()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &v)| v)
        .collect()
}

/// `|hom(A*, B, S)|` using only oracle calls `|hom(A, D', S)|` on blow-ups
/// of the pair structure. `b` must interpret `__star_a` for every element `a`
/// of the query, and the augmented query structure must be a core.
pub fn count_star_via_oracle<F>(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    oracle: F,
    cfg: HomSearchConfig,
) -> Result<BigUint>
where
    F: FnMut(&RelationalStructure) -> Result<BigUint>,
{
    Ok(star_oracle_trace(q, b, oracle, cfg)?.count)
}

pub fn star_oracle_trace<F>(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    mut oracle: F,
    cfg: HomSearchConfig,
) -> Result<StarOracleTrace>
where
    F: FnMut(&RelationalStructure) -> Result<BigUint>,
{
    let s = q.free_vars().len();
    if s > MAX_ORACLE_FREE_VARS {
        return Err(Error::EnumerationCap {
            needed: format!("2^{s} subsets"),
            cap: 1 << MAX_ORACLE_FREE_VARS,
        });
    }
    if !is_core(&augment(q)?, cfg)? {
        return Err(Error::NotACore);
    }
    let automorphisms = hom::free_automorphism_set(q, cfg)?.len();
    let d = pair_structure(q, b)?;
    let nodes: Vec<u64> = (1..=s as u64 + 1).collect();
    let mut subset_counts = BTreeMap::new();
    let mut covering = BigInt::zero();
    let mut oracle_calls = 0;
    for mask in 0..1u64 << s {
        let t = subset_of(q, mask);
        let mut rhs = Vec::with_capacity(nodes.len());
        for &j in &nodes {
            let blown = blowup(&d, &t, j as usize)?;
            rhs.push(BigInt::from(oracle(&blown.structure)?));
            oracle_calls += 1;
        }
        let profile = solve_vandermonde(&nodes, &rhs)?;
        if let Some(neg) = profile.iter().find(|c| c.is_negative()) {
            return Err(Error::NonIntegral(format!("negative interpolated count {neg}")));
        }
        let n_t = profile[s].clone();
        if (s - t.len()) % 2 == 0 {
            covering += &n_t;
        } else {
            covering -= &n_t;
        }
        subset_counts.insert(mask, n_t.to_biguint().expect("non-negative"));
    }
    let covering = covering
        .to_biguint()
        .ok_or_else(|| Error::NonIntegral(format!("inclusion-exclusion gave {covering}")))?;
    let (count, rem) = covering.div_rem(&BigUint::from(automorphisms));
    if !rem.is_zero() {
        return Err(Error::NonDivisible {
            numerator: covering.to_string(),
            divisor: automorphisms,
        });
    }
    Ok(StarOracleTrace {
        count,
        covering_answers: covering,
        free_automorphisms: automorphisms,
        subset_counts,
        oracle_calls,
    })
}

/// `N_{T,i}` for `i = 0..=|S|` by enumeration: answers of `q` into `D`
/// with exactly `i` free variables sent to pairs whose first coordinate
/// lies in `t`.
pub fn interpolation_profile(
    q: &ConjunctiveQuery,
    d: &PairDomainStructure,
    t: &BTreeSet<u32>,
    cfg: HomSearchConfig,
) -> Result<Vec<BigUint>> {
    let mut profile = vec![BigUint::zero(); q.free_vars().len() + 1];
    for answer in hom::answer_set(q, &d.structure, cfg)? {
        let i = answer.iter().filter(|&&x| t.contains(&d.first(x))).count();
        profile[i] += 1u32;
    }
    Ok(profile)
}

/// An instance over a given S-hypergraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedInstance {
    pub query: ConjunctiveQuery,
    pub target: RelationalStructure,
}

pub const LIFT_PREFIX: &str = "__lift_e";

fn edge_label_sets(h: &SHypergraph) -> BTreeSet<BTreeSet<String>> {
    h.edges()
        .iter()
        .map(|e| e.iter().map(|&v| h.labels()[v].clone()).collect())
        .collect()
}

fn covered_by(edges: &BTreeSet<BTreeSet<String>>, by: &BTreeSet<BTreeSet<String>>) -> bool {
    edges.iter().all(|e| by.iter().any(|f| e.is_subset(f)))
}

/// Turns a quantifier-free query `q` whose hypergraph is `contract(target)`
/// (or has every edge inside an edge of it)
/// into an instance whose hypergraph is `target`, with the same answers.
/// Each edge of `target` becomes a relation with a single tuple; quantified
/// vertices range over new elements encoding the answers of their component.
pub fn lift_to_hypergraph(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    target: &SHypergraph,
    star_cap: usize,
    cfg: HomSearchConfig,
) -> Result<LiftedInstance> {
    let a = q.structure();
    a.vocabulary().check_subvocabulary_of(b.vocabulary())?;
    if a.relations().any(|(_, ts)| ts.iter().any(|t| t.is_empty())) {
        return Err(Error::HypergraphMismatch("0-ary atoms have no hyperedge".into()));
    }
    let contracted = contract(target);
    let own = SHypergraph::of_query(q);
    let free_labels: BTreeSet<&str> = q.free_var_names().into_iter().collect();
    let s_labels: BTreeSet<&str> = target.s_set().iter().map(|&v| target.labels()[v].as_str()).collect();
    if !q.is_quantifier_free()
        || free_labels != s_labels
        || own.labels() != contracted.labels()
        || !covered_by(&edge_label_sets(&own), &edge_label_sets(&contracted))
    {
        return Err(Error::HypergraphMismatch(
            "the query's hypergraph does not fit the contract of the target".into(),
        ));
    }

    let labels = target.labels();
    let s_set = target.s_set();
    let q_index = |v: usize| a.index_of(&labels[v]).expect("free label present");
    // Assignments of `scope` (query indices) satisfying the atoms inside it.
    let satisfying = |scope: &[u32]| -> Result<BTreeSet<Tuple>> {
        let sub = a.induced_substructure(&scope.iter().copied().collect())?;
        let names: Vec<&str> = scope.iter().map(|&v| a.name(v)).collect();
        hom::answer_set(&ConjunctiveQuery::from_names(sub, &names)?, b, cfg)
    };

    let mut prefix = "#".to_string();
    while b.domain().iter().any(|x| x.starts_with(&prefix)) {
        prefix.push('#');
    }
    let mut names: Vec<String> = b.domain().to_vec();
    // Per component: its free vertices and, per answer, the encoding element.
    let mut component_of = vec![usize::MAX; labels.len()];
    let mut encoded: Vec<(Vec<usize>, BTreeMap<Tuple, u32>)> = Vec::new();
    for (ci, comp) in s_components(target).iter().enumerate() {
        let free: Vec<usize> = comp.free_part(target).into_iter().collect();
        if free.len() > star_cap {
            return Err(Error::ComponentCap {
                count: free.len(),
                cap: star_cap,
            });
        }
        for &v in &comp.component_core {
            component_of[v] = ci;
        }
        let scope: Vec<u32> = free.iter().map(|&v| q_index(v)).collect();
        let mut codes = BTreeMap::new();
        for t in satisfying(&scope)? {
            let values: Vec<&str> = t.iter().map(|&x| b.name(x)).collect();
            codes.insert(t, names.len() as u32);
            names.push(format!("{prefix}{ci}({})", values.join(",")));
        }
        encoded.push((free, codes));
    }
    let has_codes = encoded.iter().any(|(_, codes)| !codes.is_empty());
    let covered: BTreeSet<usize> = target.edges().iter().flatten().copied().collect();
    if has_codes && s_set.iter().any(|v| !covered.contains(v)) {
        return Err(Error::HypergraphMismatch(
            "a free vertex outside every edge would range over encoding elements".into(),
        ));
    }

    let max_arity = target.edges().iter().map(|e| e.len()).max().unwrap_or(0);
    let cap = max_arity.max(b.vocabulary().arity_cap());
    let mut vocab = Vocabulary::with_arity_cap(cap);
    let mut query_rel: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    let mut target_rel: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    for (idx, edge) in target.edges().iter().enumerate() {
        let name = format!("{LIFT_PREFIX}{idx}");
        let vertices: Vec<usize> = edge.iter().copied().collect();
        vocab.insert(&name, vertices.len())?;
        query_rel.insert(name.clone(), vec![vertices.iter().map(|&v| v as u32).collect()]);
        let quantified = vertices.iter().find(|v| !s_set.contains(v));
        let tuples: Vec<Tuple> = match quantified {
            None => {
                let scope: Vec<u32> = vertices.iter().map(|&v| q_index(v)).collect();
                satisfying(&scope)?.into_iter().collect()
            }
            Some(&w) => {
                let (free, codes) = &encoded[component_of[w]];
                codes
                    .iter()
                    .map(|(t, &code)| {
                        vertices
                            .iter()
                            .map(|v| match free.iter().position(|f| f == v) {
                                Some(p) => t[p],
                                None => code,
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        target_rel.insert(name, tuples);
    }
    let structure = RelationalStructure::from_indexed(vocab.clone(), labels.to_vec(), query_rel)?;
    let query = ConjunctiveQuery::from_names(structure, &q.free_var_names())?;
    let target = RelationalStructure::from_indexed(vocab, names, target_rel)?;
    Ok(LiftedInstance { query, target })
}

/// `lift_to_hypergraph` with the default component cap.
pub fn lift_default(q: &ConjunctiveQuery, b: &RelationalStructure, target: &SHypergraph) -> Result<LiftedInstance> {
    lift_to_hypergraph(q, b, target, DEFAULT_STAR_CAP, HomSearchConfig::default())
}

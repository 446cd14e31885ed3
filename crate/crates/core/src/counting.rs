//! Structural answer counting and the trichotomy classifier.
//!
//! The structural pipeline is: core of the query, then quantifier
//! elimination per S-component (each component becomes one relation over
//! its free vertices, filled by homomorphism search), then dynamic
//! programming over a nice tree decomposition of the resulting
//! quantifier-free instance. Its primal graph is exactly the primal graph of
//! `contract` applied to the core's S-hypergraph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::cores::core_of_query;
use crate::error::{Error, Result};
use crate::hom::{self, HomSearchConfig};
use crate::hypergraph::{contract, s_components, star_sizes, SComponent, SHypergraph, StarSizes, DEFAULT_STAR_CAP};
use crate::structure::{ConjunctiveQuery, RelationalStructure, Tuple};
use crate::treewidth::{decompose, verify_decomposition, DecomposeConfig, Exactness, TreeDecomposition};

/// Prefix of the relations standing for eliminated S-components.
pub const COMPONENT_PREFIX: &str = "__comp_";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CountingMode {
    #[default]
    Auto,
    Brute,
    Structural,
}

impl FromStr for CountingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "brute" => Ok(Self::Brute),
            "structural" => Ok(Self::Structural),
            other => Err(format!("unknown mode `{other}` (expected auto, brute or structural)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CountingConfig {
    pub mode: CountingMode,
    /// Cap on `|B|^k` for every exhaustive enumeration.
    pub brute_cap: u64,
    /// Largest decomposition width the dynamic program accepts.
    pub width_cap: usize,
    pub exact_tw_threshold: usize,
    /// Largest number of free vertices in one S-component.
    pub star_cap: usize,
    pub hom: HomSearchConfig,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self {
            mode: CountingMode::Auto,
            brute_cap: 10_000_000,
            width_cap: 8,
            exact_tw_threshold: DecomposeConfig::default().exact_threshold,
            star_cap: DEFAULT_STAR_CAP,
            hom: HomSearchConfig::default(),
        }
    }
}

impl CountingConfig {
    pub fn with_mode(mode: CountingMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    fn search(&self) -> HomSearchConfig {
        HomSearchConfig {
            enumeration_cap: self.brute_cap,
            ..self.hom
        }
    }

    fn decompose_config(&self) -> DecomposeConfig {
        DecomposeConfig {
            exact_threshold: self.exact_tw_threshold,
        }
    }
}

/// The answers of one S-component's subquery, projected to its free part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentProjection {
    /// `V_C ∩ S` as query elements, canonical order.
    pub scope: Vec<u32>,
    /// Target tuples, positionally aligned with `scope`.
    pub tuples: BTreeSet<Tuple>,
}

/// Tuples `(h(a))_{a ∈ V_C ∩ S}` such that `h` extends to a homomorphism from
/// the substructure induced by the component into `b`.
pub fn component_projection(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    component: &SComponent,
    cfg: &CountingConfig,
) -> Result<ComponentProjection> {
    let free = q.free_set();
    let scope: Vec<u32> = component
        .closure
        .iter()
        .map(|&v| v as u32)
        .filter(|v| free.contains(v))
        .collect();
    if scope.len() > cfg.star_cap {
        return Err(Error::ComponentCap {
            count: scope.len(),
            cap: cfg.star_cap,
        });
    }
    let elements: BTreeSet<u32> = component
        .closure
        .iter()
        .chain(&component.component_core)
        .map(|&v| v as u32)
        .collect();
    let sub = q.structure().induced_substructure(&elements)?;
    let names: Vec<&str> = scope.iter().map(|&v| q.structure().name(v)).collect();
    let subquery = ConjunctiveQuery::from_names(sub, &names)?;
    let tuples = hom::answer_set(&subquery, b, cfg.search())?;
    Ok(ComponentProjection { scope, tuples })
}

/// A quantifier-free instance with the same answer set as the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractedInstance {
    pub query: ConjunctiveQuery,
    pub target: RelationalStructure,
}

/// Eliminates the quantified variables: keeps atoms inside `S` and adds one
/// atom `__comp_i(V_C ∩ S)` per S-component, interpreted in the target by
/// the component's projection. Intended for core queries.
pub fn contract_instance(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    cfg: &CountingConfig,
) -> Result<ContractedInstance> {
    let a = q.structure();
    a.vocabulary().check_subvocabulary_of(b.vocabulary())?;
    let components = s_components(&SHypergraph::of_query(q));

    let mut query_vocab = a.vocabulary().clone();
    let mut target_vocab = b.vocabulary().clone();
    let cap = query_vocab.arity_cap().max(cfg.star_cap);
    query_vocab.set_arity_cap(cap);
    target_vocab.set_arity_cap(cap.max(target_vocab.arity_cap()));

    let free = q.free_vars();
    let mut position = vec![None; a.len()];
    for (i, &v) in free.iter().enumerate() {
        position[v as usize] = Some(i as u32);
    }
    let mut query_rel: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    for (name, tuples) in a.relations() {
        let kept = tuples
            .iter()
            .filter_map(|t| t.iter().map(|&e| position[e as usize]).collect::<Option<Tuple>>())
            .collect();
        query_rel.insert(name.to_string(), kept);
    }
    let mut target_rel: BTreeMap<String, Vec<Tuple>> = b
        .relations()
        .map(|(n, t)| (n.to_string(), t.iter().cloned().collect()))
        .collect();
    for (i, component) in components.iter().enumerate() {
        let name = format!("{COMPONENT_PREFIX}{i}");
        if b.vocabulary().contains(&name) || a.vocabulary().contains(&name) {
            return Err(Error::NameCollision(name));
        }
        let projection = component_projection(q, b, component, cfg)?;
        query_vocab.insert(&name, projection.scope.len())?;
        target_vocab.insert(&name, projection.scope.len())?;
        let atom = projection.scope.iter().map(|&v| position[v as usize].expect("free")).collect();
        query_rel.insert(name.clone(), vec![atom]);
        target_rel.insert(name, projection.tuples.into_iter().collect());
    }
    let names: Vec<String> = free.iter().map(|&v| a.name(v).to_string()).collect();
    let structure = RelationalStructure::from_indexed(query_vocab, names.clone(), query_rel)?;
    let query = ConjunctiveQuery::from_names(structure, &names)?;
    let target = RelationalStructure::from_indexed(target_vocab, b.domain().to_vec(), target_rel)?;
    Ok(ContractedInstance { query, target })
}

#[derive(Clone, Debug)]
enum NiceKind {
    Leaf,
    Introduce(usize),
    Forget(usize),
    Join,
}

#[derive(Clone, Debug)]
struct NiceNode {
    kind: NiceKind,
    /// Sorted.
    bag: Vec<usize>,
    children: Vec<usize>,
}

/// Converts `td` into nice form with an empty root. Children always precede
/// their parents in the returned vector.
fn nice_decomposition(td: &TreeDecomposition) -> Vec<NiceNode> {
    let mut tree = vec![Vec::new(); td.bags.len()];
    for &(x, y) in &td.tree_edges {
        tree[x].push(y);
        tree[y].push(x);
    }
    fn push(nodes: &mut Vec<NiceNode>, kind: NiceKind, bag: &BTreeSet<usize>, children: Vec<usize>) -> usize {
        nodes.push(NiceNode {
            kind,
            bag: bag.iter().copied().collect(),
            children,
        });
        nodes.len() - 1
    }
    /// Rewrites node `id` with bag `from` into a chain ending at bag `to`.
    fn morph(nodes: &mut Vec<NiceNode>, mut id: usize, from: &BTreeSet<usize>, to: &BTreeSet<usize>) -> usize {
        let mut cur = from.clone();
        for &v in from.difference(to) {
            cur.remove(&v);
            id = push(nodes, NiceKind::Forget(v), &cur, vec![id]);
        }
        for &v in to.difference(from) {
            cur.insert(v);
            id = push(nodes, NiceKind::Introduce(v), &cur, vec![id]);
        }
        id
    }
    fn build(t: usize, parent: Option<usize>, td: &TreeDecomposition, tree: &[Vec<usize>], nodes: &mut Vec<NiceNode>) -> usize {
        let bag = &td.bags[t];
        let mut branches = Vec::new();
        for &c in &tree[t] {
            if Some(c) != parent {
                let id = build(c, Some(t), td, tree, nodes);
                branches.push(morph(nodes, id, &td.bags[c], bag));
            }
        }
        if branches.is_empty() {
            let leaf = push(nodes, NiceKind::Leaf, &BTreeSet::new(), Vec::new());
            return morph(nodes, leaf, &BTreeSet::new(), bag);
        }
        let mut acc = branches[0];
        for &next in &branches[1..] {
            acc = push(nodes, NiceKind::Join, bag, vec![acc, next]);
        }
        acc
    }
    let mut nodes = Vec::new();
    let top = build(0, None, td, &tree, &mut nodes);
    morph(&mut nodes, top, &td.bags[0], &BTreeSet::new());
    nodes
}

struct Atom<'b> {
    vars: Tuple,
    table: &'b BTreeSet<Tuple>,
}

type Table = HashMap<Vec<u32>, BigUint>;

/// Exact `|hom(A', B')|` for a quantifier-free query by dynamic programming
/// over a nice form of `td`. Each atom is checked once, where the first of
/// its variables is forgotten.
pub fn count_quantifier_free_td(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    td: &TreeDecomposition,
    cfg: &CountingConfig,
) -> Result<BigUint> {
    if !q.is_quantifier_free() {
        return Err(Error::Unsupported("the query has quantified variables".into()));
    }
    let a = q.structure();
    a.vocabulary().check_subvocabulary_of(b.vocabulary())?;
    let graph = SHypergraph::of_query(q).primal_graph();
    verify_decomposition(&graph, td)?;
    if td.width > cfg.width_cap {
        return Err(Error::WidthCap {
            width: td.width,
            cap: cfg.width_cap,
        });
    }

    let mut atoms = Vec::new();
    for (name, tuples) in a.relations() {
        let table = b.relation(name).expect("checked vocabulary");
        for t in tuples {
            if t.is_empty() {
                if table.is_empty() {
                    return Ok(BigUint::zero());
                }
                continue;
            }
            atoms.push(Atom { vars: t.clone(), table });
        }
    }

    // Unary pruning of candidate values.
    let mut candidates: Vec<BTreeSet<u32>> = vec![(0..b.len() as u32).collect(); a.len()];
    for atom in &atoms {
        let mut seen: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        'tuples: for t in atom.table {
            let mut bound: BTreeMap<u32, u32> = BTreeMap::new();
            for (&var, &val) in atom.vars.iter().zip(t) {
                if *bound.entry(var).or_insert(val) != val {
                    continue 'tuples;
                }
            }
            for (var, val) in bound {
                seen.entry(var).or_default().insert(val);
            }
        }
        for &var in &atom.vars {
            let allowed = seen.remove(&var).unwrap_or_default();
            candidates[var as usize].retain(|v| allowed.contains(v));
            seen.insert(var, candidates[var as usize].clone());
        }
    }

    let nodes = nice_decomposition(td);
    let mut forget_node = vec![usize::MAX; a.len()];
    for (id, node) in nodes.iter().enumerate() {
        if let NiceKind::Forget(v) = node.kind {
            forget_node[v] = id;
        }
    }
    // checks[id]: atoms filtered at forget node `id`, with variable positions in the child bag.
    let mut checks: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); nodes.len()];
    for (i, atom) in atoms.iter().enumerate() {
        let scope: BTreeSet<usize> = atom.vars.iter().map(|&v| v as usize).collect();
        let mut placed = 0;
        for &v in &scope {
            let id = forget_node[v];
            let child_bag = &nodes[nodes[id].children[0]].bag;
            if scope.iter().all(|x| child_bag.binary_search(x).is_ok()) {
                let positions = atom
                    .vars
                    .iter()
                    .map(|&x| child_bag.binary_search(&(x as usize)).expect("in bag"))
                    .collect();
                checks[id].push((i, positions));
                placed += 1;
            }
        }
        debug_assert_eq!(placed, 1, "every atom is checked at exactly one bag");
        if placed == 0 {
            return Err(Error::Unsupported("an atom is covered by no bag".into()));
        }
    }

    let mut tables: Vec<Option<Table>> = vec![None; nodes.len()];
    for (id, node) in nodes.iter().enumerate() {
        let table = match node.kind {
            NiceKind::Leaf => Table::from([(Vec::new(), BigUint::one())]),
            NiceKind::Introduce(v) => {
                let child = tables[node.children[0]].take().expect("child evaluated");
                let at = node.bag.binary_search(&v).expect("introduced vertex in bag");
                let mut out = Table::with_capacity(child.len() * candidates[v].len());
                for (row, count) in child {
                    for &val in &candidates[v] {
                        let mut next = row.clone();
                        next.insert(at, val);
                        out.insert(next, count.clone());
                    }
                }
                out
            }
            NiceKind::Forget(v) => {
                let child_id = node.children[0];
                let child = tables[child_id].take().expect("child evaluated");
                let at = nodes[child_id].bag.binary_search(&v).expect("forgotten vertex in child bag");
                let mut out = Table::new();
                for (row, count) in child {
                    let ok = checks[id].iter().all(|(i, positions)| {
                        let image: Tuple = positions.iter().map(|&p| row[p]).collect();
                        atoms[*i].table.contains(&image)
                    });
                    if ok {
                        let mut key = row;
                        key.remove(at);
                        *out.entry(key).or_insert_with(BigUint::zero) += count;
                    }
                }
                out
            }
            NiceKind::Join => {
                let left = tables[node.children[0]].take().expect("child evaluated");
                let right = tables[node.children[1]].take().expect("child evaluated");
                let (small, large) = if left.len() <= right.len() { (left, right) } else { (right, left) };
                small
                    .into_iter()
                    .filter_map(|(row, c)| large.get(&row).map(|d| (row, c * d)))
                    .collect()
            }
        };
        tables[id] = Some(table);
    }
    let root = tables.pop().flatten().expect("root evaluated");
    Ok(root.get(&Vec::new()).cloned().unwrap_or_default())
}

/// A core query together with a verified decomposition of its contract.
struct StructuralPlan {
    core: ConjunctiveQuery,
    decomposition: TreeDecomposition,
}

fn plan(q: &ConjunctiveQuery, cfg: &CountingConfig) -> Result<StructuralPlan> {
    let core = core_of_query(q, cfg.hom)?;
    let contracted = contract(&SHypergraph::of_query(&core));
    let graph = contracted.primal_graph();
    let decomposition = decompose(&graph, cfg.decompose_config());
    verify_decomposition(&graph, &decomposition)?;
    Ok(StructuralPlan { core, decomposition })
}

fn run_plan(plan: &StructuralPlan, b: &RelationalStructure, cfg: &CountingConfig) -> Result<BigUint> {
    let instance = contract_instance(&plan.core, b, cfg)?;
    // The contracted query's vertices are the free variables in sorted
    // order, the same numbering as the contract hypergraph.
    count_quantifier_free_td(&instance.query, &instance.target, &plan.decomposition, cfg)
}

/// `|hom(A, B, S)|`, exactly, by the configured method.
pub fn count_answers(q: &ConjunctiveQuery, b: &RelationalStructure, cfg: &CountingConfig) -> Result<BigUint> {
    q.structure().vocabulary().check_subvocabulary_of(b.vocabulary())?;
    match cfg.mode {
        CountingMode::Brute => hom::count_answers_brute(q, b, cfg.search()),
        CountingMode::Structural => run_plan(&plan(q, cfg)?, b, cfg),
        CountingMode::Auto => {
            let plan = plan(q, cfg)?;
            if plan.decomposition.width <= cfg.width_cap {
                return run_plan(&plan, b, cfg);
            }
            let brute_size = BigUint::from(b.len()).pow(q.free_vars().len() as u32);
            if brute_size <= BigUint::from(cfg.brute_cap) {
                hom::count_answers_brute(q, b, cfg.search())
            } else {
                Err(Error::WidthCap {
                    width: plan.decomposition.width,
                    cap: cfg.width_cap,
                })
            }
        }
    }
}

/// Width thresholds for the case label: a width counts as bounded when it
/// is strictly below its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub k_core: usize,
    pub k_contract: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            k_core: 3,
            k_contract: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    #[serde(rename = "I_tractable")]
    Tractable,
    #[serde(rename = "II_clique_equivalent")]
    CliqueEquivalent,
    #[serde(rename = "III_sharp_clique_hard")]
    SharpCliqueHard,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseLabel::Tractable => "I_tractable",
            CaseLabel::CliqueEquivalent => "II_clique_equivalent",
            CaseLabel::SharpCliqueHard => "III_sharp_clique_hard",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WidthMeasure {
    pub width: usize,
    pub exactness: Exactness,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrichotomyReport {
    pub core_query: ConjunctiveQuery,
    pub core_treewidth: WidthMeasure,
    pub contract_graph: SHypergraph,
    pub contract_treewidth: WidthMeasure,
    pub star_sizes: StarSizes,
    pub bounds: Bounds,
    pub case_label: CaseLabel,
}

impl TrichotomyReport {
    /// The label rests on heuristic widths.
    pub fn is_heuristic(&self) -> bool {
        self.core_treewidth.exactness == Exactness::UpperBound
            || self.contract_treewidth.exactness == Exactness::UpperBound
    }
}

pub fn case_label(core_width: usize, contract_width: usize, bounds: Bounds) -> CaseLabel {
    if contract_width >= bounds.k_contract {
        CaseLabel::SharpCliqueHard
    } else if core_width >= bounds.k_core {
        CaseLabel::CliqueEquivalent
    } else {
        CaseLabel::Tractable
    }
}

/// Measures the query's core width, contract width and star sizes and
/// labels it relative to `bounds`.
pub fn classify(q: &ConjunctiveQuery, bounds: Bounds, cfg: &CountingConfig) -> Result<TrichotomyReport> {
    let core = core_of_query(q, cfg.hom)?;
    let h = SHypergraph::of_query(&core);
    let measure = |g: &crate::treewidth::Graph| -> Result<WidthMeasure> {
        let td = decompose(g, cfg.decompose_config());
        let width = verify_decomposition(g, &td)?;
        Ok(WidthMeasure {
            width,
            exactness: td.exactness,
        })
    };
    let core_treewidth = measure(&h.primal_graph())?;
    let contract_graph = contract(&h);
    let contract_treewidth = measure(&contract_graph.primal_graph())?;
    let star_sizes = star_sizes(&h, cfg.star_cap)?;
    Ok(TrichotomyReport {
        case_label: case_label(core_treewidth.width, contract_treewidth.width, bounds),
        core_query: core,
        core_treewidth,
        contract_graph,
        contract_treewidth,
        star_sizes,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Vocabulary;

    fn digraph(names: &[&str], arcs: &[(&str, &str)]) -> RelationalStructure {
        let voc = Vocabulary::from_symbols([("E", 2)]).unwrap();
        RelationalStructure::from_named(voc, names.iter().copied(), arcs.iter().map(|(u, v)| ("E", vec![*u, *v])))
            .unwrap()
    }

    fn query(vars: &[&str], arcs: &[(&str, &str)], free: &[&str]) -> ConjunctiveQuery {
        ConjunctiveQuery::from_names(digraph(vars, arcs), free).unwrap()
    }

    fn c3() -> RelationalStructure {
        digraph(&["1", "2", "3"], &[("1", "2"), ("2", "3"), ("3", "1")])
    }

    fn all_modes() -> [CountingConfig; 3] {
        [CountingMode::Auto, CountingMode::Brute, CountingMode::Structural].map(CountingConfig::with_mode)
    }

    #[test]
    fn edge_query_on_triangle() {
        let q = query(&["x", "y"], &[("x", "y")], &["x", "y"]);
        for cfg in all_modes() {
            assert_eq!(count_answers(&q, &c3(), &cfg).unwrap(), 3u32.into());
        }
    }

    #[test]
    fn path_endpoints_on_c3() {
        let q = query(&["x", "y", "z"], &[("x", "y"), ("y", "z")], &["x", "z"]);
        let brute = hom::count_answers_brute(&q, &c3(), HomSearchConfig::default()).unwrap();
        assert_eq!(brute, 3u32.into());
        for cfg in all_modes() {
            assert_eq!(count_answers(&q, &c3(), &cfg).unwrap(), brute);
        }
    }

    #[test]
    fn empty_relation_gives_zero() {
        let q = query(&["x", "y"], &[("x", "y")], &["x"]);
        let b = digraph(&["1", "2"], &[]);
        for cfg in all_modes() {
            assert!(count_answers(&q, &b, &cfg).unwrap().is_zero());
        }
    }

    #[test]
    fn free_variables_without_atoms_multiply() {
        let voc = Vocabulary::from_symbols([("E", 2)]).unwrap();
        let s = RelationalStructure::new(voc, ["x", "y"]);
        let q = ConjunctiveQuery::from_names(s, &["x", "y"]).unwrap();
        let b = digraph(&["1", "2", "3", "4"], &[]);
        let td = decompose(&SHypergraph::of_query(&q).primal_graph(), DecomposeConfig::default());
        let n = count_quantifier_free_td(&q, &b, &td, &CountingConfig::default()).unwrap();
        assert_eq!(n, 16u32.into());
    }

    #[test]
    fn single_atom_dp() {
        let q = query(&["x", "y"], &[("x", "y")], &["x", "y"]);
        let b = digraph(&["1", "2", "3"], &[("1", "2"), ("1", "3"), ("3", "3"), ("2", "1")]);
        let td = decompose(&SHypergraph::of_query(&q).primal_graph(), DecomposeConfig::default());
        assert_eq!(count_quantifier_free_td(&q, &b, &td, &CountingConfig::default()).unwrap(), 4u32.into());
    }

    #[test]
    fn grid_into_k3_matches_brute() {
        let q = query(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "d"), ("a", "c"), ("c", "d")],
            &["a", "b", "c", "d"],
        );
        let k3 = digraph(
            &["1", "2", "3"],
            &[("1", "2"), ("2", "1"), ("2", "3"), ("3", "2"), ("1", "3"), ("3", "1")],
        );
        let td = decompose(&SHypergraph::of_query(&q).primal_graph(), DecomposeConfig::default());
        let dp = count_quantifier_free_td(&q, &k3, &td, &CountingConfig::default()).unwrap();
        let brute = hom::count_answers_brute(&q, &k3, HomSearchConfig::default()).unwrap();
        assert_eq!(dp, brute);
        assert_eq!(dp, 18u32.into());
    }

    #[test]
    fn width_cap_enforced() {
        let q = query(&["x", "y"], &[("x", "y")], &["x", "y"]);
        let td = decompose(&SHypergraph::of_query(&q).primal_graph(), DecomposeConfig::default());
        let cfg = CountingConfig {
            width_cap: 0,
            ..CountingConfig::default()
        };
        assert!(count_quantifier_free_td(&q, &c3(), &td, &cfg).unwrap_err().is_resource());
    }

    #[test]
    fn projection_of_single_quantified_neighbour() {
        let q = query(&["s", "y"], &[("s", "y")], &["s"]);
        let b = digraph(&["1", "2", "3"], &[("1", "2"), ("1", "3"), ("3", "3")]);
        let comps = s_components(&SHypergraph::of_query(&q));
        let p = component_projection(&q, &b, &comps[0], &CountingConfig::default()).unwrap();
        assert_eq!(p.tuples, BTreeSet::from([vec![0], vec![2]]));
    }

    #[test]
    fn projection_boolean_component() {
        let q = query(&["y", "z"], &[("y", "z")], &[]);
        let comps = s_components(&SHypergraph::of_query(&q));
        let sat = component_projection(&q, &c3(), &comps[0], &CountingConfig::default()).unwrap();
        assert_eq!(sat.tuples, BTreeSet::from([vec![]]));
        let unsat = component_projection(&q, &digraph(&["1"], &[]), &comps[0], &CountingConfig::default()).unwrap();
        assert!(unsat.tuples.is_empty());
    }

    #[test]
    fn projection_distance_two_on_c4() {
        let q = query(&["q", "s1", "s2"], &[("s1", "q"), ("q", "s2"), ("q", "s1"), ("s2", "q")], &["s1", "s2"]);
        let c4 = digraph(
            &["0", "1", "2", "3"],
            &[("0", "1"), ("1", "0"), ("1", "2"), ("2", "1"), ("2", "3"), ("3", "2"), ("3", "0"), ("0", "3")],
        );
        let comps = s_components(&SHypergraph::of_query(&q));
        let p = component_projection(&q, &c4, &comps[0], &CountingConfig::default()).unwrap();
        // Brute force: pairs (u, w) with a common neighbour.
        let mut expected = BTreeSet::new();
        for u in 0..4u32 {
            for w in 0..4u32 {
                if (0..4u32).any(|m| (u + 4 - m) % 4 % 2 == 1 && (w + 4 - m) % 4 % 2 == 1) {
                    expected.insert(vec![u, w]);
                }
            }
        }
        assert_eq!(p.tuples, expected);
        assert_eq!(expected.len(), 8);
    }

    #[test]
    fn contract_instance_examples() {
        let qf = query(&["x", "y"], &[("x", "y")], &["x", "y"]);
        let inst = contract_instance(&qf, &c3(), &CountingConfig::default()).unwrap();
        assert_eq!(inst.query, qf);
        assert_eq!(inst.target, c3());

        let star = query(&["c", "s1", "s2", "s3"], &[("c", "s1"), ("c", "s2"), ("c", "s3")], &["s1", "s2", "s3"]);
        let inst = contract_instance(&star, &c3(), &CountingConfig::default()).unwrap();
        let comp = inst.query.structure().relation("__comp_0").unwrap();
        assert_eq!(comp.len(), 1);
        assert_eq!(comp.iter().next().unwrap().len(), 3);
        assert_eq!(inst.query.structure().relation("E").unwrap().len(), 0);

        let boolean = query(&["x", "y"], &[("x", "y"), ("y", "x")], &[]);
        for b in [c3(), digraph(&["1", "2"], &[("1", "2"), ("2", "1")])] {
            let inst = contract_instance(&boolean, &b, &CountingConfig::default()).unwrap();
            assert_eq!(inst.query.structure().vocabulary().arity("__comp_0"), Some(0));
            let exists = hom::hom_exists(boolean.structure(), &b, HomSearchConfig::default()).unwrap();
            let n = count_answers(&boolean, &b, &CountingConfig::with_mode(CountingMode::Structural)).unwrap();
            assert_eq!(n, BigUint::from(exists as u32));
        }
    }

    #[test]
    fn classify_examples() {
        let path = query(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &["a", "b", "c"]);
        let r = classify(&path, Bounds::default(), &CountingConfig::default()).unwrap();
        assert_eq!((r.core_treewidth.width, r.contract_treewidth.width), (1, 1));
        assert_eq!(r.case_label, CaseLabel::Tractable);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("brute".parse::<CountingMode>().unwrap(), CountingMode::Brute);
        assert!("fast".parse::<CountingMode>().is_err());
    }
}

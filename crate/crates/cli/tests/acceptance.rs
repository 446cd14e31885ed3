//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails. All comparisons are exact integer or
//! structural equalities; there is no numeric tolerance anywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::Rng;

use cqcount::cores::{core_of_query, core_of_structure, is_core};
use cqcount::counting::{classify, contract_instance, count_answers, Bounds, CaseLabel, CountingConfig, CountingMode};
use cqcount::gen::{default_symbols, random_graph, random_query, random_structure, rng, QueryShape};
use cqcount::hom::{self, HomSearchConfig};
use cqcount::hypergraph::{contract, SHypergraph};
use cqcount::reductions::{blowup, interpolation_profile, pair_structure, star_oracle_trace, star_query, star_target};
use cqcount::structure::Tuple;
use cqcount::treewidth::{
    decompose, exact_treewidth, verify_decomposition, DecomposeConfig, DecompositionError, Exactness, Graph,
    TreeDecomposition,
};
use cqcount::{BigUint, ConjunctiveQuery, RelationalStructure, Vocabulary};

const ORACLE_INSTANCES: usize = 1000;
const CORE_STRUCTURES: usize = 500;
const EQUIVALENT_PAIRS: usize = 200;
const STAR_RUNS: usize = 100;
const IDENTITY_CHECKS: usize = 50;
const RANDOM_GRAPHS: usize = 500;
const MUTATIONS_PER_CLASS: usize = 100;

type Outcome = Result<String, String>;

fn cfg() -> HomSearchConfig {
    HomSearchConfig::default()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_instance(i: usize) -> (ConjunctiveQuery, RelationalStructure) {
    let mut r = rng(0xC0FFEE + i as u64);
    let shape = QueryShape::default();
    let q = random_query(&mut r, &shape);
    let n = r.gen_range(1..=6);
    let density = r.gen_range(0.1..0.6);
    let b = random_structure(&mut r, &shape.symbols, n, density);
    (q, b)
}

fn criterion_1() -> Outcome {
    let structural = CountingConfig::with_mode(CountingMode::Structural);
    let mut nonzero = 0;
    for i in 0..ORACLE_INSTANCES {
        let (q, b) = oracle_instance(i);
        let s = count_answers(&q, &b, &structural).map_err(|e| format!("instance {i}: {e}"))?;
        let e = hom::count_answers_brute(&q, &b, cfg()).map_err(|e| format!("instance {i}: {e}"))?;
        check(s == e, || format!("instance {i}: structural {s} != brute {e}"))?;
        nonzero += usize::from(s > BigUint::from(0u32));
    }
    Ok(format!("{ORACLE_INSTANCES} instances equal, {nonzero} with non-zero counts"))
}

fn criterion_2() -> Outcome {
    let mut shrunk = 0;
    for i in 0..CORE_STRUCTURES {
        let mut r = rng(0xC04E + i as u64);
        let n = r.gen_range(1..=7);
        let symbols = if i % 3 == 0 { default_symbols(2) } else { vec![("E".to_string(), 2)] };
        let density = r.gen_range(0.1..0.45);
        let a = random_structure(&mut r, &symbols, n, density);
        let core = core_of_structure(&a, cfg()).map_err(|e| e.to_string())?;
        check(is_core(&core, cfg()).unwrap(), || format!("structure {i}: output is not a core"))?;
        check(hom::hom_equivalent(&core, &a, cfg()).unwrap(), || format!("structure {i}: not equivalent"))?;
        let twice = core_of_structure(&core, cfg()).unwrap();
        check(twice == core, || format!("structure {i}: not idempotent"))?;
        // Permute the element names, which permutes the search order.
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, r.gen_range(0..=k));
        }
        let renamed = a
            .rename_elements(|name| format!("p{}", perm[name[1..].parse::<usize>().unwrap()]))
            .unwrap();
        let other = core_of_structure(&renamed, cfg()).unwrap();
        check(hom::are_isomorphic(&other, &core, cfg()).unwrap(), || {
            format!("structure {i}: cores differ under a permuted order")
        })?;
        shrunk += usize::from(core.len() < a.len());
    }
    Ok(format!("{CORE_STRUCTURES} structures, {shrunk} with a proper core"))
}

/// `q` plus copies of some atoms in which quantified positions, and some
/// free positions, are replaced by fresh quantified variables.
fn with_redundant_atoms(q: &ConjunctiveQuery, r: &mut impl Rng) -> Option<ConjunctiveQuery> {
    let a = q.structure();
    let atoms: Vec<(String, Tuple)> = a
        .relations()
        .flat_map(|(n, ts)| ts.iter().map(move |t| (n.to_string(), t.clone())))
        .collect();
    if atoms.is_empty() {
        return None;
    }
    let mut names: Vec<String> = a.domain().to_vec();
    let mut tuples: Vec<(String, Vec<String>)> =
        atoms.iter().map(|(n, t)| (n.clone(), a.tuple_names(t).into_iter().map(String::from).collect())).collect();
    for c in 0..r.gen_range(1..=3) {
        let (name, t) = &atoms[r.gen_range(0..atoms.len())];
        let mut fresh: BTreeMap<u32, String> = BTreeMap::new();
        let copy = t
            .iter()
            .map(|&x| {
                if r.gen_bool(0.6) {
                    fresh
                        .entry(x)
                        .or_insert_with(|| {
                            let f = format!("f{c}_{x}");
                            names.push(f.clone());
                            f
                        })
                        .clone()
                } else {
                    a.name(x).to_string()
                }
            })
            .collect();
        tuples.push((name.clone(), copy));
    }
    let structure = RelationalStructure::from_named(
        a.vocabulary().clone(),
        names,
        tuples.iter().map(|(n, vs)| (n.as_str(), vs.iter().map(String::as_str).collect::<Vec<_>>())),
    )
    .ok()?;
    ConjunctiveQuery::from_names(structure, &q.free_var_names()).ok()
}

fn criterion_3() -> Outcome {
    let structural = CountingConfig::with_mode(CountingMode::Structural);
    let mut pairs = 0;
    let mut seed = 0u64;
    while pairs < EQUIVALENT_PAIRS {
        seed += 1;
        let mut r = rng(0x7E57 + seed);
        let q = random_query(&mut r, &QueryShape { max_vars: 6, max_atoms: 5, ..QueryShape::default() });
        let Some(q2) = with_redundant_atoms(&q, &mut r) else { continue };
        let (c1, c2) = (core_of_query(&q, cfg()).unwrap(), core_of_query(&q2, cfg()).unwrap());
        check(hom::are_isomorphic(c1.structure(), c2.structure(), cfg()).unwrap(), || {
            format!("pair {seed}: cores are not isomorphic")
        })?;
        for t in 0..3 {
            let b = random_structure(&mut r, &default_symbols(3), 1 + (seed as usize + t) % 5, 0.35);
            let x = count_answers(&q, &b, &structural).map_err(|e| e.to_string())?;
            let y = count_answers(&q2, &b, &structural).map_err(|e| e.to_string())?;
            let z = hom::count_answers_brute(&q2, &b, cfg()).map_err(|e| e.to_string())?;
            check(x == y && y == z, || format!("pair {seed}, target {t}: counts {x}, {y}, {z}"))?;
        }
        pairs += 1;
    }
    Ok(format!("{pairs} query pairs, 3 targets each"))
}

fn criterion_4() -> Outcome {
    let counting = CountingConfig::default();
    for i in 0..ORACLE_INSTANCES {
        let (q, b) = oracle_instance(i);
        let core = core_of_query(&q, cfg()).unwrap();
        let inst = contract_instance(&core, &b, &counting).map_err(|e| format!("instance {i}: {e}"))?;
        let original = hom::answer_set(&q, &b, cfg()).unwrap();
        let contracted = hom::answer_set(&inst.query, &inst.target, cfg()).unwrap();
        check(original == contracted, || format!("instance {i}: answer sets differ"))?;
        let lhs = SHypergraph::of_query(&inst.query).primal_graph();
        let rhs = contract(&SHypergraph::of_query(&core)).primal_graph();
        check(lhs == rhs, || format!("instance {i}: primal graph differs from the contract"))?;
    }
    Ok(format!("{ORACLE_INSTANCES} instances: answer sets and graphs equal"))
}

fn criterion_5() -> Outcome {
    let oracle_cfg = CountingConfig::with_mode(CountingMode::Structural);
    let (mut runs, mut identities, mut seed, mut nonzero) = (0, 0, 0u64, 0);
    let (mut wide, mut symmetric) = (0, 0);
    while runs < STAR_RUNS {
        seed += 1;
        let mut r = rng(0x57A2 + seed);
        let shape = QueryShape { max_vars: 5, max_atoms: 5, ..QueryShape::default() };
        let q = core_of_query(&random_query(&mut r, &shape), cfg()).unwrap();
        if q.free_vars().len() > 4 {
            continue;
        }
        let size = r.gen_range(2..=3);
        let b = random_structure(&mut r, &shape.symbols, size, 0.65);
        let pins: BTreeMap<String, BTreeSet<u32>> = q
            .structure()
            .domain()
            .iter()
            .map(|v| (v.clone(), (0..b.len() as u32).filter(|_| r.gen_bool(0.85)).collect()))
            .collect();
        let target = star_target(&q, &b, &pins).unwrap();
        let oracle = |d: &RelationalStructure| count_answers(&q, d, &oracle_cfg);

        if identities < IDENTITY_CHECKS {
            let d = pair_structure(&q, &target).unwrap();
            let s = q.free_vars().len();
            for mask in 0u64..1 << s {
                let t: BTreeSet<u32> =
                    q.free_vars().iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect();
                let profile = interpolation_profile(&q, &d, &t, cfg()).unwrap();
                for j in 1..=s + 1 {
                    let c_j = oracle(&blowup(&d, &t, j).unwrap().structure).map_err(|e| e.to_string())?;
                    let expected: BigUint = profile
                        .iter()
                        .enumerate()
                        .map(|(i, n)| n * BigUint::from(j).pow(i as u32))
                        .sum();
                    check(c_j == expected, || format!("seed {seed}: blow-up identity fails at T={mask:b}, j={j}"))?;
                }
            }
            identities += 1;
        }

        let trace = star_oracle_trace(&q, &target, oracle, cfg()).map_err(|e| format!("seed {seed}: {e}"))?;
        check(
            trace.covering_answers == &trace.count * BigUint::from(trace.free_automorphisms),
            || format!("seed {seed}: division by |I| is not exact"),
        )?;
        let direct = hom::count_answers_brute(&star_query(&q).unwrap(), &target, cfg()).unwrap();
        check(trace.count == direct, || format!("seed {seed}: oracle {} != direct {direct}", trace.count))?;
        nonzero += usize::from(direct > BigUint::from(0u32));
        wide += usize::from(q.free_vars().len() >= 2);
        symmetric += usize::from(trace.free_automorphisms > 1);
        runs += 1;
    }
    Ok(format!(
        "{runs} oracle runs ({nonzero} non-zero, {wide} with |S| >= 2, {symmetric} with |I| > 1), {identities} blow-up identities verified, all divisions exact"
    ))
}

fn grid(rows: usize, cols: usize) -> Graph {
    let mut g = Graph::new(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                g.add_edge(v, v + 1);
            }
            if r + 1 < rows {
                g.add_edge(v, v + cols);
            }
        }
    }
    g
}

fn mutate_edge_cover(g: &Graph, td: &TreeDecomposition) -> Option<TreeDecomposition> {
    let (u, v) = g.edges().next()?;
    let mut m = td.clone();
    for bag in &mut m.bags {
        if bag.contains(&u) {
            bag.remove(&v);
        }
    }
    Some(m)
}

fn mutate_connectivity(td: &TreeDecomposition) -> Option<TreeDecomposition> {
    let (v, host) = td
        .bags
        .iter()
        .flatten()
        .find_map(|&v| td.bags.iter().position(|b| !b.contains(&v)).map(|host| (v, host)))?;
    let mut m = td.clone();
    m.bags.push(BTreeSet::from([v]));
    m.tree_edges.push((host, m.bags.len() - 1));
    Some(m)
}

fn mutate_tree(td: &TreeDecomposition) -> Option<TreeDecomposition> {
    if td.tree_edges.is_empty() {
        return None;
    }
    let mut m = td.clone();
    m.tree_edges.remove(0);
    Some(m)
}

fn criterion_6() -> Outcome {
    let exact = |g: &Graph, expected: usize, what: &str| -> Result<(), String> {
        let w = exact_treewidth(g).map_err(|e| e.to_string())?;
        check(w == expected, || format!("{what}: treewidth {w}, expected {expected}"))
    };
    let mut r = rng(0x7EE);
    for n in 2..=20 {
        let tree = Graph::from_edges(n, (1..n).map(|v| (v, r.gen_range(0..v))));
        exact(&tree, 1, &format!("tree on {n} vertices"))?;
    }
    for n in 3..=20 {
        exact(&Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))), 2, &format!("cycle C{n}"))?;
    }
    for k in 1..=10 {
        let kk = Graph::from_edges(k, (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v))));
        exact(&kk, k - 1, &format!("K{k}"))?;
    }
    exact(&grid(3, 3), 3, "3x3 grid")?;
    exact(&grid(4, 4), 4, "4x4 grid")?;

    let (mut edge_cover, mut connectivity, mut shape) = (0, 0, 0);
    for i in 0..RANDOM_GRAPHS {
        let mut r = rng(0x6AF + i as u64);
        let n = r.gen_range(1..=30);
        let p = r.gen_range(0.05..0.5);
        let g = random_graph(&mut r, n, p);
        let td = decompose(&g, DecomposeConfig::default());
        let w = verify_decomposition(&g, &td).map_err(|e| format!("graph {i}: {e}"))?;
        check(w == td.width, || format!("graph {i}: reported width {} but verified {w}", td.width))?;
        if td.exactness == Exactness::Exact && n <= 16 {
            exact(&g, w, &format!("graph {i}"))?;
        }
        if let Some(m) = mutate_edge_cover(&g, &td) {
            let err = verify_decomposition(&g, &m);
            check(
                matches!(err, Err(DecompositionError::EdgeUncovered(..) | DecompositionError::VertexUncovered(_))),
                || format!("graph {i}: edge-cover mutation gave {err:?}"),
            )?;
            edge_cover += 1;
        }
        if let Some(m) = mutate_connectivity(&td) {
            let err = verify_decomposition(&g, &m);
            check(matches!(err, Err(DecompositionError::Disconnected(_))), || {
                format!("graph {i}: connectivity mutation gave {err:?}")
            })?;
            connectivity += 1;
        }
        if let Some(m) = mutate_tree(&td) {
            let err = verify_decomposition(&g, &m);
            check(matches!(err, Err(DecompositionError::NotATree)), || {
                format!("graph {i}: tree mutation gave {err:?}")
            })?;
            shape += 1;
        }
    }
    check(edge_cover.min(connectivity).min(shape) >= MUTATIONS_PER_CLASS, || {
        format!("too few mutations: {edge_cover}, {connectivity}, {shape}")
    })?;
    Ok(format!(
        "families exact; {RANDOM_GRAPHS} random graphs verified; mutations rejected: edge cover {edge_cover}, connectivity {connectivity}, tree {shape}"
    ))
}

fn edge_query(vars: &[String], edges: &[(usize, usize)], free: &[String], symmetric: bool) -> ConjunctiveQuery {
    let voc = Vocabulary::from_symbols([("E", 2)]).unwrap();
    let tuples = edges.iter().flat_map(|&(u, v)| {
        let mut t = vec![("E", vec![vars[u].as_str(), vars[v].as_str()])];
        if symmetric {
            t.push(("E", vec![vars[v].as_str(), vars[u].as_str()]));
        }
        t
    });
    let s = RelationalStructure::from_named(voc, vars.iter().map(String::as_str), tuples).unwrap();
    ConjunctiveQuery::from_names(s, free).unwrap()
}

fn criterion_7() -> Outcome {
    let counting = CountingConfig::default();
    let bounds = Bounds { k_core: 3, k_contract: 3 };
    let expect = |q: &ConjunctiveQuery, label: CaseLabel, core_w: usize, contract_w: usize, what: &str| {
        let r = classify(q, bounds, &counting).map_err(|e| format!("{what}: {e}"))?;
        check(
            r.case_label == label && r.core_treewidth.width == core_w && r.contract_treewidth.width == contract_w,
            || {
                format!(
                    "{what}: got {} with widths ({}, {}), expected {label} with ({core_w}, {contract_w})",
                    r.case_label, r.core_treewidth.width, r.contract_treewidth.width
                )
            },
        )?;
        check(!r.is_heuristic(), || format!("{what}: widths are not exact"))
    };
    for n in 2..=8 {
        let vars: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        expect(&edge_query(&vars, &edges, &vars, false), CaseLabel::Tractable, 1, 1, &format!("path P{n}"))?;
    }
    for k in 4..=6 {
        let vars: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
        let edges: Vec<(usize, usize)> = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v))).collect();
        let q = edge_query(&vars, &edges, &[], true);
        expect(&q, CaseLabel::CliqueEquivalent, k - 1, 0, &format!("Boolean K{k}"))?;
    }
    for k in 4..=6 {
        let mut vars = vec!["c".to_string()];
        vars.extend((1..=k).map(|i| format!("s{i}")));
        let edges: Vec<(usize, usize)> = (1..=k).map(|i| (0, i)).collect();
        let q = edge_query(&vars, &edges, &vars[1..], false);
        expect(&q, CaseLabel::SharpCliqueHard, 1, k - 1, &format!("{k}-leaf star"))?;
    }
    Ok("paths I, Boolean cliques II, quantified stars III, widths exact".into())
}

fn criterion_8() -> Outcome {
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let run = |command: &str, db: &str, query: &str, expected: &str| -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_cqcount"))
            .arg(command)
            .arg("--db")
            .arg(golden.join(db))
            .arg("--query")
            .arg(golden.join(query))
            .output()
            .map_err(|e| e.to_string())?;
        let want = std::fs::read(golden.join(expected)).map_err(|e| e.to_string())?;
        check(out.status.success() && out.stdout == want, || {
            format!(
                "{command} {db} {query}: got {:?} with {}, expected {:?}",
                String::from_utf8_lossy(&out.stdout),
                out.status,
                String::from_utf8_lossy(&want)
            )
        })
    };
    run("count", "triangle.json", "edge.cq", "count_triangle_edge.out")?;
    run("decide", "triangle.json", "clique4.cq", "decide_triangle_clique4.out")?;
    Ok("count prints 3 and decide prints UNSAT, byte-exact".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("structural count equals brute force", criterion_1),
        ("core laws", criterion_2),
        ("equivalent queries share counts", criterion_3),
        ("contraction preserves answer sets", criterion_4),
        ("star counts through the oracle", criterion_5),
        ("treewidth", criterion_6),
        ("classifier families", criterion_7),
        ("CLI golden files", criterion_8),
    ];
    println!("tolerance: exact integer equality for every count");
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS in {secs:.1}s: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL in {secs:.1}s: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

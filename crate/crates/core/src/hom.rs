//! Homomorphism search between finite structures.
//!
//! Every query in this crate bottoms out in one backtracking solver: source
//! elements are variables, target elements are values, and every source
//! tuple is a table constraint against the target relation of the same name.
//! Variables are branched in a static order (smallest domain first after
//! unary pruning), optionally maintaining generalized arc consistency.

use std::collections::{BTreeSet, VecDeque};
use std::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::structure::{Assignment, ConjunctiveQuery, RelationalStructure, Tuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HomSearchConfig {
    /// Maximum number of search-tree nodes per call.
    pub node_budget: u64,
    pub use_arc_consistency: bool,
    /// Maximum `|B|^|S|` for brute-force answer enumeration.
    pub enumeration_cap: u64,
}

impl Default for HomSearchConfig {
    fn default() -> Self {
        Self {
            node_budget: 10_000_000,
            use_arc_consistency: true,
            enumeration_cap: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn empty(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut b = Self::empty(n);
        for v in 0..n {
            b.insert(v as u32);
        }
        b
    }

    fn singleton(n: usize, v: u32) -> Self {
        let mut b = Self::empty(n);
        b.insert(v);
        b
    }

    fn contains(&self, v: u32) -> bool {
        self.words[(v / 64) as usize] & (1 << (v % 64)) != 0
    }

    fn insert(&mut self, v: u32) {
        self.words[(v / 64) as usize] |= 1 << (v % 64);
    }

    fn remove(&mut self, v: u32) -> bool {
        let had = self.contains(v);
        self.words[(v / 64) as usize] &= !(1 << (v % 64));
        had
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn first(&self) -> Option<u32> {
        self.iter().next()
    }

    fn intersect(&mut self, other: &Bits) -> bool {
        let mut changed = false;
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            let next = *w & o;
            changed |= next != *w;
            *w = next;
        }
        changed
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some(i as u32 * 64 + bit)
            })
        })
    }
}

struct Constraint<'b> {
    /// Distinct variables of the source tuple.
    vars: Vec<usize>,
    /// For each tuple position, the index into `vars`.
    slots: Vec<usize>,
    tuples: Vec<&'b [u32]>,
    table: &'b BTreeSet<Tuple>,
}

struct Solver<'b> {
    n_vals: usize,
    constraints: Vec<Constraint<'b>>,
    by_var: Vec<Vec<usize>>,
    unsatisfiable: bool,
    cfg: HomSearchConfig,
    nodes: u64,
    injective: bool,
}

type Domains = Vec<Bits>;

impl<'b> Solver<'b> {
    fn new(a: &RelationalStructure, b: &'b RelationalStructure, cfg: HomSearchConfig) -> Result<Self> {
        a.vocabulary().check_subvocabulary_of(b.vocabulary())?;
        let mut constraints = Vec::new();
        let mut by_var = vec![Vec::new(); a.len()];
        let mut unsatisfiable = false;
        for (name, tuples) in a.relations() {
            let table = b.relation(name).expect("checked vocabulary");
            for t in tuples {
                if t.is_empty() {
                    unsatisfiable |= table.is_empty();
                    continue;
                }
                let mut vars = Vec::new();
                let slots = t
                    .iter()
                    .map(|&e| {
                        let e = e as usize;
                        vars.iter().position(|&v| v == e).unwrap_or_else(|| {
                            vars.push(e);
                            vars.len() - 1
                        })
                    })
                    .collect();
                let id = constraints.len();
                for &v in &vars {
                    by_var[v].push(id);
                }
                constraints.push(Constraint {
                    vars,
                    slots,
                    tuples: table.iter().map(Vec::as_slice).collect(),
                    table,
                });
            }
        }
        Ok(Self {
            n_vals: b.len(),
            constraints,
            by_var,
            unsatisfiable,
            cfg,
            nodes: 0,
            injective: false,
        })
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            return Err(Error::BudgetExceeded(self.cfg.node_budget));
        }
        Ok(())
    }

    /// Initial domains: the partial assignment, then one revision of every
    /// constraint (unary pruning), then full propagation if enabled.
    fn initial_domains(&mut self, partial: &Assignment, avoid: Option<u32>) -> Option<Domains> {
        if self.unsatisfiable {
            return None;
        }
        let mut doms: Domains = (0..self.by_var.len())
            .map(|v| match partial.get(v as u32) {
                Some(val) => Bits::singleton(self.n_vals, val),
                None => {
                    let mut d = Bits::full(self.n_vals);
                    if let Some(x) = avoid {
                        d.remove(x);
                    }
                    d
                }
            })
            .collect();
        if doms.iter().any(Bits::is_empty) {
            return None;
        }
        let all: Vec<usize> = (0..self.constraints.len()).collect();
        if self.cfg.use_arc_consistency {
            self.propagate(&mut doms, all).then_some(doms)
        } else {
            for c in all {
                if self.revise(c, &mut doms).is_err() {
                    return None;
                }
            }
            Some(doms)
        }
    }

    /// Restricts the domains of constraint `c`'s variables to supported
    /// values. Returns the changed variables, or `Err` on a wipe-out.
    fn revise(&self, c: usize, doms: &mut Domains) -> std::result::Result<Vec<usize>, ()> {
        let con = &self.constraints[c];
        let mut support: Vec<Bits> = con.vars.iter().map(|_| Bits::empty(self.n_vals)).collect();
        let mut vals: Vec<Option<u32>> = vec![None; con.vars.len()];
        'tuples: for t in &con.tuples {
            vals.iter_mut().for_each(|v| *v = None);
            for (p, &val) in t.iter().enumerate() {
                let s = con.slots[p];
                if !doms[con.vars[s]].contains(val) {
                    continue 'tuples;
                }
                match vals[s] {
                    Some(prev) if prev != val => continue 'tuples,
                    _ => vals[s] = Some(val),
                }
            }
            for (s, v) in vals.iter().enumerate() {
                support[s].insert(v.expect("every slot is bound"));
            }
        }
        let mut changed = Vec::new();
        for (s, &var) in con.vars.iter().enumerate() {
            if doms[var].intersect(&support[s]) {
                if doms[var].is_empty() {
                    return Err(());
                }
                changed.push(var);
            }
        }
        Ok(changed)
    }

    fn propagate(&self, doms: &mut Domains, initial: Vec<usize>) -> bool {
        let mut queued = vec![false; self.constraints.len()];
        let mut queue = VecDeque::new();
        for c in initial {
            if !queued[c] {
                queued[c] = true;
                queue.push_back(c);
            }
        }
        while let Some(c) = queue.pop_front() {
            queued[c] = false;
            let Ok(changed) = self.revise(c, doms) else {
                return false;
            };
            for v in changed {
                for &other in &self.by_var[v] {
                    if other != c && !queued[other] {
                        queued[other] = true;
                        queue.push_back(other);
                    }
                }
            }
        }
        true
    }

    fn satisfied_if_assigned(&self, c: usize, doms: &Domains) -> bool {
        let con = &self.constraints[c];
        let mut values = Vec::with_capacity(con.vars.len());
        for &v in &con.vars {
            if doms[v].count() != 1 {
                return true;
            }
            values.push(doms[v].first().expect("singleton"));
        }
        let tuple: Tuple = con.slots.iter().map(|&s| values[s]).collect();
        con.table.contains(&tuple)
    }

    fn assign(&self, doms: &mut Domains, var: usize, val: u32) -> bool {
        doms[var] = Bits::singleton(self.n_vals, val);
        let mut changed = vec![var];
        if self.injective {
            for (u, d) in doms.iter_mut().enumerate() {
                if u != var && d.remove(val) {
                    if d.is_empty() {
                        return false;
                    }
                    changed.push(u);
                }
            }
        }
        if self.cfg.use_arc_consistency {
            let queue = changed.iter().flat_map(|&v| self.by_var[v].iter().copied()).collect();
            self.propagate(doms, queue)
        } else {
            self.by_var[var].iter().all(|&c| self.satisfied_if_assigned(c, doms))
        }
    }

    /// Variables by (group, domain size, index); `first` are ordered ahead
    /// of everything else.
    fn order(&self, doms: &Domains, first: &[u32]) -> Vec<usize> {
        let mut head: Vec<usize> = first.iter().map(|&v| v as usize).collect();
        let mut tail: Vec<usize> = (0..doms.len()).filter(|v| !first.contains(&(*v as u32))).collect();
        head.sort_by_key(|&v| (doms[v].count(), v));
        tail.sort_by_key(|&v| (doms[v].count(), v));
        head.extend(tail);
        head
    }

    fn dfs<F>(&mut self, doms: Domains, order: &[usize], pos: usize, stop: usize, leaf: &mut F) -> Result<ControlFlow<()>>
    where
        F: FnMut(&mut Self, &Domains) -> Result<ControlFlow<()>>,
    {
        self.tick()?;
        if pos == stop {
            return leaf(self, &doms);
        }
        let var = order[pos];
        let values: Vec<u32> = doms[var].iter().collect();
        for val in values {
            let mut next = doms.clone();
            if !self.assign(&mut next, var, val) {
                continue;
            }
            if self.dfs(next, order, pos + 1, stop, leaf)?.is_break() {
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    /// Searches for any completion of `doms` over `order[from..]`.
    fn completes(&mut self, doms: &Domains, order: &[usize], from: usize) -> Result<bool> {
        let flow = self.dfs(doms.clone(), order, from, order.len(), &mut |_, _| Ok(ControlFlow::Break(())))?;
        Ok(flow.is_break())
    }
}

fn solution_of(doms: &Domains) -> Vec<u32> {
    doms.iter().map(|d| d.first().expect("assigned")).collect()
}

fn check_partial(a: &RelationalStructure, b: &RelationalStructure, partial: &Assignment) -> Result<()> {
    if partial.len() != a.len() {
        return Err(Error::VocabularyMismatch(format!(
            "assignment covers {} elements, source has {}",
            partial.len(),
            a.len()
        )));
    }
    for (_, v) in partial.bindings() {
        if v as usize >= b.len() {
            return Err(Error::UnknownElement(format!("#{v}")));
        }
    }
    Ok(())
}

fn first_solution(
    a: &RelationalStructure,
    b: &RelationalStructure,
    partial: &Assignment,
    avoid: Option<u32>,
    cfg: HomSearchConfig,
) -> Result<Option<Vec<u32>>> {
    check_partial(a, b, partial)?;
    let mut solver = Solver::new(a, b, cfg)?;
    let Some(doms) = solver.initial_domains(partial, avoid) else {
        return Ok(None);
    };
    let order = solver.order(&doms, &[]);
    let mut found = None;
    let _ = solver.dfs(doms, &order, 0, order.len(), &mut |_, d| {
        found = Some(solution_of(d));
        Ok(ControlFlow::Break(()))
    })?;
    Ok(found)
}

/// Extends `partial` to a homomorphism from `a` to `b` if possible.
///
/// `Ok(None)` means no extension exists; running out of budget is an error,
/// never a negative answer.
pub fn find_extension(
    a: &RelationalStructure,
    b: &RelationalStructure,
    partial: &Assignment,
    cfg: HomSearchConfig,
) -> Result<Option<Assignment>> {
    Ok(first_solution(a, b, partial, None, cfg)?.map(|h| Assignment::from_total(&h)))
}

pub fn hom_exists(a: &RelationalStructure, b: &RelationalStructure, cfg: HomSearchConfig) -> Result<bool> {
    Ok(first_solution(a, b, &Assignment::empty(a.len()), None, cfg)?.is_some())
}

pub fn hom_equivalent(a: &RelationalStructure, b: &RelationalStructure, cfg: HomSearchConfig) -> Result<bool> {
    Ok(hom_exists(a, b, cfg)? && hom_exists(b, a, cfg)?)
}

/// Finds an endomorphism-style map `a -> b` whose image avoids `avoid`.
pub(crate) fn find_avoiding(
    a: &RelationalStructure,
    b: &RelationalStructure,
    avoid: u32,
    cfg: HomSearchConfig,
) -> Result<Option<Vec<u32>>> {
    first_solution(a, b, &Assignment::empty(a.len()), Some(avoid), cfg)
}

/// Calls `visit` on every homomorphism `a -> b` extending `partial`, in
/// canonical order, until it breaks.
pub fn for_each_homomorphism(
    a: &RelationalStructure,
    b: &RelationalStructure,
    partial: &Assignment,
    cfg: HomSearchConfig,
    mut visit: impl FnMut(&[u32]) -> ControlFlow<()>,
) -> Result<()> {
    check_partial(a, b, partial)?;
    let mut solver = Solver::new(a, b, cfg)?;
    let Some(doms) = solver.initial_domains(partial, None) else {
        return Ok(());
    };
    let order = solver.order(&doms, &[]);
    let _ = solver.dfs(doms, &order, 0, order.len(), &mut |_, d| Ok(visit(&solution_of(d))))?;
    Ok(())
}

/// Independent tuple-by-tuple check that `map` is a homomorphism.
pub fn is_homomorphism(a: &RelationalStructure, b: &RelationalStructure, map: &[u32]) -> bool {
    if map.len() != a.len() || map.iter().any(|&v| v as usize >= b.len()) {
        return false;
    }
    a.relations().all(|(name, tuples)| {
        let Some(target) = b.relation(name) else {
            return tuples.is_empty();
        };
        tuples.iter().all(|t| {
            let image: Tuple = t.iter().map(|&e| map[e as usize]).collect();
            target.contains(&image)
        })
    })
}

fn check_enumeration_cap(q: &ConjunctiveQuery, b: &RelationalStructure, cfg: &HomSearchConfig) -> Result<()> {
    let needed = BigUint::from(b.len()).pow(q.free_vars().len() as u32);
    if needed > BigUint::from(cfg.enumeration_cap) {
        return Err(Error::EnumerationCap {
            needed: needed.to_string(),
            cap: cfg.enumeration_cap,
        });
    }
    Ok(())
}

/// Enumerates answers: maps on the free variables (in head order) that
/// extend to a homomorphism. Free variables are branched first; each
/// complete free assignment is then tested for one extension.
fn enumerate_answers(
    q: &ConjunctiveQuery,
    b: &RelationalStructure,
    cfg: HomSearchConfig,
    mut visit: impl FnMut(Vec<u32>),
) -> Result<()> {
    check_enumeration_cap(q, b, &cfg)?;
    let a = q.structure();
    let mut solver = Solver::new(a, b, cfg)?;
    let Some(doms) = solver.initial_domains(&Assignment::empty(a.len()), None) else {
        return Ok(());
    };
    let order = solver.order(&doms, q.free_vars());
    let stop = q.free_vars().len();
    let _ = solver.dfs(doms, &order, 0, stop, &mut |s, d| {
        if s.completes(d, &order, stop)? {
            visit(q.free_vars().iter().map(|&v| d[v as usize].first().expect("assigned")).collect());
        }
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(())
}

/// The set `hom(A, B, S)` as tuples over the free variables in head order.
pub fn answer_set(q: &ConjunctiveQuery, b: &RelationalStructure, cfg: HomSearchConfig) -> Result<BTreeSet<Vec<u32>>> {
    let mut out = BTreeSet::new();
    enumerate_answers(q, b, cfg, |t| {
        out.insert(t);
    })?;
    Ok(out)
}

/// `|hom(A, B, S)|` by exhaustive enumeration. This is the reference the
/// structural counter is checked against.
pub fn count_answers_brute(q: &ConjunctiveQuery, b: &RelationalStructure, cfg: HomSearchConfig) -> Result<BigUint> {
    let mut count = BigUint::zero();
    enumerate_answers(q, b, cfg, |_| count += BigUint::one())?;
    Ok(count)
}

/// Whether `a` and `b` are isomorphic (same vocabulary required).
pub fn are_isomorphic(a: &RelationalStructure, b: &RelationalStructure, cfg: HomSearchConfig) -> Result<bool> {
    if a.vocabulary() != b.vocabulary() || a.len() != b.len() {
        return Ok(false);
    }
    if a.relations().any(|(n, t)| b.relation(n).map(|u| u.len()) != Some(t.len())) {
        return Ok(false);
    }
    // An injective homomorphism between equal-size structures with equal
    // relation sizes maps every relation onto its counterpart.
    let mut solver = Solver::new(a, b, cfg)?;
    solver.injective = true;
    let Some(doms) = solver.initial_domains(&Assignment::empty(a.len()), None) else {
        return Ok(false);
    };
    let order = solver.order(&doms, &[]);
    solver.completes(&doms, &order, 0)
}

fn inverse(map: &[u32]) -> Option<Vec<u32>> {
    let mut inv = vec![u32::MAX; map.len()];
    for (i, &v) in map.iter().enumerate() {
        let slot = inv.get_mut(v as usize)?;
        if *slot != u32::MAX {
            return None;
        }
        *slot = i as u32;
    }
    Some(inv)
}

/// Maps `S -> S` that extend to an automorphism of the query structure.
/// Each map lists the images of the free variables in head order.
pub fn free_automorphism_set(q: &ConjunctiveQuery, cfg: HomSearchConfig) -> Result<BTreeSet<Vec<u32>>> {
    let a = q.structure();
    let free = q.free_set();
    let mut solver = Solver::new(a, a, cfg)?;
    solver.injective = true;
    let mut out = BTreeSet::new();
    let Some(doms) = solver.initial_domains(&Assignment::empty(a.len()), None) else {
        return Ok(out);
    };
    let order = solver.order(&doms, &[]);
    let _ = solver.dfs(doms, &order, 0, order.len(), &mut |_, d| {
        let h = solution_of(d);
        if let Some(inv) = inverse(&h) {
            let image: Vec<u32> = q.free_vars().iter().map(|&v| h[v as usize]).collect();
            if image.iter().all(|v| free.contains(v)) && is_homomorphism(a, a, &inv) {
                out.insert(image);
            }
        }
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(out)
}

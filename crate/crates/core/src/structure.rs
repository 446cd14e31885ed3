//! Relational vocabularies, finite structures and conjunctive queries.
//!
//! Element identifiers are strings, interned to dense `u32` indices. The
//! domain of a structure is kept sorted, so index order is the canonical
//! element order and every iteration below is deterministic.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub const DEFAULT_ARITY_CAP: usize = 8;

/// Prefix of the unary relations added by [`augment`].
pub const AUG_PREFIX: &str = "__aug_";
/// Prefix of the unary relations added by [`star_structure`].
pub const STAR_PREFIX: &str = "__star_";

/// A tuple of element indices.
pub type Tuple = Vec<u32>;

#[derive(Clone, Debug)]
pub struct Vocabulary {
    symbols: BTreeMap<String, usize>,
    arity_cap: usize,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::with_arity_cap(DEFAULT_ARITY_CAP)
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_arity_cap(arity_cap: usize) -> Self {
        Self {
            symbols: BTreeMap::new(),
            arity_cap,
        }
    }

    /// Builds a vocabulary from `(name, arity)` pairs with the default cap.
    pub fn from_symbols<S: Into<String>>(
        symbols: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self> {
        let mut vocabulary = Self::new();
        for (name, arity) in symbols {
            vocabulary.insert(name, arity)?;
        }
        Ok(vocabulary)
    }

    /// Declares `name` with `arity`. Re-declaring with the same arity is a no-op.
    pub fn insert(&mut self, name: impl Into<String>, arity: usize) -> Result<()> {
        let name = name.into();
        if arity > self.arity_cap {
            return Err(Error::ArityCap {
                name,
                arity,
                cap: self.arity_cap,
            });
        }
        match self.symbols.get(&name) {
            Some(&existing) if existing != arity => Err(Error::DuplicateRelation(name)),
            Some(_) => Ok(()),
            None => {
                self.symbols.insert(name, arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.symbols.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn arity_cap(&self) -> usize {
        self.arity_cap
    }

    pub fn set_arity_cap(&mut self, cap: usize) {
        self.arity_cap = cap;
    }

    /// Checks that every symbol of `self` is declared in `other` with the
    /// same arity.
    pub fn check_subvocabulary_of(&self, other: &Vocabulary) -> Result<()> {
        for (name, arity) in self.iter() {
            match other.arity(name) {
                None => return Err(Error::UnknownRelation(name.to_string())),
                Some(a) if a != arity => {
                    return Err(Error::VocabularyMismatch(format!(
                        "`{name}` has arity {arity} on the left and {a} on the right"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn without_prefix(&self, prefix: &str) -> Vocabulary {
        Vocabulary {
            symbols: self
                .symbols
                .iter()
                .filter(|(n, _)| !n.starts_with(prefix))
                .map(|(n, &a)| (n.clone(), a))
                .collect(),
            arity_cap: self.arity_cap,
        }
    }
}

/// A finite relational structure. Tuple sets have set semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationalStructure {
    vocabulary: Vocabulary,
    domain: Vec<String>,
    relations: BTreeMap<String, BTreeSet<Tuple>>,
}

impl RelationalStructure {
    /// A structure with the given domain and all relations empty.
    pub fn new<S: Into<String>>(
        vocabulary: Vocabulary,
        domain: impl IntoIterator<Item = S>,
    ) -> Self {
        let domain: BTreeSet<String> = domain.into_iter().map(Into::into).collect();
        let relations = vocabulary
            .iter()
            .map(|(n, _)| (n.to_string(), BTreeSet::new()))
            .collect();
        Self {
            vocabulary,
            domain: domain.into_iter().collect(),
            relations,
        }
    }

    /// Builds a structure from element names. Every tuple element must be
    /// listed in `domain`; duplicate tuples collapse.
    pub fn from_named<D, N, E>(
        vocabulary: Vocabulary,
        domain: impl IntoIterator<Item = D>,
        tuples: impl IntoIterator<Item = (N, Vec<E>)>,
    ) -> Result<Self>
    where
        D: Into<String>,
        N: AsRef<str>,
        E: AsRef<str>,
    {
        let mut structure = Self::new(vocabulary, domain);
        for (name, elements) in tuples {
            let tuple = elements
                .iter()
                .map(|e| {
                    structure
                        .index_of(e.as_ref())
                        .ok_or_else(|| Error::UnknownElement(e.as_ref().to_string()))
                })
                .collect::<Result<Tuple>>()?;
            structure.insert_tuple(name.as_ref(), tuple)?;
        }
        Ok(structure)
    }

    /// Builds a structure whose tuples index into `names`, which may be in
    /// any order but must be unique. The result is re-indexed canonically.
    pub fn from_indexed<T>(
        vocabulary: Vocabulary,
        names: Vec<String>,
        relations: impl IntoIterator<Item = (String, T)>,
    ) -> Result<Self>
    where
        T: IntoIterator<Item = Tuple>,
    {
        let mut order: Vec<u32> = (0..names.len() as u32).collect();
        order.sort_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
        let mut remap = vec![0u32; names.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let domain: Vec<String> = order.iter().map(|&i| names[i as usize].clone()).collect();
        if let Some(w) = domain.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::VocabularyMismatch(format!(
                "duplicate element name `{}`",
                w[0]
            )));
        }
        let mut structure = Self::new(vocabulary, Vec::<String>::new());
        structure.domain = domain;
        for (name, tuples) in relations {
            for tuple in tuples {
                let mut mapped = Vec::with_capacity(tuple.len());
                for &e in &tuple {
                    let e = *remap
                        .get(e as usize)
                        .ok_or_else(|| Error::UnknownElement(format!("#{e}")))?;
                    mapped.push(e);
                }
                structure.insert_tuple(&name, mapped)?;
            }
        }
        Ok(structure)
    }

    fn insert_tuple(&mut self, name: &str, tuple: Tuple) -> Result<()> {
        let arity = self
            .vocabulary
            .arity(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                name: name.to_string(),
                expected: arity,
                found: tuple.len(),
            });
        }
        self.relations
            .get_mut(name)
            .expect("every vocabulary symbol has a relation")
            .insert(tuple);
        Ok(())
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Domain element names in canonical (sorted) order.
    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    /// Number of domain elements.
    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        self.domain
            .binary_search_by(|e| e.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    pub fn name(&self, index: u32) -> &str {
        &self.domain[index as usize]
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &BTreeSet<Tuple>)> {
        self.relations.iter().map(|(n, t)| (n.as_str(), t))
    }

    /// Total number of tuples over all relations.
    pub fn tuple_count(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    /// Renders a tuple with element names.
    pub fn tuple_names(&self, tuple: &[u32]) -> Vec<&str> {
        tuple.iter().map(|&e| self.name(e)).collect()
    }

    /// The substructure induced by `elements`: the domain becomes `elements`
    /// and each relation keeps the tuples lying entirely inside it.
    pub fn induced_substructure(&self, elements: &BTreeSet<u32>) -> Result<Self> {
        let mut remap = vec![None; self.len()];
        for (new, &old) in elements.iter().enumerate() {
            let slot = remap
                .get_mut(old as usize)
                .ok_or_else(|| Error::UnknownElement(format!("#{old}")))?;
            *slot = Some(new as u32);
        }
        let relations = self
            .relations
            .iter()
            .map(|(name, tuples)| {
                let kept = tuples
                    .iter()
                    .filter_map(|t| t.iter().map(|&e| remap[e as usize]).collect::<Option<Tuple>>())
                    .collect();
                (name.clone(), kept)
            })
            .collect();
        Ok(Self {
            vocabulary: self.vocabulary.clone(),
            domain: elements.iter().map(|&e| self.domain[e as usize].clone()).collect(),
            relations,
        })
    }

    /// [`Self::induced_substructure`] addressed by element names.
    pub fn induced_by_names<S: AsRef<str>>(&self, elements: &[S]) -> Result<Self> {
        let set = elements
            .iter()
            .map(|e| {
                self.index_of(e.as_ref())
                    .ok_or_else(|| Error::UnknownElement(e.as_ref().to_string()))
            })
            .collect::<Result<BTreeSet<u32>>>()?;
        self.induced_substructure(&set)
    }

    /// Renames every element through `rename`, which must be injective.
    pub fn rename_elements(&self, rename: impl Fn(&str) -> String) -> Result<Self> {
        let names = self.domain.iter().map(|e| rename(e)).collect();
        Self::from_indexed(
            self.vocabulary.clone(),
            names,
            self.relations
                .iter()
                .map(|(n, t)| (n.clone(), t.iter().cloned().collect::<Vec<_>>())),
        )
    }

    /// Adds relation `name` with the given tuples. Fails if `name` exists.
    pub fn with_relation(
        &self,
        name: &str,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self> {
        if self.vocabulary.contains(name) {
            return Err(Error::NameCollision(name.to_string()));
        }
        let mut out = self.clone();
        out.vocabulary.insert(name, arity)?;
        out.relations.insert(name.to_string(), BTreeSet::new());
        for t in tuples {
            out.insert_tuple(name, t)?;
        }
        Ok(out)
    }

    /// Drops every relation whose name starts with `prefix`.
    pub fn without_prefix(&self, prefix: &str) -> Self {
        Self {
            vocabulary: self.vocabulary.without_prefix(prefix),
            domain: self.domain.clone(),
            relations: self
                .relations
                .iter()
                .filter(|(n, _)| !n.starts_with(prefix))
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
        }
    }

    /// Restricts the structure to the relations named in `vocabulary`.
    pub fn restrict_vocabulary(&self, vocabulary: &Vocabulary) -> Result<Self> {
        vocabulary.check_subvocabulary_of(&self.vocabulary)?;
        Ok(Self {
            vocabulary: vocabulary.clone(),
            domain: self.domain.clone(),
            relations: vocabulary
                .iter()
                .map(|(n, _)| (n.to_string(), self.relations[n].clone()))
                .collect(),
        })
    }
}

/// A conjunctive query as its natural model plus an ordered list of free
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    structure: RelationalStructure,
    free_vars: Vec<u32>,
}

impl ConjunctiveQuery {
    pub fn new(structure: RelationalStructure, free_vars: Vec<u32>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &v in &free_vars {
            if v as usize >= structure.len() {
                return Err(Error::UnknownElement(format!("#{v}")));
            }
            if !seen.insert(v) {
                return Err(Error::DuplicateFreeVariable(structure.name(v).to_string()));
            }
        }
        Ok(Self {
            structure,
            free_vars,
        })
    }

    pub fn from_names<S: AsRef<str>>(structure: RelationalStructure, free: &[S]) -> Result<Self> {
        let free_vars = free
            .iter()
            .map(|v| {
                structure
                    .index_of(v.as_ref())
                    .ok_or_else(|| Error::UnknownElement(v.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(structure, free_vars)
    }

    pub fn structure(&self) -> &RelationalStructure {
        &self.structure
    }

    /// Free variables in head order.
    pub fn free_vars(&self) -> &[u32] {
        &self.free_vars
    }

    pub fn free_var_names(&self) -> Vec<&str> {
        self.free_vars.iter().map(|&v| self.structure.name(v)).collect()
    }

    pub fn free_set(&self) -> BTreeSet<u32> {
        self.free_vars.iter().copied().collect()
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.free_vars.len() == self.structure.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.free_vars.is_empty()
    }
}

/// A partial map from source elements to target elements, indexed by source.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Assignment {
    values: Vec<Option<u32>>,
}

impl Assignment {
    pub fn empty(source_len: usize) -> Self {
        Self {
            values: vec![None; source_len],
        }
    }

    pub fn from_total(values: &[u32]) -> Self {
        Self {
            values: values.iter().map(|&v| Some(v)).collect(),
        }
    }

    pub fn bind(&mut self, source: u32, target: u32) {
        self.values[source as usize] = Some(target);
    }

    pub fn get(&self, source: u32) -> Option<u32> {
        self.values.get(source as usize).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as u32, v)))
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn to_total(&self) -> Option<Vec<u32>> {
        self.values.iter().copied().collect()
    }
}

fn add_pinning_relations(
    structure: &RelationalStructure,
    prefix: &str,
    elements: impl IntoIterator<Item = u32>,
) -> Result<RelationalStructure> {
    let mut out = structure.clone();
    for a in elements {
        let name = format!("{prefix}{}", structure.name(a));
        out = out.with_relation(&name, 1, [vec![a]])?;
    }
    Ok(out)
}

/// The augmented structure: the query structure plus `__aug_a = {a}` for
/// every free variable `a`.
pub fn augment(query: &ConjunctiveQuery) -> Result<RelationalStructure> {
    add_pinning_relations(query.structure(), AUG_PREFIX, query.free_set())
}

/// The structure plus `__star_a = {a}` for every domain element `a`.
pub fn star_structure(structure: &RelationalStructure) -> Result<RelationalStructure> {
    add_pinning_relations(structure, STAR_PREFIX, 0..structure.len() as u32)
}

/// Removes the relations introduced by [`augment`].
pub fn strip_augmentation(structure: &RelationalStructure) -> RelationalStructure {
    structure.without_prefix(AUG_PREFIX)
}

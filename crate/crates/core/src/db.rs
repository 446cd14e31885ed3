//! JSON databases:
//!
//! ```json
//! {"domain": ["1", "2"], "relations": {"E": {"arity": 2, "tuples": [["1", "2"]]}}}
//! ```
//!
//! `domain` is optional; the domain is its union with every tuple element.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{ConjunctiveQuery, RelationalStructure, Vocabulary, DEFAULT_ARITY_CAP};

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DatabaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Vec<String>>,
    relations: BTreeMap<String, RelationFile>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RelationFile {
    arity: usize,
    tuples: Vec<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct LoadedDatabase {
    pub structure: RelationalStructure,
    /// Tuples dropped because they repeat an earlier tuple.
    pub duplicates_removed: usize,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_database(text: &str) -> Result<LoadedDatabase> {
    let file: DatabaseFile = serde_json::from_str(text).map_err(|e| Error::MalformedDatabase(e.to_string()))?;
    let max_arity = file.relations.values().map(|r| r.arity).max().unwrap_or(0);
    let mut vocabulary = Vocabulary::with_arity_cap(max_arity.max(DEFAULT_ARITY_CAP));
    let mut domain: BTreeSet<&str> = file.domain.iter().flatten().map(String::as_str).collect();
    let mut duplicates_removed = 0;
    for (name, rel) in &file.relations {
        if name.starts_with("__") {
            return Err(Error::ReservedName(name.clone()));
        }
        if !valid_name(name) {
            return Err(Error::MalformedDatabase(format!("invalid relation name `{name}`")));
        }
        if rel.arity == 0 {
            return Err(Error::MalformedDatabase(format!("relation `{name}` has arity 0")));
        }
        vocabulary.insert(name, rel.arity)?;
        let mut seen = BTreeSet::new();
        for t in &rel.tuples {
            if t.len() != rel.arity {
                return Err(Error::ArityMismatch {
                    name: name.clone(),
                    expected: rel.arity,
                    found: t.len(),
                });
            }
            if !seen.insert(t) {
                duplicates_removed += 1;
            }
            domain.extend(t.iter().map(String::as_str));
        }
    }
    let structure = RelationalStructure::from_named(
        vocabulary,
        domain,
        file.relations
            .iter()
            .flat_map(|(name, rel)| rel.tuples.iter().map(move |t| (name.as_str(), t.iter().map(String::as_str).collect::<Vec<_>>()))),
    )?;
    Ok(LoadedDatabase {
        structure,
        duplicates_removed,
    })
}

pub fn load_database(path: impl AsRef<Path>) -> Result<LoadedDatabase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_database(&text)
}

/// The JSON form of a structure, listing the full domain.
pub fn database_to_json(b: &RelationalStructure) -> serde_json::Value {
    let file = DatabaseFile {
        domain: Some(b.domain().to_vec()),
        relations: b
            .relations()
            .map(|(name, tuples)| {
                let rel = RelationFile {
                    arity: b.vocabulary().arity(name).expect("declared"),
                    tuples: tuples
                        .iter()
                        .map(|t| b.tuple_names(t).into_iter().map(String::from).collect())
                        .collect(),
                };
                (name.to_string(), rel)
            })
            .collect(),
    };
    serde_json::to_value(file).expect("serializable")
}

/// Every relation of the query exists in the database with the same arity.
pub fn check_compatible(q: &ConjunctiveQuery, b: &RelationalStructure) -> Result<()> {
    q.structure().vocabulary().check_subvocabulary_of(b.vocabulary())
}

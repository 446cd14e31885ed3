//! Exact counting of conjunctive query answers.
//!
//! Queries are structures with a list of free variables; answers are the
//! maps from the free variables into a target structure that extend to a
//! homomorphism. Counting goes through the core of the query, quantifier
//! elimination per S-component and dynamic programming over a tree
//! decomposition, with brute force available as a reference.

pub mod cores;
pub mod counting;
pub mod db;
pub mod error;
pub mod gen;
pub mod hom;
pub mod hypergraph;
pub mod parse;
pub mod reductions;
pub mod structure;
pub mod treewidth;

pub use counting::{classify, count_answers, Bounds, CaseLabel, CountingConfig, CountingMode, TrichotomyReport};
pub use error::{Error, Result};
pub use num_bigint::BigUint;
pub use hom::HomSearchConfig;
pub use parse::{parse_query, render_query};
pub use structure::{ConjunctiveQuery, RelationalStructure, Vocabulary};

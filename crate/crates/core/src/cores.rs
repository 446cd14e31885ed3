//! Cores of structures and of conjunctive queries.
//!
//! A structure is a core iff every endomorphism is surjective. The core is
//! computed by repeatedly finding an endomorphism that misses some element
//! and restricting to the substructure induced by its image.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::hom::{self, HomSearchConfig};
use crate::structure::{augment, strip_augmentation, ConjunctiveQuery, RelationalStructure};

/// A non-surjective endomorphism, trying to avoid each element in canonical
/// order.
fn shrinking_endomorphism(a: &RelationalStructure, cfg: HomSearchConfig) -> Result<Option<Vec<u32>>> {
    for x in 0..a.len() as u32 {
        if let Some(h) = hom::find_avoiding(a, a, x, cfg)? {
            return Ok(Some(h));
        }
    }
    Ok(None)
}

pub fn is_core(a: &RelationalStructure, cfg: HomSearchConfig) -> Result<bool> {
    Ok(shrinking_endomorphism(a, cfg)?.is_none())
}

/// A core of `a`, as an induced substructure of `a`.
pub fn core_of_structure(a: &RelationalStructure, cfg: HomSearchConfig) -> Result<RelationalStructure> {
    let mut current = a.clone();
    while let Some(h) = shrinking_endomorphism(&current, cfg)? {
        let image: BTreeSet<u32> = h.into_iter().collect();
        current = current.induced_substructure(&image)?;
    }
    Ok(current)
}

/// The core of the augmented structure with the pinning relations removed.
/// Free variables are fixed by every endomorphism of the augmented
/// structure, so they all survive with their head order.
pub fn core_of_query(q: &ConjunctiveQuery, cfg: HomSearchConfig) -> Result<ConjunctiveQuery> {
    let core = strip_augmentation(&core_of_structure(&augment(q)?, cfg)?);
    let free = q.free_var_names();
    ConjunctiveQuery::from_names(core, &free)
}

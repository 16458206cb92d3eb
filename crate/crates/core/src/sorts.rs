//! The sort hierarchy backing `sort(X)=<s` conditions: a DAG of `isa`
//! edges rooted at `top`, with subsumption as its reflexive-transitive
//! closure.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// The distinguished most-general sort. Every sort reaches it.
pub const TOP_SORT: &str = "top";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SortsError {
    #[error("cycle involving sort `{0}`")]
    Cycle(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
}

/// An immutable is-a DAG. Multiple inheritance is allowed; sorts without a
/// declared parent hang directly under [`TOP_SORT`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortHierarchy {
    parents: BTreeMap<String, BTreeSet<String>>,
    ancestors: BTreeMap<String, BTreeSet<String>>,
}

impl SortHierarchy {
    /// The hierarchy containing only `top`.
    pub fn top_only() -> SortHierarchy {
        SortHierarchy::from_edges(Vec::new()).expect("empty hierarchy")
    }

    /// Builds the hierarchy from `isa(child, parent)` edges.
    pub fn from_edges(edges: Vec<(String, String)>) -> Result<SortHierarchy, SortsError> {
        let mut sorts: BTreeSet<String> = BTreeSet::new();
        sorts.insert(TOP_SORT.to_owned());
        for (child, parent) in &edges {
            sorts.insert(child.clone());
            sorts.insert(parent.clone());
        }
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for sort in &sorts {
            parents.insert(sort.clone(), BTreeSet::new());
        }
        for (child, parent) in &edges {
            parents
                .get_mut(child)
                .expect("child registered")
                .insert(parent.clone());
        }
        for (sort, ps) in parents.iter_mut() {
            if ps.is_empty() && sort != TOP_SORT {
                ps.insert(TOP_SORT.to_owned());
            }
        }

        // Reflexive-transitive closure; the DFS doubles as cycle detection.
        let mut ancestors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut in_progress: BTreeSet<String> = BTreeSet::new();
        fn close(
            sort: &str,
            parents: &BTreeMap<String, BTreeSet<String>>,
            ancestors: &mut BTreeMap<String, BTreeSet<String>>,
            in_progress: &mut BTreeSet<String>,
        ) -> Result<(), SortsError> {
            if ancestors.contains_key(sort) {
                return Ok(());
            }
            if !in_progress.insert(sort.to_owned()) {
                return Err(SortsError::Cycle(sort.to_owned()));
            }
            let mut acc: BTreeSet<String> = BTreeSet::new();
            acc.insert(sort.to_owned());
            for parent in &parents[sort] {
                close(parent, parents, ancestors, in_progress)?;
                acc.extend(ancestors[parent].iter().cloned());
            }
            in_progress.remove(sort);
            ancestors.insert(sort.to_owned(), acc);
            Ok(())
        }
        for sort in &sorts {
            close(sort, &parents, &mut ancestors, &mut in_progress)?;
        }
        Ok(SortHierarchy { parents, ancestors })
    }

    pub fn contains(&self, sort: &str) -> bool {
        self.ancestors.contains_key(sort)
    }

    pub fn sorts(&self) -> impl Iterator<Item = &str> {
        self.ancestors.keys().map(String::as_str)
    }

    /// True iff `specific` is subsumed by `general` under the
    /// reflexive-transitive closure of the is-a edges.
    pub fn subsumes(&self, general: &str, specific: &str) -> Result<bool, SortsError> {
        if !self.contains(general) {
            return Err(SortsError::UnknownSort(general.to_owned()));
        }
        let up = self
            .ancestors
            .get(specific)
            .ok_or_else(|| SortsError::UnknownSort(specific.to_owned()))?;
        Ok(up.contains(general))
    }
}

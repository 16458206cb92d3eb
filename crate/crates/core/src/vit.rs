//! The interface term exchanged with the engine: a language tag, a flat
//! ordered set of ground labeled conditions, and a marker sort table.

use crate::term::{canonicalize, skolem_class, LabeledCondition, Term};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VitError {
    #[error("condition `{0}` is not ground")]
    NonGround(String),
    #[error("sorts entry for `{0}` but no condition mentions it")]
    UnusedSortMarker(String),
}

/// An input or output package for one transfer run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vit {
    lang: String,
    conds: Vec<LabeledCondition>,
    sorts: BTreeMap<String, String>,
}

impl Vit {
    /// Builds a Vit, canonicalizing the condition set. Duplicate
    /// conditions collapse (set semantics); every sorted marker must occur
    /// in some condition.
    pub fn new(
        lang: impl Into<String>,
        conds: Vec<LabeledCondition>,
        sorts: BTreeMap<String, String>,
    ) -> Result<Vit, VitError> {
        if let Some(c) = conds.iter().find(|c| !c.is_ground()) {
            return Err(VitError::NonGround(c.to_string()));
        }
        let conds = canonicalize(conds);
        for marker in sorts.keys() {
            let occurs = conds
                .iter()
                .any(|c| c.terms().any(|t| t.name() == marker));
            if !occurs {
                return Err(VitError::UnusedSortMarker(marker.clone()));
            }
        }
        Ok(Vit {
            lang: lang.into(),
            conds,
            sorts,
        })
    }

    pub fn empty(lang: impl Into<String>) -> Vit {
        Vit {
            lang: lang.into(),
            conds: Vec::new(),
            sorts: BTreeMap::new(),
        }
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    /// Conditions in canonical order.
    pub fn conds(&self) -> &[LabeledCondition] {
        &self.conds
    }

    pub fn sorts(&self) -> &BTreeMap<String, String> {
        &self.sorts
    }

    pub fn sort_of(&self, marker: &str) -> Option<&str> {
        self.sorts.get(marker).map(String::as_str)
    }

    /// Every constant name occurring in the conditions.
    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.conds.iter().flat_map(|c| c.terms()).map(Term::name)
    }
}

// Canonical text form; `crate::parse::parse_vit` reads it back.
impl fmt::Display for Vit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lang: {}", self.lang)?;
        writeln!(f, "conds:")?;
        for c in &self.conds {
            writeln!(f, "{c}")?;
        }
        if !self.sorts.is_empty() {
            writeln!(f, "sorts:")?;
            for (marker, sort) in &self.sorts {
                writeln!(f, "{marker}={sort}")?;
            }
        }
        Ok(())
    }
}

/// True iff some namespace-respecting bijection over skolem constants maps
/// `a` onto `b` exactly: equal language tags, condition sets related by
/// the bijection, and sort tables related by the same bijection. Plain
/// atoms must match literally.
pub fn vit_alpha_equal(a: &Vit, b: &Vit) -> bool {
    if a.lang != b.lang || a.conds.len() != b.conds.len() || a.sorts.len() != b.sorts.len() {
        return false;
    }
    let mut forward = BTreeMap::new();
    let mut reverse = BTreeMap::new();
    let mut used = vec![false; b.conds.len()];
    assign(a, b, 0, &mut used, &mut forward, &mut reverse)
}

fn assign(
    a: &Vit,
    b: &Vit,
    idx: usize,
    used: &mut [bool],
    forward: &mut BTreeMap<String, String>,
    reverse: &mut BTreeMap<String, String>,
) -> bool {
    if idx == a.conds.len() {
        return sorts_match(a, b, forward);
    }
    let ca = &a.conds[idx];
    for j in 0..b.conds.len() {
        if used[j] {
            continue;
        }
        let cb = &b.conds[j];
        if ca.predicate != cb.predicate
            || ca.arity() != cb.arity()
            || ca.class_flag != cb.class_flag
        {
            continue;
        }
        let mut added = Vec::new();
        if pair_terms(ca, cb, forward, reverse, &mut added) {
            used[j] = true;
            if assign(a, b, idx + 1, used, forward, reverse) {
                return true;
            }
            used[j] = false;
        }
        for key in added {
            let mapped = forward.remove(&key);
            if let Some(v) = mapped {
                reverse.remove(&v);
            }
        }
    }
    false
}

fn pair_terms(
    ca: &LabeledCondition,
    cb: &LabeledCondition,
    forward: &mut BTreeMap<String, String>,
    reverse: &mut BTreeMap<String, String>,
    added: &mut Vec<String>,
) -> bool {
    for (ta, tb) in ca.terms().zip(cb.terms()) {
        let (x, y) = (ta.name(), tb.name());
        match (skolem_class(x), skolem_class(y)) {
            (Some(cx), Some(cy)) if cx == cy => {
                match (forward.get(x), reverse.get(y)) {
                    (Some(fx), Some(ry)) if fx == y && ry == x => {}
                    (None, None) => {
                        forward.insert(x.to_owned(), y.to_owned());
                        reverse.insert(y.to_owned(), x.to_owned());
                        added.push(x.to_owned());
                    }
                    _ => return false,
                }
            }
            (None, None) => {
                if x != y {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

fn sorts_match(a: &Vit, b: &Vit, forward: &BTreeMap<String, String>) -> bool {
    a.sorts.iter().all(|(marker, sort)| {
        let mapped = forward.get(marker).map(String::as_str).unwrap_or(marker);
        b.sorts.get(mapped).map(String::as_str) == Some(sort.as_str())
    })
}

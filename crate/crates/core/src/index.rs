//! Predicate indexing for candidate-rule retrieval: a predicate-keyed map
//! plus a shared-prefix trie over sorted predicate-multiset signatures.
//!
//! Retrieval is sound and complete for the signature test: a rule is a
//! candidate for an input exactly when its source-side predicate multiset
//! is included in the input's predicate multiset.

use crate::term::LabeledCondition;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Key of one predicate position: name, arity, class flag.
pub type PredKey = (String, usize, bool);

/// Multiset of predicate keys for a condition set.
pub fn predicate_multiset(conds: &[LabeledCondition]) -> BTreeMap<PredKey, usize> {
    let mut counts = BTreeMap::new();
    for c in conds {
        *counts
            .entry((c.predicate.clone(), c.arity(), c.class_flag))
            .or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct TrieNode {
    /// Child edges sorted by key.
    edges: Vec<(PredKey, usize)>,
    /// Rules whose whole signature ends at this node.
    rules: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleIndex {
    /// (predicate, arity, flag) → rules using it in their source set.
    by_predicate: Vec<(PredKey, Vec<usize>)>,
    /// Per-rule signature as sorted (key, multiplicity) runs.
    signatures: Vec<Vec<(PredKey, usize)>>,
    nodes: Vec<TrieNode>,
}

impl RuleIndex {
    /// Builds the index over the rules' source sets, identified by their
    /// position in the given slice.
    pub fn build(source_sets: &[&[LabeledCondition]]) -> RuleIndex {
        let mut by_predicate: BTreeMap<PredKey, Vec<usize>> = BTreeMap::new();
        let mut signatures = Vec::with_capacity(source_sets.len());
        let mut nodes = vec![TrieNode::default()];
        for (rule_id, sl) in source_sets.iter().enumerate() {
            let multiset = predicate_multiset(sl);
            for key in multiset.keys() {
                by_predicate.entry(key.clone()).or_default().push(rule_id);
            }
            let mut node = 0usize;
            for (key, count) in &multiset {
                for _ in 0..*count {
                    node = match nodes[node].edges.binary_search_by(|(k, _)| k.cmp(key)) {
                        Ok(i) => nodes[node].edges[i].1,
                        Err(i) => {
                            let next = nodes.len();
                            nodes.push(TrieNode::default());
                            nodes[node].edges.insert(i, (key.clone(), next));
                            next
                        }
                    };
                }
            }
            nodes[node].rules.push(rule_id);
            signatures.push(multiset.into_iter().collect());
        }
        RuleIndex {
            by_predicate: by_predicate.into_iter().collect(),
            signatures,
            nodes,
        }
    }

    pub fn rule_count(&self) -> usize {
        self.signatures.len()
    }

    /// Rules whose source set uses the given predicate key.
    pub fn rules_for_predicate(&self, key: &PredKey) -> &[usize] {
        match self.by_predicate.binary_search_by(|(k, _)| k.cmp(key)) {
            Ok(i) => &self.by_predicate[i].1,
            Err(_) => &[],
        }
    }

    /// Candidate rules for an input multiset, ascending by rule id, via
    /// the signature trie.
    pub fn candidates(&self, input: &BTreeMap<PredKey, usize>) -> Vec<usize> {
        let mut remaining = input.clone();
        let mut found = Vec::new();
        self.walk(0, &mut remaining, &mut found);
        found.sort_unstable();
        found.dedup();
        found
    }

    fn walk(
        &self,
        node: usize,
        remaining: &mut BTreeMap<PredKey, usize>,
        found: &mut Vec<usize>,
    ) {
        found.extend_from_slice(&self.nodes[node].rules);
        let edges = &self.nodes[node].edges;
        // Iterate whichever side is smaller: the node's edges or the
        // input's distinct keys.
        if edges.len() <= remaining.len() {
            for i in 0..edges.len() {
                let (key, child) = &self.nodes[node].edges[i];
                let (key, child) = (key.clone(), *child);
                if let Some(count) = remaining.get_mut(&key) {
                    if *count > 0 {
                        *count -= 1;
                        self.walk(child, remaining, found);
                        *remaining.get_mut(&key).expect("restored key") += 1;
                    }
                }
            }
        } else {
            let keys: Vec<PredKey> = remaining
                .iter()
                .filter(|&(_, &c)| c > 0)
                .map(|(k, _)| k.clone())
                .collect();
            for key in keys {
                let child = match edges.binary_search_by(|(k, _)| k.cmp(&key)) {
                    Ok(i) => edges[i].1,
                    Err(_) => continue,
                };
                *remaining.get_mut(&key).expect("present") -= 1;
                self.walk(child, remaining, found);
                *remaining.get_mut(&key).expect("present") += 1;
            }
        }
    }

    /// Candidate rules by a linear scan testing multiset inclusion,
    /// bypassing the trie. Kept for benchmarking the index against.
    pub fn candidates_naive(&self, input: &BTreeMap<PredKey, usize>) -> Vec<usize> {
        (0..self.signatures.len())
            .filter(|&rule_id| {
                self.signatures[rule_id]
                    .iter()
                    .all(|(key, count)| input.get(key).copied().unwrap_or(0) >= *count)
            })
            .collect()
    }
}

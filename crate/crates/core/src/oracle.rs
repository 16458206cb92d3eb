//! A deliberately naive, exhaustive reference implementation of candidate
//! retrieval and derivation, used as ground truth in differential tests
//! and behind the `oracle` CLI command. Matching, condition evaluation and
//! instantiation are reimplemented here from the definitions, sharing no
//! code with the engine paths they check.

use crate::compile::{CompiledRule, RuleBase, SpecificityKey};
use crate::rules::Condition;
use crate::term::{numeric_suffix, LabeledCondition, Term};
use crate::vit::{vit_alpha_equal, Vit};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("external predicates are not supported by the oracle")]
    ExternalsUnsupported,
}

const MAX_RULES: usize = 32;
const MAX_CONDS: usize = 14;
const MAX_PAIRS: usize = 96;
const MAX_NODES: usize = 200_000;

/// Rules whose source-set predicate multiset is included in the input's,
/// by direct comparison without any index.
pub fn oracle_candidates(rules: &[CompiledRule], input: &[LabeledCondition]) -> Vec<usize> {
    let count = |conds: &[LabeledCondition]| {
        let mut m: BTreeMap<(String, usize, bool), usize> = BTreeMap::new();
        for c in conds {
            *m.entry((c.predicate.clone(), c.arity(), c.class_flag))
                .or_insert(0) += 1;
        }
        m
    };
    let have = count(input);
    rules
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            count(&r.sl)
                .iter()
                .all(|(k, n)| have.get(k).copied().unwrap_or(0) >= *n)
        })
        .map(|(i, _)| i)
        .collect()
}

type Bindings = BTreeMap<String, String>;

fn bind_positionally(
    pattern: &LabeledCondition,
    ground: &LabeledCondition,
    bindings: &Bindings,
) -> Option<Bindings> {
    if pattern.predicate != ground.predicate
        || pattern.arity() != ground.arity()
        || pattern.class_flag != ground.class_flag
    {
        return None;
    }
    let mut out = bindings.clone();
    for (pt, gt) in pattern.terms().zip(ground.terms()) {
        let ground_name = match gt {
            Term::Const(c) => c,
            Term::Var(_) => return None,
        };
        match pt {
            Term::Const(c) => {
                if c != ground_name {
                    return None;
                }
            }
            Term::Var(v) => match out.get(v) {
                Some(existing) if existing != ground_name => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), ground_name.clone());
                }
            },
        }
    }
    Some(out)
}

/// Every way to match the pattern set onto distinct input conditions.
fn enumerate_matches(
    patterns: &[LabeledCondition],
    input: &[LabeledCondition],
) -> Vec<(Bindings, BTreeSet<usize>)> {
    fn walk(
        patterns: &[LabeledCondition],
        input: &[LabeledCondition],
        k: usize,
        bindings: &Bindings,
        picked: &mut Vec<usize>,
        out: &mut Vec<(Bindings, BTreeSet<usize>)>,
    ) {
        if k == patterns.len() {
            out.push((bindings.clone(), picked.iter().copied().collect()));
            return;
        }
        for idx in 0..input.len() {
            if picked.contains(&idx) {
                continue;
            }
            if let Some(next) = bind_positionally(&patterns[k], &input[idx], bindings) {
                picked.push(idx);
                walk(patterns, input, k + 1, &next, picked, out);
                picked.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(patterns, input, 0, &Bindings::new(), &mut Vec::new(), &mut out);
    out
}

/// Naive conjunction of condition filters with backtracking, against the
/// given condition set and sort table.
fn conditions_hold(
    conds: &[Condition],
    bindings: &Bindings,
    scope_conds: &[LabeledCondition],
    scope_sorts: &BTreeMap<String, String>,
    base: &RuleBase,
) -> Result<Option<Bindings>, OracleError> {
    let Some((head, rest)) = conds.split_first() else {
        return Ok(Some(bindings.clone()));
    };
    match head {
        Condition::Pattern(p) => {
            for ground in scope_conds {
                if let Some(next) = bind_positionally(p, ground, bindings) {
                    if let Some(result) =
                        conditions_hold(rest, &next, scope_conds, scope_sorts, base)?
                    {
                        return Ok(Some(result));
                    }
                }
            }
            Ok(None)
        }
        Condition::SortLeq { term, sort } | Condition::SortNotLeq { term, sort } => {
            let marker = match term {
                Term::Const(c) => Some(c.as_str()),
                Term::Var(v) => bindings.get(v).map(String::as_str),
            };
            let holds = match marker.and_then(|m| scope_sorts.get(m)) {
                None => false,
                Some(marker_sort) => {
                    let subsumed = base
                        .ontology
                        .subsumes(sort, marker_sort)
                        .map_err(|e| OracleError::TooLarge(e.to_string()))?;
                    match head {
                        Condition::SortLeq { .. } => subsumed,
                        _ => !subsumed,
                    }
                }
            };
            if holds {
                conditions_hold(rest, bindings, scope_conds, scope_sorts, base)
            } else {
                Ok(None)
            }
        }
        Condition::External { .. } => Err(OracleError::ExternalsUnsupported),
    }
}

/// One applicable (rule, match) pair on the full input.
#[derive(Debug, Clone)]
struct Pair {
    rule: usize,
    bindings: Bindings,
    consumed: BTreeSet<usize>,
    key: SpecificityKey,
}

fn applicable_pairs(input: &Vit, base: &RuleBase) -> Result<Vec<Pair>, OracleError> {
    let mut pairs = Vec::new();
    for (rule_id, rule) in base.rules.iter().enumerate() {
        for (bindings, consumed) in enumerate_matches(&rule.sl, input.conds()) {
            match conditions_hold(
                &rule.src_conds,
                &bindings,
                input.conds(),
                input.sorts(),
                base,
            )? {
                Some(extended) => pairs.push(Pair {
                    rule: rule_id,
                    bindings: extended,
                    consumed,
                    key: rule.specificity.clone(),
                }),
                None => {}
            }
        }
    }
    if pairs.len() > MAX_PAIRS {
        return Err(OracleError::TooLarge(format!(
            "{} applicable rule instances",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Grounds the target templates of the chosen pairs and copies leftovers,
/// minting fresh constants exactly as the definitions require.
fn build_output(input: &Vit, base: &RuleBase, pairs: &[&Pair]) -> Vit {
    let mut next_label: u64 = 1;
    let mut next_marker: u64 = 1;
    for name in input.constants() {
        if let Some(n) = numeric_suffix(name, 't') {
            next_label = next_label.max(n + 1);
        }
        if let Some(n) = numeric_suffix(name, 'j') {
            next_marker = next_marker.max(n + 1);
        }
    }
    let mut conds: Vec<LabeledCondition> = Vec::new();
    for pair in pairs {
        let rule = &base.rules[pair.rule];
        let label_vars: BTreeSet<&str> = rule
            .tl
            .iter()
            .filter_map(|c| match &c.label {
                Term::Var(v) => Some(v.as_str()),
                Term::Const(_) => None,
            })
            .collect();
        let mut minted: BTreeMap<String, String> = BTreeMap::new();
        let mut ground = |t: &Term| -> Term {
            match t {
                Term::Const(_) => t.clone(),
                Term::Var(v) => {
                    if let Some(c) = pair.bindings.get(v) {
                        return Term::Const(c.clone());
                    }
                    let name = minted.entry(v.clone()).or_insert_with(|| {
                        if label_vars.contains(v.as_str()) {
                            let n = next_label;
                            next_label += 1;
                            format!("t{n}")
                        } else {
                            let n = next_marker;
                            next_marker += 1;
                            format!("j{n}")
                        }
                    });
                    Term::Const(name.clone())
                }
            }
        };
        for template in &rule.tl {
            conds.push(LabeledCondition {
                label: ground(&template.label),
                predicate: template.predicate.clone(),
                args: template.args.iter().map(&mut ground).collect(),
                class_flag: template.class_flag,
            });
        }
    }
    let consumed: BTreeSet<usize> = pairs.iter().flat_map(|p| p.consumed.iter().copied()).collect();
    for (idx, cond) in input.conds().iter().enumerate() {
        if !consumed.contains(&idx) {
            conds.push(cond.clone());
        }
    }
    let conds = crate::term::canonicalize(conds);
    let sorts: BTreeMap<String, String> = input
        .sorts()
        .iter()
        .filter(|(marker, _)| {
            conds
                .iter()
                .any(|c| c.terms().any(|t| t.name() == marker.as_str()))
        })
        .map(|(m, s)| (m.clone(), s.clone()))
        .collect();
    Vit::new(base.target_lang.clone(), conds, sorts).expect("oracle output is ground")
}

fn validate_deferred(
    input: &Vit,
    base: &RuleBase,
    pairs: &[&Pair],
    output: &Vit,
) -> Result<bool, OracleError> {
    for pair in pairs {
        let rule = &base.rules[pair.rule];
        if rule.tgt_conds.is_empty() {
            continue;
        }
        let ok = conditions_hold(
            &rule.tgt_conds,
            &pair.bindings,
            output.conds(),
            output.sorts(),
            base,
        )?
        .is_some();
        if !ok {
            return Ok(false);
        }
    }
    let _ = input;
    Ok(true)
}

/// Compares derivation signatures: element-wise by specificity, with a
/// longer derivation more specific than an equal prefix of it.
fn signature_cmp(a: &[SpecificityKey], b: &[SpecificityKey]) -> Ordering {
    for (ka, kb) in a.iter().zip(b.iter()) {
        match ka.cmp(kb) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}

/// All maximal derivations of `input` under `base`, deduplicated under
/// alpha-equivalence, each with the specificity signature of a derivation
/// producing it; plus the most-specific cover. Guarded by size limits.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub outputs: Vec<(Vit, Vec<SpecificityKey>)>,
    pub cover: Vit,
}

pub fn oracle_transfer(input: &Vit, base: &RuleBase) -> Result<OracleResult, OracleError> {
    if base.rules.len() > MAX_RULES {
        return Err(OracleError::TooLarge(format!("{} rules", base.rules.len())));
    }
    if input.conds().len() > MAX_CONDS {
        return Err(OracleError::TooLarge(format!(
            "{} input conditions",
            input.conds().len()
        )));
    }
    let pairs = applicable_pairs(input, base)?;

    // Enumerate maximal compatible pair sets, Bron-Kerbosch style over the
    // disjointness relation.
    let compatible = |a: &Pair, b: &Pair| a.consumed.is_disjoint(&b.consumed);
    let mut maximal: Vec<Vec<usize>> = Vec::new();
    let mut nodes = 0usize;
    fn extend(
        pairs: &[Pair],
        chosen: &mut Vec<usize>,
        candidates: Vec<usize>,
        excluded: Vec<usize>,
        compatible: &dyn Fn(&Pair, &Pair) -> bool,
        maximal: &mut Vec<Vec<usize>>,
        nodes: &mut usize,
    ) -> Result<(), OracleError> {
        *nodes += 1;
        if *nodes > MAX_NODES {
            return Err(OracleError::TooLarge("search space".to_owned()));
        }
        if candidates.is_empty() {
            if excluded.is_empty() {
                maximal.push(chosen.clone());
            }
            return Ok(());
        }
        let mut candidates = candidates;
        let mut excluded = excluded;
        while let Some(v) = candidates.first().copied() {
            candidates.remove(0);
            let keep = |list: &[usize]| {
                list.iter()
                    .copied()
                    .filter(|&u| compatible(&pairs[v], &pairs[u]))
                    .collect::<Vec<_>>()
            };
            chosen.push(v);
            extend(
                pairs,
                chosen,
                keep(&candidates),
                keep(&excluded),
                compatible,
                maximal,
                nodes,
            )?;
            chosen.pop();
            excluded.push(v);
        }
        Ok(())
    }
    extend(
        &pairs,
        &mut Vec::new(),
        (0..pairs.len()).collect(),
        Vec::new(),
        &compatible,
        &mut maximal,
        &mut nodes,
    )?;

    let mut outputs: Vec<(Vit, Vec<SpecificityKey>)> = Vec::new();
    for set in &maximal {
        let chosen: Vec<&Pair> = set.iter().map(|&i| &pairs[i]).collect();
        let output = build_output(input, base, &chosen);
        if !validate_deferred(input, base, &chosen, &output)? {
            continue;
        }
        let mut signature: Vec<SpecificityKey> =
            chosen.iter().map(|p| p.key.clone()).collect();
        signature.sort();
        match outputs
            .iter_mut()
            .find(|(v, _)| vit_alpha_equal(v, &output))
        {
            Some((_, sig)) => {
                if signature_cmp(&signature, sig) == Ordering::Less {
                    *sig = signature;
                }
            }
            None => outputs.push((output, signature)),
        }
    }

    let cover = greedy_cover(input, base, &pairs)?;
    Ok(OracleResult { outputs, cover })
}

/// The most-specific cover: repeatedly take the first still-fitting pair
/// in (specificity, enumeration) order, copy the leftovers, and retry with
/// the offending pair excluded whenever a deferred condition fails.
fn greedy_cover(input: &Vit, base: &RuleBase, pairs: &[Pair]) -> Result<Vit, OracleError> {
    let mut excluded: BTreeSet<usize> = BTreeSet::new();
    loop {
        let mut used: BTreeSet<usize> = BTreeSet::new();
        let mut chosen: Vec<usize> = Vec::new();
        loop {
            let next = pairs.iter().enumerate().position(|(i, p)| {
                !excluded.contains(&i)
                    && !chosen.contains(&i)
                    && p.consumed.is_disjoint(&used)
            });
            match next {
                Some(i) => {
                    used.extend(pairs[i].consumed.iter().copied());
                    chosen.push(i);
                }
                None => break,
            }
        }
        let selected: Vec<&Pair> = chosen.iter().map(|&i| &pairs[i]).collect();
        let output = build_output(input, base, &selected);
        let mut failed = Vec::new();
        for &i in &chosen {
            let rule = &base.rules[pairs[i].rule];
            if rule.tgt_conds.is_empty() {
                continue;
            }
            let ok = conditions_hold(
                &rule.tgt_conds,
                &pairs[i].bindings,
                output.conds(),
                output.sorts(),
                base,
            )?
            .is_some();
            if !ok {
                failed.push(i);
            }
        }
        if failed.is_empty() {
            return Ok(output);
        }
        excluded.extend(failed);
    }
}

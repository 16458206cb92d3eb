//! One-way first-order matching over labeled conditions, template
//! instantiation, and skolemization of variable-bearing sets.

use crate::term::{numeric_suffix, FreshGen, LabeledCondition, Substitution, Term};
use std::collections::{BTreeMap, BTreeSet};

/// One solution of [`match_set`]: the extended substitution and the indices
/// of the input conditions it consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchSolution {
    pub subst: Substitution,
    pub consumed: Vec<usize>,
}

/// One-way match of a single pattern condition against a ground condition,
/// extending `subst`. Variables occur only in the pattern; existing
/// bindings are respected and a conflict is a failure, not an error.
pub fn match_term(
    pattern: &LabeledCondition,
    ground: &LabeledCondition,
    subst: &Substitution,
) -> Option<Substitution> {
    let mut extended = subst.clone();
    let mut trail = Vec::new();
    if try_match(pattern, ground, &mut extended, &mut trail) {
        Some(extended)
    } else {
        None
    }
}

pub(crate) fn try_match(
    pattern: &LabeledCondition,
    ground: &LabeledCondition,
    subst: &mut Substitution,
    trail: &mut Vec<String>,
) -> bool {
    if pattern.predicate != ground.predicate
        || pattern.arity() != ground.arity()
        || pattern.class_flag != ground.class_flag
    {
        return false;
    }
    let start = trail.len();
    for (pt, gt) in pattern.terms().zip(ground.terms()) {
        let ok = match (pt, gt) {
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Var(v), Term::Const(y)) => match subst.get(v) {
                Some(bound) => bound == y,
                None => {
                    subst.bind(v, y);
                    trail.push(v.clone());
                    true
                }
            },
            // The input side must be ground.
            (_, Term::Var(_)) => false,
        };
        if !ok {
            undo(subst, trail, start);
            return false;
        }
    }
    true
}

pub(crate) fn undo(subst: &mut Substitution, trail: &mut Vec<String>, start: usize) {
    while trail.len() > start {
        let var = trail.pop().expect("trail entry");
        subst.unbind(&var);
    }
}

/// Enumerates every injective assignment of `patterns` to distinct `input`
/// conditions consistent under [`match_term`], in deterministic order
/// given the canonical ordering of `input`.
pub fn match_set(
    patterns: &[LabeledCondition],
    input: &[LabeledCondition],
    subst: &Substitution,
) -> Vec<MatchSolution> {
    let mut solutions = Vec::new();
    let mut working = subst.clone();
    let mut trail = Vec::new();
    let mut used = vec![false; input.len()];
    let mut consumed = Vec::with_capacity(patterns.len());
    search(
        patterns,
        input,
        0,
        &mut used,
        &mut consumed,
        &mut working,
        &mut trail,
        &mut solutions,
    );
    solutions
}

#[allow(clippy::too_many_arguments)]
fn search(
    patterns: &[LabeledCondition],
    input: &[LabeledCondition],
    k: usize,
    used: &mut [bool],
    consumed: &mut Vec<usize>,
    subst: &mut Substitution,
    trail: &mut Vec<String>,
    out: &mut Vec<MatchSolution>,
) {
    if k == patterns.len() {
        out.push(MatchSolution {
            subst: subst.clone(),
            consumed: consumed.clone(),
        });
        return;
    }
    let start = trail.len();
    for idx in 0..input.len() {
        if used[idx] {
            continue;
        }
        if try_match(&patterns[k], &input[idx], subst, trail) {
            used[idx] = true;
            consumed.push(idx);
            search(patterns, input, k + 1, used, consumed, subst, trail, out);
            consumed.pop();
            used[idx] = false;
            undo(subst, trail, start);
        }
    }
}

/// Instantiates template conditions under `subst`. Variables without a
/// binding receive a fresh constant, the same one for every occurrence
/// within the call: label namespace if the variable appears in any label
/// position of the templates, marker namespace otherwise.
pub fn substitute(
    templates: &[LabeledCondition],
    subst: &Substitution,
    fresh: &mut FreshGen,
) -> Vec<LabeledCondition> {
    let label_vars: BTreeSet<&str> = templates
        .iter()
        .filter_map(|c| match &c.label {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
        .collect();
    let mut minted: BTreeMap<String, Term> = BTreeMap::new();
    let mut instantiate = |t: &Term| -> Term {
        match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => match subst.get(v) {
                Some(c) => Term::constant(c),
                None => minted
                    .entry(v.clone())
                    .or_insert_with(|| {
                        if label_vars.contains(v.as_str()) {
                            fresh.fresh_label()
                        } else {
                            fresh.fresh_marker()
                        }
                    })
                    .clone(),
            },
        }
    };
    let mut out: Vec<LabeledCondition> = templates
        .iter()
        .map(|c| LabeledCondition {
            label: instantiate(&c.label),
            predicate: c.predicate.clone(),
            args: c.args.iter().map(&mut instantiate).collect(),
            class_flag: c.class_flag,
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Replaces each distinct variable with a distinct fresh skolem constant:
/// label namespace (`l…`) for variables occurring in any label position,
/// marker namespace (`i…`) otherwise. Constants already present are kept
/// and never collided with.
pub fn skolemize(conds: &[LabeledCondition]) -> Vec<LabeledCondition> {
    let mut next_label: u64 = 1;
    let mut next_marker: u64 = 1;
    for c in conds {
        for t in c.terms() {
            if let Term::Const(name) = t {
                if let Some(n) = numeric_suffix(name, 'l') {
                    next_label = next_label.max(n + 1);
                }
                if let Some(n) = numeric_suffix(name, 'i') {
                    next_marker = next_marker.max(n + 1);
                }
            }
        }
    }
    let label_vars: BTreeSet<&str> = conds
        .iter()
        .filter_map(|c| match &c.label {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
        .collect();
    let mut assigned: BTreeMap<String, Term> = BTreeMap::new();
    let mut ground = |t: &Term| -> Term {
        match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => assigned
                .entry(v.clone())
                .or_insert_with(|| {
                    if label_vars.contains(v.as_str()) {
                        let n = next_label;
                        next_label += 1;
                        Term::Const(format!("l{n}"))
                    } else {
                        let n = next_marker;
                        next_marker += 1;
                        Term::Const(format!("i{n}"))
                    }
                })
                .clone(),
        }
    };
    conds
        .iter()
        .map(|c| LabeledCondition {
            label: ground(&c.label),
            predicate: c.predicate.clone(),
            args: c.args.iter().map(&mut ground).collect(),
            class_flag: c.class_flag,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::canonicalize;

    fn term(s: &str) -> Term {
        let first = s.chars().next().unwrap();
        if first.is_uppercase() || first == '_' {
            Term::var(s)
        } else {
            Term::constant(s)
        }
    }

    fn cond(label: &str, pred: &str, args: &[&str]) -> LabeledCondition {
        LabeledCondition::new(term(label), pred, args.iter().map(|a| term(a)).collect())
    }

    fn bindings(s: &Substitution) -> Vec<(String, String)> {
        s.iter()
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect()
    }

    // Semantic input for "Das passt echt schlecht bei mir."
    fn input_3a() -> Vec<LabeledCondition> {
        canonicalize(vec![
            cond("l1", "echt", &["l2"]),
            cond("l2", "schlecht", &["i1"]),
            cond("l3", "passen", &["i1"]),
            cond("l3", "arg3", &["i1", "i2"]),
            cond("l4", "pron", &["i2"]),
            cond("l5", "bei", &["i1", "i3"]),
            cond("l6", "ich", &["i3"]),
        ])
    }

    #[test]
    fn match_binds_label_and_argument() {
        let s = match_term(
            &cond("L", "echt", &["A"]),
            &cond("l1", "echt", &["l2"]),
            &Substitution::new(),
        )
        .unwrap();
        assert_eq!(
            bindings(&s),
            vec![
                ("A".to_owned(), "l2".to_owned()),
                ("L".to_owned(), "l1".to_owned())
            ]
        );
    }

    #[test]
    fn constant_positions_must_be_equal() {
        let s = match_term(
            &cond("l1", "echt", &["X"]),
            &cond("l1", "echt", &["l2"]),
            &Substitution::new(),
        )
        .unwrap();
        assert_eq!(bindings(&s), vec![("X".to_owned(), "l2".to_owned())]);

        assert!(match_term(
            &cond("l9", "echt", &["X"]),
            &cond("l1", "echt", &["l2"]),
            &Substitution::new(),
        )
        .is_none());
    }

    #[test]
    fn predicate_mismatch_fails() {
        assert!(match_term(
            &cond("L", "suit", &["E"]),
            &cond("l3", "passen", &["i1"]),
            &Substitution::new(),
        )
        .is_none());
    }

    #[test]
    fn existing_bindings_are_respected() {
        let mut s = Substitution::new();
        s.bind("E", "i9");
        assert!(match_term(
            &cond("L", "passen", &["E"]),
            &cond("l3", "passen", &["i1"]),
            &s,
        )
        .is_none());
    }

    #[test]
    fn class_flag_must_agree() {
        let mut flagged = cond("l1", "temp_loc", &["i1", "i2"]);
        flagged.class_flag = true;
        assert!(match_term(&cond("L", "temp_loc", &["E", "X"]), &flagged, &Substitution::new())
            .is_none());
    }

    // Independent enumerator: try every ordered choice of distinct input
    // indices and re-derive the bindings positionally.
    fn brute_force(
        patterns: &[LabeledCondition],
        input: &[LabeledCondition],
    ) -> Vec<(Vec<(String, String)>, Vec<usize>)> {
        fn walk(
            patterns: &[LabeledCondition],
            input: &[LabeledCondition],
            k: usize,
            picked: &mut Vec<usize>,
            out: &mut Vec<(Vec<(String, String)>, Vec<usize>)>,
        ) {
            if k == patterns.len() {
                let mut map: BTreeMap<String, String> = BTreeMap::new();
                for (p, &idx) in patterns.iter().zip(picked.iter()) {
                    let g = &input[idx];
                    if p.predicate != g.predicate
                        || p.arity() != g.arity()
                        || p.class_flag != g.class_flag
                    {
                        return;
                    }
                    for (pt, gt) in p.terms().zip(g.terms()) {
                        match pt {
                            Term::Const(x) => {
                                if x != gt.name() {
                                    return;
                                }
                            }
                            Term::Var(v) => {
                                let prev =
                                    map.entry(v.clone()).or_insert_with(|| gt.name().to_owned());
                                if prev != gt.name() {
                                    return;
                                }
                            }
                        }
                    }
                }
                out.push((map.into_iter().collect(), picked.clone()));
                return;
            }
            for idx in 0..input.len() {
                if picked.contains(&idx) {
                    continue;
                }
                picked.push(idx);
                walk(patterns, input, k + 1, picked, out);
                picked.pop();
            }
        }
        let mut out = Vec::new();
        walk(patterns, input, 0, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn passen_rule_has_exactly_one_solution_on_3a() {
        let patterns = canonicalize(vec![
            cond("L", "passen", &["E"]),
            cond("L", "arg3", &["E", "Y"]),
            cond("L1", "bei", &["E", "X"]),
        ]);
        let input = input_3a();
        let solutions = match_set(&patterns, &input, &Substitution::new());
        let oracle = brute_force(&patterns, &input);
        assert_eq!(solutions.len(), 1);
        assert_eq!(oracle.len(), 1);
        let expect = vec![
            ("E".to_owned(), "i1".to_owned()),
            ("L".to_owned(), "l3".to_owned()),
            ("L1".to_owned(), "l5".to_owned()),
            ("X".to_owned(), "i3".to_owned()),
            ("Y".to_owned(), "i2".to_owned()),
        ];
        assert_eq!(bindings(&solutions[0].subst), expect);
        assert_eq!(oracle[0].0, expect);
        let consumed: Vec<String> = solutions[0]
            .consumed
            .iter()
            .map(|&i| input[i].to_string())
            .collect();
        assert_eq!(
            consumed,
            vec!["l3:arg3(i1,i2)", "l5:bei(i1,i3)", "l3:passen(i1)"]
        );
    }

    #[test]
    fn empty_pattern_set_has_one_empty_solution() {
        let solutions = match_set(&[], &input_3a(), &Substitution::new());
        assert_eq!(solutions.len(), 1);
        assert!(solutions[0].subst.is_empty());
        assert!(solutions[0].consumed.is_empty());
    }

    #[test]
    fn absent_predicate_yields_no_solutions() {
        let patterns = vec![cond("L", "pron", &["X"])];
        let input = canonicalize(vec![cond("l1", "echt", &["l2"])]);
        assert!(match_set(&patterns, &input, &Substitution::new()).is_empty());
    }

    #[test]
    fn match_set_agrees_with_brute_force_on_overlaps() {
        // Two interchangeable `a` conditions: two solutions.
        let patterns = canonicalize(vec![cond("L", "a", &["X"]), cond("L1", "a", &["Y"])]);
        let input = canonicalize(vec![cond("l1", "a", &["i1"]), cond("l2", "a", &["i2"])]);
        let solutions = match_set(&patterns, &input, &Substitution::new());
        let oracle = brute_force(&patterns, &input);
        assert_eq!(solutions.len(), 2);
        assert_eq!(oracle.len(), 2);
    }

    #[test]
    fn substitute_mints_fresh_for_unbound_target_variables() {
        let mut s = Substitution::new();
        s.bind("L", "l2");
        s.bind("E", "i1");
        let mut fresh = FreshGen::new();
        let out = substitute(
            &[cond("L", "neg", &["A"]), cond("A", "good", &["E"])],
            &s,
            &mut fresh,
        );
        assert_eq!(
            out.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            vec!["t1:good(i1)", "l2:neg(t1)"]
        );
    }

    #[test]
    fn substitute_with_full_bindings() {
        let mut s = Substitution::new();
        s.bind("L", "l1");
        s.bind("A", "l2");
        let out = substitute(&[cond("L", "real", &["A"])], &s, &mut FreshGen::new());
        assert_eq!(out[0].to_string(), "l1:real(l2)");
    }

    #[test]
    fn substitute_empty_templates() {
        assert!(substitute(&[], &Substitution::new(), &mut FreshGen::new()).is_empty());
    }

    #[test]
    fn unbound_marker_variables_get_marker_namespace() {
        let out = substitute(
            &[cond("L", "p", &["X"])],
            &Substitution::new(),
            &mut FreshGen::new(),
        );
        assert_eq!(out[0].to_string(), "t1:p(j1)");
    }

    #[test]
    fn skolemize_forces_namespaces() {
        let out = skolemize(&[cond("L", "pron", &["X"])]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to_string(), "l1:pron(i1)");
    }

    #[test]
    fn skolemize_is_identity_on_ground_input() {
        let ground = vec![cond("l1", "echt", &["l2"]), cond("l2", "schlecht", &["i1"])];
        assert_eq!(skolemize(&ground), ground);
    }

    #[test]
    fn skolemize_preserves_coindexation() {
        let out = skolemize(&[cond("L", "p", &["X"]), cond("L", "q", &["X"])]);
        assert_eq!(out[0].label, out[1].label);
        assert_eq!(out[0].args, out[1].args);
        assert!(out.iter().all(|c| c.is_ground()));
        // Compare against every possible renaming of the two-variable
        // original: constants must be shared across both conditions.
        assert_ne!(out[0].label, out[0].args[0]);
    }

    #[test]
    fn skolemize_label_namespace_wins_for_mixed_variables() {
        // A occurs in argument position of `neg` and label position of
        // `good`: it must land in the label namespace.
        let out = skolemize(&[cond("L", "neg", &["A"]), cond("A", "good", &["E"])]);
        let neg = out.iter().find(|c| c.predicate == "neg").unwrap();
        assert!(neg.args[0].name().starts_with('l'));
    }

    #[test]
    fn skolemize_avoids_existing_constants() {
        let out = skolemize(&[cond("l1", "p", &["X"]), cond("L", "q", &["i5"])]);
        let q = out.iter().find(|c| c.predicate == "q").unwrap();
        let p = out.iter().find(|c| c.predicate == "p").unwrap();
        assert_eq!(q.label.name(), "l2");
        assert_eq!(p.args[0].name(), "i6");
    }
}

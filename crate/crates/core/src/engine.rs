//! Rule application over a ground input Vit: candidate selection,
//! condition filters, greedy most-specific-first consumption, metarule
//! fallback, deferred target-condition validation and tracing.

use crate::compile::RuleBase;
use crate::error::EngineError;
use crate::index::predicate_multiset;
use crate::matching::{match_set, match_term, substitute};
use crate::rules::{Condition, Provenance};
use crate::sorts::SortHierarchy;
use crate::term::{FreshGen, LabeledCondition, Substitution, Term};
use crate::vit::{vit_alpha_equal, Vit};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

/// An external condition predicate: ground arguments, the original input,
/// and the ontology in; a verdict out. Hooks must be reentrant.
pub type ExternalFn = Arc<dyn Fn(&[String], &Vit, &SortHierarchy) -> bool + Send + Sync>;

/// Named hooks callable from rule condition lists.
#[derive(Clone, Default)]
pub struct ExternalRegistry {
    hooks: HashMap<(String, usize), ExternalFn>,
}

impl ExternalRegistry {
    pub fn new() -> ExternalRegistry {
        ExternalRegistry::default()
    }

    pub fn register<F>(&mut self, name: &str, arity: usize, hook: F) -> Result<(), EngineError>
    where
        F: Fn(&[String], &Vit, &SortHierarchy) -> bool + Send + Sync + 'static,
    {
        let key = (name.to_owned(), arity);
        if self.hooks.contains_key(&key) {
            return Err(EngineError::DuplicateExternal {
                name: name.to_owned(),
                arity,
            });
        }
        self.hooks.insert(key, Arc::new(hook));
        Ok(())
    }

    fn get(&self, name: &str, arity: usize) -> Option<&ExternalFn> {
        self.hooks.get(&(name.to_owned(), arity))
    }
}

/// One step of a derivation as recorded in the trace.
#[derive(Debug, Clone)]
pub enum TraceEvent {
    RuleApplied {
        provenance: Provenance,
        subst: Substitution,
        consumed: Vec<LabeledCondition>,
        produced: Vec<LabeledCondition>,
    },
    RuleBlocked {
        provenance: Provenance,
        subst: Substitution,
    },
    MetaruleCopy {
        cond: LabeledCondition,
    },
    TgtCondChecked {
        provenance: Provenance,
        cond: String,
        verdict: bool,
    },
}

fn join_conds(conds: &[LabeledCondition]) -> String {
    let mut sorted = conds.to_vec();
    sorted.sort();
    sorted
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Stable line-per-event trace format:
/// `APPLY <file:line> {bindings} -{consumed}- +{produced}+`,
/// `BLOCK <file:line> {bindings}`, `COPY <cond>`,
/// `CHECK <cond> <verdict>`.
pub fn serialize_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for event in events {
        match event {
            TraceEvent::RuleApplied {
                provenance,
                subst,
                consumed,
                produced,
            } => {
                let _ = writeln!(
                    out,
                    "APPLY {provenance} {subst} -{{{}}}- +{{{}}}+",
                    join_conds(consumed),
                    join_conds(produced)
                );
            }
            TraceEvent::RuleBlocked { provenance, subst } => {
                let _ = writeln!(out, "BLOCK {provenance} {subst}");
            }
            TraceEvent::MetaruleCopy { cond } => {
                let _ = writeln!(out, "COPY {cond}");
            }
            TraceEvent::TgtCondChecked {
                cond, verdict, ..
            } => {
                let _ = writeln!(out, "CHECK {cond} {verdict}");
            }
        }
    }
    out
}

/// Which side of a rule a condition list belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Context for evaluating a single condition.
pub struct CondContext<'a> {
    /// The original, never-modified input.
    pub input: &'a Vit,
    /// The finished output, for target-side conditions.
    pub output: Option<&'a Vit>,
    pub ontology: &'a SortHierarchy,
    pub externals: &'a ExternalRegistry,
}

struct Scope<'a> {
    conds: &'a [LabeledCondition],
    sorts: &'a BTreeMap<String, String>,
}

/// Evaluates one condition filter under a substitution. Pattern
/// conditions look for a non-consuming match in the original input
/// (source side) or the finished output (target side); sort tests consult
/// the corresponding sort table; external calls go through the registry.
pub fn evaluate_condition(
    cond: &Condition,
    subst: &Substitution,
    ctx: &CondContext,
    side: Side,
    provenance: &Provenance,
) -> Result<bool, EngineError> {
    let empty = BTreeMap::new();
    let scope = match side {
        Side::Source => Scope {
            conds: ctx.input.conds(),
            sorts: ctx.input.sorts(),
        },
        Side::Target => match ctx.output {
            Some(out) => Scope {
                conds: out.conds(),
                sorts: out.sorts(),
            },
            None => Scope {
                conds: &[],
                sorts: &empty,
            },
        },
    };
    Ok(eval_conditions(
        std::slice::from_ref(cond),
        subst,
        &scope,
        ctx.input,
        ctx.ontology,
        ctx.externals,
        provenance,
    )?
    .is_some())
}

/// Conjunction of condition filters, threading bindings left to right with
/// backtracking over pattern matches. Returns the extended substitution of
/// the first satisfying assignment.
#[allow(clippy::too_many_arguments)]
fn eval_conditions(
    conds: &[Condition],
    subst: &Substitution,
    scope: &Scope,
    input: &Vit,
    ontology: &SortHierarchy,
    externals: &ExternalRegistry,
    provenance: &Provenance,
) -> Result<Option<Substitution>, EngineError> {
    let Some((head, rest)) = conds.split_first() else {
        return Ok(Some(subst.clone()));
    };
    match head {
        Condition::Pattern(pattern) => {
            for ground in scope.conds {
                if let Some(extended) = match_term(pattern, ground, subst) {
                    if let Some(result) = eval_conditions(
                        rest, &extended, scope, input, ontology, externals, provenance,
                    )? {
                        return Ok(Some(result));
                    }
                }
            }
            Ok(None)
        }
        Condition::SortLeq { term, sort } | Condition::SortNotLeq { term, sort } => {
            if !ontology.contains(sort) {
                return Err(EngineError::UnknownSort {
                    sort: sort.clone(),
                    provenance: provenance.clone(),
                });
            }
            let marker = match term {
                Term::Const(name) => Some(name.as_str()),
                Term::Var(v) => subst.get(v),
            };
            // Without a marker binding or a sort entry, both test flavors
            // fail: the default rule must take over either way.
            let holds = match marker.and_then(|m| scope.sorts.get(m)) {
                None => false,
                Some(marker_sort) => {
                    let subsumed = ontology.subsumes(sort, marker_sort).map_err(|_| {
                        EngineError::UnknownSort {
                            sort: marker_sort.clone(),
                            provenance: provenance.clone(),
                        }
                    })?;
                    match head {
                        Condition::SortLeq { .. } => subsumed,
                        _ => !subsumed,
                    }
                }
            };
            if holds {
                eval_conditions(rest, subst, scope, input, ontology, externals, provenance)
            } else {
                Ok(None)
            }
        }
        Condition::External { name, args } => {
            let hook = externals.get(name, args.len()).ok_or_else(|| {
                EngineError::UnregisteredExternal {
                    name: name.clone(),
                    arity: args.len(),
                    provenance: provenance.clone(),
                }
            })?;
            let mut ground_args = Vec::with_capacity(args.len());
            for arg in args {
                match arg {
                    Term::Const(c) => ground_args.push(c.clone()),
                    Term::Var(v) => match subst.get(v) {
                        Some(c) => ground_args.push(c.to_owned()),
                        // Hooks take ground arguments only.
                        None => return Ok(None),
                    },
                }
            }
            if hook(&ground_args, input, ontology) {
                eval_conditions(rest, subst, scope, input, ontology, externals, provenance)
            } else {
                Ok(None)
            }
        }
    }
}

fn instantiate_condition(cond: &Condition, subst: &Substitution) -> String {
    match cond {
        Condition::Pattern(p) => subst.apply_cond(p).to_string(),
        Condition::SortLeq { term, sort } => format!("sort({})=<{sort}", subst.apply(term)),
        Condition::SortNotLeq { term, sort } => {
            format!("sort({})=<~{sort}", subst.apply(term))
        }
        Condition::External { name, args } => {
            let shown = Condition::External {
                name: name.clone(),
                args: args.iter().map(|t| subst.apply(t)).collect(),
            };
            shown.to_string()
        }
    }
}

/// One applicable rule instance: the rule's position in the base, the
/// match bindings, the bindings extended by source-condition evaluation,
/// and the indices of the matched conditions in the working set.
#[derive(Debug, Clone)]
pub struct Application {
    pub rule: usize,
    pub match_subst: Substitution,
    pub subst: Substitution,
    pub consumed: Vec<usize>,
}

/// Engine knobs. `use_index` switches candidate retrieval between the
/// signature trie and a naive linear scan (for benchmarking the index).
#[derive(Debug, Clone)]
pub struct TransferOptions {
    pub use_index: bool,
}

impl Default for TransferOptions {
    fn default() -> TransferOptions {
        TransferOptions { use_index: true }
    }
}

/// A completed transfer: the output Vit and the derivation trace.
#[derive(Debug, Clone)]
pub struct TransferResult {
    pub output: Vit,
    pub trace: Vec<TraceEvent>,
}

type Exclusions = BTreeSet<(usize, Substitution)>;

struct Derivation<'a> {
    base: &'a RuleBase,
    externals: &'a ExternalRegistry,
    input: &'a Vit,
    options: &'a TransferOptions,
    remaining: Vec<LabeledCondition>,
    output: Vec<LabeledCondition>,
    pending: Vec<(usize, Substitution, Substitution)>,
    trace: Vec<TraceEvent>,
    fresh: FreshGen,
    blocked_logged: BTreeSet<(usize, Substitution)>,
}

enum Outcome {
    Done(TransferResult),
    /// Applications whose deferred target conditions failed, with the
    /// instantiated failing conditions for reporting and the check events
    /// of the abandoned derivation for diagnosis.
    DeferredFailure {
        failures: Vec<((usize, Substitution), String)>,
        checks: Vec<TraceEvent>,
    },
}

impl<'a> Derivation<'a> {
    fn new(
        input: &'a Vit,
        base: &'a RuleBase,
        externals: &'a ExternalRegistry,
        options: &'a TransferOptions,
    ) -> Derivation<'a> {
        Derivation {
            base,
            externals,
            input,
            options,
            remaining: input.conds().to_vec(),
            output: Vec::new(),
            pending: Vec::new(),
            trace: Vec::new(),
            fresh: FreshGen::avoiding(input.constants()),
            blocked_logged: BTreeSet::new(),
        }
    }

    /// All applicable (rule, match) pairs of the currently most specific
    /// applicable key prefix, in deterministic order. Greedy control takes
    /// the first; ties between equally specific pairs are the only choice
    /// points `transfer_all` branches over.
    fn tie_group(&mut self, exclusions: &Exclusions) -> Result<Vec<Application>, EngineError> {
        let multiset = predicate_multiset(&self.remaining);
        let candidates = if self.options.use_index {
            self.base.index.candidates(&multiset)
        } else {
            self.base.index.candidates_naive(&multiset)
        };
        let mut group: Vec<Application> = Vec::new();
        let mut prefix: Option<(usize, usize, usize)> = None;
        for rule_id in candidates {
            let rule = &self.base.rules[rule_id];
            if let Some(p) = prefix {
                if rule.specificity.prefix() != p {
                    break;
                }
            }
            for solution in match_set(&rule.sl, &self.remaining, &Substitution::new()) {
                if exclusions.contains(&(rule_id, solution.subst.clone())) {
                    continue;
                }
                let scope = Scope {
                    conds: self.input.conds(),
                    sorts: self.input.sorts(),
                };
                let extended = eval_conditions(
                    &rule.src_conds,
                    &solution.subst,
                    &scope,
                    self.input,
                    &self.base.ontology,
                    self.externals,
                    &rule.provenance,
                )?;
                match extended {
                    Some(subst) => {
                        prefix.get_or_insert(rule.specificity.prefix());
                        group.push(Application {
                            rule: rule_id,
                            match_subst: solution.subst,
                            subst,
                            consumed: solution.consumed,
                        });
                    }
                    None => {
                        let key = (rule_id, solution.subst);
                        if self.blocked_logged.insert(key.clone()) {
                            self.trace.push(TraceEvent::RuleBlocked {
                                provenance: rule.provenance.clone(),
                                subst: key.1,
                            });
                        }
                    }
                }
            }
        }
        Ok(group)
    }

    fn apply(&mut self, app: &Application) {
        let rule = &self.base.rules[app.rule];
        let mut consumed = Vec::with_capacity(app.consumed.len());
        let mut indices = app.consumed.clone();
        indices.sort_unstable();
        for idx in indices.into_iter().rev() {
            consumed.push(self.remaining.remove(idx));
        }
        consumed.reverse();
        let produced = substitute(&rule.tl, &app.subst, &mut self.fresh);
        self.output.extend(produced.iter().cloned());
        if !rule.tgt_conds.is_empty() {
            self.pending
                .push((app.rule, app.match_subst.clone(), app.subst.clone()));
        }
        self.trace.push(TraceEvent::RuleApplied {
            provenance: rule.provenance.clone(),
            subst: app.subst.clone(),
            consumed,
            produced,
        });
    }

    /// Runs the derivation to completion. `decisions` picks alternatives
    /// at tie points (missing entries mean 0, the greedy choice);
    /// `tie_sizes` records the size of every tie group encountered.
    fn run(
        mut self,
        exclusions: &Exclusions,
        decisions: &[usize],
        tie_sizes: &mut Vec<usize>,
    ) -> Result<Outcome, EngineError> {
        loop {
            let group = self.tie_group(exclusions)?;
            if group.is_empty() {
                break;
            }
            let choice = if group.len() > 1 {
                let d = decisions.get(tie_sizes.len()).copied().unwrap_or(0);
                tie_sizes.push(group.len());
                d
            } else {
                0
            };
            self.apply(&group[choice]);
        }
        // Metarule of last resort: pass every leftover entity through.
        for cond in std::mem::take(&mut self.remaining) {
            self.trace.push(TraceEvent::MetaruleCopy { cond: cond.clone() });
            self.output.push(cond);
        }

        let output_conds = crate::term::canonicalize(std::mem::take(&mut self.output));
        let sorts: BTreeMap<String, String> = self
            .input
            .sorts()
            .iter()
            .filter(|(marker, _)| {
                output_conds
                    .iter()
                    .any(|c| c.terms().any(|t| t.name() == marker.as_str()))
            })
            .map(|(m, s)| (m.clone(), s.clone()))
            .collect();

        let mut failures: Vec<((usize, Substitution), String)> = Vec::new();
        let scope = Scope {
            conds: &output_conds,
            sorts: &sorts,
        };
        for (rule_id, match_subst, subst) in &self.pending {
            let rule = &self.base.rules[*rule_id];
            for cond in &rule.tgt_conds {
                let verdict = eval_conditions(
                    std::slice::from_ref(cond),
                    subst,
                    &scope,
                    self.input,
                    &self.base.ontology,
                    self.externals,
                    &rule.provenance,
                )?
                .is_some();
                self.trace.push(TraceEvent::TgtCondChecked {
                    provenance: rule.provenance.clone(),
                    cond: instantiate_condition(cond, subst),
                    verdict,
                });
            }
            let ok = eval_conditions(
                &rule.tgt_conds,
                subst,
                &scope,
                self.input,
                &self.base.ontology,
                self.externals,
                &rule.provenance,
            )?
            .is_some();
            if !ok {
                let shown = rule
                    .tgt_conds
                    .iter()
                    .map(|c| format!("{} ({})", instantiate_condition(c, subst), rule.provenance))
                    .collect::<Vec<_>>()
                    .join(", ");
                failures.push(((*rule_id, match_subst.clone()), shown));
            }
        }
        if !failures.is_empty() {
            let checks = self
                .trace
                .iter()
                .filter(|e| matches!(e, TraceEvent::TgtCondChecked { .. }))
                .cloned()
                .collect();
            return Ok(Outcome::DeferredFailure { failures, checks });
        }

        let output = Vit::new(self.base.target_lang.clone(), output_conds, sorts)
            .expect("engine output is ground and its sorts are carried over");
        Ok(Outcome::Done(TransferResult {
            output,
            trace: self.trace,
        }))
    }
}

/// The first applicable (rule, match) pair on `remaining`, scanning rules
/// in specificity order, or `None` when only the metarule is left.
pub fn next_application(
    input: &Vit,
    remaining: &[LabeledCondition],
    base: &RuleBase,
    externals: &ExternalRegistry,
) -> Result<Option<Application>, EngineError> {
    let options = TransferOptions::default();
    let mut derivation = Derivation::new(input, base, externals, &options);
    derivation.remaining = remaining.to_vec();
    let group = derivation.tie_group(&Exclusions::new())?;
    Ok(group.into_iter().next())
}

/// Translates `input` with the compiled base: greedy most-specific-first
/// rule application, metarule copying of leftovers, then deferred
/// validation of target conditions against the finished output. A failed
/// target condition excludes that (rule, match) pair and re-derives.
pub fn transfer(
    input: &Vit,
    base: &RuleBase,
    externals: &ExternalRegistry,
) -> Result<TransferResult, EngineError> {
    transfer_with_options(input, base, externals, &TransferOptions::default())
}

pub fn transfer_with_options(
    input: &Vit,
    base: &RuleBase,
    externals: &ExternalRegistry,
    options: &TransferOptions,
) -> Result<TransferResult, EngineError> {
    let mut exclusions = Exclusions::new();
    let mut carried_checks: Vec<TraceEvent> = Vec::new();
    loop {
        let derivation = Derivation::new(input, base, externals, options);
        match derivation.run(&exclusions, &[], &mut Vec::new())? {
            Outcome::Done(mut result) => {
                // Checks from abandoned derivations stay visible; replay
                // only reads apply and copy events.
                result.trace.extend(carried_checks);
                return Ok(result);
            }
            Outcome::DeferredFailure { failures, checks } => {
                carried_checks.extend(checks);
                let before = exclusions.len();
                let shown: Vec<String> = failures.iter().map(|(_, s)| s.clone()).collect();
                for (key, _) in failures {
                    exclusions.insert(key);
                }
                if exclusions.len() == before {
                    return Err(EngineError::Exhausted { failing: shown });
                }
            }
        }
    }
}

/// Enumerates up to `limit` pairwise non-alpha-equivalent outputs by
/// backtracking over tie points only. The first result equals
/// [`transfer`]'s result; branches whose deferred target conditions fail
/// are dropped.
pub fn transfer_all(
    input: &Vit,
    base: &RuleBase,
    externals: &ExternalRegistry,
    limit: usize,
) -> Result<Vec<TransferResult>, EngineError> {
    if limit == 0 {
        return Ok(Vec::new());
    }
    let first = transfer(input, base, externals)?;
    let mut results = vec![first];
    let options = TransferOptions::default();
    let exclusions = Exclusions::new();

    fn explore(
        prefix: Vec<usize>,
        input: &Vit,
        base: &RuleBase,
        externals: &ExternalRegistry,
        options: &TransferOptions,
        exclusions: &Exclusions,
        results: &mut Vec<TransferResult>,
        limit: usize,
    ) -> Result<(), EngineError> {
        if results.len() >= limit {
            return Ok(());
        }
        let derivation = Derivation::new(input, base, externals, options);
        let mut tie_sizes = Vec::new();
        let outcome = derivation.run(exclusions, &prefix, &mut tie_sizes)?;
        if let Outcome::Done(result) = outcome {
            let duplicate = results
                .iter()
                .any(|r| vit_alpha_equal(&r.output, &result.output));
            if !duplicate && results.len() < limit {
                results.push(result);
            }
        }
        // Siblings: bump one tie decision past the prefix, leaving later
        // decisions at their greedy default.
        for depth in prefix.len()..tie_sizes.len() {
            for alternative in 1..tie_sizes[depth] {
                if results.len() >= limit {
                    return Ok(());
                }
                let mut next = prefix.clone();
                next.extend(std::iter::repeat(0).take(depth - prefix.len()));
                next.push(alternative);
                explore(
                    next, input, base, externals, options, exclusions, results, limit,
                )?;
            }
        }
        Ok(())
    }

    // The greedy path's output is already in `results`; explore only its
    // tie-point siblings.
    let derivation = Derivation::new(input, base, externals, &options);
    let mut tie_sizes = Vec::new();
    let _ = derivation.run(&exclusions, &[], &mut tie_sizes)?;
    for depth in 0..tie_sizes.len() {
        for alternative in 1..tie_sizes[depth] {
            if results.len() >= limit {
                return Ok(results);
            }
            let mut prefix = vec![0; depth];
            prefix.push(alternative);
            explore(
                prefix,
                input,
                base,
                externals,
                &options,
                &exclusions,
                &mut results,
                limit,
            )?;
        }
    }
    Ok(results)
}

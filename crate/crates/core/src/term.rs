//! Terms, labeled conditions and substitutions: the atoms of every
//! semantic set handled by the engine.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// A first-order term: a rule variable or a constant.
///
/// Variable names begin with an uppercase letter or an underscore;
/// constants (skolem constants and plain atoms) begin with a lowercase
/// letter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Const(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Namespace groups for skolem constants. Input labels (`l1…`) and fresh
/// target labels (`t1…`) form one group; input markers (`i1…`) and fresh
/// markers (`j1…`) the other. Any other constant is a plain atom and only
/// ever equal to itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkolemClass {
    Label,
    Marker,
}

/// Classifies a constant name, returning `None` for plain atoms.
pub fn skolem_class(name: &str) -> Option<SkolemClass> {
    let mut chars = name.chars();
    let head = chars.next()?;
    let rest = chars.as_str();
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match head {
        'l' | 't' => Some(SkolemClass::Label),
        'i' | 'j' => Some(SkolemClass::Marker),
        _ => None,
    }
}

/// A labeled condition: `label:predicate(arg, …)`.
///
/// `class_flag` marks a predicate position holding a class name rather
/// than a lexical predicate; flagged conditions print as `label:#name(…)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledCondition {
    pub label: Term,
    pub predicate: String,
    pub args: Vec<Term>,
    pub class_flag: bool,
}

impl LabeledCondition {
    pub fn new(label: Term, predicate: impl Into<String>, args: Vec<Term>) -> Self {
        LabeledCondition {
            label,
            predicate: predicate.into(),
            args,
            class_flag: false,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.label.is_ground() && self.args.iter().all(Term::is_ground)
    }

    /// Label and argument terms, label first.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.label).chain(self.args.iter())
    }

    /// Variable names occurring in the condition.
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms().filter_map(|t| match t {
            Term::Var(n) => Some(n.as_str()),
            Term::Const(_) => None,
        })
    }

    /// Count of constant (non-variable) label and argument positions.
    pub fn instantiation(&self) -> usize {
        self.terms().filter(|t| t.is_ground()).count()
    }
}

// Canonical order of condition sets: predicate, arity, class flag, label,
// then arguments.
impl Ord for LabeledCondition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.predicate
            .cmp(&other.predicate)
            .then_with(|| self.arity().cmp(&other.arity()))
            .then_with(|| self.class_flag.cmp(&other.class_flag))
            .then_with(|| self.label.cmp(&other.label))
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl PartialOrd for LabeledCondition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LabeledCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.label)?;
        if self.class_flag {
            f.write_str("#")?;
        }
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, arg) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{arg}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Sorts a condition set into canonical order and drops exact duplicates.
pub fn canonicalize(mut conds: Vec<LabeledCondition>) -> Vec<LabeledCondition> {
    conds.sort();
    conds.dedup();
    conds
}

/// A finite map from rule variables to skolem constants, built by one-way
/// matching. The range never contains variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    bindings: BTreeMap<String, String>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.bindings.get(var).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Binds `var` to a constant. Returns false (and leaves the map
    /// unchanged) when the variable is already bound to something else.
    pub fn bind(&mut self, var: &str, constant: &str) -> bool {
        match self.bindings.get(var) {
            Some(existing) => existing == constant,
            None => {
                self.bindings.insert(var.to_owned(), constant.to_owned());
                true
            }
        }
    }

    pub fn unbind(&mut self, var: &str) {
        self.bindings.remove(var);
    }

    /// Instantiates a term: bound variables become constants, unbound
    /// variables and constants are returned unchanged.
    pub fn apply(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => match self.bindings.get(v) {
                Some(c) => Term::Const(c.clone()),
                None => term.clone(),
            },
            Term::Const(_) => term.clone(),
        }
    }

    pub fn apply_cond(&self, cond: &LabeledCondition) -> LabeledCondition {
        LabeledCondition {
            label: self.apply(&cond.label),
            predicate: cond.predicate.clone(),
            args: cond.args.iter().map(|t| self.apply(t)).collect(),
            class_flag: cond.class_flag,
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (var, constant)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{var}={constant}")?;
        }
        f.write_str("}")
    }
}

/// Generator for fresh skolem constants in the reserved `t` (label) and
/// `j` (marker) namespaces. One generator is owned by a single transfer
/// run; seed it past the input's constants so that feeding an output back
/// in cannot collide.
#[derive(Debug, Clone)]
pub struct FreshGen {
    next_label: u64,
    next_marker: u64,
}

impl Default for FreshGen {
    fn default() -> Self {
        FreshGen::new()
    }
}

impl FreshGen {
    pub fn new() -> Self {
        FreshGen {
            next_label: 1,
            next_marker: 1,
        }
    }

    /// Starts both counters above any `t…`/`j…` constant in `names`.
    pub fn avoiding<'a>(names: impl Iterator<Item = &'a str>) -> Self {
        let mut gen = FreshGen::new();
        for name in names {
            if let Some(n) = numeric_suffix(name, 't') {
                gen.next_label = gen.next_label.max(n + 1);
            }
            if let Some(n) = numeric_suffix(name, 'j') {
                gen.next_marker = gen.next_marker.max(n + 1);
            }
        }
        gen
    }

    pub fn fresh_label(&mut self) -> Term {
        let n = self.next_label;
        self.next_label += 1;
        Term::Const(format!("t{n}"))
    }

    pub fn fresh_marker(&mut self) -> Term {
        let n = self.next_marker;
        self.next_marker += 1;
        Term::Const(format!("j{n}"))
    }
}

pub(crate) fn numeric_suffix(name: &str, prefix: char) -> Option<u64> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

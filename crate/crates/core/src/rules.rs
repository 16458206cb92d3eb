//! Transfer rules, condition filters and class definitions as parsed from
//! rule files, plus their canonical text form.

use crate::term::{LabeledCondition, Term};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Application direction operator of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Bidirectional,
    ForwardOnly,
    BackwardOnly,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Bidirectional => "<->",
            Orientation::ForwardOnly => "->",
            Orientation::BackwardOnly => "<-",
        })
    }
}

/// Where a rule or class definition came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub file: String,
    pub line: usize,
    /// Position in file order, global across concatenated files.
    pub ordinal: usize,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// A non-consuming applicability filter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Must match some condition of the context without consuming it.
    Pattern(LabeledCondition),
    /// `sort(term)=<sort`: the marker's sort is subsumed by `sort`.
    SortLeq { term: Term, sort: String },
    /// `sort(term)=<~sort`: the marker has a sort and it is not subsumed.
    SortNotLeq { term: Term, sort: String },
    /// Call into the external predicate registry.
    External { name: String, args: Vec<Term> },
}

impl Condition {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Condition::Pattern(c) => c.vars().collect(),
            Condition::SortLeq { term, .. } | Condition::SortNotLeq { term, .. } => match term {
                Term::Var(v) => vec![v.as_str()],
                Term::Const(_) => vec![],
            },
            Condition::External { args, .. } => args
                .iter()
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.as_str()),
                    Term::Const(_) => None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Pattern(c) => write!(f, "{c}"),
            Condition::SortLeq { term, sort } => write!(f, "sort({term})=<{sort}"),
            Condition::SortNotLeq { term, sort } => write!(f, "sort({term})=<~{sort}"),
            Condition::External { name, args } => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A declarative transfer rule as written: source set, source conditions,
/// orientation, target set, target conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferRule {
    pub sl: Vec<LabeledCondition>,
    pub sl_conds: Vec<Condition>,
    pub op: Orientation,
    pub tl: Vec<LabeledCondition>,
    pub tl_conds: Vec<Condition>,
    pub provenance: Provenance,
}

/// `type(lang, name, [members…]).` — a named predicate class for one
/// language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    pub lang: String,
    pub name: String,
    pub members: Vec<String>,
    pub provenance: Provenance,
}

impl fmt::Display for ClassDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type({},{},[{}]).", self.lang, self.name, self.members.join(","))
    }
}

fn write_condset(f: &mut fmt::Formatter<'_>, conds: &[LabeledCondition]) -> fmt::Result {
    f.write_str("[")?;
    for (i, c) in conds.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("]")
}

fn write_condlist(f: &mut fmt::Formatter<'_>, conds: &[Condition]) -> fmt::Result {
    f.write_str(",[")?;
    for (i, c) in conds.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("]")
}

impl fmt::Display for TransferRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_condset(f, &self.sl)?;
        if !self.sl_conds.is_empty() {
            write_condlist(f, &self.sl_conds)?;
        }
        write!(f, " {} ", self.op)?;
        write_condset(f, &self.tl)?;
        if !self.tl_conds.is_empty() {
            write_condlist(f, &self.tl_conds)?;
        }
        f.write_str(".")
    }
}

/// Canonical text of a rule file: class definitions first, then rules, one
/// statement per line.
pub fn serialize_rule_file(rules: &[TransferRule], classes: &[ClassDef]) -> String {
    let mut out = String::new();
    for c in classes {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    for r in rules {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

/// Renames the rule's variables to `V1, V2, …` in order of first
/// occurrence. Two rules are duplicates of one another exactly when their
/// renamed forms are equal up to provenance.
pub fn canonicalize_variables(rule: &TransferRule) -> TransferRule {
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut rename = |t: &Term| -> Term {
        match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => {
                let next = format!("V{}", names.len() + 1);
                Term::Var(names.entry(v.clone()).or_insert(next).clone())
            }
        }
    };
    let rename_cond = |c: &LabeledCondition, rename: &mut dyn FnMut(&Term) -> Term| {
        LabeledCondition {
            label: rename(&c.label),
            predicate: c.predicate.clone(),
            args: c.args.iter().map(&mut *rename).collect(),
            class_flag: c.class_flag,
        }
    };
    let rename_filter = |c: &Condition, rename: &mut dyn FnMut(&Term) -> Term| match c {
        Condition::Pattern(p) => Condition::Pattern(rename_cond(p, rename)),
        Condition::SortLeq { term, sort } => Condition::SortLeq {
            term: rename(term),
            sort: sort.clone(),
        },
        Condition::SortNotLeq { term, sort } => Condition::SortNotLeq {
            term: rename(term),
            sort: sort.clone(),
        },
        Condition::External { name, args } => Condition::External {
            name: name.clone(),
            args: args.iter().map(&mut *rename).collect(),
        },
    };
    TransferRule {
        sl: rule.sl.iter().map(|c| rename_cond(c, &mut rename)).collect(),
        sl_conds: rule
            .sl_conds
            .iter()
            .map(|c| rename_filter(c, &mut rename))
            .collect(),
        op: rule.op,
        tl: rule.tl.iter().map(|c| rename_cond(c, &mut rename)).collect(),
        tl_conds: rule
            .tl_conds
            .iter()
            .map(|c| rename_filter(c, &mut rename))
            .collect(),
        provenance: rule.provenance.clone(),
    }
}

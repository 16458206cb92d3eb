//! Static validation of rule files: compile errors for both directions,
//! duplicate and permanently shadowed rules, and unknown sort symbols.

use semtrans::rules::canonicalize_variables;
use semtrans::{
    compile, ClassDef, CompiledRule, Condition, Flow, Orientation, Provenance, RuleBase,
    SortHierarchy, TransferRule,
};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.severity, self.message)
    }
}

/// The language pair to check under. Class definitions name their
/// languages; without any classes the pair is immaterial.
fn language_pair(classes: &[ClassDef]) -> Result<(String, String), String> {
    let langs: BTreeSet<&str> = classes.iter().map(|c| c.lang.as_str()).collect();
    let langs: Vec<&str> = langs.into_iter().collect();
    match langs.as_slice() {
        [] => Ok(("src".to_owned(), "tgt".to_owned())),
        [only] => Ok(((*only).to_owned(), (*only).to_owned())),
        [a, b] => Ok(((*a).to_owned(), (*b).to_owned())),
        more => Err(format!(
            "class definitions span more than two languages: {}",
            more.join(", ")
        )),
    }
}

fn rule_key(rule: &CompiledRule, sl_only: bool) -> String {
    let as_rule = TransferRule {
        sl: rule.sl.clone(),
        sl_conds: if sl_only { vec![] } else { rule.src_conds.clone() },
        op: Orientation::Bidirectional,
        tl: if sl_only { vec![] } else { rule.tl.clone() },
        tl_conds: if sl_only { vec![] } else { rule.tgt_conds.clone() },
        provenance: Provenance {
            file: String::new(),
            line: 0,
            ordinal: 0,
        },
    };
    canonicalize_variables(&as_rule).to_string()
}

fn check_base(base: &RuleBase, direction: &str, findings: &mut BTreeSet<Finding>) {
    // Duplicates: identical rules up to variable renaming.
    for (i, a) in base.rules.iter().enumerate() {
        for b in base.rules.iter().skip(i + 1) {
            if rule_key(a, false) == rule_key(b, false) {
                findings.insert(Finding {
                    severity: Severity::Warning,
                    message: format!(
                        "{}: duplicate of rule at {} ({direction})",
                        b.provenance, a.provenance
                    ),
                });
            } else if rule_key(a, true) == rule_key(b, true)
                && a.src_conds.is_empty()
                && a.tgt_conds.is_empty()
            {
                // Rules are already in specificity order: an earlier,
                // unconditioned rule with an identical source set fires on
                // every match the later rule could make.
                findings.insert(Finding {
                    severity: Severity::Warning,
                    message: format!(
                        "{}: permanently shadowed by more specific rule at {} ({direction})",
                        b.provenance, a.provenance
                    ),
                });
            }
        }
    }
}

fn sort_symbols(rules: &[TransferRule]) -> BTreeSet<String> {
    let mut sorts = BTreeSet::new();
    for rule in rules {
        for cond in rule.sl_conds.iter().chain(rule.tl_conds.iter()) {
            match cond {
                Condition::SortLeq { sort, .. } | Condition::SortNotLeq { sort, .. } => {
                    sorts.insert(sort.clone());
                }
                _ => {}
            }
        }
    }
    sorts
}

/// Runs every static check over a parsed rule-file set.
pub fn check_rules(
    rules: &[TransferRule],
    classes: &[ClassDef],
    hierarchy: Option<&SortHierarchy>,
) -> Vec<Finding> {
    let mut findings: BTreeSet<Finding> = BTreeSet::new();

    let pair = match language_pair(classes) {
        Ok(pair) => Some(pair),
        Err(msg) => {
            findings.insert(Finding {
                severity: Severity::Error,
                message: msg,
            });
            None
        }
    };
    if let Some((lang_a, lang_b)) = pair {
        for (flow, direction, src, tgt) in [
            (Flow::Forward, "forward", &lang_a, &lang_b),
            (Flow::Backward, "backward", &lang_b, &lang_a),
        ] {
            match compile(rules, classes, flow, src, tgt, SortHierarchy::top_only()) {
                Ok(base) => check_base(&base, direction, &mut findings),
                Err(errors) => {
                    for e in errors.0 {
                        findings.insert(Finding {
                            severity: Severity::Error,
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
    }

    let sorts = sort_symbols(rules);
    match hierarchy {
        Some(h) => {
            for sort in sorts {
                if !h.contains(&sort) {
                    findings.insert(Finding {
                        severity: Severity::Error,
                        message: format!("unknown sort `{sort}`"),
                    });
                }
            }
        }
        None if !sorts.is_empty() => {
            findings.insert(Finding {
                severity: Severity::Warning,
                message: format!(
                    "no sorts file given; {} sort condition symbol(s) unchecked",
                    sorts.len()
                ),
            });
        }
        None => {}
    }

    let mut out: Vec<Finding> = findings.into_iter().collect();
    out.sort();
    out
}

//! Parsers for the three textual artifacts: rule files, Vit files, and
//! sort-hierarchy files. Whitespace is insignificant in rule and sorts
//! files; `%` starts a comment running to the end of the line.

use crate::error::ParseError;
use crate::rules::{ClassDef, Condition, Orientation, Provenance, TransferRule};
use crate::sorts::{SortHierarchy, TOP_SORT};
use crate::term::{canonicalize, LabeledCondition, Term};
use crate::vit::Vit;
use std::collections::{BTreeMap, BTreeSet, HashMap};

struct Scanner<'a> {
    file: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &str, file: &'a str) -> Scanner<'a> {
        Scanner {
            file,
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    /// Scanner positioned at an arbitrary line of a larger file.
    fn at_line(text: &str, file: &'a str, line: usize) -> Scanner<'a> {
        let mut s = Scanner::new(text, file);
        s.line = line;
        s
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            file: self.file.to_owned(),
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_trivia();
        self.peek().is_none()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        self.skip_trivia();
        match self.peek() {
            Some(found) if found == c => {
                self.bump();
                Ok(())
            }
            Some(found) => Err(self.error(format!("expected `{c}`, found `{found}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn try_eat(&mut self, c: char) -> bool {
        self.skip_trivia();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// `[A-Za-z_][A-Za-z0-9_]*`
    fn symbol(&mut self) -> Result<String, ParseError> {
        self.skip_trivia();
        let mut out = String::new();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                out.push(c);
                self.bump();
            }
            Some(c) => return Err(self.error(format!("expected a symbol, found `{c}`"))),
            None => return Err(self.error("expected a symbol, found end of input")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(out)
    }

    /// A symbol that must be lowercase-initial.
    fn ident(&mut self) -> Result<String, ParseError> {
        let sym = self.symbol()?;
        if !sym.chars().next().is_some_and(|c| c.is_ascii_lowercase()) {
            return Err(self.error(format!("expected a lowercase identifier, found `{sym}`")));
        }
        Ok(sym)
    }
}

fn is_var_name(name: &str) -> bool {
    name.chars()
        .next()
        .is_some_and(|c| c.is_ascii_uppercase() || c == '_')
}

/// Per-rule parse state: placeholder names for anonymous variables and
/// omitted labels, resolved once the whole rule has been read.
struct RuleScope {
    anon: usize,
    labels: usize,
}

impl RuleScope {
    fn new() -> RuleScope {
        RuleScope { anon: 0, labels: 0 }
    }

    fn fresh_anon(&mut self) -> Term {
        self.anon += 1;
        Term::Var(format!("_#a{}", self.anon))
    }

    fn fresh_label(&mut self) -> Term {
        self.labels += 1;
        Term::Var(format!("_#l{}", self.labels))
    }
}

fn term(s: &mut Scanner, scope: &mut RuleScope) -> Result<Term, ParseError> {
    let sym = s.symbol()?;
    if sym == "_" {
        Ok(scope.fresh_anon())
    } else if is_var_name(&sym) {
        Ok(Term::Var(sym))
    } else {
        Ok(Term::Const(sym))
    }
}

fn arg_list(s: &mut Scanner, scope: &mut RuleScope) -> Result<Vec<Term>, ParseError> {
    let mut args = vec![term(s, scope)?];
    while s.try_eat(',') {
        args.push(term(s, scope)?);
    }
    s.expect(')')?;
    Ok(args)
}

/// `(label ':')? pred ('(' args ')')?` — a pattern condition. A missing
/// label becomes a fresh anonymous label variable.
fn pattern_cond(s: &mut Scanner, scope: &mut RuleScope) -> Result<LabeledCondition, ParseError> {
    let first = term(s, scope)?;
    let (label, predicate) = if s.try_eat(':') {
        let pred = s.ident()?;
        (first, pred)
    } else {
        match first {
            Term::Const(name) => (scope.fresh_label(), name),
            Term::Var(v) => {
                return Err(s.error(format!("expected `:` or a predicate, found variable `{v}`")))
            }
        }
    };
    let args = if s.try_eat('(') {
        arg_list(s, scope)?
    } else {
        Vec::new()
    };
    Ok(LabeledCondition::new(label, predicate, args))
}

/// A condition-list entry: a labeled pattern, a sort test, or an external
/// call. Bare `name(args)` without a label is an external call.
fn filter(s: &mut Scanner, scope: &mut RuleScope) -> Result<Condition, ParseError> {
    let first = term(s, scope)?;
    if s.try_eat(':') {
        let predicate = s.ident()?;
        let args = if s.try_eat('(') {
            arg_list(s, scope)?
        } else {
            Vec::new()
        };
        return Ok(Condition::Pattern(LabeledCondition::new(
            first, predicate, args,
        )));
    }
    let name = match first {
        Term::Const(name) => name,
        Term::Var(v) => {
            return Err(s.error(format!("expected `:` or a predicate, found variable `{v}`")))
        }
    };
    let args = if s.try_eat('(') {
        arg_list(s, scope)?
    } else {
        Vec::new()
    };
    if name == "sort" && sort_op_follows(s) {
        if args.len() != 1 {
            return Err(s.error("sort test takes exactly one argument"));
        }
        s.expect('=')?;
        s.expect('<')?;
        let negated = s.try_eat('~');
        let sort = s.ident()?;
        let term = args.into_iter().next().expect("one argument");
        return Ok(if negated {
            Condition::SortNotLeq { term, sort }
        } else {
            Condition::SortLeq { term, sort }
        });
    }
    Ok(Condition::External { name, args })
}

fn sort_op_follows(s: &mut Scanner) -> bool {
    s.skip_trivia();
    s.peek() == Some('=') && s.peek_at(1) == Some('<')
}

fn condset(s: &mut Scanner, scope: &mut RuleScope) -> Result<Vec<LabeledCondition>, ParseError> {
    s.expect('[')?;
    if s.try_eat(']') {
        return Ok(Vec::new());
    }
    let mut conds = vec![pattern_cond(s, scope)?];
    while s.try_eat(',') {
        conds.push(pattern_cond(s, scope)?);
    }
    s.expect(']')?;
    Ok(conds)
}

fn condlist(s: &mut Scanner, scope: &mut RuleScope) -> Result<Vec<Condition>, ParseError> {
    s.expect('[')?;
    if s.try_eat(']') {
        return Ok(Vec::new());
    }
    let mut conds = vec![filter(s, scope)?];
    while s.try_eat(',') {
        conds.push(filter(s, scope)?);
    }
    s.expect(']')?;
    Ok(conds)
}

fn orientation(s: &mut Scanner) -> Result<Orientation, ParseError> {
    s.skip_trivia();
    match s.peek() {
        Some('<') => {
            s.bump();
            s.expect('-')?;
            if s.peek() == Some('>') {
                s.bump();
                Ok(Orientation::Bidirectional)
            } else {
                Ok(Orientation::BackwardOnly)
            }
        }
        Some('-') => {
            s.bump();
            s.expect('>')?;
            Ok(Orientation::ForwardOnly)
        }
        Some(c) => Err(s.error(format!("expected `<->`, `->` or `<-`, found `{c}`"))),
        None => Err(s.error("expected an orientation operator, found end of input")),
    }
}

/// Replaces placeholder variables by user-space names that cannot collide
/// with the rule's own variables: `_1, _2, …` for anonymous `_`
/// occurrences and `_L1, _L2, …` for omitted labels.
fn resolve_placeholders(rule: &mut TransferRule) {
    let mut used: BTreeSet<String> = BTreeSet::new();
    {
        let mut note = |t: &Term| {
            if let Term::Var(v) = t {
                if !v.starts_with("_#") {
                    used.insert(v.clone());
                }
            }
        };
        for c in rule.sl.iter().chain(rule.tl.iter()) {
            c.terms().for_each(&mut note);
        }
        for f in rule.sl_conds.iter().chain(rule.tl_conds.iter()) {
            match f {
                Condition::Pattern(c) => c.terms().for_each(&mut note),
                Condition::SortLeq { term, .. } | Condition::SortNotLeq { term, .. } => note(term),
                Condition::External { args, .. } => args.iter().for_each(&mut note),
            }
        }
    }
    let mut renames: HashMap<String, String> = HashMap::new();
    let next = |prefix: &str, counter: &mut usize, used: &BTreeSet<String>| loop {
        *counter += 1;
        let candidate = format!("{prefix}{counter}");
        if !used.contains(&candidate) {
            return candidate;
        }
    };
    let (mut anon_n, mut label_n) = (0usize, 0usize);
    let mut rename = |t: &mut Term| {
        if let Term::Var(v) = t {
            if v.starts_with("_#a") {
                let name = renames
                    .entry(v.clone())
                    .or_insert_with(|| next("_", &mut anon_n, &used))
                    .clone();
                *t = Term::Var(name);
            } else if v.starts_with("_#l") {
                let name = renames
                    .entry(v.clone())
                    .or_insert_with(|| next("_L", &mut label_n, &used))
                    .clone();
                *t = Term::Var(name);
            }
        }
    };
    let rename_cond = |c: &mut LabeledCondition, rename: &mut dyn FnMut(&mut Term)| {
        rename(&mut c.label);
        c.args.iter_mut().for_each(&mut *rename);
    };
    for c in rule.sl.iter_mut().chain(rule.tl.iter_mut()) {
        rename_cond(c, &mut rename);
    }
    for f in rule.sl_conds.iter_mut().chain(rule.tl_conds.iter_mut()) {
        match f {
            Condition::Pattern(c) => rename_cond(c, &mut rename),
            Condition::SortLeq { term, .. } | Condition::SortNotLeq { term, .. } => rename(term),
            Condition::External { args, .. } => args.iter_mut().for_each(&mut rename),
        }
    }
}

fn classdef(s: &mut Scanner, ordinal: usize) -> Result<ClassDef, ParseError> {
    let line = s.line;
    s.expect('(')?;
    let lang = s.ident()?;
    s.expect(',')?;
    let name = s.ident()?;
    s.expect(',')?;
    s.expect('[')?;
    let mut members = vec![s.ident()?];
    while s.try_eat(',') {
        members.push(s.ident()?);
    }
    s.expect(']')?;
    s.expect(')')?;
    s.expect('.')?;
    let mut seen = BTreeSet::new();
    for m in &members {
        if !seen.insert(m.clone()) {
            return Err(ParseError {
                file: s.file.to_owned(),
                line,
                col: 0,
                msg: format!("duplicate member `{m}` in class `{name}`"),
            });
        }
    }
    Ok(ClassDef {
        lang,
        name,
        members,
        provenance: Provenance {
            file: s.file.to_owned(),
            line,
            ordinal,
        },
    })
}

/// Tracks one arity per predicate symbol across a whole rule-file set.
#[derive(Default)]
pub(crate) struct ArityTable {
    seen: HashMap<String, (usize, String, usize)>,
}

impl ArityTable {
    pub(crate) fn check(
        &mut self,
        predicate: &str,
        arity: usize,
        file: &str,
        line: usize,
    ) -> Result<(), ParseError> {
        match self.seen.get(predicate) {
            Some(&(expected, ref first_file, first_line)) if expected != arity => {
                Err(ParseError {
                    file: file.to_owned(),
                    line,
                    col: 0,
                    msg: format!(
                        "predicate `{predicate}` used with arity {arity}, \
                         but has arity {expected} at {first_file}:{first_line}"
                    ),
                })
            }
            Some(_) => Ok(()),
            None => {
                self.seen.insert(
                    predicate.to_owned(),
                    (arity, file.to_owned(), line),
                );
                Ok(())
            }
        }
    }
}

fn check_rule_arities(
    rule: &TransferRule,
    arities: &mut ArityTable,
    file: &str,
    line: usize,
) -> Result<(), ParseError> {
    for c in rule.sl.iter().chain(rule.tl.iter()) {
        arities.check(&c.predicate, c.arity(), file, line)?;
    }
    for f in rule.sl_conds.iter().chain(rule.tl_conds.iter()) {
        if let Condition::Pattern(c) = f {
            arities.check(&c.predicate, c.arity(), file, line)?;
        }
    }
    Ok(())
}

/// Checks that every side the operator can match against is non-empty.
fn check_match_sides(rule: &TransferRule, file: &str, line: usize) -> Result<(), ParseError> {
    let empty_sl = rule.sl.is_empty();
    let empty_tl = rule.tl.is_empty();
    let msg = match rule.op {
        Orientation::ForwardOnly if empty_sl => Some("empty SL set"),
        Orientation::BackwardOnly if empty_tl => Some("empty TL set (matched side of `<-`)"),
        Orientation::Bidirectional if empty_sl => Some("empty SL set"),
        Orientation::Bidirectional if empty_tl => {
            Some("empty TL set (matched side of a bidirectional rule)")
        }
        _ => None,
    };
    match msg {
        Some(msg) => Err(ParseError {
            file: file.to_owned(),
            line,
            col: 0,
            msg: msg.to_owned(),
        }),
        None => Ok(()),
    }
}

/// Parses a rule file. Ordinals start at `first_ordinal`, letting callers
/// concatenate several files with globally increasing ordinals.
pub fn parse_rule_file_from(
    text: &str,
    file: &str,
    first_ordinal: usize,
) -> Result<(Vec<TransferRule>, Vec<ClassDef>), ParseError> {
    let mut s = Scanner::new(text, file);
    let mut rules = Vec::new();
    let mut classes: Vec<ClassDef> = Vec::new();
    let mut arities = ArityTable::default();
    let mut ordinal = first_ordinal;
    while !s.at_end() {
        match s.peek() {
            Some('[') => {
                let line = s.line;
                let mut scope = RuleScope::new();
                let sl = condset(&mut s, &mut scope)?;
                let sl_conds = if s.try_eat(',') {
                    condlist(&mut s, &mut scope)?
                } else {
                    Vec::new()
                };
                let op = orientation(&mut s)?;
                let tl = condset(&mut s, &mut scope)?;
                let tl_conds = if s.try_eat(',') {
                    condlist(&mut s, &mut scope)?
                } else {
                    Vec::new()
                };
                s.expect('.')?;
                let mut rule = TransferRule {
                    sl: canonicalize(sl),
                    sl_conds,
                    op,
                    tl: canonicalize(tl),
                    tl_conds,
                    provenance: Provenance {
                        file: file.to_owned(),
                        line,
                        ordinal,
                    },
                };
                resolve_placeholders(&mut rule);
                check_match_sides(&rule, file, line)?;
                check_rule_arities(&rule, &mut arities, file, line)?;
                rules.push(rule);
                ordinal += 1;
            }
            _ => {
                let kw = s.symbol()?;
                if kw != "type" {
                    return Err(s.error(format!(
                        "expected a rule or a `type(…)` class definition, found `{kw}`"
                    )));
                }
                let def = classdef(&mut s, ordinal)?;
                if classes
                    .iter()
                    .any(|c| c.lang == def.lang && c.name == def.name)
                {
                    return Err(ParseError {
                        file: file.to_owned(),
                        line: def.provenance.line,
                        col: 0,
                        msg: format!(
                            "duplicate class definition `{}` for language `{}`",
                            def.name, def.lang
                        ),
                    });
                }
                classes.push(def);
                ordinal += 1;
            }
        }
    }
    Ok((rules, classes))
}

pub fn parse_rule_file(
    text: &str,
    file: &str,
) -> Result<(Vec<TransferRule>, Vec<ClassDef>), ParseError> {
    parse_rule_file_from(text, file, 0)
}

/// Parses one ground labeled condition, e.g. `l3:passen(i1)` or
/// `t1:#temp_loc(i1,i2)`.
pub fn parse_condition(text: &str, file: &str, line: usize) -> Result<LabeledCondition, ParseError> {
    let mut s = Scanner::at_line(text, file, line);
    let label_sym = s.symbol()?;
    if is_var_name(&label_sym) {
        return Err(s.error(format!("variable `{label_sym}` in a ground condition")));
    }
    s.expect(':')?;
    let class_flag = s.try_eat('#');
    let predicate = s.ident()?;
    let mut args = Vec::new();
    if s.try_eat('(') {
        loop {
            let sym = s.symbol()?;
            if is_var_name(&sym) {
                return Err(s.error(format!("variable `{sym}` in a ground condition")));
            }
            args.push(Term::Const(sym));
            if !s.try_eat(',') {
                break;
            }
        }
        s.expect(')')?;
    }
    if !s.at_end() {
        return Err(s.error("trailing input after condition"));
    }
    let mut cond = LabeledCondition::new(Term::Const(label_sym), predicate, args);
    cond.class_flag = class_flag;
    Ok(cond)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[derive(PartialEq)]
enum VitSection {
    Preamble,
    Conds,
    Sorts,
}

/// Parses the Vit file format: a `lang:` line, a `conds:` section with one
/// ground condition per line, and an optional `sorts:` section with one
/// `marker=sort` entry per line.
pub fn parse_vit(text: &str, file: &str) -> Result<Vit, ParseError> {
    let mut lang: Option<String> = None;
    let mut conds: Vec<LabeledCondition> = Vec::new();
    let mut sorts: BTreeMap<String, String> = BTreeMap::new();
    let mut sort_lines: Vec<(String, usize)> = Vec::new();
    let mut section = VitSection::Preamble;
    let err = |line: usize, msg: String| ParseError {
        file: file.to_owned(),
        line,
        col: 0,
        msg,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(value) = line.strip_prefix("lang:") {
            if lang.is_some() {
                return Err(err(line_no, "repeated `lang:` section".into()));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(err(line_no, "missing language tag".into()));
            }
            lang = Some(value.to_owned());
            continue;
        }
        if line == "conds:" {
            section = VitSection::Conds;
            continue;
        }
        if line == "sorts:" {
            section = VitSection::Sorts;
            continue;
        }
        if line.ends_with(':') && !line.contains('(') && !line[..line.len() - 1].contains(':') {
            return Err(err(
                line_no,
                format!("unknown section `{}`", &line[..line.len() - 1]),
            ));
        }
        match section {
            VitSection::Preamble => {
                return Err(err(line_no, "expected `lang:` or a section header".into()))
            }
            VitSection::Conds => {
                let cond = parse_condition(line, file, line_no)?;
                if conds.contains(&cond) {
                    return Err(err(line_no, format!("duplicate condition `{cond}`")));
                }
                conds.push(cond);
            }
            VitSection::Sorts => {
                let (marker, sort) = line
                    .split_once('=')
                    .ok_or_else(|| err(line_no, "expected `marker=sort`".into()))?;
                let marker = marker.trim().to_owned();
                let sort = sort.trim().to_owned();
                if marker.is_empty() || sort.is_empty() {
                    return Err(err(line_no, "expected `marker=sort`".into()));
                }
                if is_var_name(&marker) || is_var_name(&sort) {
                    return Err(err(line_no, "variable in sorts table".into()));
                }
                if sorts.insert(marker.clone(), sort).is_some() {
                    return Err(err(line_no, format!("duplicate sort entry for `{marker}`")));
                }
                sort_lines.push((marker, line_no));
            }
        }
    }
    let lang = lang.ok_or_else(|| err(0, "missing `lang:` section".into()))?;
    for (marker, line_no) in &sort_lines {
        let occurs = conds
            .iter()
            .any(|c| c.terms().any(|t| t.name() == marker));
        if !occurs {
            return Err(err(
                *line_no,
                format!("sorts entry for `{marker}` but no condition mentions it"),
            ));
        }
    }
    Vit::new(lang, conds, sorts).map_err(|e| err(0, e.to_string()))
}

/// Parses `isa(child,parent).` statements into a sort hierarchy rooted at
/// `top`.
pub fn parse_sorts(text: &str, file: &str) -> Result<SortHierarchy, ParseError> {
    let mut s = Scanner::new(text, file);
    let mut edges: Vec<(String, String)> = Vec::new();
    while !s.at_end() {
        let line = s.line;
        let kw = s.ident()?;
        if kw != "isa" {
            return Err(s.error(format!("expected `isa`, found `{kw}`")));
        }
        s.expect('(')?;
        let child = s.ident()?;
        s.expect(',')?;
        let parent = s.ident()?;
        s.expect(')')?;
        s.expect('.')?;
        if child == TOP_SORT {
            return Err(ParseError {
                file: file.to_owned(),
                line,
                col: 0,
                msg: format!("`{TOP_SORT}` may only appear as a parent"),
            });
        }
        if edges.iter().any(|(c, p)| *c == child && *p == parent) {
            return Err(ParseError {
                file: file.to_owned(),
                line,
                col: 0,
                msg: format!("duplicate edge isa({child},{parent})"),
            });
        }
        edges.push((child, parent));
    }
    SortHierarchy::from_edges(edges).map_err(|e| ParseError {
        file: file.to_owned(),
        line: 0,
        col: 0,
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::serialize_rule_file;

    #[test]
    fn simple_lexical_rule() {
        let (rules, classes) = parse_rule_file("[L:echt(A)] <-> [L:real(A)].", "t").unwrap();
        assert!(classes.is_empty());
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        assert_eq!(r.op, Orientation::Bidirectional);
        assert_eq!(r.sl.len(), 1);
        assert_eq!(r.tl.len(), 1);
        assert!(r.sl_conds.is_empty() && r.tl_conds.is_empty());
        assert_eq!(r.to_string(), "[L:echt(A)] <-> [L:real(A)].");
    }

    #[test]
    fn rule_with_source_condition() {
        let (rules, _) =
            parse_rule_file("[L:schlecht(E)],[L1:passen(E)] <-> [L:neg(A),A:good(E)].", "t")
                .unwrap();
        let r = &rules[0];
        assert_eq!(r.sl_conds.len(), 1);
        assert_eq!(
            r.sl_conds[0],
            Condition::Pattern(LabeledCondition::new(
                Term::var("L1"),
                "passen",
                vec![Term::var("E")]
            ))
        );
    }

    #[test]
    fn empty_sl_set_is_an_error() {
        let err = parse_rule_file("[] -> [L:x(A)].", "t").unwrap_err();
        assert!(err.to_string().contains("empty SL set"), "{err}");
        // Backward deletion rules are legal: only the matched side counts.
        assert!(parse_rule_file("[] <- [L:x(A)].", "t").is_ok());
        let err = parse_rule_file("[L:x(A)] <-> [].", "t").unwrap_err();
        assert!(err.to_string().contains("empty TL set"), "{err}");
    }

    #[test]
    fn sort_conditions_and_omitted_labels() {
        let (rules, classes) = parse_rule_file(
            "type(de,temp_loc,[an,in,um,zu]).\n\
             type(en,temp_loc,[on,in,at]).\n\
             [temp_loc(E,X)],[sort(X)=<time] <-> [temp_loc(E,X)].",
            "t",
        )
        .unwrap();
        assert_eq!(classes.len(), 2);
        let r = &rules[0];
        assert_eq!(r.sl_conds, vec![Condition::SortLeq {
            term: Term::var("X"),
            sort: "time".into()
        }]);
        // The omitted labels become distinct anonymous label variables.
        assert_eq!(r.sl[0].label, Term::var("_L1"));
        assert_eq!(r.tl[0].label, Term::var("_L2"));
    }

    #[test]
    fn sort_not_leq_condition() {
        let (rules, _) =
            parse_rule_file("[L:termin(X)],[sort(X)=<~temp_point] <-> [L:date(X)].", "t").unwrap();
        assert_eq!(rules[0].sl_conds, vec![Condition::SortNotLeq {
            term: Term::var("X"),
            sort: "temp_point".into()
        }]);
    }

    #[test]
    fn bare_filter_is_an_external_call() {
        let (rules, _) =
            parse_rule_file("[L:a(X)],[dialog_act(X),confirmed] -> [L:b(X)].", "t").unwrap();
        assert_eq!(rules[0].sl_conds, vec![
            Condition::External {
                name: "dialog_act".into(),
                args: vec![Term::var("X")]
            },
            Condition::External {
                name: "confirmed".into(),
                args: vec![]
            }
        ]);
    }

    #[test]
    fn sort_without_comparison_is_an_external() {
        let (rules, _) = parse_rule_file("[L:a(X)],[sort(X)] -> [L:b(X)].", "t").unwrap();
        assert_eq!(rules[0].sl_conds, vec![Condition::External {
            name: "sort".into(),
            args: vec![Term::var("X")]
        }]);
    }

    #[test]
    fn arity_clash_is_an_error() {
        let err = parse_rule_file("[L:p(X)] -> [L:q(X)].\n[L:p(X,Y)] -> [L:r(X,Y)].", "t")
            .unwrap_err();
        assert!(err.to_string().contains("arity"), "{err}");
        assert_eq!(err.line, 2);
    }

    #[test]
    fn duplicate_class_definition_is_an_error() {
        let err = parse_rule_file(
            "type(de,c,[a,b]).\ntype(de,c,[d]).",
            "t",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate class"), "{err}");
    }

    #[test]
    fn anonymous_underscores_are_distinct() {
        let (rules, _) = parse_rule_file("[L:p(_,_)] -> [L:q].", "t").unwrap();
        let args = &rules[0].sl[0].args;
        assert_ne!(args[0], args[1]);
        assert_eq!(args[0], Term::var("_1"));
        assert_eq!(args[1], Term::var("_2"));
    }

    #[test]
    fn provenance_ordinals_increase_in_file_order() {
        let text = "[L:a(X)] -> [L:b(X)].\ntype(de,c,[a]).\n[L:d(X)] -> [L:e(X)].";
        let (rules, classes) = parse_rule_file(text, "t").unwrap();
        assert_eq!(rules[0].provenance.ordinal, 0);
        assert_eq!(classes[0].provenance.ordinal, 1);
        assert_eq!(rules[1].provenance.ordinal, 2);
        assert_eq!(rules[1].provenance.line, 3);
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_rule_file("[L:echt(A)] <-> [L:real(A)]", "rules.tr").unwrap_err();
        assert_eq!(err.file, "rules.tr");
        assert!(err.to_string().contains("expected `.`"), "{err}");
    }

    #[test]
    fn canonical_rule_file_round_trips_byte_exact() {
        let text = "type(de,temp_loc,[an,in,um,zu]).\n\
                    [L:echt(A)] <-> [L:real(A)].\n\
                    [L:termin(X)],[sort(X)=<~temp_point] <-> [L:date(X)].\n";
        let (rules, classes) = parse_rule_file(text, "t").unwrap();
        assert_eq!(serialize_rule_file(&rules, &classes), text);
    }

    #[test]
    fn vit_parse_of_paper_input() {
        let text = "lang: de\nconds:\nl1:echt(l2)\nl2:schlecht(i1)\nl3:passen(i1)\n\
                    l3:arg3(i1,i2)\nl4:pron(i2)\nl5:bei(i1,i3)\nl6:ich(i3)\n";
        let vit = parse_vit(text, "t").unwrap();
        assert_eq!(vit.lang(), "de");
        assert_eq!(vit.conds().len(), 7);
        // Canonical display re-parses to the same value.
        let again = parse_vit(&vit.to_string(), "t").unwrap();
        assert_eq!(vit, again);
    }

    #[test]
    fn vit_rejects_variables() {
        let err = parse_vit("lang: de\nconds:\nl1:echt(X)\n", "t").unwrap_err();
        assert!(err.to_string().contains("variable"), "{err}");
        assert_eq!(err.line, 3);
    }

    #[test]
    fn vit_rejects_unknown_sections_and_dangling_sorts() {
        let err = parse_vit("lang: de\nfoo:\n", "t").unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{err}");
        let err = parse_vit("lang: de\nconds:\nl1:p(i1)\nsorts:\ni9=time\n", "t").unwrap_err();
        assert!(err.to_string().contains("no condition mentions"), "{err}");
    }

    #[test]
    fn vit_empty_conds_section() {
        let vit = parse_vit("lang: de\nconds:\n", "t").unwrap();
        assert!(vit.conds().is_empty());
    }

    #[test]
    fn vit_duplicate_condition_rejected() {
        let err = parse_vit("lang: de\nconds:\nl1:p(i1)\nl1:p(i1)\n", "t").unwrap_err();
        assert!(err.to_string().contains("duplicate condition"), "{err}");
    }

    #[test]
    fn class_flagged_conditions_round_trip() {
        let text = "lang: en\nconds:\nt1:#temp_loc(i1,i2)\nl2:tuesday(i2)\nsorts:\ni2=time\n";
        let vit = parse_vit(text, "t").unwrap();
        assert!(vit.conds().iter().any(|c| c.class_flag));
        assert_eq!(vit.to_string(), text);
    }

    #[test]
    fn sorts_file_parses_into_hierarchy() {
        let h = parse_sorts("isa(temp_point,time). % leaf\nisa(time,entity).", "t").unwrap();
        assert!(h.subsumes("time", "temp_point").unwrap());
        assert!(!h.subsumes("temp_point", "time").unwrap());
    }

    #[test]
    fn sorts_file_rejects_cycles_and_duplicates() {
        let err = parse_sorts("isa(a,b). isa(b,a).", "t").unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
        let err = parse_sorts("isa(a,b). isa(a,b).", "t").unwrap_err();
        assert!(err.to_string().contains("duplicate edge"), "{err}");
        let err = parse_sorts("isa(top,a).", "t").unwrap_err();
        assert!(err.to_string().contains("parent"), "{err}");
    }

    #[test]
    fn empty_sorts_file_is_top_only() {
        let h = parse_sorts("", "t").unwrap();
        assert!(h.subsumes(TOP_SORT, TOP_SORT).unwrap());
    }
}

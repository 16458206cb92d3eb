//! Seeded synthetic fixtures: large lexicon-shaped rule bases for the
//! bench harness and small adversarial instances for differential tests
//! against the reference oracle.

use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use semtrans::{compile, parse_rule_file, parse_sorts, parse_vit, Flow, RuleBase, Vit};

/// Generated rule and input texts plus the parsed input. The texts go
/// through the ordinary parsers so fixtures are reproducible files.
pub struct BenchFixture {
    pub rules_text: String,
    pub sorts_text: String,
    pub input_text: String,
    pub input: Vit,
}

/// A synthetic de→en rule base: 1:1 lexical rules, 10% multi-predicate
/// rules and 5% sort-conditioned rules, plus an input of `input_size`
/// conditions that triggers at least `input_size / 2` rule applications.
pub fn bench_fixture(seed: u64, rule_count: usize, input_size: usize) -> BenchFixture {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rules_text = String::new();
    // Rule kinds by position: every 10th is multi-predicate, every 20th
    // carries a sort condition.
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Lexical,
        Multi,
        Conditioned,
    }
    let kind_of = |i: usize| {
        if rule_count >= 4 && i % 20 == 19 {
            Kind::Conditioned
        } else if rule_count >= 4 && i % 10 == 5 {
            Kind::Multi
        } else {
            Kind::Lexical
        }
    };
    let mut kinds = Vec::with_capacity(rule_count);
    for i in 0..rule_count {
        let kind = kind_of(i);
        kinds.push(kind);
        match kind {
            Kind::Lexical => {
                rules_text.push_str(&format!("[L:p{i:05}(X)] <-> [L:q{i:05}(X)].\n"));
            }
            Kind::Multi => {
                rules_text.push_str(&format!(
                    "[L:p{i:05}(E),L:p{i:05}x(E,X)] <-> [L:q{i:05}(E),L:q{i:05}x(E,X)].\n"
                ));
            }
            Kind::Conditioned => {
                let sort = rng.random_range(0..9usize);
                rules_text.push_str(&format!(
                    "[L:p{i:05}(X)],[sort(X)=<s{sort}] <-> [L:q{i:05}(X)].\n"
                ));
            }
        }
    }
    let mut sorts_text = String::new();
    for k in 1..10 {
        sorts_text.push_str(&format!("isa(s{k},s{}).\n", k - 1));
    }

    // Input: instantiate whole source sets of distinct rules until the
    // condition budget is filled or the rules run out. Every group is one
    // guaranteed application; groups have at most two conditions, so
    // applications are at least half the input size.
    let mut input_text = String::from("lang: de\nconds:\n");
    let mut sorts_section = String::new();
    let mut order: Vec<usize> = (0..rule_count).collect();
    order.shuffle(&mut rng);
    let mut conds = 0usize;
    let mut group = 0usize;
    for i in order {
        let budget = input_size - conds;
        if budget == 0 {
            break;
        }
        let need = if kinds[i] == Kind::Multi { 2 } else { 1 };
        if need > budget {
            continue;
        }
        group += 1;
        let (label, marker) = (format!("l{}", 100 + group), format!("i{}", 100 + group));
        match kinds[i] {
            Kind::Lexical => {
                input_text.push_str(&format!("{label}:p{i:05}({marker})\n"));
            }
            Kind::Conditioned => {
                input_text.push_str(&format!("{label}:p{i:05}({marker})\n"));
                // s9 is the most specific sort and satisfies every
                // generated condition.
                sorts_section.push_str(&format!("{marker}=s9\n"));
            }
            Kind::Multi => {
                input_text.push_str(&format!("{label}:p{i:05}({marker})\n"));
                input_text.push_str(&format!("{label}:p{i:05}x({marker},i{}b)\n", 100 + group));
            }
        }
        conds += need;
    }
    if !sorts_section.is_empty() {
        input_text.push_str("sorts:\n");
        input_text.push_str(&sorts_section);
    }
    let input = parse_vit(&input_text, "bench-input").expect("generated input parses");
    BenchFixture {
        rules_text,
        sorts_text,
        input_text,
        input,
    }
}

pub fn compile_fixture(fixture: &BenchFixture) -> RuleBase {
    let (rules, classes) =
        parse_rule_file(&fixture.rules_text, "bench.rules").expect("generated rules parse");
    let ontology = parse_sorts(&fixture.sorts_text, "bench.sorts").expect("generated sorts parse");
    compile(&rules, &classes, Flow::Forward, "de", "en", ontology).expect("generated rules compile")
}

/// A small random instance for differential testing: at most 15 rules and
/// 10 input conditions, pattern and sort conditions but no externals, with
/// deliberate predicate collisions so rules compete.
pub struct RandomInstance {
    pub rules_text: String,
    pub input_text: String,
    pub base: RuleBase,
    pub input: Vit,
}

const SRC_PREDS: &[(&str, usize)] = &[
    ("anfang", 1),
    ("bald", 1),
    ("chef", 2),
    ("dort", 1),
    ("eng", 2),
    ("frei", 1),
    ("gut", 1),
    ("halb", 2),
];
const TGT_PREDS: &[(&str, usize)] = &[
    ("start", 1),
    ("soon", 1),
    ("boss", 2),
    ("there", 1),
    ("narrow", 2),
    ("free", 1),
    ("good", 1),
    ("half", 2),
];
const SORTS_TEXT: &str = "isa(m1,m0).\nisa(m2,m1).\n";

pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = StdRng::seed_from_u64(seed);
    let vars = ["X", "Y", "Z"];
    let rule_count = rng.random_range(1..=15usize);
    let mut rules_text = String::new();
    for _ in 0..rule_count {
        let sl_size = *[1, 1, 1, 2].choose(&mut rng).unwrap();
        let mut picked: Vec<usize> = Vec::new();
        while picked.len() < sl_size {
            let p = rng.random_range(0..SRC_PREDS.len());
            if !picked.contains(&p) {
                picked.push(p);
            }
        }
        let shared_label = rng.random_bool(0.5);
        let mut sl_parts = Vec::new();
        for (k, &p) in picked.iter().enumerate() {
            let (name, arity) = SRC_PREDS[p];
            let label = if shared_label { "L".to_owned() } else { format!("L{k}") };
            let args: Vec<&str> = (0..arity).map(|a| vars[a.min(vars.len() - 1)]).collect();
            if arity == 0 {
                sl_parts.push(format!("{label}:{name}"));
            } else {
                sl_parts.push(format!("{label}:{name}({})", args.join(",")));
            }
        }
        // Target side reuses the first matched predicate's translation and
        // sometimes mints a fresh variable.
        let first = picked[0];
        let (tname, tarity) = TGT_PREDS[first];
        let mut tl_args: Vec<String> = (0..tarity)
            .map(|a| vars[a.min(vars.len() - 1)].to_owned())
            .collect();
        if !tl_args.is_empty() && rng.random_bool(0.2) {
            let last = tl_args.len() - 1;
            tl_args[last] = "W".to_owned();
        }
        let tl = if tl_args.is_empty() {
            format!("[L:{tname}]")
        } else {
            format!("[L:{tname}({})]", tl_args.join(","))
        };
        let cond = if rng.random_bool(0.3) {
            if rng.random_bool(0.5) {
                let (cname, carity) = SRC_PREDS[rng.random_range(0..SRC_PREDS.len())];
                let args: Vec<&str> = (0..carity).map(|a| vars[a.min(vars.len() - 1)]).collect();
                if carity == 0 {
                    format!(",[C:{cname}]")
                } else {
                    format!(",[C:{cname}({})]", args.join(","))
                }
            } else {
                let m = rng.random_range(0..3usize);
                let op = if rng.random_bool(0.5) { "=<" } else { "=<~" };
                format!(",[sort(X){op}m{m}]")
            }
        } else {
            String::new()
        };
        rules_text.push_str(&format!("[{}]{} <-> {}.\n", sl_parts.join(","), cond, tl));
    }

    let cond_count = rng.random_range(1..=10usize);
    let mut input_text = String::from("lang: de\nconds:\n");
    let mut per_pred = [0usize; 8];
    let mut lines: Vec<String> = Vec::new();
    let mut guard = 0;
    while lines.len() < cond_count && guard < 200 {
        guard += 1;
        let p = rng.random_range(0..SRC_PREDS.len());
        // Keep per-predicate multiplicity low so the oracle's exhaustive
        // search stays tractable.
        if per_pred[p] >= 2 {
            continue;
        }
        let (name, arity) = SRC_PREDS[p];
        let label = format!("l{}", lines.len() + 1);
        let args: Vec<String> = (0..arity)
            .map(|_| format!("i{}", rng.random_range(1..=4usize)))
            .collect();
        let line = if arity == 0 {
            format!("{label}:{name}")
        } else {
            format!("{label}:{name}({})", args.join(","))
        };
        if lines.contains(&line) {
            continue;
        }
        per_pred[p] += 1;
        lines.push(line);
    }
    for line in &lines {
        input_text.push_str(line);
        input_text.push('\n');
    }
    let mut sorts_section = String::new();
    for m in 1..=4 {
        let marker = format!("i{m}");
        if lines.iter().any(|l| l.contains(&marker)) && rng.random_bool(0.5) {
            sorts_section.push_str(&format!("{marker}=m{}\n", rng.random_range(0..3usize)));
        }
    }
    if !sorts_section.is_empty() {
        input_text.push_str("sorts:\n");
        input_text.push_str(&sorts_section);
    }

    let (rules, classes) = parse_rule_file(&rules_text, "random.rules").expect("random rules");
    let ontology = parse_sorts(SORTS_TEXT, "random.sorts").expect("random sorts");
    let base = compile(&rules, &classes, Flow::Forward, "de", "en", ontology)
        .expect("random rules compile");
    let input = parse_vit(&input_text, "random-input").expect("random input parses");
    RandomInstance {
        rules_text,
        input_text,
        base,
        input,
    }
}

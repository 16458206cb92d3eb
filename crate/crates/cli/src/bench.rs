//! Latency measurement over synthetic or file-based rule bases, with and
//! without the retrieval index.

use crate::synth::{bench_fixture, compile_fixture};
use anyhow::{bail, Context, Result};
use semtrans::index::predicate_multiset;
use semtrans::{
    compile, parse_rule_file_from, parse_sorts, transfer_with_options, ExternalRegistry, Flow,
    RuleBase, SortHierarchy, TransferOptions, Vit,
};
use std::fmt;
use std::time::Instant;

/// Latencies are only meaningful warm; fewer requested runs are raised to
/// this floor.
pub const MIN_RUNS: usize = 100;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Generate this many synthetic rules, unless `rules_files` is given.
    pub rule_count: usize,
    pub rules_files: Vec<String>,
    pub sorts_file: Option<String>,
    pub input_size: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rule_count: usize,
    pub input_size: usize,
    pub runs: usize,
    pub seed: u64,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub index_bypass_mean_ms: f64,
    pub retrieval_indexed_ns: f64,
    pub retrieval_naive_ns: f64,
}

impl BenchReport {
    pub fn retrieval_speedup(&self) -> f64 {
        if self.retrieval_indexed_ns > 0.0 {
            self.retrieval_naive_ns / self.retrieval_indexed_ns
        } else {
            f64::INFINITY
        }
    }

    /// Line-oriented `key=value` block for scripting.
    pub fn key_values(&self) -> String {
        format!(
            "rule_count={}\ninput_size={}\nruns={}\nseed={}\nmean_ms={:.4}\nmedian_ms={:.4}\n\
             p95_ms={:.4}\nindex_bypass_mean_ms={:.4}\nretrieval_indexed_ns={:.1}\n\
             retrieval_naive_ns={:.1}\nretrieval_speedup={:.2}\n",
            self.rule_count,
            self.input_size,
            self.runs,
            self.seed,
            self.mean_ms,
            self.median_ms,
            self.p95_ms,
            self.index_bypass_mean_ms,
            self.retrieval_indexed_ns,
            self.retrieval_naive_ns,
            self.retrieval_speedup()
        )
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} rules, {} input conditions, {} runs (seed {})",
            self.rule_count, self.input_size, self.runs, self.seed
        )?;
        writeln!(
            f,
            "transfer latency: mean {:.3} ms, median {:.3} ms, p95 {:.3} ms",
            self.mean_ms, self.median_ms, self.p95_ms
        )?;
        writeln!(
            f,
            "index bypassed:   mean {:.3} ms",
            self.index_bypass_mean_ms
        )?;
        writeln!(
            f,
            "candidate retrieval: {:.0} ns indexed vs {:.0} ns naive ({:.1}x)",
            self.retrieval_indexed_ns,
            self.retrieval_naive_ns,
            self.retrieval_speedup()
        )
    }
}

fn stats(samples: &mut [f64]) -> (f64, f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite latencies"));
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let median = samples[samples.len() / 2];
    let p95 = samples[((samples.len() as f64 * 0.95).ceil() as usize).max(1) - 1];
    (mean, median, p95)
}

fn timed_runs(
    input: &Vit,
    base: &RuleBase,
    registry: &ExternalRegistry,
    options: &TransferOptions,
    runs: usize,
) -> Result<Vec<f64>> {
    let warmup = (runs / 10).clamp(5, 50);
    for _ in 0..warmup {
        transfer_with_options(input, base, registry, options)?;
    }
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        let result = transfer_with_options(input, base, registry, options)?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(result);
    }
    Ok(samples)
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let runs = config.runs.max(MIN_RUNS);
    let (base, input) = if config.rules_files.is_empty() {
        let fixture = bench_fixture(config.seed, config.rule_count, config.input_size);
        (compile_fixture(&fixture), fixture.input)
    } else {
        let mut rules = Vec::new();
        let mut classes = Vec::new();
        for path in &config.rules_files {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let (mut r, mut c) =
                parse_rule_file_from(&text, path, rules.len() + classes.len())?;
            rules.append(&mut r);
            classes.append(&mut c);
        }
        let ontology = match &config.sorts_file {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                parse_sorts(&text, path)?
            }
            None => SortHierarchy::top_only(),
        };
        let base = compile(&rules, &classes, Flow::Forward, "de", "en", ontology)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let input = file_base_input(&base, config.input_size)?;
        (base, input)
    };

    let registry = ExternalRegistry::new();
    let indexed = TransferOptions { use_index: true };
    let bypass = TransferOptions { use_index: false };
    let mut with_index = timed_runs(&input, &base, &registry, &indexed, runs)?;
    let without_index = timed_runs(&input, &base, &registry, &bypass, runs)?;
    let (mean_ms, median_ms, p95_ms) = stats(&mut with_index);
    let index_bypass_mean_ms = without_index.iter().sum::<f64>() / without_index.len() as f64;

    // Retrieval-only comparison on the full input multiset.
    let multiset = predicate_multiset(input.conds());
    let iterations = 2000usize;
    let start = Instant::now();
    for _ in 0..iterations {
        std::hint::black_box(base.index.candidates(&multiset));
    }
    let retrieval_indexed_ns = start.elapsed().as_nanos() as f64 / iterations as f64;
    let start = Instant::now();
    for _ in 0..iterations {
        std::hint::black_box(base.index.candidates_naive(&multiset));
    }
    let retrieval_naive_ns = start.elapsed().as_nanos() as f64 / iterations as f64;

    Ok(BenchReport {
        rule_count: base.rules.len(),
        input_size: input.conds().len(),
        runs,
        seed: config.seed,
        mean_ms,
        median_ms,
        p95_ms,
        index_bypass_mean_ms,
        retrieval_indexed_ns,
        retrieval_naive_ns,
    })
}

/// Builds an input for a file-based bench by instantiating source sets of
/// unconditioned rules from the base.
fn file_base_input(base: &RuleBase, input_size: usize) -> Result<Vit> {
    let mut conds = Vec::new();
    let mut group = 0usize;
    for rule in base
        .rules
        .iter()
        .filter(|r| r.src_conds.is_empty() && r.tgt_conds.is_empty())
        .cycle()
        .take(base.rules.len() * 2)
    {
        if conds.len() + rule.sl.len() > input_size {
            continue;
        }
        group += 1;
        let skolemized = semtrans::skolemize(&rule.sl);
        for (k, c) in skolemized.iter().enumerate() {
            let mut c = c.clone();
            // Renumber into a per-group namespace so groups stay disjoint.
            let rename = |t: &semtrans::Term| -> semtrans::Term {
                semtrans::Term::constant(format!("{}g{}", t.name(), group * 10 + k))
            };
            c.label = rename(&c.label);
            c.args = c.args.iter().map(rename).collect();
            conds.push(c);
        }
        if conds.len() >= input_size {
            break;
        }
    }
    if conds.is_empty() && input_size > 0 {
        bail!("no unconditioned rules to build a bench input from");
    }
    Ok(Vit::new(base.source_lang.clone(), conds, Default::default())?)
}

//! Batch command-line front end: translate Vit files with compiled rule
//! bases, statically check rule files, benchmark at scale, and run the
//! exhaustive reference oracle.

use clap::{Args, Parser, Subcommand};
use semtrans::{
    compile, oracle, parse_rule_file_from, parse_sorts, parse_vit, serialize_trace, transfer,
    transfer_all, ClassDef, ExternalRegistry, Flow, RuleBase, SortHierarchy, TransferRule, Vit,
};
use semtrans_cli::bench::{run_bench, BenchConfig};
use semtrans_cli::check::{check_rules, Severity};
use std::fs;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "semtrans", version, about = "Semantic transfer over flat labeled semantics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate an input Vit file with a compiled rule base.
    Translate(TranslateArgs),
    /// Statically validate rule files.
    Check(CheckArgs),
    /// Measure transfer latency on a synthetic or file-based rule base.
    Bench(BenchArgs),
    /// Enumerate all derivations exhaustively (small inputs only).
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RuleFileArgs {
    /// Rule file; repeat to concatenate packages in order.
    #[arg(long = "rules", required = true)]
    rules: Vec<String>,
    /// Sort hierarchy file.
    #[arg(long)]
    sorts: Option<String>,
}

#[derive(Args)]
struct DirectionArgs {
    /// Source language of the translation.
    #[arg(long)]
    from: String,
    /// Target language of the translation.
    #[arg(long)]
    to: String,
    /// The rule files are written for the opposite direction; compile the
    /// backward program.
    #[arg(long)]
    reverse: bool,
}

#[derive(Args)]
struct TranslateArgs {
    #[command(flatten)]
    files: RuleFileArgs,
    #[command(flatten)]
    direction: DirectionArgs,
    /// Input Vit file.
    #[arg(long)]
    input: String,
    /// Enumerate up to N alternative translations.
    #[arg(long, value_name = "N")]
    all: Option<usize>,
    /// Write the derivation trace to this file.
    #[arg(long, value_name = "FILE")]
    trace: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    files: RuleFileArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Generate a synthetic rule base of this size.
    #[arg(long = "rules", value_name = "COUNT", conflicts_with = "rules_file")]
    rule_count: Option<usize>,
    /// Benchmark these rule files instead of a synthetic base.
    #[arg(long = "rules-file")]
    rules_file: Vec<String>,
    #[arg(long)]
    sorts: Option<String>,
    /// Number of input conditions.
    #[arg(long, default_value_t = 15)]
    input_size: usize,
    /// Timed runs per configuration (raised to 100 if lower).
    #[arg(long, default_value_t = 500)]
    runs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    files: RuleFileArgs,
    #[command(flatten)]
    direction: DirectionArgs,
    #[arg(long)]
    input: String,
    /// Print at most N outputs.
    #[arg(long, value_name = "N")]
    limit: Option<usize>,
}

/// Exit 1: bad inputs (parse and compile errors). Exit 2: transfer-time
/// failures such as an unregistered external predicate.
enum CliError {
    Input(String),
    Transfer(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(1),
            CliError::Transfer(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Transfer(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn load_rules(paths: &[String]) -> Result<(Vec<TransferRule>, Vec<ClassDef>), CliError> {
    let mut rules = Vec::new();
    let mut classes = Vec::new();
    for path in paths {
        let text = read(path)?;
        let (mut r, mut c) = parse_rule_file_from(&text, path, rules.len() + classes.len())
            .map_err(input_err)?;
        rules.append(&mut r);
        classes.append(&mut c);
    }
    Ok((rules, classes))
}

fn load_sorts(path: &Option<String>) -> Result<SortHierarchy, CliError> {
    match path {
        Some(p) => parse_sorts(&read(p)?, p).map_err(input_err),
        None => Ok(SortHierarchy::top_only()),
    }
}

fn build_base(files: &RuleFileArgs, direction: &DirectionArgs) -> Result<RuleBase, CliError> {
    let (rules, classes) = load_rules(&files.rules)?;
    let ontology = load_sorts(&files.sorts)?;
    let flow = if direction.reverse {
        Flow::Backward
    } else {
        Flow::Forward
    };
    compile(&rules, &classes, flow, &direction.from, &direction.to, ontology).map_err(input_err)
}

fn load_input(path: &str, expected_lang: &str) -> Result<Vit, CliError> {
    let input = parse_vit(&read(path)?, path).map_err(input_err)?;
    if input.lang() != expected_lang {
        return Err(CliError::Input(format!(
            "{path}: input language `{}` does not match --from `{expected_lang}`",
            input.lang()
        )));
    }
    Ok(input)
}

fn write_out(path: &Option<String>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{p}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_translate(args: &TranslateArgs) -> Result<(), CliError> {
    let base = build_base(&args.files, &args.direction)?;
    let input = load_input(&args.input, &args.direction.from)?;
    let registry = ExternalRegistry::new();
    let results = match args.all {
        Some(limit) => transfer_all(&input, &base, &registry, limit)
            .map_err(|e| CliError::Transfer(e.to_string()))?,
        None => vec![transfer(&input, &base, &registry)
            .map_err(|e| CliError::Transfer(e.to_string()))?],
    };
    if let (Some(path), Some(first)) = (&args.trace, results.first()) {
        fs::write(path, serialize_trace(&first.trace))
            .map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    }
    let text = results
        .iter()
        .map(|r| r.output.to_string())
        .collect::<Vec<_>>()
        .join("%%\n");
    write_out(&args.out, &text)
}

fn run_check(args: &CheckArgs) -> Result<(), CliError> {
    let (rules, classes) = load_rules(&args.files.rules)?;
    let hierarchy = match &args.files.sorts {
        Some(p) => Some(parse_sorts(&read(p)?, p).map_err(input_err)?),
        None => None,
    };
    let findings = check_rules(&rules, &classes, hierarchy.as_ref());
    for finding in &findings {
        println!("{finding}");
    }
    let errors = findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .count();
    println!(
        "{} rule(s), {} class(es): {} error(s), {} warning(s)",
        rules.len(),
        classes.len(),
        errors,
        findings.len() - errors
    );
    if errors > 0 {
        return Err(CliError::Input(format!("{errors} error(s) found")));
    }
    Ok(())
}

fn run_bench_cmd(args: &BenchArgs) -> Result<(), CliError> {
    if args.rule_count.is_none() && args.rules_file.is_empty() {
        return Err(CliError::Input(
            "bench needs --rules <count> or --rules-file <file>".to_owned(),
        ));
    }
    let config = BenchConfig {
        rule_count: args.rule_count.unwrap_or(0),
        rules_files: args.rules_file.clone(),
        sorts_file: args.sorts.clone(),
        input_size: args.input_size,
        runs: args.runs,
        seed: args.seed,
    };
    let report = run_bench(&config).map_err(|e| CliError::Transfer(e.to_string()))?;
    println!("{report}");
    print!("{}", report.key_values());
    Ok(())
}

fn run_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let base = build_base(&args.files, &args.direction)?;
    let input = load_input(&args.input, &args.direction.from)?;
    let result =
        oracle::oracle_transfer(&input, &base).map_err(|e| CliError::Transfer(e.to_string()))?;
    let limit = args.limit.unwrap_or(usize::MAX);
    println!(
        "% {} maximal derivation output(s); most specific cover first",
        result.outputs.len()
    );
    println!("% cover:");
    print!("{}", result.cover);
    for (k, (vit, signature)) in result.outputs.iter().take(limit).enumerate() {
        let sig: Vec<String> = signature
            .iter()
            .map(|s| {
                format!(
                    "({},{},{},{})",
                    s.sl_cardinality, s.cond_count, s.instantiation, s.ordinal
                )
            })
            .collect();
        println!("%% output {} signature [{}]", k + 1, sig.join(" "));
        print!("{vit}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are input problems: exit 1, not clap's 2.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Translate(args) => run_translate(args),
        Command::Check(args) => run_check(args),
        Command::Bench(args) => run_bench_cmd(args),
        Command::Oracle(args) => run_oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

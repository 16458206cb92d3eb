//! End-to-end tests of the `semtrans` binary: exit codes, file formats,
//! and trace replay.

use semtrans::{parse_condition, parse_vit, vit_alpha_equal, LabeledCondition};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn semtrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semtrans"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn translate_paper_input_writes_the_expected_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "out.vit");
    let output = semtrans(&[
        "translate",
        "--rules",
        &fixture("rules_4.rules"),
        "--from",
        "de",
        "--to",
        "en",
        "--input",
        &fixture("vit_3a.vit"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    // The output file re-parses cleanly and matches the derived result.
    let got = parse_vit(&std::fs::read_to_string(&out).unwrap(), "out").unwrap();
    let expected = parse_vit(
        "lang: en\nconds:\nl1:real(l2)\nl2:neg(t1)\nt1:good(i1)\nl3:suit(i1)\n\
         l3:arg2(i1,i3)\nl3:arg3(i1,i2)\nl4:pron(i2)\nl6:ego(i3)\n",
        "expected",
    )
    .unwrap();
    assert!(vit_alpha_equal(&got, &expected));
}

#[test]
fn translate_all_one_equals_plain_translate() {
    let dir = tempfile::tempdir().unwrap();
    let plain = tmp(&dir, "plain.vit");
    let all1 = tmp(&dir, "all1.vit");
    let common = [
        "--rules".to_owned(),
        fixture("rules_4.rules"),
        "--from".to_owned(),
        "de".to_owned(),
        "--to".to_owned(),
        "en".to_owned(),
        "--input".to_owned(),
        fixture("vit_3a.vit"),
    ];
    let mut args: Vec<String> = vec!["translate".to_owned()];
    args.extend(common.iter().cloned());
    args.extend(["--out".to_owned(), plain.to_string_lossy().into_owned()]);
    let a = Command::new(env!("CARGO_BIN_EXE_semtrans")).args(&args).output().unwrap();
    let mut args: Vec<String> = vec!["translate".to_owned()];
    args.extend(common.iter().cloned());
    args.extend([
        "--all".to_owned(),
        "1".to_owned(),
        "--out".to_owned(),
        all1.to_string_lossy().into_owned(),
    ]);
    let b = Command::new(env!("CARGO_BIN_EXE_semtrans")).args(&args).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(
        std::fs::read(&plain).unwrap(),
        std::fs::read(&all1).unwrap()
    );
}

/// Replays a trace file: the union of produced and copied conditions must
/// be exactly the output condition set.
fn replay(trace: &str) -> Vec<LabeledCondition> {
    let mut conds = Vec::new();
    for line in trace.lines() {
        if let Some(rest) = line.strip_prefix("COPY ") {
            conds.push(parse_condition(rest.trim(), "trace", 0).unwrap());
        } else if line.starts_with("APPLY ") {
            let produced = line
                .split("+{")
                .nth(1)
                .and_then(|s| s.split("}+").next())
                .expect("produced set");
            for item in produced.split(", ").filter(|s| !s.is_empty()) {
                conds.push(parse_condition(item.trim(), "trace", 0).unwrap());
            }
        }
    }
    semtrans::canonicalize(conds)
}

#[test]
fn trace_apply_lines_replay_to_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "out.vit");
    let trace = tmp(&dir, "run.trace");
    let output = semtrans(&[
        "translate",
        "--rules",
        &fixture("rules_4_5b.rules"),
        "--from",
        "de",
        "--to",
        "en",
        "--input",
        &fixture("vit_3a.vit"),
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let produced = replay(&std::fs::read_to_string(&trace).unwrap());
    let written = parse_vit(&std::fs::read_to_string(&out).unwrap(), "out").unwrap();
    assert_eq!(produced, written.conds().to_vec());
}

#[test]
fn missing_from_flag_exits_one_with_usage() {
    let output = semtrans(&[
        "translate",
        "--rules",
        &fixture("rules_4.rules"),
        "--to",
        "en",
        "--input",
        &fixture("vit_3a.vit"),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--from"), "{stderr}");
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn unregistered_external_exits_two_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let rules = tmp(&dir, "ext.rules");
    std::fs::write(&rules, "[L:a(X)],[dialog_act(X)] -> [L:b(X)].\n").unwrap();
    let input = tmp(&dir, "in.vit");
    std::fs::write(&input, "lang: de\nconds:\nl1:a(i1)\n").unwrap();
    let output = semtrans(&[
        "translate",
        "--rules",
        rules.to_str().unwrap(),
        "--from",
        "de",
        "--to",
        "en",
        "--input",
        input.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("dialog_act"), "{stderr}");
    assert!(stderr.contains("ext.rules:1"), "{stderr}");
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let rules = tmp(&dir, "bad.rules");
    std::fs::write(&rules, "[] -> [L:x(A)].\n").unwrap();
    let output = semtrans(&[
        "translate",
        "--rules",
        rules.to_str().unwrap(),
        "--from",
        "de",
        "--to",
        "en",
        "--input",
        &fixture("vit_3a.vit"),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("empty SL set"));
}

#[test]
fn check_paper_rules_is_clean() {
    let output = semtrans(&[
        "check",
        "--rules",
        &fixture("paper_all.rules"),
        "--sorts",
        &fixture("sorts.sorts"),
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("0 error(s), 0 warning(s)"), "{stdout}");
}

#[test]
fn check_reports_duplicates_and_bad_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rules = tmp(&dir, "dup.rules");
    std::fs::write(
        &rules,
        "[L:echt(A)] <-> [L:real(A)].\n[L:echt(A)] <-> [L:real(A)].\n",
    )
    .unwrap();
    let output = semtrans(&["check", "--rules", rules.to_str().unwrap()]);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("duplicate"));

    let bad = tmp(&dir, "bad.rules");
    std::fs::write(&bad, "[] -> [L:x(A)].\n").unwrap();
    let output = semtrans(&["check", "--rules", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn bench_small_run_reports_key_values() {
    let output = semtrans(&[
        "bench", "--rules", "50", "--input-size", "8", "--runs", "5", "--seed", "7",
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("mean_ms="), "{stdout}");
    assert!(stdout.contains("seed=7"), "{stdout}");
    assert!(stdout.contains("runs=100"), "{stdout}");
}

#[test]
fn oracle_command_prints_cover_and_outputs() {
    let output = semtrans(&[
        "oracle",
        "--rules",
        &fixture("rules_4.rules"),
        "--from",
        "de",
        "--to",
        "en",
        "--input",
        &fixture("vit_3a.vit"),
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("% cover:"), "{stdout}");
    assert!(stdout.contains("signature ["), "{stdout}");
}

#[test]
fn reverse_translation_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let forward_out = tmp(&dir, "en.vit");
    let back_out = tmp(&dir, "de.vit");
    let output = semtrans(&[
        "translate",
        "--rules",
        &fixture("rules_4.rules"),
        "--from",
        "de",
        "--to",
        "en",
        "--input",
        &fixture("vit_3a.vit"),
        "--out",
        forward_out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let output = semtrans(&[
        "translate",
        "--rules",
        &fixture("rules_4.rules"),
        "--from",
        "en",
        "--to",
        "de",
        "--reverse",
        "--input",
        forward_out.to_str().unwrap(),
        "--out",
        back_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let back = parse_vit(&std::fs::read_to_string(&back_out).unwrap(), "back").unwrap();
    let original = parse_vit(
        &std::fs::read_to_string(fixture("vit_3a.vit")).unwrap(),
        "3a",
    )
    .unwrap();
    assert!(vit_alpha_equal(&back, &original));
}

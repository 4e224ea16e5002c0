//! End-to-end tests of the binary: report lines, exit codes, JSON schema,
//! DOT emission, and fixture round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use abskern::ats::TransitionSystem;
use abskern::lattice::Lattice;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abskern"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).expect("tmp dir creates");
    dir
}

#[test]
fn kernel_report_on_the_sign_lattice() {
    let lat = fixture("sign.lat");
    let out = run(&["kernel", "--lattice", lat.to_str().unwrap(), "--fn", "sq", "--oracle"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("image: ∅, 0, ℤ>0, ℤ≠0, ℤ≥0, ℤ\n"), "got: {text}");
    assert!(text.contains("removed: ℤ<0, ℤ≤0\n"), "got: {text}");
    assert!(text.contains("oracle: agrees\n"), "got: {text}");
}

#[test]
fn bca_table_rows_on_the_sign_lattice() {
    let lat = fixture("sign.lat");
    let out = run(&["bca", "--lattice", lat.to_str().unwrap(), "--fn", "sq"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("ℤ<0 -> ℤ>0\n"), "got: {text}");
    assert!(text.contains("ℤ -> ℤ≥0\n"), "got: {text}");
}

#[test]
fn bca_accepts_a_domain_file() {
    let dir = tmp_dir("bca_domain");
    let dom = dir.join("nonneg.dom");
    std::fs::write(&dom, "ℤ≥0 ℤ\n").unwrap();
    let lat = fixture("sign.lat");
    let out = run(&[
        "bca",
        "--lattice",
        lat.to_str().unwrap(),
        "--domain",
        dom.to_str().unwrap(),
        "--fn",
        "sq",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("(2 elements)"), "got: {text}");
    assert!(text.contains("ℤ≥0 -> ℤ≥0\n"), "got: {text}");
    assert!(text.contains("ℤ -> ℤ≥0\n"), "got: {text}");
}

#[test]
fn partition_kernel_reports_the_merges() {
    let sys = fixture("merge_demo.ts");
    let out = run(&["partition-kernel", "--system", sys.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(
        text.contains("merged: {[2,3],[4,5]} -> [2,3,4,5]; {[6],[7]} -> [6,7]\n"),
        "got: {text}"
    );
    assert!(text.contains("result: {[1],[2,3,4,5],[6,7],[8,9]} (4 blocks)\n"), "got: {text}");
}

#[test]
fn partition_kernel_iterates_to_a_fixpoint() {
    let sys = fixture("merge_demo.ts");
    let out = run(&["partition-kernel", "--system", sys.to_str().unwrap(), "--iterate"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(
        text.contains("round 1 merged: {[2,3],[4,5]} -> [2,3,4,5]; {[6],[7]} -> [6,7]\n"),
        "got: {text}"
    );
    assert!(text.contains("round 2 merged: (none)\n"), "got: {text}");
    assert!(text.contains("rounds: 2\n"), "got: {text}");
}

#[test]
fn cegar_verdict_lines() {
    let split = fixture("split_demo.ts");
    let out = run(&["cegar", "--system", split.to_str().unwrap(), "--heuristic", "egas"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.ends_with("SAFE\n"), "got: {text}");
    assert!(text.contains("iteration 1: 5 blocks, path [1] -> [3,4,5] -> [6], split at k=2 (egas)\n"));
    assert!(text.contains("final: {[1],[2],[3],[4,5],[6],[7]} (6 blocks)\n"));

    let out = run(&["cegar", "--system", split.to_str().unwrap(), "--heuristic", "basic"]);
    let text = stdout_of(&out);
    assert!(text.ends_with("SAFE\n"), "got: {text}");
    assert!(text.contains("iteration 2: 6 blocks, path [2] -> [3,4] -> [6], split at k=2 (basic)\n"));

    let reach = fixture("reach_demo.ts");
    let out = run(&["cegar", "--system", reach.to_str().unwrap(), "--heuristic", "egas"]);
    assert!(out.status.success(), "a found counterexample still exits 0");
    assert!(stdout_of(&out).ends_with("COUNTEREXAMPLE 1,2,3\n"));

    let out = run(&[
        "cegar",
        "--system",
        split.to_str().unwrap(),
        "--heuristic",
        "egas",
        "--max-iters",
        "0",
    ]);
    assert!(out.status.success());
    assert!(stdout_of(&out).ends_with("EXHAUSTED\n"));
}

#[test]
fn cegar_writes_dot_files() {
    let dir = tmp_dir("cegar_dot");
    let split = fixture("split_demo.ts");
    let out = run(&[
        "cegar",
        "--system",
        split.to_str().unwrap(),
        "--heuristic",
        "egas",
        "--dot-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in ["iter01.dot", "final.dot"] {
        let content = std::fs::read_to_string(dir.join(name)).expect("dot file exists");
        assert!(content.starts_with("digraph abstraction {"), "{name} malformed");
    }
}

#[test]
fn preimage_check_default_and_explicit_coarse() {
    let sys = fixture("merge_demo.ts");
    let out = run(&["spurious-preimage-check", "--system", sys.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout_of(&out).ends_with("result: holds\n"));

    let coarse = fixture("merge_partial.ts");
    let out = run(&[
        "spurious-preimage-check",
        "--system",
        sys.to_str().unwrap(),
        "--coarse",
        coarse.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("spurious: 2, witnesses: 2, violations: 0\n"), "got: {text}");
    assert!(text.ends_with("result: holds\n"));
}

#[test]
fn predabs_reports_tables_and_verdicts() {
    let out = run(&["predabs", "--fixture", "loop", "--abstraction", "boolean"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains(
        "table assign: {00} -> {11}, {10} -> {11}, {01} -> {11}, {11} -> {11}\n"
    ));
    assert!(text.contains(
        "table bump: {00} -> {00,01}, {10} -> {00,01}, {01} -> {00}, {11} -> {00}\n"
    ));
    assert!(text.contains("lfp: {00,11}\n"));
    assert!(text.ends_with("verdict: UNREACHABLE\n"));

    let out = run(&["predabs", "--fixture", "loop", "--abstraction", "kernel"]);
    let text = stdout_of(&out);
    assert!(text.contains(
        "kernel image: {}, {00}, {01}, {00,01}, {11}, {01,11}, {00,10,01,11}\n"
    ));
    assert!(text.ends_with("verdict: INCONCLUSIVE\n"));

    let out = run(&["predabs", "--fixture", "loop", "--abstraction", "cartesian"]);
    let text = stdout_of(&out);
    assert!(text.contains("exit: (*,1)\n"));
    assert!(text.ends_with("verdict: INCONCLUSIVE\n"));
}

#[test]
fn json_reports_have_the_schema_and_are_deterministic() {
    let lat = fixture("sign.lat");
    let args =
        ["kernel", "--lattice", lat.to_str().unwrap(), "--fn", "sq", "--oracle", "--json"];
    let out1 = run(&args);
    let out2 = run(&args);
    assert!(out1.status.success());
    assert_eq!(out1.stdout, out2.stdout, "reports must be byte-stable");

    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out1)).expect("valid JSON");
    let top = doc.as_object().unwrap();
    let keys: Vec<&String> = top.keys().collect();
    assert_eq!(keys, ["command", "inputs", "result"]);
    assert_eq!(doc["command"], "kernel");
    let inputs = doc["inputs"].as_object().unwrap();
    assert_eq!(inputs.len(), 1);
    for v in inputs.values() {
        assert!(v.as_str().unwrap().starts_with("sha256:"));
    }
    assert_eq!(doc["result"]["removed"], serde_json::json!(["ℤ<0", "ℤ≤0"]));
    assert_eq!(doc["result"]["oracle"], "agrees");
}

#[test]
fn exit_codes_separate_usage_io_and_semantic_errors() {
    let lat = fixture("sign.lat");

    let out = run(&["kernel", "--lattice", "no_such_file.lat", "--fn", "sq"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("no_such_file.lat"), "message must name the path: {err}");

    let out = run(&["kernel", "--lattice", lat.to_str().unwrap(), "--fn", "missing"]);
    assert_eq!(out.status.code(), Some(4));

    let out = run(&["predabs", "--fixture", "loop", "--abstraction", "boolean", "--modulus", "2"]);
    assert_eq!(out.status.code(), Some(4));

    let sys = fixture("merge_demo.ts");
    let out = run(&["spurious-preimage-check", "--system", sys.to_str().unwrap(), "--max-len", "9"]);
    assert_eq!(out.status.code(), Some(4));

    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tmp_dir("bad_lattice");
    let bad = dir.join("cycle.lat");
    std::fs::write(&bad, "elem a\nelem b\ncover a b\ncover b a\n").unwrap();
    let out = run(&["lattice-check", "--file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "an invalid order is a semantic error");
}

#[test]
fn lattice_check_reports_and_honors_the_seed() {
    let lat = fixture("kite.lat");
    let out = run(&["lattice-check", "--file", lat.to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("5 elements, 5 covers, valid\n"), "got: {text}");
    assert!(text.contains("functions: f\n"));
    assert!(text.contains("probes: 100 ok (seed 7)\n"));
}

#[test]
fn fixture_files_round_trip() {
    for name in ["sign.lat", "kite.lat"] {
        let raw = std::fs::read_to_string(fixture(name)).unwrap();
        let first = Lattice::parse(&raw).expect("fixture parses");
        let text = first.to_text();
        let second = Lattice::parse(&text).expect("serialized form parses");
        assert_eq!(text, second.to_text(), "{name} must round-trip");
    }
    for name in ["merge_demo.ts", "split_demo.ts", "reach_demo.ts", "merge_partial.ts"] {
        let raw = std::fs::read_to_string(fixture(name)).unwrap();
        let (ts, p) = TransitionSystem::parse(&raw).expect("fixture parses");
        let text = ts.to_text(p.as_ref());
        let (ts2, p2) = TransitionSystem::parse(&text).expect("serialized form parses");
        assert_eq!(text, ts2.to_text(p2.as_ref()), "{name} must round-trip");
        assert_eq!(p, p2, "{name} partition must survive the round-trip");
    }
}

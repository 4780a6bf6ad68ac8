//! End-to-end tests of the command-line interface: document round-trips,
//! exit codes, and the worked-example fixtures.

use dqcp::expr::{Expr, NodeKind};
use dqcp_cli::doc;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/examples")
        .join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dqcp"))
}

/// Structural equality of expression trees: same node kinds, shapes,
/// declared signs, and constants, ignoring node identities.
fn structurally_equal(a: &Expr, b: &Expr) -> bool {
    if !a.shape().dims_eq(&b.shape()) || a.sign() != b.sign() {
        return false;
    }
    match (a.kind(), b.kind()) {
        (
            NodeKind::Variable {
                name: n1,
                declared_sign: s1,
            },
            NodeKind::Variable {
                name: n2,
                declared_sign: s2,
            },
        ) => n1 == n2 && s1 == s2,
        (NodeKind::Constant { values: v1 }, NodeKind::Constant { values: v2 }) => v1 == v2,
        (
            NodeKind::Atom {
                atom: k1,
                args: a1,
            },
            NodeKind::Atom {
                atom: k2,
                args: a2,
            },
        ) => {
            k1 == k2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(x, y)| structurally_equal(x, y))
        }
        _ => false,
    }
}

#[test]
fn documents_round_trip_through_print() {
    for name in ["hello-world.json", "gen-eig.json", "min-length.json"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let first = doc::parse_str(&text).unwrap();
        let printed = doc::print_document(&first.document);
        let second = doc::parse_str(&printed).unwrap();
        assert!(
            structurally_equal(&first.problem.objective, &second.problem.objective),
            "{name}: objective changed across a round trip"
        );
        assert_eq!(
            first.problem.constraints.len(),
            second.problem.constraints.len()
        );
        for (c1, c2) in first
            .problem
            .constraints
            .iter()
            .zip(&second.problem.constraints)
        {
            assert_eq!(c1.op, c2.op, "{name}");
            assert!(structurally_equal(&c1.lhs, &c2.lhs), "{name}");
            assert!(structurally_equal(&c1.rhs, &c2.rhs), "{name}");
        }
        // Options survive the round trip too.
        let opts1 = serde_json::to_value(&first.document.options).unwrap();
        let opts2 = serde_json::to_value(&second.document.options).unwrap();
        assert_eq!(opts1, opts2);
    }
}

#[test]
fn gen_eig_document_has_two_matrix_variables() {
    let text = std::fs::read_to_string(fixture("gen-eig.json")).unwrap();
    let parsed = doc::parse_str(&text).unwrap();
    let vars = parsed.problem.variables();
    assert_eq!(vars.len(), 2);
    assert!(vars.iter().all(|v| v.shape().is_matrix()));
    assert_eq!(parsed.problem.constraints.len(), 2);
}

#[test]
fn parse_errors_report_positions_and_names() {
    // Malformed JSON carries a line and column.
    match doc::parse_str("{ \"version\": ") {
        Err(doc::ParseError::Syntax(e)) => {
            assert!(e.line() >= 1);
        }
        _ => panic!("expected a syntax error"),
    }
    // Unknown atoms are named.
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [{"name": "x", "shape": "scalar"}],
        "expressions": {"o": {"atom": "frobnicate", "args": ["x"]}},
        "objective": {"sense": "minimize", "root": "o"}
    }"#;
    match doc::parse_str(text) {
        Err(doc::ParseError::Document(msg)) => {
            assert!(msg.contains("frobnicate"), "{msg}");
        }
        _ => panic!("expected a document error"),
    }
    // Dangling references are named.
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [{"name": "x", "shape": "scalar"}],
        "expressions": {"o": {"atom": "neg", "args": ["missing"]}},
        "objective": {"sense": "minimize", "root": "o"}
    }"#;
    match doc::parse_str(text) {
        Err(doc::ParseError::Document(msg)) => assert!(msg.contains("missing"), "{msg}"),
        _ => panic!("expected a document error"),
    }
    // Reference cycles are rejected.
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [{"name": "x", "shape": "scalar"}],
        "expressions": {
            "a": {"atom": "neg", "args": ["b"]},
            "b": {"atom": "neg", "args": ["a"]}
        },
        "objective": {"sense": "minimize", "root": "a"}
    }"#;
    match doc::parse_str(text) {
        Err(doc::ParseError::Document(msg)) => assert!(msg.contains("cycle"), "{msg}"),
        _ => panic!("expected a cycle error"),
    }
}

#[test]
fn verify_reports_compliance_and_exit_codes() {
    let out = bin()
        .args(["verify", fixture("hello-world.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("DQCP: yes; DCP: no"), "{stdout}");
    assert!(stdout.contains("quasi-composition"), "{stdout}");

    // Dropping the positivity declaration breaks compliance at the ratio.
    let text = std::fs::read_to_string(fixture("hello-world.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["variables"][1]
        .as_object_mut()
        .unwrap()
        .remove("sign");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unsigned.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let out = bin()
        .args(["verify", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("DQCP: no"), "{stdout}");
    assert!(
        stdout.contains("sign is unknown"),
        "failure should name the sign hypothesis: {stdout}"
    );
}

#[test]
fn verify_accepts_pure_dcp_documents() {
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [{"name": "x", "shape": [3]}],
        "expressions": {"o": {"atom": "sum_squares", "args": ["x"]}},
        "objective": {"sense": "minimize", "root": "o"}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dcp.json");
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["verify", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("DQCP: yes; DCP: yes"));
}

#[test]
fn malformed_documents_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = bin()
        .args(["verify", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn solve_hello_world_matches_the_reported_value() {
    let out = bin()
        .args(["solve", fixture("hello-world.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "optimal");
    let value = doc["value"].as_f64().unwrap();
    assert!((value - (-0.4288821220397949)).abs() < 1e-3);
    let x = doc["variables"]["x"].as_f64().unwrap();
    let y = doc["variables"]["y"].as_f64().unwrap();
    assert!((x - 0.5).abs() < 1e-2);
    assert!((y - 1.6487).abs() < 1e-2);
    assert!(doc["tolerances"]["eps"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_reads_stdin() {
    let text = std::fs::read_to_string(fixture("hello-world.json")).unwrap();
    let mut child = bin()
        .args(["solve", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(text.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "optimal");
}

#[test]
fn solve_results_are_stable_across_runs() {
    let run = || {
        let out = bin()
            .args(["solve", fixture("hello-world.json").to_str().unwrap()])
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run(), run(), "result documents differ between identical runs");
}

#[test]
fn solve_infeasible_document_exits_1() {
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [
            {"name": "x", "shape": "scalar"},
            {"name": "y", "shape": "scalar"}
        ],
        "expressions": {
            "e": {"atom": "exp", "args": ["x"]},
            "m1": {"value": -1.0}
        },
        "objective": {"sense": "minimize", "root": "x"},
        "constraints": [
            {"lhs": "e", "op": "<=", "rhs": "y"},
            {"lhs": "y", "op": "==", "rhs": "m1"}
        ]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("infeasible.json");
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["solve", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "infeasible_problem");
}

#[test]
fn solve_non_dqcp_document_exits_2() {
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [
            {"name": "x", "shape": "scalar"},
            {"name": "y", "shape": "scalar"}
        ],
        "expressions": {"r": {"atom": "ratio", "args": ["x", "y"]}},
        "objective": {"sense": "minimize", "root": "r"}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noncompliant.json");
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["solve", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn canon_dump_shows_the_expected_blocks() {
    let out = bin()
        .args([
            "canon",
            fixture("hello-world.json").to_str().unwrap(),
            "--t",
            "-0.4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let dump = String::from_utf8_lossy(&out.stdout);
    assert!(dump.contains("expcone"), "{dump}");
    assert!(dump.contains("rsoc"), "{dump}");
}

#[test]
fn canon_dump_pins_length_suffix_coordinates() {
    let text = r#"{
        "version": "dqcp-problem/1",
        "variables": [{"name": "x", "shape": [10]}],
        "expressions": {"len": {"atom": "length", "args": ["x"]}},
        "objective": {"sense": "minimize", "root": "len"}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("length.json");
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["canon", path.to_str().unwrap(), "--t", "4.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let dump = String::from_utf8_lossy(&out.stdout);
    // zero(6): 1-based coordinates 5..10 pinned to zero.
    assert!(dump.contains("zero(6)"), "{dump}");
    for i in 4..10 {
        assert!(dump.contains(&format!("x[{i}]")), "{dump}");
    }

    // Below every attainable value the dump flags trivial infeasibility.
    let out = bin()
        .args(["canon", path.to_str().unwrap(), "--t", "-2.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("trivially infeasible"));
}

#[test]
fn solve_writes_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let out = bin()
        .args([
            "solve",
            fixture("min-length.json").to_str().unwrap(),
            "--output",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["value"].as_f64().unwrap(), 8.0);
}

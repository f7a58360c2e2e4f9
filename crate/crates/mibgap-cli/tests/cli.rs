//! End-to-end command tests: stable exit codes, byte-stable formats, and
//! the independent checker on real solver artifacts.

use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_mibgap");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> (Option<i32>, String, String) {
    let out = Command::new(BIN).args(args).output().expect("spawn mibgap");
    (
        out.status.code(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn shipped_files_round_trip_byte_stable() {
    for name in [
        "alternating.json",
        "alternating_neg.json",
        "doubleexp_n2.json",
        "reference_m1.json",
    ] {
        let text = std::fs::read_to_string(data(name)).unwrap();
        let inst = mibgap_core::json::parse_instance(&text).unwrap();
        let rendered = match inst {
            mibgap_core::json::Instance::Mib(s) => {
                mibgap_core::json::canonical(&mibgap_core::json::mib_to_json(&s))
            }
            mibgap_core::json::Instance::Mpta(a) => {
                mibgap_core::json::canonical(&mibgap_core::json::mpta_to_json(&a))
            }
            mibgap_core::json::Instance::Pieces { dim, exact, pieces } => {
                mibgap_core::json::canonical(&mibgap_core::json::pieces_to_json(dim, exact, &pieces))
            }
        };
        assert_eq!(rendered, text, "{name} is not in canonical form");
    }
}

#[test]
fn solve_exit_codes_and_reports_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let sat = dir.path().join("sat.json");
    let unsat = dir.path().join("unsat.json");
    std::fs::write(
        &sat,
        r#"{"kind":"mib","form":"standard","m":"1","n":"1",
            "bilinear":[{"a":[["1"]],"b":["0"],"c":"1"}],
            "int_linear":{"rows":[["-1"]],"rhs":["0"]},
            "real_linear":{"rows":[["1"],["-1"]],"rhs":["1","0"]}}"#,
    )
    .unwrap();
    std::fs::write(
        &unsat,
        r#"{"kind":"mib","form":"standard","m":"1","n":"1",
            "bilinear":[{"a":[["1"]],"b":["0"],"c":"1"},{"a":[["-1"]],"b":["0"],"c":"-2"}],
            "int_linear":{"rows":[["-1"]],"rhs":["0"]},
            "real_linear":{"rows":[["1"],["-1"]],"rhs":["1","0"]}}"#,
    )
    .unwrap();

    let (code, out1, _) = run(&["solve", sat.to_str().unwrap(), "--epsilon", "1/2"]);
    assert_eq!(code, Some(0));
    let (code, _, _) = run(&["solve", unsat.to_str().unwrap(), "--epsilon", "1/4"]);
    assert_eq!(code, Some(1));
    // malformed input: exit 3 with a machine-readable diagnostic
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\":\"mib\"").unwrap();
    let (code, _, err) = run(&["solve", bad.to_str().unwrap(), "--epsilon", "1/2"]);
    assert_eq!(code, Some(3));
    assert!(err.contains("\"error\""));
    // nonpositive epsilon: usage error
    let (code, _, _) = run(&["solve", sat.to_str().unwrap(), "--epsilon", "0"]);
    assert_eq!(code, Some(3));
    // determinism: identical reports across runs
    let (_, out2, _) = run(&["solve", sat.to_str().unwrap(), "--epsilon", "1/2"]);
    assert_eq!(out1, out2);
}

#[test]
fn check_validates_solver_artifacts_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let unsat = dir.path().join("unsat.json");
    let report = dir.path().join("report.json");
    std::fs::write(
        &unsat,
        r#"{"kind":"mib","form":"standard","m":"1","n":"1",
            "bilinear":[{"a":[["1"]],"b":["0"],"c":"1"},{"a":[["-1"]],"b":["0"],"c":"-2"}],
            "int_linear":{"rows":[["-1"]],"rhs":["0"]},
            "real_linear":{"rows":[["1"],["-1"]],"rhs":["1","0"]}}"#,
    )
    .unwrap();
    let (code, _, _) = run(&[
        "solve",
        unsat.to_str().unwrap(),
        "--epsilon",
        "1/4",
        "--certificates",
        "-o",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(1));
    let (code, out, _) = run(&["check", unsat.to_str().unwrap(), report.to_str().unwrap()]);
    assert_eq!(code, Some(0), "checker rejected a genuine certificate tree: {out}");

    // without --certificates the unsat report is a summary only; the
    // checker refuses rather than passes vacuously
    let summary = dir.path().join("summary.json");
    let (code, _, _) = run(&[
        "solve",
        unsat.to_str().unwrap(),
        "--epsilon",
        "1/4",
        "-o",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(1));
    let (code, _, _) = run(&["check", unsat.to_str().unwrap(), summary.to_str().unwrap()]);
    assert_eq!(code, Some(3));
}

#[test]
fn check_rejects_perturbed_witness() {
    let witness = std::fs::read_to_string(data("doubleexp_n2_witness.json")).unwrap();
    let perturbed = witness.replace("\"2\",", "\"3\",");
    assert_ne!(witness, perturbed);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad_witness.json");
    std::fs::write(&bad, perturbed).unwrap();
    let (code, _, _) = run(&[
        "check",
        data("doubleexp_n2.json").to_str().unwrap(),
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(1));
}

#[test]
fn dominate_exit_codes() {
    let auto = data("alternating_neg.json");
    let (code, _, _) = run(&[
        "dominate",
        auto.to_str().unwrap(),
        "--gamma",
        "-3/4,-7/4",
        "--epsilon",
        "1/4",
        "--enumerate",
        "7,3",
    ]);
    assert_eq!(code, Some(0));
    // unreachable objectives with an under-approximate family: unknown
    let (code, _, _) = run(&[
        "dominate",
        auto.to_str().unwrap(),
        "--gamma",
        "-5/4,-9/4",
        "--epsilon",
        "1/4",
        "--enumerate",
        "7,3",
    ]);
    assert_eq!(code, Some(2));
    // wrong target dimension: usage error
    let (code, _, _) = run(&[
        "dominate",
        auto.to_str().unwrap(),
        "--gamma",
        "-1",
        "--epsilon",
        "1/4",
        "--enumerate",
        "7,3",
    ]);
    assert_eq!(code, Some(3));
}

#[test]
fn dominate_report_checks_and_tampered_one_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("dom.json");
    let auto = data("alternating_neg.json");
    let (code, _, _) = run(&[
        "dominate",
        auto.to_str().unwrap(),
        "--gamma",
        "-3/4,-7/4",
        "--epsilon",
        "1/4",
        "--enumerate",
        "7,3",
        "-o",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0));
    let (code, _, _) = run(&["check", auto.to_str().unwrap(), report.to_str().unwrap()]);
    assert_eq!(code, Some(0));
    // tamper with the combination
    let text = std::fs::read_to_string(&report).unwrap();
    let bad_text = text.replace("\"-2\"", "\"-3\"");
    assert_ne!(text, bad_text);
    let bad = dir.path().join("dom_bad.json");
    std::fs::write(&bad, bad_text).unwrap();
    let (code, _, _) = run(&["check", auto.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(code, Some(1));
}

#[test]
fn dominate_with_piece_family_files() {
    let dir = tempfile::tempdir().unwrap();
    let auto = data("alternating_neg.json");
    // a single diagonal tuple at the known run value (-1, -2)
    let family = dir.path().join("family.json");
    std::fs::write(
        &family,
        mibgap_core::json::canonical(&mibgap_core::json::pieces_to_json(
            6,
            true,
            &mibgap_core::semilinear::HybridLinearSet {
                dim: 6,
                pieces: vec![mibgap_core::semilinear::LinearSet {
                    base: ["-1", "-2", "-1", "-2", "-1", "-2"]
                        .iter()
                        .map(|s| s.parse().unwrap())
                        .collect(),
                    periods: vec![],
                }],
            },
        )),
    )
    .unwrap();
    let (code, _, _) = run(&[
        "dominate",
        auto.to_str().unwrap(),
        "--gamma",
        "-3/4,-7/4",
        "--epsilon",
        "1/4",
        "--pieces",
        family.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0));
    // an empty family tagged exact certifies the negative answer
    let empty = dir.path().join("empty.json");
    std::fs::write(
        &empty,
        mibgap_core::json::canonical(&mibgap_core::json::pieces_to_json(
            6,
            true,
            &mibgap_core::semilinear::HybridLinearSet::empty(6),
        )),
    )
    .unwrap();
    let (code, _, _) = run(&[
        "dominate",
        auto.to_str().unwrap(),
        "--gamma",
        "-3/4,-7/4",
        "--epsilon",
        "1/4",
        "--pieces",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(1));
}

#[test]
fn verdicts_do_not_depend_on_thread_count() {
    let inst = data("doubleexp_n2.json");
    let (c1, out1, _) = run(&["--threads", "1", "solve", inst.to_str().unwrap(), "--epsilon", "1/8"]);
    let (c2, out2, _) = run(&["--threads", "2", "solve", inst.to_str().unwrap(), "--epsilon", "1/8"]);
    assert_eq!(c1, c2);
    assert_eq!(out1, out2);
}

#[test]
fn oracle_exit_codes() {
    let inst = data("doubleexp_n2.json");
    let (code, out, _) = run(&[
        "oracle",
        inst.to_str().unwrap(),
        "--epsilon",
        "1/8",
        "--xbound",
        "8",
    ]);
    assert_eq!(code, Some(0));
    assert!(out.contains("sat-slack"));
    let (code, out, _) = run(&[
        "oracle",
        inst.to_str().unwrap(),
        "--epsilon",
        "1/8",
        "--xbound",
        "3",
    ]);
    assert_eq!(code, Some(1));
    assert!(out.contains("unsat-within-bound"));
}

#[test]
fn gen_outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen", "hilbert", "--eq", "x1=x1*x1"],
        vec!["gen", "hilbert-unbounded", "--eq", "x1=x1*x1"],
        vec!["gen", "doubleexp", "--n", "3"],
        vec!["gen", "random", "--seed", "7", "--m", "2", "--nreal", "2", "--h", "3"],
    ] {
        let path = dir.path().join("g.json");
        let mut full = args.clone();
        full.push("-o");
        let p = path.to_str().unwrap().to_string();
        full.push(&p);
        let (code, _, err) = run(&full.iter().map(|s| s as &str).collect::<Vec<_>>());
        assert_eq!(code, Some(0), "gen failed: {err}");
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(matches!(
            mibgap_core::json::parse_instance(&text).unwrap(),
            mibgap_core::json::Instance::Mib(_)
        ));
    }
}

#[test]
fn unbounded_instance_is_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unb.json");
    let (code, _, _) = run(&[
        "gen",
        "hilbert-unbounded",
        "--eq",
        "x1=x1*x1",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0));
    let (code, _, err) = run(&["solve", path.to_str().unwrap(), "--epsilon", "1/2"]);
    assert_eq!(code, Some(3));
    assert!(err.contains("unbounded"), "diagnostic should name the cause: {err}");
}

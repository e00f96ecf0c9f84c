//! End-to-end tests of the binary: exit-code contract, document round trips,
//! stdin piping, and golden outputs under fixed seed and tolerance.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_povmtk")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(bin())
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .expect("stdin writes");
    child.wait_with_output().expect("binary finishes")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const HALF: &str = r#"{"dim":1,"outcomes":["x1","x2"],"effects":[[[[0.5,0.0]]],[[[0.5,0.0]]]]}"#;

#[test]
fn gen_trine_matches_golden() {
    let out = run(&["gen", "--kind", "trine"]);
    assert!(out.status.success());
    let expected = std::fs::read_to_string(golden("trine.json")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim_end(), expected.trim_end());
}

#[test]
fn gen_toeplitz_matches_golden() {
    let out = run(&["gen", "--kind", "toeplitz", "--m", "2", "--arcs", "2"]);
    assert!(out.status.success());
    let expected = std::fs::read_to_string(golden("toeplitz_m2.json")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim_end(), expected.trim_end());
}

#[test]
fn gen_random_is_seed_stable() {
    let a = run(&["gen", "--kind", "random", "--dim", "3", "--n", "4", "--seed", "11"]);
    let b = run(&["gen", "--kind", "random", "--dim", "3", "--n", "4", "--seed", "11"]);
    let c = run(&["gen", "--kind", "random", "--dim", "3", "--n", "4", "--seed", "12"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn check_normalized_and_subnormalized() {
    let out = run_stdin(&["check"], HALF);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["normalized"], true);
    assert_eq!(report["verdicts"]["is_pvm"], false);

    let sub = r#"{"dim":1,"outcomes":["x1"],"effects":[[[[0.3,0.0]]]]}"#;
    let out = run_stdin(&["check"], sub);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["psd_ok"], true);
    assert_eq!(report["verdicts"]["normalized"], false);
    assert_eq!(report["verdicts"]["subnormalized"], true);
    assert!((report["verdicts"]["total"][0][0][0].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn cstar_pvm_exits_zero_with_spectral_certificate() {
    let tmp = std::env::temp_dir().join("povmtk_cli_pvm.json");
    let gen = run(&[
        "gen", "--kind", "pvm", "--dim", "2", "--n", "2", "--seed", "3", "--out",
        tmp.to_str().unwrap(),
    ]);
    assert!(gen.status.success());
    let out = run(&["cstar", "--in", tmp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["cstar_extreme"], true);
    assert_eq!(report["certificate"]["kind"], "spectral");
}

#[test]
fn cstar_half_matches_golden_report() {
    let out = run_stdin(&["cstar"], HALF);
    assert_eq!(out.status.code(), Some(1));
    let expected = std::fs::read_to_string(golden("half_cstar_report.json")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim_end(), expected.trim_end());
    // The certificate's first component is inequivalent with an explicit
    // word, and the decomposition is proper.
    let report = stdout_json(&out);
    assert_eq!(report["certificate"]["decomposition"]["proper"], true);
    assert_eq!(report["certificate"]["inequivalence"]["verdict"], "inequivalent");
}

#[test]
fn gen_toeplitz_pipes_into_cstar() {
    let gen = run(&["gen", "--kind", "toeplitz", "--m", "8", "--arcs", "4"]);
    assert!(gen.status.success());
    let out = run_stdin(&["cstar"], &String::from_utf8_lossy(&gen.stdout));
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["cstar_extreme"], false);
    assert_eq!(report["verdicts"]["is_pvm"], false);
}

#[test]
fn malformed_input_exits_two() {
    let out = run_stdin(&["check"], "definitely not json");
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("error report on stderr");
    assert_eq!(err["exit_code"], 2);
    assert!(err["error"].as_str().unwrap().contains("line"));

    // Structurally broken document: header dim disagrees with the data.
    let bad = r#"{"dim": 3, "outcomes": ["a"], "effects": [[[[1.0, 0.0]]]]}"#;
    let out = run_stdin(&["check"], bad);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probe_emits_hand_computed_document() {
    let out = run_stdin(&["probe", "--subset", "x1", "--r", "0.25", "--s", "0.75"], HALF);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!((doc["effects"][0][0][0][0].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert!((doc["effects"][1][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn probe_zhou_pipeline_refutes() {
    let tmp = std::env::temp_dir().join("povmtk_cli_nu.json");
    let probe = run_stdin(
        &["probe", "--subset", "x1", "--r", "0.25", "--s", "0.75", "--out", tmp.to_str().unwrap()],
        HALF,
    );
    assert!(probe.status.success());
    let out = run_stdin(&["zhou", "--in2", tmp.to_str().unwrap()], HALF);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["exists_s"], false);
    assert_eq!(report["certificate"]["word"].as_array().unwrap().len(), 1);
}

#[test]
fn rn_derivative_and_domination_failure() {
    let tmp_nu = std::env::temp_dir().join("povmtk_cli_rn_nu.json");
    std::fs::write(
        &tmp_nu,
        r#"{"dim":1,"outcomes":["x1","x2"],"effects":[[[[0.25,0.0]]],[[[0.25,0.0]]]]}"#,
    )
    .unwrap();
    let tmp_mu = std::env::temp_dir().join("povmtk_cli_rn_mu.json");
    std::fs::write(&tmp_mu, HALF).unwrap();
    let out = run(&[
        "rn", "--in", tmp_nu.to_str().unwrap(), "--in2", tmp_mu.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["dominated"], true);
    // nu = mu/2, so D = I/2 blockwise.
    assert!((report["certificate"]["D"][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let tmp_big = std::env::temp_dir().join("povmtk_cli_rn_big.json");
    std::fs::write(
        &tmp_big,
        r#"{"dim":1,"outcomes":["x1","x2"],"effects":[[[[0.7,0.0]]],[[[0.2,0.0]]]]}"#,
    )
    .unwrap();
    let out = run(&[
        "rn", "--in", tmp_big.to_str().unwrap(), "--in2", tmp_mu.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["dominated"], false);
    assert_eq!(report["verdicts"]["violating_outcome"], "x1");
}

#[test]
fn dilate_km_equiv_iso_choi_extreme_smoke() {
    let out = run_stdin(&["dilate"], HALF);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["dilation_dim"], 2);
    assert_eq!(report["certificate"]["blocks"][0][1], 1);

    let out = run_stdin(&["km"], HALF);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["terms"], 2);

    let tmp = std::env::temp_dir().join("povmtk_cli_half.json");
    std::fs::write(&tmp, HALF).unwrap();
    let out = run_stdin(&["equiv", "--in2", tmp.to_str().unwrap()], HALF);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["verdict"], "equivalent");

    let out = run_stdin(&["iso", "--in2", tmp.to_str().unwrap()], HALF);
    assert_eq!(out.status.code(), Some(0));

    let out = run_stdin(&["choi"], HALF);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["is_cp"], true);
    assert_eq!(report["verdicts"]["is_homomorphism"], false);

    let out = run_stdin(&["extreme"], HALF);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["extreme"], false);
    assert!(report["certificate"]["witness"].is_array());
}

#[test]
fn tol_flag_reaches_the_report() {
    let out = run_stdin(&["check", "--tol", "1e-6"], HALF);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["tolerance"]["eps_eq"].as_f64().unwrap(), 1e-6);
    assert_eq!(report["tolerance"]["eps_rank"].as_f64().unwrap(), 1e-6);
}

#[test]
fn iso_detects_permuted_relabeled_copy() {
    let gen = run(&["gen", "--kind", "random", "--dim", "2", "--n", "3", "--seed", "21"]);
    let doc: serde_json::Value = serde_json::from_slice(&gen.stdout).unwrap();
    // Rotate outcomes and effects by one position.
    let mut permuted = doc.clone();
    let outcomes = doc["outcomes"].as_array().unwrap();
    let effects = doc["effects"].as_array().unwrap();
    permuted["outcomes"] = serde_json::json!([outcomes[1], outcomes[2], outcomes[0]]);
    permuted["effects"] = serde_json::json!([effects[1], effects[2], effects[0]]);
    let tmp = std::env::temp_dir().join("povmtk_cli_perm.json");
    std::fs::write(&tmp, serde_json::to_string(&permuted).unwrap()).unwrap();
    let out = run_stdin(
        &["iso", "--in2", tmp.to_str().unwrap()],
        &String::from_utf8_lossy(&gen.stdout),
    );
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["isomorphic"], true);
    assert_eq!(report["certificate"]["pairs"].as_array().unwrap().len(), 3);
}

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocbv"))
        .args(args)
        .env_remove("OCBV_SEED")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn stdout(args: &[&str]) -> String {
    String::from_utf8(run(args).stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    serde_json::from_slice(&run(&all).stdout).expect("json report")
}

fn golden(name: &str, args: &[&str]) {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    let want = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    assert_eq!(stdout(args), want, "golden {name}");
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&["validate", &fixture("frobenius.json")]), 0);
    assert_eq!(code(&["validate", &fixture("window_violation.json")]), 1);
    assert_eq!(code(&["validate", &fixture("malformed.json")]), 2);
    assert_eq!(code(&["validate", &fixture("missing.json")]), 2);
    let r = json(&["validate", &fixture("window_violation.json")]);
    let msg = r["result"]["violations"][0]["message"].as_str().unwrap();
    assert!(msg.contains("(p, q)"), "{msg}");
}

#[test]
fn axioms_config_and_mutation() {
    assert_eq!(code(&["axioms", "--trials", "0"]), 2);
    assert_eq!(code(&["axioms", "--max-basis", "0"]), 2);
    assert_eq!(code(&["axioms", "--degree-min", "2", "--degree-max", "1"]), 2);
    let r = json(&["axioms", "--trials", "30", "--mutate"]);
    assert_eq!(r["status"], "fail");
    let rep = &r["result"]["reproducers"][0];
    assert!(rep["identity"].is_string());
    assert!(rep["spec"].is_object());
}

#[test]
fn master_equations() {
    let spec = fixture("frobenius.json");
    assert_eq!(code(&["cme", &spec, &fixture("zero.json")]), 0);
    assert_eq!(code(&["qme", &spec, &fixture("zero.json")]), 0);
    assert_eq!(code(&["cme", &spec, &fixture("frobenius_m.json")]), 0);
    assert_eq!(code(&["qme", &spec, &fixture("frobenius_m.json")]), 0);
    assert_eq!(code(&["cme", &spec, &fixture("frobenius_m_perturbed.json")]), 1);
    assert_eq!(code(&["qme", &spec, &fixture("frobenius_m_perturbed.json")]), 1);
    assert_eq!(code(&["cme", &spec, &fixture("misgraded.json")]), 2);
    assert_eq!(code(&["cme", &spec, &fixture("malformed.json")]), 2);
    assert_eq!(code(&["--hbar-half-min", "3", "--hbar-half-max", "1", "cme", &spec, &fixture("zero.json")]), 2);
    let r = json(&["cme", &spec, &fixture("frobenius_m_perturbed.json")]);
    assert_eq!(r["result"]["lowest"]["lambda"], 6);
    assert_eq!(r["result"]["lowest"]["sqrt_hbar"], 0);
}

#[test]
fn ainf_modes() {
    let spec = fixture("frobenius.json");
    assert_eq!(code(&["ainf", &spec, &fixture("frobenius_chain.json"), "--check"]), 0);
    assert_eq!(code(&["ainf", &spec, &fixture("frobenius_chain_perturbed.json"), "--check"]), 1);
    assert_eq!(code(&["ainf", &spec, &fixture("frobenius_chain.json")]), 2);
    let graded = fixture("graded.json");
    let cochains = fixture("nonassoc_cochains.json");
    assert_eq!(code(&["ainf", &graded, &cochains, "--check"]), 1);
    let r = json(&["ainf", &graded, &cochains, "--check"]);
    let bad: Vec<u64> = r["result"]["arities"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["zero"] == false)
        .map(|a| a["arity"].as_u64().unwrap())
        .collect();
    assert_eq!(bad, vec![3]);
    assert_eq!(code(&["ainf", &graded, &cochains, "--from-hat"]), 2);
    let err = json(&["ainf", &graded, &cochains, "--from-hat"]);
    assert!(err["error"].as_str().unwrap().contains("degree 1"));
}

#[test]
fn ainf_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture("frobenius.json");
    let hat = json(&["ainf", &spec, &fixture("frobenius_chain.json"), "--to-hat"]);
    let hat_path = dir.path().join("hat.json");
    std::fs::write(&hat_path, hat["result"].to_string()).unwrap();
    let hat_path = hat_path.display().to_string();
    assert_eq!(code(&["ainf", &spec, &hat_path, "--check"]), 0);
    let back = json(&["ainf", &spec, &hat_path, "--from-hat"]);
    let original: Value = serde_json::from_str(&std::fs::read_to_string(fixture("frobenius_chain.json")).unwrap()).unwrap();
    assert_eq!(back["result"], original);
}

#[test]
fn linf_check() {
    let spec = fixture("so3.json");
    assert_eq!(code(&["linf", &spec, &fixture("zero.json"), "--check"]), 0);
    assert_eq!(code(&["linf", &spec, &fixture("so3_sc.json"), "--check"]), 0);
    assert_eq!(code(&["linf", &spec, &fixture("so3_sc.json")]), 0);
    assert_eq!(code(&["linf", &spec, &fixture("so3_sc_broken.json"), "--check"]), 1);
    assert_eq!(code(&["linf", &spec, &fixture("frobenius_m.json")]), 2);
}

#[test]
fn moduli_queries() {
    assert_eq!(stdout(&["moduli", "dim", "0", "1", "0", "4"]).trim(), "1");
    assert_eq!(stdout(&["moduli", "stable", "0", "0", "2", "0"]).trim(), "false");
    assert_eq!(code(&["moduli", "dim", "0", "0", "2", "0"]), 2);
    assert_eq!(code(&["moduli", "chi", "0", "0", "0", "2"]), 2);
    assert_eq!(code(&["moduli", "rho", "0", "2", "0", "3"]), 2);
    assert_eq!(code(&["moduli", "bookkeep", "0", "0", "3", "0"]), 0);
    assert_eq!(code(&["moduli", "bookkeep", "1", "1", "0", "0"]), 1);
    assert_eq!(code(&["moduli", "bookkeep", "1", "1", "0", "0", "--co-weight", "1"]), 0);
    let r = json(&["moduli", "boundary", "1", "0", "1", "0"]);
    let terms = r["result"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 1);
    assert_eq!(terms[0]["kind"], "DeltaC");
}

#[test]
fn rho_command() {
    assert_eq!(stdout(&["rho", "--profile", "3", "--offsets", "1"]).trim(), "1");
    assert_eq!(stdout(&["rho", "--profile", "2", "--offsets", "1"]).trim(), "-1");
    assert_eq!(stdout(&["rho", "--profile", "2,2", "--boundary", "1,0"]).trim(), "-1");
    assert_eq!(code(&["rho", "--profile", "2,2", "--boundary", "0,0"]), 2);
}

#[test]
fn golden_outputs() {
    golden("moduli_boundary_1_0_1_0.txt", &["moduli", "boundary", "1", "0", "1", "0"]);
    golden("moduli_boundary_0_2_0_2.txt", &["moduli", "boundary", "0", "2", "0", "2"]);
    golden("moduli_rho_0_2_1_5.txt", &["moduli", "rho", "0", "2", "1", "5", "--profile", "2,3"]);
    golden(
        "ainf_to_hat_frobenius.txt",
        &["ainf", &fixture("frobenius.json"), &fixture("frobenius_chain.json"), "--to-hat"],
    );
    golden(
        "cme_perturbed.txt",
        &["cme", &fixture("frobenius.json"), &fixture("frobenius_m_perturbed.json")],
    );
    golden("linf_so3.txt", &["linf", &fixture("so3.json"), &fixture("so3_sc.json")]);
}

#[test]
fn json_reports_are_deterministic() {
    let a = run(&["--json", "--seed", "11", "--trials", "25", "axioms"]);
    let b = run(&["--json", "--seed", "11", "--trials", "25", "axioms"]);
    assert_eq!(a.stdout, b.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_ocbv"))
        .args(["--json", "--trials", "25", "axioms"])
        .env("OCBV_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(a.stdout, env.stdout);
    let c = run(&["--json", "--seed", "12", "--trials", "25", "axioms"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn reports_carry_version_and_config() {
    let r = json(&["moduli", "weights", "0", "0", "4", "0"]);
    assert_eq!(r["tool"], "ocbv");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["command"], "moduli");
    assert_eq!(r["config"]["options"]["type"], serde_json::json!([0, 0, 4, 0]));
    assert_eq!(r["result"]["lambda_exp"], 4);
    assert_eq!(r["result"]["half_hbar_exp"], 2);
}

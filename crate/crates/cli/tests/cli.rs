//! End-to-end checks of the `cim` binary: fixture generation, model
//! validation, influence verdicts, counterfactuals, CFEs, explanations and
//! rendering, all through the real process boundary.

use std::path::Path;
use std::process::{Command, Output};

fn cim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cim"))
        .args(args)
        .env("CIM_FIXTURES", dir)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

struct Fixtures {
    dir: tempfile::TempDir,
}

impl Fixtures {
    fn generate() -> Fixtures {
        let dir = tempfile::tempdir().unwrap();
        let out = cim(
            &["fixtures", "--out", dir.path().to_str().unwrap()],
            dir.path(),
        );
        let v = json_of(&out);
        assert!(v["written"].as_array().unwrap().len() >= 8);
        Fixtures { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }
}

#[test]
fn fixtures_validate_and_roundtrip() {
    let fx = Fixtures::generate();
    for name in [
        "sprinkler",
        "smoking",
        "aspirin",
        "decision_list",
        "scoring",
        "decision_tree",
        "hiring",
        "location",
        "location_quantum",
    ] {
        let out = cim(&["validate", "--model", name], fx.path());
        let v = json_of(&out);
        assert_eq!(v["ok"], true, "{name} failed validation");
    }
}

#[test]
fn influence_verdict_matches_example() {
    let fx = Fixtures::generate();
    let out = cim(
        &[
            "influence",
            "--model",
            "hiring",
            "--input",
            "Claire",
            "--output",
            "Bob",
        ],
        fx.path(),
    );
    let v = json_of(&out);
    assert_eq!(v["verdict"], "structural_no_influence");
    // Alice's own state passes through both verbs: witness expected.
    let out = cim(
        &[
            "influence", "--model", "hiring", "--input", "Alice", "--output", "Alice",
        ],
        fx.path(),
    );
    let v = json_of(&out);
    assert_eq!(v["verdict"], "influence");
}

#[test]
fn counterfactual_matches_oracle_value() {
    let fx = Fixtures::generate();
    let spec = fx.path().join("cf.json");
    std::fs::write(
        &spec,
        r#"{"worlds":[{"observe":{"A":"n","H":"y"}},{"do":{"A":"y"},"query":["H"]}]}"#,
    )
    .unwrap();
    let out = cim(
        &[
            "counterfactual",
            "--model",
            "aspirin",
            "--spec",
            spec.to_str().unwrap(),
            "--exogenous",
            "U_A,U_H",
        ],
        fx.path(),
    );
    let v = json_of(&out);
    let entries = v["distribution"]["matrix"]["entries"].as_array().unwrap();
    let p_y = entries[0][0].as_f64().unwrap();
    assert!((p_y - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn explain_decision_list_outputs_interpreted_proof() {
    let fx = Fixtures::generate();
    let out = cim(
        &[
            "explain",
            "--model",
            "decision_list",
            "--input",
            r#"{"S":"female","A":"22","P":"2"}"#,
            "--target",
            "yes",
        ],
        fx.path(),
    );
    let v = json_of(&out);
    assert_eq!(v["proved"], true);
    assert_eq!(v["proof"]["all_interpreted"], true);
    assert_eq!(v["proof"]["epsilon_total"], 0.0);
}

#[test]
fn cfe_reports_minimal_alternatives() {
    let fx = Fixtures::generate();
    let out = cim(
        &[
            "cfe",
            "--model",
            "decision_list",
            "--input",
            r#"{"S":"female","A":"30","P":"3"}"#,
            "--target",
            "yes",
            "--distance",
            "hamming",
        ],
        fx.path(),
    );
    let v = json_of(&out);
    assert_eq!(v["distance"], 1.0);
    assert!(!v["alternatives"].as_array().unwrap().is_empty());
}

#[test]
fn condition_produces_distribution() {
    let fx = Fixtures::generate();
    let out = cim(
        &["condition", "--model", "smoking", "--observe", "A=old"],
        fx.path(),
    );
    let v = json_of(&out);
    let entries = v["distribution"]["matrix"]["entries"].as_array().unwrap();
    let total: f64 = entries.iter().map(|r| r[0].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn render_is_deterministic_dot() {
    let fx = Fixtures::generate();
    let a = cim(&["render", "--model", "sprinkler"], fx.path());
    let b = cim(&["render", "--model", "sprinkler"], fx.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("sprinkler activation"));
}

#[test]
fn domain_errors_exit_one_usage_errors_two() {
    let fx = Fixtures::generate();
    // Unknown model file: domain error.
    let out = cim(&["validate", "--model", "nope"], fx.path());
    assert_eq!(out.status.code(), Some(1));
    // Unknown flag: usage error from the parser.
    let out = cim(&["validate", "--nonsense"], fx.path());
    assert_eq!(out.status.code(), Some(2));
    // Zero-probability conditioning: domain error.
    let out = cim(
        &["condition", "--model", "smoking", "--observe", "A=nosuch"],
        fx.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn intervene_do_runs_on_network_fixture() {
    let fx = Fixtures::generate();
    let out = cim(
        &["intervene", "--model", "smoking", "--do", "S=abstains"],
        fx.path(),
    );
    let v = json_of(&out);
    assert_eq!(v["note"], "post-intervention model");
    assert!(v["semantics"]["matrix"]["entries"].is_array());
}

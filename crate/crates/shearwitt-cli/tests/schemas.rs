//! Command output validates against the published schemas.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&v).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn output(args: &[&str]) -> Value {
    let o = Command::new(env!("CARGO_BIN_EXE_shearwitt")).args(args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, x: &Value) {
    let errors: Vec<String> = v.iter_errors(x).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn windows_match_schema() {
    let v = schema("window.schema.json");
    for frame in ["witt-n(F2,2)", "witt-prec(F4,2)", "sheared(F2[t]/(t^2),2,6)"] {
        for window in ["unit", "twist", "ordinary", "supersingular"] {
            assert_valid(&v, &output(&["display", "new", "--frame", frame, "--window", window]));
        }
    }
    assert!(!v.is_valid(&serde_json::json!({ "frame_id": "witt-n(F2,1)", "r0": 1 })));
}

#[test]
fn morphisms_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("w.json");
    let o = Command::new(env!("CARGO_BIN_EXE_shearwitt"))
        .args(["display", "new", "--frame", "sheared(F2,2,5)", "--window", "ordinary", "-o"])
        .arg(&f)
        .output()
        .unwrap();
    assert!(o.status.success());
    let t = output(&["display", "transport", f.to_str().unwrap()]);
    assert_valid(&schema("morphism.schema.json"), &t["morphism"]);
    assert_valid(&schema("window.schema.json"), &t["target"]);
}

#[test]
fn corpus_matches_schema() {
    assert_valid(&schema("corpus.schema.json"), &output(&["corpus", "show"]));
}

#[test]
fn report_matches_schema() {
    assert_valid(&schema("report.schema.json"), &output(&["verify", "witt-laws", "--samples", "10"]));
}

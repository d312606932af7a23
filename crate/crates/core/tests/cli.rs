use std::path::Path;
use std::process::{Command, Output};

const HFL: &str = "scenario = \"hfl_case_one\"\nk = 2\nsecagg = \"mask\"\nkey_bits = 256\n\
                   [params]\nn_estimators = 2\nmax_depth = 2\nmax_bin = 6\n";
const VFL: &str = "scenario = \"vfl_case_two\"\nk = 2\nkey_bits = 256\n\
                   [params]\nn_estimators = 2\nmax_depth = 2\nmax_bin = 6\n";

fn fedgbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedgbt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_flag_exits_1() {
    assert_eq!(fedgbt(&["compare", "--bogus"]).status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let o = fedgbt(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("inspect-transcript"));
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = fedgbt(&["compare", "--config", path(&missing), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(fedgbt(&["synth", "--seed", "5", "--out", path(d)]).status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
}

#[test]
fn keygen_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedgbt(&["keygen", "--key-bits", "256", "--seed", "2", "--out", path(dir.path())]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("256-bit"));
    assert!(dir.path().join("paillier.pub").is_file());
    assert!(dir.path().join("paillier.key").is_file());
}

#[test]
fn federated_train_scans_clean_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hfl.toml");
    std::fs::write(&cfg, HFL).unwrap();
    let out = dir.path().join("run");
    let o = fedgbt(&["train", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("transcript.jsonl: clean"));

    let transcript = out.join("transcript.jsonl");
    let o = fedgbt(&["inspect-transcript", path(&transcript), "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("clean"));

    let model = out.join("model.json");
    let eval_out = dir.path().join("eval");
    let o = fedgbt(&["evaluate", "--model", path(&model), "--config", path(&cfg), "--out", path(&eval_out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(eval_out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics.as_array().unwrap().len(), 2);
    assert_eq!(stdout(&o).matches("auc=").count(), 2);
}

#[test]
fn vertical_train_writes_assembled_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vfl.toml");
    std::fs::write(&cfg, VFL).unwrap();
    let out = dir.path().join("run");
    let o = fedgbt(&["train", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.json", "vfl_model.json", "transcript.jsonl"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(stdout(&o).contains("transcript.jsonl: clean"));
}

#[test]
fn transcript_of_other_protocol_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (hfl, vfl) = (dir.path().join("hfl.toml"), dir.path().join("vfl.toml"));
    std::fs::write(&hfl, HFL).unwrap();
    std::fs::write(&vfl, VFL).unwrap();
    let out = dir.path().join("run");
    assert!(fedgbt(&["train", "--config", path(&vfl), "--out", path(&out)]).status.success());
    let o = fedgbt(&["inspect-transcript", path(&out.join("transcript.jsonl")), "--config", path(&hfl)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hfl.toml");
    std::fs::write(&cfg, HFL).unwrap();
    let out = dir.path().join("cmp");
    let o = fedgbt(&["compare", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in fedgbt::orchestrator::REPORT_FILES.iter().chain(&["timing.json"]) {
        assert!(out.join(f).is_file(), "{f}");
    }
}

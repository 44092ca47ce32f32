use std::path::Path;
use std::process::{Command, Output};

fn hillplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hillplan")).args(args).env_remove("OPENAI_API_KEY").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_kind(o: &Output) -> String {
    let line = String::from_utf8(o.stderr.clone()).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap_or_else(|_| panic!("not json: {line}"));
    v["error"].as_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "name = \"x\"\ntasks = [\"watch_tv\"]\nrepetitions = 2\n[backend]\nkind = \"first-option\"\n",
    );
    let transcripts = dir.path().join("tr");
    let o = hillplan(&["run", "--config", &cfg, "--transcripts", transcripts.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("task,configuration,"), "{out}");
    assert!(out.contains("watch_tv,NG-none,0,2,"));
    let r = hillplan(&["report", "--transcripts", transcripts.to_str().unwrap(), "--format", "csv"]);
    assert!(r.status.success());
    assert_eq!(stdout(&r), out);
}

#[test]
fn bad_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "name = \"x\"\nrepetitions = 0\n");
    let o = hillplan(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_kind(&o), "config");
    let cfg = write(dir.path(), "d.toml", "name = \"x\"\nunknown_key = 1\n");
    assert_eq!(hillplan(&["run", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(hillplan(&["oracle", "--task", "nope"]).status.code(), Some(2));
}

#[test]
fn missing_credentials_exit_with_code_four() {
    let o = hillplan(&[
        "run",
        "--config",
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/baseline.toml"),
        "--task",
        "watch_tv",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_kind(&o), "backend");
}

#[test]
fn oracle_and_validate_agree() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    let o = hillplan(&["oracle", "--task", "watch_tv", "--plan-out", plan.to_str().unwrap()]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["min_length"], 3);
    assert_eq!(report["outcome"], "solved");
    let v = hillplan(&["validate", "--task", "watch_tv", "--plan", plan.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&v)).unwrap();
    assert_eq!(report["executable"], true);
    assert_eq!(report["classification"], "Success");
}

#[test]
fn env_check_reports_counts_and_rejects_broken_documents() {
    let desk = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/desk_home.json");
    let o = hillplan(&["env", "check", desk]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["objects"], 62);
    let dir = tempfile::tempdir().unwrap();
    let bad =
        write(dir.path(), "bad.json", r#"{"nodes":[{"id":1,"name":"tv","properties":[],"states":["ON"]}],"edges":[]}"#);
    let o = hillplan(&["env", "check", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_kind(&o), "environment");
}

#[test]
fn gen_guide_with_a_scripted_backend() {
    let dir = tempfile::tempdir().unwrap();
    let b = write(dir.path(), "b.toml", "kind = \"scripted\"\nplan = []\nguide = \"walk | tv\\nswitchon | tv\"\n");
    let o = hillplan(&["gen-guide", "--task", "watch_tv", "--backend-config", &b]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "walk | tv\nswitchon | tv\n");
}

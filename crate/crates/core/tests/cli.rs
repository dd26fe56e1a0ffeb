use std::path::PathBuf;
use std::process::Command;

fn mclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mclab"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write(dir: &tempfile::TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn capacity_prints_report() {
    let out = mclab().args(["capacity", "--config"]).arg(config("generic_iid.json")).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("threshold_p = 0.86096"));
    assert!(text.contains("region.feasible = true"));
}

#[test]
fn sweep_writes_files_and_honours_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        r#"{ "model": { "type": "identical_rows", "k": 2, "q": 2 }, "n": 20, "trials": 30,
             "grid": { "p_min": 0.2, "p_max": 1.0, "steps": 5 }, "seed": 1 }"#,
    );
    let run = |seed: &str, sub: &str| {
        let status = mclab()
            .args(["sweep", "--format", "csv", "--jobs", "2", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(dir.path().join(sub).join("sweep.csv")).unwrap()
    };
    assert_eq!(run("4", "a"), run("4", "b"));
    assert!(!dir.path().join("a").join("summary.txt").exists());
}

#[test]
fn simulate_oracle_and_estimate_run() {
    let tiny = config("oracle_tiny.json");
    for sub in ["simulate", "oracle", "estimate"] {
        let out = mclab().arg(sub).arg("--config").arg(&tiny).output().unwrap();
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str], body: Option<&str>| {
        let mut cmd = mclab();
        cmd.args(args);
        if let Some(b) = body {
            cmd.arg("--config").arg(write(&dir, b));
        }
        cmd.output().unwrap().status.code().unwrap()
    };
    assert_eq!(code(&["bogus"], None), 1);
    assert_eq!(code(&["capacity"], None), 1);
    assert_eq!(code(&["capacity"], Some("{ \"n\": 3,")), 1);
    let periodic = r#"{ "model": { "type": "markov", "k": 1, "q": 2, "transition": [0, 1, 1, 0] }, "n": 3 }"#;
    assert_eq!(code(&["capacity"], Some(periodic)), 1);
    let zero = r#"{ "model": { "type": "iid", "k": 2, "q": 2, "pmf": [0.4, 0.1, 0.1, 0.4] },
                    "dmc": { "type": "symmetric", "flip": 0.5 }, "n": 3 }"#;
    assert_eq!(code(&["capacity"], Some(zero)), 2);
    let big = r#"{ "model": { "type": "iid", "k": 2, "q": 2, "pmf": [0.4, 0.1, 0.1, 0.4] }, "n": 30, "p": 0.5 }"#;
    assert_eq!(code(&["oracle"], Some(big)), 3);
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "{\n  \"model\": { \"type\": \"iid\", \"k\": 1, \"q\": 2, \"pmf\": [0.5, 0.5] },\n  \"n\": 0\n}",
    );
    let out = mclab().arg("capacity").arg("--config").arg(cfg).output().unwrap();
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

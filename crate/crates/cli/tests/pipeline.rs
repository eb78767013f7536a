use std::path::Path;
use std::process::{Command, Output};

fn vmeme(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vmeme"))
        .arg("-w")
        .arg(ws)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn status_of<'a>(out: &'a str, stage: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{stage}: ")))
        .unwrap_or_else(|| panic!("no line for {stage} in\n{out}"))
}

#[test]
fn demo_pipeline_is_incremental() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let first = stdout(&vmeme(ws, &["demo", "--run"]));
    assert_eq!(status_of(&first, "report"), "built");
    assert!(ws.join("config.toml").exists());
    for f in ["timeline.csv", "remix.csv", "zipf.csv", "influence.svg", "pr_curve.csv", "prediction.csv"] {
        assert!(ws.join("report").join(f).exists(), "{f}");
    }

    let again = stdout(&vmeme(ws, &["pipeline"]));
    for line in again.lines() {
        assert!(line.ends_with("up-to-date"), "{line}");
    }

    let retuned = stdout(&vmeme(ws, &["--tau", "9", "pipeline"]));
    for s in ["ingest", "shots", "features", "index"] {
        assert_eq!(status_of(&retuned, s), "up-to-date");
    }
    for s in ["detect", "graph", "topics", "predict", "report"] {
        assert_eq!(status_of(&retuned, s), "built");
    }

    let influence = stdout(&vmeme(ws, &["--tau", "9", "influence", "--top", "3"]));
    assert_eq!(influence.lines().count(), 4);
    let words = stdout(&vmeme(ws, &["--tau", "9", "topics", "annotate", "--meme", "0", "--top", "5"]));
    assert_eq!(words.lines().count(), 5);
}

#[test]
fn missing_stage_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = vmeme(dir.path(), &["detect"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`ingest`") || err.contains("`features`") || err.contains("`index`"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), "tua = 3.0\n").unwrap();
    let o = vmeme(dir.path(), &["ingest"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("tua"));
}

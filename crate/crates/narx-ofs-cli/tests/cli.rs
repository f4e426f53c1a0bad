//! End-to-end checks of the command-line surface.

use std::path::Path;
use std::process::{Command, Output};

fn narx_ofs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_narx-ofs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn identify_writes_a_complete_bundle_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = narx_ofs(&[
        "identify",
        "--system",
        "S2",
        "--algo",
        "oif",
        "--seed",
        "3",
        "--n",
        "600",
        "--split",
        "420",
        "--xi-max",
        "10",
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("chosen xi = 4"), "{text}");
    assert!(text.contains("exact_fitting"), "{text}");
    for file in [
        "dataset.csv",
        "dataset.json",
        "sweep.csv",
        "sweep.json",
        "trace.jsonl",
        "model.json",
        "outcome.json",
        "metadata.json",
    ] {
        assert!(run.join(file).exists(), "missing {file}");
    }

    // The run can be replayed from its own persisted dataset; the sidecar
    // keeps the system identity, so classification still happens.
    let replay = narx_ofs(&[
        "identify",
        "--data",
        run.join("dataset.csv").to_str().unwrap(),
        "--algo",
        "oif",
        "--xi-max",
        "10",
    ]);
    assert!(replay.status.success());
    let replay_text = stdout(&replay);
    assert!(replay_text.contains("chosen xi = 4"));
    assert!(replay_text.contains("exact_fitting"), "{replay_text}");

    // Frequency table over the persisted sweep: true terms all-ones from xi*.
    let freq = narx_ofs(&["freq", "--run", run.to_str().unwrap()]);
    assert!(freq.status.success());
    let table = stdout(&freq);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5, "4 true terms + header: {table}");

    // And the report summarizes it.
    let report = narx_ofs(&["report", "--run", run.to_str().unwrap()]);
    assert!(report.status.success());
    assert!(stdout(&report).contains("chosen xi 4"));
}

#[test]
fn sweep_prints_the_criterion_table() {
    let out = narx_ofs(&[
        "sweep", "--system", "S2", "--algo", "osf", "--seed", "1", "--n", "500", "--split",
        "350", "--xi-min", "2", "--xi-max", "6",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,J,E,AIC,BIC,FPE,LILC,boundary_flag"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn classify_reports_the_outcome_taxonomy() {
    let out = narx_ofs(&[
        "classify",
        "--system",
        "S8",
        "--found",
        "u(k-1),u(k-2),u(k-1)*u(k-2),u(k-1)^3,y(k-1)",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["label"], "over_fitting");
    assert_eq!(json["spurious"][0], "y(k-1)");
}

#[test]
fn config_file_fills_unset_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
system = "S2"
algorithm = "osf"
seed = 9
n = 500
split_index = 350
xi_min = 2
xi_max = 5
"#,
    )
    .unwrap();
    // Flag overrides the config's xi_max; everything else comes from it.
    let out = narx_ofs(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--xi-max",
        "4",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 4, "header + xi 2..4");
}

#[test]
fn exit_codes_follow_the_contract() {
    // Config error -> 2, nothing written.
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("never");
    let out = narx_ofs(&[
        "identify",
        "--system",
        "S1",
        "--xi-min",
        "9",
        "--xi-max",
        "5",
        "--out",
        run.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new(&run).join("dataset.csv").exists());

    let out = narx_ofs(&["identify", "--system", "S99"]);
    assert_eq!(out.status.code(), Some(2));

    // Unstable simulation -> 3 (S6 diverges on seed 3).
    let out = narx_ofs(&["simulate", "--system", "S6", "--seed", "3", "--out",
        dir.path().join("s6.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

//! The `quark` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 18] = [
    "--window", "8", "--step", "8", "--basis", "6", "--depth", "2", "--epochs", "1",
    "--set", "electrodes=2", "--set", "samples=40", "--set", "hidden=8", "--set", "embedding=6",
];

fn quark(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quark"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_train_eval_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");

    let o = quark(&["generate", "--synthetic", "3x8", "--set", "electrodes=2", "--set", "samples=40", "--set", "embedding=6"], &data);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(data.join("recordings.txt").is_file());

    let mut args = vec!["train", "--data", data.to_str().unwrap()];
    args.extend(SMALL);
    let o = quark(&args, &run);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["checkpoint.txt", "config.txt", "epoch_log.tsv", "epoch_times.tsv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let log = std::fs::read_to_string(run.join("epoch_log.tsv")).unwrap();
    assert_eq!(log.lines().count(), 2);

    let o = Command::new(env!("CARGO_BIN_EXE_quark"))
        .args(["eval", "--style", "--run"])
        .arg(&run)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = std::fs::read_to_string(run.join("metrics.tsv")).unwrap();
    assert!(tsv.lines().count() >= 2);
    assert!(run.join("style_curves.tsv").is_file());

    let o = Command::new(env!("CARGO_BIN_EXE_quark"))
        .args(["inspect", "--instance", "2", "--run"])
        .arg(&run)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["collapse.tsv", "continuity_filtered.txt", "interference_normalized.txt"] {
        assert!(run.join("inspect").join(f).is_file(), "{f}");
    }
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--synthetic", "3x8", "--key", "alpha", "--values", "0.2,0.9"];
    args.extend(SMALL);
    let o = quark(&args, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(tmp.path().join("sweep.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.2\t") && rows[2].starts_with("0.9\t"));
}

#[test]
fn user_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = quark(&["train", "--data", missing.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));

    let o = quark(&["sweep", "--synthetic", "2x4", "--key", "hidden", "--values", "4"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot sweep"));

    let o = quark(&["train", "--synthetic", "2x4", "--set", "alpha=2"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = quark(&["frobnicate"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

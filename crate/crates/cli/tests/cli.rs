use std::path::Path;
use std::process::{Command, Output};

const TINY: &[&str] = &["--episodes", "100", "--batch", "50", "--epochs", "1", "--val-episodes", "20", "--width", "0.03125"];

fn risloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risloc"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = risloc(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn with_tiny<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(TINY.iter().copied()).collect()
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let args = with_tiny(&[
        "sweep", "--preset", "siso-1ris", "--method", "fixed-dnn", "--axis", "snr", "--values", "-5,0,5", "--stages", "2",
        "--test-episodes", "20", "--out-dir", "out",
    ]);
    ok(dir.path(), &args);
    let csv = std::fs::read_to_string(dir.path().join("out/sweep_siso-1ris_fixed-dnn_snr.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "method,axis,value,episodes,mse_m2,se_m2,rmse_m");
    assert!(lines[1].starts_with("fixed-dnn,snr,-5.0,20,"));
}

#[test]
fn train_then_eval_and_seed_collision() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with_tiny(&["train", "--stages", "2", "--seed", "3", "--out", "p.ckpt", "--log", "log.csv"]));
    assert_eq!(std::fs::read_to_string(dir.path().join("log.csv")).unwrap().lines().count(), 2);
    ok(dir.path(), &["eval", "--checkpoint", "p.ckpt", "--episodes", "10", "--seed", "4", "--out", "e.csv"]);
    assert_eq!(std::fs::read_to_string(dir.path().join("e.csv")).unwrap().lines().count(), 2);
    let clash = risloc(dir.path(), &["eval", "--checkpoint", "p.ckpt", "--episodes", "10", "--seed", "3"]);
    assert!(!clash.status.success());
    assert!(String::from_utf8_lossy(&clash.stderr).contains("seed"));
    let wrong = risloc(dir.path(), &["eval", "--preset", "3bs", "--checkpoint", "p.ckpt", "--seed", "4"]);
    assert!(!wrong.status.success());
}

#[test]
fn radiomap_files_per_ris_and_stage() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &with_tiny(&["train", "--preset", "miso-2ris", "--stages", "6", "--out", "p.ckpt", "--log", "l.csv"]));
    ok(dir.path(), &["radiomap", "--preset", "miso-2ris", "--checkpoint", "p.ckpt", "--ue", "-20,40", "--out-dir", "maps"]);
    let names: Vec<String> =
        std::fs::read_dir(dir.path().join("maps")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    let maps = names.iter().filter(|n| n.starts_with("radiomap_") && n.ends_with(".txt")).count();
    assert_eq!(maps, 3 * 6);
    assert!(names.iter().any(|n| n == "radiomap_ris2_stage6.txt"));
    let meta = std::fs::read_to_string(dir.path().join("maps/radiomap_meta.toml")).unwrap();
    assert!(meta.contains("x = -20"));
}

#[test]
fn fingerprint_database_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["fingerprint", "--stages", "3", "--episodes", "20", "--db", "fp.bin", "--out", "fp.csv"];
    ok(dir.path(), &args);
    let first = std::fs::read(dir.path().join("fp.csv")).unwrap();
    let reuse: Vec<&str> = args.iter().copied().chain(["--reuse"]).collect();
    ok(dir.path(), &reuse);
    assert_eq!(std::fs::read(dir.path().join("fp.csv")).unwrap(), first);
}

#[test]
fn bcrlb_and_config_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), "preset = \"siso-1ris\"\nsnr_db = 25.0\n").unwrap();
    ok(
        dir.path(),
        &[
            "bcrlb", "--config", "s.toml", "--stages", "2", "--episodes", "3", "--grid-cols", "10", "--grid-rows", "20",
            "--iterations", "5", "--out", "b.csv",
        ],
    );
    assert_eq!(std::fs::read_to_string(dir.path().join("b.csv")).unwrap().lines().count(), 2);
    let bad = risloc(dir.path(), &["bcrlb", "--preset", "miso-2ris", "--episodes", "1"]);
    assert!(!bad.status.success());
}

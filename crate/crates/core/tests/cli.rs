use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-mp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .status()
        .expect("binary runs")
        .code()
        .unwrap_or(-1)
}

fn read(dir: &Path, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let demo = config("demo.toml");
    let demo = demo.to_str().unwrap();
    for (cmd, files) in [
        ("eval-op", &["eval-op.json", "eval-op.csv"][..]),
        ("tail", &["tail.json"][..]),
        ("caccioppoli-sweep", &["caccioppoli-sweep.json"][..]),
        ("mc-crosscheck", &["mc-crosscheck.json"][..]),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run(&[cmd, "--config", demo, "--seed", "5"], a.path()), 0, "{cmd}");
        assert_eq!(run(&[cmd, "--config", demo, "--seed", "5"], b.path()), 0, "{cmd}");
        for f in files {
            assert_eq!(read(a.path(), f), read(b.path(), f), "{cmd}: {f} differs between runs");
        }
    }
}

#[test]
fn seed_changes_only_the_monte_carlo_section() {
    let demo = config("demo.toml");
    let demo = demo.to_str().unwrap();
    let parse = |dir: &Path| -> Value { serde_json::from_slice(&read(dir, "mc-crosscheck.json")).unwrap() };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["mc-crosscheck", "--config", demo, "--seed", "1"], a.path()), 0);
    assert_eq!(run(&["mc-crosscheck", "--config", demo, "--seed", "2"], b.path()), 0);
    let (x, y) = (parse(a.path()), parse(b.path()));
    assert_eq!(x["quadrature"], y["quadrature"]);
    assert_ne!(x["monte_carlo"], y["monte_carlo"]);

    // deterministic commands ignore the seed
    assert_eq!(run(&["eval-op", "--config", demo, "--seed", "1"], a.path()), 0);
    assert_eq!(run(&["eval-op", "--config", demo, "--seed", "2"], b.path()), 0);
    assert_eq!(read(a.path(), "eval-op.json"), read(b.path(), "eval-op.json"));
}

#[test]
fn golden_files_are_canonical() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("barrier.toml");
    assert_eq!(run(&["barrier", "--config", cfg.to_str().unwrap()], out.path()), 0);
    let text = String::from_utf8(read(out.path(), "barrier.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["clamps_exact"], Value::Bool(true));
    assert_eq!(nonlocal_mp::golden::to_canonical_json(&v).unwrap(), text);
    let csv = String::from_utf8(read(out.path(), "barrier.csv")).unwrap();
    assert!(csv.starts_with("x1,value,error_estimate\n"));
}

#[test]
fn shipped_configs_run() {
    let out = tempfile::tempdir().unwrap();
    for name in ["degiorgi", "verify-mp", "counterexample"] {
        let cfg = config(&format!("{name}.toml"));
        assert_eq!(run(&[name, "--config", cfg.to_str().unwrap()], out.path()), 0, "{name}");
        assert!(out.path().join(format!("{name}.json")).exists());
    }
    let v: Value = serde_json::from_slice(&read(out.path(), "verify-mp.json")).unwrap();
    assert_eq!(v["verdict"], "consistent");
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let missing = out.path().join("nope.toml");
    assert_eq!(run(&["energy", "--config", missing.to_str().unwrap()], out.path()), 1);

    // command named in the file must match the subcommand
    let cfg = config("barrier.toml");
    assert_eq!(run(&["degiorgi", "--config", cfg.to_str().unwrap()], out.path()), 1);

    let bad = out.path().join("bad.toml");
    let text = std::fs::read_to_string(config("demo.toml")).unwrap().replace("s = 0.5", "s = 1.5");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(run(&["energy", "--config", bad.to_str().unwrap()], out.path()), 2);

    let unknown = out.path().join("unknown.toml");
    let text = std::fs::read_to_string(config("demo.toml")).unwrap() + "\nextra = 1\n";
    std::fs::write(&unknown, text).unwrap();
    assert_eq!(run(&["energy", "--config", unknown.to_str().unwrap()], out.path()), 1);
}

#[test]
fn spacing_override_changes_the_lattice() {
    let demo = config("demo.toml");
    let demo = demo.to_str().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(&["eval-op", "--config", demo], a.path()), 0);
    assert_eq!(run(&["eval-op", "--config", demo, "--h", "0.03125"], b.path()), 0);
    let nodes = |dir: &Path| -> u64 {
        let v: Value = serde_json::from_slice(&read(dir, "eval-op.json")).unwrap();
        v["nodes"].as_u64().unwrap()
    };
    assert!(nodes(a.path()) > nodes(b.path()));
}

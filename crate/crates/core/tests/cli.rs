use std::path::Path;
use std::process::{Command, Output};

fn qsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsd")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn bound_example() {
    let out = qsd(&["bound", "--M", "2", "--r", "1", "--theta", "1.5707963"]);
    assert!(out.status.success());
    assert!((json(&out)["bound"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn fit_example() {
    let out = qsd(&["fit", "--M", "2", "--r", "1", "--theta", "1.5707963", "--povm", "eq20"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["alpha"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(v["beta"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn verify_example_exits_zero() {
    let out = qsd(&["verify", "--M", "3", "--r", "0.7", "--theta", "1.0471976"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(qsd(&["bound", "--M", "33"]).status.code(), Some(2));
    assert_eq!(qsd(&["bound", "--r", "1.5"]).status.code(), Some(2));
    assert_eq!(qsd(&["score", "--merit", "/no/such/merit.json"]).status.code(), Some(2));
    assert_eq!(qsd(&["frobnicate"]).status.code(), Some(2));
    let out = qsd(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn channel_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let out = qsd(&["channel", "--M", "3", "--r", "0.8", "--theta", "1.2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let c = qsd_core::io::read_channel_csv(std::fs::File::open(&path).unwrap()).unwrap();
    let e = qsd_core::make_symmetric_ensemble(3, 0.8, 1.2).unwrap();
    assert!(c.max_abs_diff(&qsd_core::nosignal::q_channel(&e)) < 1e-12);
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = qsd(&["sweep", "--grid-M", "1,2,3", "--merit", "cos2", "--seed", "5", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(read(&a), read(&b));
    let text = String::from_utf8(read(&a)).unwrap();
    assert!(text.starts_with("# seed=5\nM,r,theta,quantity,value\n"));

    let c = dir.path().join("c.json");
    let d = dir.path().join("d.json");
    for p in [&c, &d] {
        let out = qsd(&["optimize", "--M", "2", "--r", "0.6", "--theta", "1", "--restarts", "2", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(read(&c), read(&d));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command":"score","M":2,"r":0.9,"theta":1.1,"merit":"linear","povm":"covariant:3"}"#).unwrap();
    let from_file = qsd(&["--config", cfg.to_str().unwrap()]);
    let from_flags = qsd(&["score", "--M", "2", "--r", "0.9", "--theta", "1.1", "--merit", "linear", "--povm", "covariant:3"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
    assert_eq!(qsd(&["--config", cfg.to_str().unwrap(), "bound"]).status.code(), Some(2));
}

#[test]
fn merit_and_povm_files() {
    let dir = tempfile::tempdir().unwrap();
    let merit = dir.path().join("merit.json");
    std::fs::write(&merit, r#"{"N":4,"profile":[1.0,0.5,0.0,0.5]}"#).unwrap();
    let povm_path = dir.path().join("povm.json");
    let e = qsd_core::make_symmetric_ensemble(2, 1.0, 1.0).unwrap();
    let povm = qsd_core::optimal::symmetric_povm(&e);
    std::fs::write(&povm_path, qsd_core::io::to_json_string(&povm).unwrap()).unwrap();
    let out = qsd(&["score", "--M", "2", "--r", "1", "--theta", "1", "--merit", merit.to_str().unwrap(), "--povm", povm_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["score"].as_f64().unwrap() - v["q_score"].as_f64().unwrap()).abs() < 1e-12);
    // Wrong size for M = 3.
    assert_eq!(qsd(&["score", "--M", "3", "--merit", merit.to_str().unwrap()]).status.code(), Some(2));
}

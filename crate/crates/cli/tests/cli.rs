//! End-to-end behavior of the binary: file round trips, output schemas,
//! exit codes, and determinism across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirspec"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn construct(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = args.to_vec();
    let path_s = path.to_str().unwrap().to_string();
    full.extend(["--out", &path_s]);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn seq_file(dir: &Path) -> PathBuf {
    construct(
        dir,
        "seq.json",
        &["construct", "--n", "2", "--c", "1/2", "--schedule", "const:2", "--depth", "3"],
    )
}

#[test]
fn construct_is_reproducible_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = seq_file(dir.path());
    let bytes1 = std::fs::read(&p1).unwrap();
    let p2 = construct(
        dir.path(),
        "seq2.json",
        &["construct", "--n", "2", "--c", "1/2", "--schedule", "const:2", "--depth", "3"],
    );
    let bytes2 = std::fs::read(&p2).unwrap();
    assert_eq!(bytes1, bytes2);

    // loading and re-serializing is byte-identical
    let seq = dirspec_core::construction::Sequence::load(&p1).unwrap();
    assert_eq!(seq.to_json_string().as_bytes(), bytes1.as_slice());
}

#[test]
fn witness_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let seq = seq_file(dir.path());
    let out = run(&["witness", "--seq", seq.to_str().unwrap(), "--Q", "300"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["Q"], "300");
    assert_eq!(v["case"], "1");
    assert_eq!(v["k"], 1);
    assert!(v["e"].is_null());
    assert_eq!(v["b"][0], "-33");
    assert_eq!(v["b"][1], "256");
    assert!(v["value_lo"].as_str().unwrap().contains('/'));

    // a middle-range witness carries its threshold index
    let out = run(&["witness", "--seq", seq.to_str().unwrap(), "--Q", "100"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["case"], "3");
    assert_eq!(v["e"], 0);
    assert_eq!(v["b"][2], "-1");
}

#[test]
fn psi_enclosure_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let seq = seq_file(dir.path());
    let out = run(&["psi", "--seq", seq.to_str().unwrap(), "--Q", "255", "--mode", "enclosure"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "witness_plus_cert");
    assert_eq!(v["value_lo"], "32513/4294967296");
    assert!(v["normalized_lo_dec"]
        .as_str()
        .unwrap()
        .starts_with("4.9224"));
    assert_eq!(v["widened"], false);
}

#[test]
fn scan_csv_schema_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let seq = seq_file(dir.path());
    let seq = seq.to_str().unwrap();
    let base = run(&["scan", "--seq", seq, "--k-min", "1", "--k-max", "2"]);
    assert!(base.status.success());
    let text = String::from_utf8(base.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "k,Q,psi_lo,psi_hi,norm_lo,norm_hi,method,norm_lo_dec,norm_hi_dec"
    );
    assert!(lines[1].starts_with("1,255,"));
    assert!(lines[2].starts_with("2,17179869183,"));
    for threads in ["1", "3"] {
        let alt = run(&["scan", "--seq", seq, "--k-min", "1", "--k-max", "2", "--threads", threads]);
        assert_eq!(alt.stdout, base.stdout);
    }
}

#[test]
fn psi_exhaustive_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let seq = seq_file(dir.path());
    let seq = seq.to_str().unwrap();
    let outputs: Vec<Vec<u8>> = ["1", "2", "8"]
        .iter()
        .map(|t| {
            let out = run(&[
                "psi", "--seq", seq, "--Q", "100", "--mode", "exhaustive", "--threads", t,
            ]);
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn verify_passes_and_any_corruption_flips_it() {
    let dir = tempfile::tempdir().unwrap();
    let seq = seq_file(dir.path());
    let out = run(&["verify", "--seq", seq.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().len() > 10);

    let good = std::fs::read_to_string(&seq).unwrap();
    for (from, to) in [
        ("\"131072\"", "\"131073\""),   // break the recursion
        ("\"8\",", "\"24\","),          // break the initial block
        ("\"c\": \"1/2\"", "\"c\": \"1/3\""), // closing rule no longer matches
        ("\"m\": 2", "\"m\": 3"),       // schedule no longer matches the terms
    ] {
        let bad = good.replace(from, to);
        assert_ne!(bad, good, "{}", from);
        let bad_path = dir.path().join("bad.json");
        std::fs::write(&bad_path, bad).unwrap();
        let out = run(&["verify", "--seq", bad_path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{}", from);
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let seq = seq_file(dir.path());
    let seq = seq.to_str().unwrap();

    // usage errors
    let out = run(&["construct", "--n", "2", "--c", "0.5", "--schedule", "const:2", "--depth", "2", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // computational refusals
    let out = run(&["psi", "--seq", seq, "--Q", "255", "--mode", "exhaustive", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["psi", "--seq", seq, "--Q", "999999999999999999999", "--mode", "enclosure"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["scan", "--seq", seq, "--k-min", "1", "--k-max", "9"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn phi_build_and_scan_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.json");
    let out = run(&[
        "phi-build", "--n", "2", "--phi", "power:1/2:2", "--schedule", "const:2",
        "--depth", "3", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // admissibility report on stdout
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["heuristic"], true);
    assert!(v["decay"].as_array().unwrap().iter().all(|d| d["pass"] == true));

    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(file["variant"], "theorem2");
    assert_eq!(file["phi"]["kind"], "power");
    assert_eq!(file["a"][3], "131328");

    let out = run(&["phi-scan", "--seq", path.to_str().unwrap(), "--k-min", "1", "--k-max", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("k,Q,ratio_lo,ratio_hi,ratio_lo_dec,ratio_hi_dec\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("1,255,"));
}

#[test]
fn liouville_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let seq = construct(
        dir.path(),
        "ramp.json",
        &["construct", "--n", "2", "--c", "1/2", "--schedule", "ramp:1", "--depth", "4"],
    );
    let out = run(&["liouville", "--seq", seq.to_str().unwrap(), "--N", "5", "--k-max", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_exp"], 5);
    assert_eq!(v["any_pass"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 3);
}

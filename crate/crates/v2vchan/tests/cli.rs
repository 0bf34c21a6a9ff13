//! End-to-end tests of the binary: exit codes, artifact round trips, and
//! determinism across reruns and thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_v2vchan"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const SCENARIO: &str = "on-bridge";

fn synth_small(dir: &Path, seed: u64, out: &str) {
    run_ok(
        &[
            "synth",
            "--scenario",
            SCENARIO,
            "--duration-s",
            "1.5",
            "--seed",
            &seed.to_string(),
            "--out-dir",
            out,
        ],
        dir,
    );
}

#[test]
fn unknown_scenario_exits_2_and_lists_names() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["synth", "--scenario", "no-such-place", "--duration-s", "1"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("on-bridge") && msg.contains("in-tunnel"), "{msg}");
}

#[test]
fn bad_flags_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin().args(["synth", "--scenario", SCENARIO]).current_dir(tmp.path()).output().unwrap();
    assert_eq!(exit_code(&out), 2); // clap: missing --duration-s
    let out = bin()
        .args(["synth", "--scenario", SCENARIO, "--duration-s", "-3"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn truncated_ctf_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path(), 1, "a");
    let bytes = std::fs::read(tmp.path().join("a/ctf.bin")).unwrap();
    std::fs::write(tmp.path().join("trunc.bin"), &bytes[..bytes.len() / 3]).unwrap();
    let out = bin()
        .args(["process", "trunc.bin", "--scenario", SCENARIO])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);
    // garbage magic as well
    std::fs::write(tmp.path().join("junk.bin"), b"garbage that is not a container").unwrap();
    let out = bin()
        .args(["process", "junk.bin", "--scenario", SCENARIO])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn empty_pool_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("empty.csv"),
        "window_center_time_s,subband_q,subband_center_freq_hz,k_db,valid\n",
    )
    .unwrap();
    let out = bin()
        .args(["fit", "empty.csv", "--scenario", SCENARIO])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 4);
}

#[test]
fn pipeline_produces_consistent_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path(), 5, ".");
    assert!(tmp.path().join("ctf.bin").exists());
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth["scenario"]["name"], SCENARIO);
    assert_eq!(truth["snapshots"], 4882); // 1.5 s / 307.2 us

    run_ok(&["process", "ctf.bin", "--scenario", SCENARIO], tmp.path());
    run_ok(&["fit", "kfield.csv", "--scenario", SCENARIO], tmp.path());
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fit.json")).unwrap())
            .unwrap();
    assert_eq!(fit["scenario"], SCENARIO);
    assert!(fit["n"].as_u64().unwrap() > 100);
    assert!(fit["epsilon"].as_f64().unwrap() >= 0.0);
    assert_eq!(fit["reference"]["w"], 0.44);

    // report: one row for the fit, a warning for the missing file, exit 0
    let out = bin()
        .args(["report", "fit.json", "missing.json"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(table.lines().count(), 2, "{table}");
    assert!(table.contains(SCENARIO));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}

#[test]
fn pooling_two_fields_sums_their_rows() {
    let tmp = tempfile::tempdir().unwrap();
    synth_small(tmp.path(), 5, "a");
    run_ok(
        &["process", "a/ctf.bin", "--scenario", SCENARIO, "--out-dir", "a"],
        tmp.path(),
    );
    let n1 = {
        run_ok(
            &["fit", "a/kfield.csv", "--scenario", SCENARIO, "--invalid-k", "floor", "--out-dir", "a"],
            tmp.path(),
        );
        let fit: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/fit.json")).unwrap())
                .unwrap();
        fit["n"].as_u64().unwrap()
    };
    run_ok(
        &["fit", "a/kfield.csv", "a/kfield.csv", "--scenario", SCENARIO, "--invalid-k", "floor"],
        tmp.path(),
    );
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fit.json")).unwrap())
            .unwrap();
    // with the floor policy every CSV row is pooled, so doubling the inputs
    // doubles n
    assert_eq!(fit["n"].as_u64().unwrap(), 2 * n1);
}

fn hash_artifacts(dir: &Path) -> Vec<(String, u64)> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            use std::hash::{Hash, Hasher};
            let bytes = std::fs::read(dir.join(&name)).unwrap();
            let mut h = std::collections::hash_map::DefaultHasher::new();
            bytes.hash(&mut h);
            (name, h.finish())
        })
        .collect()
}

fn full_run(dir: &Path, out: &str, threads: Option<&str>) {
    let sub = dir.join(out);
    std::fs::create_dir_all(&sub).unwrap();
    for args in [
        vec!["synth", "--scenario", SCENARIO, "--duration-s", "1.5", "--seed", "9", "--out-dir", out],
        vec!["process", &format!("{out}/ctf.bin"), "--scenario", SCENARIO, "--out-dir", out],
        vec!["fit", &format!("{out}/kfield.csv"), "--scenario", SCENARIO, "--out-dir", out],
    ] {
        let mut cmd = bin();
        cmd.args(&args).current_dir(dir);
        match threads {
            Some(n) => cmd.env("V2V_THREADS", n),
            None => cmd.env_remove("V2V_THREADS"),
        };
        let res = cmd.output().unwrap();
        assert!(res.status.success(), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    full_run(tmp.path(), "r1", None);
    full_run(tmp.path(), "r2", None);
    full_run(tmp.path(), "t1", Some("1"));
    full_run(tmp.path(), "t3", Some("3"));
    let base = hash_artifacts(&tmp.path().join("r1"));
    for other in ["r2", "t1", "t3"] {
        assert_eq!(base, hash_artifacts(&tmp.path().join(other)), "mismatch vs {other}");
    }
}

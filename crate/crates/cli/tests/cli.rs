use std::path::Path;
use std::process::{Command, Output};

use rough_pam::io::{read_noise, read_trajectory};
use rough_pam::noise::synthesize;
use rough_pam::{GridSpec, NoiseParams};
use serde_json::Value;

fn rpam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpam")).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn zero_noise_eigenvalue() {
    let o = rpam(&["eigen", "--H", "0.3", "--cH", "1", "--t", "1", "--zero-noise"]);
    let v = stdout_json(&o);
    let l = v["result"]["lambda"].as_f64().unwrap();
    assert!((l + 1.2337).abs() < 1e-4, "{l}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("runtime:"));
    assert_eq!(v["config"]["params"]["zero_noise"], true);
    assert_eq!(v["metadata"]["global_seed"], 0);
}

#[test]
fn conditional_fk_record() {
    let v = stdout_json(&rpam(&["fk", "--variant", "conditional", "--t", "0.25", "--paths", "1000", "--seed", "7"]));
    assert!(v["result"]["mean"].as_f64().unwrap() > 0.0);
    assert_eq!(v["result"]["seed"], 7);
    assert_eq!(v["config"]["global"]["seed"], 7);
    assert_eq!(v["result"]["variant"], "conditional");
}

#[test]
fn reruns_give_identical_manifests() {
    let d = tempfile::tempdir().unwrap();
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    let args = |dir: &Path, threads: &str| -> Vec<String> {
        ["fk", "--variant", "naive", "--t", "0.25", "--paths", "100", "--noise", "100", "--n", "2048", "--seed", "3"]
            .iter()
            .map(|s| s.to_string())
            .chain(["--out".into(), dir.display().to_string(), "--threads".into(), threads.into()])
            .collect()
    };
    for (dir, threads) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let a: Vec<String> = args(dir, threads);
        let o = rpam(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        // the manifest is echoed on stdout
        let echoed: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(echoed, manifest(dir));
    }
    // the echoed config differs in the thread count only
    assert_eq!(manifest(&a), manifest(&b));
    let ma = manifest(&a);
    assert_eq!(ma["complete"], true);
    let rec_a: Value = serde_json::from_str(&std::fs::read_to_string(a.join("fk.json")).unwrap()).unwrap();
    let rec_c: Value = serde_json::from_str(&std::fs::read_to_string(c.join("fk.json")).unwrap()).unwrap();
    assert_eq!(rec_a["result"], rec_c["result"]);
    for f in ma["files"].as_array().unwrap() {
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn config_file_layers_under_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "[global]\nseed = 11\nH = 0.25\n\n[eigen]\nt = 2.0\nh = 0.01\nzero_noise = true\n").unwrap();
    let v = stdout_json(&rpam(&["eigen", "--config", cfg.to_str().unwrap(), "--t", "1"]));
    let c = &v["config"];
    assert_eq!(c["global"]["seed"], 11);
    assert_eq!(c["global"]["H"], 0.25);
    assert_eq!(c["params"]["t"], 1.0);
    assert_eq!(c["params"]["h"], 0.01);
    assert_eq!(c["params"]["method"], "bisection");
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let o = rpam(&["eigen", "--H", "0.7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("global.H"));

    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[fk]\npahts = 10\n").unwrap();
    let o = rpam(&["fk", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pahts"));

    let o = rpam(&["fk", "--variant", "psychic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fk.variant"));

    let o = rpam(&["fk", "--paths", "10"]);
    assert_eq!(o.status.code(), Some(2));

    let o = rpam(&["eigen", "--format", "bin", "--zero-noise"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ratio_band_violation_exits_4_with_partial_manifest() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("r");
    let o = rpam(&[
        "ratio", "--t-list", "1,2", "--paths", "500", "--dt", "0.01", "--band", "100,200", "--seed", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("t = 2"), "{err}");
    let m = manifest(&out);
    assert_eq!(m["complete"], false);
    assert_eq!(m["files"][0]["file"], "ratio.json");
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(out.join("ratio.json")).unwrap()).unwrap();
    assert_eq!(rec["result"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(rec["result"]["band_ok"], false);
}

#[test]
fn zero_noise_ratio_skips() {
    let v = stdout_json(&rpam(&["ratio", "--t-list", "1,2", "--paths", "200", "--dt", "0.01", "--zero-noise"]));
    assert!(v["result"]["skipped"].as_str().unwrap().contains("zero noise"));
}

#[test]
fn sweep_then_fit_flags_zero_noise() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("s");
    let o = rpam(&[
        "sweep", "--t-list", "2,3,4,6", "--replicas", "10", "--h", "0.05", "--max-refine", "1", "--zero-noise",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&rpam(&["fit", "--input", out.join("sweep.json").to_str().unwrap(), "--energy", "0.5"]));
    let r = &v["result"];
    assert!(r["model_mismatch"].as_str().unwrap().contains("model mismatch"));
    assert!(r["disclaimer"].as_str().unwrap().contains("non-asymptotic"));
    assert!(r["predicted_constant"].as_f64().unwrap() > 0.0);

    let o = rpam(&["fit"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn binary_outputs_read_back() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("n");
    let o = rpam(&["noise", "--n", "512", "--half-width", "8", "--seed", "9", "--format", "bin", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w = read_noise(std::fs::File::open(out.join("noise.bin")).unwrap()).unwrap();
    let g = GridSpec::centered(8.0, 512).unwrap();
    let fresh = synthesize(&NoiseParams::new(0.3, 1.0, 9).unwrap(), &g);
    assert_eq!(w.samples().values, fresh.samples().values);
    assert!(out.join("noise.config.json").exists());

    let out = d.path().join("p");
    let o = rpam(&[
        "pde", "--n", "512", "--epsilon", "0.2", "--dt", "0.005", "--record-every", "10", "--format", "bin", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_trajectory(std::fs::File::open(out.join("pde.bin")).unwrap()).unwrap();
    assert_eq!(*t.times.last().unwrap(), 0.25);
    assert_eq!(t.rows.len(), t.times.len());
}

#[test]
fn csv_outputs_carry_the_config() {
    let o = rpam(&["variational", "--n", "1024", "--half-width", "32", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8(o.stdout).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("# rpam variational"));
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next(), Some("x,g"));
    assert_eq!(lines.count(), 1024);
}

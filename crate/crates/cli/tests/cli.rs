use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chiralwg::io::RunTable;
use chiralwg_cli::run::RunManifest;

fn chiralwg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chiralwg")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn single_excited_emitter_decays_exponentially() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("me1");
    ok(&chiralwg(&["run", "--solver", "me", "--n-sites", "1", "--theta0", "pi", "--t-max", "3", "--output-dir", out_dir.to_str().unwrap()]));
    let table = RunTable::read_csv(&out_dir.join("point_0000")).unwrap();
    let s = &table.sites[&1];
    let err = table.times.iter().zip(&s.occupation).map(|(t, p)| (p - (-t).exp()).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn mean_field_sweep_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("pde");
    ok(&chiralwg(&[
        "run",
        "--solver",
        "mft_pde",
        "--n-sites",
        "400",
        "--dt",
        "1e-5",
        "--t-max",
        "0.4",
        "--theta0",
        "0.7pi",
        "--sweep-tau",
        "1e-4,3e-4,1e-3,3e-3,1e-2",
        "--analysis",
        "peaks,plateau,power_law",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]));
    let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("exponents.json")).unwrap()).unwrap();
    let r = e["r_eff"]["fit"]["exponent"].as_f64().unwrap();
    let t = e["t_eff"]["fit"]["exponent"].as_f64().unwrap();
    assert!((r + 0.5).abs() < 0.03, "{r}");
    assert!((t - 0.5).abs() < 0.03, "{t}");
}

fn twa_run(dir: &Path, threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_chiralwg"))
        .env("CHIRALWG_THREADS", threads)
        .args([
            "run", "--solver", "twa", "--n-sites", "3", "--tau", "0.1", "--theta0", "0.8pi", "--t-max", "1", "--n-traj", "300",
            "--seed", "17", "--record-every", "10", "--sweep-theta0", "0.8pi,pi", "--output-dir",
        ])
        .arg(dir)
        .output()
        .unwrap();
    ok(&out);
    let mut bytes = Vec::new();
    for p in ["point_0000", "point_0001"] {
        for f in ["observables.csv", "correlators.csv"] {
            bytes.extend(fs::read(dir.join(p).join(f)).unwrap());
        }
    }
    bytes
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = twa_run(&dir.path().join("a"), "1");
    let b = twa_run(&dir.path().join("b"), "3");
    assert!(!a.is_empty());
    assert!(a == b);
}

#[test]
fn compare_identical_and_tolerance_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (d, tau) in [(&a, "0.05"), (&b, "0.1")] {
        ok(&chiralwg(&["run", "--solver", "me", "--n-sites", "3", "--tau", tau, "--t-max", "1", "--output-dir", d.to_str().unwrap()]));
    }
    let pa = a.join("point_0000");
    let report = dir.path().join("report.json");
    let out = chiralwg(&[
        "compare",
        pa.to_str().unwrap(),
        pa.to_str().unwrap(),
        "--max-rel-linf",
        "0",
        "--report",
        report.to_str().unwrap(),
    ]);
    ok(&out);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for s in r["series"].as_array().unwrap() {
        assert_eq!(s["linf"].as_f64().unwrap(), 0.0);
        assert_eq!(s["l2"].as_f64().unwrap(), 0.0);
    }
    let out = chiralwg(&["compare", pa.to_str().unwrap(), b.join("point_0000").to_str().unwrap(), "--max-rel-linf", "1e-6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn guard_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("g");
    let out = chiralwg(&["run", "--solver", "me", "--n-sites", "7", "--output-dir", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = chiralwg(&["run", "--solver", "qjump", "--sweep-n-sites", "4,15", "--output-dir", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = chiralwg(&["run", "--solver", "twa", "--tau", "0.00015", "--dt", "0.001", "--output-dir", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn manifest_reconstructs_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("m");
    ok(&chiralwg(&[
        "run", "--solver", "mft_discrete", "--n-sites", "4", "--sweep-tau", "0,0.1", "--theta0", "0.9pi", "--t-max", "2",
        "--analysis", "peaks", "--output-dir", d.to_str().unwrap(),
    ]));
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
    let points = m.spec.validate().unwrap();
    assert_eq!(points.len(), 2);
    let hashes: Vec<String> = points.iter().map(|p| p.config_hash()).collect();
    assert_eq!(hashes, m.config_hashes);

    // rerunning from the recorded spec reproduces the outputs
    let mut spec = m.spec.clone();
    spec.output_dir = dir.path().join("m2");
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    ok(&chiralwg(&["run", "--spec", spec_path.to_str().unwrap()]));
    for p in &m.points {
        assert_eq!(fs::read(d.join(p).join("observables.csv")).unwrap(), fs::read(spec.output_dir.join(p).join("observables.csv")).unwrap());
    }

    ok(&chiralwg(&["analyze", d.to_str().unwrap(), "--analysis", "peaks,plateau"]));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("point_0001/summary.json")).unwrap()).unwrap();
    assert_eq!(s["peaks"].as_array().unwrap().len(), 4);
    assert!(s["plateau"].is_object());
}

#[test]
fn bench_reports_throughput() {
    let out = chiralwg(&["bench", "--n-sites", "4", "--n-traj", "64", "--t-max", "0.2"]);
    ok(&out);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["ns_per_site_step"].as_f64().unwrap() > 0.0);
}

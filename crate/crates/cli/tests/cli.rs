use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sgf_cli::{parse_config, RunConfig};
use sgf_core::discretization::{assemble_forms, poincare_constant, DomainGrid};

fn sgf(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sgf"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn summary(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(out).join("summary.json")).unwrap()).unwrap()
}

#[test]
fn empty_config_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgf(&["simulate", "--out", "a"], "", dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path(), "a");
    let want = RunConfig { out: "a".into(), ..RunConfig::default() };
    assert_eq!(s["config"], serde_json::to_value(&want).unwrap());
    assert_eq!(s["deterministic"], Value::Bool(false));
    let csv = fs::read_to_string(dir.path().join("a/trajectory_v.csv")).unwrap();
    assert!(csv.starts_with("# config: {"));
    assert_eq!(csv.lines().nth(1), Some("t,norm_v,norm_w,q"));
    assert_eq!(csv.lines().count(), 2 + 1001);
}

#[test]
fn zero_noise_is_flagged_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgf(&["simulate", "--out", "d"], "epsilon = 0\nt_end = 0.1\n", dir.path());
    assert!(o.status.success());
    assert_eq!(summary(dir.path(), "d")["deterministic"], Value::Bool(true));
}

#[test]
fn dump_coefficients_adds_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgf(&["simulate", "--out", "c", "--dump-coefficients"], "t_end = 0.01\nn = 5\nprobe_modes = 2\n", dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("c/trajectory_u.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("t,norm_v,norm_w,q,c0,c1,c2,c3,c4"));
    let row: Vec<f64> = csv.lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row.len(), 9);
    let w = row[4..].iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((w - row[2]).abs() <= 1e-15 * w);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = "seed = 9\nt_end = 0.5\n";
    let read = |f: &str| fs::read(dir.path().join("r").join(f)).unwrap();
    assert!(sgf(&["simulate", "--out", "r"], text, dir.path()).status.success());
    let first: Vec<Vec<u8>> = ["trajectory_v.csv", "trajectory_u.csv", "summary.json"].iter().map(|f| read(f)).collect();
    assert!(sgf(&["simulate", "--out", "r"], text, dir.path()).status.success());
    let second: Vec<Vec<u8>> = ["trajectory_v.csv", "trajectory_u.csv", "summary.json"].iter().map(|f| read(f)).collect();
    assert_eq!(first, second);
    // A different seed changes the trajectory.
    assert!(sgf(&["simulate", "--out", "r", "--seed", "10"], text, dir.path()).status.success());
    assert_ne!(first[0], read("trajectory_v.csv"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgf(&["simulate"], "visc = 0.1\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains("visc"));
}

#[test]
fn attractor_rejects_strong_feedback_with_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let forms = assemble_forms(&DomainGrid::<f64>::new(12, 0.2).unwrap());
    let bound = 0.1 / poincare_constant(&forms).unwrap().p2;
    let text = format!("grid_n = 12\nalpha = 0.2\nforce = saturating\nforce_gain = {}\n", 1.01 * bound);
    let o = sgf(&["attractor"], &text, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "dissipativity_violated");
    let msg = err["message"].as_str().unwrap();
    let printed: f64 = msg.rsplit("= ").next().unwrap().trim().parse().unwrap();
    assert!((printed - bound).abs() <= 1e-12 * bound, "{msg}");
    // The same force is fine for a plain trajectory.
    let o = sgf(&["simulate"], &format!("{text}t_end = 0.01\n"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_passes_on_reference_and_fails_on_coarse_steps() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgf(&["verify", "--out", "ok"], "", dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(dir.path(), "ok");
    assert_eq!(s["all_pass"], Value::Bool(true));
    assert!(s["checks"].as_array().unwrap().len() >= 10);

    let o = sgf(&["verify", "--out", "bad"], "dt = 0.01\nnoise_dt = 0.01\n", dir.path());
    assert_eq!(o.status.code(), Some(1));
    let s = summary(dir.path(), "bad");
    let failed: Vec<&str> = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"v_energy_drift"), "{failed:?}");
}

#[test]
fn sweep_distances_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgf(&["sweep", "--out", "s"], "probe_random = 0\nseeds = 1,2\n", dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(dir.path(), "s");
    let d: Vec<f64> = s["distances"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(d.len(), 4);
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert_eq!(s["per_seed"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_round_trips_through_text() {
    let text = "kind = sweep\nseeds = 4,5,6\neps_list = 0.3,0.03\nforce = linear\nforce_gain = 0.5\n";
    let c = parse_config(text).unwrap();
    assert_eq!(parse_config(&c.to_text()).unwrap(), c);
}

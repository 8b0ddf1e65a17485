use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pitransfer"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TWO_LEVEL: &str = "[levels]\ng = 0\ne = 0.017671\n\n[couplings]\ng e = 0.073\n\n\
    [target]\nalpha = g\nbeta = e\ninitial = g\n\n[drive]\nenvelope = sin2\nn_half = 1\n";

#[test]
fn malformed_scenario_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.scn");
    std::fs::write(&p, "[levels]\ng = 0\nbogus line\n").unwrap();
    let out = run(&["design", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(&["design", dir.path().join("missing.scn").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f4.scn");
    let text = std::fs::read_to_string(scenario("hf_fig4.scn")).unwrap().replace("max_iter = 50", "max_iter = 1");
    std::fs::write(&p, text).unwrap();
    let out = run(&["--tol", "1e-300", "design", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn design_reports_durations() {
    let s = scenario("hf_fig4.scn");
    let v = json(&run(&["--format", "structured", "design", s.to_str().unwrap()]));
    let t_pi = v["t_pi"].as_f64().unwrap();
    let t_opt = v["t_opt"].as_f64().unwrap();
    assert!(t_opt >= t_pi);
    assert!((t_opt / t_pi - 1.03).abs() < 0.01);
}

#[test]
fn trajectory_output_is_deterministic() {
    let s = scenario("hf_fig4.scn");
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("t{k}.csv"))).collect();
    for p in &paths {
        let out = run(&["--grid", "300", "simulate", s.to_str().unwrap(), "--traj", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("t,m,omega,Pi_alpha,Pi_beta,Pi_p,norm_error\n"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn sweep_with_zero_steps_is_rejected() {
    let s = scenario("two_level.scn");
    let out = run(&["sweep", s.to_str().unwrap(), "--param", "F0", "--from", "1e-4", "--to", "2e-4", "--steps", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_point_sweep_matches_simulate() {
    let s = scenario("hf_fig4.scn");
    let s = s.to_str().unwrap();
    let sweep = json(&run(&[
        "--format", "structured", "--grid", "400", "sweep", s, "--param", "F0", "--from", "4.07606e-4", "--to", "9e-4", "--steps", "1",
    ]));
    let sim = json(&run(&["--format", "structured", "--grid", "400", "simulate", s, "--mode", "optimized"]));
    let rows = sweep.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let opt = rows.iter().find(|r| r["summary"]["mode"] == "optimized").unwrap();
    assert_eq!(opt["summary"]["final_transfer"], sim["final_transfer"]);
}

#[test]
fn zero_field_manual_pulse_transfers_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("zero.scn");
    std::fs::write(&p, format!("{TWO_LEVEL}amplitude = 0\nmode = manual\nduration = 5000\n")).unwrap();
    let v = json(&run(&["--format", "structured", "--grid", "50", "simulate", p.to_str().unwrap()]));
    assert_eq!(v["final_transfer"].as_f64().unwrap(), 0.0);
}

#[test]
fn modes_coincide_without_perturbers() {
    let s = scenario("two_level.scn");
    let v = json(&run(&["--format", "structured", "--grid", "200", "compare", s.to_str().unwrap()]));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let finals: Vec<f64> = rows.iter().map(|r| r["summary"]["final_transfer"].as_f64().unwrap()).collect();
    for f in &finals {
        assert!((f - finals[0]).abs() < 1e-12);
        assert!(*f > 0.999);
    }
}

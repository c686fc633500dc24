use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use alt_phillips::field::read_field;
use alt_phillips::profile::exact_phi;
use alt_phillips::{Field, Params};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alt-phillips"))
        .args(args)
        .env_remove("ALT_PHILLIPS_JOBS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_recovers_the_exact_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = run(&["solve", "--gamma", "1.0", "--grid", "1d:1000", "--bc", "phi-right", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let u: Field = read_field(BufReader::new(fs::File::open(out.join("field.txt")).unwrap())).unwrap();
    let p = Params::new(1.0).unwrap();
    let err = (0..u.grid.len())
        .map(|k| (u.values[k] - exact_phi(&p, u.grid.position(k)[0])).abs())
        .fold(0.0, f64::max);
    assert!(err <= 5e-3, "{err}");
    let report = json(&out.join("report.json"));
    assert_eq!(report["converged"], true);
    let energy = json(&out.join("energy.json"));
    for key in ["gamma", "h", "dirichlet", "potential", "total", "region_volume"] {
        assert!(energy[key].is_number(), "{key}");
    }
    assert_eq!(json(&out.join("manifest.json"))["command"], "solve");
}

#[test]
fn manifest_reruns_the_same_solve() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = run(&["solve", "--gamma", "1.5", "--grid", "2d:24", "--bc", "planar:0.5", "--out", path(&a)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let m = a.join("manifest.json");
    let o = run(&["solve", "--config", path(&m), "--out", path(&b)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert_eq!(fs::read(a.join("field.txt")).unwrap(), fs::read(b.join("field.txt")).unwrap());
    let o = run(&["sweep", "--config", path(&m), "--out", path(&b)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn flags_override_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"gamma": 1.5, "grid": "1d:200", "solver": {"ordering": "red-black"}}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&["solve", "--config", path(&cfg), "--gamma", "1.0", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["gamma"], 1.0);
    assert_eq!(m["config"]["grid"], "1d:200");
    assert_eq!(m["config"]["solver"]["ordering"], "red-black");
    assert_eq!(m["config"]["bc"], "phi-right");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["solve", "--frobnicate", "--out", path(&out)]);
    assert_eq!(code(&o), 2);
    assert!(text(&o.stderr).contains("Usage"), "{}", text(&o.stderr));
    assert_eq!(code(&run(&["solve", "--gamma", "2.5", "--out", path(&out)])), 2);
    assert_eq!(code(&run(&["solve", "--grid", "3d:4", "--out", path(&out)])), 2);
    assert_eq!(code(&run(&["solve", "--bc", "wave:1", "--out", path(&out)])), 2);
    assert_eq!(code(&run(&["solve", "--gamma", "1.0"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["check", "--suite", "nope"])), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"gama": 1.0}"#).unwrap();
    assert_eq!(code(&run(&["solve", "--config", path(&bad), "--out", path(&out)])), 2);
    // No admissible barrier construction at this exponent.
    let o = run(&["barrier", "--gamma", "1.8", "--kind", "density", "--n", "1", "--out", path(&out)]);
    assert_eq!(code(&o), 2, "{}", text(&o.stderr));
    assert_eq!(code(&run(&["--jobs", "0", "check"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn non_convergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["solve", "--grid", "1d:400", "--max-sweeps", "3", "--out", path(&out)]);
    assert_eq!(code(&o), 3, "{}", text(&o.stdout));
    assert!(out.join("report.json").exists());
}

#[test]
fn check_prints_one_row_per_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["check", "--suite", "identities", "--out", path(&out)]);
    let stdout = text(&o.stdout);
    let rows = json(&out.join("check.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 14);
    for r in rows {
        let (name, pass) = (r["identity"].as_str().unwrap(), r["pass"].as_bool().unwrap());
        if name != "equipartition" {
            assert!(pass, "{r}");
        }
        assert!(stdout.contains(name));
    }
    let failed = rows.iter().any(|r| !r["pass"].as_bool().unwrap());
    assert_eq!(code(&o), if failed { 3 } else { 0 });
}

#[test]
fn profile_and_barrier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = run(&["profile", "--gamma", "1.5", "--kind", "generator", "--resolution", "1e-3", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,psi,psi_prime,margin"));
    let last_t: f64 = csv.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(csv.lines().count() > 1000 && (last_t - 1.0).abs() < 1e-9, "{last_t}");
    let out = dir.path().join("b");
    let o = run(&["barrier", "--gamma", "1.9", "--kind", "growth", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let cert = json(&out.join("certificate.json"));
    assert_eq!(cert["certificate"]["passed"], true);
    assert!(out.join("barrier.csv").exists());
}

#[test]
fn small_sweep_is_deterministic_and_feeds_density() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["sweep", "--gammas", "1.0,1.9", "--grid", "2d:64", "--homotopy-stages", "8", "--cascade-levels", "1"];
    let o = run(&[&args[..], &["--out", path(&a)]].concat());
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let o = Command::new(env!("CARGO_BIN_EXE_alt-phillips"))
        .args(["sweep", "--config", path(&a.join("manifest.json")), "--out", path(&b)])
        .env("ALT_PHILLIPS_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let csv = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("sweep.csv")).unwrap());
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().next(), Some("gamma,h,dirichlet,potential,total,hausdorff,density_min,density_max,l1_gap"));
    assert_eq!(csv.lines().count(), 3);
    let d = dir.path().join("d");
    let o = run(&["density", "--field", path(&a.join("field-gamma-1.txt")), "--near", "0.5,0.5", "--out", path(&d)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let rep = json(&d.join("density.json"));
    let lo = rep["min_ratio"].as_f64().unwrap();
    assert!(lo > 0.2 && lo <= 0.5, "{lo}");
}

#[test]
fn recovery_writes_energies_and_lsc_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = run(&["recovery", "--grid", "2d:128", "--gammas", "1.5,1.9", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let csv = fs::read_to_string(out.join("recovery.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let lsc = json(&out.join("lsc.json"));
    assert!((lsc["limit_energy"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(lsc["energies"].as_array().unwrap().len(), 2);
}

#[test]
fn chord_sweep_example_writes_five_rows_and_an_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = run(&[
        "sweep", "--gammas", "1.0,1.5,1.8,1.9,1.95", "--problem", "chord", "--grid", "2d:256", "--out", path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let svg = fs::read_to_string(out.join("overlay.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<path").count(), 5);
    assert!(svg.contains("stroke-dasharray"));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["density_floor"], 0.2285);
    assert_eq!(m["config"]["gammas"].as_array().unwrap().len(), 5);
}

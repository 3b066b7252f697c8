use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_couplings"));
    c.env_remove("COUPLINGS_OUT_DIR");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

/// Data rows of a CSV file as (header, rows), skipping `#` comments.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

const TWO_LEVEL_HEAD: &str = r#"
schema = 1
seed = 1
[operator]
kind = "matrix"
dim = 2
h0 = [[1, 1, 1.0]]
terms = [[[0, 1, 1.0], [1, 0, 1.0]]]
"#;

#[test]
fn empty_task_list_gives_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "s.toml", TWO_LEVEL_HEAD);
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = report(&out);
    assert_eq!(r["tasks"].as_array().unwrap().len(), 0);
    assert_eq!(r["summary"]["invariants_failed"], 0);
    assert_eq!(r["provenance"]["schema_version"], 1);
}

#[test]
fn two_level_track_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--scenario",
        scenarios().join("two_level.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let (h, rows) = table(&out.join("track.csv"));
    assert_eq!(rows.len(), 10);
    let s = column(&h, &rows, "s");
    let e = column(&h, &rows, "energy_re");
    for (b, e) in s.iter().zip(&e) {
        let exact = (1.0 - (1.0 + 4.0 * b * b).sqrt()) / 2.0;
        assert!((e - exact).abs() < 1e-10, "beta {b}: {e} vs {exact}");
    }
    assert!((s.last().unwrap() - 0.45).abs() < 1e-15);
}

#[test]
fn disjoint_family_geometry_is_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(
        tmp.path(),
        "g.toml",
        r#"
schema = 1
[operator]
kind = "grid"
extent = [[0.0, 10.0]]
points = [50]
[family]
kind = "periodic_bumps"
per_axis = 4
spacing = 2.5
origin = 1.0
height = 1.0
width = 0.3
support = 1.0
[[tasks]]
kind = "geometry"
"#,
    );
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let g = &report(&out)["tasks"][0]["result"];
    assert_eq!(g["n0"], 0);
    assert_eq!(g["refinement"]["identity"], true);
    assert_eq!(g["refinement"]["cells"], 4);
}

#[test]
fn unknown_key_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(
        tmp.path(),
        "bad.toml",
        &format!("{TWO_LEVEL_HEAD}\n[[tasks]]\nkind = \"track\"\nto = 1.0\nstepz = 3\n"),
    );
    let o = run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stepz"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn missing_scenario_is_a_usage_error() {
    let o = run(&["run", "--scenario", "/nonexistent/s.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn modulus_family_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        "--scenario",
        scenarios().join("modulus_family.toml").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(tmp.path());
    assert_eq!(r["invariants"][0]["name"], "analytic_family");
    assert_eq!(r["invariants"][0]["passed"], false);
}

#[test]
fn zero_length_sweep_gives_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "s.toml", TWO_LEVEL_HEAD);
    let out = tmp.path().join("out");
    let o = run(&[
        "sweep",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--axis",
        "0",
        "--from",
        "0.2",
        "--to",
        "0.2",
        "--steps",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let (h, rows) = table(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    let e = column(&h, &rows, "energy_re")[0];
    assert!((e - (1.0 - 1.16f64.sqrt()) / 2.0).abs() < 1e-10);
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "s.toml", TWO_LEVEL_HEAD);
    let out = tmp.path().join("env-out");
    let o = bin()
        .args(["run", "--scenario", sc.to_str().unwrap()])
        .env("COUPLINGS_OUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("report.json").exists());
}

#[test]
fn overrides_and_seed_flag_reach_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(tmp.path(), "s.toml", TWO_LEVEL_HEAD);
    let o = run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--seed",
        "42",
        "--tol",
        "1e-6",
        "--override",
        "name=renamed",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["provenance"]["seed"], 42);
    assert_eq!(r["provenance"]["scenario"], "renamed");
    assert_eq!(r["provenance"]["tolerance"], 1e-6);
}

#[test]
fn timings_only_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write(
        tmp.path(),
        "s.toml",
        &format!("{TWO_LEVEL_HEAD}\n[[tasks]]\nkind = \"track\"\nto = 0.1\nsteps = 2\n"),
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--timings",
    ]);
    assert!(report(&a)["tasks"][0].get("seconds").is_none());
    assert!(report(&b)["tasks"][0]["seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn show_schema_prints_reference() {
    let o = run(&["show-schema"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("# Scenario schema"));
}

/// A sweep along a direction in 8 couplings, and the Taylor series of the
/// same branch evaluated at the sweep points.
#[test]
fn eight_coupling_sweep_agrees_with_taylor_series() {
    let tmp = tempfile::tempdir().unwrap();
    let head = r#"
schema = 1
seed = 4
[operator]
kind = "grid"
extent = [[0.0, 16.0]]
points = [96]
[family]
kind = "periodic_bumps"
per_axis = 8
spacing = 2.0
origin = 1.0
height = 1.0
width = 0.3
support = 1.5
"#;
    let dir = "[1.0, -0.5, 0.75, 0.25, -1.0, 0.5, 0.3, -0.2]";
    let sc = write(
        tmp.path(),
        "s.toml",
        &format!(
            "{head}\n[[tasks]]\nkind = \"taylor\"\ndirection = {dir}\nradius = 0.2\norder = 16\n\
             [[tasks]]\nkind = \"sweep\"\ndirection = {dir}\nto = 0.05\nsteps = 6\n"
        ),
    );
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--scenario",
        sc.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let r = report(&out);
    let radius = r["tasks"][0]["result"]["radius_of_convergence"]["radius"]
        .as_f64()
        .unwrap();
    assert!(radius > 0.1, "R = {radius}");
    let coeffs: Vec<f64> = r["tasks"][0]["result"]["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c[0].as_f64().unwrap())
        .collect();
    let (h, rows) = table(&out.join("sweep.csv"));
    assert_eq!(h.iter().filter(|c| c.starts_with("beta_")).count(), 8);
    let s = column(&h, &rows, "s");
    let e = column(&h, &rows, "energy_re");
    for (s, e) in s.iter().zip(&e) {
        assert!(*s <= radius / 2.0);
        let series: f64 = coeffs.iter().rev().fold(0.0, |acc, a| acc * s + a);
        assert!((series - e).abs() < 1e-6, "s = {s}: {series} vs {e}");
    }
}

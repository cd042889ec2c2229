use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use auxopt::oracle::{GeneratorSpec, Variant};
use auxopt::space::ProxSetup;
use serde_json::{json, Value};

fn auxopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auxopt")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn quadratic_config(runs: Value) -> Value {
    json!({
        "problem": {"generate": {"variant": "quadratic", "dim": 8, "seed": 4, "condition": 50.0}},
        "setup": {"dim": 8, "set": {"kind": "free"}, "geometry": "euclidean"},
        "runs": runs,
        "max_iters": 200
    })
}

fn run_in(dir: &Path, command: &str, config: &Path, out: &str) -> Output {
    auxopt(&[command, "--config", config.to_str().unwrap(), "--out", dir.join(out).to_str().unwrap()])
}

/// Header and data rows of a CSV written by the tool.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# auxopt-csv/1"));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn run_fgm_da_writes_certified_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &quadratic_config(json!([{"preset": "fgm_da"}])));
    let out = run_in(dir.path(), "run", &config, "out");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("fgm_da: iterations 200"));

    let (header, rows) = read_csv(&dir.path().join("out/fgm_da.csv"));
    assert_eq!(header, ["k", "f_xhat", "gap", "bound", "envelope", "residual_Rk", "lambda", "beta"]);
    assert_eq!(rows.len(), 200);
    for row in &rows {
        let k: f64 = row[0].parse().unwrap();
        let gap: f64 = row[2].parse().unwrap();
        let envelope: f64 = row[4].parse().unwrap();
        let lambda: f64 = row[6].parse().unwrap();
        assert!(gap <= envelope + 1e-8);
        assert_eq!(lambda, (k + 1.0) / 2.0);
    }
    // envelope·(k+1)(k+2) = 4L l_d(z_k; x*) and l_d(z_k; x*) <= d(x*)
    let problem = GeneratorSpec { condition: Some(50.0), ..GeneratorSpec::new(Variant::Quadratic, 8, 4) }.generate().unwrap();
    let setup = ProxSetup::euclidean_free(8);
    let d_star = setup.d_value(problem.known_optimum(&setup).x_star.as_ref().unwrap()).unwrap();
    let ceiling = 4.0 * problem.lipschitz().unwrap() * d_star;
    for r in &rows {
        let k: f64 = r[0].parse().unwrap();
        assert!(r[4].parse::<f64>().unwrap() * (k + 1.0) * (k + 2.0) <= ceiling * (1.0 + 1e-12));
    }

    let trace: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/fgm_da.trace.json")).unwrap()).unwrap();
    assert_eq!(trace["records"].as_array().unwrap().len(), 200);
    let cert: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/fgm_da.certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["pass"], Value::Bool(true));
    let (cert_header, _) = read_csv(&dir.path().join("out/fgm_da.certificate.csv"));
    assert_eq!(cert_header, ["k", "gap", "bound", "envelope", "residual", "pass"]);
}

#[test]
fn run_output_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        &quadratic_config(json!([{"preset": "primal_gradient"}, {"preset": "tseng3", "max_iters": 50}])),
    );
    for out in ["a", "b"] {
        assert_eq!(run_in(dir.path(), "run", &config, out).status.code(), Some(0));
    }
    for file in ["primal_gradient.csv", "tseng3.csv", "tseng3.trace.json", "primal_gradient.certificate.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(file)).unwrap(), fs::read(dir.path().join("b").join(file)).unwrap());
    }
}

#[test]
fn decreasing_beta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let schedule = json!({"kind": "custom", "lambdas": [1.0, 1.0, 1.0], "betas": [1.0, 2.0, 1.5, 3.0]});
    let config = json!({
        "problem": {"generate": {"variant": "l1_regression", "dim": 4, "seed": 1}},
        "setup": {"dim": 4, "set": {"kind": "free"}, "geometry": "euclidean"},
        "runs": [{"preset": "dam", "schedule": schedule, "max_iters": 3}]
    });
    let path = write_config(dir.path(), "c.json", &config);
    let out = run_in(dir.path(), "run", &path, "out");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decreas"));
}

#[test]
fn understated_lipschitz_aborts_with_step_condition() {
    let spec = GeneratorSpec { condition: Some(50.0), ..GeneratorSpec::new(Variant::Quadratic, 8, 4) };
    let l = spec.generate().unwrap().lipschitz().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let runs = json!([{"preset": "fgm_md", "schedule": {"kind": "fast_smooth", "lipschitz": l / 2.0}}]);
    let path = write_config(dir.path(), "c.json", &quadratic_config(runs));
    let out = run_in(dir.path(), "run", &path, "out");
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn loose_tolerance_flag_and_kmax_are_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &quadratic_config(json!([{"preset": "fgm_md"}])));
    let out = auxopt(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--kmax",
        "17",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_csv(&dir.path().join("out/fgm_md.csv")).1.len(), 17);
}

#[test]
fn compare_nonsmooth_presets() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "problem": {"generate": {"variant": "max_affine", "dim": 10, "seed": 2, "rows": 6}},
        "setup": {"dim": 10, "set": {"kind": "simplex"}, "geometry": "entropy"},
        "runs": [{"preset": "extended_mdm"}, {"preset": "dam"}, {"preset": "double_averaging"}],
        "max_iters": 300
    });
    let path = write_config(dir.path(), "c.json", &config);
    let first = run_in(dir.path(), "compare", &path, "a");
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let (header, rows) = read_csv(&dir.path().join("a/compare.csv"));
    assert_eq!(header, ["k", "extended_mdm", "dam", "double_averaging"]);
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().flat_map(|r| &r[1..]).all(|v| v.parse::<f64>().unwrap() >= -1e-12));

    assert_eq!(run_in(dir.path(), "compare", &path, "b").status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("a/compare.csv")).unwrap(), fs::read(dir.path().join("b/compare.csv")).unwrap());
}

#[test]
fn compare_smooth_presets_shows_acceleration() {
    let dir = tempfile::tempdir().unwrap();
    let runs = json!([{"preset": "primal_gradient"}, {"preset": "dual_gradient"}, {"preset": "fgm_md"}, {"preset": "fgm_da"}]);
    let path = write_config(dir.path(), "c.json", &quadratic_config(runs));
    assert_eq!(run_in(dir.path(), "compare", &path, "out").status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("out/compare.csv"));
    assert_eq!(header.len(), 5);
    let last: Vec<f64> = rows.last().unwrap()[1..].iter().map(|v| v.parse().unwrap()).collect();
    assert!(last[2] < last[0] && last[3] < last[1]);
}

#[test]
fn compare_needs_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", &quadratic_config(json!([{"preset": "fgm_md"}])));
    assert_eq!(run_in(dir.path(), "compare", &path, "out").status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let beta = auxopt(&["verify", "--suite", "beta_hat", "--kmax", "1000000"]);
    assert_eq!(beta.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&beta.stdout).unwrap();
    assert_eq!(report[0]["suite"], "beta_hat");
    assert_eq!(report[0]["pass"], Value::Bool(true));

    let mutation = auxopt(&["verify", "--suite", "mutation", "--seed", "7"]);
    assert_eq!(mutation.status.code(), Some(0), "{}", String::from_utf8_lossy(&mutation.stderr));

    let dir = tempfile::tempdir().unwrap();
    let all = auxopt(&["verify", "--kmax", "200", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(all.status.code(), Some(0), "{}", String::from_utf8_lossy(&all.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 6);

    assert_eq!(auxopt(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn explicit_problem_with_mixing_and_schedule_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "problem": {"variant": "l1_regression", "a": [[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]], "b": [1.0, 0.5, 0.0]},
        "setup": {"dim": 2, "set": {"kind": "box", "lower": [-1.0, -1.0], "upper": [1.0, 1.0]}, "geometry": "euclidean"},
        "runs": [
            {"preset": "dam", "mix": {"policy": "seeded_random", "seed": 7}},
            {"preset": "extended_mdm", "schedule": {"kind": "simple_averages", "gamma": 0.5}}
        ],
        "max_iters": 100
    });
    let path = write_config(dir.path(), "c.json", &config);
    let out = run_in(dir.path(), "run", &path, "out");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // no reference optimum for this problem, so gap and bound columns stay empty
    let (_, rows) = read_csv(&dir.path().join("out/dam.csv"));
    assert!(rows.iter().all(|r| r[2].is_empty() && !r[5].is_empty()));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_wcontract");

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path) -> Output {
    Command::new(BIN).arg("run").arg(config).env("WCONTRACT_OUTPUT_DIR", out).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn claim(rep: &Value, name: &str) -> f64 {
    rep["claims"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no claim {name}"))["value"].as_f64().unwrap()
}

#[test]
fn heat_run_certifies_and_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "heat.toml", "experiment = \"heat\"\nseed = 2\n[heat]\nn = 16\nalpha = 1.0\n");
    let out = tmp.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(&out);
    assert_eq!(rep["status"], "certified");
    let lam = claim(&rep, "lambda_certified");
    let exact = -2.0 * 256.0 * (1.0 - (std::f64::consts::PI / 16.0).cos());
    assert!((lam - exact).abs() < 1e-8 * exact.abs());
    assert!((claim(&rep, "fitted_exponent") - exact).abs() < 0.02 * exact.abs());
    for c in rep["claims"].as_array().unwrap() {
        assert!(["closed_form", "eigen", "sampled", "fitted"].contains(&c["method"].as_str().unwrap()));
    }
    let files: Vec<&str> = rep["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert_eq!(files, ["decay.csv", "report.json"]);
    let csv = fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(csv.starts_with("t,"));
}

#[test]
fn negative_grid_size_is_an_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "experiment = \"heat\"\n[heat]\nn = -8\n");
    let o = run(&cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("heat.n") && err.contains("line 3"), "{err}");
}

#[test]
fn unknown_keys_and_foreign_sections_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text, field) in [
        ("a.toml", "experiment = \"heat\"\n[heat]\nalpah = 1.0\n", "alpah"),
        ("b.toml", "experiment = \"heat\"\n[poisson]\nn = 8\n", "poisson"),
        ("c.toml", "experiment = \"mle\"\n", "mle"),
        ("d.toml", "experiment = \"heating\"\n", "experiment"),
    ] {
        let cfg = write_config(tmp.path(), name, text);
        let o = Command::new(BIN).arg("validate").arg(&cfg).output().unwrap();
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(field), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn validate_accepts_shipped_configs() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let o = Command::new(BIN).arg("validate").arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn reaction_counterexample_withholds_with_reason() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reaction_diffusion_turing.toml");
    let out = tmp.path().join("out");
    let o = run(Path::new(cfg), &out);
    assert_eq!(o.status.code(), Some(2));
    let rep = report(&out);
    assert_eq!(rep["status"], "withheld");
    let failing: Vec<&str> = rep["details"]["certificate"]["failing"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(failing.contains(&"condition_2"), "{failing:?}");
}

#[test]
fn uncoupled_oscillators_withheld() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/phase_locking_uncoupled.toml");
    let out = tmp.path().join("out");
    assert_eq!(run(Path::new(cfg), &out).status.code(), Some(2));
    assert_eq!(report(&out)["details"]["period_test_passed"], false);
}

#[test]
fn numerical_failure_writes_error_report() {
    let tmp = tempfile::tempdir().unwrap();
    // A projector that is not idempotent passes validation but fails in the run.
    let cfg = write_config(tmp.path(), "p.toml", "experiment = \"subspace\"\n[subspace]\nn = 4\nprojector = [[1.0, 1.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]]\n");
    let out = tmp.path().join("out");
    assert_eq!(run(&cfg, &out).status.code(), Some(1));
    let rep = report(&out);
    assert_eq!(rep["status"], "error");
    assert!(rep["error"].as_str().unwrap().contains("P^2 != P"), "{}", rep["error"]);
}

#[test]
fn list_is_stable_and_complete() {
    let a = Command::new(BIN).arg("list").output().unwrap();
    let b = Command::new(BIN).arg("list").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(names.len(), 15);
    assert_eq!(names[0], "measure");
    assert_eq!(names[14], "vanishing_osl");
    assert_eq!(text.matches("  anchor: ").count(), 15);
    assert!(text.contains("anchor: Contraction to a limit cycle"));
    assert!(text.contains("required: experiment, growth_bound.matrix, growth_bound.u0, growth_bound.du0"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["limit_cycle", "reaction_diffusion", "subspace"] {
        let cfg = format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        run(Path::new(&cfg), &a);
        run(Path::new(&cfg), &b);
        for f in report(&a)["files"].as_array().unwrap() {
            let f = f.as_str().unwrap();
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{name}/{f}");
        }
    }
}

#[test]
fn output_dir_from_config_when_env_unset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from_config");
    let cfg = write_config(tmp.path(), "m.toml", &format!("experiment = \"measure\"\noutput_dir = {:?}\n[measure]\nmatrix = [[-2.0, 1.0], [0.0, -3.0]]\n", out.display().to_string()));
    let o = Command::new(BIN).arg("run").arg(&cfg).env_remove("WCONTRACT_OUTPUT_DIR").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(claim(&rep, "mu_1"), -2.0);
    assert_eq!(claim(&rep, "mu_inf"), -1.0);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergodic::commands::{SimulationArtifact, SweepRecord, TableArtifact, ValidationArtifact};
use ergodic::output::from_json;
use ergodic_core::SolveResult;

const VERHULST: &str = r#""model": {"name": "verhulst_pearl", "mu": 1.0, "sigma": 1.0, "b": 0.01},
    "cost": {"kind": "power", "p": 2.0}, "gamma": -1.0"#;
const OU: &str = r#""model": {"name": "ornstein_uhlenbeck", "b": 1.0}, "cost": {"kind": "absolute"}, "gamma": 0.1"#;

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("{{\"spec_version\": 1, {body}}}")).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ergodic"));
    cmd.args(args).arg("--output").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json<T: serde::de::DeserializeOwned>(path: PathBuf) -> T {
    from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_reproduces_reference_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let vp = config(dir.path(), "vp.json", &format!("{VERHULST}, \"lambda\": 100"));
    let o = run(&["solve"], Some(&vp), &dir.path().join("vp"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: SolveResult = read_json(dir.path().join("vp/solve.json"));
    assert!((r.y_star - 0.684).abs() <= 0.005, "{}", r.y_star);
    assert!(String::from_utf8_lossy(&o.stdout).contains("y* = 0.684"));

    let ou = config(dir.path(), "ou.json", &format!("{OU}, \"lambda\": 1"));
    let o = run(&["solve"], Some(&ou), &dir.path().join("ou"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: SolveResult = read_json(dir.path().join("ou/solve.json"));
    assert!((r.y_star - 0.182).abs() <= 0.005, "{}", r.y_star);
}

#[test]
fn solve_json_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let ou = config(dir.path(), "ou.json", &format!("{OU}, \"lambda\": 10"));
    assert_eq!(code(&run(&["solve"], Some(&ou), dir.path())), 0);
    let from_file: SolveResult = read_json(dir.path().join("solve.json"));
    let cfg = ergodic::RunConfig::load(&ou).unwrap();
    let in_memory = ergodic_core::solve(&cfg.problem(10.0).unwrap()).unwrap();
    assert_eq!(from_file, in_memory);
}

#[test]
fn invalid_configs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body, field) in [
        ("neg.json", format!("{OU}, \"lambda\": -1"), "lambda"),
        ("zero.json", format!("{OU}, \"lambda\": 0"), "lambda"),
        ("unknown.json", format!("{OU}, \"lambda\": 1, \"colour\": 2"), "colour"),
        ("grid.json", format!("{OU}, \"lambdas\": [5, 1]"), "lambdas"),
        ("sigma.json", VERHULST.replace("\"sigma\": 1.0", "\"sigma\": -1.0") + ", \"lambda\": 1", "sigma"),
    ] {
        let c = config(dir.path(), name, &body);
        let o = run(&["solve"], Some(&c), dir.path());
        assert_eq!(code(&o), 3, "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{name}: {}", stderr(&o));
    }
    let o = run(&["solve"], Some(&dir.path().join("missing.json")), dir.path());
    assert_eq!(code(&o), 3);
    let o = run(&["simulate"], Some(&config(dir.path(), "nosim.json", &format!("{OU}, \"lambda\": 1"))), dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn sweep_writes_one_row_per_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "vp.json", &format!("{VERHULST}, \"lambdas\": [5, 10, 50, 100, 1000]"));
    let o = run(&["sweep", "--format", "csv"], Some(&c), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!dir.path().join("sweep.json").exists());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,y_star,beta_below,beta_above,beta,y_singular,gap,status");
    let expected = [0.317, 0.496, 0.656, 0.684, 0.726];
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for (row, want) in rows.iter().zip(expected) {
        let y: f64 = row[1].parse().unwrap();
        assert!((y - want).abs() <= 0.005, "{row:?}");
        assert_eq!(row[7], "ok");
    }
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "ou.json", &format!("{OU}, \"lambdas\": []"));
    let o = run(&["sweep"], Some(&c), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(dir.path().join("sweep.csv")).unwrap(),
        "lambda,y_star,beta_below,beta_above,beta,y_singular,gap,status\n"
    );
    let records: Vec<SweepRecord> = read_json(dir.path().join("sweep.json"));
    assert!(records.is_empty());
}

#[test]
fn tables_reproduce_and_unknown_name_fails() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["verhulst", "ou"] {
        let o = run(&["table", name], None, dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let t: TableArtifact = read_json(dir.path().join(format!("table_{name}.json")));
        assert_eq!(t.rows.len(), 5);
        for r in t.rows.iter() {
            assert!(r.abs_diff.unwrap() <= 0.005, "{r:?}");
        }
        assert!(t.singular.abs_diff.unwrap() <= 0.005);
        let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
        assert_eq!(stdout.lines().count(), 7, "{stdout}");
    }
    let o = run(&["table", "gbm"], None, dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_reports_z_score_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{OU}, \"lambda\": 10, \"simulation\": {{\"time_step\": 0.002, \"horizon\": 200, \"replicates\": 4, \"seed\": 11, \"compare_offsets\": [-0.1, 0.1]}}"
    );
    let c = config(dir.path(), "ou.json", &body);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run(&["simulate"], Some(&c), &a)), 0);
    assert_eq!(code(&run(&["simulate", "--jobs", "1"], Some(&c), &b)), 0);
    for f in ["simulate.json", "simulate.csv", "simulate_replicates.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let art: SimulationArtifact = read_json(a.join("simulate.json"));
    assert!(art.report.z_score.unwrap().is_finite());
    assert_eq!(art.report.analytic_beta, Some(art.solve.beta));
    assert_eq!(art.comparison.as_ref().unwrap().reports.len(), 3);
    assert!(fs::read_to_string(a.join("simulate.json")).unwrap().contains("\"z_score\""));

    let other = dir.path().join("c");
    assert_eq!(code(&run(&["simulate", "--seed", "12"], Some(&c), &other)), 0);
    assert_ne!(fs::read(a.join("simulate.json")).unwrap(), fs::read(other.join("simulate.json")).unwrap());
}

#[test]
fn validate_passes_on_logistic_model() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "vp.json", &format!("{VERHULST}, \"lambda\": 50"));
    let o = run(&["validate"], Some(&c), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let art: ValidationArtifact = read_json(dir.path().join("validate.json"));
    assert!(art.assumptions.all_passed());
    assert!(art.variational.unwrap().all_passed());
    let csv = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert!(!csv.contains(",fail,"), "{csv}");
}

#[test]
fn validate_reports_interior_maximum_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let xs: Vec<f64> = (0..=40).map(|i| -4.0 + 0.2 * i as f64).collect();
    let pis: Vec<f64> = xs.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
    let body = format!(
        "\"model\": {{\"name\": \"ornstein_uhlenbeck\", \"b\": 1.0}}, \"cost\": {{\"kind\": \"table\", \"x\": {xs:?}, \"pi\": {pis:?}, \"x_star\": 0.5}}, \"gamma\": 0.0, \"lambda\": 1"
    );
    let c = config(dir.path(), "bump.json", &body);
    let o = run(&["validate"], Some(&c), dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert!(csv.contains("assumption,pi_mu_unimodal,fail"), "{csv}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "ou.json", &format!("{OU}, \"lambdas\": [1, 5, 10, 100, 300]"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run(&["sweep"], Some(&c), out)), 0);
        assert_eq!(code(&run(&["table", "verhulst"], None, out)), 0);
    }
    for f in ["sweep.csv", "sweep.json", "table_verhulst.csv", "table_verhulst.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

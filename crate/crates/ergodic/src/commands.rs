//! The five CLI commands. Each writes its artifacts under the output
//! directory and returns a human-readable summary plus an exit code.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ergodic_core::{
    build_pair, build_value_function, solve_threshold, validate_assumptions, variational_check, LowerBoundary,
    ProblemSpec, SolveResult, ValidationReport, VariationalReport,
};

use crate::config::{reference, Format, RunConfig, REFERENCE_NAMES};
use crate::output::{csv_float, to_csv, write_json, write_text};
use crate::simulate::{compare_policies, estimate_beta, PolicyComparison, SimConfig, SimReport};
use crate::{Error, EXIT_NUMERIC, EXIT_OK};

pub const SWEEP_HEADER: [&str; 8] =
    ["lambda", "y_star", "beta_below", "beta_above", "beta", "y_singular", "gap", "status"];

/// Where and how artifacts are written.
#[derive(Debug, Clone)]
pub struct Context {
    pub output: PathBuf,
    pub format: Format,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub exit_code: i32,
    /// Artifacts written, in order.
    pub artifacts: Vec<PathBuf>,
}

impl Context {
    fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T, written: &mut Vec<PathBuf>) -> Result<(), Error> {
        if self.format.json() {
            let path = self.output.join(name);
            write_json(&path, value)?;
            written.push(path);
        }
        Ok(())
    }

    fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>], written: &mut Vec<PathBuf>) -> Result<(), Error> {
        if self.format.csv() {
            let path = self.output.join(name);
            write_text(&path, &to_csv(header, rows)?)?;
            written.push(path);
        }
        Ok(())
    }
}

fn solve_spec(spec: &ProblemSpec) -> Result<SolveResult, ergodic_core::Error> {
    let pair = build_pair(spec)?;
    solve_threshold(spec, &pair)
}

fn summary_line(r: &SolveResult) -> String {
    format!(
        "lambda = {}: y* = {:.6}, beta = {:.6}, x~ = {:.6}, x^ = {:.6}, y*_s = {:.6}, residual = {:.2e}",
        r.lambda, r.y_star, r.beta, r.x_tilde, r.x_hat, r.singular_threshold, r.residual_p
    )
}

fn sweep_row(lambda: f64, outcome: &Result<SolveResult, ergodic_core::Error>) -> Vec<String> {
    match outcome {
        Ok(r) => vec![
            csv_float(lambda),
            csv_float(r.y_star),
            csv_float(r.beta_below),
            csv_float(r.beta_above),
            csv_float(r.beta),
            csv_float(r.singular_threshold),
            csv_float(r.gap()),
            if r.diagnostics.beta_consistent { "ok".into() } else { "beta_inconsistent".into() },
        ],
        Err(e) => {
            let mut row = vec![csv_float(lambda)];
            row.extend(vec![String::new(); 6]);
            row.push(format!("error: {e}"));
            row
        }
    }
}

pub fn cmd_solve(config: &RunConfig, ctx: &Context) -> Result<Outcome, Error> {
    let lambda = config.single_lambda()?;
    let spec = config.problem(lambda)?;
    let result = solve_spec(&spec)?;
    let mut artifacts = Vec::new();
    ctx.json("solve.json", &result, &mut artifacts)?;
    ctx.csv("solve.csv", &SWEEP_HEADER, &[sweep_row(lambda, &Ok(result))], &mut artifacts)?;
    if !result.diagnostics.beta_consistent {
        eprintln!("warning: beta expressions differ by {:.3e} (relative)", result.diagnostics.beta_relative_gap);
    }
    Ok(Outcome { summary: summary_line(&result), exit_code: EXIT_OK, artifacts })
}

/// Intensity and solve outcome, in input order.
pub type SweepRows = Vec<(f64, ergodic_core::Result<SolveResult>)>;

/// One sweep row as stored in `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub status: String,
    pub result: Option<SolveResult>,
}

/// Solves every intensity (in parallel); rows keep the input order.
pub fn sweep(config: &RunConfig, lambdas: &[f64]) -> Result<SweepRows, Error> {
    ergodic_core::threshold::check_lambda_grid(lambdas).map_err(|e| Error::Config(e.to_string()))?;
    let specs: Vec<ProblemSpec> = lambdas.iter().map(|&l| config.problem(l)).collect::<Result<_, _>>()?;
    Ok(specs.par_iter().map(|s| (s.lambda(), solve_spec(s))).collect())
}

pub fn cmd_sweep(config: &RunConfig, ctx: &Context) -> Result<Outcome, Error> {
    let rows = sweep(config, &config.lambda_list()?)?;
    let mut artifacts = Vec::new();
    let records: Vec<SweepRecord> = rows
        .iter()
        .map(|(l, o)| SweepRecord { lambda: *l, status: sweep_row(*l, o)[7].clone(), result: o.as_ref().ok().copied() })
        .collect();
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|(l, o)| sweep_row(*l, o)).collect();
    ctx.csv("sweep.csv", &SWEEP_HEADER, &csv_rows, &mut artifacts)?;
    ctx.json("sweep.json", &records, &mut artifacts)?;
    let failed = rows.iter().filter(|(_, o)| o.is_err()).count();
    let mut summary: Vec<String> = rows
        .iter()
        .map(|(l, o)| match o {
            Ok(r) => summary_line(r),
            Err(e) => format!("lambda = {l}: failed: {e}"),
        })
        .collect();
    summary.push(format!("{} of {} intensities solved", rows.len() - failed, rows.len()));
    Ok(Outcome { summary: summary.join("\n"), exit_code: if failed > 0 { EXIT_NUMERIC } else { EXIT_OK }, artifacts })
}

/// Contents of `simulate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationArtifact {
    pub solve: SolveResult,
    pub report: SimReport,
    pub comparison: Option<PolicyComparison>,
}

/// Simulates at `y*` and, on the same random numbers, at `y* + offset`.
pub fn simulation(spec: &ProblemSpec, sim: &SimConfig, offsets: &[f64]) -> Result<SimulationArtifact, Error> {
    let solve = solve_spec(spec)?;
    if offsets.iter().all(|&d| d == 0.0) {
        let report = estimate_beta(spec, &solve, sim)?;
        return Ok(SimulationArtifact { solve, report, comparison: None });
    }
    let mut deltas: Vec<f64> = offsets.to_vec();
    deltas.push(0.0);
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let thresholds: Vec<f64> = deltas.iter().map(|d| solve.y_star + d).collect();
    let comparison = compare_policies(spec, &thresholds, sim)?;
    let at = deltas.iter().position(|&d| d == 0.0).expect("zero offset present");
    let mut report = comparison.reports[at].clone();
    report.analytic_beta = Some(solve.beta);
    report.z_score = Some((report.mean - solve.beta) / report.std_error);
    Ok(SimulationArtifact { solve, report, comparison: Some(comparison) })
}

pub fn cmd_simulate(config: &RunConfig, ctx: &Context) -> Result<Outcome, Error> {
    let block =
        config.simulation.as_ref().ok_or_else(|| Error::Config("simulation: block required for simulate".into()))?;
    let spec = config.problem(config.single_lambda()?)?;
    let sim = block.sim_config(ctx.seed);
    let art = simulation(&spec, &sim, &block.compare_offsets)?;

    let reports: Vec<&SimReport> = match &art.comparison {
        Some(c) => c.reports.iter().collect(),
        None => vec![&art.report],
    };
    let header = [
        "threshold",
        "mean",
        "std_error",
        "ci95_low",
        "ci95_high",
        "control_events",
        "average_impulse",
        "arrivals",
        "invalid_replicates",
        "paired_difference",
        "paired_std_error",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let paired = art.comparison.as_ref().map(|c| c.versus_best[i]);
            vec![
                csv_float(r.threshold),
                csv_float(r.mean),
                csv_float(r.std_error),
                csv_float(r.ci95[0]),
                csv_float(r.ci95[1]),
                r.control_events.to_string(),
                csv_float(r.average_impulse),
                r.arrivals.to_string(),
                r.invalid_replicates.to_string(),
                paired.map_or(String::new(), |p| csv_float(p.mean)),
                paired.map_or(String::new(), |p| csv_float(p.std_error)),
            ]
        })
        .collect();
    let replicate_rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.per_replicate_cost
                .iter()
                .enumerate()
                .map(move |(k, c)| vec![csv_float(r.threshold), k.to_string(), c.map_or(String::new(), csv_float)])
        })
        .collect();

    let mut artifacts = Vec::new();
    ctx.json("simulate.json", &art, &mut artifacts)?;
    ctx.csv("simulate.csv", &header, &rows, &mut artifacts)?;
    ctx.csv("simulate_replicates.csv", &["threshold", "replicate", "average_cost"], &replicate_rows, &mut artifacts)?;

    let r = &art.report;
    let mut summary = vec![format!(
        "y* = {:.6}: simulated {:.6} ± {:.2e} (95% CI [{:.6}, {:.6}]), analytic beta = {:.6}, z = {:.2}",
        r.threshold,
        r.mean,
        r.std_error,
        r.ci95[0],
        r.ci95[1],
        art.solve.beta,
        r.z_score.unwrap_or(f64::NAN)
    )];
    if let Some(c) = &art.comparison {
        for (rep, d) in c.reports.iter().zip(&c.versus_best) {
            summary.push(format!(
                "  y = {:.6}: cost {:.6}, paired difference to best {:+.3e} ± {:.2e}",
                rep.threshold, rep.mean, d.mean, d.std_error
            ));
        }
        summary.push(format!(
            "  cheapest threshold: {:.6} ({})",
            c.reports[c.best].threshold,
            if c.conclusive { "conclusive" } else { "inconclusive" }
        ));
    }
    if r.time_step_warning {
        eprintln!("warning: lambda * time_step > 0.1; arrival thinning is coarse");
    }
    if r.clamp_warnings > 0 {
        eprintln!("warning: {} Euler steps clamped at the lower boundary", r.clamp_warnings);
    }
    Ok(Outcome { summary: summary.join("\n"), exit_code: EXIT_OK, artifacts })
}

/// Contents of `validate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationArtifact {
    pub assumptions: ValidationReport,
    pub solve: Option<SolveResult>,
    pub solve_error: Option<String>,
    pub variational: Option<VariationalReport>,
}

fn default_grid(spec: &ProblemSpec, r: &SolveResult, n: usize) -> Vec<f64> {
    let (lo, hi) = match spec.model.lower() {
        LowerBoundary::Zero => (0.1 * r.y_star, 4.0 * r.x_hat),
        LowerBoundary::NegInfinity => {
            let s = (r.x_hat - r.x_tilde).max(0.5);
            (r.y_star - 3.0 * s, r.y_star + 3.0 * s)
        }
    };
    linspace(lo, hi, n)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn validation(config: &RunConfig) -> Result<ValidationArtifact, Error> {
    let spec = config.problem(config.single_lambda()?)?;
    let assumptions = validate_assumptions(&spec);
    let v = config.validation.clone().unwrap_or(crate::config::ValidationConfig {
        grid: None,
        points: None,
        tolerance: None,
    });
    let solved = build_pair(&spec).and_then(|pair| {
        let r = solve_threshold(&spec, &pair)?;
        let vf = build_value_function(&spec, &pair, &r)?;
        let n = v.points.unwrap_or(41);
        let grid = match v.grid {
            Some([lo, hi]) => linspace(lo, hi, n),
            None => default_grid(&spec, &r, n),
        };
        Ok((r, variational_check(&vf, &grid, v.tolerance.unwrap_or(1e-4))))
    });
    Ok(match solved {
        Ok((r, report)) => {
            ValidationArtifact { assumptions, solve: Some(r), solve_error: None, variational: Some(report) }
        }
        Err(e) => ValidationArtifact { assumptions, solve: None, solve_error: Some(e.to_string()), variational: None },
    })
}

pub fn cmd_validate(config: &RunConfig, ctx: &Context) -> Result<Outcome, Error> {
    let art = validation(config)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |group: &str, c: &ergodic_core::CheckOutcome| {
        rows.push(vec![
            group.into(),
            c.name.clone(),
            if c.passed { "pass".into() } else { "fail".into() },
            csv_float(c.worst),
            csv_float(c.worst_at),
        ]);
    };
    for c in &art.assumptions.checks {
        push("assumption", c);
    }
    push("informational", &art.assumptions.growth_condition);
    if let Some(v) = &art.variational {
        for c in &v.checks {
            push("variational", c);
        }
    }
    let mut artifacts = Vec::new();
    ctx.json("validate.json", &art, &mut artifacts)?;
    ctx.csv("validate.csv", &["group", "check", "result", "worst", "worst_at"], &rows, &mut artifacts)?;

    let mut summary: Vec<String> = rows.iter().map(|r| format!("{:<14} {:<28} {}", r[0], r[1], r[2])).collect();
    if let Some(e) = &art.solve_error {
        summary.push(format!("solver: {e}"));
    }
    // Failed checks are reported, not fatal; a solver failure on a problem
    // that passes every assumption check is.
    let exit_code = if art.solve_error.is_some() && art.assumptions.all_passed() { EXIT_NUMERIC } else { EXIT_OK };
    Ok(Outcome { summary: summary.join("\n"), exit_code, artifacts })
}

/// One line of a reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub lambda: f64,
    pub published: f64,
    pub computed: Option<f64>,
    pub abs_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableArtifact {
    pub name: String,
    pub rows: Vec<TableRow>,
    pub singular: SingularRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularRow {
    pub published: f64,
    pub computed: Option<f64>,
    pub abs_diff: Option<f64>,
}

pub fn table(name: &str) -> Result<TableArtifact, Error> {
    let reference = reference(name)
        .ok_or_else(|| Error::Config(format!("table: unknown name {name:?}; expected one of {REFERENCE_NAMES:?}")))?;
    let solved = sweep(&reference.config, &reference.lambdas)?;
    let rows: Vec<TableRow> = solved
        .iter()
        .zip(reference.published)
        .map(|((l, o), p)| {
            let y = o.as_ref().ok().map(|r| r.y_star);
            TableRow { lambda: *l, published: p, computed: y, abs_diff: y.map(|y| (y - p).abs()) }
        })
        .collect();
    let spec = reference.config.problem(reference.lambdas[0])?;
    let ys = ergodic_core::threshold::find_x_hat(&spec).ok();
    let p = reference.published_singular;
    Ok(TableArtifact {
        name: name.into(),
        rows,
        singular: SingularRow { published: p, computed: ys, abs_diff: ys.map(|y| (y - p).abs()) },
    })
}

pub fn cmd_table(name: &str, ctx: &Context) -> Result<Outcome, Error> {
    let t = table(name)?;
    let fmt3 = |v: Option<f64>| v.map_or("failed".to_string(), |v| format!("{v:.3}"));
    let mut summary = vec![format!("{:>10} {:>10} {:>10} {:>10}", "lambda", "published", "computed", "|diff|")];
    for r in &t.rows {
        summary.push(format!(
            "{:>10} {:>10.3} {:>10} {:>10}",
            r.lambda,
            r.published,
            fmt3(r.computed),
            fmt3(r.abs_diff)
        ));
    }
    let s = &t.singular;
    summary.push(format!("{:>10} {:>10.3} {:>10} {:>10}", "singular", s.published, fmt3(s.computed), fmt3(s.abs_diff)));

    let cell = |v: Option<f64>| v.map_or(String::new(), csv_float);
    let mut rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| vec![csv_float(r.lambda), csv_float(r.published), cell(r.computed), cell(r.abs_diff)])
        .collect();
    rows.push(vec!["singular".into(), csv_float(s.published), cell(s.computed), cell(s.abs_diff)]);

    let mut artifacts = Vec::new();
    ctx.csv(&format!("table_{name}.csv"), &["lambda", "published", "computed", "abs_diff"], &rows, &mut artifacts)?;
    ctx.json(&format!("table_{name}.json"), &t, &mut artifacts)?;
    let failed = s.computed.is_none() || t.rows.iter().any(|r| r.computed.is_none());
    Ok(Outcome { summary: summary.join("\n"), exit_code: if failed { EXIT_NUMERIC } else { EXIT_OK }, artifacts })
}

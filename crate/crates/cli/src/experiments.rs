//! The two PINN control experiments: training, artifact export and the
//! finite-difference verification of the learned control.

use anyhow::Result;
use fisher_stefan::neural::Mlp;
use fisher_stefan::pinn::{train, ControlProblem, LossBreakdown, TrainReport, TERM_NAMES};
use serde::Serialize;

use crate::checks::{Check, CheckList};
use crate::config::{Command, ExperimentConfig};
use crate::output::{linspace, write_field, write_json, write_manifest, write_rows, write_series, RunDir};
use crate::verify::{verify_free_boundary, verify_linearized, VerificationReport};

/// Loss magnitudes of the linearized experiment at 10^6 collocation points,
/// in [`TERM_NAMES`] order (the non-negativity term has none).
pub const LINEARIZED_REFERENCE: [f64; 7] = [9.0e-4, 1.0e-4, 4.0e-4, 3.0e-4, 1.5e-3, 4.0e-4, 3.3e-3];
/// Same for the free-boundary experiment.
pub const FREE_BOUNDARY_REFERENCE: [f64; 7] = [6.6e-3, 4.0e-4, 3.0e-3, 1.0e-4, 1.4e-3, 1.0e-4, 3.3e-3];

pub type Progress<'a> = &'a mut dyn FnMut(usize, &LossBreakdown);

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: TrainReport,
    /// `None` when the solver failed; the failure is recorded in `checks`.
    pub verification: Option<VerificationReport>,
    /// Smallest reconstructed physical density, if reconstruction succeeded.
    pub min_reconstructed_density: Option<f64>,
    pub checks: CheckList,
}

#[derive(Debug, Serialize)]
struct TermRow {
    term: &'static str,
    train: f64,
    test: f64,
    weighted_train: f64,
    reference: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BreakdownFile<'a, D: Serialize> {
    data: D,
    terms: Vec<TermRow>,
    train_total: f64,
    test_total: f64,
    generalization_error: f64,
    train: &'a LossBreakdown,
    test: &'a LossBreakdown,
}

fn breakdown_file<'a, D: Serialize>(data: D, report: &'a TrainReport, reference: &[f64; 7]) -> BreakdownFile<'a, D> {
    let (train, test, weighted) = (report.train.terms(), report.test.terms(), report.train.weighted());
    let terms = (0..8)
        .map(|i| TermRow {
            term: TERM_NAMES[i],
            train: train[i],
            test: test[i],
            weighted_train: weighted[i],
            reference: reference.get(i).copied(),
        })
        .collect();
    BreakdownFile {
        data,
        terms,
        train_total: report.train.total,
        test_total: report.test.total,
        generalization_error: report.generalization_error,
        train: &report.train,
        test: &report.test,
    }
}

fn write_history(dir: &RunDir, history: &[LossBreakdown]) -> Result<()> {
    let mut header = vec!["epoch", "total"];
    header.extend(TERM_NAMES);
    let rows = history.iter().enumerate().map(|(e, b)| {
        let mut row = vec![e as f64, b.total];
        row.extend(b.terms());
        row
    });
    write_rows(&dir.path("loss_history.csv"), &header, rows)
}

fn write_checkpoints(dir: &RunDir, report: &TrainReport) -> Result<()> {
    let ckpt = dir.subdir("checkpoints")?;
    let nets = &report.nets;
    for (name, net) in [("state", &nets.state), ("scalar", &nets.scalar), ("control", &nets.control)] {
        write_json(&ckpt.join(format!("{name}.json")), &net.to_checkpoint())?;
    }
    Ok(())
}

fn term_checks(report: &TrainReport, reference: &[f64; 7], factor: f64) -> CheckList {
    let mut checks = CheckList::default();
    for (i, r) in reference.iter().enumerate() {
        checks.push(Check::at_most(format!("loss term {}", TERM_NAMES[i]), report.train.terms()[i], factor * r));
    }
    checks
}

fn eval(net: &Mlp, input: &[f64]) -> f64 {
    net.eval(input).expect("network input width checked at construction")
}

fn eval_x(net: &Mlp, input: &[f64]) -> f64 {
    net.input_derivatives(input).expect("network input width checked at construction").z_x()
}

/// Physical density `(x L(t), t, value)` rows for `x in [0, 1]`.
fn density_rows(xs: &[f64], ts: &[f64], length: &[f64], state: impl Fn(f64, f64) -> f64) -> Vec<(f64, f64, f64)> {
    let mut rows = Vec::with_capacity(xs.len() * ts.len());
    for (&t, &l) in ts.iter().zip(length) {
        for &x in xs.iter().filter(|&&x| x >= 0.0) {
            rows.push((x * l, t, state(x, t)));
        }
    }
    rows
}

fn record_verification(
    checks: &mut CheckList,
    dir: &RunDir,
    result: Result<VerificationReport>,
) -> Result<Option<VerificationReport>> {
    match result {
        Ok(v) => {
            write_json(&dir.path("verification.json"), &v)?;
            checks.push(Check::flag("verification solve completed", true));
            Ok(Some(v))
        }
        Err(e) => {
            write_json(&dir.path("verification.json"), &serde_json::json!({ "error": format!("{e:#}") }))?;
            checks.push(Check::flag(format!("verification solve completed ({e:#})"), false));
            Ok(None)
        }
    }
}

pub fn run_experiment1(config: &ExperimentConfig, dir: &RunDir, progress: Progress<'_>) -> Result<ExperimentOutcome> {
    let spec = config.experiment1;
    let problem = ControlProblem::Linearized(spec);
    let tol = &config.tolerances;
    write_manifest(dir, Command::Experiment1, config, spec)?;

    let report = train(&problem, &config.training.to_train_config(config.seed), progress)?;
    write_history(dir, &report.history)?;
    write_json(&dir.path("breakdown.json"), &breakdown_file(spec, &report, &LINEARIZED_REFERENCE))?;
    write_checkpoints(dir, &report)?;

    let nets = &report.nets;
    let xs = linspace(-1.0, 1.0, config.grid.sample_nx);
    let ts = linspace(0.0, spec.final_time, config.grid.sample_nt);
    let (a, b) = spec.omega;
    write_field(&dir.path("z_hat.csv"), &xs, &ts, |i, j| eval(&nets.state, &[xs[i], ts[j]]))?;
    write_field(&dir.path("v_hat.csv"), &xs, &ts, |i, j| {
        let x = xs[i];
        if x > a && x < b {
            eval(&nets.control, &[x, ts[j]])
        } else {
            0.0
        }
    })?;
    let k_hat: Vec<f64> = ts.iter().map(|&t| eval(&nets.scalar, &[t])).collect();
    write_series(&dir.path("k_hat.csv"), &ts, &k_hat)?;
    let trace: Vec<f64> = ts.iter().map(|&t| eval_x(&nets.state, &[0.0, t])).collect();
    write_series(&dir.path("neumann_trace.csv"), &ts, &trace)?;

    let mut checks = term_checks(&report, &LINEARIZED_REFERENCE, tol.table_factor);
    checks.push(Check::at_most("generalization error", report.generalization_error, tol.generalization));

    // h_bar = 1, so the front is L = sqrt(1 + k).
    let min_reconstructed_density = if k_hat.iter().all(|&k| 1.0 + k > 0.0) {
        let length: Vec<f64> = k_hat.iter().map(|&k| (1.0 + k).sqrt()).collect();
        write_series(&dir.path("length.csv"), &ts, &length)?;
        let rows = density_rows(&xs, &ts, &length, |x, t| eval(&nets.state, &[x, t]));
        let min = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        write_rows(&dir.path("density.csv"), &["x", "t", "value"], rows)?;
        checks.push(Check::at_least("min reconstructed density", min, tol.min_density));
        Some(min)
    } else {
        checks.push(Check::flag("front reconstruction (1 + k > 0)", false));
        None
    };

    let control = |x: f64, t: f64| eval(&nets.control, &[x, t]);
    let result = verify_linearized(&spec, control, config.grid.linearized_intervals, config.grid.steps);
    let verification = record_verification(&mut checks, dir, result.map(|(v, _)| v))?;
    if let Some(v) = &verification {
        checks.push(Check::at_most(
            "FD max |z(., T)| / max |z0|",
            v.terminal_state_norm / v.initial_state_norm,
            tol.linearized_state,
        ));
        checks.push(Check::at_most("FD |k(T)|", v.terminal_scalar_err, tol.linearized_scalar));
    }
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(ExperimentOutcome { report, verification, min_reconstructed_density, checks })
}

pub fn run_experiment2(config: &ExperimentConfig, dir: &RunDir, progress: Progress<'_>) -> Result<ExperimentOutcome> {
    let spec = config.experiment2;
    let problem = ControlProblem::FreeBoundary(spec);
    let tol = &config.tolerances;
    write_manifest(dir, Command::Experiment2, config, spec)?;

    let report = train(&problem, &config.training.to_train_config(config.seed), progress)?;
    write_history(dir, &report.history)?;
    write_json(&dir.path("breakdown.json"), &breakdown_file(spec, &report, &FREE_BOUNDARY_REFERENCE))?;
    write_checkpoints(dir, &report)?;

    let nets = &report.nets;
    let xs = linspace(0.0, 1.0, config.grid.sample_nx);
    let ts = linspace(0.0, spec.final_time, config.grid.sample_nt);
    write_field(&dir.path("psi_hat.csv"), &xs, &ts, |i, j| eval(&nets.state, &[xs[i], ts[j]]))?;
    let h_hat: Vec<f64> = ts.iter().map(|&t| eval(&nets.scalar, &[t])).collect();
    write_series(&dir.path("h_hat.csv"), &ts, &h_hat)?;
    let u_hat: Vec<f64> = ts.iter().map(|&t| eval(&nets.control, &[t])).collect();
    write_series(&dir.path("u_hat.csv"), &ts, &u_hat)?;
    let trace: Vec<f64> = ts.iter().map(|&t| eval_x(&nets.state, &[0.0, t])).collect();
    write_series(&dir.path("neumann_trace.csv"), &ts, &trace)?;

    let mut checks = term_checks(&report, &FREE_BOUNDARY_REFERENCE, tol.table_factor);

    let min_reconstructed_density = if h_hat.iter().all(|&h| h > 0.0) {
        let length: Vec<f64> = h_hat.iter().map(|h| h.sqrt()).collect();
        write_series(&dir.path("length.csv"), &ts, &length)?;
        let times = &config.grid.density_times;
        let lengths: Vec<f64> = times.iter().map(|&t| eval(&nets.scalar, &[t]).max(0.0).sqrt()).collect();
        let rows = density_rows(&xs, times, &lengths, |x, t| eval(&nets.state, &[x, t]));
        write_rows(&dir.path("density.csv"), &["x", "t", "value"], rows)?;
        let min = ts
            .iter()
            .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
            .map(|(x, t)| eval(&nets.state, &[x, t]))
            .fold(f64::INFINITY, f64::min);
        Some(min)
    } else {
        checks.push(Check::flag("front reconstruction (h > 0)", false));
        None
    };

    let control = |t: f64| eval(&nets.control, &[t]);
    let result = verify_free_boundary(&spec, control, config.grid.free_boundary_intervals, config.grid.steps);
    let verification = record_verification(&mut checks, dir, result.map(|(v, _)| v))?;
    if let Some(v) = &verification {
        checks.push(Check::at_most("FD max |psi(., T)|", v.terminal_state_norm, tol.free_boundary_state));
        checks.push(Check::at_most("FD |h(T) - target|", v.terminal_scalar_err, tol.free_boundary_scalar));
    }
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(ExperimentOutcome { report, verification, min_reconstructed_density, checks })
}

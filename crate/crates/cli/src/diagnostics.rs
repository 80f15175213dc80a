//! Oracle studies that need no training: manufactured solutions, the adjoint
//! boundary tie, the duality identity and the Carleman weight checks.

use anyhow::Result;
use fisher_stefan::carleman::{build_eta, check_kappa_condition, eval_weight_functions, CarlemanParams, KappaReport};
use fisher_stefan::fd::manufactured::{self, ManufacturedErrors};
use fisher_stefan::fd::{boundary_tie_residual, duality_refinement_study, solve_adjoint, SmoothCase};
use fisher_stefan::model::{Grid, PerturbationProblem, SpaceTimeField};
use ndarray::Array1;
use serde::Serialize;

use crate::checks::{Check, CheckList};
use crate::config::{Command, ExperimentConfig, ProblemKind};
use crate::output::{linspace, write_field, write_json, write_manifest, write_rows, write_series, RunDir};
use crate::verify::{verify_free_boundary, verify_linearized};

/// At most this many time levels are written for FD fields.
const MAX_EXPORT_LEVELS: usize = 101;

fn level_stride(nt: usize) -> usize {
    nt.div_ceil(MAX_EXPORT_LEVELS - 1).max(1)
}

fn export_field(dir: &RunDir, name: &str, field: &SpaceTimeField) -> Result<()> {
    let grid = field.grid;
    let stride = level_stride(grid.nt);
    let levels: Vec<usize> = (0..=grid.nt).step_by(stride).collect();
    let ts: Vec<f64> = levels.iter().map(|&j| grid.t(j)).collect();
    let xs = grid.xs().to_vec();
    write_field(&dir.path(name), &xs, &ts, |i, j| field.at(levels[j], i))
}

#[derive(Debug, Serialize)]
struct ForwardReport {
    linearized: Vec<ManufacturedErrors>,
    linearized_state_ratios: Vec<f64>,
    linearized_scalar_ratios: Vec<f64>,
    linearized_exact_final_scalar: f64,
    nonlinear: Vec<ManufacturedErrors>,
    nonlinear_orders: Vec<f64>,
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Manufactured-solution refinement studies of both forward solvers.
pub fn run_forward(config: &ExperimentConfig, dir: &RunDir) -> Result<CheckList> {
    let fc = &config.forward;
    write_manifest(dir, Command::Forward, config, fc)?;
    let big_t = 1.0;

    let mut linearized = Vec::new();
    let mut finest = None;
    for &n in &fc.linearized_intervals {
        let (sol, err) = manufactured::run_linearized(n, 2 * n, big_t)?;
        linearized.push(err);
        finest = Some(sol);
    }
    let mut nonlinear = Vec::new();
    for &n in &fc.nonlinear_intervals {
        nonlinear.push(manufactured::run_nonlinear(n, n, big_t)?.1);
    }
    let state: Vec<f64> = linearized.iter().map(|e| e.state).collect();
    let scalar: Vec<f64> = linearized.iter().map(|e| e.scalar).collect();
    let combined: Vec<f64> = nonlinear.iter().map(|e| e.state.max(e.scalar)).collect();
    let report = ForwardReport {
        linearized_state_ratios: ratios(&state),
        linearized_scalar_ratios: ratios(&scalar),
        linearized_exact_final_scalar: manufactured::linearized_exact_scalar(
            big_t,
            manufactured::LINEARIZED_K0,
            manufactured::LINEARIZED_MU,
        ),
        nonlinear_orders: manufactured::observed_orders(&combined),
        linearized,
        nonlinear,
    };
    write_json(&dir.path("forward.json"), &report)?;
    if let Some(sol) = finest {
        export_field(dir, "linearized_manufactured.csv", &sol.z)?;
    }

    let mut checks = CheckList::default();
    if let Some(last) = report.linearized.last() {
        checks.push(Check::at_most("linearized state error", last.state, fc.max_error));
        checks.push(Check::at_most(
            "linearized |k(T) - k*(T)|",
            (last.scalar_final - report.linearized_exact_final_scalar).abs(),
            fc.max_error,
        ));
    }
    let (lo, hi) = fc.ratio_range;
    for r in &report.linearized_state_ratios {
        checks.push(Check::within("linearized state error ratio", *r, lo, hi));
    }
    for r in &report.linearized_scalar_ratios {
        checks.push(Check::within("linearized scalar error ratio", *r, lo, hi));
    }
    for p in &report.nonlinear_orders {
        checks.push(Check::at_least("nonlinear observed order", *p, fc.min_order));
    }
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct AdjointReport {
    intervals: usize,
    steps: usize,
    max_tie_residual: f64,
    theta_initial: f64,
    w_initial_max: f64,
}

/// Backward solve of the adjoint for the smooth duality data with nonzero,
/// compatible terminal data.
pub fn run_adjoint(config: &ExperimentConfig, dir: &RunDir) -> Result<CheckList> {
    let dc = &config.diagnostics;
    write_manifest(dir, Command::Adjoint, config, dc)?;
    let n = dc.duality_intervals.last().copied().unwrap_or(100);
    let grid = Grid::new(n + 1, 2 * n, -1.0, 1.0, config.experiment1.final_time)?;
    let case = SmoothCase::generate(grid, config.experiment1.mu, config.seed)?;
    let reference = &case.problem.reference;
    let mu = case.problem.mu;
    let xs = grid.xs().to_vec();
    let last = reference.psi_bar_x.level(grid.nt);
    let profile = Array1::from_shape_fn(grid.nx, |i| (std::f64::consts::PI * (xs[i] + 1.0)).sin());
    // Terminal theta chosen so the nonlocal condition holds for `profile`.
    let theta_terminal = -boundary_tie_residual(profile.view(), 0.0, &xs, last, mu, grid.dx()) / (2.0 * mu);
    let adj = solve_adjoint(reference, mu, &case.f1, &case.g1, &profile, theta_terminal)?;
    let max_tie = (0..=grid.nt)
        .map(|j| {
            boundary_tie_residual(adj.w.level(j), adj.theta[j], &xs, reference.psi_bar_x.level(j), mu, grid.dx()).abs()
        })
        .fold(0.0, f64::max);
    let report = AdjointReport {
        intervals: n,
        steps: grid.nt,
        max_tie_residual: max_tie,
        theta_initial: adj.theta[0],
        w_initial_max: adj.w.level(0).iter().fold(0.0, |m, v| m.max(v.abs())),
    };
    write_json(&dir.path("adjoint.json"), &report)?;
    export_field(dir, "adjoint_w.csv", &adj.w)?;
    write_series(&dir.path("adjoint_theta.csv"), &grid.ts().to_vec(), &adj.theta.to_vec())?;

    let mut checks = CheckList::default();
    checks.push(Check::at_most("adjoint boundary tie residual", max_tie, dc.tie_tolerance));
    checks.push(Check::flag("adjoint solution finite", adj.w.values.iter().all(|v| v.is_finite())));
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct DualityReport {
    residuals: Vec<(usize, f64)>,
    ratios: Vec<f64>,
    zero_data_residual: f64,
}

/// Residual of `lhs - rhs` for all-zero data.
pub fn zero_data_duality_residual(intervals: usize, mu: f64, final_time: f64) -> Result<f64> {
    let grid = Grid::new(intervals + 1, 2 * intervals, -1.0, 1.0, final_time)?;
    let problem = PerturbationProblem::homogeneous(grid, mu, Array1::zeros(grid.nx), 0.0, SmoothCase::OMEGA)?;
    let case = SmoothCase {
        problem,
        control: SpaceTimeField::zeros(grid),
        f1: SpaceTimeField::zeros(grid),
        g1: Array1::zeros(grid.nt + 1),
    };
    Ok(case.residual()?)
}

pub fn run_duality(config: &ExperimentConfig, dir: &RunDir) -> Result<CheckList> {
    let dc = &config.diagnostics;
    write_manifest(dir, Command::Duality, config, dc)?;
    let (mu, big_t) = (config.experiment1.mu, config.experiment1.final_time);
    let residuals = duality_refinement_study(&dc.duality_intervals, mu, big_t, config.seed)?;
    let values: Vec<f64> = residuals.iter().map(|r| r.1).collect();
    let report = DualityReport {
        ratios: ratios(&values),
        zero_data_residual: zero_data_duality_residual(dc.duality_intervals.first().copied().unwrap_or(50), mu, big_t)?,
        residuals,
    };
    write_json(&dir.path("duality.json"), &report)?;
    let mut checks = CheckList::default();
    for r in &report.ratios {
        checks.push(Check::at_least("duality residual ratio", *r, dc.min_duality_ratio));
    }
    checks.push(Check::exactly("zero-data duality residual", report.zero_data_residual, 0.0));
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct WeightsReport {
    params: CarlemanParams,
    kappa: KappaReport,
    min_alpha_minus_beta: f64,
}

#[derive(Debug, Serialize)]
struct TimeRow {
    t: f64,
    beta_hat: f64,
    beta_check: f64,
    ell: f64,
    rho: f64,
    rho0: f64,
    rho1: f64,
    rho2: f64,
    ln_rho: f64,
    ln_rho0: f64,
    ln_rho1: f64,
    ln_rho2: f64,
}

/// Interior samples `i / (n + 1)` of `(0, T)`.
fn interior_times(n: usize, final_time: f64) -> Vec<f64> {
    (1..=n).map(|i| final_time * i as f64 / (n + 1) as f64).collect()
}

pub fn run_weights_check(config: &ExperimentConfig, dir: &RunDir) -> Result<CheckList> {
    let dc = &config.diagnostics;
    write_manifest(dir, Command::WeightsCheck, config, dc)?;
    let big_t = config.experiment1.final_time;
    let params = CarlemanParams::new(dc.lambda, dc.s, dc.kappa, dc.omega_prime, big_t)?;
    params.check_inside(config.experiment1.omega)?;
    let eta = build_eta(dc.omega_prime)?;
    let kappa = check_kappa_condition(dc.lambda, dc.kappa, &eta, big_t, &interior_times(dc.t_samples, big_t));

    let xs = linspace(-1.0, 1.0, dc.weight_nx);
    let ts = interior_times(dc.weight_nt, big_t);
    let mut field = Vec::with_capacity(xs.len() * ts.len());
    let mut min_gap = f64::INFINITY;
    for &t in &ts {
        for &x in &xs {
            let w = eval_weight_functions(&params, &eta, x, t)?;
            min_gap = min_gap.min(w.alpha - w.beta);
            field.push((x, t, w.alpha, w.beta, w.xi, w.zeta));
        }
    }
    write_rows(&dir.path("weights_field.csv"), &["x", "t", "alpha", "beta", "xi", "zeta"], field)?;
    let rows = ts
        .iter()
        .map(|&t| {
            let w = eval_weight_functions(&params, &eta, 0.0, t)?;
            Ok(TimeRow {
                t,
                beta_hat: w.beta_hat,
                beta_check: w.beta_check,
                ell: w.ell,
                rho: w.rho,
                rho0: w.rho0,
                rho1: w.rho1,
                rho2: w.rho2,
                ln_rho: w.ln_rho,
                ln_rho0: w.ln_rho0,
                ln_rho1: w.ln_rho1,
                ln_rho2: w.ln_rho2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let header = [
        "t",
        "beta_hat",
        "beta_check",
        "ell",
        "rho",
        "rho0",
        "rho1",
        "rho2",
        "ln_rho",
        "ln_rho0",
        "ln_rho1",
        "ln_rho2",
    ];
    write_rows(&dir.path("weights.csv"), &header, rows)?;

    let report = WeightsReport { params, kappa, min_alpha_minus_beta: min_gap };
    write_json(&dir.path("weights.json"), &report)?;
    let mut checks = CheckList::default();
    checks.push(Check::flag(format!("kappa above threshold {:.7}", kappa.threshold), kappa.satisfied));
    checks.push(Check::above("min_t (2 beta_check - beta_hat)", kappa.min_gap, 0.0));
    checks.push(Check::at_least("min (alpha - beta)", min_gap, 0.0));
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(checks)
}

/// Verifies a stored control (or the zero control) with the FD solvers.
pub fn run_verify(config: &ExperimentConfig, dir: &RunDir) -> Result<CheckList> {
    let vc = &config.verify;
    write_manifest(dir, Command::Verify, config, vc)?;
    let control = match &vc.checkpoints {
        Some(path) => {
            let file = path.join("control.json");
            let text =
                std::fs::read_to_string(&file).map_err(|e| anyhow::anyhow!("reading {}: {e}", file.display()))?;
            Some(fisher_stefan::neural::Mlp::from_checkpoint(&serde_json::from_str(&text)?)?)
        }
        None => None,
    };
    let tol = &config.tolerances;
    let mut checks = CheckList::default();
    let eval = |input: &[f64]| control.as_ref().map_or(0.0, |net| net.eval(input).unwrap_or(f64::NAN));
    let report = match vc.problem {
        ProblemKind::Experiment1 => {
            let (r, _) = verify_linearized(
                &config.experiment1,
                |x, t| eval(&[x, t]),
                config.grid.linearized_intervals,
                config.grid.steps,
            )?;
            checks.push(Check::at_most(
                "FD max |z(., T)| / max |z0|",
                r.terminal_state_norm / r.initial_state_norm,
                tol.linearized_state,
            ));
            checks.push(Check::at_most("FD |k(T)|", r.terminal_scalar_err, tol.linearized_scalar));
            r
        }
        ProblemKind::Experiment2 => {
            let (r, _) = verify_free_boundary(
                &config.experiment2,
                |t| eval(&[t]),
                config.grid.free_boundary_intervals,
                config.grid.steps,
            )?;
            checks.push(Check::at_most("FD max |psi(., T)|", r.terminal_state_norm, tol.free_boundary_state));
            checks.push(Check::at_most("FD |h(T) - target|", r.terminal_scalar_err, tol.free_boundary_scalar));
            r
        }
    };
    write_json(&dir.path("verification.json"), &report)?;
    write_json(&dir.path("checks.json"), &checks)?;
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_caps_levels() {
        assert_eq!(level_stride(400), 4);
        assert_eq!(level_stride(100), 1);
        assert_eq!(level_stride(50), 1);
        assert_eq!(level_stride(401), 5);
    }

    #[test]
    fn zero_data_residual_is_exactly_zero() {
        assert_eq!(zero_data_duality_residual(20, 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn interior_times_avoid_endpoints() {
        let t = interior_times(3, 2.0);
        assert_eq!(t, vec![0.5, 1.0, 1.5]);
    }
}

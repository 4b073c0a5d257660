//! Scenario runner behind `rrlab run`.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fracnorm::coercivity_check;
use crate::interface::{run_iteration, spectral_analysis, Status, SteklovSystem};
use crate::mesh::Theta;
use crate::{Error, Result};

use super::config::{MmsSweep, Scenario, ScenarioConfig};
use super::mms::{mms_sweep, Manufactured};
use super::monolithic::solve_monolithic;
use super::report::{Cell, CsvReport};
use super::sampling::smooth_field;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_SOLVER_FAILURE: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;

/// Relative bound on the PDE-vs-interface discrepancy.
pub const EQUIVALENCE_TOL: f64 = 1e-10;
/// Allowed deviation of an observed order from the expected one.
pub const ORDER_TOL: f64 = 0.2;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidProblem(_) | Error::InvalidInput(_) => EXIT_INVALID_CONFIG,
        _ => EXIT_SOLVER_FAILURE,
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: CsvReport,
    pub exit: i32,
}

impl ScenarioOutcome {
    fn checked(report: CsvReport, passed: bool) -> Self {
        ScenarioOutcome { report, exit: if passed { EXIT_SUCCESS } else { EXIT_THRESHOLD } }
    }

    pub fn passed(&self) -> bool {
        self.exit == EXIT_SUCCESS
    }
}

/// Relative H-norm distance between the interface iterate and the trace of the
/// PDE sweep after each of `n_iter` iterations from zero.
pub fn equivalence_discrepancies(sys: &SteklovSystem, s: f64, n_iter: usize) -> Result<Vec<f64>> {
    let res = sys.resolvent(s)?;
    let mut eta = sys.zero_primal();
    let mut state = res.initial_state(&eta)?;
    let mut out = Vec::with_capacity(n_iter);
    for _ in 0..n_iter {
        eta = res.pr_iterate(&eta)?;
        state = res.rr_pde_sweep(&state)?;
        let trace = sys.solvers[1].trace(&state.u[1])?;
        let scale = sys.h_norm(&eta).max(f64::MIN_POSITIVE);
        out.push(sys.h_norm(&trace.add_scaled(-1.0, &eta)?) / scale);
    }
    Ok(out)
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let mut outcome = match config.scenario {
        Scenario::Converge => converge(config)?,
        Scenario::Equivalence => equivalence(config)?,
        Scenario::Spectrum => spectrum(config)?,
        Scenario::Coercivity => coercivity(config)?,
        Scenario::Mms => mms(config)?,
    };
    let mut meta = std::mem::take(&mut outcome.report.metadata);
    outcome.report.stamp(&config.echo(), config.seed);
    outcome.report.metadata.append(&mut meta);
    Ok(outcome)
}

fn converge(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let sys = SteklovSystem::new(&config.spec)?;
    let reference = solve_monolithic(&config.spec)?.reference(&sys)?;
    let run = run_iteration(&sys, &config.iteration, Some(&reference))?;
    let mut report = CsvReport::new(&["n", "increment_h", "err_x1", "err_x2", "gap1", "gap2", "sp_residual"]);
    for r in &run.records {
        report.push(vec![
            r.n.into(),
            r.increment.into(),
            r.err_x[0].into(),
            r.err_x[1].into(),
            r.gap[0].into(),
            r.gap[1].into(),
            r.sp_residual.into(),
        ])?;
    }
    report.meta(format!("status: {}", run.status.name()));
    report.meta(format!("iterations: {}", run.iterations()));
    let exit = match run.status {
        Status::Converged => EXIT_SUCCESS,
        Status::MaxIter => EXIT_THRESHOLD,
        Status::Diverged => EXIT_SOLVER_FAILURE,
    };
    Ok(ScenarioOutcome { report, exit })
}

fn equivalence(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let sys = SteklovSystem::new(&config.spec)?;
    let d = equivalence_discrepancies(&sys, config.iteration.s, config.iteration.max_iter)?;
    let mut report = CsvReport::new(&["n", "max_rel_discrepancy"]);
    let mut running = 0.0f64;
    for (n, v) in d.iter().enumerate() {
        running = running.max(*v);
        report.push(vec![(n + 1).into(), running.into()])?;
    }
    Ok(ScenarioOutcome::checked(report, running <= EQUIVALENCE_TOL))
}

fn spectrum(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let sys = SteklovSystem::new(&config.spec)?;
    let rows = spectral_analysis(&sys, &config.s_list)?;
    let mut report = CsvReport::new(&[
        "s",
        "rho",
        "sigma_min_sj_s1",
        "sigma_min_sj_s2",
        "sigma_min_s1_s2",
        "lambda_min_sym_s1",
        "lambda_min_sym_s2",
    ]);
    let mut passed = true;
    for r in &rows {
        passed &= r.rho < 1.0 && r.sigma_min_sjs.iter().all(|v| *v > 0.0) && r.sigma_min_sum > 0.0;
        report.push(vec![
            r.s.into(),
            r.rho.into(),
            r.sigma_min_sjs[0].into(),
            r.sigma_min_sjs[1].into(),
            r.sigma_min_sum.into(),
            r.lambda_min_sym[0].into(),
            r.lambda_min_sym[1].into(),
        ])?;
    }
    Ok(ScenarioOutcome::checked(report, passed))
}

/// Ratios `<A_i u, B u> / |u|_W^2` for seeded smooth fields.
pub fn coercivity_ratios(sys: &SteklovSystem, i: usize, samples: usize, phi: f64, pad: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = smooth_field(sys, i, &mut rng);
        let r = coercivity_check(&sys.solvers[i], &u, phi, pad)?;
        if let (Some(a), Some(b)) = (r.ratio, r.ratio_homogeneous) {
            out.push((a, b));
        }
    }
    Ok(out)
}

fn coercivity(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let sys = SteklovSystem::new(&config.spec)?;
    let ratios = coercivity_ratios(&sys, config.subdomain, config.samples, config.phi, config.pad, config.seed)?;
    let mut report = CsvReport::new(&["sample", "ratio", "ratio_homogeneous"]);
    for (n, (a, b)) in ratios.iter().enumerate() {
        report.push(vec![(n + 1).into(), (*a).into(), (*b).into()])?;
    }
    let min_a = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min_b = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    report.push(vec![Cell::from("min"), min_a.into(), min_b.into()])?;
    Ok(ScenarioOutcome::checked(report, !ratios.is_empty() && min_a > 0.0))
}

fn mms(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let spec = &config.spec;
    let m = Manufactured { dimension: spec.dimension, lx: spec.lx, ly: spec.ly, alpha: 1.0 };
    let (levels, expected, by_time): (Vec<(usize, usize)>, f64, bool) = match config.mms_sweep {
        MmsSweep::Space => {
            let nt = |nx: usize| if spec.theta == Theta::Implicit { (nx * nx / 4).max(1) } else { nx };
            (config.levels.iter().map(|&nx| (nx, nt(nx))).collect(), 2.0, false)
        }
        MmsSweep::Time => {
            let p = if spec.theta == Theta::Implicit { 1.0 } else { 2.0 };
            (config.levels.iter().map(|&nt| (spec.nx, nt)).collect(), p, true)
        }
    };
    let rows = mms_sweep(&m, &levels, spec.t_final, spec.theta, by_time)?;
    let mut report = CsvReport::new(&["h", "tau", "l2_error", "x_error", "order"]);
    let mut passed = true;
    for r in &rows {
        if let Some(o) = r.order {
            passed &= (o - expected).abs() <= ORDER_TOL;
        }
        report.push(vec![r.h.into(), r.tau.into(), r.l2_error.into(), r.x_error.into(), r.order.unwrap_or(f64::NAN).into()])?;
    }
    report.meta("diffusion: 1 (manufactured solution)");
    report.meta(format!("expected_order: {expected}"));
    Ok(ScenarioOutcome::checked(report, passed))
}

/// Runs the scenario and writes its CSV into `out_dir`; returns the exit code.
pub fn run_to_dir(config: &ScenarioConfig, out_dir: &Path) -> Result<(i32, std::path::PathBuf)> {
    let outcome = run_scenario(config)?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(&config.output);
    outcome.report.write(&path)?;
    Ok((outcome.exit, path))
}

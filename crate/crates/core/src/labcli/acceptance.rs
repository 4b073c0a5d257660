//! The built-in acceptance checks run by `rrlab check` and the `acceptance`
//! test target.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fracnorm::{extend, multiplier_identity, Extension, TimeSignal};
use crate::interface::{dense_s, run_iteration, spectral_analysis, ConvergenceReport, IterationConfig, Status, SteklovSystem, Variant};
use crate::mesh::{ProblemSpec, Theta};
use crate::subsolve::{SignalKind, SubdomainSolver};
use crate::Result;

use super::metrics::xi_norm_error;
use super::mms::{space_sweep, time_sweep};
use super::monolithic::solve_monolithic;
use super::sampling::{random_signal, smooth_field, smooth_interface_signal};
use super::scenario::{coercivity_ratios, equivalence_discrepancies, EQUIVALENCE_TOL, ORDER_TOL};

pub const S_VALUES: [f64; 3] = [0.1, 1.0, 10.0];
pub const DESK_TOL: f64 = 1e-10;
pub const CONVERGENCE_ITER: usize = 200;
pub const CONVERGENCE_TARGET: f64 = 1e-8;
/// Iteration cap for the gluing check, which needs a terminated run at `s = 1`.
pub const GLUING_ITER: usize = 5000;
pub const SEED: u64 = 20240607;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{:>2}] {}: {}", self.id, self.name, self.detail)
    }
}

fn finish(id: usize, name: &'static str, body: Result<(bool, String)>) -> CriterionResult {
    match body {
        Ok((passed, detail)) => CriterionResult { id, name, passed, detail },
        Err(e) => CriterionResult { id, name, passed: false, detail: format!("error: {e}") },
    }
}

fn desk_system() -> Result<SteklovSystem> {
    SteklovSystem::new(&ProblemSpec::desk())
}

/// PR runs on the desk problem against the monolithic reference, one per `s`.
pub fn desk_runs() -> Result<Vec<(f64, ConvergenceReport)>> {
    let spec = ProblemSpec::desk();
    let sys = SteklovSystem::new(&spec)?;
    let reference = solve_monolithic(&spec)?.reference(&sys)?;
    S_VALUES
        .iter()
        .map(|&s| {
            let cfg = IterationConfig::new(s, DESK_TOL, CONVERGENCE_ITER, Variant::PrInterface);
            Ok((s, run_iteration(&sys, &cfg, Some(&reference))?))
        })
        .collect()
}

fn worst_err_x(run: &ConvergenceReport) -> f64 {
    run.records.last().map_or(f64::NAN, |r| r.err_x[0].max(r.err_x[1]))
}

pub fn convergence() -> CriterionResult {
    finish(1, "convergence", (|| {
        let mut ok = true;
        let mut parts = Vec::new();
        for (s, run) in desk_runs()? {
            let hit = run.first_below(CONVERGENCE_TARGET);
            ok &= hit.is_some();
            match hit {
                Some(n) => parts.push(format!("s={s}: below {CONVERGENCE_TARGET:e} at n={n}")),
                None => parts.push(format!("s={s}: err_X={:.3e} after {} iterations", worst_err_x(&run), run.iterations())),
            }
        }
        Ok((ok, parts.join("; ")))
    })())
}

pub fn equivalence() -> CriterionResult {
    finish(2, "PDE/interface equivalence", (|| {
        let sys = desk_system()?;
        let d = equivalence_discrepancies(&sys, 1.0, 50)?;
        let worst = d.iter().fold(0.0f64, |m, v| m.max(*v));
        Ok((worst <= EQUIVALENCE_TOL, format!("max relative H discrepancy over 50 iterations {worst:.3e}")))
    })())
}

/// `tau (A_GG - A_GI A_II^{-1} A_IG)` of the block lower-bidiagonal
/// space-time matrix, interface unknowns ordered `(k - 1) n_g + g`.
pub fn space_time_schur(solver: &SubdomainSolver) -> DMatrix<f64> {
    let ops = &solver.ops;
    let (ni, ng, nt) = (ops.n_interior, ops.n_interface, solver.n_steps());
    let nl = ni + ng;
    let (a, b) = (ops.step.current.to_dense(), ops.step.previous.to_dense());
    let idx = |k: usize, l: usize| if l < ni { (k - 1) * ni + l } else { nt * ni + (k - 1) * ng + (l - ni) };
    let n = nl * nt;
    let mut big = DMatrix::<f64>::zeros(n, n);
    for k in 1..=nt {
        for r in 0..nl {
            for c in 0..nl {
                big[(idx(k, r), idx(k, c))] += a[(r, c)];
                if k > 1 {
                    big[(idx(k, r), idx(k - 1, c))] -= b[(r, c)];
                }
            }
        }
    }
    let nii = nt * ni;
    let aii = big.view((0, 0), (nii, nii)).into_owned();
    let aig = big.view((0, nii), (nii, n - nii)).into_owned();
    let agi = big.view((nii, 0), (n - nii, nii)).into_owned();
    let agg = big.view((nii, nii), (n - nii, n - nii)).into_owned();
    let x = aii.lu().solve(&aig).expect("interior space-time block is invertible");
    (agg - agi * x) * solver.tau()
}

pub fn schur_oracle() -> CriterionResult {
    finish(3, "Schur oracle", (|| {
        let sys = SteklovSystem::new(&ProblemSpec::interval(8, 4, 1.0))?;
        let mut worst = 0.0f64;
        for i in 0..2 {
            let probed = dense_s(&sys, i)?;
            let direct = space_time_schur(&sys.solvers[i]);
            worst = worst.max((&probed - &direct).amax() / direct.amax());
        }
        Ok((worst <= 1e-10, format!("max entrywise deviation / max entry {worst:.3e}")))
    })())
}

pub fn bijectivity() -> CriterionResult {
    finish(4, "bijectivity", (|| {
        let sys = desk_system()?;
        let rows = spectral_analysis(&sys, &S_VALUES)?;
        let mut ok = true;
        let mut parts = Vec::new();
        for r in &rows {
            ok &= r.sigma_min_sjs.iter().all(|v| *v > 0.0) && r.sigma_min_sum > 0.0;
            parts.push(format!("s={}: sigma_min(sJ+S_i)=({:.3e}, {:.3e})", r.s, r.sigma_min_sjs[0], r.sigma_min_sjs[1]));
        }
        parts.push(format!("sigma_min(S1+S2)={:.3e}", rows[0].sigma_min_sum));
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst = 0.0f64;
        for &s in &S_VALUES {
            let res = sys.resolvent(s)?;
            for n in 0..20 {
                let i = n % 2;
                let rhs = random_signal(&sys, SignalKind::Dual, &mut rng);
                let x = res.solve_sjps(i, &rhs)?;
                let back = sys.apply_j(&x)?.scaled(s).add_scaled(1.0, &sys.apply_s(i, &x)?)?;
                let err = back.add_scaled(-1.0, &rhs)?;
                let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
                worst = worst.max(norm(err.values()) / norm(rhs.values()));
            }
        }
        ok &= worst <= 1e-10;
        parts.push(format!("resolvent round trip {worst:.3e}"));
        Ok((ok, parts.join("; ")))
    })())
}

/// Minimum of `<S_i mu, mu> / |F_i mu|_X^2` over seeded smooth `mu`.
pub fn monotonicity_ratio(sys: &SteklovSystem, i: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min = f64::INFINITY;
    for _ in 0..samples {
        let mu = smooth_interface_signal(sys, &mut rng);
        let pair = sys.apply_s(i, &mu)?.pair(&mu)?;
        let f = sys.solvers[i].dirichlet_solve(Some(&mu), None)?;
        min = min.min(pair / sys.solvers[i].x_norm(&f)?.powi(2));
    }
    Ok(min)
}

pub fn monotonicity() -> CriterionResult {
    finish(5, "monotonicity", (|| {
        let coarse = desk_system()?;
        let fine = SteklovSystem::new(&ProblemSpec { nx: 32, ny: 32, n_steps: 32, ..ProblemSpec::desk() })?;
        let mut ok = true;
        let mut parts = Vec::new();
        for i in 0..2 {
            let a = monotonicity_ratio(&coarse, i, 100, SEED + i as u64)?;
            let b = monotonicity_ratio(&fine, i, 100, SEED + i as u64)?;
            ok &= a > 0.0 && b > 0.0 && a.max(b) <= 2.0 * a.min(b);
            parts.push(format!("S{}: min ratio {a:.4e} (16x16) / {b:.4e} (32x32)", i + 1));
        }
        Ok((ok, parts.join("; ")))
    })())
}

pub fn vanishing_gap() -> CriterionResult {
    finish(6, "vanishing gap", (|| {
        let mut ok = true;
        let mut parts = Vec::new();
        for (s, run) in desk_runs()? {
            let min = run.records.iter().flat_map(|r| r.gap).fold(f64::INFINITY, f64::min);
            let last = run.records.last().map_or(f64::NAN, |r| r.gap[0].max(r.gap[1]));
            ok &= min >= -1e-12 && last <= 1e-10;
            parts.push(format!("s={s}: min {min:.3e}, final {last:.3e} (n={})", run.iterations()));
        }
        Ok((ok, parts.join("; ")))
    })())
}

/// Geometric mean reduction of the H-norm error over the last 10 iterations.
pub fn observed_rate(run: &ConvergenceReport) -> f64 {
    let n = run.records.len();
    if n < 11 {
        return f64::NAN;
    }
    (run.records[n - 1].err_h / run.records[n - 11].err_h).powf(0.1)
}

pub fn contraction() -> CriterionResult {
    finish(7, "contraction", (|| {
        let sys = desk_system()?;
        let rows = spectral_analysis(&sys, &S_VALUES)?;
        let runs = desk_runs()?;
        let mut ok = true;
        let mut parts = Vec::new();
        for (r, (_, run)) in rows.iter().zip(&runs) {
            let obs = observed_rate(run);
            ok &= r.rho < 1.0 && (obs - r.rho).abs() <= 0.1 * r.rho;
            parts.push(format!("s={}: rho {:.4}, observed {:.4}", r.s, r.rho, obs));
        }
        Ok((ok, parts.join("; ")))
    })())
}

pub fn coercivity() -> CriterionResult {
    finish(8, "coercivity machinery", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst = 0.0f64;
        for pad in [4, 8, 16] {
            let u = smooth_field(&SteklovSystem::new(&ProblemSpec::interval(4, 24, 1.0))?, 0, &mut rng);
            for j in 0..u.n_dofs {
                let sig = TimeSignal::new(1.0 / 24.0, (0..=24).map(|k| u.step(k)[j]).collect())?;
                let w = extend(&sig, Extension::Zero, pad)?;
                let (lhs, rhs) = multiplier_identity(&w, 0.1)?;
                worst = worst.max((lhs - rhs).abs() / rhs.abs());
            }
        }
        let sys = SteklovSystem::new(&ProblemSpec::interval(32, 32, 1.0))?;
        let ratios = coercivity_ratios(&sys, 0, 50, 0.1, crate::fracnorm::DEFAULT_PAD, SEED)?;
        let min = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let ok = worst <= 1e-12 && ratios.len() == 50 && min > 0.0;
        Ok((ok, format!("multiplier identity {worst:.3e}; min ratio over {} fields {min:.4e}", ratios.len())))
    })())
}

pub fn mms_orders() -> CriterionResult {
    finish(9, "MMS orders", (|| {
        let mut ok = true;
        let mut parts = Vec::new();
        for (theta, p_time) in [(Theta::Implicit, 1.0), (Theta::CrankNicolson, 2.0)] {
            let space: Vec<f64> = space_sweep(theta)?.iter().filter_map(|r| r.order).collect();
            let time: Vec<f64> = time_sweep(theta)?.iter().filter_map(|r| r.order).collect();
            ok &= space.iter().all(|o| (o - 2.0).abs() <= ORDER_TOL);
            ok &= time.iter().all(|o| (o - p_time).abs() <= ORDER_TOL);
            let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(",");
            parts.push(format!("theta={}: space [{}], time [{}]", theta.value(), fmt(&space), fmt(&time)));
        }
        Ok((ok, parts.join("; ")))
    })())
}

/// `max |sum_i P_i^T A_i P_i - A| / max |A|`.
fn subassembly_defect(global: &DMatrix<f64>, locals: [(&[usize], DMatrix<f64>); 2]) -> f64 {
    let mut sum = DMatrix::zeros(global.nrows(), global.ncols());
    for (map, a) in locals {
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                sum[(map[r], map[c])] += a[(r, c)];
            }
        }
    }
    (sum - global).amax() / global.amax()
}

pub fn gluing() -> CriterionResult {
    finish(10, "discrete gluing", (|| {
        let spec = ProblemSpec::desk();
        let sys = SteklovSystem::new(&spec)?;
        let mono = solve_monolithic(&spec)?;
        let maps = [sys.dec.sub[0].global.as_slice(), sys.dec.sub[1].global.as_slice()];
        let ops = [&sys.solvers[0].ops, &sys.solvers[1].ops];
        let mut defect = subassembly_defect(&mono.mass.to_dense(), [(maps[0], ops[0].mass.to_dense()), (maps[1], ops[1].mass.to_dense())]);
        defect = defect.max(subassembly_defect(
            &mono.stiffness.to_dense(),
            [(maps[0], ops[0].stiffness.to_dense()), (maps[1], ops[1].stiffness.to_dense())],
        ));
        for k in 1..=spec.n_steps {
            let g = DMatrix::from_column_slice(mono.dec.n_free(), 1, mono.loads.step(k));
            let l = |i: usize| DMatrix::from_column_slice(ops[i].n_local(), 1, ops[i].loads.step(k));
            let mut sum = DVector::zeros(mono.dec.n_free());
            for i in 0..2 {
                for (r, &gr) in maps[i].iter().enumerate() {
                    sum[gr] += l(i)[(r, 0)];
                }
            }
            defect = defect.max((sum - g.column(0)).amax() / g.amax());
        }
        let [u1, u2] = mono.restrict(&mono.u);
        let round_trip = mono.glue(&u1, &u2) == mono.u;
        let reference = mono.reference(&sys)?;
        let cfg = IterationConfig::new(1.0, DESK_TOL, GLUING_ITER, Variant::PrInterface);
        let run = run_iteration(&sys, &cfg, None)?;
        let residual = mono.residual(&mono.glue(&run.fields[0], &run.fields[1]));
        let err = xi_norm_error(&sys.solvers[0], &run.fields[0], &reference.u[0])?
            .max(xi_norm_error(&sys.solvers[1], &run.fields[1], &reference.u[1])?);
        let ok = defect <= 1e-14 && round_trip && run.status == Status::Converged && residual <= 10.0 * DESK_TOL;
        Ok((
            ok,
            format!(
                "subassembly defect {defect:.3e}; glue(restrict) exact: {round_trip}; s=1 run {} after {} iterations, monolithic residual {residual:.3e} (bound {:.1e}), err_X {err:.3e}",
                run.status.name(),
                run.iterations(),
                10.0 * DESK_TOL
            ),
        ))
    })())
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        convergence(),
        equivalence(),
        schur_oracle(),
        bijectivity(),
        monotonicity(),
        vanishing_gap(),
        contraction(),
        coercivity(),
        mms_orders(),
        gluing(),
    ]
}

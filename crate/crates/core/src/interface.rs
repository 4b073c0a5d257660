//! Discrete Steklov-Poincare algebra on the space-time interface.
//!
//! `S_i eta` is the weak flux of the homogeneous Dirichlet solve with trace
//! `eta`, `chi_i` is minus the flux of the interior-source solve, and `J` is the
//! time-weighted interface mass. The Peaceman-Rachford iteration
//!
//! ```text
//! eta^{n+1/2} = (sJ + S1)^{-1} ((sJ - S2) eta^n       + chi1 + chi2)
//! eta^{n+1}   = (sJ + S2)^{-1} ((sJ - S1) eta^{n+1/2} + chi1 + chi2)
//! ```
//!
//! has the solution of `(S1 + S2) eta = chi1 + chi2` as its fixed point. Every
//! resolvent is a single Robin subdomain solve, which is what makes the
//! interface iteration and the PDE-level Robin-Robin sweep coincide.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::assembly::{build_subdomain_operators, element_diffusion};
use crate::factor::Factorization;
use crate::labcli::metrics::{monotone_gap, xi_norm_error};
use crate::mesh::{build_mesh, decompose, Decomposition, Mesh, ProblemSpec};
use crate::sparse::CsrMatrix;
use crate::subsolve::{InterfaceSignal, RobinFactor, SignalKind, SpaceTimeField, SubdomainSolver};
use crate::{Error, Result};

/// Largest number of probing columns `assemble_dense` accepts.
pub const DENSE_COLUMN_LIMIT: usize = 2000;

/// Both subdomain solvers plus the interface data of one problem.
#[derive(Debug, Clone)]
pub struct SteklovSystem {
    pub spec: ProblemSpec,
    pub mesh: Mesh,
    pub dec: Decomposition,
    pub solvers: [SubdomainSolver; 2],
    chi: [InterfaceSignal; 2],
    interface_mass: CsrMatrix,
    mass_factor: Factorization,
}

impl SteklovSystem {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let mesh = build_mesh(spec)?;
        let dec = decompose(&mesh, spec)?;
        let alpha = element_diffusion(&mesh, spec)?;
        let s1 = SubdomainSolver::new(build_subdomain_operators(spec, &mesh, &dec, &alpha, 0)?)?;
        let s2 = SubdomainSolver::new(build_subdomain_operators(spec, &mesh, &dec, &alpha, 1)?)?;
        let interface_mass = s1.ops.interface_mass.clone();
        let mass_factor = Factorization::new(&interface_mass, "interface mass")?;
        let mut sys = SteklovSystem {
            spec: spec.clone(),
            mesh,
            dec,
            solvers: [s1, s2],
            chi: [InterfaceSignal::zeros(SignalKind::Dual, 0, 0), InterfaceSignal::zeros(SignalKind::Dual, 0, 0)],
            interface_mass,
            mass_factor,
        };
        sys.chi = [sys.compute_chi(0)?, sys.compute_chi(1)?];
        Ok(sys)
    }

    pub fn n_interface(&self) -> usize {
        self.dec.n_interface()
    }

    pub fn n_steps(&self) -> usize {
        self.spec.n_steps
    }

    pub fn tau(&self) -> f64 {
        self.spec.tau()
    }

    /// Number of scalar unknowns of an interface signal.
    pub fn signal_len(&self) -> usize {
        self.n_interface() * self.n_steps()
    }

    pub fn interface_mass(&self) -> &CsrMatrix {
        &self.interface_mass
    }

    pub fn zero_primal(&self) -> InterfaceSignal {
        InterfaceSignal::zeros(SignalKind::Primal, self.n_interface(), self.n_steps())
    }

    pub fn zero_dual(&self) -> InterfaceSignal {
        InterfaceSignal::zeros(SignalKind::Dual, self.n_interface(), self.n_steps())
    }

    fn check_index(i: usize) -> Result<()> {
        if i > 1 {
            return Err(Error::InvalidInput(format!("subdomain index {i} (two subdomains: 0, 1)")));
        }
        Ok(())
    }

    /// `S_i eta`: flux of the homogeneous Dirichlet solve with trace `eta`.
    pub fn apply_s(&self, i: usize, eta: &InterfaceSignal) -> Result<InterfaceSignal> {
        Self::check_index(i)?;
        let solver = &self.solvers[i];
        let u = solver.dirichlet_solve(Some(eta), None)?;
        solver.flux_recovery(&u, None)
    }

    pub fn apply_j(&self, eta: &InterfaceSignal) -> Result<InterfaceSignal> {
        self.solvers[0].apply_j(eta)
    }

    /// `chi_i = -flux(G_i f_i)`.
    pub fn compute_chi(&self, i: usize) -> Result<InterfaceSignal> {
        Self::check_index(i)?;
        let solver = &self.solvers[i];
        let loads = &solver.ops.loads;
        let u = solver.dirichlet_solve(None, Some(loads))?;
        Ok(solver.flux_recovery(&u, Some(loads))?.scaled(-1.0))
    }

    pub fn chi(&self, i: usize) -> &InterfaceSignal {
        &self.chi[i]
    }

    pub fn chi_sum(&self) -> InterfaceSignal {
        self.chi[0].add_scaled(1.0, &self.chi[1]).expect("chi shapes agree")
    }

    /// `||eta||_H^2 = sum_k tau eta^k M_Gamma eta^k`.
    pub fn h_norm(&self, eta: &InterfaceSignal) -> f64 {
        let tau = self.tau();
        (1..=eta.n_steps)
            .map(|k| tau * self.interface_mass.quadratic(eta.step(k), eta.step(k)))
            .sum::<f64>()
            .sqrt()
    }

    /// Riesz norm of a dual signal: `sum_k d^k (tau M_Gamma)^{-1} d^k`.
    pub fn dual_norm(&self, d: &InterfaceSignal) -> f64 {
        let tau = self.tau();
        (1..=d.n_steps)
            .map(|k| {
                let x = self.mass_factor.solve(d.step(k));
                x.iter().zip(d.step(k)).map(|(a, b)| a * b).sum::<f64>() / tau
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `||(S1 + S2) eta - (chi1 + chi2)||` in the dual norm.
    pub fn sp_residual(&self, eta: &InterfaceSignal) -> Result<f64> {
        let r = self.apply_s(0, eta)?.add_scaled(1.0, &self.apply_s(1, eta)?)?.add_scaled(-1.0, &self.chi_sum())?;
        Ok(self.dual_norm(&r))
    }

    /// Subdomain field `F_i eta + G_i f_i`.
    pub fn reconstruct(&self, i: usize, eta: &InterfaceSignal) -> Result<SpaceTimeField> {
        Self::check_index(i)?;
        let solver = &self.solvers[i];
        solver.dirichlet_solve(Some(eta), Some(&solver.ops.loads))
    }

    pub fn resolvent(&self, s: f64) -> Result<Resolvent<'_>> {
        Ok(Resolvent { sys: self, s, robin: [self.solvers[0].robin_factor(s)?, self.solvers[1].robin_factor(s)?] })
    }
}

/// Subdomain fields of the PDE-level sweep: `u[0]` on the first subdomain,
/// `u[1]` on the second.
#[derive(Debug, Clone)]
pub struct PdeState {
    pub u: [SpaceTimeField; 2],
}

/// Both half-step iterates of one Peaceman-Rachford step.
#[derive(Debug, Clone)]
pub struct PrStep {
    pub half: InterfaceSignal,
    pub next: InterfaceSignal,
}

/// Robin factors for a fixed `s`.
#[derive(Debug)]
pub struct Resolvent<'a> {
    sys: &'a SteklovSystem,
    pub s: f64,
    robin: [RobinFactor; 2],
}

impl Resolvent<'_> {
    /// `(sJ + S_i)^{-1} rhs` as the trace of one source-free Robin solve.
    pub fn solve_sjps(&self, i: usize, rhs: &InterfaceSignal) -> Result<InterfaceSignal> {
        SteklovSystem::check_index(i)?;
        let solver = &self.sys.solvers[i];
        let u = solver.robin_solve(&self.robin[i], rhs, None)?;
        let eta = solver.trace(&u)?;
        if !eta.is_finite() {
            return Err(Error::Singular { context: format!("sJ + S_{} with s={}", i + 1, self.s), pivot: 0 });
        }
        Ok(eta)
    }

    /// `(sJ - S_i) eta + chi1 + chi2`.
    fn half_step_rhs(&self, i: usize, eta: &InterfaceSignal) -> Result<InterfaceSignal> {
        let sj = self.sys.apply_j(eta)?.scaled(self.s);
        sj.add_scaled(-1.0, &self.sys.apply_s(i, eta)?)?.add_scaled(1.0, &self.sys.chi_sum())
    }

    pub fn pr_step(&self, eta: &InterfaceSignal) -> Result<PrStep> {
        let half = self.solve_sjps(0, &self.half_step_rhs(1, eta)?)?;
        let next = self.solve_sjps(1, &self.half_step_rhs(0, &half)?)?;
        Ok(PrStep { half, next })
    }

    pub fn pr_iterate(&self, eta: &InterfaceSignal) -> Result<InterfaceSignal> {
        Ok(self.pr_step(eta)?.next)
    }

    /// Starting state whose second-subdomain field has trace `eta0`.
    pub fn initial_state(&self, eta0: &InterfaceSignal) -> Result<PdeState> {
        let u2 = self.sys.reconstruct(1, eta0)?;
        let u1 = SpaceTimeField::zeros(self.sys.solvers[0].ops.n_local(), self.sys.n_steps()).with_subdomain(0);
        Ok(PdeState { u: [u1, u2] })
    }

    /// Robin data `s J trace(u) - flux(u)` that subdomain `i` hands to its
    /// neighbour, whose flux has the opposite orientation.
    fn exchange(&self, i: usize, u: &SpaceTimeField) -> Result<InterfaceSignal> {
        let solver = &self.sys.solvers[i];
        let flux = solver.flux_recovery(u, Some(&solver.ops.loads))?;
        let trace = solver.trace(u)?;
        solver.apply_j(&trace)?.scaled(self.s).add_scaled(-1.0, &flux)
    }

    /// One Robin-Robin sweep: solve on the first subdomain with data from the
    /// second, then on the second with data from the new first-subdomain field.
    pub fn rr_pde_sweep(&self, state: &PdeState) -> Result<PdeState> {
        let [s1, s2] = &self.sys.solvers;
        let lambda1 = self.exchange(1, &state.u[1])?;
        let u1 = s1.robin_solve(&self.robin[0], &lambda1, Some(&s1.ops.loads))?;
        let lambda2 = self.exchange(0, &u1)?;
        let u2 = s2.robin_solve(&self.robin[1], &lambda2, Some(&s2.ops.loads))?;
        Ok(PdeState { u: [u1, u2] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    PrInterface,
    RrPde,
}

impl Variant {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "pr_interface" => Ok(Variant::PrInterface),
            "rr_pde" => Ok(Variant::RrPde),
            other => Err(Error::Config(format!("unknown variant {other:?} (pr_interface, rr_pde)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::PrInterface => "pr_interface",
            Variant::RrPde => "rr_pde",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub variant: Variant,
    /// Initial interface guess; zero when absent.
    pub initial: Option<InterfaceSignal>,
}

impl IterationConfig {
    pub fn new(s: f64, tol: f64, max_iter: usize, variant: Variant) -> Self {
        IterationConfig { s, tol, max_iter, variant, initial: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::InvalidInput(format!("s must be positive, got {}", self.s)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Monolithic solution restricted to the subdomains and its interface trace.
#[derive(Debug, Clone)]
pub struct Reference {
    pub eta: InterfaceSignal,
    pub u: [SpaceTimeField; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    /// `||eta^n - eta^{n-1}||_H`.
    pub increment: f64,
    /// `||u_i^n - u_i^ref||_X`, NaN without a reference.
    pub err_x: [f64; 2],
    /// `<S_i (eta_ref - eta^n), eta_ref - eta^n>`, NaN without a reference.
    pub gap: [f64; 2],
    /// `||eta^n - eta_ref||_H`, NaN without a reference.
    pub err_h: f64,
    pub sp_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub eta: InterfaceSignal,
    pub fields: [SpaceTimeField; 2],
}

impl ConvergenceReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// First iteration at which both subdomain errors are below `bound`.
    pub fn first_below(&self, bound: f64) -> Option<usize> {
        self.records.iter().find(|r| r.err_x[0] < bound && r.err_x[1] < bound).map(|r| r.n)
    }
}

/// Runs the Robin-Robin iteration in either realization until the interface
/// increment drops below `tol` in the H-norm.
pub fn run_iteration(sys: &SteklovSystem, config: &IterationConfig, reference: Option<&Reference>) -> Result<ConvergenceReport> {
    config.validate()?;
    let res = sys.resolvent(config.s)?;
    let mut eta = config.initial.clone().unwrap_or_else(|| sys.zero_primal());
    let mut state = match config.variant {
        Variant::RrPde => Some(res.initial_state(&eta)?),
        Variant::PrInterface => None,
    };
    let mut records = Vec::new();
    let mut status = Status::MaxIter;
    let mut first_increment = None;
    let mut fields = [sys.reconstruct(0, &eta)?, sys.reconstruct(1, &eta)?];

    for n in 1..=config.max_iter {
        let next = match state.as_mut() {
            Some(st) => {
                *st = res.rr_pde_sweep(st)?;
                fields = st.u.clone();
                sys.solvers[1].trace(&st.u[1])?
            }
            None => {
                let next = res.pr_iterate(&eta)?;
                if reference.is_some() || n == config.max_iter {
                    fields = [sys.reconstruct(0, &next)?, sys.reconstruct(1, &next)?];
                }
                next
            }
        };
        let increment = sys.h_norm(&next.add_scaled(-1.0, &eta)?);
        eta = next;

        let (mut err_x, mut gap, mut err_h) = ([f64::NAN; 2], [f64::NAN; 2], f64::NAN);
        if let Some(r) = reference {
            if state.is_none() {
                fields = [sys.reconstruct(0, &eta)?, sys.reconstruct(1, &eta)?];
            }
            for i in 0..2 {
                err_x[i] = xi_norm_error(&sys.solvers[i], &fields[i], &r.u[i])?;
                gap[i] = monotone_gap(sys, i, &r.eta, &eta)?;
            }
            err_h = sys.h_norm(&eta.add_scaled(-1.0, &r.eta)?);
        }
        let sp_residual = sys.sp_residual(&eta)?;
        records.push(IterationRecord { n, increment, err_x, gap, err_h, sp_residual });

        let first = *first_increment.get_or_insert(increment);
        if !increment.is_finite() || increment > 1e8 * first.max(f64::MIN_POSITIVE) {
            status = Status::Diverged;
            break;
        }
        if increment <= config.tol {
            status = Status::Converged;
            break;
        }
    }
    if state.is_none() && reference.is_none() {
        fields = [sys.reconstruct(0, &eta)?, sys.reconstruct(1, &eta)?];
    }
    Ok(ConvergenceReport { records, status, eta, fields })
}

/// Dense matrix of a linear interface map, column `j` being the image of the
/// `j`-th unit signal.
pub fn assemble_dense(
    n_interface: usize,
    n_steps: usize,
    input: SignalKind,
    mut apply: impl FnMut(&InterfaceSignal) -> Result<InterfaceSignal>,
) -> Result<DMatrix<f64>> {
    let n = n_interface * n_steps;
    if n > DENSE_COLUMN_LIMIT {
        return Err(Error::SizeGuard { columns: n, limit: DENSE_COLUMN_LIMIT });
    }
    let mut dense = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = apply(&InterfaceSignal::unit(input, n_interface, n_steps, j))?;
        if col.len() != n {
            return Err(Error::Shape(format!("operator returned {} values, expected {n}", col.len())));
        }
        dense.column_mut(j).copy_from_slice(col.values());
    }
    Ok(dense)
}

pub fn dense_s(sys: &SteklovSystem, i: usize) -> Result<DMatrix<f64>> {
    assemble_dense(sys.n_interface(), sys.n_steps(), SignalKind::Primal, |e| sys.apply_s(i, e))
}

pub fn dense_j(sys: &SteklovSystem) -> Result<DMatrix<f64>> {
    assemble_dense(sys.n_interface(), sys.n_steps(), SignalKind::Primal, |e| sys.apply_j(e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRow {
    pub s: f64,
    /// Spectral radius of `(sJ+S2)^{-1}(sJ-S1)(sJ+S1)^{-1}(sJ-S2)`.
    pub rho: f64,
    pub sigma_min_sjs: [f64; 2],
    pub sigma_min_sum: f64,
    /// Smallest eigenvalue of `(S_i + S_i^T)/2`.
    pub lambda_min_sym: [f64; 2],
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

fn lambda_min_sym(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.min()
}

/// Largest `|(k,l)|`-block entry above the block diagonal, relative to the
/// largest entry overall. Zero for causal (lower block-triangular) maps.
pub fn upper_block_ratio(m: &DMatrix<f64>, block: usize) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c / block > r / block {
                worst = worst.max(m[(r, c)].abs());
            }
        }
    }
    worst / scale
}

/// Spectral radius of a block lower-triangular matrix from its diagonal blocks.
/// Working on the blocks avoids the eigenvalue sensitivity of the repeated
/// (defective) spectrum of the full time-stacked matrix.
pub fn block_triangular_spectral_radius(m: &DMatrix<f64>, block: usize) -> Result<f64> {
    let nb = m.nrows() / block;
    let mut rho = 0.0f64;
    for k in 0..nb {
        let diag = m.view((k * block, k * block), (block, block)).clone_owned();
        let schur = diag
            .try_schur(f64::EPSILON, 100_000)
            .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge on block {k}")))?;
        let ev = schur.complex_eigenvalues();
        rho = ev.iter().fold(rho, |r, z| r.max(z.norm()));
    }
    Ok(rho)
}

/// Dense spectral diagnostics for each Robin parameter.
pub fn spectral_analysis(sys: &SteklovSystem, s_list: &[f64]) -> Result<Vec<SpectralRow>> {
    let s1 = dense_s(sys, 0)?;
    let s2 = dense_s(sys, 1)?;
    let j = dense_j(sys)?;
    let block = sys.n_interface();
    let sum = &s1 + &s2;
    let sigma_min_sum = sigma_min(&sum);
    let lambda_min = [lambda_min_sym(&s1), lambda_min_sym(&s2)];
    let mut rows = Vec::with_capacity(s_list.len());
    for &s in s_list {
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!("s must be positive, got {s}")));
        }
        let p1 = &j * s + &s1;
        let p2 = &j * s + &s2;
        let m1 = &j * s - &s1;
        let m2 = &j * s - &s2;
        let lu1 = p1.clone().lu();
        let lu2 = p2.clone().lu();
        let inner = lu1.solve(&m2).ok_or_else(|| Error::Singular { context: format!("sJ + S1, s={s}"), pivot: 0 })?;
        let linear = lu2
            .solve(&(m1 * inner))
            .ok_or_else(|| Error::Singular { context: format!("sJ + S2, s={s}"), pivot: 0 })?;
        let rho = block_triangular_spectral_radius(&linear, block)?;
        rows.push(SpectralRow {
            s,
            rho,
            sigma_min_sjs: [sigma_min(&p1), sigma_min(&p2)],
            sigma_min_sum,
            lambda_min_sym: lambda_min,
        });
    }
    Ok(rows)
}

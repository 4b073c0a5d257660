//! Time-stepping subdomain solvers: Dirichlet data on the interface (the
//! solution operators for interface data and for interior sources), Robin data,
//! and the variational flux of a subdomain field.
//!
//! Interface functionals ("dual" signals) carry the temporal quadrature weight:
//! the flux of step `k` is `tau * (A u^k - B u^{k-1} - f^k)` restricted to the
//! interface rows, so that pairing with a primal signal is a plain dot product.

use crate::assembly::{build_step_operators, Blocks, Loads, SubdomainOperators};
use crate::factor::Factorization;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Nodal values over time steps `0..=n_steps` on one dof set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub n_dofs: usize,
    pub n_steps: usize,
    pub subdomain: Option<usize>,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(n_dofs: usize, n_steps: usize) -> Self {
        SpaceTimeField { n_dofs, n_steps, subdomain: None, values: vec![0.0; n_dofs * (n_steps + 1)] }
    }

    pub fn from_fn(n_dofs: usize, n_steps: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut u = Self::zeros(n_dofs, n_steps);
        for k in 0..=n_steps {
            for (j, v) in u.step_mut(k).iter_mut().enumerate() {
                *v = f(k, j);
            }
        }
        u
    }

    pub fn with_subdomain(mut self, i: usize) -> Self {
        self.subdomain = Some(i);
        self
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_dofs..(k + 1) * self.n_dofs]
    }

    pub fn step_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.n_dofs..(k + 1) * self.n_dofs]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `self - other`, shapes must agree.
    pub fn sub(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        if self.n_dofs != other.n_dofs || self.n_steps != other.n_steps {
            return Err(Error::Shape(format!(
                "field {}x{} vs {}x{}",
                self.n_steps, self.n_dofs, other.n_steps, other.n_dofs
            )));
        }
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn scaled(&self, a: f64) -> SpaceTimeField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Nodal interface values.
    Primal,
    /// Coefficients of an interface functional.
    Dual,
}

/// Values on (time step `1..=n_steps`) x (interface dof).
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSignal {
    pub kind: SignalKind,
    pub n_interface: usize,
    pub n_steps: usize,
    values: Vec<f64>,
}

impl InterfaceSignal {
    pub fn zeros(kind: SignalKind, n_interface: usize, n_steps: usize) -> Self {
        InterfaceSignal { kind, n_interface, n_steps, values: vec![0.0; n_interface * n_steps] }
    }

    pub fn from_vec(kind: SignalKind, n_interface: usize, n_steps: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_interface * n_steps {
            return Err(Error::Shape(format!(
                "signal of {} values for {n_steps} steps x {n_interface} dofs",
                values.len()
            )));
        }
        Ok(InterfaceSignal { kind, n_interface, n_steps, values })
    }

    /// Step `k`, `1 <= k <= n_steps`.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[(k - 1) * self.n_interface..k * self.n_interface]
    }

    pub fn step_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[(k - 1) * self.n_interface..k * self.n_interface]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unit(kind: SignalKind, n_interface: usize, n_steps: usize, index: usize) -> Self {
        let mut s = Self::zeros(kind, n_interface, n_steps);
        s.values[index] = 1.0;
        s
    }

    fn check_same(&self, other: &InterfaceSignal) -> Result<()> {
        if self.n_interface != other.n_interface || self.n_steps != other.n_steps {
            return Err(Error::Shape(format!(
                "signal {}x{} vs {}x{}",
                self.n_steps, self.n_interface, other.n_steps, other.n_interface
            )));
        }
        Ok(())
    }

    /// Duality pairing `<dual, primal>`; exactly one argument must be dual.
    pub fn pair(&self, other: &InterfaceSignal) -> Result<f64> {
        self.check_same(other)?;
        if self.kind == other.kind {
            return Err(Error::InvalidInput(format!("cannot pair two {:?} signals", self.kind)));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    /// `self + a * other`, same kind required.
    pub fn add_scaled(&self, a: f64, other: &InterfaceSignal) -> Result<InterfaceSignal> {
        self.check_same(other)?;
        if self.kind != other.kind {
            return Err(Error::InvalidInput("adding primal and dual signals".into()));
        }
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(x, y)| *x += a * y);
        Ok(out)
    }

    pub fn scaled(&self, a: f64) -> InterfaceSignal {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn with_kind(mut self, kind: SignalKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Factorized subdomain: Dirichlet-mode solves and flux recovery.
#[derive(Debug, Clone)]
pub struct SubdomainSolver {
    pub ops: SubdomainOperators,
    blocks: Blocks,
    interior: Factorization,
}

/// Factor of the Robin-mode step matrix for one value of `s`.
#[derive(Debug, Clone)]
pub struct RobinFactor {
    pub s: f64,
    subdomain: usize,
    factor: Factorization,
}

impl SubdomainSolver {
    pub fn new(ops: SubdomainOperators) -> Result<Self> {
        let blocks = ops.current_blocks();
        let context = format!("subdomain {} dirichlet", ops.index + 1);
        let interior = Factorization::new(&blocks.ii, &context)?;
        Ok(SubdomainSolver { ops, blocks, interior })
    }

    pub fn n_steps(&self) -> usize {
        self.ops.grid.n_steps
    }

    pub fn n_interface(&self) -> usize {
        self.ops.n_interface
    }

    pub fn tau(&self) -> f64 {
        self.ops.grid.tau
    }

    pub fn interior_factor(&self) -> &Factorization {
        &self.interior
    }

    fn check_signal(&self, s: &InterfaceSignal, kind: SignalKind) -> Result<()> {
        if s.n_interface != self.n_interface() || s.n_steps != self.n_steps() {
            return Err(Error::Shape(format!(
                "signal {}x{} on subdomain with {} steps x {} interface dofs",
                s.n_steps,
                s.n_interface,
                self.n_steps(),
                self.n_interface()
            )));
        }
        if s.kind != kind {
            return Err(Error::InvalidInput(format!("expected a {kind:?} signal, got {:?}", s.kind)));
        }
        Ok(())
    }

    fn check_loads(&self, loads: &Loads) -> Result<()> {
        if loads.n_dofs != self.ops.n_local() || loads.n_steps() != self.n_steps() {
            return Err(Error::Shape(format!(
                "loads {}x{} on subdomain with {} steps x {} dofs",
                loads.n_steps(),
                loads.n_dofs,
                self.n_steps(),
                self.ops.n_local()
            )));
        }
        Ok(())
    }

    fn check_field(&self, u: &SpaceTimeField) -> Result<()> {
        if u.n_dofs != self.ops.n_local() || u.n_steps != self.n_steps() {
            return Err(Error::Shape(format!(
                "field {}x{} on subdomain with {} steps x {} dofs",
                u.n_steps,
                u.n_dofs,
                self.n_steps(),
                self.ops.n_local()
            )));
        }
        Ok(())
    }

    /// Time steps the subdomain problem with interface values `eta` imposed
    /// exactly and interior rows solved. `None` means zero data.
    pub fn dirichlet_solve(&self, eta: Option<&InterfaceSignal>, loads: Option<&Loads>) -> Result<SpaceTimeField> {
        if let Some(eta) = eta {
            self.check_signal(eta, SignalKind::Primal)?;
        }
        if let Some(l) = loads {
            self.check_loads(l)?;
        }
        let n0 = self.ops.n_interior;
        let n = self.ops.n_local();
        let mut u = SpaceTimeField::zeros(n, self.n_steps()).with_subdomain(self.ops.index);
        let mut rhs = vec![0.0; n];
        for k in 1..=self.n_steps() {
            rhs.iter_mut().for_each(|v| *v = 0.0);
            self.ops.step.previous.mul_vec_add(1.0, u.step(k - 1), &mut rhs);
            if let Some(l) = loads {
                rhs.iter_mut().zip(l.step(k)).for_each(|(r, f)| *r += f);
            }
            let mut interior = rhs[..n0].to_vec();
            if let Some(eta) = eta {
                self.blocks.ig.mul_vec_add(-1.0, eta.step(k), &mut interior);
            }
            self.interior.solve_in_place(&mut interior);
            let uk = u.step_mut(k);
            uk[..n0].copy_from_slice(&interior);
            if let Some(eta) = eta {
                uk[n0..].copy_from_slice(eta.step(k));
            }
        }
        Ok(u)
    }

    /// Weak normal flux `mu -> <A u - f, R mu>` of a subdomain field.
    pub fn flux_recovery(&self, u: &SpaceTimeField, loads: Option<&Loads>) -> Result<InterfaceSignal> {
        self.check_field(u)?;
        if let Some(l) = loads {
            self.check_loads(l)?;
        }
        let n0 = self.ops.n_interior;
        let ng = self.n_interface();
        let mut sigma = InterfaceSignal::zeros(SignalKind::Dual, ng, self.n_steps());
        let interface_rows: Vec<usize> = (n0..n0 + ng).collect();
        let all: Vec<usize> = (0..self.ops.n_local()).collect();
        let a_rows = self.ops.step.current.submatrix(&interface_rows, &all);
        let b_rows = self.ops.step.previous.submatrix(&interface_rows, &all);
        for k in 1..=self.n_steps() {
            let w = self.ops.grid.weight(k);
            let mut r = a_rows.mul_vec(u.step(k));
            b_rows.mul_vec_add(-1.0, u.step(k - 1), &mut r);
            if let Some(l) = loads {
                r.iter_mut().zip(&l.step(k)[n0..]).for_each(|(x, f)| *x -= f);
            }
            sigma.step_mut(k).iter_mut().zip(&r).for_each(|(s, x)| *s = w * x);
        }
        Ok(sigma)
    }

    pub fn robin_factor(&self, s: f64) -> Result<RobinFactor> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!("Robin parameter must be positive, got {s}")));
        }
        let a = build_step_operators(&self.ops, Some(s))?;
        let factor = Factorization::new(&a, &format!("subdomain {} robin s={s}", self.ops.index + 1))?;
        Ok(RobinFactor { s, subdomain: self.ops.index, factor })
    }

    /// Solves with the Robin condition `s J trace(u) + flux(u) = lambda` on
    /// the interface at every step.
    pub fn robin_solve(&self, robin: &RobinFactor, lambda: &InterfaceSignal, loads: Option<&Loads>) -> Result<SpaceTimeField> {
        if robin.subdomain != self.ops.index {
            return Err(Error::InvalidInput("Robin factor belongs to the other subdomain".into()));
        }
        self.check_signal(lambda, SignalKind::Dual)?;
        if let Some(l) = loads {
            self.check_loads(l)?;
        }
        let n0 = self.ops.n_interior;
        let n = self.ops.n_local();
        let mut u = SpaceTimeField::zeros(n, self.n_steps()).with_subdomain(self.ops.index);
        let mut rhs = vec![0.0; n];
        for k in 1..=self.n_steps() {
            rhs.iter_mut().for_each(|v| *v = 0.0);
            self.ops.step.previous.mul_vec_add(1.0, u.step(k - 1), &mut rhs);
            if let Some(l) = loads {
                rhs.iter_mut().zip(l.step(k)).for_each(|(r, f)| *r += f);
            }
            let w = self.ops.grid.weight(k);
            rhs[n0..].iter_mut().zip(lambda.step(k)).for_each(|(r, l)| *r += l / w);
            robin.factor.solve_in_place(&mut rhs);
            u.step_mut(k).copy_from_slice(&rhs);
        }
        Ok(u)
    }

    /// Interface trace of a subdomain field as a primal signal.
    pub fn trace(&self, u: &SpaceTimeField) -> Result<InterfaceSignal> {
        self.check_field(u)?;
        let n0 = self.ops.n_interior;
        let mut eta = InterfaceSignal::zeros(SignalKind::Primal, self.n_interface(), self.n_steps());
        for k in 1..=self.n_steps() {
            eta.step_mut(k).copy_from_slice(&u.step(k)[n0..]);
        }
        Ok(eta)
    }

    /// `J eta` with `(J eta)^k = w_k M_Gamma eta^k`.
    pub fn apply_j(&self, eta: &InterfaceSignal) -> Result<InterfaceSignal> {
        self.check_signal(eta, SignalKind::Primal)?;
        Ok(apply_interface_mass(&self.ops.interface_mass, self.tau(), eta))
    }

    /// Discrete `L^2(0,T; V_i)` norm: `(sum_k tau u^k (M + K) u^k)^(1/2)`.
    pub fn x_norm(&self, u: &SpaceTimeField) -> Result<f64> {
        self.check_field(u)?;
        Ok(x_norm(&self.ops.mass, &self.ops.stiffness, self.tau(), u))
    }
}

pub(crate) fn apply_interface_mass(m_gamma: &CsrMatrix, tau: f64, eta: &InterfaceSignal) -> InterfaceSignal {
    let mut out = InterfaceSignal::zeros(SignalKind::Dual, eta.n_interface, eta.n_steps);
    for k in 1..=eta.n_steps {
        m_gamma.mul_vec_add(tau, eta.step(k), out.step_mut(k));
    }
    out
}

pub fn x_norm(mass: &CsrMatrix, stiffness: &CsrMatrix, tau: f64, u: &SpaceTimeField) -> f64 {
    let sum: f64 = (1..=u.n_steps)
        .map(|k| tau * (mass.quadratic(u.step(k), u.step(k)) + stiffness.quadratic(u.step(k), u.step(k))))
        .sum();
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{build_subdomain_operators, element_diffusion};
    use crate::mesh::{build_mesh, constant_source, decompose, ProblemSpec, Theta};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn solvers(spec: &ProblemSpec) -> [SubdomainSolver; 2] {
        let mesh = build_mesh(spec).unwrap();
        let dec = decompose(&mesh, spec).unwrap();
        let alpha = element_diffusion(&mesh, spec).unwrap();
        [0, 1].map(|i| SubdomainSolver::new(build_subdomain_operators(spec, &mesh, &dec, &alpha, i).unwrap()).unwrap())
    }

    fn small() -> ProblemSpec {
        ProblemSpec { nx: 6, ny: 5, n_steps: 4, gamma_x: 0.5, ..ProblemSpec::desk() }
    }

    fn random_signal(rng: &mut ChaCha8Rng, kind: SignalKind, ng: usize, nt: usize) -> InterfaceSignal {
        InterfaceSignal::from_vec(kind, ng, nt, (0..ng * nt).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        d / b.iter().fold(1e-300f64, |m, y| m.max(y.abs()))
    }

    /// Dense space-time matrix (weighted by tau) of one subdomain: block lower
    /// bidiagonal with `tau A` on the diagonal and `-tau B` below it.
    fn dense_space_time(s: &SubdomainSolver) -> DMatrix<f64> {
        let n = s.ops.n_local();
        let nt = s.n_steps();
        let tau = s.tau();
        let a = s.ops.step.current.to_dense() * tau;
        let b = s.ops.step.previous.to_dense() * tau;
        let mut big = DMatrix::zeros(n * nt, n * nt);
        for k in 0..nt {
            big.view_mut((k * n, k * n), (n, n)).copy_from(&a);
            if k > 0 {
                big.view_mut((k * n, (k - 1) * n), (n, n)).copy_from(&(-&b));
            }
        }
        big
    }

    #[test]
    fn zero_data_gives_zero() {
        let [s1, _] = solvers(&small());
        let u = s1.dirichlet_solve(None, None).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        let r = s1.robin_factor(1.0).unwrap();
        let lam = InterfaceSignal::zeros(SignalKind::Dual, s1.n_interface(), s1.n_steps());
        assert_eq!(s1.robin_solve(&r, &lam, None).unwrap().max_abs(), 0.0);
        assert_eq!(s1.flux_recovery(&u, None).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dirichlet_matches_dense_space_time_solve() {
        let [_, s2] = solvers(&small());
        let u = s2.dirichlet_solve(None, Some(&s2.ops.loads)).unwrap();
        // dense oracle: interior rows of the space-time system with zero trace
        let n = s2.ops.n_local();
        let n0 = s2.ops.n_interior;
        let nt = s2.n_steps();
        let big = dense_space_time(&s2);
        let rows: Vec<usize> = (0..nt).flat_map(|k| (0..n0).map(move |j| k * n + j)).collect();
        let sub = DMatrix::from_fn(rows.len(), rows.len(), |r, c| big[(rows[r], rows[c])]);
        let rhs = DVector::from_iterator(
            rows.len(),
            (1..=nt).flat_map(|k| s2.ops.loads.step(k)[..n0].iter().map(|f| f * s2.tau()).collect::<Vec<_>>()),
        );
        let x = sub.lu().solve(&rhs).unwrap();
        for k in 1..=nt {
            assert!(rel(&u.step(k)[..n0], &x.as_slice()[(k - 1) * n0..k * n0]) < 1e-12);
            assert!(u.step(k)[n0..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dirichlet_trace_and_linearity() {
        let [s1, _] = solvers(&small());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eta = random_signal(&mut rng, SignalKind::Primal, s1.n_interface(), s1.n_steps());
        let both = s1.dirichlet_solve(Some(&eta), Some(&s1.ops.loads)).unwrap();
        assert_eq!(s1.trace(&both).unwrap(), eta);
        let a = s1.dirichlet_solve(Some(&eta), None).unwrap();
        let b = s1.dirichlet_solve(None, Some(&s1.ops.loads)).unwrap();
        let sum: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect();
        assert!(rel(both.values(), &sum) < 1e-13);
        assert_eq!(both.step(0).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn robin_identity_holds() {
        let [s1, s2] = solvers(&small());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in [s1, s2] {
            let robin = s.robin_factor(0.7).unwrap();
            let lam = random_signal(&mut rng, SignalKind::Dual, s.n_interface(), s.n_steps());
            let u = s.robin_solve(&robin, &lam, Some(&s.ops.loads)).unwrap();
            let flux = s.flux_recovery(&u, Some(&s.ops.loads)).unwrap();
            let sj = s.apply_j(&s.trace(&u).unwrap()).unwrap();
            let back = flux.add_scaled(0.7, &sj).unwrap();
            assert!(rel(back.values(), lam.values()) < 1e-12);
        }
    }

    #[test]
    fn robin_hand_case() {
        // 1D, one element per subdomain, one step, tau = 1: (s + 1/6 + 2) u = lambda
        let spec = ProblemSpec::interval(2, 1, 1.0);
        let [s1, _] = solvers(&spec);
        let robin = s1.robin_factor(2.0).unwrap();
        let lam = InterfaceSignal::from_vec(SignalKind::Dual, 1, 1, vec![3.0]).unwrap();
        let u = s1.robin_solve(&robin, &lam, None).unwrap();
        assert!((u.step(1)[0] - 3.0 / (2.0 + 1.0 / 6.0 + 2.0)).abs() < 1e-15);
        assert!(s1.robin_factor(0.0).is_err());
    }

    #[test]
    fn flux_of_interior_solve_matches_schur_oracle() {
        let [s1, _] = solvers(&small());
        let u = s1.dirichlet_solve(None, Some(&s1.ops.loads)).unwrap();
        let sigma = s1.flux_recovery(&u, Some(&s1.ops.loads)).unwrap();
        // -sigma = tau f_G - (A_GI) G f ; computed via dense elimination
        let n = s1.ops.n_local();
        let n0 = s1.ops.n_interior;
        let nt = s1.n_steps();
        let big = dense_space_time(&s1);
        let ii: Vec<usize> = (0..nt).flat_map(|k| (0..n0).map(move |j| k * n + j)).collect();
        let gg: Vec<usize> = (0..nt).flat_map(|k| (n0..n).map(move |j| k * n + j)).collect();
        let f: Vec<f64> = (1..=nt).flat_map(|k| s1.ops.loads.step(k).iter().map(|v| v * s1.tau()).collect::<Vec<_>>()).collect();
        let a_ii = DMatrix::from_fn(ii.len(), ii.len(), |r, c| big[(ii[r], ii[c])]);
        let a_gi = DMatrix::from_fn(gg.len(), ii.len(), |r, c| big[(gg[r], ii[c])]);
        let f_i = DVector::from_iterator(ii.len(), ii.iter().map(|&r| f[r]));
        let f_g = DVector::from_iterator(gg.len(), gg.iter().map(|&r| f[r]));
        let chi = f_g - a_gi * a_ii.lu().solve(&f_i).unwrap();
        let neg: Vec<f64> = sigma.values().iter().map(|v| -v).collect();
        assert!(rel(&neg, chi.as_slice()) < 1e-12);
    }

    #[test]
    fn steady_flux_recovers_classical_derivative() {
        // huge tau: the step is essentially elliptic; u linear on [0, 1/2] with
        // slope 2 has flux alpha * slope per unit time at x = 1/2
        let spec = ProblemSpec { t_final: 1e12, source: constant_source(0.0), ..ProblemSpec::interval(8, 1, 1.0) };
        let [s1, _] = solvers(&spec);
        let eta = InterfaceSignal::from_vec(SignalKind::Primal, 1, 1, vec![1.0]).unwrap();
        let u = s1.dirichlet_solve(Some(&eta), None).unwrap();
        for (j, v) in u.step(1).iter().enumerate().take(3) {
            assert!((v - 0.25 * (j + 1) as f64).abs() < 1e-9);
        }
        let sigma = s1.flux_recovery(&u, None).unwrap();
        assert!((sigma.step(1)[0] / s1.tau() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn causality() {
        let spec = small();
        let [s1, _] = solvers(&spec);
        let base = s1.dirichlet_solve(None, Some(&s1.ops.loads)).unwrap();
        let mut loads = s1.ops.loads.clone();
        loads.step_mut(3).iter_mut().for_each(|v| *v += 1.0);
        let pert = s1.dirichlet_solve(None, Some(&loads)).unwrap();
        for k in 0..3 {
            assert_eq!(base.step(k), pert.step(k));
        }
        assert_ne!(base.step(3), pert.step(3));
    }

    #[test]
    fn stability_constant_is_mesh_stable() {
        // smooth data, measured C = ||u||_X / (||f||_L2 + ||eta||_H) on two meshes
        let measure = |n: usize| {
            let spec = ProblemSpec { nx: n, ny: n, n_steps: n, theta: Theta::Implicit, ..ProblemSpec::desk() };
            let [s1, _] = solvers(&spec);
            let mesh = build_mesh(&spec).unwrap();
            let dec = decompose(&mesh, &spec).unwrap();
            let tau = spec.tau();
            let mut eta = InterfaceSignal::zeros(SignalKind::Primal, s1.n_interface(), s1.n_steps());
            for k in 1..=spec.n_steps {
                let t = k as f64 * tau;
                for (g, v) in eta.step_mut(k).iter_mut().enumerate() {
                    let y = mesh.nodes[dec.free_nodes[dec.interface[g]]][1];
                    *v = (std::f64::consts::PI * y).sin() * t;
                }
            }
            let u = s1.dirichlet_solve(Some(&eta), Some(&s1.ops.loads)).unwrap();
            let mg = &s1.ops.interface_mass;
            let eta_h: f64 = (1..=spec.n_steps).map(|k| tau * mg.quadratic(eta.step(k), eta.step(k))).sum::<f64>().sqrt();
            let f_norm = (spec.t_final * 0.5).sqrt(); // ||1||_{L2(0,T;L2(Omega_1))}
            s1.x_norm(&u).unwrap() / (eta_h + f_norm)
        };
        let (c1, c2) = (measure(8), measure(16));
        assert!(c1.is_finite() && c2.is_finite());
        assert!(c2 / c1 < 2.0 && c1 / c2 < 2.0, "C = {c1} vs {c2}");
    }

    #[test]
    fn shape_errors() {
        let [s1, _] = solvers(&small());
        let wrong = InterfaceSignal::zeros(SignalKind::Primal, s1.n_interface() + 1, s1.n_steps());
        assert!(matches!(s1.dirichlet_solve(Some(&wrong), None), Err(Error::Shape(_))));
        let dual = InterfaceSignal::zeros(SignalKind::Dual, s1.n_interface(), s1.n_steps());
        assert!(s1.dirichlet_solve(Some(&dual), None).is_err());
        let field = SpaceTimeField::zeros(3, s1.n_steps());
        assert!(s1.flux_recovery(&field, None).is_err());
    }
}

//! P1 mass/stiffness assembly, interface matrices, loads and theta-scheme
//! step operators.
//!
//! One time step of the theta scheme on a dof set reads
//! `A u^k - B u^{k-1} = f^k` with `A = M/tau + theta K` and
//! `B = M/tau - (1 - theta) K`, where `f^k = M f(t)` is assembled with the
//! full (pre-elimination) element mass so that the loads of the two
//! subdomains add up to the global load exactly.

use crate::mesh::{Decomposition, Mesh, ProblemSpec, Theta};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub n_steps: usize,
    pub theta: Theta,
}

impl TimeGrid {
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        TimeGrid { tau: spec.tau(), n_steps: spec.n_steps, theta: spec.theta }
    }

    /// Quadrature weight of step `k` in temporal pairings (rectangle rule).
    pub fn weight(&self, _k: usize) -> f64 {
        self.tau
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    /// Time at which the source of step `k` is sampled.
    pub fn load_time(&self, k: usize) -> f64 {
        match self.theta {
            Theta::Implicit => self.time(k),
            Theta::CrankNicolson => (k as f64 - 0.5) * self.tau,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.tau * self.n_steps as f64
    }
}

/// Per-element diffusion values sampled at centroids.
pub fn element_diffusion(mesh: &Mesh, spec: &ProblemSpec) -> Result<Vec<f64>> {
    (0..mesh.n_elements())
        .map(|e| {
            let a = (spec.diffusion)(mesh.centroid(e));
            if a > 0.0 && a.is_finite() {
                Ok(a)
            } else {
                Err(Error::InvalidProblem(format!("diffusion must be positive, element {e} has {a}")))
            }
        })
        .collect()
}

/// Element mass and (unit-coefficient) stiffness matrices, row-major.
fn element_matrices(mesh: &Mesh, e: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let measure = mesh.measure(e);
    if !(measure > 0.0) {
        return Err(Error::InvalidProblem(format!("element {e} is degenerate (measure {measure})")));
    }
    let el = &mesh.elements[e];
    if mesh.dimension == 1 {
        let h = measure;
        let m = vec![h / 3.0, h / 6.0, h / 6.0, h / 3.0];
        let k = vec![1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h];
        return Ok((m, k));
    }
    let p: Vec<[f64; 2]> = el.iter().map(|&v| mesh.nodes[v]).collect();
    let area = measure;
    // grad phi_a = (b_a, c_a) / (2 area)
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut m = vec![0.0; 9];
    let mut k = vec![0.0; 9];
    for r in 0..3 {
        for s in 0..3 {
            m[3 * r + s] = if r == s { area / 6.0 } else { area / 12.0 };
            k[3 * r + s] = (b[r] * b[s] + c[r] * c[s]) / (4.0 * area);
        }
    }
    Ok((m, k))
}

/// Assembles `(M, K)` over `elements` for the dofs given by `node_dof`;
/// nodes mapped to `None` are eliminated (homogeneous Dirichlet).
pub fn assemble_mass_stiffness(
    mesh: &Mesh,
    alpha: &[f64],
    elements: &[usize],
    node_dof: &[Option<usize>],
    n_dofs: usize,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let mut mt = Vec::new();
    let mut kt = Vec::new();
    for &e in elements {
        if !(alpha[e] > 0.0) {
            return Err(Error::InvalidProblem(format!("diffusion must be positive, element {e} has {}", alpha[e])));
        }
        let (m, k) = element_matrices(mesh, e)?;
        let el = &mesh.elements[e];
        let nl = el.len();
        for (r, &vr) in el.iter().enumerate() {
            let Some(dr) = node_dof[vr] else { continue };
            for (s, &vs) in el.iter().enumerate() {
                let Some(ds) = node_dof[vs] else { continue };
                mt.push((dr, ds, m[nl * r + s]));
                kt.push((dr, ds, alpha[e] * k[nl * r + s]));
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n_dofs, n_dofs, mt), CsrMatrix::from_triplets(n_dofs, n_dofs, kt)))
}

/// Numbering that keeps every mesh node (no elimination).
pub fn all_nodes(mesh: &Mesh) -> Vec<Option<usize>> {
    (0..mesh.n_nodes()).map(Some).collect()
}

/// Interface points including the two endpoints on the exterior boundary,
/// ordered by y. Endpoints are `None`.
fn interface_line(mesh: &Mesh, dec: &Decomposition) -> Vec<(f64, Option<usize>)> {
    let ys: Vec<f64> = dec.interface.iter().map(|&g| mesh.nodes[dec.free_nodes[g]][1]).collect();
    let hy = if ys.len() > 1 { ys[1] - ys[0] } else { 2.0 * ys[0] };
    let mut line = vec![(ys[0] - hy, None)];
    line.extend(ys.iter().enumerate().map(|(k, &y)| (y, Some(k))));
    line.push((ys[ys.len() - 1] + hy, None));
    line
}

fn interface_segments(mesh: &Mesh, dec: &Decomposition, keep_ends: bool, stiffness: bool) -> CsrMatrix {
    let line = interface_line(mesh, dec);
    let n = if keep_ends { line.len() } else { dec.n_interface() };
    let index = |p: usize| if keep_ends { Some(p) } else { line[p].1 };
    let mut t = Vec::new();
    for seg in 0..line.len() - 1 {
        let h = line[seg + 1].0 - line[seg].0;
        let local = if stiffness {
            [1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h]
        } else {
            [h / 3.0, h / 6.0, h / 6.0, h / 3.0]
        };
        for r in 0..2 {
            for s in 0..2 {
                if let (Some(a), Some(b)) = (index(seg + r), index(seg + s)) {
                    t.push((a, b, local[2 * r + s]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, t)
}

/// Mass matrix of the interface on the interface dofs. In 1D the interface is
/// a point and the pairing is plain multiplication: `[1]`.
pub fn assemble_interface_mass(mesh: &Mesh, dec: &Decomposition) -> Result<CsrMatrix> {
    if dec.n_interface() == 0 {
        return Err(Error::InvalidProblem("empty interface".into()));
    }
    if mesh.dimension == 1 {
        return Ok(CsrMatrix::identity(1));
    }
    Ok(interface_segments(mesh, dec, false, false))
}

/// Interface mass including the endpoint rows (before Dirichlet elimination).
pub fn interface_mass_full(mesh: &Mesh, dec: &Decomposition) -> Result<CsrMatrix> {
    if mesh.dimension == 1 {
        return assemble_interface_mass(mesh, dec);
    }
    Ok(interface_segments(mesh, dec, true, false))
}

/// Laplace form along the interface with Dirichlet endpoints; `None` in 1D.
pub fn assemble_interface_stiffness(mesh: &Mesh, dec: &Decomposition) -> Option<CsrMatrix> {
    (mesh.dimension == 2).then(|| interface_segments(mesh, dec, false, true))
}

/// Load vectors of steps `1..=n_steps` on one dof set.
#[derive(Debug, Clone, PartialEq)]
pub struct Loads {
    pub n_dofs: usize,
    steps: Vec<Vec<f64>>,
}

impl Loads {
    pub fn zeros(n_dofs: usize, n_steps: usize) -> Self {
        Loads { n_dofs, steps: vec![vec![0.0; n_dofs]; n_steps] }
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Load of step `k`, `1 <= k <= n_steps`.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.steps[k - 1]
    }

    pub fn step_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.steps[k - 1]
    }
}

/// Loads `f^k_j = sum_e int_e f_h(t_k) phi_j` with `f_h` the nodal interpolant
/// of `f` over all element nodes, including Dirichlet ones.
pub fn assemble_load_steps(
    spec: &ProblemSpec,
    mesh: &Mesh,
    elements: &[usize],
    node_dof: &[Option<usize>],
    n_dofs: usize,
    grid: &TimeGrid,
) -> Result<Loads> {
    let mut loads = Loads::zeros(n_dofs, grid.n_steps);
    let element_mats: Vec<Vec<f64>> =
        elements.iter().map(|&e| element_matrices(mesh, e).map(|(m, _)| m)).collect::<Result<_>>()?;
    let mut nodal = vec![0.0; mesh.n_nodes()];
    for k in 1..=grid.n_steps {
        let t = grid.load_time(k);
        for (v, val) in nodal.iter_mut().enumerate() {
            *val = (spec.source)(t, mesh.nodes[v]);
            if !val.is_finite() {
                return Err(Error::InvalidInput(format!("source is not finite at t={t}, node {v}")));
            }
        }
        let fk = loads.step_mut(k);
        for (&e, m) in elements.iter().zip(&element_mats) {
            let el = &mesh.elements[e];
            let nl = el.len();
            for (r, &vr) in el.iter().enumerate() {
                let Some(dr) = node_dof[vr] else { continue };
                fk[dr] += (0..nl).map(|s| m[nl * r + s] * nodal[el[s]]).sum::<f64>();
            }
        }
    }
    Ok(loads)
}

/// Per-subdomain loads in local (interior, interface) ordering.
pub fn assemble_loads(spec: &ProblemSpec, mesh: &Mesh, dec: &Decomposition, grid: &TimeGrid) -> Result<[Loads; 2]> {
    let l0 = assemble_load_steps(spec, mesh, &dec.elements[0], &dec.sub[0].node_local, dec.sub[0].n_local(), grid)?;
    let l1 = assemble_load_steps(spec, mesh, &dec.elements[1], &dec.sub[1].node_local, dec.sub[1].n_local(), grid)?;
    Ok([l0, l1])
}

/// `A = M/tau + theta K` and `B = M/tau - (1 - theta) K`.
#[derive(Debug, Clone)]
pub struct StepOperators {
    pub current: CsrMatrix,
    pub previous: CsrMatrix,
}

impl StepOperators {
    pub fn new(mass: &CsrMatrix, stiffness: &CsrMatrix, grid: &TimeGrid) -> Result<Self> {
        let theta = grid.theta.value();
        let inv_tau = 1.0 / grid.tau;
        Ok(StepOperators {
            current: mass.linear_combination(inv_tau, stiffness, theta)?,
            previous: mass.linear_combination(inv_tau, stiffness, -(1.0 - theta))?,
        })
    }
}

/// Interior/interface blocks of a local matrix.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub ii: CsrMatrix,
    pub ig: CsrMatrix,
    pub gi: CsrMatrix,
    pub gg: CsrMatrix,
}

impl Blocks {
    pub fn split(a: &CsrMatrix, n_interior: usize) -> Self {
        let interior: Vec<usize> = (0..n_interior).collect();
        let interface: Vec<usize> = (n_interior..a.nrows()).collect();
        Blocks {
            ii: a.submatrix(&interior, &interior),
            ig: a.submatrix(&interior, &interface),
            gi: a.submatrix(&interface, &interior),
            gg: a.submatrix(&interface, &interface),
        }
    }
}

/// Everything one subdomain solver needs.
#[derive(Debug, Clone)]
pub struct SubdomainOperators {
    pub index: usize,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub interface_mass: CsrMatrix,
    pub grid: TimeGrid,
    pub step: StepOperators,
    pub loads: Loads,
    pub n_interior: usize,
    pub n_interface: usize,
}

impl SubdomainOperators {
    pub fn n_local(&self) -> usize {
        self.n_interior + self.n_interface
    }

    pub fn current_blocks(&self) -> Blocks {
        Blocks::split(&self.step.current, self.n_interior)
    }
}

pub fn build_subdomain_operators(
    spec: &ProblemSpec,
    mesh: &Mesh,
    dec: &Decomposition,
    alpha: &[f64],
    index: usize,
) -> Result<SubdomainOperators> {
    let map = &dec.sub[index];
    let grid = TimeGrid::from_spec(spec);
    let (mass, stiffness) = assemble_mass_stiffness(mesh, alpha, &dec.elements[index], &map.node_local, map.n_local())?;
    let step = StepOperators::new(&mass, &stiffness, &grid)?;
    let loads = assemble_load_steps(spec, mesh, &dec.elements[index], &map.node_local, map.n_local(), &grid)?;
    Ok(SubdomainOperators {
        index,
        mass,
        stiffness,
        interface_mass: assemble_interface_mass(mesh, dec)?,
        grid,
        step,
        loads,
        n_interior: map.n_interior,
        n_interface: map.n_interface,
    })
}

/// The per-step matrix to factorize: `A` itself, or with `s * M_Gamma` added to
/// the interface block in Robin mode.
pub fn build_step_operators(ops: &SubdomainOperators, robin: Option<f64>) -> Result<CsrMatrix> {
    if !(ops.grid.tau > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {}", ops.grid.tau)));
    }
    let Some(s) = robin else {
        return Ok(ops.step.current.clone());
    };
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidInput(format!("Robin parameter must be non-negative, got {s}")));
    }
    let n0 = ops.n_interior;
    let extra = ops.interface_mass.triplets().map(|(r, c, v)| (n0 + r, n0 + c, s * v)).collect();
    let extra = CsrMatrix::from_triplets(ops.n_local(), ops.n_local(), extra);
    ops.step.current.linear_combination(1.0, &extra, 1.0)
}

//! Theta-scheme solve on the undecomposed mesh.

use crate::assembly::{assemble_load_steps, assemble_mass_stiffness, element_diffusion, Loads, StepOperators, TimeGrid};
use crate::factor::Factorization;
use crate::interface::{Reference, SteklovSystem};
use crate::mesh::{build_mesh, decompose, Decomposition, Mesh, ProblemSpec};
use crate::sparse::CsrMatrix;
use crate::subsolve::SpaceTimeField;
use crate::Result;

#[derive(Debug, Clone)]
pub struct Monolithic {
    pub mesh: Mesh,
    pub dec: Decomposition,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub step: StepOperators,
    pub loads: Loads,
    pub grid: TimeGrid,
    /// Solution on the global free dofs.
    pub u: SpaceTimeField,
}

pub fn solve_monolithic(spec: &ProblemSpec) -> Result<Monolithic> {
    let mesh = build_mesh(spec)?;
    let dec = decompose(&mesh, spec)?;
    let alpha = element_diffusion(&mesh, spec)?;
    let grid = TimeGrid::from_spec(spec);
    let all: Vec<usize> = (0..mesh.n_elements()).collect();
    let n = dec.n_free();
    let (mass, stiffness) = assemble_mass_stiffness(&mesh, &alpha, &all, &dec.node_dof, n)?;
    let step = StepOperators::new(&mass, &stiffness, &grid)?;
    let loads = assemble_load_steps(spec, &mesh, &all, &dec.node_dof, n, &grid)?;
    let factor = Factorization::new(&step.current, "monolithic")?;
    let mut u = SpaceTimeField::zeros(n, grid.n_steps);
    for k in 1..=grid.n_steps {
        let mut rhs = loads.step(k).to_vec();
        step.previous.mul_vec_add(1.0, u.step(k - 1), &mut rhs);
        factor.solve_in_place(&mut rhs);
        u.step_mut(k).copy_from_slice(&rhs);
    }
    Ok(Monolithic { mesh, dec, mass, stiffness, step, loads, grid, u })
}

impl Monolithic {
    /// Euclidean norm of the time-weighted residual `tau (A u^k - B u^{k-1} - f^k)`
    /// over all steps, for any global field.
    pub fn residual(&self, u: &SpaceTimeField) -> f64 {
        let mut sum = 0.0;
        for k in 1..=self.grid.n_steps {
            let mut r = self.step.current.mul_vec(u.step(k));
            self.step.previous.mul_vec_add(-1.0, u.step(k - 1), &mut r);
            for (x, f) in r.iter().zip(self.loads.step(k)) {
                sum += (self.grid.tau * (x - f)).powi(2);
            }
        }
        sum.sqrt()
    }

    pub fn restrict(&self, u: &SpaceTimeField) -> [SpaceTimeField; 2] {
        [0, 1].map(|i| {
            let map = &self.dec.sub[i];
            let mut out = SpaceTimeField::zeros(map.n_local(), u.n_steps).with_subdomain(i);
            for k in 0..=u.n_steps {
                out.step_mut(k).copy_from_slice(&map.restrict(u.step(k)));
            }
            out
        })
    }

    /// Global field from two subdomain fields (interface values from the first).
    pub fn glue(&self, u1: &SpaceTimeField, u2: &SpaceTimeField) -> SpaceTimeField {
        let mut out = SpaceTimeField::zeros(self.dec.n_free(), u1.n_steps);
        for k in 0..=u1.n_steps {
            out.step_mut(k).copy_from_slice(&self.dec.glue(u1.step(k), u2.step(k)));
        }
        out
    }

    /// Restricted solution and its interface trace.
    pub fn reference(&self, sys: &SteklovSystem) -> Result<Reference> {
        let u = self.restrict(&self.u);
        let eta = sys.solvers[0].trace(&u[0])?;
        Ok(Reference { eta, u })
    }
}

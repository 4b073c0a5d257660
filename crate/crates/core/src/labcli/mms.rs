//! Manufactured solution `u = sin(pi x / Lx) sin(pi y / Ly) (1 - e^{-t})`
//! (the `y` factor is dropped in 1D) with constant diffusion.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::mesh::{ProblemSpec, Theta};
use crate::subsolve::{x_norm, SpaceTimeField};
use crate::Result;

use super::monolithic::solve_monolithic;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub dimension: usize,
    pub lx: f64,
    pub ly: f64,
    pub alpha: f64,
}

impl Manufactured {
    fn shape(&self, p: [f64; 2]) -> f64 {
        let sx = (PI * p[0] / self.lx).sin();
        if self.dimension == 1 {
            sx
        } else {
            sx * (PI * p[1] / self.ly).sin()
        }
    }

    fn eigenvalue(&self) -> f64 {
        let kx = (PI / self.lx).powi(2);
        if self.dimension == 1 {
            kx
        } else {
            kx + (PI / self.ly).powi(2)
        }
    }

    pub fn exact(&self, t: f64, p: [f64; 2]) -> f64 {
        self.shape(p) * (1.0 - (-t).exp())
    }

    /// `f = u_t - alpha Laplace u`.
    pub fn source(&self, t: f64, p: [f64; 2]) -> f64 {
        self.shape(p) * ((-t).exp() + self.alpha * self.eigenvalue() * (1.0 - (-t).exp()))
    }

    pub fn spec(&self, nx: usize, ny: usize, n_steps: usize, t_final: f64, theta: Theta) -> ProblemSpec {
        let (alpha, me) = (self.alpha, *self);
        ProblemSpec {
            dimension: self.dimension,
            lx: self.lx,
            ly: self.ly,
            nx,
            ny: if self.dimension == 1 { 1 } else { ny },
            gamma_x: 0.5 * self.lx,
            diffusion: Arc::new(move |_| alpha),
            source: Arc::new(move |t, p| me.source(t, p)),
            t_final,
            n_steps,
            theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsRow {
    pub h: f64,
    pub tau: f64,
    /// `(sum_k tau e^k M e^k)^(1/2)` with `e = u_h - I_h u`.
    pub l2_error: f64,
    /// Same with `M + K`.
    pub x_error: f64,
    /// `log(e_prev / e) / log(step_prev / step)` for the refined quantity;
    /// `None` on the first level.
    pub order: Option<f64>,
}

/// Errors of the monolithic solve against the nodal interpolant.
pub fn mms_errors(m: &Manufactured, spec: &ProblemSpec) -> Result<(f64, f64)> {
    let mono = solve_monolithic(spec)?;
    let tau = spec.tau();
    let n = mono.dec.n_free();
    let exact = SpaceTimeField::from_fn(n, spec.n_steps, |k, d| m.exact(k as f64 * tau, mono.mesh.nodes[mono.dec.free_nodes[d]]));
    let e = mono.u.sub(&exact)?;
    let zero = crate::sparse::CsrMatrix::zeros(n, n);
    Ok((x_norm(&mono.mass, &zero, tau, &e), x_norm(&mono.mass, &mono.stiffness, tau, &e)))
}

/// Observed orders over a list of `(nx, n_steps)` levels; `by_time` selects
/// `tau` instead of `h` as the refinement variable.
pub fn mms_sweep(m: &Manufactured, levels: &[(usize, usize)], t_final: f64, theta: Theta, by_time: bool) -> Result<Vec<MmsRow>> {
    let mut rows: Vec<MmsRow> = Vec::with_capacity(levels.len());
    for &(nx, n_steps) in levels {
        let spec = m.spec(nx, nx, n_steps, t_final, theta);
        let (l2, x) = mms_errors(m, &spec)?;
        let (h, tau) = (spec.hx(), spec.tau());
        let order = rows.last().map(|p| {
            let ratio = if by_time { p.tau / tau } else { p.h / h };
            (p.l2_error / l2).ln() / ratio.ln()
        });
        rows.push(MmsRow { h, tau, l2_error: l2, x_error: x, order });
    }
    Ok(rows)
}

pub const SPACE_LEVELS: [usize; 3] = [8, 16, 32];
pub const TIME_LEVELS: [usize; 3] = [8, 16, 32];
pub const TIME_SWEEP_NX: usize = 512;

/// Spatial sweep in 2D with `tau` tied to `h` so the time error does not
/// dominate: `N_t = nx^2 / 4` for implicit Euler, `N_t = nx` for Crank-Nicolson.
pub fn space_sweep(theta: Theta) -> Result<Vec<MmsRow>> {
    let m = Manufactured { dimension: 2, lx: 1.0, ly: 1.0, alpha: 1.0 };
    let levels: Vec<(usize, usize)> = SPACE_LEVELS
        .iter()
        .map(|&nx| (nx, if theta == Theta::Implicit { nx * nx / 4 } else { nx }))
        .collect();
    mms_sweep(&m, &levels, 1.0, theta, false)
}

/// Temporal sweep in 1D on a fine mesh.
pub fn time_sweep(theta: Theta) -> Result<Vec<MmsRow>> {
    let m = Manufactured { dimension: 1, lx: 1.0, ly: 1.0, alpha: 1.0 };
    let levels: Vec<(usize, usize)> = TIME_LEVELS.iter().map(|&nt| (TIME_SWEEP_NX, nt)).collect();
    mms_sweep(&m, &levels, 1.0, theta, true)
}

//! Structured meshes of a rectangle (or interval) and the two-subdomain split
//! along a vertical mesh line.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Diffusion coefficient sampled at element centroids.
pub type Diffusion = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Source term `f(t, x)`, sampled at nodes.
pub type Source = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;

/// Time discretization parameter of the theta scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theta {
    /// Backward Euler, theta = 1.
    Implicit,
    /// Crank-Nicolson, theta = 1/2.
    CrankNicolson,
}

impl Theta {
    pub fn value(self) -> f64 {
        match self {
            Theta::Implicit => 1.0,
            Theta::CrankNicolson => 0.5,
        }
    }

    pub fn from_value(theta: f64) -> Result<Self> {
        if theta == 1.0 {
            Ok(Theta::Implicit)
        } else if theta == 0.5 {
            Ok(Theta::CrankNicolson)
        } else {
            Err(Error::InvalidProblem(format!("theta must be 1 or 0.5, got {theta}")))
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    /// x coordinate of the interface line.
    pub gamma_x: f64,
    pub diffusion: Diffusion,
    pub source: Source,
    pub t_final: f64,
    pub n_steps: usize,
    pub theta: Theta,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dimension", &self.dimension)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("gamma_x", &self.gamma_x)
            .field("t_final", &self.t_final)
            .field("n_steps", &self.n_steps)
            .field("theta", &self.theta)
            .finish_non_exhaustive()
    }
}

/// Diffusion taking one value left of `gamma_x` and another right of it.
pub fn piecewise_diffusion(gamma_x: f64, left: f64, right: f64) -> Diffusion {
    Arc::new(move |p: [f64; 2]| if p[0] < gamma_x { left } else { right })
}

pub fn constant_source(value: f64) -> Source {
    Arc::new(move |_t, _p| value)
}

impl ProblemSpec {
    /// The default desk problem: unit square, 16x16 cells, interface at x = 1/2,
    /// alpha = 1 on the left and 3 on the right, f = 1, T = 1, 16 implicit steps.
    pub fn desk() -> Self {
        ProblemSpec {
            dimension: 2,
            lx: 1.0,
            ly: 1.0,
            nx: 16,
            ny: 16,
            gamma_x: 0.5,
            diffusion: piecewise_diffusion(0.5, 1.0, 3.0),
            source: constant_source(1.0),
            t_final: 1.0,
            n_steps: 16,
            theta: Theta::Implicit,
        }
    }

    /// Unit interval with `nx` cells and constant unit coefficients.
    pub fn interval(nx: usize, n_steps: usize, t_final: f64) -> Self {
        ProblemSpec {
            dimension: 1,
            lx: 1.0,
            ly: 1.0,
            nx,
            ny: 1,
            gamma_x: 0.5,
            diffusion: Arc::new(|_| 1.0),
            source: constant_source(1.0),
            t_final,
            n_steps,
            theta: Theta::Implicit,
        }
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if self.dimension != 1 && self.dimension != 2 {
            return bad(format!("dimension must be 1 or 2, got {}", self.dimension));
        }
        if !(self.lx > 0.0) || (self.dimension == 2 && !(self.ly > 0.0)) {
            return bad(format!("extents must be positive, got lx={} ly={}", self.lx, self.ly));
        }
        if self.nx < 2 || (self.dimension == 2 && self.ny < 2) {
            return bad(format!("need at least 2 cells per direction, got nx={} ny={}", self.nx, self.ny));
        }
        if self.n_steps == 0 {
            return bad("need at least one time step".into());
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.t_final));
        }
        self.interface_column()?;
        Ok(())
    }

    /// Column index `i` of the interface line `x = i * hx`.
    pub fn interface_column(&self) -> Result<usize> {
        let pos = self.gamma_x / self.hx();
        let col = pos.round();
        if !pos.is_finite() || (pos - col).abs() > 1e-9 * pos.abs().max(1.0) {
            return Err(Error::InvalidProblem(format!(
                "interface x={} is not on a mesh line (hx={})",
                self.gamma_x,
                self.hx()
            )));
        }
        let col = col as usize;
        if col == 0 || col >= self.nx {
            return Err(Error::InvalidProblem(format!(
                "interface x={} lies on the exterior boundary",
                self.gamma_x
            )));
        }
        Ok(col)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dimension: usize,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<[f64; 2]>,
    /// Segments (2 nodes) in 1D, counter-clockwise triangles (3 nodes) in 2D.
    pub elements: Vec<Vec<usize>>,
    pub boundary: Vec<bool>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Signed length (1D) or area (2D) of an element.
    pub fn measure(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        let p = |k: usize| self.nodes[el[k]];
        match self.dimension {
            1 => p(1)[0] - p(0)[0],
            _ => {
                let (a, b, c) = (p(0), p(1), p(2));
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            }
        }
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let el = &self.elements[e];
        let n = el.len() as f64;
        let mut c = [0.0; 2];
        for &v in el {
            c[0] += self.nodes[v][0] / n;
            c[1] += self.nodes[v][1] / n;
        }
        c
    }

    /// Node index of grid point `(i, j)`; lexicographic by y, then x.
    pub fn node_at(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
}

pub fn build_mesh(spec: &ProblemSpec) -> Result<Mesh> {
    spec.validate()?;
    let (nx, hx) = (spec.nx, spec.hx());
    if spec.dimension == 1 {
        let nodes = (0..=nx).map(|i| [i as f64 * hx, 0.0]).collect();
        let elements = (0..nx).map(|i| vec![i, i + 1]).collect();
        let boundary = (0..=nx).map(|i| i == 0 || i == nx).collect();
        return Ok(Mesh { dimension: 1, nx, ny: 0, nodes, elements, boundary });
    }

    let (ny, hy) = (spec.ny, spec.hy());
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 * hx, j as f64 * hy]);
            boundary.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }
    // Diagonals alternate with the cell parity, so the triangulation is
    // mirror symmetric about x = lx/2 whenever nx is even.
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                elements.push(vec![a, b, c]);
                elements.push(vec![a, c, d]);
            } else {
                elements.push(vec![a, b, d]);
                elements.push(vec![b, c, d]);
            }
        }
    }
    Ok(Mesh { dimension: 2, nx, ny, nodes, elements, boundary })
}

/// Index maps of one subdomain. Local ordering is interior dofs first, then
/// interface dofs in the global interface order.
#[derive(Debug, Clone)]
pub struct SubdomainMap {
    /// Local dof -> global free dof.
    pub global: Vec<usize>,
    /// Mesh node -> local dof (None for Dirichlet nodes and nodes of the other side).
    pub node_local: Vec<Option<usize>>,
    pub n_interior: usize,
    pub n_interface: usize,
}

impl SubdomainMap {
    pub fn n_local(&self) -> usize {
        self.global.len()
    }

    /// Global free vector -> local vector.
    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.global.iter().map(|&g| global[g]).collect()
    }

    /// `global += P^T local`.
    pub fn add_to_global(&self, local: &[f64], global: &mut [f64]) {
        for (l, &g) in self.global.iter().enumerate() {
            global[g] += local[l];
        }
    }

    /// Interface values of a local vector.
    pub fn trace<'a>(&self, local: &'a [f64]) -> &'a [f64] {
        &local[self.n_interior..]
    }

    /// Local vector equal to `values` on the interface and zero inside.
    pub fn lift(&self, values: &[f64]) -> Vec<f64> {
        let mut local = vec![0.0; self.n_local()];
        local[self.n_interior..].copy_from_slice(values);
        local
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Elements of each subdomain.
    pub elements: [Vec<usize>; 2],
    /// Global free dof -> node.
    pub free_nodes: Vec<usize>,
    /// Node -> global free dof.
    pub node_dof: Vec<Option<usize>>,
    /// Interior free dofs of each subdomain (global numbering).
    pub interior: [Vec<usize>; 2],
    /// Interface dofs (global numbering), ordered by y.
    pub interface: Vec<usize>,
    pub sub: [SubdomainMap; 2],
}

impl Decomposition {
    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn n_interface(&self) -> usize {
        self.interface.len()
    }

    /// Assemble a global free vector from two subdomain vectors whose traces agree.
    /// Interface values are taken from the first subdomain.
    pub fn glue(&self, u1: &[f64], u2: &[f64]) -> Vec<f64> {
        let mut global = vec![0.0; self.n_free()];
        for (map, u) in [(&self.sub[1], u2), (&self.sub[0], u1)] {
            for (l, &g) in map.global.iter().enumerate() {
                global[g] = u[l];
            }
        }
        global
    }
}

pub fn decompose(mesh: &Mesh, spec: &ProblemSpec) -> Result<Decomposition> {
    let col = spec.interface_column()?;
    let gx = col as f64 * spec.hx();
    let tol = 1e-9 * spec.hx();

    let mut elements = [Vec::new(), Vec::new()];
    for e in 0..mesh.n_elements() {
        let side = usize::from(mesh.centroid(e)[0] > gx);
        elements[side].push(e);
    }

    let mut free_nodes = Vec::new();
    let mut node_dof = vec![None; mesh.n_nodes()];
    for (v, &b) in mesh.boundary.iter().enumerate() {
        if !b {
            node_dof[v] = Some(free_nodes.len());
            free_nodes.push(v);
        }
    }

    let mut interior = [Vec::new(), Vec::new()];
    let mut interface = Vec::new();
    let mut interface_nodes = Vec::new();
    let mut interior_nodes = [Vec::new(), Vec::new()];
    for (dof, &v) in free_nodes.iter().enumerate() {
        let x = mesh.nodes[v][0];
        if (x - gx).abs() <= tol {
            interface.push(dof);
            interface_nodes.push(v);
        } else {
            let side = usize::from(x > gx);
            interior[side].push(dof);
            interior_nodes[side].push(v);
        }
    }
    if interface.is_empty() {
        return Err(Error::InvalidProblem("interface has no free dofs".into()));
    }

    let sub = [0, 1].map(|i| {
        let mut global = interior[i].clone();
        global.extend_from_slice(&interface);
        let mut node_local = vec![None; mesh.n_nodes()];
        for (l, &v) in interior_nodes[i].iter().chain(&interface_nodes).enumerate() {
            node_local[v] = Some(l);
        }
        SubdomainMap { global, node_local, n_interior: interior[i].len(), n_interface: interface.len() }
    });

    Ok(Decomposition { elements, free_nodes, node_dof, interior, interface, sub })
}

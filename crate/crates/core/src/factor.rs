//! Direct factorizations of the per-step matrices.
//!
//! Symmetric positive definite matrices get an envelope (skyline) Cholesky
//! factor, which is cheap for the lexicographically ordered structured meshes
//! used here. Anything else falls back to a dense partial-pivoting LU.

use nalgebra::{DMatrix, DVector};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Envelope Cholesky factor `A = L L^T`, stored row-wise from the first
/// nonzero column of each row up to the diagonal.
#[derive(Debug, Clone)]
struct Skyline {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl Skyline {
    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.start[i]..self.start[i + 1]]
    }

    /// `None` when a pivot is not positive, i.e. the matrix is not SPD.
    fn factor(a: &CsrMatrix) -> Option<Skyline> {
        let n = a.nrows();
        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            let (cols, _) = a.row(i);
            *f = cols.first().map_or(i, |&c| c.min(i));
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    values[start[i] + c - first[i]] = v;
                }
            }
        }

        let scale = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut sum = values[start[i] + j - fi];
                for k in k0..j {
                    sum -= values[start[i] + k - fi] * values[start[j] + k - fj];
                }
                if j < i {
                    values[start[i] + j - fi] = sum / values[start[j + 1] - 1];
                } else {
                    if !(sum > 1e-14 * scale) {
                        return None;
                    }
                    values[start[i + 1] - 1] = sum.sqrt();
                }
            }
        }
        Some(Skyline { first, start, values })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.first.len();
        for i in 0..n {
            let row = self.row(i);
            let fi = self.first[i];
            let mut sum = x[i];
            for (k, l) in row[..row.len() - 1].iter().enumerate() {
                sum -= l * x[fi + k];
            }
            x[i] = sum / row[row.len() - 1];
        }
        for i in (0..n).rev() {
            let row = self.row(i);
            let fi = self.first[i];
            x[i] /= row[row.len() - 1];
            let xi = x[i];
            for (k, l) in row[..row.len() - 1].iter().enumerate() {
                x[fi + k] -= l * xi;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Empty,
    Cholesky(Skyline),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

/// Factor of one square matrix, reusable for any number of right-hand sides.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    kind: Kind,
}

impl Factorization {
    /// Factorizes `a`; `context` names the matrix in error reports.
    pub fn new(a: &CsrMatrix, context: &str) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Shape(format!("{context}: {}x{} is not square", n, a.ncols())));
        }
        if n == 0 {
            return Ok(Factorization { n, kind: Kind::Empty });
        }
        if a.is_symmetric() {
            if let Some(sky) = Skyline::factor(a) {
                return Ok(Factorization { n, kind: Kind::Cholesky(sky) });
            }
        }
        let dense = a.to_dense();
        let scale = dense.amax();
        let lu = dense.lu();
        let u = lu.u();
        for k in 0..n {
            if !(u[(k, k)].abs() > 1e-14 * scale) {
                return Err(Error::Singular { context: context.to_string(), pivot: k });
            }
        }
        Ok(Factorization { n, kind: Kind::Lu(lu) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_spd(&self) -> bool {
        matches!(self.kind, Kind::Cholesky(_))
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "right-hand side length");
        match &self.kind {
            Kind::Empty => {}
            Kind::Cholesky(sky) => sky.solve_in_place(x),
            Kind::Lu(lu) => {
                let mut b = DVector::from_column_slice(x);
                lu.solve_mut(&mut b);
                x.copy_from_slice(b.as_slice());
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Factorizes each distinct matrix once; `result[k]` belongs to `matrices[k]`.
pub fn factorize_steps(matrices: &[&CsrMatrix], context: &str) -> Result<Vec<Factorization>> {
    let mut out: Vec<Factorization> = Vec::with_capacity(matrices.len());
    for (k, m) in matrices.iter().enumerate() {
        if let Some(j) = (0..k).find(|&j| matrices[j] == *m) {
            let f = out[j].clone();
            out.push(f);
        } else {
            out.push(Factorization::new(m, &format!("{context} step {}", k + 1))?);
        }
    }
    Ok(out)
}

/// Dense copy of a factorization's inverse, for small diagnostics.
pub fn dense_inverse(f: &Factorization) -> DMatrix<f64> {
    let n = f.dim();
    let mut inv = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        f.solve_in_place(&mut e);
        inv.set_column(c, &DVector::from_vec(e));
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        let nb: f64 = b.iter().map(|q| q * q).sum();
        (r / nb).sqrt()
    }

    #[test]
    fn identity_returns_rhs() {
        let f = Factorization::new(&CsrMatrix::identity(4), "identity").unwrap();
        assert!(f.is_spd());
        assert_eq!(f.solve(&[1.0, -2.0, 3.0, 0.5]), vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn hand_inverse_2x2() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let x = Factorization::new(&a, "2x2").unwrap().solve(&[1.0, 0.0]);
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x[1] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let dense = &g * g.transpose() + DMatrix::identity(n, n) * 0.5;
        let a = CsrMatrix::from_dense(&dense);
        let f = Factorization::new(&a, "random spd").unwrap();
        assert!(f.is_spd());
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = f.solve(&b);
        assert!(residual(&a, &x, &b) <= 1e-12);
    }

    #[test]
    fn banded_envelope_matches_dense() {
        // 1D Laplacian plus a far coupling, so envelopes differ row to row
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        t.push((0, n - 1, 0.5));
        t.push((n - 1, 0, 0.5));
        let a = CsrMatrix::from_triplets(n, n, t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let x = Factorization::new(&a, "band").unwrap().solve(&b);
        assert!(residual(&a, &x, &b) <= 1e-14);
    }

    #[test]
    fn nonsymmetric_falls_back_to_lu() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 0.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let f = Factorization::new(&a, "lu").unwrap();
        assert!(!f.is_spd());
        let x = f.solve(&[1.0, 3.0]);
        assert!(residual(&a, &x, &[1.0, 3.0]) < 1e-15);
    }

    #[test]
    fn singular_is_reported_with_context() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        match Factorization::new(&a, "subdomain 2 robin") {
            Err(Error::Singular { context, .. }) => assert_eq!(context, "subdomain 2 robin"),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn identical_step_matrices_share_one_factor() {
        let a = CsrMatrix::identity(3);
        let fs = factorize_steps(&[&a, &a, &a], "steps").unwrap();
        assert_eq!(fs.len(), 3);
    }
}

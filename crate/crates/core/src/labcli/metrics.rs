use crate::interface::SteklovSystem;
use crate::subsolve::{InterfaceSignal, SpaceTimeField, SubdomainSolver};
use crate::Result;

/// `(sum_k tau (u - u_ref)^k (M_i + K_i) (u - u_ref)^k)^(1/2)`, the error in
/// the discrete `L^2(0,T; V_i)` norm.
pub fn xi_norm_error(solver: &SubdomainSolver, u: &SpaceTimeField, u_ref: &SpaceTimeField) -> Result<f64> {
    solver.x_norm(&u.sub(u_ref)?)
}

/// `<S_i eta_ref - S_i eta_n, eta_ref - eta_n>`.
pub fn monotone_gap(sys: &SteklovSystem, i: usize, eta_ref: &InterfaceSignal, eta_n: &InterfaceSignal) -> Result<f64> {
    let diff = eta_ref.add_scaled(-1.0, eta_n)?;
    sys.apply_s(i, &diff)?.pair(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ProblemSpec;
    use crate::subsolve::SignalKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sys() -> SteklovSystem {
        SteklovSystem::new(&ProblemSpec { nx: 6, ny: 4, n_steps: 3, ..ProblemSpec::desk() }).unwrap()
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize, nt: usize) -> SpaceTimeField {
        SpaceTimeField::from_fn(n, nt, |k, _| if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) })
    }

    #[test]
    fn xi_error_properties() {
        let sys = sys();
        let s = &sys.solvers[0];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = random_field(&mut rng, s.ops.n_local(), 3);
        let zero = SpaceTimeField::zeros(s.ops.n_local(), 3);
        assert_eq!(xi_norm_error(s, &u, &u).unwrap(), 0.0);
        let e1 = xi_norm_error(s, &u, &zero).unwrap();
        let e2 = xi_norm_error(s, &u.scaled(2.0), &zero).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-13 * e1);

        // direct summation over the dense quadratic form
        let q = s.ops.mass.to_dense() + s.ops.stiffness.to_dense();
        let mut sum = 0.0;
        for k in 1..=3 {
            let v = nalgebra::DVector::from_column_slice(u.step(k));
            sum += sys.tau() * (v.transpose() * &q * &v)[(0, 0)];
        }
        assert!((e1 - sum.sqrt()).abs() < 1e-13 * e1);
        assert!(xi_norm_error(s, &u, &SpaceTimeField::zeros(2, 3)).is_err());
    }

    #[test]
    fn gap_properties() {
        let sys = sys();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut sig = || {
            let v = (0..sys.signal_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            InterfaceSignal::from_vec(SignalKind::Primal, sys.n_interface(), sys.n_steps(), v).unwrap()
        };
        let (eta_ref, delta) = (sig(), sig());
        assert_eq!(monotone_gap(&sys, 0, &eta_ref, &eta_ref).unwrap(), 0.0);
        let g1 = monotone_gap(&sys, 1, &eta_ref, &eta_ref.add_scaled(1.0, &delta).unwrap()).unwrap();
        let g3 = monotone_gap(&sys, 1, &eta_ref, &eta_ref.add_scaled(3.0, &delta).unwrap()).unwrap();
        assert!(g1 > 0.0);
        assert!((g3 - 9.0 * g1).abs() < 1e-11 * g3);
    }
}

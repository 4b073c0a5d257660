//! Seeded random inputs that are smooth in space and time.

use std::f64::consts::PI;

use rand::Rng;

use crate::interface::SteklovSystem;
use crate::subsolve::{InterfaceSignal, SignalKind, SpaceTimeField};

/// `mu(t, y) = sum_{p,q <= 3} c_pq sin(p pi y / Ly) sin(q pi t / 2T)` on the
/// interface dofs (only `p = 1` with a unit spatial factor in 1D).
pub fn smooth_interface_signal(sys: &SteklovSystem, rng: &mut impl Rng) -> InterfaceSignal {
    let spec = &sys.spec;
    let ys: Vec<f64> = sys.dec.interface.iter().map(|&d| sys.mesh.nodes[sys.dec.free_nodes[d]][1]).collect();
    let p_max = if spec.dimension == 1 { 1 } else { 3 };
    let coef: Vec<f64> = (0..p_max * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut mu = sys.zero_primal();
    for k in 1..=mu.n_steps {
        let t = k as f64 * spec.tau();
        for (g, y) in ys.iter().enumerate() {
            let mut v = 0.0;
            for p in 1..=p_max {
                let sy = if spec.dimension == 1 { 1.0 } else { (p as f64 * PI * y / spec.ly).sin() };
                for q in 1..=3 {
                    v += coef[(p - 1) * 3 + q - 1] * sy * (q as f64 * PI * t / (2.0 * spec.t_final)).sin();
                }
            }
            mu.step_mut(k)[g] = v;
        }
    }
    mu
}

/// White-noise signal of the given kind.
pub fn random_signal(sys: &SteklovSystem, kind: SignalKind, rng: &mut impl Rng) -> InterfaceSignal {
    let v = (0..sys.signal_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    InterfaceSignal::from_vec(kind, sys.n_interface(), sys.n_steps(), v).expect("length matches")
}

/// `u(t, x, y) = (t/T) sum c_abc cos(a pi x / Lx) cos(b pi y / Ly) (t/T)^c`
/// on the dofs of subdomain `i`, zero at `t = 0`.
pub fn smooth_field(sys: &SteklovSystem, i: usize, rng: &mut impl Rng) -> SpaceTimeField {
    let spec = &sys.spec;
    let map = &sys.dec.sub[i];
    let pts: Vec<[f64; 2]> = map.global.iter().map(|&d| sys.mesh.nodes[sys.dec.free_nodes[d]]).collect();
    let b_max = if spec.dimension == 1 { 1 } else { 3 };
    let coef: Vec<f64> = (0..3 * b_max * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SpaceTimeField::from_fn(map.n_local(), spec.n_steps, |k, l| {
        let t = k as f64 / spec.n_steps as f64;
        let [x, y] = pts[l];
        let mut v = 0.0;
        for a in 0..3 {
            for b in 0..b_max {
                let s = (a as f64 * PI * x / spec.lx).cos() * (b as f64 * PI * y / spec.ly).cos();
                for c in 0..3 {
                    v += coef[(a * b_max + b) * 3 + c] * s * t.powi(c as i32);
                }
            }
        }
        t * v
    })
    .with_subdomain(i)
}

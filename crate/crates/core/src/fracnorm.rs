//! Temporal fractional Sobolev norms through the padded DFT.
//!
//! A signal sampled at `t_k = k tau`, `k = 0..=N`, is extended onto a periodic
//! window of `2 P N` samples (length `2 P T`) that stands in for the real line.
//! With `u_hat = tau * DFT(w)` and `omega_k = 2 pi k' / L` for the signed index
//! `k'`, every norm below is
//!
//! ```text
//! |w|^2 = (1/L) sum_k symbol(omega_k) |u_hat_k|^2
//! ```
//!
//! which is the discrete Plancherel identity when `symbol = 1`. Odd multipliers
//! (derivative, Hilbert transform) are set to zero on the Nyquist bin so they
//! map real signals to real signals.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::sparse::CsrMatrix;
use crate::subsolve::{InterfaceSignal, SpaceTimeField, SubdomainSolver};
use crate::{Error, Result};

pub const DEFAULT_PAD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Extension by zero to `t < 0`.
    Zero,
    /// Mirror extension `u(|t|)`; norms are divided by `sqrt 2` so they refer
    /// to the half line.
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// `(1 + omega^2)^sigma`.
    Full,
    /// `|omega|^(2 sigma) + 1`.
    Homogeneous,
}

impl Symbol {
    pub fn eval(self, omega: f64, sigma: f64) -> f64 {
        match self {
            Symbol::Full => (1.0 + omega * omega).powf(sigma),
            Symbol::Homogeneous => omega.abs().powf(2.0 * sigma) + 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalNormConfig {
    pub sigma: f64,
    pub mode: Extension,
    pub pad: usize,
    pub symbol: Symbol,
}

impl FractionalNormConfig {
    pub fn new(sigma: f64, mode: Extension) -> Self {
        FractionalNormConfig { sigma, mode, pad: DEFAULT_PAD, symbol: Symbol::Full }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::InvalidInput(format!("exponent {} outside [0, 1]", self.sigma)));
        }
        if self.pad < 4 {
            return Err(Error::InvalidInput(format!("pad factor {} below 4", self.pad)));
        }
        Ok(())
    }
}

/// Samples `u(t_k)`, `k = 0..=N`, with spacing `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub tau: f64,
    pub samples: Vec<f64>,
}

impl TimeSignal {
    pub fn new(tau: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 || !(tau > 0.0) {
            return Err(Error::InvalidInput("a time signal needs tau > 0 and at least two samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(TimeSignal { tau, samples })
    }

    pub fn from_fn(t_final: f64, n_steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let tau = t_final / n_steps as f64;
        Self::new(tau, (0..=n_steps).map(|k| f(k as f64 * tau)).collect())
    }

    pub fn n_steps(&self) -> usize {
        self.samples.len() - 1
    }

    /// Trapezoidal `L^2(0, T)` norm.
    pub fn l2_trapezoid(&self) -> f64 {
        let n = self.n_steps();
        let sum: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, v)| if k == 0 || k == n { 0.5 * v * v } else { v * v })
            .sum();
        (self.tau * sum).sqrt()
    }
}

/// One period of a padded periodic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub tau: f64,
    pub values: Vec<f64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.tau * self.values.len() as f64
    }

    /// `sum_j tau w_j^2`.
    pub fn l2_squared(&self) -> f64 {
        self.tau * self.values.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Extends `signal` onto a window of `2 * pad * N` samples.
pub fn extend(signal: &TimeSignal, mode: Extension, pad: usize) -> Result<Window> {
    let n = signal.n_steps();
    let m = 2 * pad.max(1) * n;
    if m < 2 * n + 1 {
        return Err(Error::InvalidInput(format!("window of {m} samples cannot hold {} samples", n + 1)));
    }
    let mut values = vec![0.0; m];
    values[..=n].copy_from_slice(&signal.samples);
    if mode == Extension::Even {
        for k in 1..=n {
            values[m - k] = signal.samples[k];
        }
    }
    Ok(Window { tau: signal.tau, values })
}

/// Angular frequency of bin `k` on a window of `m` samples.
pub fn frequency(k: usize, m: usize, tau: f64) -> f64 {
    let signed = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
    2.0 * PI * signed / (m as f64 * tau)
}

fn is_nyquist(k: usize, m: usize) -> bool {
    m % 2 == 0 && k == m / 2
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plans { forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) }
    }

    /// `tau * DFT(values)`.
    fn spectrum(&self, values: &[f64], tau: f64) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v * tau, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse of `spectrum`, real part.
    fn synthesize(&self, mut spec: Vec<Complex64>, tau: f64) -> Vec<f64> {
        let scale = 1.0 / (tau * spec.len() as f64);
        self.inverse.process(&mut spec);
        spec.iter().map(|c| c.re * scale).collect()
    }
}

/// `u_hat = tau * DFT(w)`.
pub fn spectrum(w: &Window) -> Vec<Complex64> {
    Plans::new(w.len()).spectrum(&w.values, w.tau)
}

/// Applies the Fourier multiplier `m(omega)`; `odd` multipliers are zeroed on
/// the Nyquist bin.
pub fn apply_multiplier(w: &Window, odd: bool, m: impl Fn(f64) -> Complex64) -> Window {
    let plans = Plans::new(w.len());
    let mut spec = plans.spectrum(&w.values, w.tau);
    let len = spec.len();
    for (k, c) in spec.iter_mut().enumerate() {
        *c *= if odd && is_nyquist(k, len) { Complex64::new(0.0, 0.0) } else { m(frequency(k, len, w.tau)) };
    }
    Window { tau: w.tau, values: plans.synthesize(spec, w.tau) }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Discrete Hilbert transform, multiplier `-i sgn(omega)`.
pub fn hilbert(w: &Window) -> Window {
    apply_multiplier(w, true, |om| Complex64::new(0.0, -sgn(om)))
}

/// Spectral time derivative, multiplier `i omega`.
pub fn derivative(w: &Window) -> Window {
    apply_multiplier(w, true, |om| Complex64::new(0.0, om))
}

/// `(1/L) sum_k symbol(omega_k) |u_hat_k|^2` on a window.
pub fn window_norm_squared(w: &Window, sigma: f64, symbol: Symbol) -> f64 {
    let spec = spectrum(w);
    let m = spec.len();
    let sum: f64 =
        spec.iter().enumerate().map(|(k, c)| symbol.eval(frequency(k, m, w.tau), sigma) * c.norm_sqr()).sum();
    sum / w.length()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalNorm {
    pub value: f64,
    /// The zero extension cuts a signal that has not decayed at `t = T`.
    pub truncated: bool,
}

fn truncation_flag(samples: &[f64], mode: Extension) -> bool {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    mode == Extension::Zero && peak > 0.0 && samples.last().unwrap().abs() > 1e-3 * peak
}

pub fn fractional_norm(signal: &TimeSignal, config: &FractionalNormConfig) -> Result<FractionalNorm> {
    config.validate()?;
    if config.mode == Extension::Zero && signal.samples[0] != 0.0 {
        return Err(Error::InvalidInput("zero extension needs u(0) = 0".into()));
    }
    let w = extend(signal, config.mode, config.pad)?;
    let mut sq = window_norm_squared(&w, config.sigma, config.symbol);
    if config.mode == Extension::Even {
        sq *= 0.5;
    }
    Ok(FractionalNorm { value: sq.sqrt(), truncated: truncation_flag(&signal.samples, config.mode) })
}

/// Time history of dof `j`, steps `0..=N`.
fn dof_history(u: &SpaceTimeField, j: usize) -> Vec<f64> {
    (0..=u.n_steps).map(|k| u.step(k)[j]).collect()
}

fn check_phi(phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi < PI / 2.0) {
        return Err(Error::InvalidInput(format!("phi = {phi} outside (0, pi/2)")));
    }
    Ok(())
}

fn check_initial_zero(u: &SpaceTimeField) -> Result<()> {
    if u.step(0).iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidInput("field must vanish at t = 0".into()));
    }
    Ok(())
}

/// `R (cos(phi) I - sin(phi) H) E` applied to every dof: zero extension,
/// multiplier on the padded window, restriction to `[0, T]`.
pub fn apply_bphi(u: &SpaceTimeField, tau: f64, phi: f64, pad: usize) -> Result<SpaceTimeField> {
    check_phi(phi)?;
    check_initial_zero(u)?;
    let n = u.n_steps;
    let m = 2 * pad * n;
    let plans = Plans::new(m);
    let mut out = SpaceTimeField::zeros(u.n_dofs, n);
    out.subdomain = u.subdomain;
    let (c, s) = (phi.cos(), phi.sin());
    for j in 0..u.n_dofs {
        let mut w = vec![0.0; m];
        w[..=n].copy_from_slice(&dof_history(u, j));
        let mut spec = plans.spectrum(&w, tau);
        for (k, z) in spec.iter_mut().enumerate() {
            let h = if is_nyquist(k, m) { 0.0 } else { -sgn(frequency(k, m, tau)) };
            *z *= Complex64::new(c, -s * h);
        }
        let back = plans.synthesize(spec, tau);
        for k in 0..=n {
            out.step_mut(k)[j] = back[k];
        }
    }
    Ok(out)
}

/// Spectra of the zero-extended histories of every dof, bin-major:
/// `result[k][j]`.
fn field_spectra(u: &SpaceTimeField, tau: f64, pad: usize, mode: Extension) -> Vec<Vec<Complex64>> {
    let n = u.n_steps;
    let m = 2 * pad * n;
    let plans = Plans::new(m);
    let mut bins = vec![vec![Complex64::new(0.0, 0.0); u.n_dofs]; m];
    for j in 0..u.n_dofs {
        let h = dof_history(u, j);
        let mut w = vec![0.0; m];
        w[..=n].copy_from_slice(&h);
        if mode == Extension::Even {
            for k in 1..=n {
                w[m - k] = h[k];
            }
        }
        for (k, z) in plans.spectrum(&w, tau).into_iter().enumerate() {
            bins[k][j] = z;
        }
    }
    bins
}

/// `z^H A z` for symmetric real `A`.
fn hermitian_form(a: &CsrMatrix, z: &[Complex64]) -> f64 {
    let re: Vec<f64> = z.iter().map(|c| c.re).collect();
    let im: Vec<f64> = z.iter().map(|c| c.im).collect();
    a.quadratic(&re, &re) + a.quadratic(&im, &im)
}

/// `(1/L) sum_k weight(omega_k) u_hat_k^H A u_hat_k` over a field's window,
/// with the weight set to zero where `weight` returns `None`.
fn weighted_field_norm(
    u: &SpaceTimeField,
    a: &CsrMatrix,
    tau: f64,
    pad: usize,
    mode: Extension,
    weight: impl Fn(usize, usize, f64) -> f64,
) -> f64 {
    let bins = field_spectra(u, tau, pad, mode);
    let m = bins.len();
    let sum: f64 = bins.iter().enumerate().map(|(k, z)| weight(k, m, frequency(k, m, tau)) * hermitian_form(a, z)).sum();
    sum / (tau * m as f64)
}

/// Time-domain and frequency-domain sides of
/// `<d/dt w, (cos(phi) I - sin(phi) H) w> = sin(phi) (1/L) sum_k |omega_k| |w_hat_k|^2`
/// on one window, the Nyquist bin excluded from both.
pub fn multiplier_identity(w: &Window, phi: f64) -> Result<(f64, f64)> {
    check_phi(phi)?;
    let dw = derivative(w);
    let hw = hilbert(w);
    let lhs: f64 = w.tau
        * dw.values.iter().zip(w.values.iter().zip(&hw.values)).map(|(d, (v, h))| d * (phi.cos() * v - phi.sin() * h)).sum::<f64>();
    let spec = spectrum(w);
    let m = spec.len();
    let sum: f64 = spec
        .iter()
        .enumerate()
        .filter(|(k, _)| !is_nyquist(*k, m))
        .map(|(k, c)| frequency(k, m, w.tau).abs() * c.norm_sqr())
        .sum();
    Ok((lhs, phi.sin() * sum / w.length()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    /// `<A_i u, B u>`.
    pub pairing: f64,
    /// `|u|_W^2` with the full `H^{1/2}` symbol in time.
    pub w_norm_squared: f64,
    /// Same with the homogeneous symbol.
    pub w_norm_squared_homogeneous: f64,
    /// `None` for `u = 0`.
    pub ratio: Option<f64>,
    pub ratio_homogeneous: Option<f64>,
}

/// `<A_i u, B^phi u>` against `|u|_W^2` on subdomain `i`.
///
/// The time derivative is spectral on the padded window, weighted by `M_i`;
/// the spatial part is `sum_k tau u^k K_i (B u)^k`.
pub fn coercivity_check(solver: &SubdomainSolver, u: &SpaceTimeField, phi: f64, pad: usize) -> Result<CoercivityReport> {
    check_phi(phi)?;
    if u.n_dofs != solver.ops.n_local() || u.n_steps != solver.n_steps() {
        return Err(Error::Shape(format!(
            "field {}x{} on a subdomain with {} dofs and {} steps",
            u.n_steps,
            u.n_dofs,
            solver.ops.n_local(),
            solver.n_steps()
        )));
    }
    let tau = solver.tau();
    let (mass, stiff) = (&solver.ops.mass, &solver.ops.stiffness);
    let temporal = phi.sin()
        * weighted_field_norm(u, mass, tau, pad, Extension::Zero, |k, m, om| if is_nyquist(k, m) { 0.0 } else { om.abs() });
    let bu = apply_bphi(u, tau, phi, pad)?;
    let spatial: f64 = (1..=u.n_steps).map(|k| tau * stiff.quadratic(u.step(k), bu.step(k))).sum();
    let pairing = temporal + spatial;

    let x_sq = crate::subsolve::x_norm(mass, stiff, tau, u).powi(2);
    let full = weighted_field_norm(u, mass, tau, pad, Extension::Zero, |_, _, om| Symbol::Full.eval(om, 0.5));
    let hom = weighted_field_norm(u, mass, tau, pad, Extension::Zero, |_, _, om| Symbol::Homogeneous.eval(om, 0.5));
    let (w_full, w_hom) = (full + x_sq, hom + x_sq);
    let zero = u.max_abs() == 0.0;
    Ok(CoercivityReport {
        pairing,
        w_norm_squared: w_full,
        w_norm_squared_homogeneous: w_hom,
        ratio: (!zero).then(|| pairing / w_full),
        ratio_homogeneous: (!zero).then(|| pairing / w_hom),
    })
}

/// `Lambda_h = M Q diag(lambda^(1/2)) Q^T M` for `K q = lambda M q`.
pub fn lions_magenes_matrix(m_gamma: &CsrMatrix, k_gamma: &CsrMatrix) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m_gamma.to_dense()).ok_or_else(|| Error::Eigen("interface mass is not SPD".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = &linv * k_gamma.to_dense() * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    if eig.eigenvalues.iter().any(|&v| !(v > -1e-12)) {
        return Err(Error::Eigen("interface stiffness has a negative eigenvalue".into()));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    let lv = &l * &eig.eigenvectors;
    Ok(&lv * sqrt * lv.transpose())
}

/// `|eta|_Z^2`: even-extension `H^{1/4}` norm weighted by `M_Gamma` plus
/// `sum_k tau eta^k Lambda_h eta^k`. The value at `t = 0` is taken as zero;
/// in 1D (`k_gamma = None`) only the temporal part remains.
pub fn z_norm(eta: &InterfaceSignal, m_gamma: &CsrMatrix, k_gamma: Option<&CsrMatrix>, tau: f64, pad: usize) -> Result<f64> {
    if m_gamma.nrows() != eta.n_interface {
        return Err(Error::Shape(format!("{} interface dofs vs mass of size {}", eta.n_interface, m_gamma.nrows())));
    }
    let u = SpaceTimeField::from_fn(eta.n_interface, eta.n_steps, |k, j| if k == 0 { 0.0 } else { eta.step(k)[j] });
    let temporal = 0.5 * weighted_field_norm(&u, m_gamma, tau, pad, Extension::Even, |_, _, om| Symbol::Full.eval(om, 0.25));
    let spatial = match k_gamma {
        None => 0.0,
        Some(k) => {
            let lam = lions_magenes_matrix(m_gamma, k)?;
            (1..=eta.n_steps)
                .map(|s| {
                    let v = DVector::from_column_slice(eta.step(s));
                    tau * v.dot(&(&lam * &v))
                })
                .sum()
        }
    };
    Ok((temporal + spatial).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsolve::SignalKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump(t: f64, a: f64, b: f64) -> f64 {
        if t <= a || t >= b {
            0.0
        } else {
            let x = (2.0 * t - a - b) / (b - a);
            (-1.0 / (1.0 - x * x)).exp()
        }
    }

    fn random_window(rng: &mut ChaCha8Rng, m: usize) -> Window {
        Window { tau: 0.03, values: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect() }
    }

    /// Mean and Nyquist components removed.
    fn project_odd_range(w: &Window) -> Window {
        apply_multiplier(w, true, |om| Complex64::new(if om == 0.0 { 0.0 } else { 1.0 }, 0.0))
    }

    #[test]
    fn plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_window(&mut rng, 96);
        let sq = window_norm_squared(&w, 0.0, Symbol::Full);
        assert!((sq - w.l2_squared()).abs() < 1e-13 * sq);
    }

    #[test]
    fn hilbert_of_constant_vanishes() {
        let w = Window { tau: 0.1, values: vec![2.5; 32] };
        assert!(hilbert(&w).values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn hilbert_maps_cos_to_sin() {
        let (m, tau, p) = (64, 0.05, 5);
        let om = frequency(p, m, tau);
        let cos = Window { tau, values: (0..m).map(|j| 1.7 * (om * j as f64 * tau).cos()).collect() };
        let h = hilbert(&cos);
        for (j, v) in h.values.iter().enumerate() {
            assert!((v - 1.7 * (om * j as f64 * tau).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn hilbert_is_an_involution_up_to_sign_and_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = project_odd_range(&random_window(&mut rng, 80));
        let h = hilbert(&w);
        assert!((h.l2_squared() - w.l2_squared()).abs() < 1e-13 * w.l2_squared());
        for (a, b) in hilbert(&h).values.iter().zip(&w.values) {
            assert!((a + b).abs() < 1e-13);
        }
    }

    #[test]
    fn sigma_zero_matches_trapezoid() {
        let f = |t: f64| (PI * t).sin().powi(2) * (1.0 + t);
        for n in [64, 256] {
            let sig = TimeSignal::from_fn(1.0, n, f).unwrap();
            let l2 = sig.l2_trapezoid();
            let fr = fractional_norm(&sig, &FractionalNormConfig::new(0.0, Extension::Zero)).unwrap();
            assert!((fr.value - l2).abs() <= 1e-3 * l2, "n = {n}");
        }
    }

    #[test]
    fn sigma_zero_error_shrinks_under_refinement() {
        // the sample at t = T gets full weight in the window sum
        let f = |t: f64| t * t;
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let sig = TimeSignal::from_fn(1.0, n, f).unwrap();
                let exact = (1.0f64 / 5.0).sqrt();
                (fractional_norm(&sig, &FractionalNormConfig::new(0.0, Extension::Zero)).unwrap().value - exact).abs()
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1]);
    }

    #[test]
    fn pure_mode_direct_summation() {
        // a cos(omega_p t) occupies the bins +-p with |u_hat| = a L / 2 each
        let (m, tau, p, a) = (128, 0.02, 7, 0.8);
        let om = frequency(p, m, tau);
        let w = Window { tau, values: (0..m).map(|j| a * (om * j as f64 * tau).cos()).collect() };
        for sigma in [0.0, 0.25, 0.5, 1.0] {
            let got = window_norm_squared(&w, sigma, Symbol::Full).sqrt();
            let expect = a * (1.0 + om * om).powf(sigma / 2.0) * (w.length() / 2.0).sqrt();
            assert!((got - expect).abs() < 1e-12 * expect, "sigma = {sigma}");
        }
        // each half is a complex mode (a/2) e^{+-i omega t} of norm (a/2) (1 + omega^2)^(sigma/2) sqrt(L)
        let spec = spectrum(&w);
        let one_sided = (1.0 + om * om).powf(0.5) * spec[p].norm_sqr() / w.length();
        assert!((one_sided.sqrt() - (a / 2.0) * (1.0 + om * om).powf(0.25) * w.length().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let sig = TimeSignal::from_fn(1.0, 40, |t| bump(t, 0.2, 0.7)).unwrap();
        let twice = TimeSignal::new(sig.tau, sig.samples.iter().map(|v| 2.0 * v).collect()).unwrap();
        for mode in [Extension::Zero, Extension::Even] {
            let c = FractionalNormConfig::new(0.5, mode);
            let (a, b) = (fractional_norm(&sig, &c).unwrap().value, fractional_norm(&twice, &c).unwrap().value);
            assert!((b - 2.0 * a).abs() < 1e-13 * b);
        }
    }

    #[test]
    fn zero_and_even_extensions_agree_for_interior_bumps() {
        for (a, b) in [(0.3, 0.7), (0.2, 0.6), (0.4, 0.9)] {
            let sig = TimeSignal::from_fn(1.0, 256, |t| bump(t, a, b)).unwrap();
            let z = fractional_norm(&sig, &FractionalNormConfig::new(0.5, Extension::Zero)).unwrap();
            let e = fractional_norm(&sig, &FractionalNormConfig::new(0.5, Extension::Even)).unwrap();
            assert!(!z.truncated);
            assert!((z.value - e.value).abs() <= 0.05 * z.value, "{} vs {}", z.value, e.value);
        }
    }

    #[test]
    fn config_and_signal_validation() {
        let sig = TimeSignal::from_fn(1.0, 8, |t| 1.0 + t).unwrap();
        assert!(fractional_norm(&sig, &FractionalNormConfig::new(0.5, Extension::Zero)).is_err());
        assert!(fractional_norm(&sig, &FractionalNormConfig::new(0.5, Extension::Even)).is_ok());
        assert!(fractional_norm(&sig, &FractionalNormConfig::new(1.5, Extension::Even)).is_err());
        let c = FractionalNormConfig { pad: 2, ..FractionalNormConfig::new(0.5, Extension::Even) };
        assert!(fractional_norm(&sig, &c).is_err());
        let ramp = TimeSignal::from_fn(1.0, 8, |t| t).unwrap();
        assert!(fractional_norm(&ramp, &FractionalNormConfig::new(0.5, Extension::Zero)).unwrap().truncated);
    }

    fn smooth_field(n_dofs: usize, n_steps: usize, rng: &mut ChaCha8Rng) -> SpaceTimeField {
        let coef: Vec<[f64; 3]> = (0..n_dofs).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        SpaceTimeField::from_fn(n_dofs, n_steps, |k, j| {
            let t = k as f64 / n_steps as f64;
            let c = coef[j];
            t * (c[0] + c[1] * (PI * t).sin() + c[2] * t * t)
        })
    }

    #[test]
    fn bphi_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = smooth_field(3, 16, &mut rng);
        let near = apply_bphi(&u, 1.0 / 16.0, 1e-9, DEFAULT_PAD).unwrap();
        assert!(near.sub(&u).unwrap().max_abs() < 1e-8);
        let zero = SpaceTimeField::zeros(3, 16);
        assert_eq!(apply_bphi(&zero, 0.1, 0.3, DEFAULT_PAD).unwrap().max_abs(), 0.0);
        assert!(apply_bphi(&u, 0.1, 0.0, DEFAULT_PAD).is_err());
        assert!(apply_bphi(&u, 0.1, PI / 2.0, DEFAULT_PAD).is_err());
        let shifted = SpaceTimeField::from_fn(3, 16, |_, _| 1.0);
        assert!(apply_bphi(&shifted, 0.1, 0.3, DEFAULT_PAD).is_err());
    }

    #[test]
    fn bphi_single_dof_matches_window_multiplier() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n, tau, phi) = (12, 0.1, 0.4);
        let u = smooth_field(1, n, &mut rng);
        let sig = TimeSignal::new(tau, (0..=n).map(|k| u.step(k)[0]).collect()).unwrap();
        let w = extend(&sig, Extension::Zero, DEFAULT_PAD).unwrap();
        let h = hilbert(&w);
        let b = apply_bphi(&u, tau, phi, DEFAULT_PAD).unwrap();
        for k in 0..=n {
            let expect = phi.cos() * w.values[k] - phi.sin() * h.values[k];
            assert!((b.step(k)[0] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn multiplier_identity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [64, 96, 128] {
            let w = random_window(&mut rng, m);
            let (lhs, rhs) = multiplier_identity(&w, 0.3).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn lambda_eigen_oracle() {
        // 1D Dirichlet Laplacian on 5 interior nodes of a unit segment
        let n = 5;
        let h = 1.0 / (n + 1) as f64;
        let mut mt = Vec::new();
        let mut kt = Vec::new();
        for i in 0..n {
            mt.push((i, i, 4.0 * h / 6.0));
            kt.push((i, i, 2.0 / h));
            if i + 1 < n {
                for (a, b) in [(i, i + 1), (i + 1, i)] {
                    mt.push((a, b, h / 6.0));
                    kt.push((a, b, -1.0 / h));
                }
            }
        }
        let m = CsrMatrix::from_triplets(n, n, mt);
        let k = CsrMatrix::from_triplets(n, n, kt);
        let (md, kd) = (m.to_dense(), k.to_dense());
        // sine modes are the generalized eigenvectors
        for j in 1..=n {
            let q = DVector::from_fn(n, |i, _| (PI * j as f64 * (i + 1) as f64 * h).sin());
            let lambda = q.dot(&(&kd * &q)) / q.dot(&(&md * &q));
            let q = &q / q.dot(&(&md * &q)).sqrt();
            let n_steps = 4;
            let tau = 0.25;
            let eta = InterfaceSignal::from_vec(
                SignalKind::Primal,
                n,
                n_steps,
                (0..n_steps).flat_map(|_| q.iter().copied()).collect(),
            )
            .unwrap();
            let zero_k = CsrMatrix::zeros(n, n);
            let full = z_norm(&eta, &m, Some(&k), tau, DEFAULT_PAD).unwrap().powi(2);
            let temporal = z_norm(&eta, &m, Some(&zero_k), tau, DEFAULT_PAD).unwrap().powi(2);
            let spatial = full - temporal;
            assert!((spatial - 1.0 * lambda.sqrt()).abs() < 1e-10 * lambda.sqrt(), "mode {j}");
        }
    }

    #[test]
    fn z_norm_zero_and_pythagoras() {
        let n = 4;
        let m = CsrMatrix::identity(n).scaled(0.25);
        let k = CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, (i + 1) as f64)).collect());
        let zero = InterfaceSignal::zeros(SignalKind::Primal, n, 3);
        assert_eq!(z_norm(&zero, &m, Some(&k), 0.1, DEFAULT_PAD).unwrap(), 0.0);
        let mut a = InterfaceSignal::zeros(SignalKind::Primal, n, 3);
        let mut b = a.clone();
        for s in 1..=3 {
            a.step_mut(s)[0] = s as f64;
            b.step_mut(s)[2] = 1.0 - s as f64;
        }
        let sum = a.add_scaled(1.0, &b).unwrap();
        let za = z_norm(&a, &m, Some(&k), 0.1, DEFAULT_PAD).unwrap();
        let zb = z_norm(&b, &m, Some(&k), 0.1, DEFAULT_PAD).unwrap();
        let zs = z_norm(&sum, &m, Some(&k), 0.1, DEFAULT_PAD).unwrap();
        assert!((zs * zs - za * za - zb * zb).abs() < 1e-12 * zs * zs);
        assert!(zs > za);
    }
}

//! Homodyne and photon-number noise spectra from output correlation
//! matrices in the interleaved `(α₀, α₀*, α₁, α₁*, …)` basis.
//!
//! Values are normalized so that shot noise is `0` and perfect squeezing is
//! `−1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_OMEGA_MAX: f64 = 5.0;
pub const DEFAULT_OMEGA_POINTS: usize = 501;

const NORM_TOLERANCE: f64 = 1e-9;
const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// Spatial profile and phase of a homodyne local oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOscillator {
    coeffs: Vec<Complex64>,
    theta: f64,
}

impl LocalOscillator {
    pub fn new(coeffs: Vec<Complex64>, theta: f64) -> Result<Self> {
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid("lo", format!("spatial coefficients have norm² {norm}, expected 1")));
        }
        if !theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(Self { coeffs, theta })
    }

    /// Rescales `coeffs` to unit norm.
    pub fn normalized(coeffs: Vec<Complex64>, theta: f64) -> Result<Self> {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("lo", "spatial coefficients vanish"));
        }
        Self::new(coeffs.into_iter().map(|c| c / norm).collect(), theta)
    }

    /// Matched to the fundamental mode, which is listed first.
    pub fn tem00(n_modes: usize, theta: f64) -> Self {
        let mut coeffs = vec![Complex64::default(); n_modes.max(1)];
        coeffs[0] = Complex64::new(1.0, 0.0);
        Self { coeffs, theta }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { coeffs: self.coeffs.clone(), theta }
    }
}

fn check_dims(v: &DMatrix<Complex64>, n_modes: usize) -> Result<()> {
    if v.nrows() != v.ncols() || v.nrows() != 2 * n_modes {
        return Err(Error::invalid(
            "correlation",
            format!("{}×{} matrix does not match {n_modes} mode(s)", v.nrows(), v.ncols()),
        ));
    }
    Ok(())
}

/// `u V u†` with `u` a row vector.
fn sandwich(v: &DMatrix<Complex64>, u: &[Complex64]) -> Complex64 {
    let u = DVector::from_column_slice(u);
    (u.transpose() * v * u.conjugate())[(0, 0)]
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOLERANCE * z.re.abs().max(1.0) {
        return Err(Error::ImaginaryNoise(z.im));
    }
    Ok(z.re)
}

fn projector(coeffs: &[Complex64], theta: f64) -> Vec<Complex64> {
    let phase = Complex64::from_polar(1.0, theta);
    coeffs.iter().flat_map(|c| [c.conj() * phase.conj(), c * phase]).collect()
}

/// Noise of `X = Σ (c* e^{−iθ} α + c e^{iθ} α*)` relative to shot noise.
pub fn quadrature_noise(v: &DMatrix<Complex64>, lo: &LocalOscillator) -> Result<f64> {
    check_dims(v, lo.coeffs.len())?;
    Ok(real_part(sandwich(v, &projector(&lo.coeffs, lo.theta)))? - 1.0)
}

/// Minimum over the LO phase at fixed spatial profile: `(θ*, value)`.
pub fn optimum_quadrature(v: &DMatrix<Complex64>, coeffs: &[Complex64]) -> Result<(f64, f64)> {
    check_dims(v, coeffs.len())?;
    let zero = Complex64::default();
    let u1: Vec<Complex64> = coeffs.iter().flat_map(|c| [c.conj(), zero]).collect();
    let u2: Vec<Complex64> = coeffs.iter().flat_map(|c| [zero, *c]).collect();
    let diag = real_part(sandwich(v, &u1) + sandwich(v, &u2))?;
    let u1v = DVector::from_column_slice(&u1).transpose() * v;
    let cross = (u1v * DVector::from_column_slice(&u2).conjugate())[(0, 0)];
    let theta = 0.5 * (cross.arg() - std::f64::consts::PI);
    Ok((theta, diag - 2.0 * cross.norm() - 1.0))
}

/// Transformation to the quadratures `x = α + α*`, `p = −i(α − α*)`.
fn quadrature_transform(n_modes: usize) -> DMatrix<Complex64> {
    let mut t = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    let one = Complex64::new(1.0, 0.0);
    for m in 0..n_modes {
        t[(2 * m, 2 * m)] = one;
        t[(2 * m, 2 * m + 1)] = one;
        t[(2 * m + 1, 2 * m)] = -Complex64::i();
        t[(2 * m + 1, 2 * m + 1)] = Complex64::i();
    }
    t
}

/// Real symmetric quadrature covariance `Re(T V T†)` in the basis
/// `(x₀, p₀, x₁, p₁, …)`.
pub fn quadrature_covariance(v: &DMatrix<Complex64>) -> DMatrix<f64> {
    let t = quadrature_transform(v.nrows() / 2);
    let q = &t * v * t.adjoint();
    let re = q.map(|z| z.re);
    (&re + re.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedLo {
    pub lo: LocalOscillator,
    pub value: f64,
    /// Eigenvalues of the quadrature covariance, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Minimum over every LO spatial profile and phase.
pub fn optimized_lo_noise(v: &DMatrix<Complex64>) -> Result<OptimizedLo> {
    if v.nrows() != v.ncols() || v.nrows() % 2 != 0 || v.nrows() == 0 {
        return Err(Error::invalid("correlation", "expected a non-empty 2N×2N matrix"));
    }
    let n = v.nrows() / 2;
    let eig = SymmetricEigen::new(quadrature_covariance(v));
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let r = eig.eigenvectors.column(order[0]);
    let w: Vec<Complex64> = (0..n).map(|m| Complex64::new(r[2 * m], r[2 * m + 1])).collect();
    let theta = w[0].arg();
    let turn = Complex64::from_polar(1.0, -theta);
    let lo = LocalOscillator::normalized(w.iter().map(|z| z * turn).collect(), theta)?;
    Ok(OptimizedLo {
        lo,
        value: eig.eigenvalues[order[0]] - 1.0,
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}

/// Noise of `δN = Σ (Ā* α + Ā α*)` normalized by the total mean output
/// intensity, relative to shot noise.
pub fn intensity_noise(v: &DMatrix<Complex64>, mean_out: &[Complex64]) -> Result<f64> {
    check_dims(v, mean_out.len())?;
    let total: f64 = mean_out.iter().map(|a| a.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroIntensity);
    }
    let u: Vec<Complex64> = mean_out.iter().flat_map(|a| [a.conj(), *a]).collect();
    Ok(real_part(sandwich(v, &u))? / total - 1.0)
}

fn swap_conjugates(v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = v.nrows();
    let partner = |i: usize| i ^ 1;
    DMatrix::from_fn(n, n, |i, j| v[(partner(i), partner(j))])
}

/// Symmetrized quadrature covariance `T ½(V[ω] + P V[−ω]ᵀ P) T†`, with `P`
/// exchanging each `α` with `α*`.
pub fn symmetrized_covariance(v_plus: &DMatrix<Complex64>, v_minus: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let sym = (v_plus + swap_conjugates(&v_minus.transpose())) * Complex64::new(0.5, 0.0);
    let t = quadrature_transform(v_plus.nrows() / 2);
    &t * sym * t.adjoint()
}

/// Determinant of the symmetrized covariance; `1` for a pure state.
pub fn purity_determinant(v_plus: &DMatrix<Complex64>, v_minus: &DMatrix<Complex64>) -> f64 {
    symmetrized_covariance(v_plus, v_minus).determinant().re
}

/// `J = diag(1, −1, 1, −1, …)`.
pub fn commutator_metric(n_modes: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(2 * n_modes, 2 * n_modes, |i, j| {
        if i != j {
            Complex64::default()
        } else if i % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        }
    })
}

/// Largest entry of `|S J S† − J|`.
pub fn commutator_defect(s: &DMatrix<Complex64>) -> f64 {
    let j = commutator_metric(s.nrows() / 2);
    (s * &j * s.adjoint() - j).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn omega_grid(max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrumSeries {
    pub label: String,
    pub model: String,
    pub working_point: String,
    pub lo: String,
    pub samples: Vec<(f64, f64)>,
}

impl NoiseSpectrumSeries {
    /// Evaluates `value(ω)` over `omegas` in parallel.
    pub fn compute<F>(label: impl Into<String>, omegas: &[f64], value: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let samples = omegas
            .par_iter()
            .map(|&w| value(w).map(|v| (w, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: label.into(),
            model: String::new(),
            working_point: String::new(),
            lo: String::new(),
            samples,
        })
    }

    pub fn with_metadata(mut self, model: impl Into<String>, working_point: impl Into<String>, lo: impl Into<String>) -> Self {
        self.model = model.into();
        self.working_point = working_point.into();
        self.lo = lo.into();
        self
    }

    pub fn min_value(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }

    pub fn value_at(&self, omega: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.0 == omega).map(|s| s.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{single_mode_steady, CavityConfig, CavitySystem};
    use crate::perturbative::vacuum_input;
    use proptest::prelude::*;

    fn single_mode_output(phi0: f64, k: f64, omega: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let state = single_mode_steady(phi0, k).unwrap().remove(0);
        let system = CavitySystem::new(&CavityConfig::single_mode(k, phi0)).unwrap();
        let s = system.scattering(&state.amplitudes, omega).unwrap();
        let v = &s * vacuum_input(1) * s.adjoint();
        (s, v)
    }

    #[test]
    fn vacuum_is_shot_noise() {
        let v = vacuum_input(2);
        let lo = LocalOscillator::normalized(vec![Complex64::new(0.3, 0.4), Complex64::new(-0.2, 0.7)], 0.9).unwrap();
        assert!(quadrature_noise(&v, &lo).unwrap().abs() < 1e-15);
        assert!(optimized_lo_noise(&v).unwrap().value.abs() < 1e-14);
        let mean = [Complex64::new(0.6, 0.1), Complex64::new(0.0, 0.2)];
        assert!(intensity_noise(&v, &mean).unwrap().abs() < 1e-15);
    }

    #[test]
    fn phase_symmetric_noise_is_flat() {
        let v = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0].map(|x| Complex64::new(x, 0.0)));
        let lo = LocalOscillator::tem00(1, 0.0);
        let a = quadrature_noise(&v, &lo).unwrap();
        let b = quadrature_noise(&v, &lo.with_theta(1.1)).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!((optimum_quadrature(&v, lo.coeffs()).unwrap().1 - a).abs() < 1e-14);
    }

    #[test]
    fn closed_form_optimum_matches_phase_grid() {
        let (_, v) = single_mode_output(2.3, 2.5, 0.3);
        let lo = LocalOscillator::tem00(1, 0.0);
        let (theta, best) = optimum_quadrature(&v, lo.coeffs()).unwrap();
        let grid = (0..721)
            .map(|i| quadrature_noise(&v, &lo.with_theta(std::f64::consts::PI * i as f64 / 720.0)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= grid + 1e-10);
        let at_theta = quadrature_noise(&v, &lo.with_theta(theta)).unwrap();
        assert!((at_theta - best).abs() < 1e-10);
        // Grid spacing bounds how far the sampled minimum can sit above.
        assert!(grid - best < 1e-4 * (1.0 + best.abs()));
    }

    #[test]
    fn uncertainty_product_is_saturated() {
        let (_, v) = single_mode_output(2.0, 2.5, 0.0);
        let lo = LocalOscillator::tem00(1, 0.0);
        let (theta, min) = optimum_quadrature(&v, lo.coeffs()).unwrap();
        let max = quadrature_noise(&v, &lo.with_theta(theta + std::f64::consts::FRAC_PI_2)).unwrap();
        assert!(((min + 1.0) * (max + 1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_mode_purity_and_evenness() {
        for w in [0.0, 0.4, 1.7] {
            let (s, vp) = single_mode_output(1.8, 2.5, w);
            let (_, vm) = single_mode_output(1.8, 2.5, -w);
            assert!((purity_determinant(&vp, &vm) - 1.0).abs() < 1e-8);
            assert!(commutator_defect(&s) < 1e-10);
            let lo = LocalOscillator::tem00(1, 0.0);
            let a = optimum_quadrature(&vp, lo.coeffs()).unwrap().1;
            let b = optimum_quadrature(&vm, lo.coeffs()).unwrap().1;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn intensity_noise_vanishes_at_zero_frequency() {
        let state = single_mode_steady(2.2, 2.5).unwrap().remove(0);
        let (_, v) = single_mode_output(2.2, 2.5, 0.0);
        assert!(intensity_noise(&v, &state.outputs).unwrap().abs() < 1e-10);
        let zero = [Complex64::default()];
        assert!(matches!(intensity_noise(&v, &zero), Err(Error::ZeroIntensity)));
    }

    #[test]
    fn rejects_non_unit_lo() {
        assert!(LocalOscillator::new(vec![Complex64::new(2.0, 0.0)], 0.0).is_err());
        assert!(LocalOscillator::normalized(vec![Complex64::default()], 0.0).is_err());
    }

    #[test]
    fn non_hermitian_input_is_flagged() {
        let mut v = vacuum_input(1);
        v[(0, 1)] = Complex64::new(0.0, 1.0);
        let lo = LocalOscillator::tem00(1, 0.3);
        assert!(matches!(quadrature_noise(&v, &lo), Err(Error::ImaginaryNoise(_))));
    }

    #[test]
    fn grid_is_inclusive() {
        let g = omega_grid(DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_POINTS);
        assert_eq!(g.len(), 501);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[500], 5.0);
        assert!((g[1] - 0.01).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn noise_never_below_perfect_squeezing(phi0 in -1.0f64..4.0, k in 0.0f64..3.0, w in 0.0f64..5.0, th in 0.0f64..3.2) {
            let (_, v) = single_mode_output(phi0, k, w);
            let lo = LocalOscillator::tem00(1, th);
            let x = quadrature_noise(&v, &lo).unwrap();
            let opt = optimum_quadrature(&v, lo.coeffs()).unwrap().1;
            prop_assert!(opt >= -1.0 - 1e-9);
            prop_assert!(opt <= x + 1e-9);
            prop_assert!(optimized_lo_noise(&v).unwrap().value <= opt + 1e-9);
        }
    }
}

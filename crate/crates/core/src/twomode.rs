//! Fundamental mode `A` coupled to one transverse mode `B` of order `p`
//! belonging to another longitudinal family and nearly degenerate with it.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{Branch, CavityConfig, CavitySystem, ModeIndex, SteadyState};
use crate::continuation::{bistability_scan, BistabilityCurve};
use crate::coupling::{lambda_shortcut, to_f64, Shortcut};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeConfig {
    pub k: f64,
    pub p: u32,
    /// `φ_b − φ_a`.
    pub delta_phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCoefficients {
    pub lambda_p: f64,
    pub lambda_pp: f64,
    pub lambda_ppp0: f64,
    pub lambda_pppp: f64,
}

impl TwoModeConfig {
    pub fn new(k: f64, p: u32, delta_phi: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::invalid("k", "must be finite and non-negative"));
        }
        if p == 0 {
            return Err(Error::invalid("p", "the perturbing mode needs p >= 1"));
        }
        if !delta_phi.is_finite() {
            return Err(Error::invalid("delta_phi", "must be finite"));
        }
        Ok(Self { k, p, delta_phi })
    }

    pub fn coefficients(&self) -> TwoModeCoefficients {
        let get = |kind| to_f64(&lambda_shortcut(kind, self.p, 0));
        TwoModeCoefficients {
            lambda_p: get(Shortcut::P),
            lambda_pp: get(Shortcut::Pp),
            lambda_ppp0: get(Shortcut::Ppp0),
            lambda_pppp: get(Shortcut::Pppp),
        }
    }

    /// The same system as a general cavity: `B` is mode `(p, 0, 1)` with
    /// `φ_L = δφ` and `φ_T = 0`, so `φ_b = φ_a + δφ`.
    pub fn cavity_config(&self, phi_a: f64) -> CavityConfig {
        CavityConfig {
            k: self.k,
            phi0: phi_a,
            phi_t: 0.0,
            phi_l: self.delta_phi,
            modes: vec![ModeIndex::FUNDAMENTAL, ModeIndex::new(self.p, 0, 1)],
            drive: vec![Complex64::new(1.0, 0.0), Complex64::default()],
        }
    }
}

/// Right-hand sides `(∂_τ A, ∂_τ B)` of the two-mode equations.
pub fn two_mode_rhs(config: &TwoModeConfig, phi_a: f64, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let c = config.coefficients();
    let i = Complex64::i();
    let k = config.k;
    let phi_b = phi_a + config.delta_phi;
    let (ia, ib) = (a.norm_sqr(), b.norm_sqr());
    let da = 1.0 - Complex64::new(1.0, phi_a) * a
        + i * k
            * (ia * a
                + c.lambda_p * (a * a * b.conj() + 2.0 * ia * b)
                + c.lambda_pp * (b * b * a.conj() + 2.0 * ib * a)
                + c.lambda_ppp0 * ib * b);
    let db = -Complex64::new(1.0, phi_b) * b
        + i * k
            * (c.lambda_p * ia * a
                + c.lambda_pp * (a * a * b.conj() + 2.0 * ia * b)
                + c.lambda_ppp0 * (b * b * a.conj() + 2.0 * ib * a)
                + c.lambda_pppp * ib * b);
    (da, db)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeSteady {
    pub phi_a: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub a_out: Complex64,
    pub b_out: Complex64,
    pub eigenvalues: Vec<Complex64>,
    pub stable: bool,
    pub branch: Branch,
}

impl TwoModeSteady {
    pub fn from_state(state: &SteadyState) -> Self {
        Self {
            phi_a: state.phi0,
            a: state.amplitudes[0],
            b: state.amplitudes[1],
            a_out: state.outputs[0],
            b_out: state.outputs[1],
            eigenvalues: state.eigenvalues.clone(),
            stable: state.is_stable(),
            branch: state.branch.unwrap_or(Branch::Unique),
        }
    }

    pub fn intensity(&self) -> f64 {
        self.a.norm_sqr()
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.a, self.b]
    }

    pub fn outputs(&self) -> [Complex64; 2] {
        [self.a_out, self.b_out]
    }
}

/// Default `φ_a` window for scans, wide enough to start and end on the
/// monostable wings.
pub fn default_scan_range(config: &TwoModeConfig) -> (f64, f64) {
    let shift = config.delta_phi.abs();
    (-3.0 - shift, 3.0 + 1.6 * config.k + shift)
}

pub fn two_mode_curve(config: &TwoModeConfig, phi_min: f64, phi_max: f64, steps: usize) -> Result<BistabilityCurve> {
    bistability_scan(&config.cavity_config(phi_min), phi_min, phi_max, steps)
}

/// Every steady state at `phi_a`, collected from the continuation curve
/// and polished by Newton, by decreasing `|A|²`.
pub fn two_mode_steady(config: &TwoModeConfig, phi_a: f64) -> Result<Vec<TwoModeSteady>> {
    let (lo, hi) = default_scan_range(config);
    let (lo, hi) = (lo.min(phi_a - 1.0), hi.max(phi_a + 1.0));
    let curve = two_mode_curve(config, lo, hi, 800)?;
    let system = CavitySystem::new(&config.cavity_config(phi_a))?;
    let mut found: Vec<SteadyState> = Vec::new();
    for w in curve.samples.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        if (s0.phi - phi_a) * (s1.phi - phi_a) > 0.0 || s0.phi == s1.phi {
            continue;
        }
        let t = (phi_a - s0.phi) / (s1.phi - s0.phi);
        let guess: Vec<Complex64> = s0
            .amplitudes
            .iter()
            .zip(&s1.amplitudes)
            .map(|(x, y)| x + (y - x) * t)
            .collect();
        let Ok(sol) = system.solve(&guess) else { continue };
        if found
            .iter()
            .any(|f| f.amplitudes.iter().zip(&sol).all(|(x, y)| (x - y).norm() < 1e-8))
        {
            continue;
        }
        found.push(system.steady_state(sol));
    }
    if found.is_empty() {
        return Err(Error::NoConvergence {
            iterations: curve.samples.len(),
            residual: f64::NAN,
        });
    }
    found.sort_by(|x, y| y.intensity.total_cmp(&x.intensity));
    let count = found.len();
    Ok(found
        .into_iter()
        .enumerate()
        .map(|(i, mut s)| {
            s.branch = Some(match (count, i) {
                (1, _) => Branch::Unique,
                (_, 0) => Branch::Upper,
                (c, i) if i + 1 == c => Branch::Lower,
                _ => Branch::Middle,
            });
            TwoModeSteady::from_state(&s)
        })
        .collect())
}

/// Linearized two-mode dynamics `∂_τ α = α_in − (1 + iΦ + iKM) α` in the
/// basis `(α, α*, β, β*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeDrift {
    pub phi: Matrix4<Complex64>,
    pub m: Matrix4<Complex64>,
    pub m_parts: [Matrix4<Complex64>; 5],
}

impl TwoModeDrift {
    /// `−(1 + iΦ + iKM)`.
    pub fn drift(&self, k: f64) -> Matrix4<Complex64> {
        -(Matrix4::identity() + self.phi * Complex64::i() + self.m * Complex64::new(0.0, k))
    }
}

fn blocks(tl: Matrix2<Complex64>, tr: Matrix2<Complex64>, bl: Matrix2<Complex64>, br: Matrix2<Complex64>) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&tl);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&tr);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&bl);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&br);
    m
}

/// Self block `[[−2|X|², −X²], [X*², 2|X|²]]`.
pub fn self_block(x: Complex64) -> Matrix2<Complex64> {
    let i = Complex64::new(x.norm_sqr(), 0.0);
    Matrix2::new(-2.0 * i, -x * x, (x * x).conj(), 2.0 * i)
}

/// Cross block `[[−2(A*B + AB*), −2AB], [2A*B*, 2(A*B + AB*)]]`.
pub fn cross_block(a: Complex64, b: Complex64) -> Matrix2<Complex64> {
    let s = a.conj() * b + a * b.conj();
    Matrix2::new(-2.0 * s, -2.0 * a * b, 2.0 * (a * b).conj(), 2.0 * s)
}

pub fn drift_matrices(state: &TwoModeSteady, config: &TwoModeConfig) -> TwoModeDrift {
    let c = config.coefficients();
    let (a, b) = (state.a, state.b);
    let z = Matrix2::zeros();
    let (ma, mb, mab) = (self_block(a), self_block(b), cross_block(a, b));
    let parts = [
        blocks(ma, z, z, z),
        blocks(mab, ma, ma, z),
        blocks(mb, mab, mab, ma),
        blocks(z, mb, mb, mab),
        blocks(z, z, z, mb),
    ];
    let weights = [1.0, c.lambda_p, c.lambda_pp, c.lambda_ppp0, c.lambda_pppp];
    let m = parts
        .iter()
        .zip(weights)
        .fold(Matrix4::zeros(), |acc, (part, w)| acc + part * Complex64::new(w, 0.0));
    let phi_b = state.phi_a + config.delta_phi;
    let phi = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        Complex64::new(state.phi_a, 0.0),
        Complex64::new(-state.phi_a, 0.0),
        Complex64::new(phi_b, 0.0),
        Complex64::new(-phi_b, 0.0),
    ));
    TwoModeDrift { phi, m, m_parts: parts }
}

/// Scattering matrix and output correlation for vacuum input,
/// `S(ω) = −1 + 2(1 − iω + iΦ + iKM)⁻¹`, `V_out = S V_in S†`.
pub fn output_correlation_twomode(
    state: &TwoModeSteady,
    config: &TwoModeConfig,
    omega: f64,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let drift = drift_matrices(state, config).drift(config.k);
    let l = DMatrix::from_iterator(4, 4, drift.iter().copied());
    let s = crate::cavity::scattering_from_drift(&l, omega)?;
    let v_out = &s * crate::perturbative::vacuum_input(2) * s.adjoint();
    Ok((s, v_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::to_real;

    fn state_at(config: &TwoModeConfig, phi_a: f64) -> TwoModeSteady {
        two_mode_steady(config, phi_a).unwrap().remove(0)
    }

    #[test]
    fn linear_cavity() {
        let cfg = TwoModeConfig::new(0.0, 3, 0.5).unwrap();
        let s = two_mode_steady(&cfg, 0.7).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].a - Complex64::new(1.0, 0.0) / Complex64::new(1.0, 0.7)).norm() < 1e-14);
        assert!(s[0].b.norm() < 1e-14);
        let (_, v) = output_correlation_twomode(&s[0], &cfg, 0.4).unwrap();
        assert!((v - crate::perturbative::vacuum_input(2)).norm() < 1e-13);
    }

    #[test]
    fn literal_equations_match_general_engine() {
        let cfg = TwoModeConfig::new(2.5, 2, 0.7).unwrap();
        let system = CavitySystem::new(&cfg.cavity_config(1.3)).unwrap();
        let (a, b) = (Complex64::new(0.4, -0.3), Complex64::new(0.1, 0.25));
        let (da, db) = two_mode_rhs(&cfg, 1.3, a, b);
        let r = system.residual(&[a, b]);
        assert!((r[0] - da).norm() < 1e-14 && (r[1] - db).norm() < 1e-14);
    }

    #[test]
    fn coefficients_are_exact_values() {
        let c = TwoModeConfig::new(1.0, 4, 0.0).unwrap().coefficients();
        assert_eq!(c.lambda_p, 1.0 / 16.0);
        assert_eq!(c.lambda_pp, 35.0 / 128.0);
    }

    #[test]
    fn steady_states_conserve_flux() {
        let cfg = TwoModeConfig::new(2.5, 1, 0.0).unwrap();
        for s in two_mode_steady(&cfg, 2.0).unwrap() {
            let flux = s.a_out.norm_sqr() + s.b_out.norm_sqr();
            assert!((flux - 1.0).abs() < 1e-10);
            let (da, db) = two_mode_rhs(&cfg, 2.0, s.a, s.b);
            assert!(da.norm() < 1e-11 && db.norm() < 1e-11);
        }
    }

    #[test]
    fn decoupled_drift_has_only_fundamental_block() {
        let cfg = TwoModeConfig::new(1.0, 3, 0.0).unwrap();
        let mut s = state_at(&cfg, 0.5);
        s.b = Complex64::default();
        let d = drift_matrices(&s, &cfg);
        let m0 = d.m_parts[0];
        assert!(m0.fixed_view::<2, 2>(0, 0).norm() > 0.0);
        assert_eq!(m0.fixed_view::<2, 2>(2, 2).norm(), 0.0);
        assert_eq!(d.m_parts[2].fixed_view::<2, 2>(0, 2), d.m_parts[2].fixed_view::<2, 2>(2, 0));
    }

    #[test]
    fn drift_matches_finite_differences_and_engine() {
        let cfg = TwoModeConfig::new(2.5, 1, 0.3).unwrap();
        let s = state_at(&cfg, 1.8);
        assert!(s.b.norm() > 1e-3);
        let drift = drift_matrices(&s, &cfg).drift(cfg.k);
        let engine = CavitySystem::new(&cfg.cavity_config(1.8)).unwrap().drift(&[s.a, s.b]);
        for i in 0..4 {
            for j in 0..4 {
                assert!((drift[(i, j)] - engine[(i, j)]).norm() < 1e-12);
            }
        }
        // Central differences of the literal right-hand sides, real basis.
        let f = |z: [Complex64; 2]| {
            let (da, db) = two_mode_rhs(&cfg, 1.8, z[0], z[1]);
            to_real(&[da, db])
        };
        let h = 1e-6;
        let base = [s.a, s.b];
        for col in 0..4 {
            let d = if col % 2 == 0 { Complex64::new(h, 0.0) } else { Complex64::new(0.0, h) };
            let (mut p, mut m) = (base, base);
            p[col / 2] += d;
            m[col / 2] -= d;
            let fd = (f(p) - f(m)) / (2.0 * h);
            // Column of ∂F/∂x or ∂F/∂y from the complex drift: J_h ± J_a.
            let mode = col / 2;
            for row in 0..2 {
                let jh = drift[(2 * row, 2 * mode)];
                let ja = drift[(2 * row, 2 * mode + 1)];
                let v = if col % 2 == 0 { jh + ja } else { Complex64::i() * (jh - ja) };
                assert!((fd[2 * row] - v.re).abs() < 1e-8);
                assert!((fd[2 * row + 1] - v.im).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn published_cross_entry_fails_finite_differences() {
        let cfg = TwoModeConfig::new(2.5, 1, 0.3).unwrap();
        let s = state_at(&cfg, 1.8);
        let mut printed = cross_block(s.a, s.b);
        printed[(1, 0)] = 2.0 * s.a * s.b;
        assert!((printed - cross_block(s.a, s.b)).norm() > 1e-3);
    }

    #[test]
    fn commutator_metric_is_preserved() {
        let cfg = TwoModeConfig::new(2.5, 3, 1.0).unwrap();
        let s = state_at(&cfg, 1.5);
        let (sm, _) = output_correlation_twomode(&s, &cfg, 0.8).unwrap();
        let j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            [1.0, -1.0, 1.0, -1.0].map(|x| Complex64::new(x, 0.0)).to_vec(),
        ));
        assert!((&sm * &j * sm.adjoint() - &j).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-8);
    }

    #[test]
    fn rejects_fundamental_as_partner() {
        assert!(TwoModeConfig::new(1.0, 0, 0.0).is_err());
        assert!(TwoModeConfig::new(-1.0, 2, 0.0).is_err());
    }
}

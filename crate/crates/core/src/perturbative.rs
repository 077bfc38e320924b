//! Cavity with widely spaced transverse modes (`φ_T ≫ 1`): the higher modes
//! are eliminated perturbatively and only the fundamental is kept, with
//! loss, phase-shift and added-noise corrections in powers of `1/φ_T`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, CavitySystem, SteadyState};
use crate::coupling::{lambda_pair_f64, mu_constants, MuConstants};
use crate::error::{Error, Result};
use crate::Form;

pub const DEFAULT_PHI_T_THRESHOLD: f64 = 10.0;
/// Cutoff for the `μ` constants and the transfer-matrix mode sums.
pub const SUM_CUTOFF: u32 = 60;

fn mu() -> &'static MuConstants {
    static MU: OnceLock<MuConstants> = OnceLock::new();
    MU.get_or_init(|| mu_constants(SUM_CUTOFF))
}

type M2 = Matrix2<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `η = diag(1, −1)`.
pub fn eta() -> M2 {
    Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// `[[a|A|², bA²], [s·bA*², s·a|A|²]]`.
fn block(a0: Complex64, diag: f64, off: f64, lower_sign: f64) -> M2 {
    let i0 = a0.norm_sqr();
    Matrix2::new(
        c(diag * i0),
        off * a0 * a0,
        lower_sign * off * (a0 * a0).conj(),
        c(lower_sign * diag * i0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeSteady {
    pub a0: Complex64,
    pub intensity: f64,
    /// `φ_T` is below the configured validity threshold.
    pub small_spacing: bool,
}

fn check(config: &CavityConfig) -> Result<()> {
    if !(config.k >= 0.0 && config.k.is_finite()) {
        return Err(Error::invalid("k", "must be finite and non-negative"));
    }
    if !(config.phi_t > 0.0 && config.phi_t.is_finite()) {
        return Err(Error::invalid("phi_t", "must be positive and finite"));
    }
    if !config.phi0.is_finite() {
        return Err(Error::invalid("phi0", "must be finite"));
    }
    Ok(())
}

/// Loss and phase of the bracket multiplying `A₀`, as functions of `ℐ`.
fn bracket(config: &CavityConfig, intensity: f64, form: Form) -> Complex64 {
    let mu = mu();
    let (k, phi0, pt) = (config.k, config.phi0, config.phi_t);
    let i2 = intensity * intensity;
    let mu3_coeff = match form {
        Form::Printed => 15.0,
        Form::Rederived => 12.0,
    };
    let loss = mu.mu2 * k * k * i2 / (pt * pt);
    let phase = phi0 - k * intensity - 3.0 * mu.mu1 * k * k * i2 / pt + 3.0 * mu.mu2 * phi0 * k * k * i2 / (pt * pt)
        - mu3_coeff * mu.mu3 * k.powi(3) * i2 * intensity / (pt * pt);
    Complex64::new(1.0 + loss, phase)
}

/// Roots of the perturbative steady-state equation
/// `1 = [(1 + loss) + i(phase)] A₀` by decreasing intensity. Powers of `A₀`
/// inside the corrections are read as powers of `|A₀|`.
pub fn steady_state_perturbative(config: &CavityConfig, form: Form) -> Result<Vec<PerturbativeSteady>> {
    check(config)?;
    let small_spacing = config.phi_t < DEFAULT_PHI_T_THRESHOLD;
    let h = |x: f64| x * bracket(config, x, form).norm_sqr() - 1.0;
    // |bracket| ≥ 1, so every root lies in (0, 1].
    const GRID: usize = 4000;
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_h = h(0.0);
    for j in 1..=GRID {
        let x = j as f64 / GRID as f64;
        let hx = h(x);
        if hx == 0.0 {
            roots.push(x);
        } else if hx.signum() != prev_h.signum() && prev_h != 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h(mid).signum() == prev_h.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_h = hx;
    }
    if roots.is_empty() {
        return Err(Error::NoConvergence {
            iterations: GRID,
            residual: prev_h.abs(),
        });
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(roots
        .into_iter()
        .map(|x| {
            let a0 = Complex64::new(1.0, 0.0) / bracket(config, x, form);
            PerturbativeSteady {
                a0,
                intensity: a0.norm_sqr(),
                small_spacing,
            }
        })
        .collect())
}

/// Lowest-order nonlinear loss relative to the cavity width,
/// `μ₂ K²ℐ² / φ_T²`.
pub fn perturbative_loss(k: f64, intensity: f64, phi_t: f64) -> f64 {
    mu().mu2 * (k * intensity / phi_t).powi(2)
}

/// `G_p = (1 − iω + iη(φ0 + pφ_T) − iηKλ_pp N₀)⁻¹` with
/// `N₀ = [[2|A₀|², A₀²], [A₀*², 2|A₀|²]]`.
pub fn propagator_gp(p: u32, a0: Complex64, config: &CavityConfig, omega: f64) -> Result<M2> {
    let detuning = config.phi0 + f64::from(p) * config.phi_t;
    let n0 = block(a0, 2.0, 1.0, 1.0);
    let m = M2::identity() * Complex64::new(1.0, -omega) + eta() * (I * detuning)
        - eta() * n0 * (I * config.k * lambda_pair_f64(p, p));
    m.try_inverse().ok_or(Error::Divergence { omega })
}

/// Nonlinear phase-shift and loss matrix of the fundamental mode.
pub fn r0_matrix(a0: Complex64, config: &CavityConfig, omega: f64) -> M2 {
    let mu = mu();
    let (k, phi0, pt) = (config.k, config.phi0, config.phi_t);
    let i0 = a0.norm_sqr();
    let loss = block(a0, 3.0, 2.0, 1.0) * c(mu.mu2 * k * k * i0 / (pt * pt));
    let dispersion = M2::identity() * (-3.0 * I * mu.mu2 * omega * k * k * i0 * i0 / (pt * pt));
    let kerr = block(a0, 2.0, 1.0, -1.0) * (-I * k);
    let first = block(a0, 3.0, 2.0, -1.0) * (-3.0 * I * k * k * i0 / pt * (mu.mu1 - mu.mu2 * phi0 / pt));
    let third = block(a0, 4.0, 3.0, -1.0) * (-12.0 * I * mu.mu3 * k.powi(3) * i0 * i0 / (pt * pt));
    loss + dispersion + kerr + first + third
}

/// `G̃₀ = (1 − iω + iηφ0 + R₀)⁻¹`.
pub fn propagator_g0(a0: Complex64, config: &CavityConfig, omega: f64) -> Result<M2> {
    let m = M2::identity() * Complex64::new(1.0, -omega) + eta() * (I * config.phi0) + r0_matrix(a0, config, omega);
    m.try_inverse().ok_or(Error::Divergence { omega })
}

/// Transfer matrix from input fluctuations of mode `q ≥ 1` into the
/// fundamental. [`Form::Printed`] keeps the published blocks;
/// [`Form::Rederived`] uses `N₀η`-ordered blocks and the `|A₀|²` factor on
/// the second term, which makes the vacuum sum equal [`v_add`].
pub fn transfer_matrix(q: u32, a0: Complex64, config: &CavityConfig, omega: f64, form: Form) -> Result<M2> {
    if q == 0 {
        return Err(Error::invalid("q", "transfer matrices are defined for q >= 1"));
    }
    let (k, phi0, pt) = (config.k, config.phi0, config.phi_t);
    let i0 = a0.norm_sqr();
    let qf = f64::from(q);
    let lq = lambda_pair_f64(q, 0);
    let (mut s_rr, mut s_qr) = (0.0, 0.0);
    for r in (1..=SUM_CUTOFF).rev() {
        let rf = f64::from(r);
        let pair = lambda_pair_f64(q, r);
        s_rr += lambda_pair_f64(r, 0) * pair / (qf * rf);
        s_qr += lq * pair / (qf * rf);
    }
    let extra = match form {
        Form::Printed => 1.0,
        Form::Rederived => i0,
    };
    let flip = |m: M2| match form {
        Form::Printed => m,
        Form::Rederived => Matrix2::new(m[(0, 0)], -m[(0, 1)], -m[(1, 0)], m[(1, 1)]),
    };
    let lead = -I * lq * k / (qf * pt) + I * lq * phi0 * k / (qf * qf * pt * pt) - 2.0 * I * k * k * i0 / (pt * pt) * s_rr;
    let t1 = flip(block(a0, 2.0, 1.0, -1.0)) * lead;
    let t2 = flip(block(a0, 5.0, 4.0, -1.0)) * (-I * k * k / (pt * pt) * s_qr * extra);
    let t3 = block(a0, 2.0, 1.0, 1.0) * (Complex64::new(1.0, -omega) * (lq * k / (qf * qf * pt * pt)));
    Ok(t1 + t2 + t3)
}

/// `μ₂ (K²|A₀|²/φ_T²) [[4|A₀|², −2A₀²], [−2A₀*², |A₀|²]]`.
pub fn v_add(a0: Complex64, config: &CavityConfig) -> M2 {
    let i0 = a0.norm_sqr();
    let s = mu().mu2 * config.k * config.k * i0 / (config.phi_t * config.phi_t);
    Matrix2::new(c(4.0 * i0), -2.0 * a0 * a0, -2.0 * (a0 * a0).conj(), c(i0)) * c(s)
}

/// `[[1, 0], [0, 0]]`: coherent-state input.
pub fn vacuum_2x2() -> M2 {
    Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDecomposition {
    /// `(−1 + 2G̃₀) V_in (−1 + 2G̃₀)†`
    pub transformed_input: M2,
    /// `4 G̃₀ V_add G̃₀†`
    pub added: M2,
}

impl NoiseDecomposition {
    pub fn total(&self) -> M2 {
        self.transformed_input + self.added
    }
}

/// Output correlation of the fundamental mode; `v_in` defaults to vacuum.
pub fn output_correlation(a0: Complex64, config: &CavityConfig, omega: f64, v_in: Option<M2>) -> Result<NoiseDecomposition> {
    check(config)?;
    let g0 = propagator_g0(a0, config, omega)?;
    let s = g0 * c(2.0) - M2::identity();
    let v_in = v_in.unwrap_or_else(vacuum_2x2);
    Ok(NoiseDecomposition {
        transformed_input: s * v_in * s.adjoint(),
        added: g0 * v_add(a0, config) * g0.adjoint() * c(4.0),
    })
}

/// Exact linear response of all modes of a truncated steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub scattering: DMatrix<Complex64>,
    pub v_out: DMatrix<Complex64>,
}

impl BruteForce {
    /// 2×2 block of mode `j` in the interleaved `(α, α*)` basis.
    pub fn block(&self, j: usize) -> M2 {
        let v = &self.v_out;
        Matrix2::new(v[(2 * j, 2 * j)], v[(2 * j, 2 * j + 1)], v[(2 * j + 1, 2 * j)], v[(2 * j + 1, 2 * j + 1)])
    }
}

/// Vacuum input correlation for `n` modes, interleaved basis.
pub fn vacuum_input(n: usize) -> DMatrix<Complex64> {
    let mut v = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        v[(2 * j, 2 * j)] = c(1.0);
    }
    v
}

/// `S(ω) = −1 + 2(−iω − L)⁻¹` of the full truncated system and
/// `V_out = S V_in S†` for vacuum input.
pub fn brute_force_fluctuations(config: &CavityConfig, state: &SteadyState, omega: f64) -> Result<BruteForce> {
    let system = CavitySystem::new(&config.with_phi0(state.phi0))?;
    let scattering = system.scattering(&state.amplitudes, omega)?;
    let v_out = &scattering * vacuum_input(system.modes()) * scattering.adjoint();
    Ok(BruteForce { scattering, v_out })
}

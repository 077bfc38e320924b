//! Fundamental Gaussian beam through a thin Kerr medium placed at the waist,
//! to second order in the nonlinear phase `φ_NL = K̂|A_in|²`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingTable, CouplingTensor};
use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};
use crate::Form;

pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;
pub const DEFAULT_Q_MAX: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinMediumParams {
    pub k_hat: f64,
    pub a_in: Complex64,
    /// Highest transverse order kept in the mode sums and the oracle.
    pub q_max: u32,
    pub validity_threshold: f64,
}

impl ThinMediumParams {
    pub fn new(k_hat: f64, a_in: Complex64) -> Result<Self> {
        if !k_hat.is_finite() {
            return Err(Error::invalid("k_hat", "must be finite"));
        }
        if !(a_in.re.is_finite() && a_in.im.is_finite()) {
            return Err(Error::invalid("a_in", "must be finite"));
        }
        Ok(Self {
            k_hat,
            a_in,
            q_max: DEFAULT_Q_MAX,
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
        })
    }

    pub fn with_q_max(mut self, q_max: u32) -> Result<Self> {
        if q_max == 0 {
            return Err(Error::invalid("q_max", "at least one higher mode is needed"));
        }
        self.q_max = q_max;
        Ok(self)
    }

    pub fn with_validity_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::invalid("validity_threshold", "must be positive"));
        }
        self.validity_threshold = threshold;
        Ok(self)
    }

    pub fn phi_nl(&self) -> f64 {
        self.k_hat * self.a_in.norm_sqr()
    }

    pub fn is_perturbative(&self) -> bool {
        self.phi_nl().abs() <= self.validity_threshold
    }

    /// Phase `θ` with `A_in = |A_in| e^{iθ}`. The formulas below hold in the
    /// gauge `θ = 0`; fluctuations are rotated in and out of it.
    pub fn gauge_phase(&self) -> f64 {
        self.a_in.arg()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeSpaceResult {
    pub a_out: Complex64,
    pub phi_nl: f64,
    pub gamma_nl: f64,
    pub v_add: Matrix2<Complex64>,
    pub perturbative: bool,
}

pub fn propagate_mean(params: &ThinMediumParams) -> FreeSpaceResult {
    let phi = params.phi_nl();
    let gamma = phi * phi / 3.0;
    let factor = Complex64::new(1.0 - 0.5 * phi * phi - 0.5 * gamma, phi);
    FreeSpaceResult {
        a_out: factor * params.a_in,
        phi_nl: phi,
        gamma_nl: gamma,
        v_add: added_noise_corr(params),
        perturbative: params.is_perturbative(),
    }
}

/// `V_add = (1/3) K̂²|A_in|⁴ [[4, −2], [−2, 1]]`.
pub fn added_noise_corr(params: &ThinMediumParams) -> Matrix2<Complex64> {
    let phi = params.phi_nl();
    let s = phi * phi / 3.0;
    let e = |x: f64| Complex64::new(x * s, 0.0);
    Matrix2::new(e(4.0), e(-2.0), e(-2.0), e(1.0))
}

/// Change of the fundamental-mode fluctuation split into its parametric part
/// and the part fed in from higher modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctTransform {
    pub parametric: Complex64,
    pub added: Complex64,
}

impl FluctTransform {
    pub fn total(&self) -> Complex64 {
        self.parametric + self.added
    }
}

/// Linear coefficients `(a, b)` of `dα₀ = Σ_q a_q α_q + b_q α_q*` in the real
/// gauge, split as (parametric, added).
fn transform_coefficients(params: &ThinMediumParams, form: Form) -> (Vec<(Complex64, Complex64)>, Vec<(Complex64, Complex64)>) {
    let n = params.q_max as usize + 1;
    let phi = params.phi_nl();
    let i = Complex64::i();
    let tensor = CouplingTensor::global();
    let lambda: Vec<f64> = (0..n as u32).map(|q| tensor.circular_f64(q, 0, 0, 0)).collect();

    let mut parametric = vec![(Complex64::default(), Complex64::default()); n];
    let second = match form {
        Form::Printed => phi * phi / 3.0,
        Form::Rederived => phi * phi / 2.0,
    };
    parametric[0] = (2.0 * i * phi - 3.0 * second, i * phi - 2.0 * second);

    let mut added = vec![(Complex64::default(), Complex64::default()); n];
    for q in 1..n {
        added[q].0 += 2.0 * i * phi * lambda[q];
        added[q].1 += i * phi * lambda[q];
    }
    let first = match form {
        Form::Printed => 1,
        Form::Rederived => 0,
    };
    for q in first..n {
        for r in first..n {
            if q == 0 && r == 0 {
                continue;
            }
            let w = lambda[q] * tensor.circular_f64(q as u32, r as u32, 0, 0);
            added[r].0 -= 1.5 * phi * phi * w;
            added[r].1 -= phi * phi * w;
        }
    }
    (parametric, added)
}

/// `dα₀` for incoming fluctuations `alpha[q]`, `q = 0..=q_max` (missing
/// entries are zero). [`Form::Printed`] follows the published second-order
/// coefficients with both mode sums over `q, r ≥ 1`; [`Form::Rederived`]
/// is exact at second order.
pub fn fluct_transform(params: &ThinMediumParams, alpha: &[Complex64], form: Form) -> FluctTransform {
    let (par, add) = transform_coefficients(params, form);
    let rot = Complex64::from_polar(1.0, params.gauge_phase());
    let apply = |coeffs: &[(Complex64, Complex64)]| {
        let sum: Complex64 = coeffs
            .iter()
            .zip(alpha)
            .map(|(&(a, b), &x)| {
                let x = x * rot.conj();
                a * x + b * x.conj()
            })
            .sum();
        sum * rot
    };
    FluctTransform {
        parametric: apply(&par),
        added: apply(&add),
    }
}

/// First-order added term `iφ_NL Σ_q λ_q (2α_q + α_q*)`, real gauge.
pub fn added_first_order(params: &ThinMediumParams, alpha: &[Complex64]) -> Complex64 {
    let phi = params.phi_nl();
    let tensor = CouplingTensor::global();
    alpha
        .iter()
        .enumerate()
        .skip(1)
        .take(params.q_max as usize)
        .map(|(q, &a)| Complex64::i() * phi * tensor.circular_f64(q as u32, 0, 0, 0) * (2.0 * a + a.conj()))
        .sum()
}

/// Correlation matrix of a linear combination `Σ a_q α_q + b_q α_q*` of
/// vacuum inputs, `[[C_{αα*}, C_{αα}], [C_{α*α*}, C_{α*α}]]`.
pub fn vacuum_correlation(coeffs: &[(Complex64, Complex64)]) -> Matrix2<Complex64> {
    coeffs.iter().fold(Matrix2::zeros(), |acc, &(a, b)| {
        acc + Matrix2::new(a * a.conj(), a * b, a.conj() * b.conj(), b * b.conj())
    })
}

/// Vacuum correlation of the added term, built from its mode coefficients.
pub fn added_noise_from_coefficients(params: &ThinMediumParams, form: Form) -> Matrix2<Complex64> {
    vacuum_correlation(&transform_coefficients(params, form).1)
}

fn kerr_rhs(table: &CouplingTable, k_hat: f64, a: &[Complex64], out: &mut [Complex64]) {
    let n = table.modes();
    for (p, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = Complex64::default();
        for q in 0..n {
            let aq = a[q].conj();
            for r in 0..n {
                let qr = aq * a[r];
                for s in 0..n {
                    acc += table.get(p, q, r, s) * qr * a[s];
                }
            }
        }
        *o = Complex64::i() * k_hat * acc;
    }
}

fn table_for(params: &ThinMediumParams) -> CouplingTable {
    let orders: Vec<u32> = (0..=params.q_max).collect();
    CouplingTensor::global().table(&orders)
}

/// Oracle: integrates the truncated mode equations
/// `dA_p/ds = iK̂ Σ λ_pqrs A_q* A_r A_s` over `s ∈ [0, 1]` with modes
/// `0..=q_max` and returns every output amplitude.
pub fn integrate_truncated(params: &ThinMediumParams) -> Result<Vec<Complex64>> {
    let table = table_for(params);
    let mut y0 = vec![Complex64::default(); table.modes()];
    y0[0] = params.a_in;
    ode::integrate(
        |_, y, dy| kerr_rhs(&table, params.k_hat, y, dy),
        0.0,
        1.0,
        &y0,
        Tolerance::default(),
    )
}

/// Oracle: propagates the mean field together with its linearized
/// fluctuations and returns `α₀(L) − α₀(0)`.
pub fn integrate_fluctuation_response(params: &ThinMediumParams, alpha: &[Complex64]) -> Result<Complex64> {
    let table = table_for(params);
    let n = table.modes();
    let k_hat = params.k_hat;
    let mut y0 = vec![Complex64::default(); 2 * n];
    y0[0] = params.a_in;
    for (q, &a) in alpha.iter().enumerate().take(n) {
        y0[n + q] = a;
    }
    let y = ode::integrate(
        |_, y, dy| {
            let (mean, fl) = y.split_at(n);
            let (dmean, dfl) = dy.split_at_mut(n);
            kerr_rhs(&table, k_hat, mean, dmean);
            for (p, d) in dfl.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            let l = table.get(p, q, r, s);
                            if l == 0.0 {
                                continue;
                            }
                            acc += l
                                * (mean[r] * mean[s] * fl[q].conj()
                                    + 2.0 * mean[q].conj() * mean[r] * fl[s]);
                        }
                    }
                }
                *d = Complex64::i() * k_hat * acc;
            }
        },
        0.0,
        1.0,
        &y0,
        Tolerance::default(),
    )?;
    Ok(y[n] - y0[n])
}

//! Generalized Laguerre polynomials and Gauss-Laguerre beam modes.
//!
//! Polynomials are kept with exact rational coefficients so that products of
//! several of them can be integrated without rounding. The floating-point
//! pieces here (mode evaluation, Gauss-Laguerre quadrature) are independent of
//! the exact path and serve as its numerical cross-check.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `L_p^{(l)}(v) = Σ_k coefficients[k] v^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaguerrePolynomial {
    order: u32,
    superscript: u32,
    coefficients: Vec<BigRational>,
}

impl LaguerrePolynomial {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn superscript(&self) -> u32 {
        self.superscript
    }

    /// Coefficients in increasing powers of `v`.
    pub fn coefficients(&self) -> &[BigRational] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn leading_coefficient(&self) -> &BigRational {
        self.coefficients.last().expect("polynomial has at least one coefficient")
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * v + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn eval_exact(&self, v: &BigRational) -> BigRational {
        self.coefficients
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * v + c)
    }
}

fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Builds `L_p^{(l)}` from the three-term recurrence
/// `(k+1) L_{k+1} = (2k+l+1-v) L_k - (k+l) L_{k-1}`.
pub fn laguerre_poly(p: u32, l: u32) -> LaguerrePolynomial {
    let l_i = i64::from(l);
    let mut prev: Vec<BigRational> = vec![BigRational::one()];
    if p == 0 {
        return LaguerrePolynomial {
            order: 0,
            superscript: l,
            coefficients: prev,
        };
    }
    let mut cur: Vec<BigRational> = vec![rational(1 + l_i), rational(-1)];
    for k in 1..i64::from(p) {
        let mut next = vec![BigRational::zero(); cur.len() + 1];
        let a = rational(2 * k + l_i + 1);
        let b = rational(k + l_i);
        for (i, c) in cur.iter().enumerate() {
            next[i] += &a * c;
            next[i + 1] -= c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= &b * c;
        }
        let scale = rational(k + 1);
        for c in &mut next {
            *c /= &scale;
        }
        prev = cur;
        cur = next;
    }
    LaguerrePolynomial {
        order: p,
        superscript: l,
        coefficients: cur,
    }
}

/// Floating-point `L_p^{(l)}(v)` by the same recurrence, without going through
/// rational coefficients.
pub fn laguerre_f64(p: u32, l: u32, v: f64) -> f64 {
    let l = f64::from(l);
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + l - v;
    for k in 1..p {
        let k = f64::from(k);
        let next = ((2.0 * k + l + 1.0 - v) * cur - (k + l) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Paraxial beam parameters. Lengths share whatever unit the caller picks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BeamGeometry {
    pub wavelength: f64,
    pub waist: f64,
}

impl BeamGeometry {
    pub fn new(wavelength: f64, waist: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", "must be positive and finite"));
        }
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(Error::invalid("waist", "must be positive and finite"));
        }
        Ok(Self { wavelength, waist })
    }

    pub fn rayleigh_length(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    pub fn beam_size(&self, x: f64) -> f64 {
        let z = x / self.rayleigh_length();
        self.waist * (1.0 + z * z).sqrt()
    }

    pub fn gouy_angle(&self, x: f64) -> f64 {
        (x / self.rayleigh_length()).atan()
    }
}

/// Cylindrical coordinates `(r, θ, x)`, with `x` along the propagation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalPoint {
    pub r: f64,
    pub theta: f64,
    pub x: f64,
}

impl CylindricalPoint {
    pub fn new(r: f64, theta: f64, x: f64) -> Self {
        Self { r, theta, x }
    }
}

/// Phase `φ_p^{(l)}(r, θ, x)`: wavefront curvature, azimuthal winding and the
/// Gouy term `(2p+l+1) arctan(x/l_R)`.
pub fn mode_phase(p: u32, l: u32, point: CylindricalPoint, geom: &BeamGeometry) -> f64 {
    let l_r = geom.rayleigh_length();
    let x = point.x;
    let curvature = -PI / geom.wavelength * x / (x * x + l_r * l_r) * point.r * point.r;
    curvature
        + f64::from(l) * point.theta
        + f64::from(2 * p + l + 1) * geom.gouy_angle(x)
}

fn log_factorial(n: u32) -> f64 {
    (1..=n).map(|k| f64::from(k).ln()).sum()
}

/// Complex amplitude of the normalized mode `u_p^{(l)}` at `point`.
pub fn mode_value(p: u32, l: u32, point: CylindricalPoint, geom: &BeamGeometry) -> Complex64 {
    let w = geom.beam_size(point.x);
    let rho = point.r / w;
    let norm = (2.0 / PI).sqrt() * (0.5 * (log_factorial(p) - log_factorial(p + l))).exp() / w;
    let radial = (2f64.sqrt() * rho).powi(l as i32)
        * laguerre_f64(p, l, 2.0 * rho * rho)
        * (-rho * rho).exp();
    let phase = mode_phase(p, l, point, geom);
    Complex64::from_polar(norm * radial, -phase)
}

/// Nodes and weights for `∫_0^∞ f(t) e^{-t} dt ≈ Σ w_i f(t_i)`.
#[derive(Debug, Clone)]
pub struct GaussLaguerreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerreRule {
    /// Golub-Welsch eigenvalues as starting points, then Newton on `L_n` so
    /// that the tiny weights at large nodes keep full relative accuracy.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (2 * i + 1) as f64
            } else if i + 1 == j || j + 1 == i {
                i.max(j) as f64
            } else {
                0.0
            }
        });
        let mut seeds: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        seeds.sort_by(|a, b| a.total_cmp(b));

        let n_u32 = n as u32;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for seed in seeds {
            let mut x = seed;
            for _ in 0..100 {
                let (value, derivative) = laguerre_with_derivative(n_u32, x);
                let step = value / derivative;
                x -= step;
                if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                    break;
                }
            }
            // Product form: first-order node errors cancel between L_{n-1}
            // and L_{n+1}.
            let prev = laguerre_f64(n_u32 - 1, 0, x);
            let next = laguerre_f64(n_u32 + 1, 0, x);
            nodes.push(x);
            weights.push(-x / (n as f64 * (n as f64 + 1.0) * prev * next));
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// Returns `(Σ w f, Σ w |f|)`; the second sum is the cancellation scale.
    pub fn integrate_with_scale(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold((0.0, 0.0), |(s, a), (&t, &w)| {
                let v = w * f(t);
                (s + v, a + v.abs())
            })
    }
}

fn laguerre_with_derivative(n: u32, x: f64) -> (f64, f64) {
    let ln = laguerre_f64(n, 0, x);
    let ln1 = laguerre_f64(n - 1, 0, x);
    (ln, f64::from(n) * (ln - ln1) / x)
}

fn rule_64() -> &'static GaussLaguerreRule {
    static RULE: OnceLock<GaussLaguerreRule> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerreRule::new(64))
}

fn rule_128() -> &'static GaussLaguerreRule {
    static RULE: OnceLock<GaussLaguerreRule> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerreRule::new(128))
}

pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// `2∫_0^∞ v^{l+m} L_p^{(l)} L_q^{(m)} L_r^{(n)} L_s^{(o)} e^{-2v} dv` by
/// Gauss-Laguerre quadrature at 64 and 128 nodes.
///
/// The selection rule is not applied: this is the raw overlap integral, used
/// to check [`crate::coupling::lambda_exact`].
#[allow(clippy::too_many_arguments)]
pub fn overlap_quadrature(
    p: u32,
    q: u32,
    r: u32,
    s: u32,
    l: u32,
    m: u32,
    n: u32,
    o: u32,
) -> Result<f64> {
    // t = 2v turns the weight into e^{-t} and cancels the leading factor 2.
    let power = (l + m) as i32;
    let integrand = |t: f64| {
        let v = 0.5 * t;
        v.powi(power)
            * laguerre_f64(p, l, v)
            * laguerre_f64(q, m, v)
            * laguerre_f64(r, n, v)
            * laguerre_f64(s, o, v)
    };
    let low = rule_64().integrate(integrand);
    let (high, scale) = rule_128().integrate_with_scale(integrand);
    let difference = (high - low).abs();
    if difference > QUADRATURE_TOLERANCE * scale.max(high.abs()) {
        return Err(Error::QuadratureNotConverged {
            low_order: 64,
            high_order: 128,
            difference,
        });
    }
    Ok(high)
}

/// `binomial(n, k)` as an exact integer.
pub(crate) fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Checks the exact recurrence `(p+1)L_{p+1} = (2p+l+1-v)L_p - (p+l)L_{p-1}`
/// coefficient by coefficient.
pub fn recurrence_holds(p: u32, l: u32) -> bool {
    if p == 0 {
        return true;
    }
    let next = laguerre_poly(p + 1, l);
    let cur = laguerre_poly(p, l);
    let prev = laguerre_poly(p - 1, l);
    let degree = next.coefficients.len();
    let mut rhs = vec![BigRational::zero(); degree];
    let a = rational(i64::from(2 * p + l + 1));
    let b = rational(i64::from(p + l));
    for (i, c) in cur.coefficients.iter().enumerate() {
        rhs[i] += &a * c;
        rhs[i + 1] -= c;
    }
    for (i, c) in prev.coefficients.iter().enumerate() {
        rhs[i] -= &b * c;
    }
    let scale = rational(i64::from(p + 1));
    next.coefficients
        .iter()
        .zip(&rhs)
        .all(|(lhs, rhs)| &(lhs * &scale) == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn low_order_polynomials() {
        assert_eq!(laguerre_poly(0, 0).coefficients(), &[ratio(1, 1)]);
        assert_eq!(laguerre_poly(1, 0).coefficients(), &[ratio(1, 1), ratio(-1, 1)]);
        assert_eq!(
            laguerre_poly(2, 0).coefficients(),
            &[ratio(1, 1), ratio(-2, 1), ratio(1, 2)]
        );
    }

    #[test]
    fn matches_explicit_series() {
        // L_p^{(l)}(v) = Σ_k (-1)^k C(p+l, p-k) v^k / k!
        for p in 0..9u32 {
            for l in 0..4u32 {
                let poly = laguerre_poly(p, l);
                for k in 0..=p {
                    let mut fact = BigInt::one();
                    for i in 1..=u64::from(k) {
                        fact *= i;
                    }
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    let expected = BigRational::new(
                        BigInt::from(sign) * binomial(u64::from(p + l), u64::from(p - k)),
                        fact,
                    );
                    assert_eq!(poly.coefficients()[k as usize], expected, "p={p} l={l} k={k}");
                }
            }
        }
    }

    #[test]
    fn degree_leading_and_origin() {
        for p in 0..12u32 {
            for l in 0..5u32 {
                let poly = laguerre_poly(p, l);
                assert_eq!(poly.degree(), p as usize);
                let mut fact = BigInt::one();
                for i in 1..=u64::from(p) {
                    fact *= i;
                }
                let sign = if p % 2 == 0 { 1 } else { -1 };
                assert_eq!(poly.leading_coefficient(), &BigRational::new(BigInt::from(sign), fact));
                let at_zero = poly.eval_exact(&BigRational::zero());
                assert_eq!(
                    at_zero,
                    BigRational::from_integer(binomial(u64::from(p + l), u64::from(p)))
                );
            }
        }
    }

    #[test]
    fn recurrence_is_exact() {
        for p in 0..15 {
            for l in 0..4 {
                assert!(recurrence_holds(p, l), "p={p} l={l}");
            }
        }
    }

    #[test]
    fn float_recurrence_agrees_with_rational() {
        for p in 0..10 {
            for l in 0..3 {
                let poly = laguerre_poly(p, l);
                for &v in &[0.0, 0.3, 1.7, 5.5] {
                    let a = poly.eval(v);
                    let b = laguerre_f64(p, l, v);
                    assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "p={p} l={l} v={v}");
                }
            }
        }
    }

    #[test]
    fn mode_at_waist_centre() {
        let geom = BeamGeometry::new(1.0e-6, 2.0e-4).unwrap();
        let u = mode_value(0, 0, CylindricalPoint::new(0.0, 0.0, 0.0), &geom);
        assert!((u.re - (2.0 / PI).sqrt() / geom.waist).abs() < 1e-9 * u.re);
        assert!(u.im.abs() < 1e-12 * u.re);
    }

    #[test]
    fn gouy_phase_at_rayleigh_length() {
        let geom = BeamGeometry::new(8.0e-7, 1.0e-4).unwrap();
        let x = geom.rayleigh_length();
        let u = mode_value(0, 0, CylindricalPoint::new(0.0, 0.0, x), &geom);
        let expected = (2.0 / PI).sqrt() / geom.beam_size(x);
        assert!((u.norm() - expected).abs() < 1e-9 * expected);
        assert!((u.arg() + PI / 4.0).abs() < 1e-12);
        assert!((geom.beam_size(x) - geom.waist * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(BeamGeometry::new(0.0, 1.0).is_err());
        assert!(BeamGeometry::new(1.0, -1.0).is_err());
    }

    #[test]
    fn quadrature_rule_integrates_moments() {
        let rule = GaussLaguerreRule::new(64);
        let mut fact = 1.0;
        for k in 0..40 {
            if k > 0 {
                fact *= k as f64;
            }
            let got = rule.integrate(|t| t.powi(k));
            assert!((got - fact).abs() <= 1e-12 * fact, "k={k}: {got} vs {fact}");
        }
        let total: f64 = GaussLaguerreRule::new(128).weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-14, "{total}");
    }

    #[test]
    fn overlap_values() {
        assert!((overlap_quadrature(0, 0, 0, 0, 0, 0, 0, 0).unwrap() - 1.0).abs() < 1e-13);
        assert!((overlap_quadrature(1, 0, 0, 0, 0, 0, 0, 0).unwrap() - 0.5).abs() < 1e-13);
        assert!((overlap_quadrature(2, 2, 0, 0, 0, 0, 0, 0).unwrap() - 0.375).abs() < 1e-13);
    }
}

//! Exact nonlinear mode-coupling coefficients `λ_pqrs^(lmno)`.
//!
//! Each Laguerre polynomial is written in the basis `e_k = v^k / k!`, where
//! products stay integral (`e_a e_b = C(a+b, a) e_{a+b}`) and the integral
//! against `2 e^{-2v}` is `2^{-k}`. Every coefficient is therefore a dyadic
//! rational computed with big integers only.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::modes::{binomial, BeamGeometry};

/// Radial and angular indices of one coupling coefficient. The first two
/// modes enter conjugated, the last two do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CouplingIndex {
    pub radial: [u32; 4],
    pub angular: [u32; 4],
}

impl CouplingIndex {
    pub fn new(radial: [u32; 4], angular: [u32; 4]) -> Self {
        Self { radial, angular }
    }

    pub fn circular(p: u32, q: u32, r: u32, s: u32) -> Self {
        Self::new([p, q, r, s], [0; 4])
    }

    pub fn satisfies_selection_rule(&self) -> bool {
        let [l, m, n, o] = self.angular;
        l + m == n + o
    }

    /// Representative under `(p,l)↔(q,m)`, `(r,n)↔(s,o)` and the exchange of
    /// the two pairs, which leave the overlap integral unchanged once the
    /// selection rule holds.
    pub fn canonical(&self) -> Self {
        let mut modes = [
            (self.radial[0], self.angular[0]),
            (self.radial[1], self.angular[1]),
            (self.radial[2], self.angular[2]),
            (self.radial[3], self.angular[3]),
        ];
        if modes[0] > modes[1] {
            modes.swap(0, 1);
        }
        if modes[2] > modes[3] {
            modes.swap(2, 3);
        }
        if (modes[2], modes[3]) < (modes[0], modes[1]) {
            modes = [modes[2], modes[3], modes[0], modes[1]];
        }
        Self {
            radial: modes.map(|m| m.0),
            angular: modes.map(|m| m.1),
        }
    }
}

/// `L_p^{(l)}` in the `e_k` basis: `(-1)^k C(p+l, p-k)`.
fn laguerre_e_basis(p: u32, l: u32) -> Vec<BigInt> {
    (0..=u64::from(p))
        .map(|k| {
            let c = binomial(u64::from(p + l), u64::from(p) - k);
            if k % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

fn e_basis_product(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y * binomial((i + j) as u64, i as u64);
        }
    }
    out
}

fn compute_lambda(index: &CouplingIndex) -> BigRational {
    let [p, q, r, s] = index.radial;
    let [l, m, n, o] = index.angular;
    let product = [(q, m), (r, n), (s, o)]
        .iter()
        .fold(laguerre_e_basis(p, l), |acc, &(k, a)| {
            e_basis_product(&acc, &laguerre_e_basis(k, a))
        });
    // v^L e_k = (k+L)!/k! e_{k+L}, and 2∫ e_j e^{-2v} dv = 2^{-j}.
    let shift = u64::from(l + m);
    let top = product.len() as u64 - 1 + shift;
    let mut numerator = BigInt::zero();
    for (k, c) in product.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let k = k as u64;
        let mut rising = BigInt::one();
        for i in 1..=shift {
            rising *= k + i;
        }
        numerator += c * rising * (BigInt::one() << (top - k - shift));
    }
    BigRational::new(numerator, BigInt::one() << top)
}

/// Exact `λ_pqrs^(lmno)`; zero when `l+m ≠ n+o`.
#[allow(clippy::too_many_arguments)]
pub fn lambda_exact(p: u32, q: u32, r: u32, s: u32, l: u32, m: u32, n: u32, o: u32) -> BigRational {
    CouplingTensor::global().get(CouplingIndex::new([p, q, r, s], [l, m, n, o]))
}

/// Memoized coupling coefficients. Lookups take a read lock; a miss computes
/// outside any lock and inserts under the write lock.
#[derive(Debug, Default)]
pub struct CouplingTensor {
    cache: RwLock<HashMap<CouplingIndex, BigRational>>,
}

impl CouplingTensor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide instance shared by the solvers.
    pub fn global() -> &'static CouplingTensor {
        static TENSOR: OnceLock<CouplingTensor> = OnceLock::new();
        TENSOR.get_or_init(CouplingTensor::new)
    }

    pub fn get(&self, index: CouplingIndex) -> BigRational {
        if !index.satisfies_selection_rule() {
            return BigRational::zero();
        }
        let key = index.canonical();
        if let Some(v) = self.cache.read().expect("coupling cache poisoned").get(&key) {
            return v.clone();
        }
        let value = compute_lambda(&key);
        self.cache
            .write()
            .expect("coupling cache poisoned")
            .entry(key)
            .or_insert(value)
            .clone()
    }

    pub fn get_f64(&self, index: CouplingIndex) -> f64 {
        to_f64(&self.get(index))
    }

    pub fn circular(&self, p: u32, q: u32, r: u32, s: u32) -> BigRational {
        self.get(CouplingIndex::circular(p, q, r, s))
    }

    pub fn circular_f64(&self, p: u32, q: u32, r: u32, s: u32) -> f64 {
        self.get_f64(CouplingIndex::circular(p, q, r, s))
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().expect("coupling cache poisoned").len()
    }

    /// Dense `n^4` table of circular coefficients between the listed radial
    /// orders, laid out as `[a][b][c][d]` with `a` fastest-varying last.
    pub fn table(&self, orders: &[u32]) -> CouplingTable {
        let n = orders.len();
        let mut values = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        values[((a * n + b) * n + c) * n + d] =
                            self.circular_f64(orders[a], orders[b], orders[c], orders[d]);
                    }
                }
            }
        }
        CouplingTable { n, values }
    }
}

pub(crate) fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Floating-point coefficient table for a fixed list of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    n: usize,
    values: Vec<f64>,
}

impl CouplingTable {
    pub fn modes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.n;
        self.values[((a * n + b) * n + c) * n + d]
    }
}

/// `exp[-2i(p+q-r-s) arctan(x/l_R)]` together with the transverse area
/// factor `1/(π w²)` of the full coefficient `Λ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GouyFactor {
    pub phase: Complex64,
    pub transverse_norm: f64,
}

impl GouyFactor {
    pub fn new(radial: [u32; 4], x: f64, geom: &BeamGeometry) -> Self {
        let [p, q, r, s] = radial.map(i64::from);
        let angle = -2.0 * (p + q - r - s) as f64 * geom.gouy_angle(x);
        let w = geom.beam_size(x);
        Self {
            phase: Complex64::from_polar(1.0, angle),
            transverse_norm: 1.0 / (std::f64::consts::PI * w * w),
        }
    }

    /// At the waist of a thin medium the factor is real: `1/(π w0²)`.
    pub fn at_waist(geom: &BeamGeometry) -> Self {
        Self::new([0; 4], 0.0, geom)
    }
}

/// Full position-dependent coefficient `Λ_pqrs^(lmno)(x)`.
pub fn full_coupling(index: CouplingIndex, x: f64, geom: &BeamGeometry) -> Complex64 {
    let lambda = CouplingTensor::global().get_f64(index);
    let gouy = GouyFactor::new(index.radial, x, geom);
    gouy.phase * (lambda * gouy.transverse_norm)
}

/// Named coefficients used by the cavity models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shortcut {
    /// `λ_p = λ_{p000}`
    P,
    /// `λ_pq = λ_{pq00}`
    Pq,
    /// `λ_pp = λ_{pp00}`
    Pp,
    /// `λ_{ppp0}`
    Ppp0,
    /// `λ_{pppp}`
    Pppp,
}

/// `q` is only read by [`Shortcut::Pq`].
pub fn lambda_shortcut(kind: Shortcut, p: u32, q: u32) -> BigRational {
    let t = CouplingTensor::global();
    match kind {
        Shortcut::P => t.circular(p, 0, 0, 0),
        Shortcut::Pq => t.circular(p, q, 0, 0),
        Shortcut::Pp => t.circular(p, p, 0, 0),
        Shortcut::Ppp0 => t.circular(p, p, p, 0),
        Shortcut::Pppp => t.circular(p, p, p, p),
    }
}

/// Perturbation sums over the higher transverse modes of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuConstants {
    /// `Σ_{p≥1} λ_p² / p`
    pub mu1: f64,
    /// `Σ_{p≥1} λ_p² / p²`
    pub mu2: f64,
    /// `Σ_{p,q≥1} λ_p λ_q λ_pq / (pq)`
    pub mu3: f64,
    pub cutoff: u32,
    /// Upper bound on the largest of the three truncation errors.
    pub tail_bound: f64,
}

/// Truncated `μ` sums with `p, q ≤ cutoff`.
///
/// `λ_p` comes from the exact tensor. `λ_pq` uses the two-index closed form
/// `C(p+q, p) / 2^{p+q}`, which the coupling tests pin against the tensor; the
/// tensor itself would need degree-`2·cutoff` products here.
pub fn mu_constants(cutoff: u32) -> MuConstants {
    let cutoff = cutoff.max(1);
    let tensor = CouplingTensor::global();
    let lambda_p: Vec<f64> = (0..=cutoff).map(|p| tensor.circular_f64(p, 0, 0, 0)).collect();

    // Smallest terms first.
    let mut mu1 = 0.0;
    let mut mu2 = 0.0;
    for p in (1..=cutoff).rev() {
        let l2 = lambda_p[p as usize] * lambda_p[p as usize];
        let pf = f64::from(p);
        mu1 += l2 / pf;
        mu2 += l2 / (pf * pf);
    }

    let mut mu3 = 0.0;
    for total in (2..=2 * cutoff).rev() {
        for p in total.saturating_sub(cutoff).max(1)..=cutoff.min(total - 1) {
            let q = total - p;
            let pair = lambda_pair_f64(p, q);
            mu3 += lambda_p[p as usize] * lambda_p[q as usize] * pair / f64::from(p * q);
        }
    }

    let c = f64::from(cutoff);
    let geometric = 0.25f64.powi(cutoff as i32) / (3.0 * (c + 1.0));
    let tail_bound = geometric.max(0.5f64.powi(cutoff as i32));
    MuConstants {
        mu1,
        mu2,
        mu3,
        cutoff,
        tail_bound,
    }
}

/// `λ_{pq00} = C(p+q, p) / 2^{p+q}` in floating point.
pub fn lambda_pair_f64(p: u32, q: u32) -> f64 {
    binomial_f64(p + q, p) * 0.5f64.powi((p + q) as i32)
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(lambda_exact(0, 0, 0, 0, 0, 0, 0, 0), ratio(1, 1));
        assert_eq!(lambda_exact(3, 0, 0, 0, 0, 0, 0, 0), ratio(1, 8));
        assert_eq!(lambda_exact(2, 1, 0, 0, 0, 0, 0, 0), ratio(3, 8));
        assert_eq!(lambda_exact(2, 2, 0, 0, 0, 0, 0, 0), ratio(3, 8));
    }

    #[test]
    fn selection_rule() {
        assert!(lambda_exact(0, 0, 0, 0, 1, 0, 0, 0).is_zero());
        assert!(lambda_exact(1, 2, 0, 1, 2, 0, 1, 0).is_zero());
        assert!(!lambda_exact(0, 0, 0, 0, 1, 0, 1, 0).is_zero());
    }

    #[test]
    fn shortcut_pp_closed_form() {
        for p in 0..12u32 {
            let expected = BigRational::new(
                binomial(u64::from(2 * p), u64::from(p)),
                BigInt::one() << (2 * p),
            );
            assert_eq!(lambda_shortcut(Shortcut::Pp, p, 0), expected, "p={p}");
        }
        assert_eq!(lambda_shortcut(Shortcut::Pp, 4, 0), ratio(35, 128));
        assert_eq!(lambda_shortcut(Shortcut::P, 0, 0), ratio(1, 1));
    }

    #[test]
    fn pair_closed_form_matches_tensor() {
        for p in 0..10 {
            for q in 0..10 {
                let exact = to_f64(&lambda_shortcut(Shortcut::Pq, p, q));
                assert!((lambda_pair_f64(p, q) - exact).abs() <= 1e-16 * exact.max(1.0));
            }
        }
    }

    #[test]
    fn lambda_pp_asymptotics() {
        let value = to_f64(&lambda_shortcut(Shortcut::Pp, 50, 0));
        let asymptote = (1.0 / (50.0 * std::f64::consts::PI)).sqrt();
        assert!((value / asymptote - 1.0).abs() < 0.01);
    }

    #[test]
    fn canonical_key_is_idempotent_and_symmetric() {
        let idx = CouplingIndex::new([3, 1, 2, 0], [1, 2, 3, 0]);
        let c = idx.canonical();
        assert_eq!(c, c.canonical());
        let swapped = CouplingIndex::new([1, 3, 0, 2], [2, 1, 0, 3]);
        assert_eq!(swapped.canonical(), c);
        let groups = CouplingIndex::new([2, 0, 3, 1], [3, 0, 1, 2]);
        assert_eq!(groups.canonical(), c);
    }

    #[test]
    fn memo_is_shared() {
        let t = CouplingTensor::new();
        let a = t.circular(2, 1, 0, 3);
        let b = t.circular(3, 0, 1, 2);
        assert_eq!(a, b);
        assert_eq!(t.cached_len(), 1);
    }

    #[test]
    fn mu_values() {
        let mu = mu_constants(60);
        assert!((mu.mu1 - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((mu.mu2 - 0.268).abs() < 1e-3);
        assert!((mu.mu3 - 0.197).abs() < 1e-3);
        assert!(mu.tail_bound < 1e-17);
    }

    #[test]
    fn gouy_factor_is_unimodular() {
        let geom = BeamGeometry::new(1e-6, 1e-4).unwrap();
        let g = GouyFactor::new([3, 1, 0, 2], 0.7 * geom.rayleigh_length(), &geom);
        assert!((g.phase.norm() - 1.0).abs() < 1e-15);
        let waist = GouyFactor::at_waist(&geom);
        assert_eq!(waist.phase, Complex64::new(1.0, 0.0));
    }
}

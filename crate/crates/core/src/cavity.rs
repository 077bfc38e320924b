//! Normalized intracavity mean-field dynamics
//!
//! `dA_p/dτ = A_p^in − (1 + iφ_p) A_p + iK Σ λ_pqrs A_q* A_r A_s`
//!
//! with output `A_p^out = −A_p^in + 2A_p`, its steady states and their
//! linear stability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingTable, CouplingTensor};
use crate::error::{Error, Result};

/// Radial order `p`, angular order `l` and longitudinal index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub p: u32,
    pub l: u32,
    pub n: u32,
}

impl ModeIndex {
    pub const FUNDAMENTAL: ModeIndex = ModeIndex { p: 0, l: 0, n: 0 };

    pub fn new(p: u32, l: u32, n: u32) -> Self {
        Self { p, l, n }
    }

    pub fn radial(p: u32) -> Self {
        Self::new(p, 0, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    pub k: f64,
    pub phi0: f64,
    pub phi_t: f64,
    pub phi_l: f64,
    pub modes: Vec<ModeIndex>,
    /// Normalized input per mode, same order as `modes`.
    pub drive: Vec<Complex64>,
}

impl CavityConfig {
    pub fn single_mode(k: f64, phi0: f64) -> Self {
        Self::family(k, phi0, 0.0, 1)
    }

    /// Fundamental plus `p = 1..n_modes-1` of one longitudinal family, driven
    /// in the fundamental only.
    pub fn family(k: f64, phi0: f64, phi_t: f64, n_modes: usize) -> Self {
        let modes: Vec<_> = (0..n_modes as u32).map(ModeIndex::radial).collect();
        let mut drive = vec![Complex64::default(); modes.len()];
        if let Some(d) = drive.first_mut() {
            *d = Complex64::new(1.0, 0.0);
        }
        Self {
            k,
            phi0,
            phi_t,
            phi_l: 0.0,
            modes,
            drive,
        }
    }

    pub fn with_phi0(&self, phi0: f64) -> Self {
        Self {
            phi0,
            ..self.clone()
        }
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::invalid("k", "must be finite and non-negative"));
        }
        for (name, v) in [("phi0", self.phi0), ("phi_t", self.phi_t), ("phi_l", self.phi_l)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !self.modes.contains(&ModeIndex::FUNDAMENTAL) {
            return Err(Error::invalid("modes", "must contain the fundamental mode p = l = n = 0"));
        }
        if self.modes.iter().any(|m| m.l != 0) {
            return Err(Error::invalid("modes", "cavity modes must be circularly symmetric (l = 0)"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].contains(m) {
                return Err(Error::invalid("modes", format!("duplicate mode {m:?}")));
            }
        }
        if self.drive.len() != self.modes.len() {
            return Err(Error::invalid(
                "drive",
                format!("expected {} entries, got {}", self.modes.len(), self.drive.len()),
            ));
        }
        if self.drive.iter().any(|d| !(d.re.is_finite() && d.im.is_finite())) {
            return Err(Error::invalid("drive", "must be finite"));
        }
        Ok(())
    }

    /// `φ_p − φ0 = nφ_L + pφ_T` per mode.
    pub fn offsets(&self) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| f64::from(m.n) * self.phi_l + f64::from(m.p) * self.phi_t)
            .collect()
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.offsets().into_iter().map(|o| self.phi0 + o).collect()
    }

    pub fn fundamental_index(&self) -> usize {
        self.modes
            .iter()
            .position(|m| *m == ModeIndex::FUNDAMENTAL)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Lower,
    Middle,
    Upper,
    /// The curve has no turning point.
    Unique,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Lower => "lower",
            Branch::Middle => "middle",
            Branch::Upper => "upper",
            Branch::Unique => "unique",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub phi0: f64,
    pub amplitudes: Vec<Complex64>,
    pub outputs: Vec<Complex64>,
    /// `|A₀|²` of the fundamental mode.
    pub intensity: f64,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    pub branch: Option<Branch>,
    pub residual: f64,
}

impl SteadyState {
    pub fn fundamental(&self, config: &CavityConfig) -> Complex64 {
        self.amplitudes[config.fundamental_index()]
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
const MAX_NEWTON: usize = 60;

/// Evaluation engine for one configuration: detunings, drive and the dense
/// coupling table are fixed at construction.
#[derive(Debug, Clone)]
pub struct CavitySystem {
    k: f64,
    phi0: f64,
    offsets: Vec<f64>,
    drive: Vec<Complex64>,
    table: CouplingTable,
    fundamental: usize,
}

impl CavitySystem {
    pub fn new(config: &CavityConfig) -> Result<Self> {
        config.validate()?;
        let orders: Vec<u32> = config.modes.iter().map(|m| m.p).collect();
        Ok(Self {
            k: config.k,
            phi0: config.phi0,
            offsets: config.offsets(),
            drive: config.drive.clone(),
            table: CouplingTensor::global().table(&orders),
            fundamental: config.fundamental_index(),
        })
    }

    pub fn modes(&self) -> usize {
        self.offsets.len()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn set_phi0(&mut self, phi0: f64) {
        self.phi0 = phi0;
    }

    pub fn set_k(&mut self, k: f64) {
        self.k = k;
    }

    pub fn drive(&self) -> &[Complex64] {
        &self.drive
    }

    pub fn fundamental(&self) -> usize {
        self.fundamental
    }

    pub fn table(&self) -> &CouplingTable {
        &self.table
    }

    pub fn detuning(&self, j: usize) -> f64 {
        self.phi0 + self.offsets[j]
    }

    /// `Σ_qrs λ_jqrs A_q* A_r A_s` for every `j`.
    pub fn kerr_term(&self, a: &[Complex64]) -> Vec<Complex64> {
        let n = self.modes();
        let mut out = vec![Complex64::default(); n];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for q in 0..n {
                let aq = a[q].conj();
                for r in 0..n {
                    let qr = aq * a[r];
                    for s in 0..n {
                        acc += self.table.get(j, q, r, s) * qr * a[s];
                    }
                }
            }
            *o = acc;
        }
        out
    }

    /// Right-hand side of the evolution equation.
    pub fn residual(&self, a: &[Complex64]) -> Vec<Complex64> {
        let i = Complex64::i();
        self.kerr_term(a)
            .into_iter()
            .enumerate()
            .map(|(j, kerr)| self.drive[j] - Complex64::new(1.0, self.detuning(j)) * a[j] + i * self.k * kerr)
            .collect()
    }

    /// Holomorphic and anti-holomorphic parts `(J_h, J_a)` of the linearized
    /// field: `dF = J_h dA + J_a dA*`, linear loss and detuning included.
    pub fn jacobian_blocks(&self, a: &[Complex64]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let n = self.modes();
        let ik = Complex64::new(0.0, self.k);
        let mut jh = DMatrix::zeros(n, n);
        let mut ja = DMatrix::zeros(n, n);
        for p in 0..n {
            for t in 0..n {
                let mut h = Complex64::default();
                let mut c = Complex64::default();
                for q in 0..n {
                    for r in 0..n {
                        h += self.table.get(p, q, r, t) * a[q].conj() * a[r];
                        c += self.table.get(p, t, q, r) * a[q] * a[r];
                    }
                }
                jh[(p, t)] = 2.0 * ik * h;
                ja[(p, t)] = ik * c;
            }
            jh[(p, p)] -= Complex64::new(1.0, self.detuning(p));
        }
        (jh, ja)
    }

    /// Real `2N × 2N` Jacobian in the interleaved basis `(Re A_j, Im A_j)`.
    pub fn real_jacobian(&self, a: &[Complex64]) -> DMatrix<f64> {
        let (jh, ja) = self.jacobian_blocks(a);
        let n = self.modes();
        let i = Complex64::i();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for p in 0..n {
            for t in 0..n {
                let dx = jh[(p, t)] + ja[(p, t)];
                let dy = i * (jh[(p, t)] - ja[(p, t)]);
                m[(2 * p, 2 * t)] = dx.re;
                m[(2 * p + 1, 2 * t)] = dx.im;
                m[(2 * p, 2 * t + 1)] = dy.re;
                m[(2 * p + 1, 2 * t + 1)] = dy.im;
            }
        }
        m
    }

    /// Drift matrix of the fluctuations in the interleaved basis `(α_j, α_j*)`.
    pub fn drift(&self, a: &[Complex64]) -> DMatrix<Complex64> {
        let (jh, ja) = self.jacobian_blocks(a);
        let n = self.modes();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for p in 0..n {
            for t in 0..n {
                m[(2 * p, 2 * t)] = jh[(p, t)];
                m[(2 * p, 2 * t + 1)] = ja[(p, t)];
                m[(2 * p + 1, 2 * t)] = ja[(p, t)].conj();
                m[(2 * p + 1, 2 * t + 1)] = jh[(p, t)].conj();
            }
        }
        m
    }

    /// `S(ω) = −1 + 2(−iω − L)⁻¹` mapping input to output fluctuations.
    pub fn scattering(&self, a: &[Complex64], omega: f64) -> Result<DMatrix<Complex64>> {
        scattering_from_drift(&self.drift(a), omega)
    }

    /// Eigenvalues of the linearized dynamics at a steady state.
    pub fn stability_eigenvalues(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut eig: Vec<Complex64> = self.real_jacobian(a).complex_eigenvalues().iter().copied().collect();
        eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
        eig
    }

    /// Damped Newton iteration at fixed `φ0` from `guess`.
    pub fn solve(&self, guess: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.modes();
        if guess.len() != n {
            return Err(Error::invalid("initial guess", format!("expected {n} amplitudes")));
        }
        let mut a = guess.to_vec();
        let mut res = max_norm(&self.residual(&a));
        for _ in 0..MAX_NEWTON {
            if res <= RESIDUAL_TOLERANCE {
                return Ok(a);
            }
            let f = to_real(&self.residual(&a));
            let Some(step) = self.real_jacobian(&a).lu().solve(&(-f)) else {
                break;
            };
            let mut damping = 1.0;
            loop {
                let trial: Vec<Complex64> = a
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| z + damping * Complex64::new(step[2 * j], step[2 * j + 1]))
                    .collect();
                let trial_res = max_norm(&self.residual(&trial));
                if trial_res < res || damping < 1e-4 {
                    a = trial;
                    res = trial_res;
                    break;
                }
                damping *= 0.5;
            }
        }
        if res <= RESIDUAL_TOLERANCE {
            Ok(a)
        } else {
            Err(Error::NoConvergence {
                iterations: MAX_NEWTON,
                residual: res,
            })
        }
    }

    /// Packages a converged solution with outputs and stability.
    pub fn steady_state(&self, a: Vec<Complex64>) -> SteadyState {
        let outputs = a
            .iter()
            .zip(&self.drive)
            .map(|(&x, &d)| 2.0 * x - d)
            .collect();
        let eigenvalues = self.stability_eigenvalues(&a);
        let stable = eigenvalues.iter().all(|e| e.re <= 0.0);
        SteadyState {
            phi0: self.phi0,
            intensity: a[self.fundamental].norm_sqr(),
            residual: max_norm(&self.residual(&a)),
            outputs,
            amplitudes: a,
            eigenvalues,
            stability: if stable { Stability::Stable } else { Stability::Unstable },
            branch: None,
        }
    }

    /// Linear-cavity amplitudes `A_j^in / (1 + iφ_j)`.
    pub fn linear_solution(&self) -> Vec<Complex64> {
        (0..self.modes())
            .map(|j| self.drive[j] / Complex64::new(1.0, self.detuning(j)))
            .collect()
    }

    /// Solution at the current `φ0` grown from the linear cavity by ramping
    /// `K` from zero.
    pub fn solve_by_k_homotopy(&self) -> Result<Vec<Complex64>> {
        let target = self.k;
        let mut sys = self.clone();
        sys.k = 0.0;
        let mut a = sys.linear_solution();
        let mut k = 0.0;
        let mut dk = target / 20.0;
        while k < target {
            let next = (k + dk).min(target);
            sys.k = next;
            match sys.solve(&a) {
                Ok(sol) => {
                    a = sol;
                    k = next;
                    dk *= 1.5;
                }
                Err(e) => {
                    dk *= 0.5;
                    if dk < 1e-8 * target.max(1.0) {
                        return Err(e);
                    }
                }
            }
        }
        sys.k = target;
        sys.solve(&a)
    }
}

pub(crate) fn scattering_from_drift(drift: &DMatrix<Complex64>, omega: f64) -> Result<DMatrix<Complex64>> {
    let n = drift.nrows();
    let mut m = -drift.clone();
    for j in 0..n {
        m[(j, j)] -= Complex64::new(0.0, omega);
    }
    let inv = m.try_inverse().ok_or(Error::Divergence { omega })?;
    if inv.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Divergence { omega });
    }
    Ok(inv * Complex64::new(2.0, 0.0) - DMatrix::identity(n, n))
}

pub(crate) fn to_real(v: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}

pub(crate) fn from_real(v: &DVector<f64>) -> Vec<Complex64> {
    v.as_slice()
        .chunks(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect()
}

pub(crate) fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// All steady states of the single-mode cavity: real roots `ℐ` of
/// `ℐ[1 + (φ0 − Kℐ)²] = 1` with `A₀ = 1/(1 + i(φ0 − Kℐ))`, by decreasing
/// intensity.
pub fn single_mode_steady(phi0: f64, k: f64) -> Result<Vec<SteadyState>> {
    let config = CavityConfig::single_mode(k, phi0);
    let system = CavitySystem::new(&config)?;
    let mut roots = single_mode_intensities(phi0, k);
    roots.sort_by(|a, b| b.total_cmp(a));
    let count = roots.len();
    Ok(roots
        .into_iter()
        .enumerate()
        .map(|(idx, intensity)| {
            let a0 = Complex64::new(1.0, 0.0) / Complex64::new(1.0, phi0 - k * intensity);
            let mut state = system.steady_state(vec![a0]);
            state.branch = Some(match (count, idx) {
                (1, _) => Branch::Unique,
                (_, 0) => Branch::Upper,
                (c, i) if i + 1 == c => Branch::Lower,
                _ => Branch::Middle,
            });
            state
        })
        .collect())
}

/// Roots in `(0, 1]` of `K²ℐ³ − 2φKℐ² + (1 + φ²)ℐ − 1`.
pub fn single_mode_intensities(phi0: f64, k: f64) -> Vec<f64> {
    let f = |x: f64| ((k * k * x - 2.0 * phi0 * k) * x + 1.0 + phi0 * phi0) * x - 1.0;
    if k == 0.0 {
        return vec![1.0 / (1.0 + phi0 * phi0)];
    }
    // f(0) = −1 and f(1) = (K − φ)² ≥ 0, so every root lies in (0, 1].
    let mut edges = vec![0.0];
    let disc = phi0 * phi0 - 3.0;
    if disc > 0.0 {
        let sq = disc.sqrt();
        for c in [(2.0 * phi0 - sq) / (3.0 * k), (2.0 * phi0 + sq) / (3.0 * k)] {
            if c > 0.0 && c < 1.0 {
                edges.push(c);
            }
        }
    }
    edges.push(1.0);
    let mut roots: Vec<f64> = Vec::new();
    for w in edges.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            // A tangential root sits on a critical point.
            if fhi.abs() < 1e-13 && hi < 1.0 {
                roots.push(hi);
            }
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo.signum() {
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
    if f(1.0) == 0.0 {
        roots.push(1.0);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    roots
}

/// Newton solution of the truncated multimode equations at `config.phi0`.
/// Without a guess the solution is grown from the linear cavity in `K`.
pub fn truncated_multimode_steady(config: &CavityConfig, guess: Option<&[Complex64]>) -> Result<SteadyState> {
    let system = CavitySystem::new(config)?;
    let a = match guess {
        Some(g) => system.solve(g)?,
        None => system.solve_by_k_homotopy()?,
    };
    Ok(system.steady_state(a))
}

pub fn stability_eigenvalues(state: &SteadyState, config: &CavityConfig) -> Result<Vec<Complex64>> {
    let system = CavitySystem::new(&config.with_phi0(state.phi0))?;
    Ok(system.stability_eigenvalues(&state.amplitudes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_cavity() {
        let s = single_mode_steady(0.0, 0.0).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].amplitudes[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let s = single_mode_steady(2.0, 0.0).unwrap();
        assert!((s[0].intensity - 0.2).abs() < 1e-15);
        assert!(s[0].eigenvalues.iter().all(|e| (e.re + 1.0).abs() < 1e-12));
    }

    #[test]
    fn bistable_interval_exists() {
        let counts: Vec<usize> = (0..400)
            .map(|i| single_mode_intensities(-2.0 + 0.02 * f64::from(i), 2.5).len())
            .collect();
        assert!(counts.contains(&3));
        assert!(counts.iter().all(|&c| c == 1 || c == 3 || c == 2));
    }

    #[test]
    fn middle_branch_is_unstable() {
        let s = single_mode_steady(2.4, 2.5).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].branch, Some(Branch::Middle));
        assert!(!s[1].is_stable());
        assert!(s[0].is_stable() && s[2].is_stable());
    }

    #[test]
    fn newton_reduces_to_single_mode() {
        for &phi in &[-1.0, 0.5, 2.4, 4.0] {
            for exact in single_mode_steady(phi, 2.5).unwrap() {
                let config = CavityConfig::single_mode(2.5, phi);
                let guess = [exact.amplitudes[0] * 1.01];
                let s = truncated_multimode_steady(&config, Some(&guess)).unwrap();
                assert!((s.amplitudes[0] - exact.amplitudes[0]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn no_drive_no_field() {
        let mut config = CavityConfig::family(1.0, 0.3, 20.0, 4);
        config.drive[0] = Complex64::default();
        let s = truncated_multimode_steady(&config, None).unwrap();
        assert!(s.amplitudes.iter().all(|a| a.norm() < 1e-14));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let config = CavityConfig::family(1.3, 0.4, 3.0, 4);
        let system = CavitySystem::new(&config).unwrap();
        let a = [
            Complex64::new(0.7, -0.2),
            Complex64::new(0.1, 0.3),
            Complex64::new(-0.2, 0.05),
            Complex64::new(0.02, -0.1),
        ];
        let jac = system.real_jacobian(&a);
        let h = 1e-6;
        for col in 0..8 {
            let mut plus = a;
            let mut minus = a;
            let d = if col % 2 == 0 { Complex64::new(h, 0.0) } else { Complex64::new(0.0, h) };
            plus[col / 2] += d;
            minus[col / 2] -= d;
            let fd = (to_real(&system.residual(&plus)) - to_real(&system.residual(&minus))) / (2.0 * h);
            for row in 0..8 {
                assert!((fd[row] - jac[(row, col)]).abs() < 1e-8, "({row},{col})");
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(CavityConfig::single_mode(-1.0, 0.0).validate().is_err());
        let mut c = CavityConfig::family(1.0, 0.0, 5.0, 3);
        c.modes[0] = ModeIndex::new(0, 1, 0);
        assert!(c.validate().is_err());
        let mut c = CavityConfig::family(1.0, 0.0, 5.0, 3);
        c.drive.pop();
        assert!(c.validate().is_err());
        let mut c = CavityConfig::family(1.0, 0.0, 5.0, 3);
        c.modes[2] = c.modes[1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_cavity_scattering_is_unitary() {
        let config = CavityConfig::family(0.0, 0.7, 4.0, 3);
        let system = CavitySystem::new(&config).unwrap();
        let a = system.linear_solution();
        let s = system.scattering(&a, 0.9).unwrap();
        let eye = DMatrix::<Complex64>::identity(6, 6);
        assert!((&s * s.adjoint() - eye).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn steady_states_conserve_flux(phi in -2.0f64..5.0, k in 0.0f64..3.0) {
            let config = CavityConfig::family(k, phi, 7.0, 3);
            if let Ok(s) = truncated_multimode_steady(&config, None) {
                let out: f64 = s.outputs.iter().map(|z| z.norm_sqr()).sum();
                prop_assert!((out - 1.0).abs() < 1e-10);
                prop_assert!(s.residual <= RESIDUAL_TOLERANCE);
                for ((o, a), d) in s.outputs.iter().zip(&s.amplitudes).zip(&config.drive) {
                    prop_assert_eq!(*o, 2.0 * a - d);
                }
            }
        }

        #[test]
        fn single_mode_roots_satisfy_cubic(phi in -3.0f64..6.0, k in 0.0f64..4.0) {
            for i in single_mode_intensities(phi, k) {
                prop_assert!(i > 0.0 && i <= 1.0);
                prop_assert!((i * (1.0 + (phi - k * i).powi(2)) - 1.0).abs() < 1e-10);
            }
        }
    }
}

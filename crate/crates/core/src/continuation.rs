//! Pseudo-arclength continuation of cavity steady states in `φ0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{
    from_real, max_norm, to_real, Branch, CavityConfig, CavitySystem, SteadyState, RESIDUAL_TOLERANCE,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    pub max_corrector: usize,
}

impl ContinuationSettings {
    /// Step bounds scaled to a `φ` span covered in about `steps` samples.
    pub fn for_span(span: f64, steps: usize) -> Self {
        let max_step = span / steps.max(1) as f64;
        Self {
            initial_step: 0.25 * max_step,
            min_step: 1e-9,
            max_step,
            max_points: 200 * steps.max(1) + 1000,
            max_corrector: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub phi: f64,
    pub intensity: f64,
    pub amplitudes: Vec<Complex64>,
    pub branch: Branch,
    pub stable: bool,
    pub max_real_eigenvalue: f64,
    /// Index of the monotone segment between turning points.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub phi: f64,
    pub intensity: f64,
    pub amplitudes: Vec<Complex64>,
    /// Eigenvalue of the linearized dynamics with the smallest `|Re|`.
    pub critical_eigenvalue: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistabilityCurve {
    pub samples: Vec<CurveSample>,
    pub turning_points: Vec<TurningPoint>,
}

impl BistabilityCurve {
    pub fn max_intensity(&self) -> f64 {
        self.samples.iter().map(|s| s.intensity).fold(0.0, f64::max)
    }

    /// Intensities where the curve crosses `φ`, by linear interpolation
    /// between consecutive samples.
    pub fn intensities_at(&self, phi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (lo, hi) = if a.phi <= b.phi { (a, b) } else { (b, a) };
            if phi < lo.phi || phi > hi.phi || (phi == hi.phi && hi.phi != lo.phi) {
                continue;
            }
            let t = if hi.phi == lo.phi { 0.0 } else { (phi - lo.phi) / (hi.phi - lo.phi) };
            out.push(lo.intensity + t * (hi.intensity - lo.intensity));
        }
        if let Some(last) = self.samples.last() {
            if last.phi == phi {
                out.push(last.intensity);
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    /// Smallest Euclidean distance from `(φ, ℐ)` to the polyline.
    pub fn distance_to(&self, phi: f64, intensity: f64) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let (ax, ay) = (w[0].phi, w[0].intensity);
                let (bx, by) = (w[1].phi, w[1].intensity);
                let (dx, dy) = (bx - ax, by - ay);
                let len2 = dx * dx + dy * dy;
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (((phi - ax) * dx + (intensity - ay) * dy) / len2).clamp(0.0, 1.0)
                };
                ((ax + t * dx - phi).powi(2) + (ay + t * dy - intensity).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Continuation state `z = (Re A_0, Im A_0, …, φ0)`.
struct Tracker {
    system: CavitySystem,
    settings: ContinuationSettings,
}

impl Tracker {
    fn split(&self, z: &DVector<f64>) -> (Vec<Complex64>, f64) {
        let n = z.len() - 1;
        (from_real(&z.rows(0, n).into_owned()), z[n])
    }

    fn at(&self, phi: f64) -> CavitySystem {
        let mut s = self.system.clone();
        s.set_phi0(phi);
        s
    }

    fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        let (a, phi) = self.split(z);
        to_real(&self.at(phi).residual(&a))
    }

    /// `[∂G/∂x | ∂G/∂φ0]`.
    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let (a, phi) = self.split(z);
        let n = 2 * a.len();
        let jx = self.at(phi).real_jacobian(&a);
        let mut m = DMatrix::zeros(n, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&jx);
        for (j, aj) in a.iter().enumerate() {
            // ∂F_j/∂φ0 = −i A_j
            m[(2 * j, n)] = aj.im;
            m[(2 * j + 1, n)] = -aj.re;
        }
        m
    }

    fn tangent(&self, z: &DVector<f64>, reference: &DVector<f64>) -> Option<DVector<f64>> {
        let j = self.jacobian(z);
        let n = j.nrows();
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n + 1)).copy_from(&j);
        aug.row_mut(n).copy_from(&reference.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let t = aug.lu().solve(&rhs)?;
        let norm = t.norm();
        (norm.is_finite() && norm > 0.0).then(|| t / norm)
    }

    /// Predictor along `t` by `h`, then Newton on the arclength-augmented
    /// system. Returns the corrected point and the iteration count.
    fn step(&self, z: &DVector<f64>, t: &DVector<f64>, h: f64) -> Option<(DVector<f64>, usize)> {
        let predicted = z + t * h;
        let mut w = predicted.clone();
        let n = w.len() - 1;
        for it in 0..self.settings.max_corrector {
            let g = self.residual(&w);
            let arc = t.dot(&(&w - &predicted));
            let gmax = max_norm(&from_real(&g));
            if gmax <= RESIDUAL_TOLERANCE && arc.abs() <= 1e-12 {
                return Some((w, it));
            }
            let mut aug = DMatrix::zeros(n + 1, n + 1);
            aug.view_mut((0, 0), (n, n + 1)).copy_from(&self.jacobian(&w));
            aug.row_mut(n).copy_from(&t.transpose());
            let mut rhs = DVector::zeros(n + 1);
            rhs.rows_mut(0, n).copy_from(&(-g));
            rhs[n] = -arc;
            let dw = aug.lu().solve(&rhs)?;
            w += &dw;
            if !w.iter().all(|x| x.is_finite()) {
                return None;
            }
        }
        let g = self.residual(&w);
        (max_norm(&from_real(&g)) <= RESIDUAL_TOLERANCE).then_some((w, self.settings.max_corrector))
    }

    /// Bisection on the step length for the point where the `φ` component
    /// of the tangent vanishes.
    fn locate_fold(&self, z: &DVector<f64>, t: &DVector<f64>, h: f64) -> Option<DVector<f64>> {
        let n = z.len() - 1;
        let sign0 = t[n].signum();
        let (mut lo, mut hi) = (0.0, h);
        let mut best = None;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let (w, _) = self.step(z, t, mid)?;
            let tw = self.tangent(&w, t)?;
            best = Some(w);
            if tw[n].abs() < 1e-13 {
                break;
            }
            if tw[n].signum() == sign0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        best
    }
}

/// Traces the steady-state curve of `config` for `φ0` from `phi_min` to
/// `phi_max`, following every turning point on the way.
pub fn bistability_scan(config: &CavityConfig, phi_min: f64, phi_max: f64, steps: usize) -> Result<BistabilityCurve> {
    if !(phi_min.is_finite() && phi_max.is_finite() && phi_max > phi_min) {
        return Err(Error::invalid("phi range", "need finite phi_min < phi_max"));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "must be positive"));
    }
    let settings = ContinuationSettings::for_span(phi_max - phi_min, steps);
    bistability_scan_with(config, phi_min, phi_max, settings)
}

pub fn bistability_scan_with(
    config: &CavityConfig,
    phi_min: f64,
    phi_max: f64,
    settings: ContinuationSettings,
) -> Result<BistabilityCurve> {
    let system = CavitySystem::new(&config.with_phi0(phi_min))?;
    let start = system.solve_by_k_homotopy()?;
    let tracker = Tracker { system, settings };

    let dim = 2 * start.len();
    let mut z = to_real(&start).push(phi_min);
    let mut e_phi = DVector::zeros(dim + 1);
    e_phi[dim] = 1.0;
    let mut t = tracker
        .tangent(&z, &e_phi)
        .ok_or(Error::ContinuationFailed { phi: phi_min, min_step: settings.min_step })?;

    let mut points = vec![z.clone()];
    let mut segments = vec![0usize];
    let mut folds: Vec<DVector<f64>> = Vec::new();
    let mut h = settings.initial_step;

    while points.len() < settings.max_points {
        let attempt = tracker
            .step(&z, &t, h)
            .and_then(|(w, its)| tracker.tangent(&w, &t).map(|tw| (w, tw, its)))
            .filter(|(_, tw, _)| tw.dot(&t) > 0.5);
        let Some((w, tw, its)) = attempt else {
            h *= 0.5;
            if h < settings.min_step {
                return Err(Error::ContinuationFailed {
                    phi: z[dim],
                    min_step: settings.min_step,
                });
            }
            continue;
        };
        if tw[dim].signum() != t[dim].signum() && t[dim] != 0.0 {
            if let Some(f) = tracker.locate_fold(&z, &t, h) {
                folds.push(f);
            }
        }
        let segment = folds.len();
        let phi = w[dim];
        if phi >= phi_max || phi <= phi_min - 1e-12 {
            let target = phi.clamp(phi_min, phi_max);
            let (a_prev, phi_prev) = tracker.split(&z);
            let (a_next, _) = tracker.split(&w);
            let s = ((target - phi_prev) / (phi - phi_prev)).clamp(0.0, 1.0);
            let guess: Vec<Complex64> = a_prev.iter().zip(&a_next).map(|(p, q)| p + (q - p) * s).collect();
            let end = tracker.at(target).solve(&guess).unwrap_or(a_next);
            points.push(to_real(&end).push(target));
            segments.push(segment);
            break;
        }
        points.push(w.clone());
        segments.push(segment);
        z = w;
        t = tw;
        h = if its <= 3 {
            (h * 1.5).min(settings.max_step)
        } else if its >= 6 {
            h * 0.6
        } else {
            h
        };
    }
    if points.len() >= settings.max_points {
        return Err(Error::ContinuationFailed {
            phi: z[dim],
            min_step: settings.min_step,
        });
    }

    let states: Vec<SteadyState> = points
        .iter()
        .map(|p| {
            let (a, phi) = tracker.split(p);
            tracker.at(phi).steady_state(a)
        })
        .collect();
    let turning_points = folds
        .iter()
        .map(|f| {
            let (a, phi) = tracker.split(f);
            let state = tracker.at(phi).steady_state(a);
            let critical = state
                .eigenvalues
                .iter()
                .copied()
                .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()))
                .unwrap_or_default();
            TurningPoint {
                phi,
                intensity: state.intensity,
                amplitudes: state.amplitudes,
                critical_eigenvalue: critical,
            }
        })
        .collect::<Vec<_>>();

    let mut samples = Vec::with_capacity(states.len());
    for (s, segment) in states.into_iter().zip(segments) {
        samples.push(CurveSample {
            phi: s.phi0,
            intensity: s.intensity,
            max_real_eigenvalue: s.max_real_eigenvalue(),
            stable: s.is_stable(),
            amplitudes: s.amplitudes,
            branch: Branch::Unique,
            segment,
        });
    }
    let mut curve = BistabilityCurve {
        samples,
        turning_points,
    };
    label_branches(&mut curve);
    Ok(curve)
}

/// A single S-shape is labelled by segment. Curves with more turning points
/// use the intensity rank where at least three solutions coexist and the
/// segment elsewhere.
fn label_branches(curve: &mut BistabilityCurve) {
    let folds = curve.turning_points.len();
    let last_segment = curve.samples.last().map_or(0, |s| s.segment);
    let labels: Vec<Branch> = curve
        .samples
        .iter()
        .map(|s| {
            if folds == 0 {
                return Branch::Unique;
            }
            let levels = if folds == 2 { Vec::new() } else { curve.intensities_at(s.phi) };
            if levels.len() >= 3 {
                let below = levels.iter().filter(|&&x| x < s.intensity - 1e-9).count();
                return if below == 0 {
                    Branch::Lower
                } else if below + 1 >= levels.len() {
                    Branch::Upper
                } else {
                    Branch::Middle
                };
            }
            if s.segment == 0 {
                Branch::Upper
            } else if s.segment == last_segment {
                Branch::Lower
            } else {
                Branch::Middle
            }
        })
        .collect();
    for (s, l) in curve.samples.iter_mut().zip(labels) {
        s.branch = l;
    }
}

/// Default offset of the working point from the turning point, in units of
/// the bistable width.
pub const DEFAULT_EPSILON: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingPoint {
    pub state: SteadyState,
    pub phi_turn: f64,
    pub width: f64,
    pub epsilon: f64,
}

/// Steady state on the branch leading into the first turning point `φ_t`
/// met along the scan, at `φ_t − εW` with `W` the distance to the next
/// turning point.
pub fn working_point(config: &CavityConfig, curve: &BistabilityCurve, epsilon: f64) -> Result<WorkingPoint> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be finite and non-negative"));
    }
    let [first, second, ..] = curve.turning_points.as_slice() else {
        return Err(Error::NoTurningPoint(format!(
            "{} turning point(s) on the scanned curve",
            curve.turning_points.len()
        )));
    };
    let width = (first.phi - second.phi).abs();
    let target = first.phi - epsilon * width;
    let head: Vec<&CurveSample> = curve.samples.iter().filter(|s| s.segment == 0).collect();
    let guess: Vec<Complex64> = match head.windows(2).find(|w| w[0].phi <= target && target <= w[1].phi) {
        Some(w) => {
            let s = if w[1].phi == w[0].phi { 0.0 } else { (target - w[0].phi) / (w[1].phi - w[0].phi) };
            w[0].amplitudes
                .iter()
                .zip(&w[1].amplitudes)
                .map(|(a, b)| a + (b - a) * s)
                .collect()
        }
        None => first.amplitudes.clone(),
    };
    let system = CavitySystem::new(&config.with_phi0(target))?;
    let a = system.solve(&guess)?;
    let mut state = system.steady_state(a);
    state.branch = Some(Branch::Upper);
    Ok(WorkingPoint {
        state,
        phi_turn: first.phi,
        width,
        epsilon,
    })
}

/// Residual of the fundamental-mode amplitude at a sample, for diagnostics.
pub fn sample_residual(config: &CavityConfig, sample: &CurveSample) -> Result<f64> {
    let system = CavitySystem::new(&config.with_phi0(sample.phi))?;
    Ok(max_norm(&system.residual(&sample.amplitudes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::single_mode_intensities;

    fn single(k: f64) -> BistabilityCurve {
        bistability_scan(&CavityConfig::single_mode(k, 0.0), -2.0, 6.0, 400).unwrap()
    }

    #[test]
    fn single_mode_s_curve() {
        let curve = single(2.5);
        assert_eq!(curve.turning_points.len(), 2);
        assert!(curve.max_intensity() <= 1.0 + 1e-12);
        // Folds from (1+u²)² = 2Ku, φ = u + K/(1+u²).
        let upper = &curve.turning_points[0];
        let lower = &curve.turning_points[1];
        assert!(upper.phi > lower.phi);
        for tp in &curve.turning_points {
            let roots = single_mode_intensities(tp.phi, 2.5);
            assert!(roots.iter().any(|r| (r - tp.intensity).abs() < 1e-5));
            assert!(tp.critical_eigenvalue.re.abs() < 1e-6, "{:?}", tp.critical_eigenvalue);
        }
        for s in &curve.samples {
            assert!(sample_residual(&CavityConfig::single_mode(2.5, 0.0), s).unwrap() <= RESIDUAL_TOLERANCE);
        }
    }

    #[test]
    fn branch_labels_and_stability() {
        let curve = single(2.5);
        for s in &curve.samples {
            match s.branch {
                Branch::Middle => assert!(!s.stable),
                Branch::Upper | Branch::Lower => {
                    assert!(s.stable || s.max_real_eigenvalue < 1e-6)
                }
                Branch::Unique => panic!("bistable curve has no unique samples"),
            }
        }
        assert!(curve.samples.iter().any(|s| s.branch == Branch::Middle));
    }

    #[test]
    fn linear_cavity_is_lorentzian() {
        let curve = single(0.0);
        assert!(curve.turning_points.is_empty());
        for s in &curve.samples {
            assert!((s.intensity - 1.0 / (1.0 + s.phi * s.phi)).abs() < 1e-12);
            assert_eq!(s.branch, Branch::Unique);
        }
    }

    #[test]
    fn arclength_ordering_covers_range() {
        let curve = single(2.5);
        assert_eq!(curve.samples.first().unwrap().phi, -2.0);
        assert_eq!(curve.samples.last().unwrap().phi, 6.0);
        let segments: Vec<usize> = curve.samples.iter().map(|s| s.segment).collect();
        assert!(segments.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*segments.last().unwrap(), 2);
    }

    #[test]
    fn working_point_sits_before_the_fold() {
        let config = CavityConfig::single_mode(2.5, 0.0);
        let curve = single(2.5);
        let wp = working_point(&config, &curve, 0.02).unwrap();
        assert!(wp.state.phi0 < wp.phi_turn);
        assert!((wp.phi_turn - wp.state.phi0 - 0.02 * wp.width).abs() < 1e-12);
        let roots = single_mode_intensities(wp.state.phi0, 2.5);
        assert!((wp.state.intensity - roots.last().unwrap()).abs() < 1e-10);
        assert!(wp.state.is_stable());
    }

    #[test]
    fn monostable_has_no_working_point() {
        let curve = single(1.0);
        assert!(matches!(
            working_point(&CavityConfig::single_mode(1.0, 0.0), &curve, 0.02),
            Err(Error::NoTurningPoint(_))
        ));
    }

    #[test]
    fn rejects_bad_range() {
        let c = CavityConfig::single_mode(1.0, 0.0);
        assert!(bistability_scan(&c, 1.0, 1.0, 10).is_err());
        assert!(bistability_scan(&c, 0.0, 1.0, 0).is_err());
    }
}

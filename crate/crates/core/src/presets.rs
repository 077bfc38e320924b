//! Working points near the upper turning point, a uniform view of the
//! fluctuation models, and the parameter bundles behind the six figures.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{Branch, CavityConfig, SteadyState};
use crate::continuation::{bistability_scan, working_point, BistabilityCurve, WorkingPoint};
use crate::error::{Error, Result};
use crate::perturbative::{brute_force_fluctuations, output_correlation, vacuum_input};
use crate::spectra::{
    intensity_noise, omega_grid, optimized_lo_noise, optimum_quadrature, LocalOscillator, NoiseSpectrumSeries,
    DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_POINTS,
};
use crate::twomode::{default_scan_range, output_correlation_twomode, TwoModeConfig, TwoModeSteady};
use crate::Form;

pub const FIGURE_K: f64 = 2.5;
pub const BISTABILITY_RANGE: (f64, f64) = (-2.0, 6.0);
pub const SCAN_STEPS: usize = 400;

/// Source of output correlation matrices at a fixed working point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum NoiseModel {
    /// Full linear response of a truncated cavity, including one mode.
    Exact { config: CavityConfig, state: SteadyState },
    TwoMode { config: TwoModeConfig, state: TwoModeSteady },
    /// Fundamental-mode block of the perturbative multimode treatment.
    Perturbative { config: CavityConfig, a0: Complex64 },
}

impl NoiseModel {
    pub fn n_modes(&self) -> usize {
        match self {
            Self::Exact { state, .. } => state.amplitudes.len(),
            Self::TwoMode { .. } => 2,
            Self::Perturbative { .. } => 1,
        }
    }

    /// Perturbative models carry no stability information and count as
    /// stable.
    pub fn is_stable(&self) -> bool {
        match self {
            Self::Exact { state, .. } => state.is_stable(),
            Self::TwoMode { state, .. } => state.stable,
            Self::Perturbative { .. } => true,
        }
    }

    pub fn detuning(&self) -> f64 {
        match self {
            Self::Exact { state, .. } => state.phi0,
            Self::TwoMode { state, .. } => state.phi_a,
            Self::Perturbative { config, .. } => config.phi0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Exact { config, state } => format!(
                "modes={} K={} phi0={} I={}",
                config.modes.len(),
                config.k,
                state.phi0,
                state.intensity
            ),
            Self::TwoMode { config, state } => format!(
                "p={} dphi={} K={} phi_a={} I={}",
                config.p,
                config.delta_phi,
                config.k,
                state.phi_a,
                state.intensity()
            ),
            Self::Perturbative { config, a0 } => format!(
                "phi_t={} K={} phi0={} I={}",
                config.phi_t,
                config.k,
                config.phi0,
                a0.norm_sqr()
            ),
        }
    }

    pub fn mean_outputs(&self) -> Vec<Complex64> {
        match self {
            Self::Exact { state, .. } => state.outputs.clone(),
            Self::TwoMode { state, .. } => state.outputs().to_vec(),
            Self::Perturbative { a0, .. } => vec![2.0 * a0 - 1.0],
        }
    }

    /// Scattering matrix, where the model has one.
    pub fn scattering(&self, omega: f64) -> Result<Option<DMatrix<Complex64>>> {
        match self {
            Self::Exact { config, state } => Ok(Some(brute_force_fluctuations(config, state, omega)?.scattering)),
            Self::TwoMode { config, state } => Ok(Some(output_correlation_twomode(state, config, omega)?.0)),
            Self::Perturbative { .. } => Ok(None),
        }
    }

    pub fn output_correlation(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        match self {
            Self::Exact { config, state } => Ok(brute_force_fluctuations(config, state, omega)?.v_out),
            Self::TwoMode { config, state } => Ok(output_correlation_twomode(state, config, omega)?.1),
            Self::Perturbative { config, a0 } => {
                let v = output_correlation(*a0, config, omega, None)?.total();
                Ok(DMatrix::from_iterator(2, 2, v.iter().copied()))
            }
        }
    }

    /// Output correlation restricted to the fundamental mode.
    pub fn fundamental_correlation(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let v = self.output_correlation(omega)?;
        let f = match self {
            Self::Exact { config, .. } => config.fundamental_index(),
            _ => 0,
        };
        Ok(v.view((2 * f, 2 * f), (2, 2)).into_owned())
    }

    fn fundamental_output(&self) -> Complex64 {
        match self {
            Self::Exact { config, state } => state.outputs[config.fundamental_index()],
            _ => self.mean_outputs()[0],
        }
    }

    pub fn optimum_tem00(&self, omega: f64) -> Result<f64> {
        let v = self.fundamental_correlation(omega)?;
        Ok(optimum_quadrature(&v, LocalOscillator::tem00(1, 0.0).coeffs())?.1)
    }

    pub fn optimized_lo(&self, omega: f64) -> Result<f64> {
        Ok(optimized_lo_noise(&self.output_correlation(omega)?)?.value)
    }

    /// Total intensity noise over every mode.
    pub fn intensity(&self, omega: f64) -> Result<f64> {
        intensity_noise(&self.output_correlation(omega)?, &self.mean_outputs())
    }

    pub fn intensity_fundamental(&self, omega: f64) -> Result<f64> {
        intensity_noise(&self.fundamental_correlation(omega)?, &[self.fundamental_output()])
    }

    pub fn spectrum(&self, observable: Observable, lo: LoChoice, omegas: &[f64]) -> Result<NoiseSpectrumSeries> {
        NoiseSpectrumSeries::compute("", omegas, |w| match (observable, lo) {
            (Observable::Quadrature, LoChoice::Tem00) => self.optimum_tem00(w),
            (Observable::Quadrature, LoChoice::Optimized) => self.optimized_lo(w),
            (Observable::Intensity, _) => self.intensity(w),
            (Observable::IntensityFundamental, _) => self.intensity_fundamental(w),
        })
    }

    /// Vacuum input to the model's modes, for reference.
    pub fn vacuum(&self) -> DMatrix<Complex64> {
        vacuum_input(self.n_modes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Quadrature,
    Intensity,
    IntensityFundamental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoChoice {
    Tem00,
    Optimized,
}

fn single_range(k: f64) -> (f64, f64) {
    (-3.0, 3.0 + 1.6 * k)
}

/// Single-mode working point at `φ_t − εW` on the upper branch.
pub fn single_mode_working_point(k: f64, epsilon: f64) -> Result<WorkingPoint> {
    let config = CavityConfig::single_mode(k, 0.0);
    let (lo, hi) = single_range(k);
    let curve = bistability_scan(&config, lo, hi, SCAN_STEPS)?;
    working_point(&config, &curve, epsilon)
}

pub fn two_mode_working_point(config: &TwoModeConfig, epsilon: f64) -> Result<(TwoModeSteady, WorkingPoint)> {
    let (lo, hi) = default_scan_range(config);
    let cavity = config.cavity_config(lo);
    let curve = bistability_scan(&cavity, lo, hi, SCAN_STEPS)?;
    let wp = working_point(&cavity, &curve, epsilon)?;
    Ok((TwoModeSteady::from_state(&wp.state), wp))
}

/// Multimode family working point, solved in full and truncated to `n_modes`.
pub fn family_working_point(k: f64, phi_t: f64, n_modes: usize, epsilon: f64) -> Result<WorkingPoint> {
    let config = CavityConfig::family(k, 0.0, phi_t, n_modes);
    let (lo, hi) = single_range(k);
    let curve = bistability_scan(&config, lo, hi, SCAN_STEPS)?;
    working_point(&config, &curve, epsilon)
}

pub fn single_mode_model(k: f64, epsilon: f64) -> Result<NoiseModel> {
    let wp = single_mode_working_point(k, epsilon)?;
    Ok(NoiseModel::Exact {
        config: CavityConfig::single_mode(k, wp.state.phi0),
        state: wp.state,
    })
}

pub fn two_mode_model(config: &TwoModeConfig, epsilon: f64) -> Result<NoiseModel> {
    let (state, _) = two_mode_working_point(config, epsilon)?;
    Ok(NoiseModel::TwoMode { config: *config, state })
}

pub fn brute_model(k: f64, phi_t: f64, n_modes: usize, epsilon: f64) -> Result<NoiseModel> {
    let wp = family_working_point(k, phi_t, n_modes, epsilon)?;
    Ok(NoiseModel::Exact {
        config: CavityConfig::family(k, wp.state.phi0, phi_t, n_modes),
        state: wp.state,
    })
}

/// Perturbative fundamental mode at the detuning of the single-mode working
/// point, on the highest-intensity root.
pub fn perturbative_model(k: f64, phi_t: f64, epsilon: f64, form: Form) -> Result<NoiseModel> {
    let wp = single_mode_working_point(k, epsilon)?;
    let config = CavityConfig::family(k, wp.state.phi0, phi_t, 1);
    let roots = crate::perturbative::steady_state_perturbative(&config, form)?;
    let a0 = roots.first().ok_or_else(|| Error::NoTurningPoint("no perturbative root".into()))?.a0;
    Ok(NoiseModel::Perturbative { config, a0 })
}

fn pick<T>(mut states: Vec<T>, branch: Branch) -> Result<T> {
    let n = states.len();
    let index = match branch {
        Branch::Upper | Branch::Unique => 0,
        Branch::Lower => n.saturating_sub(1),
        Branch::Middle if n == 3 => 1,
        Branch::Middle => {
            return Err(Error::NoTurningPoint(format!("{n} coexisting state(s), no middle branch")));
        }
    };
    if index >= n {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok(states.swap_remove(index))
}

/// States are ranked by fundamental intensity; `Upper` is the brightest.
pub fn single_mode_at(k: f64, phi0: f64, branch: Branch) -> Result<NoiseModel> {
    let state = pick(crate::cavity::single_mode_steady(phi0, k)?, branch)?;
    Ok(NoiseModel::Exact {
        config: CavityConfig::single_mode(k, phi0),
        state,
    })
}

pub fn two_mode_at(config: &TwoModeConfig, phi_a: f64, branch: Branch) -> Result<NoiseModel> {
    let state = pick(crate::twomode::two_mode_steady(config, phi_a)?, branch)?;
    Ok(NoiseModel::TwoMode { config: *config, state })
}

/// Truncated family solved on the continuation curve through `phi0`.
pub fn brute_at(k: f64, phi_t: f64, n_modes: usize, phi0: f64, branch: Branch) -> Result<NoiseModel> {
    let config = CavityConfig::family(k, phi0, phi_t, n_modes);
    let (lo, hi) = single_range(k);
    let (lo, hi) = (lo.min(phi0 - 1.0), hi.max(phi0 + 1.0));
    let curve = bistability_scan(&config.with_phi0(lo), lo, hi, SCAN_STEPS)?;
    let system = crate::cavity::CavitySystem::new(&config)?;
    let mut states: Vec<SteadyState> = Vec::new();
    for w in curve.samples.windows(2) {
        if (w[0].phi - phi0) * (w[1].phi - phi0) > 0.0 || w[0].phi == w[1].phi {
            continue;
        }
        let t = (phi0 - w[0].phi) / (w[1].phi - w[0].phi);
        let guess: Vec<Complex64> = w[0].amplitudes.iter().zip(&w[1].amplitudes).map(|(a, b)| a + (b - a) * t).collect();
        let Ok(a) = system.solve(&guess) else { continue };
        if states.iter().all(|s| (s.intensity - a[config.fundamental_index()].norm_sqr()).abs() > 1e-9) {
            states.push(system.steady_state(a));
        }
    }
    states.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    let state = pick(states, branch)?;
    Ok(NoiseModel::Exact { config, state })
}

pub fn perturbative_at(k: f64, phi_t: f64, phi0: f64, branch: Branch, form: Form) -> Result<NoiseModel> {
    let config = CavityConfig::family(k, phi0, phi_t, 1);
    let root = pick(crate::perturbative::steady_state_perturbative(&config, form)?, branch)?;
    Ok(NoiseModel::Perturbative { config, a0: root.a0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 6] = [Self::Fig1, Self::Fig2, Self::Fig3, Self::Fig4, Self::Fig5, Self::Fig6];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn preset(&self) -> FigurePreset {
        let two = |p: u32, delta_phi: f64| Curve::TwoMode { p, delta_phi };
        let (kind, curves) = match self {
            Self::Fig1 => (FigureKind::Bistability, (1..=5).map(|p| two(p, 0.0)).chain([Curve::Single]).collect()),
            Self::Fig2 => (FigureKind::Bistability, FIG2_DETUNINGS.iter().map(|&d| two(4, d)).collect()),
            Self::Fig3 => (
                FigureKind::Spectrum(Observable::Quadrature, LoChoice::Tem00),
                (3..=7).map(|p| two(p, 1.0)).chain([Curve::Single]).collect(),
            ),
            Self::Fig4 => (
                FigureKind::Spectrum(Observable::Quadrature, LoChoice::Tem00),
                [2.0, 1.0, 0.0, -1.0, -2.0].iter().map(|&d| two(4, d)).collect(),
            ),
            Self::Fig5 => (
                FigureKind::Spectrum(Observable::Quadrature, LoChoice::Optimized),
                (3..=7).map(|p| two(p, 1.0)).chain([Curve::Single]).collect(),
            ),
            Self::Fig6 => (
                FigureKind::Spectrum(Observable::Intensity, LoChoice::Tem00),
                (3..=7).map(|p| two(p, 1.0)).chain([Curve::Single]).collect(),
            ),
        };
        FigurePreset {
            figure: *self,
            k: FIGURE_K,
            kind,
            curves,
        }
    }
}

/// Relative detunings drawn for the `p = 4` bistability family.
pub const FIG2_DETUNINGS: [f64; 6] = [-1.0, 0.0, 0.5, 1.0, 1.5, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FigureKind {
    Bistability,
    Spectrum(Observable, LoChoice),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Curve {
    Single,
    TwoMode { p: u32, delta_phi: f64 },
}

impl Curve {
    pub fn label(&self) -> String {
        match self {
            Self::Single => "single-mode".to_string(),
            Self::TwoMode { p, delta_phi } => format!("p={p} dphi={delta_phi}"),
        }
    }

    pub fn model(&self, k: f64, epsilon: f64) -> Result<NoiseModel> {
        match *self {
            Self::Single => single_mode_model(k, epsilon),
            Self::TwoMode { p, delta_phi } => two_mode_model(&TwoModeConfig::new(k, p, delta_phi)?, epsilon),
        }
    }

    pub fn bistability(&self, k: f64, phi_min: f64, phi_max: f64, steps: usize) -> Result<BistabilityCurve> {
        match *self {
            Self::Single => bistability_scan(&CavityConfig::single_mode(k, phi_min), phi_min, phi_max, steps),
            Self::TwoMode { p, delta_phi } => {
                crate::twomode::two_mode_curve(&TwoModeConfig::new(k, p, delta_phi)?, phi_min, phi_max, steps)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePreset {
    pub figure: Figure,
    pub k: f64,
    pub kind: FigureKind,
    pub curves: Vec<Curve>,
}

/// One plotted line: `(φ, ℐ)` for bistability figures, `(ω, value)` for
/// spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub figure: Figure,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Spectra only: models at their working points, in curve order.
    #[serde(skip)]
    pub models: Vec<NoiseModel>,
}

impl FigurePreset {
    pub fn run(&self, epsilon: f64, omegas: Option<&[f64]>) -> Result<FigureData> {
        let (data, mut failures) = self.run_partial(epsilon, omegas);
        match failures.is_empty() {
            true => Ok(data),
            false => Err(failures.swap_remove(0).1),
        }
    }

    /// Like [`FigurePreset::run`] but keeps going past failed curves,
    /// returning them by label.
    pub fn run_partial(&self, epsilon: f64, omegas: Option<&[f64]>) -> (FigureData, Vec<(String, Error)>) {
        let default_grid = omega_grid(DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_POINTS);
        let omegas = omegas.unwrap_or(&default_grid);
        let mut series = Vec::new();
        let mut models = Vec::new();
        let mut failures = Vec::new();
        match self.kind {
            FigureKind::Bistability => {
                let (lo, hi) = BISTABILITY_RANGE;
                for c in &self.curves {
                    match c.bistability(self.k, lo, hi, SCAN_STEPS) {
                        Ok(curve) => series.push(Series {
                            label: c.label(),
                            x: curve.samples.iter().map(|s| s.phi).collect(),
                            y: curve.samples.iter().map(|s| s.intensity).collect(),
                            dashed: matches!(c, Curve::Single),
                        }),
                        Err(e) => failures.push((c.label(), e)),
                    }
                }
                if self.figure == Figure::Fig2 {
                    match maxima_locus(self.k, 4, &fig2_locus_grid()) {
                        Ok(s) => series.push(s),
                        Err(e) => failures.push(("maxima".into(), e)),
                    }
                }
            }
            FigureKind::Spectrum(observable, lo) => {
                for c in &self.curves {
                    let result = c
                        .model(self.k, epsilon)
                        .and_then(|m| m.spectrum(observable, lo, omegas).map(|s| (m, s)));
                    match result {
                        Ok((model, s)) => {
                            series.push(Series {
                                label: c.label(),
                                x: s.samples.iter().map(|p| p.0).collect(),
                                y: s.samples.iter().map(|p| p.1).collect(),
                                dashed: matches!(c, Curve::Single),
                            });
                            models.push(model);
                        }
                        Err(e) => failures.push((c.label(), e)),
                    }
                }
            }
        }
        let (x_label, y_label) = match self.kind {
            FigureKind::Bistability => ("phi", "intensity"),
            FigureKind::Spectrum(..) => ("omega", "noise"),
        };
        let data = FigureData {
            figure: self.figure,
            x_label: x_label.into(),
            y_label: y_label.into(),
            series,
            models,
        };
        (data, failures)
    }
}

fn fig2_locus_grid() -> Vec<f64> {
    (0..=16).map(|i| -1.0 + 0.25 * i as f64).collect()
}

/// `(φ, ℐ)` at the maximum of each bistability curve, traced over `δφ`.
pub fn maxima_locus(k: f64, p: u32, detunings: &[f64]) -> Result<Series> {
    let (lo, hi) = BISTABILITY_RANGE;
    let mut x = Vec::with_capacity(detunings.len());
    let mut y = Vec::with_capacity(detunings.len());
    for &d in detunings {
        let curve = crate::twomode::two_mode_curve(&TwoModeConfig::new(k, p, d)?, lo, hi, SCAN_STEPS)?;
        let top = curve
            .samples
            .iter()
            .max_by(|a, b| a.intensity.total_cmp(&b.intensity))
            .ok_or_else(|| Error::NoTurningPoint("empty curve".into()))?;
        x.push(top.phi);
        y.push(top.intensity);
    }
    Ok(Series {
        label: "maxima".into(),
        x,
        y,
        dashed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(Figure::parse(f.name()), Some(f));
        }
        assert_eq!(Figure::parse("fig7"), None);
    }

    #[test]
    fn fig1_bundle() {
        let p = Figure::Fig1.preset();
        assert_eq!(p.k, 2.5);
        assert_eq!(p.curves.len(), 6);
        assert!(matches!(p.curves[5], Curve::Single));
    }

    #[test]
    fn single_mode_model_is_near_the_fold() {
        let m = single_mode_model(2.5, 0.02).unwrap();
        let NoiseModel::Exact { state, .. } = &m else { panic!() };
        assert!((state.phi0 - (2.6046 - 0.02 * 0.38)).abs() < 1e-3);
        assert!(m.optimum_tem00(0.0).unwrap() < -0.9);
    }

    #[test]
    fn explicit_detuning_picks_ranked_branches() {
        let up = single_mode_at(2.5, 2.4, Branch::Upper).unwrap();
        let mid = single_mode_at(2.5, 2.4, Branch::Middle).unwrap();
        assert!(up.is_stable() && !mid.is_stable());
        assert!(up.mean_outputs()[0] != mid.mean_outputs()[0]);
        assert!(single_mode_at(2.5, 0.0, Branch::Middle).is_err());
        let brute = brute_at(2.5, 30.0, 4, 2.4, Branch::Upper).unwrap();
        assert_eq!(brute.n_modes(), 4);
    }

    #[test]
    fn models_serialize_losslessly() {
        let m = two_mode_model(&TwoModeConfig::new(2.5, 3, 1.0).unwrap(), 0.02).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: NoiseModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn perturbative_model_tracks_single_mode_at_large_spacing() {
        let a = perturbative_model(2.5, 1e6, 0.05, Form::Printed).unwrap();
        let b = single_mode_model(2.5, 0.05).unwrap();
        for w in [0.0, 1.0] {
            assert!((a.optimum_tem00(w).unwrap() - b.optimum_tem00(w).unwrap()).abs() < 1e-4);
        }
    }
}

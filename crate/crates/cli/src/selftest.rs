use kerr_modes::coupling::{mu_constants, CouplingIndex, CouplingTensor};
use kerr_modes::freespace::{integrate_truncated, propagate_mean, ThinMediumParams};
use kerr_modes::modes::overlap_quadrature;
use kerr_modes::presets::two_mode_model;
use kerr_modes::spectra::{commutator_defect, purity_determinant};
use kerr_modes::twomode::TwoModeConfig;
use num_complex::Complex64;

use crate::CliError;

fn quadrature_vs_exact() -> Result<f64, kerr_modes::Error> {
    let mut worst: f64 = 0.0;
    for p in 0..=8u32 {
        for q in 0..=8 - p {
            for r in 0..=8 - p - q {
                for s in 0..=8 - p - q - r {
                    let exact = CouplingTensor::global().get_f64(CouplingIndex::circular(p, q, r, s));
                    let quad = overlap_quadrature(p, q, r, s, 0, 0, 0, 0)?;
                    worst = worst.max((quad - exact).abs() / exact.abs());
                }
            }
        }
    }
    Ok(worst)
}

fn free_space_exponent() -> Result<f64, kerr_modes::Error> {
    let mut pts = Vec::new();
    for phi in [0.1, 0.05, 0.025] {
        let params = ThinMediumParams::new(phi, Complex64::new(1.0, 0.0))?;
        let oracle = integrate_truncated(&params)?[0];
        let err = (propagate_mean(&params).a_out - oracle).norm() / oracle.norm();
        pts.push((f64::ln(phi), err.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(num / den)
}

fn purity() -> Result<(f64, f64), kerr_modes::Error> {
    let model = two_mode_model(&TwoModeConfig::new(2.5, 3, 1.0)?, 0.02)?;
    let w = 0.7;
    let s = model.scattering(w)?.expect("two-mode model has a scattering matrix");
    let det = purity_determinant(&model.output_correlation(w)?, &model.output_correlation(-w)?);
    Ok(((det - 1.0).abs(), commutator_defect(&s)))
}

pub fn run() -> Result<(), CliError> {
    let mut failed = 0;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    };
    let q = quadrature_vs_exact()?;
    report("quadrature-vs-exact", q <= 1e-8, format!("max relative error {q:.2e}"));
    let mu = mu_constants(60);
    let e1 = (mu.mu1 - (4.0f64 / 3.0).ln()).abs();
    report(
        "mu-constants",
        e1 < 1e-10 && (mu.mu2 - 0.268).abs() < 1e-3 && (mu.mu3 - 0.197).abs() < 1e-3,
        format!("mu1 error {e1:.1e}, mu2 {:.6}, mu3 {:.6}", mu.mu2, mu.mu3),
    );
    let e = free_space_exponent()?;
    report("free-space-order", (e - 3.0).abs() <= 0.3, format!("fitted exponent {e:.3}"));
    let (d, c) = purity()?;
    report("two-mode-purity", d <= 1e-6 && c <= 1e-8, format!("|det-1| {d:.1e}, |SJS'-J| {c:.1e}"));
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::SelfTest(failed))
    }
}

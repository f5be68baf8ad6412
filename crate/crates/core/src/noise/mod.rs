//! Photon shot noise: synthetic spectra, Poisson checks, Monte-Carlo noise
//! floors of the DWF pipeline, and time-series analysis.

pub mod series;
pub mod source;

pub use series::*;
pub use source::*;

use crate::error::{Error, Result};
use crate::fit::{compute_dwf, compute_dwf_star, fit_zpl_weighted, DwfKind, Weighting, EMISSION_BAND_NM, ZPL_WINDOW_NM};
use crate::spectrum::Spectrum;
use crate::thermo::{background_factor, DwfModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Bins whose expected count is at or below this are left out of the normality statistic.
pub const MIN_EXPECTED_COUNTS: f64 = 10.0;

/// Standard deviation of (Nᵢ − Mᵢ)/√Mᵢ pooled over bins and spectra, where Mᵢ
/// is the reference rescaled to each spectrum's exposure.
pub fn poisson_normality_check(spectra: &[Spectrum], reference: &Spectrum) -> Result<f64> {
    let mut z = Vec::new();
    for s in spectra {
        if s.axis != reference.axis {
            return Err(Error::InvalidInput("spectrum and reference axes differ".into()));
        }
        let scale = s.exposure / reference.exposure;
        for (&n, &r) in s.counts.iter().zip(&reference.counts) {
            let m = r * scale;
            if m > MIN_EXPECTED_COUNTS {
                z.push((n - m) / m.sqrt());
            }
        }
    }
    if z.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "fewer than two bins with expected counts above {MIN_EXPECTED_COUNTS}"
        )));
    }
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub window: (f64, f64),
    pub band: (f64, f64),
    pub kind: DwfKind,
    pub weighting: Weighting,
    /// Largest tolerated fraction of failed trials.
    pub max_failure_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: ZPL_WINDOW_NM,
            band: EMISSION_BAND_NM,
            kind: DwfKind::Dwf,
            weighting: Weighting::Model,
            max_failure_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    /// Standard deviation of the recovered temperatures, K.
    pub empirical_std: f64,
    /// K·Hz^(−1/2).
    pub implied_noise_floor: f64,
    /// √(1+3r)·Φ/√C_ZPL, K·Hz^(−1/2).
    pub predicted_noise_floor: f64,
    pub ratio: f64,
    /// Sampling error of `ratio` for Gaussian temperatures.
    pub ratio_std_error: f64,
    pub mean_temperature: f64,
    pub trials: usize,
    pub failed: usize,
}

fn measure(s: &Spectrum, cfg: &PipelineConfig) -> Result<Option<f64>> {
    let zpl = fit_zpl_weighted(s, cfg.window, cfg.weighting)?;
    if !zpl.converged() {
        return Ok(None);
    }
    let d = match cfg.kind {
        DwfKind::Dwf => compute_dwf(s, &zpl, cfg.band)?,
        DwfKind::DwfStar => compute_dwf_star(s, &zpl)?,
    };
    Ok(Some(d.value))
}

pub fn monte_carlo_noise_floor(src: &SyntheticSource, m: &DwfModel, trials: usize, exposure: f64) -> Result<NoiseReport> {
    monte_carlo_noise_floor_with(src, m, trials, exposure, &PipelineConfig::default())
}

/// Runs synthesize → fit_zpl → DWF → temperature for `trials` independent
/// realisations. The DWF readout is scaled so that the noise-free spectrum
/// returns the source temperature.
pub fn monte_carlo_noise_floor_with(
    src: &SyntheticSource,
    m: &DwfModel,
    trials: usize,
    exposure: f64,
    cfg: &PipelineConfig,
) -> Result<NoiseReport> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    let meta = src
        .meta
        .ok_or_else(|| Error::InvalidInput("source lacks emission metadata for the prediction".into()))?;
    let truth = src.expected(exposure)?;
    let clean = measure(&truth, cfg)?
        .ok_or_else(|| Error::Numerical("ZPL fit of the noise-free spectrum did not converge".into()))?;
    let kappa = meta.dwf / clean;

    let temps: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let s = synthesize_spectrum_stream(src, exposure, trial as u64 + 1).ok()?;
            let v = measure(&s, cfg).ok()??;
            m.temperature_from_dwf(kappa * v).ok()
        })
        .collect();
    let ok: Vec<f64> = temps.iter().flatten().cloned().collect();
    let failed = trials - ok.len();
    if failed as f64 > cfg.max_failure_fraction * trials as f64 || ok.len() < 2 {
        return Err(Error::PipelineInstability { failed, trials });
    }
    let n = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let std = (ok.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let implied = std * exposure.sqrt();
    let predicted = background_factor(meta.background_ratio) * m.phi(meta.temperature)? / meta.c_zpl.sqrt();
    let ratio = implied / predicted;
    Ok(NoiseReport {
        empirical_std: std,
        implied_noise_floor: implied,
        predicted_noise_floor: predicted,
        ratio,
        ratio_std_error: ratio / (2.0 * (n - 1.0)).sqrt(),
        mean_temperature: mean,
        trials,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_statistic_is_zero() {
        let src = SyntheticSource::nv_minus(4200.0, 294.0, 0.0, &DwfModel::reference(), &NvSpectrumShape::default(), 3).unwrap();
        let mean = src.expected(1.0).unwrap();
        let long = src.expected(50.0).unwrap();
        assert!(poisson_normality_check(&[mean], &long).unwrap() < 1e-12);
    }

    #[test]
    fn dim_reference_rejected() {
        let s = Spectrum::new(vec![0.0, 1.0], vec![1.0, 2.0], 1.0, crate::AxisUnit::Nm).unwrap();
        assert!(poisson_normality_check(&[s.clone()], &s).is_err());
    }

    #[test]
    fn too_few_trials() {
        let src = SyntheticSource::nv_minus(4200.0, 294.0, 0.0, &DwfModel::reference(), &NvSpectrumShape::default(), 3).unwrap();
        assert!(monte_carlo_noise_floor(&src, &DwfModel::reference(), 10, 1.0).is_err());
    }
}

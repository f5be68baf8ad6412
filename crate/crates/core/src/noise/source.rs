//! Synthetic photoluminescence sources and Poisson sampling.

use crate::error::{Error, Result};
use crate::fit::models::area_lorentzian;
use crate::fit::LorentzianComponent;
use crate::spectrum::{bin_widths, check_strictly_increasing, linspace, AxisUnit, Spectrum};
use crate::thermo::DwfModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One Poisson draw; mean 0 gives 0.
pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}

/// Phonon sideband with a triangular density from `start` through `peak` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sideband {
    pub start: f64,
    pub peak: f64,
    pub end: f64,
    /// Photons/s.
    pub rate: f64,
}

impl Sideband {
    /// Photons/s per axis unit at `x`.
    pub fn density(&self, x: f64) -> f64 {
        let height = 2.0 * self.rate / (self.end - self.start);
        if x <= self.start || x >= self.end {
            0.0
        } else if x <= self.peak {
            height * (x - self.start) / (self.peak - self.start)
        } else {
            height * (self.end - x) / (self.end - self.peak)
        }
    }
}

/// Quantities the source was built from, used to predict its noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionMeta {
    /// K.
    pub temperature: f64,
    pub dwf: f64,
    /// ZPL photons/s.
    pub c_zpl: f64,
    pub background_ratio: f64,
}

/// Rate model of a PL spectrum: ZPL lines, sideband and uniform background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    /// nm.
    pub axis: Vec<f64>,
    /// Areas in photons/s.
    pub zpl: Vec<LorentzianComponent>,
    pub sideband: Option<Sideband>,
    /// Photons/s per bin.
    pub background_rate: f64,
    pub seed: u64,
    pub meta: Option<EmissionMeta>,
}

/// Layout of the synthetic NV⁻ spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvSpectrumShape {
    /// Centres of the strain-split ZPL doublet, nm.
    pub zpl_centers: [f64; 2],
    /// nm.
    pub zpl_fwhm: f64,
    pub sideband_start: f64,
    pub sideband_peak: f64,
    pub sideband_end: f64,
    /// Recorded range and bin count.
    pub axis_range: (f64, f64),
    pub n_bins: usize,
}

impl Default for NvSpectrumShape {
    fn default() -> Self {
        NvSpectrumShape {
            zpl_centers: [636.7, 637.3],
            zpl_fwhm: 0.4,
            sideband_start: 645.0,
            sideband_peak: 690.0,
            sideband_end: 790.0,
            axis_range: (550.0, 800.0),
            n_bins: 5001,
        }
    }
}

impl SyntheticSource {
    /// NV⁻ emission at temperature `t` with ZPL rate `c_zpl` and background
    /// ratio `r` (uniform background per bin over the ZPL peak per-bin rate).
    pub fn nv_minus(
        c_zpl: f64,
        t: f64,
        r: f64,
        m: &DwfModel,
        shape: &NvSpectrumShape,
        seed: u64,
    ) -> Result<Self> {
        if !(c_zpl >= 0.0 && c_zpl.is_finite()) {
            return Err(Error::InvalidParameter(format!("ZPL rate must be non-negative, got {c_zpl}")));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("background ratio must be non-negative, got {r}")));
        }
        let dwf = m.dwf(t)?;
        let axis = linspace(shape.axis_range.0, shape.axis_range.1, shape.n_bins);
        let zpl: Vec<LorentzianComponent> = shape
            .zpl_centers
            .iter()
            .map(|&c| LorentzianComponent {
                center: c,
                fwhm: shape.zpl_fwhm,
                area: 0.5 * c_zpl,
            })
            .collect();
        let sideband = Sideband {
            start: shape.sideband_start,
            peak: shape.sideband_peak,
            end: shape.sideband_end,
            rate: c_zpl * (1.0 / dwf - 1.0),
        };
        let mut src = SyntheticSource {
            axis,
            zpl,
            sideband: Some(sideband),
            background_rate: 0.0,
            seed,
            meta: Some(EmissionMeta {
                temperature: t,
                dwf,
                c_zpl,
                background_ratio: r,
            }),
        };
        src.background_rate = r * src.zpl_peak_rate();
        Ok(src)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis.len() < 2 {
            return Err(Error::InvalidInput("source axis needs at least two samples".into()));
        }
        check_strictly_increasing(&self.axis)?;
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::InvalidParameter("background rate must be non-negative".into()));
        }
        for c in &self.zpl {
            if !(c.fwhm > 0.0 && c.area >= 0.0) {
                return Err(Error::InvalidParameter("ZPL components need positive width and non-negative area".into()));
            }
        }
        if let Some(sb) = &self.sideband {
            if !(sb.start < sb.peak && sb.peak < sb.end && sb.rate >= 0.0) {
                return Err(Error::InvalidParameter("sideband must satisfy start < peak < end and rate ≥ 0".into()));
            }
        }
        Ok(())
    }

    fn zpl_rates(&self, widths: &[f64]) -> Vec<f64> {
        self.axis
            .iter()
            .zip(widths)
            .map(|(&x, &w)| self.zpl.iter().map(|c| area_lorentzian(x, c.center, c.fwhm, c.area).0).sum::<f64>() * w)
            .collect()
    }

    /// Largest ZPL rate in any bin, photons/s.
    pub fn zpl_peak_rate(&self) -> f64 {
        self.zpl_rates(&bin_widths(&self.axis)).into_iter().fold(0.0, f64::max)
    }

    /// Expected photons/s in each bin.
    pub fn rates(&self) -> Vec<f64> {
        let widths = bin_widths(&self.axis);
        let zpl = self.zpl_rates(&widths);
        self.axis
            .iter()
            .zip(&widths)
            .zip(zpl)
            .map(|((&x, &w), z)| z + self.sideband.map_or(0.0, |s| s.density(x) * w) + self.background_rate)
            .collect()
    }

    /// Noise-free expected counts for `exposure` seconds.
    pub fn expected(&self, exposure: f64) -> Result<Spectrum> {
        self.validate()?;
        let counts = self.rates().into_iter().map(|r| r * exposure).collect();
        Spectrum::new(self.axis.clone(), counts, exposure, AxisUnit::Nm)
    }
}

/// Poisson realisation of `src` over `exposure` seconds from stream 0 of its seed.
pub fn synthesize_spectrum(src: &SyntheticSource, exposure: f64) -> Result<Spectrum> {
    synthesize_spectrum_stream(src, exposure, 0)
}

/// Poisson realisation drawn from stream `stream` of the source seed.
pub fn synthesize_spectrum_stream(src: &SyntheticSource, exposure: f64, stream: u64) -> Result<Spectrum> {
    if !(exposure > 0.0 && exposure.is_finite()) {
        return Err(Error::InvalidParameter(format!("exposure must be positive, got {exposure}")));
    }
    let mean = src.expected(exposure)?;
    let mut rng = stream_rng(src.seed, stream);
    let counts = mean.counts.iter().map(|&m| poisson_sample(m, &mut rng)).collect();
    Spectrum::new(mean.axis, counts, exposure, AxisUnit::Nm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sideband_density_integrates_to_rate() {
        let sb = Sideband {
            start: 645.0,
            peak: 690.0,
            end: 790.0,
            rate: 3.0,
        };
        let x = linspace(600.0, 800.0, 20001);
        let w = bin_widths(&x);
        let total: f64 = x.iter().zip(&w).map(|(x, w)| sb.density(*x) * w).sum();
        assert!((total - 3.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_counts() {
        let src = SyntheticSource::nv_minus(4200.0, 294.0, 0.5, &DwfModel::reference(), &NvSpectrumShape::default(), 7).unwrap();
        let a = synthesize_spectrum(&src, 1.0).unwrap();
        let b = synthesize_spectrum(&src, 1.0).unwrap();
        assert_eq!(a, b);
        let c = synthesize_spectrum_stream(&src, 1.0, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn background_ratio_is_relative_to_zpl_peak() {
        let src = SyntheticSource::nv_minus(4200.0, 294.0, 2.0, &DwfModel::reference(), &NvSpectrumShape::default(), 1).unwrap();
        assert!((src.background_rate / src.zpl_peak_rate() - 2.0).abs() < 1e-12);
    }
}

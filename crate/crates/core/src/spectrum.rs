//! Sampled intensity records shared by the ODMR, PL and noise routines.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisUnit {
    /// Wavelength, for photoluminescence spectra.
    Nm,
    /// Microwave frequency, for ODMR spectra.
    Mhz,
}

impl AxisUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisUnit::Nm => "nm",
            AxisUnit::Mhz => "mhz",
        }
    }
}

impl std::str::FromStr for AxisUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nm" => Ok(AxisUnit::Nm),
            "mhz" => Ok(AxisUnit::Mhz),
            other => Err(Error::Parse(format!("unknown axis unit '{other}'"))),
        }
    }
}

/// Counts per bin on a strictly increasing axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub axis: Vec<f64>,
    pub counts: Vec<f64>,
    /// Exposure time, s.
    pub exposure: f64,
    pub unit: AxisUnit,
}

impl Spectrum {
    pub fn new(axis: Vec<f64>, counts: Vec<f64>, exposure: f64, unit: AxisUnit) -> Result<Self> {
        if axis.is_empty() {
            return Err(Error::InvalidInput("spectrum is empty".into()));
        }
        if axis.len() != counts.len() {
            return Err(Error::InvalidInput(format!(
                "axis has {} points but counts has {}",
                axis.len(),
                counts.len()
            )));
        }
        check_strictly_increasing(&axis)?;
        if !(exposure > 0.0 && exposure.is_finite()) {
            return Err(Error::InvalidInput(format!("exposure must be positive, got {exposure}")));
        }
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidInput(format!("counts must be finite and non-negative, got {c}")));
        }
        Ok(Spectrum {
            axis,
            counts,
            exposure,
            unit,
        })
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Width attributed to each sample (half the distance between neighbours).
    pub fn bin_widths(&self) -> Vec<f64> {
        bin_widths(&self.axis)
    }

    /// Indices of samples with `lo <= axis <= hi`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.axis.partition_point(|&x| x < lo);
        let end = self.axis.partition_point(|&x| x <= hi);
        start..end.max(start)
    }

    /// Sub-spectrum restricted to `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Spectrum> {
        let r = self.indices_in(lo, hi);
        Spectrum::new(
            self.axis[r.clone()].to_vec(),
            self.counts[r].to_vec(),
            self.exposure,
            self.unit,
        )
    }

    /// Sum of counts·bin-width over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let widths = self.bin_widths();
        self.indices_in(lo, hi).map(|i| self.counts[i] * widths[i]).sum()
    }

    pub fn total_counts(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            counts: self.counts.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }
}

pub(crate) fn check_strictly_increasing(xs: &[f64]) -> Result<()> {
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("axis value {x} is not finite")));
    }
    if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "axis must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub(crate) fn bin_widths(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    axis[1] - axis[0]
                } else if i == n - 1 {
                    axis[n - 1] - axis[n - 2]
                } else {
                    0.5 * (axis[i + 1] - axis[i - 1])
                }
            })
            .collect(),
    }
}

/// Uniform grid of `n` points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_axis() {
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0], 1.0, AxisUnit::Nm).is_err());
        assert!(Spectrum::new(vec![], vec![], 1.0, AxisUnit::Nm).is_err());
        assert!(Spectrum::new(vec![1.0], vec![-1.0], 1.0, AxisUnit::Nm).is_err());
        assert!(Spectrum::new(vec![1.0], vec![1.0], 0.0, AxisUnit::Nm).is_err());
    }

    #[test]
    fn uniform_bin_widths() {
        let w = bin_widths(&linspace(0.0, 1.0, 11));
        assert!(w.iter().all(|w| (w - 0.1).abs() < 1e-12));
    }

    #[test]
    fn window_is_inclusive() {
        let s = Spectrum::new(linspace(0.0, 10.0, 11), vec![1.0; 11], 1.0, AxisUnit::Nm).unwrap();
        assert_eq!(s.window(2.0, 5.0).unwrap().len(), 4);
        assert!((s.integrate(0.0, 10.0) - 11.0).abs() < 1e-12);
    }
}

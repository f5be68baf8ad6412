//! Time series: cubic detrending and single-step detection.

use super::source::stream_rng;
use crate::error::{Error, Result};
use crate::fit::polynomial_fit;
use crate::spectrum::check_strictly_increasing;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// s.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Mean sampling interval, s.
    pub cadence: f64,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("time series is empty".into()));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidInput("times and values differ in length".into()));
        }
        check_strictly_increasing(&times)?;
        if let Some(v) = times.iter().chain(&values).find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("time series contains {v}")));
        }
        let n = times.len();
        let cadence = if n > 1 { (times[n - 1] - times[0]) / (n - 1) as f64 } else { 0.0 };
        Ok(TimeSeries { times, values, cadence })
    }

    /// Samples at `start + i·cadence`.
    pub fn uniform(start: f64, cadence: f64, values: Vec<f64>) -> Result<Self> {
        if !(cadence > 0.0) {
            return Err(Error::InvalidParameter(format!("cadence must be positive, got {cadence}")));
        }
        let times = (0..values.len()).map(|i| start + i as f64 * cadence).collect();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicTrend {
    /// c₀ + c₁t + c₂t² + c₃t³ with t in s.
    pub coeffs: [f64; 4],
    /// √(RSS/(n − 4)).
    pub residual_std: f64,
    pub residuals: Vec<f64>,
}

/// Least-squares cubic trend.
pub fn detrend_cubic(ts: &TimeSeries) -> Result<CubicTrend> {
    if ts.len() < 8 {
        return Err(Error::InvalidInput(format!("cubic detrending needs at least 8 points, got {}", ts.len())));
    }
    let f = polynomial_fit(&ts.times, &ts.values, 3)?;
    Ok(CubicTrend {
        coeffs: [f.coeffs[0], f.coeffs[1], f.coeffs[2], f.coeffs[3]],
        residual_std: (f.rss / (ts.len() - 4) as f64).sqrt(),
        residuals: f.residuals,
    })
}

/// Minimum samples on each side of a changepoint.
pub const MIN_PLATEAU: usize = 3;
/// Minimum fractional RSS reduction for a step to be reported.
pub const MIN_IMPROVEMENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum StepDetection {
    Step {
        /// First sample of the second plateau.
        index: usize,
        /// Second plateau mean minus first.
        size: f64,
        uncertainty: f64,
        before: f64,
        after: f64,
    },
    NoStep,
}

fn mean_and_ss(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, v.iter().map(|x| (x - m).powi(2)).sum())
}

/// Best two-plateau fit over every changepoint.
///
/// A best split leaving fewer than [`MIN_PLATEAU`] samples on either side, or
/// reducing the RSS by no more than [`MIN_IMPROVEMENT`], gives `NoStep`.
pub fn detect_step(ts: &TimeSeries) -> Result<StepDetection> {
    let n = ts.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!("step detection needs at least 10 points, got {n}")));
    }
    let y = &ts.values;
    let (_, total) = mean_and_ss(y);
    if total == 0.0 {
        return Ok(StepDetection::NoStep);
    }
    let mut best = (0, f64::INFINITY);
    for k in 1..n {
        let rss = mean_and_ss(&y[..k]).1 + mean_and_ss(&y[k..]).1;
        if rss < best.1 {
            best = (k, rss);
        }
    }
    let (k, rss) = best;
    if k < MIN_PLATEAU || n - k < MIN_PLATEAU || (total - rss) / total <= MIN_IMPROVEMENT {
        return Ok(StepDetection::NoStep);
    }
    let (m1, ss1) = mean_and_ss(&y[..k]);
    let (m2, ss2) = mean_and_ss(&y[k..]);
    let (n1, n2) = (k as f64, (n - k) as f64);
    let var1 = ss1 / (n1 - 1.0);
    let var2 = ss2 / (n2 - 1.0);
    Ok(StepDetection::Step {
        index: k,
        size: m2 - m1,
        uncertainty: (var1 / n1 + var2 / n2).sqrt(),
        before: m1,
        after: m2,
    })
}

/// Parameters of a synthetic series with one step and white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSeriesSpec {
    pub n_points: usize,
    /// s.
    pub cadence: f64,
    pub baseline: f64,
    /// Index of the first stepped sample.
    pub step_at: usize,
    pub step_size: f64,
    pub noise_std: f64,
}

pub fn synthesize_step_series(spec: &StepSeriesSpec, seed: u64, stream: u64) -> Result<TimeSeries> {
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise std must be non-negative, got {}", spec.noise_std)));
    }
    if spec.step_at > spec.n_points {
        return Err(Error::InvalidParameter("step index beyond the series".into()));
    }
    let normal = Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = stream_rng(seed, stream);
    let values = (0..spec.n_points)
        .map(|i| {
            let level = spec.baseline + if i >= spec.step_at { spec.step_size } else { 0.0 };
            level + normal.sample(&mut rng)
        })
        .collect();
    TimeSeries::uniform(0.0, spec.cadence, values)
}

//! Multi-Lorentzian ODMR fits.

use super::lm::{fit_least_squares, poisson_weights, Data, FitResult, LmConfig};
use super::models::OdmrDips;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::spin::OdmrLineModel;
use serde::{Deserialize, Serialize};

pub const MAX_LINES: usize = 6;
/// Moving-average window used when seeding line centres, bins.
pub const SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrFit {
    /// Parameters `[baseline, c₁, w₁, k₁, …]` in the order of the initial model.
    pub fit: FitResult,
    /// Fitted lines sorted by centre.
    pub lines: OdmrLineModel,
    /// Mean line centre, MHz.
    pub d: f64,
    pub d_std: f64,
    /// Half the distance between the upper and lower halves of the line set, MHz.
    pub splitting: Option<f64>,
    pub splitting_std: Option<f64>,
    /// Each line carries its own width.
    pub independent_widths: bool,
    pub warnings: Vec<String>,
}

fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Initial lines from the `n_lines` deepest local minima of the smoothed spectrum.
pub fn seed_odmr_lines(s: &Spectrum, n_lines: usize) -> Result<OdmrLineModel> {
    check_line_count(n_lines)?;
    let n = s.len();
    if n < 3 {
        return Err(Error::InvalidInput("spectrum too short to locate minima".into()));
    }
    let sm = moving_average(&s.counts, SMOOTHING_WINDOW);
    let mut minima: Vec<usize> = (1..n - 1).filter(|&i| sm[i] <= sm[i - 1] && sm[i] < sm[i + 1]).collect();
    minima.sort_by(|&a, &b| sm[a].total_cmp(&sm[b]));
    if minima.len() < n_lines {
        return Err(Error::InvalidInput(format!(
            "found {} local minima, need {n_lines}",
            minima.len()
        )));
    }
    minima.truncate(n_lines);
    minima.sort_unstable();
    let baseline = sm.iter().cloned().fold(f64::MIN, f64::max);
    let spacing = (s.axis[n - 1] - s.axis[0]) / (n - 1) as f64;
    let mut centers = Vec::new();
    let mut widths = Vec::new();
    let mut contrasts = Vec::new();
    for &i in &minima {
        let depth = baseline - sm[i];
        let half = baseline - 0.5 * depth;
        let mut l = i;
        while l > 0 && sm[l] < half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < n && sm[r] < half {
            r += 1;
        }
        let w = (s.axis[r] - s.axis[l]).max(2.0 * spacing);
        centers.push(s.axis[i]);
        widths.push(w);
        contrasts.push(if baseline > 0.0 { (depth / baseline).clamp(0.0, 0.99) } else { 0.0 });
    }
    Ok(OdmrLineModel {
        centers,
        widths,
        contrasts,
        baseline,
    })
}

fn check_line_count(n: usize) -> Result<()> {
    if (1..=MAX_LINES).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("number of lines must be 1..={MAX_LINES}, got {n}")))
    }
}

/// Fits `n_lines` Lorentzian dips with independent widths and Poisson weights.
pub fn fit_odmr(s: &Spectrum, n_lines: usize, init: &OdmrLineModel) -> Result<OdmrFit> {
    check_line_count(n_lines)?;
    if init.centers.len() != n_lines || init.widths.len() != n_lines || init.contrasts.len() != n_lines {
        return Err(Error::InvalidInput(format!("initial model must describe {n_lines} lines")));
    }
    let model = OdmrDips { n_lines };
    let mut p0 = vec![init.baseline];
    for k in 0..n_lines {
        p0.extend([init.centers[k], init.widths[k], init.contrasts[k]]);
    }
    let weights = poisson_weights(&s.counts);
    let data = Data::new(&s.axis, &s.counts, &weights)?;
    let fit = fit_least_squares(&model, &data, &p0, &LmConfig::default())?;

    let p = &fit.params;
    let mut order: Vec<usize> = (0..n_lines).collect();
    order.sort_by(|&a, &b| p[3 * a + 1].total_cmp(&p[3 * b + 1]));
    let lines = OdmrLineModel {
        centers: order.iter().map(|&k| p[3 * k + 1]).collect(),
        widths: order.iter().map(|&k| p[3 * k + 2]).collect(),
        contrasts: order.iter().map(|&k| p[3 * k + 3]).collect(),
        baseline: p[0],
    };

    let np = p.len();
    let mut d_coeffs = vec![0.0; np];
    for k in 0..n_lines {
        d_coeffs[3 * k + 1] = 1.0 / n_lines as f64;
    }
    let d = lines.centers.iter().sum::<f64>() / n_lines as f64;
    let d_std = fit.combination_std(&d_coeffs);

    let (splitting, splitting_std) = if n_lines >= 2 {
        let h = n_lines / 2;
        let mut c = vec![0.0; np];
        for (rank, &k) in order.iter().enumerate() {
            if rank < h {
                c[3 * k + 1] -= 0.5 / h as f64;
            } else if rank >= n_lines - h {
                c[3 * k + 1] += 0.5 / h as f64;
            }
        }
        let value: f64 = (0..np).map(|i| c[i] * p[i]).sum();
        (Some(value), Some(fit.combination_std(&c)))
    } else {
        (None, None)
    };

    let mut warnings = Vec::new();
    for pair in 0..n_lines.saturating_sub(1) {
        let sep = lines.centers[pair + 1] - lines.centers[pair];
        let w = lines.widths[pair].min(lines.widths[pair + 1]);
        if sep < w / 10.0 {
            warnings.push(format!(
                "lines at {:.4} and {:.4} MHz are degenerate: separation {:.3e} below a tenth of the width {:.3e}",
                lines.centers[pair], lines.centers[pair + 1], sep, w
            ));
        }
    }
    if !fit.converged {
        warnings.push(format!("fit stopped after {} iterations without converging", fit.n_iterations));
    }
    Ok(OdmrFit {
        fit,
        lines,
        d,
        d_std,
        splitting,
        splitting_std,
        independent_widths: true,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::linspace;
    use crate::spin::synthesize_odmr;

    #[test]
    fn doublet_centres() {
        let truth = OdmrLineModel {
            centers: vec![2860.0, 2880.0],
            widths: vec![5.0, 5.0],
            contrasts: vec![0.02, 0.02],
            baseline: 1e6,
        };
        let s = synthesize_odmr(&truth, &linspace(2800.0, 2940.0, 281)).unwrap();
        let seed = seed_odmr_lines(&s, 2).unwrap();
        assert_eq!(seed.centers, vec![2860.0, 2880.0]);
        let f = fit_odmr(&s, 2, &seed).unwrap();
        assert!((f.d - 2870.0).abs() < 1e-8);
        assert!((f.splitting.unwrap() - 10.0).abs() < 1e-8);
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn single_line_has_no_splitting() {
        let truth = OdmrLineModel {
            centers: vec![1420.0],
            widths: vec![20.0],
            contrasts: vec![0.05],
            baseline: 1e5,
        };
        let s = synthesize_odmr(&truth, &linspace(1300.0, 1540.0, 241)).unwrap();
        let f = fit_odmr(&s, 1, &seed_odmr_lines(&s, 1).unwrap()).unwrap();
        assert!((f.d - 1420.0).abs() < 1e-8);
        assert!(f.splitting.is_none());
    }

    #[test]
    fn line_count_bounds() {
        let s = Spectrum::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 1.0], 1.0, crate::AxisUnit::Mhz).unwrap();
        assert!(seed_odmr_lines(&s, 0).is_err());
        assert!(seed_odmr_lines(&s, 7).is_err());
    }
}

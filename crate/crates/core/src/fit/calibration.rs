//! Calibration fits on (abscissa, value) point lists.

use super::linear::{polynomial_fit, weighted_ols};
use super::lm::{fit_least_squares, Data, FitResult, LmConfig};
use super::models::{DebyeWaller, LaserHeatedDwf, StrainAveraged};
use crate::error::{Error, Result};
use crate::thermo::{thermal_pressure, DwfModel, ExpansionModel, QuadraticShift};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Smallest temperature span accepted by the DWF calibration, K.
pub const MIN_CALIBRATION_SPAN_K: f64 = 100.0;

fn split(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    points.iter().cloned().unzip()
}

fn check_points(points: &[(f64, f64)], min: usize, what: &str) -> Result<()> {
    if points.len() < min {
        return Err(Error::InvalidInput(format!(
            "{what} needs at least {min} points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite point ({x}, {y})")));
        }
    }
    Ok(())
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwfCalibration {
    pub model: DwfModel,
    /// Covariance of (S, T_D).
    pub covariance: Vec<Vec<f64>>,
    pub s_std: f64,
    pub t_debye_std: f64,
    /// √(weighted RSS) of the fit in the space it was solved in.
    pub residual_norm: f64,
}

fn dwf_points_valid(points: &[(f64, f64)]) -> Result<()> {
    check_points(points, 3, "DWF calibration")?;
    if let Some(&(t, d)) = points.iter().find(|(t, d)| !(*d > 0.0 && *d < 1.0) || *t < 0.0) {
        return Err(Error::InvalidInput(format!("invalid calibration point T={t}, DWF={d}")));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < MIN_CALIBRATION_SPAN_K {
        return Err(Error::IllConditioned(format!(
            "temperatures span {:.1} K, need at least {MIN_CALIBRATION_SPAN_K} K",
            hi - lo
        )));
    }
    Ok(())
}

/// Straight-line fit of ln DWF against T².
pub fn fit_dwf_calibration(points: &[(f64, f64)]) -> Result<DwfCalibration> {
    dwf_points_valid(points)?;
    let (t, d) = split(points);
    let t2: Vec<f64> = t.iter().map(|t| t * t).collect();
    let ln: Vec<f64> = d.iter().map(|d| d.ln()).collect();
    let line = polynomial_fit(&t2, &ln, 1)?;
    let (alpha, beta) = (line.coeffs[0], line.coeffs[1]);
    if !(alpha < 0.0 && beta < 0.0) {
        return Err(Error::Numerical(format!(
            "ln DWF line has intercept {alpha} and slope {beta}; both must be negative"
        )));
    }
    let s = -alpha;
    let t_debye = PI * (2.0 * s / (3.0 * -beta)).sqrt();
    // Jacobian of (S, T_D) with respect to (α, β)
    let j = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -t_debye / (2.0 * s), t_debye / (2.0 * -beta)]);
    let c = DMatrix::from_fn(2, 2, |a, b| line.covariance[a][b]);
    let cov = &j * c * j.transpose();
    Ok(DwfCalibration {
        model: DwfModel::new(s, t_debye)?,
        covariance: to_rows(&cov),
        s_std: cov[(0, 0)].max(0.0).sqrt(),
        t_debye_std: cov[(1, 1)].max(0.0).sqrt(),
        residual_norm: line.rss.sqrt(),
    })
}

/// Direct nonlinear fit of DWF(T) in (S, T_D) with unit weights.
pub fn fit_dwf_calibration_nonlinear(points: &[(f64, f64)], init: &DwfModel) -> Result<DwfCalibration> {
    dwf_points_valid(points)?;
    let (t, d) = split(points);
    let w = vec![1.0; t.len()];
    let fit = fit_least_squares(&DebyeWaller, &Data::new(&t, &d, &w)?, &[init.s, init.t_debye], &LmConfig::default())?;
    if !fit.converged {
        return Err(Error::Numerical("DWF calibration fit did not converge".into()));
    }
    let se = fit.std_errors();
    Ok(DwfCalibration {
        model: DwfModel::new(fit.params[0], fit.params[1])?,
        covariance: fit.covariance.clone(),
        s_std: se[0],
        t_debye_std: se[1],
        residual_norm: fit.residual_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserCalibration {
    pub s: f64,
    /// Heating coefficient, K/mW.
    pub b: f64,
    pub s_std: f64,
    pub b_std: f64,
    pub t0: f64,
    pub t_debye: f64,
    pub fit: FitResult,
}

/// Fits DWF(T₀ + b·P) in (S, b) with T₀ and T_D fixed.
pub fn fit_laser_calibration(points: &[(f64, f64)], t0: f64, t_debye: f64) -> Result<LaserCalibration> {
    check_points(points, 3, "laser calibration")?;
    if let Some(&(p, d)) = points.iter().find(|(p, d)| *p < 0.0 || !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::InvalidInput(format!("invalid calibration point P={p}, DWF={d}")));
    }
    if !(t0 >= 0.0 && t_debye > 0.0) {
        return Err(Error::InvalidParameter(format!("need T0 ≥ 0 and T_D > 0, got {t0}, {t_debye}")));
    }
    let factor = |t: f64| 1.0 + 2.0 / 3.0 * PI * PI * (t / t_debye).powi(2);
    let lowest = points.iter().cloned().min_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    let highest = points.iter().cloned().max_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    let s0 = -lowest.1.ln() / factor(t0 + 0.0);
    let excess = -highest.1.ln() / s0 - 1.0;
    let t_hi = t_debye * (1.5 * excess.max(0.0) / (PI * PI)).sqrt();
    let b0 = if highest.0 > lowest.0 { (t_hi - t0) / (highest.0 - lowest.0) } else { 0.0 };

    let (p, d) = split(points);
    let w = vec![1.0; p.len()];
    let model = LaserHeatedDwf { t0, t_debye };
    let fit = fit_least_squares(&model, &Data::new(&p, &d, &w)?, &[s0, b0], &LmConfig::default())?;
    let se = fit.std_errors();
    Ok(LaserCalibration {
        s: fit.params[0],
        b: fit.params[1],
        s_std: se[0],
        b_std: se[1],
        t0,
        t_debye,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub shift: QuadraticShift,
    /// Covariance of (a, b, c).
    pub covariance: Vec<Vec<f64>>,
    pub std: [f64; 3],
    pub residual_norm: f64,
}

/// Ordinary least squares of D(T) on (1, T, T²).
pub fn fit_quadratic_shift(points: &[(f64, f64)]) -> Result<QuadraticFit> {
    check_points(points, 4, "quadratic shift fit")?;
    let (t, d) = split(points);
    let f = polynomial_fit(&t, &d, 2)?;
    let se = f.std_errors();
    Ok(QuadraticFit {
        shift: QuadraticShift {
            a: f.coeffs[0],
            b: f.coeffs[1],
            c: f.coeffs[2],
        },
        covariance: f.covariance,
        std: [se[0], se[1], se[2]],
        residual_norm: f.rss.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionShiftFit {
    /// MHz/GPa.
    pub gamma: f64,
    pub gamma_std: f64,
    /// P(T) at each input temperature, GPa.
    pub pressures: Vec<f64>,
    pub residual_norm: f64,
}

/// One-parameter fit ΔD = Γ·P(T).
pub fn fit_expansion_shift(points: &[(f64, f64)], em: &ExpansionModel) -> Result<ExpansionShiftFit> {
    check_points(points, 2, "expansion shift fit")?;
    let pressures = points.iter().map(|&(t, _)| thermal_pressure(t, em)).collect::<Result<Vec<_>>>()?;
    if pressures.iter().all(|&p| p == 0.0) {
        return Err(Error::RankDeficient("Γ is unidentifiable: P(T) vanishes at every point".into()));
    }
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let design = DMatrix::from_column_slice(pressures.len(), 1, &pressures);
    let f = weighted_ols(&design, &y, None)?;
    Ok(ExpansionShiftFit {
        gamma: f.coeffs[0],
        gamma_std: f.std_errors()[0],
        pressures,
        residual_norm: f.rss.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainEnergyFit {
    /// hξ⊥, meV.
    pub strain_energy: f64,
    pub strain_energy_std: f64,
    pub fit: FitResult,
}

/// One-parameter fit of ε(T) in hξ⊥ with D⊥ and A∥ fixed.
pub fn fit_strain_energy(points: &[(f64, f64)], d_perp: f64, a_par: f64) -> Result<StrainEnergyFit> {
    check_points(points, 2, "strain energy fit")?;
    if let Some(&(t, _)) = points.iter().find(|(t, _)| !(*t > 0.0)) {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {t}")));
    }
    if !(d_perp > 0.0) {
        return Err(Error::InvalidParameter(format!("D⊥ must be positive, got {d_perp}")));
    }
    let model = StrainAveraged { d_perp, a_par };
    let (t, e) = split(points);
    let w = vec![1.0; t.len()];
    let data = Data::new(&t, &e, &w)?;
    // coarse log grid for the starting value
    let cost = |xi: f64| -> f64 {
        t.iter()
            .zip(&e)
            .map(|(&t, &e)| (e - super::lm::Model::eval(&model, t, &[xi])).powi(2))
            .sum()
    };
    let seed = (0..=200)
        .map(|i| 0.01 * 10f64.powf(i as f64 / 50.0))
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .expect("grid non-empty");
    let fit = fit_least_squares(&model, &data, &[seed], &LmConfig::default())?;
    let se = fit.std_errors();
    Ok(StrainEnergyFit {
        strain_energy: fit.params[0],
        strain_energy_std: se[0],
        fit,
    })
}

/// Φ(T) = |value/(d value/dT)| at `t` from a series obeying ln value = α + βT².
pub fn phi_from_series(points: &[(f64, f64)], t: f64) -> Result<f64> {
    check_points(points, 3, "Φ estimate")?;
    if let Some(&(_, v)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidInput(format!("series values must be positive, got {v}")));
    }
    let t2: Vec<f64> = points.iter().map(|p| p.0 * p.0).collect();
    let ln: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let f = polynomial_fit(&t2, &ln, 1)?;
    Ok(1.0 / (2.0 * f.coeffs[1] * t).abs())
}

//! Weighted linear least squares via SVD.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Singular-value ratio of the column-scaled design below which it is rank-deficient.
const RCOND: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coeffs: Vec<f64>,
    /// σ²(XᵀWX)⁻¹ with σ² = RSS/(m − k); zero when m = k.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.coeffs.len()).map(|i| self.covariance[i][i].max(0.0).sqrt()).collect()
    }
}

/// Solves min Σ wᵢ (yᵢ − Xᵢ·β)². `design` is m×k.
pub fn weighted_ols(design: &DMatrix<f64>, y: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    let (m, k) = design.shape();
    if y.len() != m {
        return Err(Error::InvalidInput("design rows and observations differ in length".into()));
    }
    if m < k {
        return Err(Error::InvalidInput(format!("{m} points cannot determine {k} coefficients")));
    }
    let sw: Vec<f64> = match weights {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; m],
    };
    let mut a = design.clone();
    for i in 0..m {
        for j in 0..k {
            a[(i, j)] *= sw[i];
        }
    }
    let mut scale = vec![0.0; k];
    for j in 0..k {
        let n = a.column(j).norm();
        if n == 0.0 {
            return Err(Error::RankDeficient(format!("coefficient {j} has no support in the data")));
        }
        scale[j] = n;
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let b = DVector::from_iterator(m, y.iter().zip(&sw).map(|(y, s)| y * s));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RCOND * smax) {
        return Err(Error::RankDeficient(format!(
            "design matrix singular-value ratio {:.2e}",
            smin / smax
        )));
    }
    let u = svd.u.as_ref().expect("u computed");
    let vt = svd.v_t.as_ref().expect("v_t computed");
    let utb = u.transpose() * &b;
    let z = DVector::from_iterator(k, (0..k).map(|i| utb[i] / svd.singular_values[i]));
    let beta_scaled = vt.transpose() * z;
    let coeffs: Vec<f64> = (0..k).map(|j| beta_scaled[j] / scale[j]).collect();

    let residuals: Vec<f64> = (0..m)
        .map(|i| y[i] - (0..k).map(|j| design[(i, j)] * coeffs[j]).sum::<f64>())
        .collect();
    let rss: f64 = residuals.iter().zip(&sw).map(|(r, s)| (r * s).powi(2)).sum();
    let sigma2 = if m > k { rss / (m - k) as f64 } else { 0.0 };
    let inv_s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let cov_scaled = vt.transpose() * inv_s2 * vt;
    let covariance = (0..k)
        .map(|i| (0..k).map(|j| sigma2 * cov_scaled[(i, j)] / (scale[i] * scale[j])).collect())
        .collect();
    Ok(LinearFit { coeffs, covariance, rss, residuals })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Polynomial fit y = Σ cⱼ xʲ (j = 0..=degree) with unit weights.
///
/// Solved in a centred, scaled variable and mapped back, so the covariance
/// refers to the raw monomial coefficients.
pub fn polynomial_fit(x: &[f64], y: &[f64], degree: usize) -> Result<LinearFit> {
    let m = x.len();
    if m != y.len() {
        return Err(Error::InvalidInput("x and y differ in length".into()));
    }
    let k = degree + 1;
    if m < k {
        return Err(Error::InvalidInput(format!("{m} points cannot determine a degree-{degree} polynomial")));
    }
    let mean = x.iter().sum::<f64>() / m as f64;
    let span = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if degree > 0 && span == 0.0 {
        return Err(Error::RankDeficient("all abscissae coincide".into()));
    }
    let s = if span > 0.0 { span } else { 1.0 };
    let design = DMatrix::from_fn(m, k, |i, j| ((x[i] - mean) / s).powi(j as i32));
    let inner = weighted_ols(&design, y, None)?;

    // raw_j = Σ_k M[j][k] α_k with M[j][k] = C(k, j)(−mean)^{k−j}/s^k
    let map = DMatrix::from_fn(k, k, |j, kk| {
        if j > kk {
            0.0
        } else {
            binomial(kk, j) * (-mean).powi((kk - j) as i32) / s.powi(kk as i32)
        }
    });
    let alpha = DVector::from_vec(inner.coeffs.clone());
    let raw = &map * alpha;
    let c_in = DMatrix::from_fn(k, k, |i, j| inner.covariance[i][j]);
    let c_raw = &map * c_in * map.transpose();
    Ok(LinearFit {
        coeffs: raw.iter().cloned().collect(),
        covariance: (0..k).map(|i| (0..k).map(|j| c_raw[(i, j)]).collect()).collect(),
        rss: inner.rss,
        residuals: inner.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic() {
        let x: Vec<f64> = (0..12).map(|i| 294.0 + 28.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 2870.0 + 0.06 * t - 2.3e-4 * t * t).collect();
        let f = polynomial_fit(&x, &y, 2).unwrap();
        assert!((f.coeffs[0] / 2870.0 - 1.0).abs() < 1e-10);
        assert!((f.coeffs[1] / 0.06 - 1.0).abs() < 1e-10);
        assert!((f.coeffs[2] / -2.3e-4 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coincident_abscissae() {
        assert!(matches!(polynomial_fit(&[1.0; 5], &[1.0; 5], 2), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn weights_enter_as_inverse_variance() {
        let design = DMatrix::from_element(2, 1, 1.0);
        let f = weighted_ols(&design, &[0.0, 3.0], Some(&[2.0, 1.0])).unwrap();
        assert!((f.coeffs[0] - 1.0).abs() < 1e-14);
    }
}

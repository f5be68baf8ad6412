//! Levenberg–Marquardt weighted nonlinear least squares.
//!
//! Minimizes Σ wᵢ (yᵢ − f(xᵢ; p))² with Marquardt's diagonal damping. Models
//! supply analytic gradients through [`Model`].

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A scalar curve y = f(x; p) with an analytic parameter gradient.
pub trait Model {
    fn n_params(&self) -> usize;

    fn eval(&self, x: f64, p: &[f64]) -> f64;

    /// Writes ∂f/∂p_j into `grad` (length `n_params`).
    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]);

    /// Trial points outside the model's domain are rejected by the optimizer.
    fn is_valid(&self, _p: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Gradient (scaled by column norms and residual norm) below tolerance.
    Gradient,
    /// Relative reduction of the cost on an accepted step below tolerance.
    CostReduction,
    /// Residuals vanish to working precision.
    ZeroResidual,
    /// No damped step reduces the cost any further.
    Stalled,
    /// Iteration cap reached.
    IterationLimit,
}

/// How the parameter covariance is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceScale {
    /// σ² = χ²/(m − n): weights are relative.
    ReducedChiSquare,
    /// σ² = 1: weights are inverse variances.
    Absolute,
}

#[derive(Debug, Clone, Copy)]
pub struct LmConfig {
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub gradient_tolerance: f64,
    pub initial_lambda: f64,
    pub lambda_factor: f64,
    pub max_lambda: f64,
    /// Reciprocal condition number of the scaled normal matrix below which the
    /// problem is rank-deficient.
    pub rcond: f64,
    pub covariance: CovarianceScale,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iterations: 500,
            cost_tolerance: 1e-10,
            gradient_tolerance: 1e-10,
            initial_lambda: 1e-3,
            lambda_factor: 10.0,
            max_lambda: 1e16,
            rcond: 1e-12,
            covariance: CovarianceScale::ReducedChiSquare,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// √(Σ wᵢ rᵢ²) at the solution.
    pub residual_norm: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Weighted residuals yᵢ − f(xᵢ) scaled by √wᵢ.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| self.covariance[i][i].max(0.0).sqrt()).collect()
    }

    /// Standard error of the linear combination Σ cⱼ pⱼ.
    pub fn combination_std(&self, coeffs: &[f64]) -> f64 {
        let mut v = 0.0;
        for (i, ci) in coeffs.iter().enumerate() {
            for (j, cj) in coeffs.iter().enumerate() {
                v += ci * cj * self.covariance[i][j];
            }
        }
        v.max(0.0).sqrt()
    }

    pub fn reduced_chi_square(&self) -> f64 {
        let dof = self.residuals.len().saturating_sub(self.params.len());
        if dof == 0 {
            0.0
        } else {
            self.residual_norm * self.residual_norm / dof as f64
        }
    }
}

/// Observations with per-point weights.
#[derive(Debug, Clone, Copy)]
pub struct Data<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub weights: &'a [f64],
}

impl<'a> Data<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64], weights: &'a [f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("no data points".into()));
        }
        if x.len() != y.len() || x.len() != weights.len() {
            return Err(Error::InvalidInput("x, y and weights must have equal lengths".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!("weights must be non-negative, got {w}")));
        }
        Ok(Data { x, y, weights })
    }
}

/// Poisson weights 1/max(counts, 1).
pub fn poisson_weights(counts: &[f64]) -> Vec<f64> {
    counts.iter().map(|c| 1.0 / c.max(1.0)).collect()
}

struct Linearization {
    jtj: DMatrix<f64>,
    jtr: DVector<f64>,
}

fn weighted_residuals<M: Model + ?Sized>(model: &M, data: &Data, p: &[f64]) -> Vec<f64> {
    data.x
        .iter()
        .zip(data.y)
        .zip(data.weights)
        .map(|((&x, &y), &w)| w.sqrt() * (y - model.eval(x, p)))
        .collect()
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn linearize<M: Model + ?Sized>(model: &M, data: &Data, p: &[f64], r: &[f64]) -> Linearization {
    let n = p.len();
    let mut jtj = DMatrix::zeros(n, n);
    let mut jtr = DVector::zeros(n);
    let mut g = vec![0.0; n];
    for (i, &x) in data.x.iter().enumerate() {
        let sw = data.weights[i].sqrt();
        if sw == 0.0 {
            continue;
        }
        model.gradient(x, p, &mut g);
        for a in 0..n {
            let ja = sw * g[a];
            jtr[a] += ja * r[i];
            for b in a..n {
                jtj[(a, b)] += ja * sw * g[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[(a, b)] = jtj[(b, a)];
        }
    }
    Linearization { jtj, jtr }
}

/// Inverse of a symmetric positive semi-definite matrix after Jacobi column
/// scaling; fails when the scaled matrix is numerically singular.
pub(crate) fn scaled_inverse(a: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut scale = DVector::zeros(n);
    for i in 0..n {
        let d = a[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::RankDeficient(format!("parameter {i} has no influence on the model")));
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let mut s = a.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] *= scale[i] * scale[j];
        }
    }
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > rcond * max) {
        return Err(Error::RankDeficient(format!(
            "scaled normal matrix has reciprocal condition {:.2e}",
            min / max
        )));
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    let mut out = inv;
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] *= scale[i] * scale[j];
        }
    }
    Ok(out)
}

fn scaled_gradient(lin: &Linearization, cost: f64) -> f64 {
    let rn = cost.sqrt();
    if rn == 0.0 {
        return 0.0;
    }
    (0..lin.jtr.len())
        .map(|j| {
            let col = lin.jtj[(j, j)].sqrt();
            if col == 0.0 {
                0.0
            } else {
                (lin.jtr[j] / (col * rn)).abs()
            }
        })
        .fold(0.0, f64::max)
}

const POLISH_STEPS: usize = 5;

/// Gauss-Newton steps past the point where the cost stops resolving
/// improvements; a step is kept while the gradient shrinks and the cost
/// does not rise beyond rounding.
fn polish<M: Model + ?Sized>(model: &M, data: &Data, p: &mut Vec<f64>, r: &mut Vec<f64>, cost: &mut f64, lin: &mut Linearization) {
    let n = p.len();
    let grad = |l: &Linearization| l.jtr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..POLISH_STEPS {
        let mut damped = lin.jtj.clone();
        for j in 0..n {
            damped[(j, j)] += 1e-12 * lin.jtj[(j, j)].max(1e-300);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&lin.jtr)) else {
            return;
        };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        if !(trial.iter().all(|v| v.is_finite()) && model.is_valid(&trial)) {
            return;
        }
        let r_trial = weighted_residuals(model, data, &trial);
        let c_trial = cost_of(&r_trial);
        if !(c_trial <= *cost * (1.0 + 8.0 * f64::EPSILON)) {
            return;
        }
        let l_trial = linearize(model, data, &trial, &r_trial);
        if !(grad(&l_trial) < grad(lin)) {
            return;
        }
        *p = trial;
        *r = r_trial;
        *cost = c_trial;
        *lin = l_trial;
    }
}

/// Fits `model` to `data` starting from `init`.
///
/// Returns `converged = false` at the iteration cap. Rank-deficient normal
/// equations at the solution are reported as [`Error::RankDeficient`].
pub fn fit_least_squares<M: Model + ?Sized>(model: &M, data: &Data, init: &[f64], cfg: &LmConfig) -> Result<FitResult> {
    let n = model.n_params();
    if init.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial guess has {} parameters, model expects {n}",
            init.len()
        )));
    }
    if let Some(v) = init.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("initial guess contains {v}")));
    }
    if !model.is_valid(init) {
        return Err(Error::InvalidInput("initial guess outside the model domain".into()));
    }

    let y_scale: f64 = data.y.iter().zip(data.weights).map(|(y, w)| w * y * y).sum::<f64>().sqrt();
    let zero_tol = 1e-15 * y_scale.max(f64::MIN_POSITIVE);

    let mut p = init.to_vec();
    let mut r = weighted_residuals(model, data, &p);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Numerical("model is not finite at the initial guess".into()));
    }
    let mut lambda = cfg.initial_lambda;
    let mut iterations = 0;
    let mut termination = Termination::IterationLimit;
    let mut lin = linearize(model, data, &p, &r);

    'outer: while iterations < cfg.max_iterations {
        if cost.sqrt() <= zero_tol {
            termination = Termination::ZeroResidual;
            break;
        }
        if scaled_gradient(&lin, cost) <= cfg.gradient_tolerance {
            termination = Termination::Gradient;
            break;
        }
        iterations += 1;
        loop {
            let mut damped = lin.jtj.clone();
            for j in 0..n {
                let d = lin.jtj[(j, j)];
                damped[(j, j)] = d + lambda * d.max(1e-300);
            }
            let step = damped.cholesky().map(|c| c.solve(&lin.jtr));
            if let Some(step) = step {
                let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                if trial.iter().all(|v| v.is_finite()) && model.is_valid(&trial) {
                    let r_trial = weighted_residuals(model, data, &trial);
                    let c_trial = cost_of(&r_trial);
                    if c_trial.is_finite() && c_trial < cost {
                        let reduction = (cost - c_trial) / cost;
                        p = trial;
                        r = r_trial;
                        cost = c_trial;
                        lin = linearize(model, data, &p, &r);
                        lambda = (lambda / cfg.lambda_factor).max(1e-12);
                        if reduction < cfg.cost_tolerance {
                            termination = Termination::CostReduction;
                            break 'outer;
                        }
                        continue 'outer;
                    }
                }
            }
            lambda *= cfg.lambda_factor;
            if lambda > cfg.max_lambda {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }

    if matches!(termination, Termination::CostReduction | Termination::Stalled) {
        polish(model, data, &mut p, &mut r, &mut cost, &mut lin);
    }

    let converged = termination != Termination::IterationLimit;
    let inv = scaled_inverse(&lin.jtj, cfg.rcond)?;
    let m = data.x.iter().zip(data.weights).filter(|(_, w)| **w > 0.0).count();
    let sigma2 = match cfg.covariance {
        CovarianceScale::Absolute => 1.0,
        CovarianceScale::ReducedChiSquare => {
            if m > n {
                cost / (m - n) as f64
            } else {
                0.0
            }
        }
    };
    let covariance = (0..n).map(|i| (0..n).map(|j| sigma2 * inv[(i, j)]).collect()).collect();
    Ok(FitResult {
        params: p,
        covariance,
        residual_norm: cost.sqrt(),
        n_iterations: iterations,
        converged,
        termination,
        residuals: r,
    })
}

/// Gradient of Σ wᵢ rᵢ² with respect to the parameters, −2 JᵀW r.
pub fn cost_gradient<M: Model + ?Sized>(model: &M, data: &Data, p: &[f64]) -> Vec<f64> {
    let r = weighted_residuals(model, data, p);
    let lin = linearize(model, data, p, &r);
    lin.jtr.iter().map(|v| -2.0 * v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;
    impl Model for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, x: f64, p: &[f64]) -> f64 {
            p[0] + p[1] * x
        }
        fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) {
            g[0] = 1.0;
            g[1] = x;
        }
    }

    struct Exp;
    impl Model for Exp {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, x: f64, p: &[f64]) -> f64 {
            p[0] * (-p[1] * x).exp()
        }
        fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) {
            let e = (-p[1] * x).exp();
            g[0] = e;
            g[1] = -p[0] * x * e;
        }
    }

    #[test]
    fn collinear_points_match_closed_form() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 3.0, 5.0];
        let w = [1.0; 3];
        let fit = fit_least_squares(&Line, &Data::new(&x, &y, &w).unwrap(), &[0.0, 0.0], &LmConfig::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 1.0).abs() < 1e-12);
        assert!((fit.params[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn truth_is_a_fixed_point() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&x| Exp.eval(x, &[3.0, 1.5])).collect();
        let w = vec![1.0; x.len()];
        let fit = fit_least_squares(&Exp, &Data::new(&x, &y, &w).unwrap(), &[3.0, 1.5], &LmConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.n_iterations <= 2);
        assert!(fit.residual_norm <= 1e-12);
    }

    #[test]
    fn converges_from_afar() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&x| Exp.eval(x, &[2.0, 0.7])).collect();
        let w = vec![1.0; x.len()];
        let fit = fit_least_squares(&Exp, &Data::new(&x, &y, &w).unwrap(), &[1.0, 3.0], &LmConfig::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 2.0).abs() < 1e-9);
        assert!((fit.params[1] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn duplicate_x_is_rank_deficient() {
        let x = [1.0, 1.0, 1.0];
        let y = [2.0, 2.1, 1.9];
        let w = [1.0; 3];
        let err = fit_least_squares(&Line, &Data::new(&x, &y, &w).unwrap(), &[0.0, 0.0], &LmConfig::default());
        assert!(matches!(err, Err(Error::RankDeficient(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&x| Exp.eval(x, &[2.0, 0.7]) + 0.01 * (x * 7.0).sin()).collect();
        let w = vec![1.0; x.len()];
        let cfg = LmConfig { max_iterations: 1, ..LmConfig::default() };
        let fit = fit_least_squares(&Exp, &Data::new(&x, &y, &w).unwrap(), &[1.0, 3.0], &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.termination, Termination::IterationLimit);
    }

    #[test]
    fn arity_mismatch() {
        let x = [0.0];
        let w = [1.0];
        assert!(fit_least_squares(&Line, &Data::new(&x, &x, &w).unwrap(), &[0.0], &LmConfig::default()).is_err());
        assert!(Data::new(&[], &[], &[]).is_err());
    }
}

//! Weighted least-squares fitting and the spectral and calibration recipes.

pub mod calibration;
pub mod linear;
pub mod lm;
pub mod models;
pub mod odmr;
pub mod zpl;

pub use calibration::*;
pub use linear::{polynomial_fit, weighted_ols, LinearFit};
pub use lm::{fit_least_squares, poisson_weights, CovarianceScale, Data, FitResult, LmConfig, Model, Termination};
pub use odmr::{fit_odmr, seed_odmr_lines, OdmrFit};
pub use zpl::*;

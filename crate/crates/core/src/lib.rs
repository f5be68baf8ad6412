//! Spin-resonance and Debye–Waller-factor thermometry of NV- centres in diamond.
//!
//! - [`spin`]: zero-field spin Hamiltonian with 14N hyperfine, transition
//!   frequencies and ODMR line synthesis.
//! - [`thermo`]: closed-form temperature models (DWF, sensitivity, expansion
//!   and electron-phonon shifts, excited-state strain averaging).
//! - [`fit`]: Levenberg–Marquardt engine and the fitting recipes built on it.
//! - [`noise`]: Poisson spectrum synthesis, Monte-Carlo noise floors and
//!   time-series analysis.
//! - [`io`]: CSV/JSON file formats.

pub mod constants;
pub mod error;
pub mod fit;
pub mod io;
pub mod noise;
pub mod quadrature;
pub mod spectrum;
pub mod spin;
pub mod thermo;

pub use error::{Error, Result};
pub use spectrum::{AxisUnit, Spectrum};

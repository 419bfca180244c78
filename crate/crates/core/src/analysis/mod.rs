//! Nonlinear least squares and the fit models for decay curves, optical
//! spectra, microwave thermometry and power regressions.

pub mod fits;
pub mod linear;
pub mod lm;
pub mod models;
pub mod peaks;
pub mod report;

pub use fits::{
    fit_double_exponential, fit_exponential, fit_linear, fit_multi_gaussian,
    fit_multi_gaussian_from, fit_multi_gaussian_with, fit_temperature, fit_temperature_with,
    poisson_weights, TemperatureFitOptions,
};
pub use linear::{linear_fit, weighted_linear_fit, LinearFit};
pub use lm::{levenberg_marquardt, numeric_jacobian, FitModel, LmOptions};
pub use models::{DoubleExponential, Exponential, Linear, MultiGaussian, ThermalLine};
pub use peaks::{find_peaks, seed_peaks, Peak, PeakOptions};
pub use report::FitReport;

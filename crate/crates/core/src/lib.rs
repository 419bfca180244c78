//! Simulation and analysis of photoionization spectroscopy on magnetically
//! trapped ultracold ⁸⁷Rb.
//!
//! * [`physics`]: constants, trap and beam potentials, excitation and
//!   ionization rates.
//! * [`ensemble`]: thermal clouds sampled and propagated by Monte Carlo.
//! * [`experiment`]: decay runs, optical scans and microwave scans producing
//!   binned ion counts.
//! * [`analysis`]: Levenberg–Marquardt fitting and the spectral, decay and
//!   temperature models.
//! * [`config`]: the line-oriented run configuration, presets and the run
//!   pipeline used by the command-line tool.

pub mod analysis;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod physics;
pub mod rng;

pub use error::{Error, Result};

//! Physical constants, potentials, rate laws and trap geometry.

pub mod beam;
pub mod constants;
pub mod landscape;
pub mod rates;
pub mod trap;

pub use beam::{dipole_potential, BeamConfig, BeamRole};
pub use constants::PhysicalConstants;
pub use landscape::{Landscape, Potential};
pub use rates::{line_density_thermal, unit_gaussian, HyperfineSpectrum, RateModel};
pub use trap::{magnetic_potential, resonance_shell, TrapConfig};

//! CODATA 2018 constants in SI units.

use std::f64::consts::PI;

/// Fundamental constants used by every rate and geometry formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Planck constant, J·s.
    pub h: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Mass of a ⁸⁷Rb atom, kg.
    pub mass: f64,
}

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// 86.909 180 527 u.
pub const RB87_MASS: f64 = 86.909_180_527 * 1.660_539_066_60e-27;

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        h: PLANCK,
        k_b: BOLTZMANN,
        mu_b: BOHR_MAGNETON,
        mass: RB87_MASS,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

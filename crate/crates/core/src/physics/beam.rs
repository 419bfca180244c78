//! Collimated Gaussian laser beams: intensity, ground-state light shift,
//! photon scattering and the resulting dipole potential.
//!
//! All beams pass through the chip hole at the coordinate origin. The light
//! shift and scattering rate are stored per watt at the beam center and follow
//! the same `exp(-2ρ²/w²)` envelope, so their ratio is position independent.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::constants::PLANCK;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeamRole {
    /// Two-photon excitation laser near 778 nm; repulsive for the ground state.
    Diode778,
    /// Ionization laser near 1080 nm; forms an attractive dimple.
    Fiber1080,
}

impl BeamRole {
    pub fn name(self) -> &'static str {
        match self {
            BeamRole::Diode778 => "diode",
            BeamRole::Fiber1080 => "fiber",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub role: BeamRole,
    /// W
    pub power: f64,
    /// 1/e² intensity radius, m.
    pub waist: f64,
    /// Propagation direction (unit vector).
    pub axis: Vector3<f64>,
    /// Ground-state shift per watt at the beam center, Hz/W.
    pub shift_coefficient: f64,
    /// Scattering rate per watt at the beam center, s⁻¹/W.
    pub scatter_coefficient: f64,
    /// Fraction of each chopping period the beam is on.
    pub duty_cycle: f64,
}

impl BeamConfig {
    /// Diode laser with a 34 µm radius and the calculated 778 nm coefficients
    /// (−97.6 kHz/mW light shift, 3.2 s⁻¹/mW scattering).
    pub fn diode(power: f64) -> Self {
        BeamConfig {
            role: BeamRole::Diode778,
            power,
            waist: 34e-6,
            axis: Vector3::z(),
            shift_coefficient: -97.6e6,
            scatter_coefficient: 3.2e3,
            duty_cycle: 1.0,
        }
    }

    /// Fiber laser with a 26 µm radius and the calculated 1080 nm coefficients
    /// (2.9 MHz/W light shift, 0.47 s⁻¹/W scattering).
    pub fn fiber(power: f64) -> Self {
        BeamConfig {
            role: BeamRole::Fiber1080,
            power,
            waist: 26e-6,
            axis: Vector3::z(),
            shift_coefficient: 2.9e6,
            scatter_coefficient: 0.47,
            duty_cycle: 1.0,
        }
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::invalid("power", "must be non-negative"));
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::invalid("waist", "must be positive"));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::invalid("duty_cycle", "must lie in (0, 1]"));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("axis", "must be a unit vector"));
        }
        if !(self.scatter_coefficient >= 0.0) {
            return Err(Error::invalid(
                "scatter_coefficient",
                "must be non-negative",
            ));
        }
        let sign_ok = match self.role {
            BeamRole::Diode778 => self.shift_coefficient < 0.0,
            BeamRole::Fiber1080 => self.shift_coefficient > 0.0,
        };
        if !sign_ok {
            return Err(Error::invalid(
                "shift_coefficient",
                "diode shift must be negative and fiber shift positive",
            ));
        }
        Ok(())
    }

    /// Displacement from the beam axis, perpendicular to it.
    #[inline]
    pub fn transverse(&self, pos: &Vector3<f64>) -> Vector3<f64> {
        pos - self.axis * self.axis.dot(pos)
    }

    #[inline]
    pub fn envelope(&self, pos: &Vector3<f64>) -> f64 {
        let rho2 = self.transverse(pos).norm_squared();
        (-2.0 * rho2 / (self.waist * self.waist)).exp()
    }

    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power / (PI * self.waist * self.waist)
    }

    /// W/m²
    pub fn intensity(&self, pos: &Vector3<f64>) -> f64 {
        self.peak_intensity() * self.envelope(pos)
    }

    /// Light shift at the beam center, Hz.
    #[inline]
    pub fn peak_light_shift(&self) -> f64 {
        self.shift_coefficient * self.power
    }

    /// Ground-state light shift, Hz.
    pub fn light_shift(&self, pos: &Vector3<f64>) -> f64 {
        self.peak_light_shift() * self.envelope(pos)
    }

    /// Photon scattering rate, s⁻¹.
    pub fn scattering_rate(&self, pos: &Vector3<f64>) -> f64 {
        self.scatter_coefficient * self.power * self.envelope(pos)
    }

    /// Time-averaged depth of the optical potential at the center, J.
    /// Negative for attractive beams.
    #[inline]
    pub fn peak_energy(&self) -> f64 {
        -PLANCK * self.peak_light_shift() * self.duty_cycle
    }

    /// Time-averaged optical potential energy, J.
    pub fn energy(&self, pos: &Vector3<f64>) -> f64 {
        self.peak_energy() * self.envelope(pos)
    }

    /// Optical dipole force for a known envelope value at `pos`.
    #[inline]
    pub fn force_with_envelope(&self, pos: &Vector3<f64>, envelope: f64) -> Vector3<f64> {
        // U = U0·exp(-2ρ²/w²)  ⇒  F = 4·U0·e/w² · ρ⃗
        let k = 4.0 * self.peak_energy() * envelope / (self.waist * self.waist);
        self.transverse(pos) * k
    }

    pub fn force(&self, pos: &Vector3<f64>) -> Vector3<f64> {
        self.force_with_envelope(pos, self.envelope(pos))
    }

    /// Transverse spring constant at the axis, J/m². Negative for repulsive beams.
    pub fn axis_curvature(&self) -> f64 {
        -4.0 * self.peak_energy() / (self.waist * self.waist)
    }
}

/// Sum of the optical potentials of `beams`, J.
pub fn dipole_potential(pos: &Vector3<f64>, beams: &[BeamConfig]) -> f64 {
    beams.iter().map(|b| b.energy(pos)).sum()
}

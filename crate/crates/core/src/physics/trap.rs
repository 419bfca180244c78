//! Harmonic magnetic trap and its constant-field resonance shells.
//!
//! The trap is cylindrically symmetric: weak along `x` (the chip wire axis),
//! stiff and equal along `y` and `z`. Energies are in J, the microwave detuning
//! `delta_omega` in rad/s.

use nalgebra::Vector3;

use super::constants::{HBAR, RB87_MASS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    /// Axial angular frequency, rad/s.
    pub omega_x: f64,
    /// Radial angular frequency, rad/s.
    pub omega_r: f64,
    /// Trap minimum, m.
    pub center: Vector3<f64>,
    /// Microwave resonance frequency at the trap bottom, Hz.
    pub bottom_frequency: f64,
}

impl TrapConfig {
    pub fn new(omega_x: f64, omega_r: f64) -> Result<Self> {
        let trap = TrapConfig {
            omega_x,
            omega_r,
            center: Vector3::zeros(),
            bottom_frequency: 6.8353e9,
        };
        trap.validate()?;
        Ok(trap)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_x > 0.0 && self.omega_x.is_finite()) {
            return Err(Error::invalid("omega_x", "must be positive"));
        }
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return Err(Error::invalid("omega_r", "must be positive"));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("center", "must be finite"));
        }
        Ok(())
    }

    /// Angular frequency along axis `i` (0 = x, 1 = y, 2 = z).
    #[inline]
    pub fn axis_frequency(&self, i: usize) -> f64 {
        if i == 0 {
            self.omega_x
        } else {
            self.omega_r
        }
    }

    /// ½mω_x²x² + ½mω_r²(y² + z²) measured from the trap center.
    #[inline]
    pub fn potential(&self, pos: &Vector3<f64>) -> f64 {
        let d = pos - self.center;
        0.5 * RB87_MASS
            * (self.omega_x * self.omega_x * d.x * d.x
                + self.omega_r * self.omega_r * (d.y * d.y + d.z * d.z))
    }

    #[inline]
    pub fn force(&self, pos: &Vector3<f64>) -> Vector3<f64> {
        let d = pos - self.center;
        -RB87_MASS
            * Vector3::new(
                self.omega_x * self.omega_x * d.x,
                self.omega_r * self.omega_r * d.y,
                self.omega_r * self.omega_r * d.z,
            )
    }

    /// Semi-axes of the ellipsoid on which the microwave at `delta_omega` is
    /// resonant, i.e. where the trap energy equals (2/3)ħΔω.
    pub fn resonance_shell(&self, delta_omega: f64) -> Result<Vector3<f64>> {
        if delta_omega < 0.0 || delta_omega.is_nan() {
            return Err(Error::NegativeDetuning(delta_omega));
        }
        let energy = 2.0 / 3.0 * HBAR * delta_omega;
        let semi = |omega: f64| (2.0 * energy / (RB87_MASS * omega * omega)).sqrt();
        Ok(Vector3::new(
            semi(self.omega_x),
            semi(self.omega_r),
            semi(self.omega_r),
        ))
    }

    /// Local microwave detuning from the trap-bottom resonance, rad/s.
    #[inline]
    pub fn zeeman_detuning(&self, pos: &Vector3<f64>) -> f64 {
        1.5 / HBAR * self.potential(pos)
    }
}

/// Free-function form of [`TrapConfig::potential`].
pub fn magnetic_potential(pos: &Vector3<f64>, trap: &TrapConfig) -> f64 {
    trap.potential(pos)
}

/// Free-function form of [`TrapConfig::resonance_shell`].
pub fn resonance_shell(delta_omega: f64, trap: &TrapConfig) -> Result<Vector3<f64>> {
    trap.resonance_shell(delta_omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::constants::BOLTZMANN;
    use std::f64::consts::PI;

    fn reference_trap() -> TrapConfig {
        TrapConfig::new(2.0 * PI * 17.0, 2.0 * PI * 240.0).unwrap()
    }

    #[test]
    fn minimum_at_center() {
        let mut trap = reference_trap();
        trap.center = Vector3::new(1e-6, -2e-6, 3e-6);
        assert_eq!(trap.potential(&trap.center), 0.0);
        assert!(trap.potential(&Vector3::zeros()) > 0.0);
    }

    #[test]
    fn coverage_threshold_energy() {
        let trap = reference_trap();
        let u = trap.potential(&Vector3::new(26.4e-6, 0.0, 0.0));
        let expected = 2.0 / 3.0 * HBAR * 2.0 * PI * 1.3e3;
        // x = 26.4 µm is the rounded semi-axis, so agreement is at the 0.1 % level
        assert!((u - expected).abs() / expected < 2e-3, "{u} vs {expected}");
        assert!((u - 5.74e-31).abs() < 0.01e-31);
    }

    #[test]
    fn radial_thermal_width_energy() {
        let trap = reference_trap();
        let t = 18e-6;
        let sigma = (BOLTZMANN * t / (RB87_MASS * trap.omega_r.powi(2))).sqrt();
        assert!((sigma - 27.5e-6).abs() < 0.05e-6);
        let u = trap.potential(&Vector3::new(0.0, 0.0, sigma));
        assert!((u - 0.5 * BOLTZMANN * t).abs() / u < 1e-12);
    }

    #[test]
    fn shell_semi_axes() {
        let trap = reference_trap();
        assert_eq!(trap.resonance_shell(0.0).unwrap(), Vector3::zeros());
        let a = trap.resonance_shell(2.0 * PI * 1.3e3).unwrap();
        assert!((a.x - 26.4e-6).abs() < 0.1e-6, "{}", a.x);
        assert_eq!(a.y, a.z);
        let a = trap.resonance_shell(2.0 * PI * 1e6).unwrap();
        let dw = 2.0 * PI * 1e6;
        let sheet = (4.0 * HBAR * dw / (3.0 * RB87_MASS * trap.omega_r.powi(2))).sqrt();
        assert!((a.z - sheet).abs() / sheet < 1e-14);
        assert!((a.z - 51.9e-6).abs() < 0.05e-6, "{}", a.z);
    }

    #[test]
    fn shell_rejects_negative_detuning() {
        assert!(matches!(
            reference_trap().resonance_shell(-1.0),
            Err(Error::NegativeDetuning(_))
        ));
    }

    #[test]
    fn shell_energy_round_trip() {
        let trap = reference_trap();
        for dw in [
            2.0 * PI * 10.0,
            2.0 * PI * 1.3e3,
            2.0 * PI * 2.5e5,
            2.0 * PI * 6e6,
        ] {
            let a = trap.resonance_shell(dw).unwrap();
            let target = 2.0 / 3.0 * HBAR * dw;
            for p in [
                Vector3::new(a.x, 0.0, 0.0),
                Vector3::new(0.0, a.y, 0.0),
                Vector3::new(0.0, 0.0, a.z),
            ] {
                assert!((trap.potential(&p) - target).abs() / target < 1e-12);
                assert!((trap.zeeman_detuning(&p) - dw).abs() / dw < 1e-12);
            }
        }
    }

    #[test]
    fn force_is_negative_gradient() {
        let trap = reference_trap();
        let p = Vector3::new(40e-6, -7e-6, 12e-6);
        let f = trap.force(&p);
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = 1e-9;
            let num = -(trap.potential(&(p + e)) - trap.potential(&(p - e))) / 2e-9;
            assert!((num - f[i]).abs() <= 1e-6 * f[i].abs().max(1e-40));
        }
    }

    #[test]
    fn rejects_bad_frequencies() {
        assert!(TrapConfig::new(0.0, 1.0).is_err());
        assert!(TrapConfig::new(1.0, -1.0).is_err());
    }
}

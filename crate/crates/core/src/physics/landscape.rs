//! Combined magnetic + optical potential seen by the atoms.

use nalgebra::Vector3;

use super::beam::BeamConfig;
use super::constants::{BOLTZMANN, RB87_MASS};
use super::trap::TrapConfig;

/// Conservative external potential for the classical atom dynamics.
pub trait Potential: Sync {
    /// J
    fn energy(&self, pos: &Vector3<f64>) -> f64;

    /// N
    fn force(&self, pos: &Vector3<f64>) -> Vector3<f64>;

    /// Stiffest small-oscillation angular frequency present, rad/s.
    fn max_angular_frequency(&self) -> f64;

    /// Harmonic reference: center and per-axis angular frequencies of a trap
    /// that bounds the potential at large distance. Used to seed and to make
    /// global proposals in the sampler.
    fn reference(&self) -> (Vector3<f64>, Vector3<f64>);

    /// True when the potential equals its harmonic reference exactly.
    fn is_harmonic(&self) -> bool {
        false
    }
}

impl Potential for TrapConfig {
    fn energy(&self, pos: &Vector3<f64>) -> f64 {
        self.potential(pos)
    }

    fn force(&self, pos: &Vector3<f64>) -> Vector3<f64> {
        TrapConfig::force(self, pos)
    }

    fn max_angular_frequency(&self) -> f64 {
        self.omega_x.max(self.omega_r)
    }

    fn reference(&self) -> (Vector3<f64>, Vector3<f64>) {
        (
            self.center,
            Vector3::new(self.omega_x, self.omega_r, self.omega_r),
        )
    }

    fn is_harmonic(&self) -> bool {
        true
    }
}

/// Magnetic trap plus any number of collimated beams.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub trap: TrapConfig,
    pub beams: Vec<BeamConfig>,
}

impl Landscape {
    pub fn new(trap: TrapConfig, beams: Vec<BeamConfig>) -> Self {
        Landscape { trap, beams }
    }

    pub fn magnetic(trap: TrapConfig) -> Self {
        Landscape {
            trap,
            beams: Vec::new(),
        }
    }
}

impl Potential for Landscape {
    fn energy(&self, pos: &Vector3<f64>) -> f64 {
        self.trap.potential(pos) + self.beams.iter().map(|b| b.energy(pos)).sum::<f64>()
    }

    fn force(&self, pos: &Vector3<f64>) -> Vector3<f64> {
        self.beams
            .iter()
            .fold(self.trap.force(pos), |f, b| f + b.force(pos))
    }

    fn max_angular_frequency(&self) -> f64 {
        let mut max: f64 = 0.0;
        for i in 0..3 {
            let w = self.trap.axis_frequency(i);
            let mut k = RB87_MASS * w * w;
            for b in &self.beams {
                let c = b.axis_curvature();
                if c > 0.0 {
                    k += c * (1.0 - b.axis[i] * b.axis[i]);
                }
            }
            max = max.max((k / RB87_MASS).sqrt());
        }
        max
    }

    fn reference(&self) -> (Vector3<f64>, Vector3<f64>) {
        self.trap.reference()
    }

    fn is_harmonic(&self) -> bool {
        self.beams.iter().all(|b| b.power == 0.0)
    }
}

/// Thermal rms width of a harmonic oscillator, m.
pub fn thermal_width(omega: f64, temperature: f64) -> f64 {
    (BOLTZMANN * temperature / (RB87_MASS * omega * omega)).sqrt()
}

/// Thermal rms velocity per component, m/s.
pub fn thermal_velocity(temperature: f64) -> f64 {
    (BOLTZMANN * temperature / RB87_MASS).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dimple_stiffens_the_trap() {
        let trap = TrapConfig::new(2.0 * PI * 17.0, 2.0 * PI * 240.0).unwrap();
        let bare = Landscape::magnetic(trap);
        assert!((bare.max_angular_frequency() - 2.0 * PI * 240.0).abs() < 1e-9);
        let dimple = Landscape::new(trap, vec![BeamConfig::fiber(1.6)]);
        let f = dimple.max_angular_frequency() / (2.0 * PI);
        // sqrt(4·h·4.64 MHz/(m w²)) ≈ 2π·1.79 kHz, plus the magnetic curvature
        assert!(f > 1780.0 && f < 1820.0, "{f}");
    }

    #[test]
    fn energy_and_force_add_up() {
        let trap = TrapConfig::new(2.0 * PI * 17.0, 2.0 * PI * 240.0).unwrap();
        let l = Landscape::new(trap, vec![BeamConfig::fiber(1.0), BeamConfig::diode(3e-4)]);
        let p = Vector3::new(12e-6, 5e-6, -30e-6);
        let e = trap.potential(&p) + l.beams[0].energy(&p) + l.beams[1].energy(&p);
        assert_eq!(l.energy(&p), e);
        for i in 0..3 {
            let mut d = Vector3::zeros();
            d[i] = 1e-10;
            let num = -(l.energy(&(p + d)) - l.energy(&(p - d))) / 2e-10;
            assert!((num - l.force(&p)[i]).abs() < 1e-6 * l.force(&p).norm());
        }
    }

    #[test]
    fn widths() {
        assert!((thermal_velocity(18e-6) - 0.0415).abs() < 1e-4);
        assert!((thermal_width(2.0 * PI * 240.0, 18e-6) - 27.5e-6).abs() < 0.1e-6);
    }
}

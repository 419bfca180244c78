use nalgebra::Vector3;

use crate::error::Result;
use crate::physics::constants::RB87_MASS;
use crate::physics::{BeamConfig, HyperfineSpectrum, Landscape, Potential, RateModel, TrapConfig};
use std::f64::consts::PI;

/// Everything about the apparatus that stays fixed across a run: the trap,
/// both lasers (their powers are set per protocol), the rate constants and
/// the hyperfine line model.
#[derive(Debug, Clone, PartialEq)]
pub struct Apparatus {
    pub trap: TrapConfig,
    pub diode: BeamConfig,
    pub fiber: BeamConfig,
    pub rates: RateModel,
    pub spectrum: HyperfineSpectrum,
    /// Period of the laser chopping, s. Only relevant for duty cycles below 1.
    pub chop_period: f64,
}

impl Default for Apparatus {
    fn default() -> Self {
        Apparatus {
            trap: TrapConfig::new(2.0 * PI * 17.0, 2.0 * PI * 240.0).expect("valid trap"),
            diode: BeamConfig::diode(300e-6),
            fiber: BeamConfig::fiber(1.6),
            rates: RateModel::default(),
            spectrum: HyperfineSpectrum::default(),
            chop_period: 1e-3,
        }
    }
}

impl Apparatus {
    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        self.diode.validate()?;
        self.fiber.validate()?;
        self.rates.validate()?;
        self.spectrum.validate()?;
        if !(self.chop_period > 0.0) {
            return Err(crate::Error::invalid("chop_period", "must be positive"));
        }
        Ok(())
    }

    /// The apparatus with the two lasers at the given powers.
    pub fn scene(&self, diode_power: f64, fiber_power: f64) -> Scene {
        Scene {
            trap: self.trap,
            diode: self.diode.with_power(diode_power),
            fiber: self.fiber.with_power(fiber_power),
        }
    }

    /// Magnitude of the time-averaged dimple depth at `fiber_power`, J.
    pub fn dimple_depth(&self, fiber_power: f64) -> f64 {
        self.fiber.with_power(fiber_power).peak_energy().abs()
    }
}

/// Local field quantities shared by the force and the hazard evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LocalField {
    pub accel: Vector3<f64>,
    pub diode_envelope: f64,
    pub fiber_envelope: f64,
}

/// Beyond this many waists from its axis a beam is treated as dark: the
/// envelope there is below 3e-11.
pub(crate) const CUTOFF_WAISTS: f64 = 3.5;

/// Beam envelope, set to zero beyond the cutoff.
#[inline]
fn cut_envelope(beam: &BeamConfig, pos: &Vector3<f64>) -> f64 {
    let rho2 = beam.transverse(pos).norm_squared();
    let w2 = beam.waist * beam.waist;
    if rho2 > CUTOFF_WAISTS * CUTOFF_WAISTS * w2 || beam.power == 0.0 {
        0.0
    } else {
        (-2.0 * rho2 / w2).exp()
    }
}

/// Trap plus diode and fiber beams at fixed powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    pub trap: TrapConfig,
    pub diode: BeamConfig,
    pub fiber: BeamConfig,
}

impl Scene {
    #[inline]
    pub fn field(&self, pos: &Vector3<f64>) -> LocalField {
        let ed = cut_envelope(&self.diode, pos);
        let ef = cut_envelope(&self.fiber, pos);
        let mut f = self.trap.force(pos);
        if ed > 0.0 {
            f += self.diode.force_with_envelope(pos, ed);
        }
        if ef > 0.0 {
            f += self.fiber.force_with_envelope(pos, ef);
        }
        LocalField {
            accel: f / RB87_MASS,
            diode_envelope: ed,
            fiber_envelope: ef,
        }
    }

    /// True when `pos` is farther than `margin` from the region where either
    /// lit beam acts, so that only the magnetic trap is felt there.
    #[inline]
    pub fn clear_of_beams(&self, pos: &Vector3<f64>, margin: f64) -> bool {
        [&self.diode, &self.fiber]
            .iter()
            .all(|b| b.power == 0.0 || b.transverse(pos).norm() > CUTOFF_WAISTS * b.waist + margin)
    }

    pub fn landscape(&self) -> Landscape {
        Landscape::new(self.trap, vec![self.diode, self.fiber])
    }
}

impl Potential for Scene {
    fn energy(&self, pos: &Vector3<f64>) -> f64 {
        self.trap.potential(pos) + self.diode.energy(pos) + self.fiber.energy(pos)
    }

    fn force(&self, pos: &Vector3<f64>) -> Vector3<f64> {
        self.field(pos).accel * RB87_MASS
    }

    fn max_angular_frequency(&self) -> f64 {
        self.landscape().max_angular_frequency()
    }

    fn reference(&self) -> (Vector3<f64>, Vector3<f64>) {
        self.trap.reference()
    }

    fn is_harmonic(&self) -> bool {
        self.diode.power == 0.0 && self.fiber.power == 0.0
    }
}

//! Velocity-Verlet propagation of classical trajectories.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::cloud::AtomRecord;
use crate::error::{Error, Result};
use crate::physics::constants::RB87_MASS;
use crate::physics::landscape::Potential;

/// Default step, s. About 1/42 of the radial period of the bare magnetic trap.
pub const DEFAULT_DT: f64 = 1e-4;

/// Largest step allowed in `potential`: a twentieth of the stiffest period.
pub fn max_stable_dt<P: Potential + ?Sized>(potential: &P) -> f64 {
    2.0 * PI / potential.max_angular_frequency() / 20.0
}

/// `DEFAULT_DT`, or the stability limit when that is smaller.
pub fn choose_dt<P: Potential + ?Sized>(potential: &P) -> f64 {
    DEFAULT_DT.min(max_stable_dt(potential))
}

/// One kick-drift-kick step. `accel` must hold the acceleration at `pos` on
/// entry and holds the acceleration at the new position on exit.
#[inline]
pub fn verlet_step<F>(
    pos: &mut Vector3<f64>,
    vel: &mut Vector3<f64>,
    accel: &mut Vector3<f64>,
    dt: f64,
    mut accel_at: F,
) where
    F: FnMut(&Vector3<f64>) -> Vector3<f64>,
{
    *vel += *accel * (0.5 * dt);
    *pos += *vel * dt;
    *accel = accel_at(pos);
    *vel += *accel * (0.5 * dt);
}

/// Propagate one atom for `steps` steps of `dt`.
pub fn integrate_trajectory<P: Potential + ?Sized>(
    atom: &AtomRecord,
    potential: &P,
    dt: f64,
    steps: usize,
) -> Result<AtomRecord> {
    let limit = max_stable_dt(potential);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStepTooLarge { dt, limit });
    }
    let mut out = *atom;
    let mut accel = potential.force(&out.position) / RB87_MASS;
    for _ in 0..steps {
        verlet_step(&mut out.position, &mut out.velocity, &mut accel, dt, |p| {
            potential.force(p) / RB87_MASS
        });
    }
    Ok(out)
}

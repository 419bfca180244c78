//! Atom-by-atom propagation with ionization and loss hazards.
//!
//! Each simulated atom carries a macro weight. Its removal is a per-step
//! Bernoulli draw on the total hazard; the expected number of physical ions
//! it emits is accumulated per time bin so that counting statistics are
//! set by the physical atom number rather than by the number of simulated
//! atoms.

use rand::Rng;
use rayon::prelude::*;

use super::apparatus::{Apparatus, Scene};
use super::detection::{apply_chopping, bin_events, detect, emit_ions};
use super::series::{AxisKind, CountTimeSeries};
use crate::ensemble::integrator::{max_stable_dt, verlet_step};
use crate::ensemble::CloudState;
use crate::error::{Error, Result};
use crate::physics::constants::RB87_MASS;
use crate::physics::{unit_gaussian, RateModel};
use crate::rng::{derive_seed, substream, Purpose};

const CHUNK: usize = 64;

/// Per-step modulation of the hazards.
#[derive(Debug, Clone, Default)]
pub(crate) struct Drive {
    /// Multiplies the two-photon rate: line factor times chopping of both
    /// lasers.
    pub ion_gate: Vec<f64>,
    /// Chopping of the diode scattering loss.
    pub diode_gate: Vec<f64>,
    /// Chopping of the fiber scattering loss.
    pub fiber_gate: Vec<f64>,
    /// Microwave transfer window: instantaneous detuning per step, rad/s,
    /// and window FWHM, rad/s.
    pub microwave: Option<(Vec<f64>, f64)>,
}

impl Drive {
    pub fn len(&self) -> usize {
        self.ion_gate.len()
    }
}

pub(crate) struct Phase {
    pub scene: Scene,
    pub dt: f64,
    pub drive: Drive,
    /// Steps per recorded bin; `None` for an unrecorded phase.
    pub steps_per_bin: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct PhaseOutcome {
    /// Expected physical ions per bin.
    pub expected: Vec<f64>,
    pub ionized_weight: f64,
    pub lost_weight: f64,
}

/// Step size no larger than `dt_max` that divides `span` evenly.
pub(crate) fn fitted_step(span: f64, dt_max: f64) -> (f64, usize) {
    let n = (span / dt_max - 1e-9).ceil().max(1.0) as usize;
    (span / n as f64, n)
}

/// Step limit for a scene, including resolution of the chopping period.
pub(crate) fn step_limit(scene: &Scene, chop_period: f64) -> f64 {
    let mut dt = crate::ensemble::choose_dt(scene);
    let duty = scene.diode.duty_cycle.min(scene.fiber.duty_cycle);
    if duty < 1.0 {
        dt = dt.min(chop_period * duty / 8.0);
    }
    dt
}

pub(crate) fn propagate(
    cloud: &mut CloudState,
    phase: &Phase,
    rates: &RateModel,
    seed: u64,
    phase_tag: u64,
) -> Result<PhaseOutcome> {
    let limit = max_stable_dt(&phase.scene);
    if !(phase.dt > 0.0) || phase.dt > limit * (1.0 + 1e-9) {
        return Err(Error::TimeStepTooLarge {
            dt: phase.dt,
            limit,
        });
    }
    let n_steps = phase.drive.len();
    let n_bins = phase
        .steps_per_bin
        .map(|s| n_steps.div_ceil(s))
        .unwrap_or(0);
    let scene = &phase.scene;
    let r2_peak = rates.two_photon_peak(&scene.diode);
    let ion_peak = rates.ionization_peak(&scene.fiber);
    let gamma = rates.spontaneous_decay_rate;
    let sd = scene.diode.scatter_coefficient * scene.diode.power;
    let sf = scene.fiber.scatter_coefficient * scene.fiber.power;
    let stream_seed = derive_seed(seed, phase_tag);
    let drive = &phase.drive;
    let dt = phase.dt;
    // Atoms clear of both beams feel the bare trap and no hazard; they take
    // one step per `coarse` fine steps, within the trap's own step limit.
    let coarse = ((max_stable_dt(&scene.trap) / dt) as usize).max(1);
    let big = coarse as f64 * dt;

    let partials: Vec<PhaseOutcome> = cloud
        .atoms
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut out = PhaseOutcome {
                expected: vec![0.0; n_bins],
                ..Default::default()
            };
            for (j, atom) in chunk.iter_mut().enumerate() {
                if !atom.alive {
                    continue;
                }
                let index = (c * CHUNK + j) as u64;
                let mut rng = substream(stream_seed, Purpose::Propagation, index);
                let mut field = scene.field(&atom.position);
                let mut accel = field.accel;
                let mut k = 0;
                while k < n_steps {
                    if coarse > 1 && k + coarse <= n_steps {
                        let reach = atom.velocity.norm() * big + accel.norm() * big * big;
                        if scene.clear_of_beams(&atom.position, reach) {
                            verlet_step(
                                &mut atom.position,
                                &mut atom.velocity,
                                &mut accel,
                                big,
                                |p| scene.trap.force(p) / RB87_MASS,
                            );
                            k += coarse;
                            continue;
                        }
                    }
                    k += 1;
                    verlet_step(
                        &mut atom.position,
                        &mut atom.velocity,
                        &mut accel,
                        dt,
                        |p| {
                            field = scene.field(p);
                            field.accel
                        },
                    );
                    let i = k - 1;
                    let ed = field.diode_envelope;
                    let ef = field.fiber_envelope;
                    let mut r2 = r2_peak * ed * ed * drive.ion_gate[i];
                    if let Some((mw, fwhm)) = &drive.microwave {
                        let dw = scene.trap.zeeman_detuning(&atom.position);
                        r2 *= unit_gaussian(dw - mw[i], *fwhm);
                    }
                    let h_ion = if r2 > 0.0 {
                        let rion = ion_peak * ef;
                        r2 * rion / (rion + gamma)
                    } else {
                        0.0
                    };
                    let h_loss = sd * ed * drive.diode_gate[i] + sf * ef * drive.fiber_gate[i];
                    let h = h_ion + h_loss;
                    if h <= 0.0 {
                        continue;
                    }
                    let p = -(-h * dt).exp_m1();
                    let p_ion = p * h_ion / h;
                    if let Some(s) = phase.steps_per_bin {
                        out.expected[i / s] += atom.weight * p_ion;
                    }
                    let u: f64 = rng.random();
                    if u < p {
                        atom.alive = false;
                        if u < p_ion {
                            out.ionized_weight += atom.weight;
                        } else {
                            out.lost_weight += atom.weight;
                        }
                        break;
                    }
                }
            }
            out
        })
        .collect();

    let mut total = PhaseOutcome {
        expected: vec![0.0; n_bins],
        ..Default::default()
    };
    for part in partials {
        for (t, e) in total.expected.iter_mut().zip(&part.expected) {
            *t += e;
        }
        total.ionized_weight += part.ionized_weight;
        total.lost_weight += part.lost_weight;
    }
    cloud.refresh_total();
    Ok(total)
}

/// Gates for a phase of `n_steps` steps starting at absolute time `t0`.
/// `line(t)` gives the two-photon line factor at time `t` into the phase.
pub(crate) fn build_drive(
    scene: &Scene,
    chop_period: f64,
    dt: f64,
    n_steps: usize,
    t0: f64,
    line: impl Fn(f64) -> f64,
) -> Drive {
    let mut drive = Drive {
        ion_gate: Vec::with_capacity(n_steps),
        diode_gate: Vec::with_capacity(n_steps),
        fiber_gate: Vec::with_capacity(n_steps),
        microwave: None,
    };
    for k in 0..n_steps {
        let t = (k as f64 + 0.5) * dt;
        let d = apply_chopping(1.0, t0 + t, scene.diode.duty_cycle, chop_period);
        let f = apply_chopping(1.0, t0 + t, scene.fiber.duty_cycle, chop_period);
        drive.ion_gate.push(line(t) * d * f);
        drive.diode_gate.push(d);
        drive.fiber_gate.push(f);
    }
    drive
}

/// Propagate through an unrecorded phase of `duration` seconds.
pub(crate) fn hold(
    cloud: &mut CloudState,
    scene: &Scene,
    app: &Apparatus,
    duration: f64,
    t0: f64,
    line_factor: f64,
    seed: u64,
    tag: u64,
) -> Result<PhaseOutcome> {
    if duration <= 0.0 {
        return Ok(PhaseOutcome::default());
    }
    let (dt, n) = fitted_step(duration, step_limit(scene, app.chop_period));
    let phase = Phase {
        scene: *scene,
        dt,
        drive: build_drive(scene, app.chop_period, dt, n, t0, |_| line_factor),
        steps_per_bin: None,
    };
    propagate(cloud, &phase, &app.rates, seed, tag)
}

/// Weight bookkeeping and ion totals of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunTally {
    pub initial_weight: f64,
    pub ionized_weight: f64,
    pub lost_weight: f64,
    pub surviving_weight: f64,
    /// Physical ions emitted inside the recorded window.
    pub ions_emitted: u64,
    pub ions_detected: u64,
}

impl RunTally {
    pub(crate) fn absorb(&mut self, o: &PhaseOutcome) {
        self.ionized_weight += o.ionized_weight;
        self.lost_weight += o.lost_weight;
    }

    /// Physical ions emitted inside the recorded window over the initial
    /// atom number.
    pub fn window_ionized_fraction(&self) -> f64 {
        if self.initial_weight > 0.0 {
            self.ions_emitted as f64 / self.initial_weight
        } else {
            0.0
        }
    }

    pub fn ionized_fraction(&self) -> f64 {
        if self.initial_weight > 0.0 {
            self.ionized_weight / self.initial_weight
        } else {
            0.0
        }
    }
}

/// Expected ions per bin → detected counts per bin.
pub(crate) fn realize_counts(
    expected: &[f64],
    bin_width: f64,
    efficiency: f64,
    max_events: u64,
    seed: u64,
    tally: &mut RunTally,
) -> Vec<u64> {
    let times = emit_ions(expected, bin_width, 0.0, max_events, seed);
    let kept = detect(&times, efficiency, seed);
    tally.ions_emitted = times.len() as u64;
    tally.ions_detected = kept.len() as u64;
    bin_events(&kept, bin_width, 0.0, expected.len())
}

pub(crate) fn annotate(series: &mut CountTimeSeries, seed: u64, tally: &RunTally) {
    series.set_meta("seed", seed);
    series.set_meta("ions_total", tally.ions_emitted);
    series.set_meta("detected_total", tally.ions_detected);
    series.set_meta("initial_weight", tally.initial_weight);
    series.set_meta("ionized_weight", tally.ionized_weight);
    series.set_meta("lost_weight", tally.lost_weight);
    series.set_meta("survivors", tally.surviving_weight);
    let frac = if tally.initial_weight > 0.0 {
        tally.surviving_weight / tally.initial_weight
    } else {
        0.0
    };
    series.set_meta("surviving_fraction", frac);
}

pub(crate) fn empty_series(
    axis_kind: AxisKind,
    seed: u64,
    warning: &str,
    initial: f64,
) -> CountTimeSeries {
    let mut s = CountTimeSeries::new(Vec::new(), Vec::new(), axis_kind).expect("equal lengths");
    s.set_meta("warning", warning);
    let tally = RunTally {
        initial_weight: initial,
        surviving_weight: initial,
        ..Default::default()
    };
    annotate(&mut s, seed, &tally);
    s
}

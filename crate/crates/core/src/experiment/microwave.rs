use std::f64::consts::PI;

use nalgebra::Vector3;

use super::apparatus::{Apparatus, Scene};
use super::engine::{
    annotate, build_drive, empty_series, fitted_step, propagate, realize_counts, step_limit, Phase,
    RunTally,
};
use super::protocol::{MicrowaveMode, MicrowaveScanProtocol};
use super::series::{AxisKind, CountTimeSeries};
use crate::ensemble::CloudState;
use crate::error::{Error, Result};
use crate::physics::constants::{BOLTZMANN, HBAR, RB87_MASS};
use crate::physics::{unit_gaussian, RateModel};
use crate::rng::derive_seed;

const TAG_SCAN: u64 = 0x31;
const TAG_COUNTS: u64 = 0x32;
const SUBSAMPLES: usize = 8;

/// Normalized thermal line density convolved with the unit-peak transfer
/// window: the fraction of atoms resonant at detuning `delta` (rad/s).
pub fn windowed_line_density(delta: f64, temperature: f64, window_fwhm: f64) -> f64 {
    let s = 3.0 * BOLTZMANN * temperature / (2.0 * HBAR);
    let sigma = window_fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let hi = delta + 8.0 * sigma;
    if hi <= 0.0 {
        return 0.0;
    }
    let v0 = (delta - 8.0 * sigma).max(0.0).sqrt();
    let v1 = hi.sqrt();
    // u = v² removes the 1/√u singularity
    let n = 400;
    let h = (v1 - v0) / n as f64;
    let f = |v: f64| (-v * v / s).exp() * unit_gaussian(v * v - delta, window_fwhm);
    let mut acc = f(v0) + f(v1);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(v0 + i as f64 * h);
    }
    2.0 / (PI * s).sqrt() * acc * h / 3.0
}

/// Mean ionization hazard of a resonant atom, averaged over the transverse
/// equilibrium distribution in `scene` at `temperature`, s⁻¹. Both beams
/// must propagate along z.
pub fn transverse_coupling(scene: &Scene, rates: &RateModel, temperature: f64) -> Result<f64> {
    if (scene.diode.axis - Vector3::z()).norm() > 1e-12
        || (scene.fiber.axis - Vector3::z()).norm() > 1e-12
    {
        return Err(Error::Contract(
            "analytic microwave mode requires beams along the z axis".into(),
        ));
    }
    let kt = BOLTZMANN * temperature;
    let trap = &scene.trap;
    let sx = (kt / RB87_MASS).sqrt() / trap.omega_x;
    let sy = (kt / RB87_MASS).sqrt() / trap.omega_r;
    let z_mag = 2.0 * PI * sx * sy;

    let r2_peak = rates.two_photon_peak(&scene.diode);
    let ion_peak = rates.ionization_peak(&scene.fiber);
    let gate = scene.diode.duty_cycle.min(scene.fiber.duty_cycle);
    let half = 4.0 * scene.diode.waist.max(scene.fiber.waist);
    let n = 400;
    let h = 2.0 * half / n as f64;
    let mut z_corr = 0.0;
    let mut num = 0.0;
    for i in 0..n {
        let x = -half + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = -half + (j as f64 + 0.5) * h;
            let p = Vector3::new(x + trap.center.x, y + trap.center.y, trap.center.z);
            let mag = (-trap.potential(&p) / kt).exp();
            let dip = (-(scene.diode.energy(&p) + scene.fiber.energy(&p)) / kt).exp();
            z_corr += (dip - 1.0) * mag;
            let ed = scene.diode.envelope(&p);
            let rion = ion_peak * scene.fiber.envelope(&p);
            num += dip * mag * r2_peak * ed * ed * rates.branching_for_rate(rion);
        }
    }
    let area = h * h;
    Ok(gate * num * area / (z_mag + z_corr * area))
}

/// Ion counts versus microwave frequency (relative to `axis_origin`).
pub fn run_microwave_scan(
    cloud: &CloudState,
    protocol: &MicrowaveScanProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<CountTimeSeries> {
    run_microwave_scan_tallied(cloud, protocol, app, seed).map(|(s, _)| s)
}

pub fn run_microwave_scan_tallied(
    cloud: &CloudState,
    protocol: &MicrowaveScanProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<(CountTimeSeries, RunTally)> {
    protocol.validate()?;
    app.validate()?;
    let bottom = app.trap.bottom_frequency;
    let top = protocol.f_start.max(protocol.f_end);
    if top < bottom {
        let s = empty_series(
            AxisKind::MicrowaveDetuning,
            seed,
            "scan_below_trap_bottom",
            cloud.total_weight,
        );
        return Ok((s, RunTally::default()));
    }
    if cloud.is_empty() {
        let s = empty_series(AxisKind::MicrowaveDetuning, seed, "empty_cloud", 0.0);
        return Ok((s, RunTally::default()));
    }
    let scene = app.scene(protocol.diode_power, protocol.fiber_power);
    let n_bins = protocol.n_bins();
    let mut tally = RunTally {
        initial_weight: cloud.total_weight,
        surviving_weight: cloud.total_weight,
        ..Default::default()
    };
    let analytic_rate = |scale: f64| -> Result<Vec<f64>> {
        let k = transverse_coupling(&scene, &app.rates, cloud.temperature_label)?;
        let n = cloud.total_weight;
        Ok((0..n_bins)
            .map(|b| {
                let mut acc = 0.0;
                for q in 0..SUBSAMPLES {
                    let t = (b as f64 + (q as f64 + 0.5) / SUBSAMPLES as f64) * protocol.bin_width;
                    let t = t.min(protocol.duration);
                    let delta = protocol.detuning_at(t, bottom) / scale;
                    acc += windowed_line_density(
                        delta,
                        cloud.temperature_label,
                        protocol.rabi_frequency,
                    );
                }
                n * k * acc / SUBSAMPLES as f64 * protocol.bin_width
            })
            .collect())
    };

    let mut expected = match protocol.mode {
        MicrowaveMode::Analytic => analytic_rate(1.0)?,
        MicrowaveMode::MonteCarlo => {
            let mut c = cloud.clone();
            let (dt, steps_per_bin) =
                fitted_step(protocol.bin_width, step_limit(&scene, app.chop_period));
            let n_steps = n_bins * steps_per_bin;
            let mut drive = build_drive(&scene, app.chop_period, dt, n_steps, 0.0, |_| 1.0);
            let detuning = (0..n_steps)
                .map(|k| protocol.detuning_at((k as f64 + 0.5) * dt, bottom))
                .collect();
            drive.microwave = Some((detuning, protocol.rabi_frequency));
            let phase = Phase {
                scene,
                dt,
                drive,
                steps_per_bin: Some(steps_per_bin),
            };
            let o = propagate(&mut c, &phase, &app.rates, seed, TAG_SCAN)?;
            tally.absorb(&o);
            tally.surviving_weight = c.total_weight;
            o.expected
        }
    };
    if let Some(r) = protocol.residual {
        if r.amplitude > 0.0 {
            let extra = analytic_rate(r.detuning_scale)?;
            for (e, x) in expected.iter_mut().zip(extra) {
                *e += r.amplitude * x;
            }
        }
    }
    if protocol.mode == MicrowaveMode::Analytic {
        tally.ionized_weight = expected.iter().sum::<f64>().min(tally.initial_weight);
        tally.surviving_weight = tally.initial_weight - tally.ionized_weight;
    }

    let counts = realize_counts(
        &expected,
        protocol.bin_width,
        app.rates.detection_efficiency,
        tally.initial_weight.floor() as u64,
        derive_seed(seed, TAG_COUNTS),
        &mut tally,
    );
    let axis = (0..n_bins)
        .map(|b| {
            protocol.frequency_at((b as f64 + 0.5) * protocol.bin_width) - protocol.axis_origin
        })
        .collect();
    let mut series = CountTimeSeries::new(axis, counts, AxisKind::MicrowaveDetuning)?;
    series.set_meta("protocol", "microwave-scan");
    series.set_meta("axis_origin", protocol.axis_origin);
    series.set_meta("trap_bottom", bottom - protocol.axis_origin);
    series.set_meta("temperature", cloud.temperature_label);
    series.set_meta(
        "mode",
        match protocol.mode {
            MicrowaveMode::Analytic => "analytic",
            MicrowaveMode::MonteCarlo => "monte-carlo",
        },
    );
    annotate(&mut series, seed, &tally);
    Ok((series, tally))
}

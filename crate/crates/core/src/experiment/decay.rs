use super::apparatus::Apparatus;
use super::engine::{
    annotate, build_drive, empty_series, fitted_step, hold, propagate, realize_counts, step_limit,
    Phase, RunTally,
};
use super::protocol::{DecayProtocol, FiberRamp};
use super::series::{AxisKind, CountTimeSeries};
use crate::ensemble::{effective_temperature_after_ramp, resample_equilibrium, CloudState};
use crate::error::Result;
use crate::rng::derive_seed;

const TAG_HOLD: u64 = 0x11;
const TAG_OBSERVE: u64 = 0x12;
const TAG_COUNTS: u64 = 0x13;

/// Ion counts versus time after the diode is switched on.
///
/// With a linear fiber ramp the cloud is redrawn from equilibrium in the
/// trap-plus-dimple potential at the post-ramp temperature, then held with
/// the fiber alone for `hold_after_ramp` before observation starts.
pub fn run_decay(
    cloud: &CloudState,
    protocol: &DecayProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<CountTimeSeries> {
    run_decay_tallied(cloud, protocol, app, seed).map(|(s, _)| s)
}

pub fn run_decay_tallied(
    cloud: &CloudState,
    protocol: &DecayProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<(CountTimeSeries, RunTally)> {
    protocol.validate()?;
    app.validate()?;
    if cloud.is_empty() {
        let s = empty_series(AxisKind::Time, seed, "empty_cloud", 0.0);
        return Ok((s, RunTally::default()));
    }
    let mut tally = RunTally {
        initial_weight: cloud.total_weight,
        ..Default::default()
    };
    let mut t0 = 0.0;
    let mut cloud = match protocol.fiber_ramp {
        FiberRamp::Instant => cloud.clone(),
        FiberRamp::Linear { duration } => {
            let dimple = app.scene(0.0, protocol.fiber_power);
            let t_eff = effective_temperature_after_ramp(
                cloud.temperature_label,
                app.dimple_depth(protocol.fiber_power),
                protocol.heating,
            )?;
            let mut c = resample_equilibrium(cloud, &dimple, t_eff, seed)?;
            t0 = duration;
            let o = hold(
                &mut c,
                &dimple,
                app,
                protocol.hold_after_ramp,
                t0,
                0.0,
                seed,
                TAG_HOLD,
            )?;
            tally.absorb(&o);
            t0 += protocol.hold_after_ramp;
            c
        }
    };

    let scene = app.scene(protocol.diode_power, protocol.fiber_power);
    let n_bins = protocol.n_bins();
    let (dt, steps_per_bin) = fitted_step(protocol.bin_width, step_limit(&scene, app.chop_period));
    let line = app
        .spectrum
        .line_factor(protocol.diode_detuning, protocol.fiber_power);
    let phase = Phase {
        scene,
        dt,
        drive: build_drive(
            &scene,
            app.chop_period,
            dt,
            n_bins * steps_per_bin,
            t0,
            |_| line,
        ),
        steps_per_bin: Some(steps_per_bin),
    };
    let outcome = propagate(&mut cloud, &phase, &app.rates, seed, TAG_OBSERVE)?;
    tally.absorb(&outcome);
    tally.surviving_weight = cloud.total_weight;

    let counts = realize_counts(
        &outcome.expected,
        protocol.bin_width,
        app.rates.detection_efficiency,
        tally.initial_weight.floor() as u64,
        derive_seed(seed, TAG_COUNTS),
        &mut tally,
    );
    let centers = (0..n_bins)
        .map(|b| (b as f64 + 0.5) * protocol.bin_width)
        .collect();
    let mut series = CountTimeSeries::new(centers, counts, AxisKind::Time)?;
    series.set_meta("protocol", "decay");
    series.set_meta("temperature", cloud.temperature_label);
    annotate(&mut series, seed, &tally);
    Ok((series, tally))
}

use super::apparatus::Apparatus;
use super::engine::{
    annotate, build_drive, empty_series, fitted_step, hold, propagate, realize_counts, step_limit,
    Phase, RunTally,
};
use super::protocol::OpticalScanProtocol;
use super::series::{AxisKind, CountTimeSeries};
use crate::ensemble::CloudState;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

const TAG_HOLD: u64 = 0x21;
const TAG_SCAN: u64 = 0x22;
const TAG_COUNTS: u64 = 0x23;

/// Mean detected counts per bin of an optical scan, before Poisson sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanExpectation {
    /// Hz
    pub detuning: Vec<f64>,
    pub expected_counts: Vec<f64>,
    pub tally: RunTally,
}

fn scan(
    cloud: &CloudState,
    protocol: &OpticalScanProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, RunTally)> {
    protocol.validate()?;
    app.validate()?;
    let mut cloud = cloud.clone();
    let mut tally = RunTally {
        initial_weight: cloud.total_weight,
        ..Default::default()
    };
    let scene = app.scene(protocol.diode_power, protocol.fiber_power);
    let spectrum = &app.spectrum;
    let p_f = protocol.fiber_power;

    let parked = spectrum.line_factor(protocol.parking_detuning(spectrum), p_f);
    let o = hold(
        &mut cloud,
        &scene,
        app,
        protocol.thermalize_hold,
        0.0,
        parked,
        seed,
        TAG_HOLD,
    )?;
    tally.absorb(&o);

    let n_bins = protocol.n_bins();
    let (dt, steps_per_bin) = fitted_step(protocol.bin_width, step_limit(&scene, app.chop_period));
    let drive = build_drive(
        &scene,
        app.chop_period,
        dt,
        n_bins * steps_per_bin,
        protocol.thermalize_hold,
        |t| spectrum.line_factor(protocol.detuning_at(t), p_f),
    );
    let phase = Phase {
        scene,
        dt,
        drive,
        steps_per_bin: Some(steps_per_bin),
    };
    let outcome = propagate(&mut cloud, &phase, &app.rates, seed, TAG_SCAN)?;
    tally.absorb(&outcome);
    tally.surviving_weight = cloud.total_weight;
    let axis = (0..n_bins)
        .map(|b| protocol.detuning_at((b as f64 + 0.5) * protocol.bin_width))
        .collect();
    Ok((axis, outcome.expected, tally))
}

/// Ion counts versus diode detuning during a linear frequency sweep.
pub fn run_optical_scan(
    cloud: &CloudState,
    protocol: &OpticalScanProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<CountTimeSeries> {
    run_optical_scan_tallied(cloud, protocol, app, seed).map(|(s, _)| s)
}

pub fn run_optical_scan_tallied(
    cloud: &CloudState,
    protocol: &OpticalScanProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<(CountTimeSeries, RunTally)> {
    if cloud.is_empty() {
        protocol.validate()?;
        let s = empty_series(AxisKind::DiodeDetuning, seed, "empty_cloud", 0.0);
        return Ok((s, RunTally::default()));
    }
    let (axis, expected, mut tally) = scan(cloud, protocol, app, seed)?;
    let counts = realize_counts(
        &expected,
        protocol.bin_width,
        app.rates.detection_efficiency,
        tally.initial_weight.floor() as u64,
        derive_seed(seed, TAG_COUNTS),
        &mut tally,
    );
    let mut series = CountTimeSeries::new(axis, counts, AxisKind::DiodeDetuning)?;
    series.set_meta("protocol", "optical-scan");
    series.set_meta("fiber_power", protocol.fiber_power);
    series.set_meta("diode_power", protocol.diode_power);
    series.set_meta("scan_rate", protocol.scan_rate);
    series.set_meta("start_detuning", protocol.start_detuning);
    series.set_meta("hold_detuning", protocol.parking_detuning(&app.spectrum));
    series.set_meta("scan_ionized_fraction", tally.window_ionized_fraction());
    annotate(&mut series, seed, &tally);
    Ok((series, tally))
}

/// Poisson-free optical scan: the expected detected counts per bin.
pub fn optical_scan_expectation(
    cloud: &CloudState,
    protocol: &OpticalScanProtocol,
    app: &Apparatus,
    seed: u64,
) -> Result<ScanExpectation> {
    if cloud.is_empty() {
        return Err(Error::invalid("cloud", "no atoms to scan"));
    }
    let (detuning, expected, tally) = scan(cloud, protocol, app, seed)?;
    let eta = app.rates.detection_efficiency;
    Ok(ScanExpectation {
        detuning,
        expected_counts: expected.iter().map(|e| e * eta).collect(),
        tally,
    })
}

/// Line-shift cross-check: the configured line-shift slope against the
/// ground-state light shift at the fiber beam center, both Hz/W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftCrossCheck {
    pub beam_center_slope: f64,
    pub line_shift_slope: f64,
}

impl ShiftCrossCheck {
    pub fn ratio(&self) -> f64 {
        self.line_shift_slope / self.beam_center_slope
    }
}

/// Regress the model line centers and the beam-center light shift over
/// `powers` (W).
pub fn light_shift_cross_check(app: &Apparatus, powers: &[f64]) -> Result<ShiftCrossCheck> {
    let centers: Vec<f64> = powers.iter().map(|&p| app.spectrum.centers(p)[0]).collect();
    let center_shift: Vec<f64> = powers
        .iter()
        .map(|&p| app.fiber.with_power(p).peak_light_shift())
        .collect();
    let line = crate::analysis::linear_fit(powers, &centers)?;
    let beam = crate::analysis::linear_fit(powers, &center_shift)?;
    Ok(ShiftCrossCheck {
        beam_center_slope: beam.slope,
        line_shift_slope: line.slope,
    })
}

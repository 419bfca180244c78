use std::f64::consts::PI;

use crate::ensemble::RampHeating;
use crate::error::{Error, Result};
use crate::physics::HyperfineSpectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberRamp {
    /// Both lasers switch on together at t = 0.
    Instant,
    /// Fiber power ramped up over `duration` (s) before the diode is switched on.
    Linear { duration: f64 },
}

/// Fixed-frequency observation of the ionization rate after the lasers are
/// switched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProtocol {
    pub fiber_ramp: FiberRamp,
    /// Fiber only, after the ramp, s.
    pub hold_after_ramp: f64,
    pub observe_duration: f64,
    pub bin_width: f64,
    /// W
    pub diode_power: f64,
    /// W
    pub fiber_power: f64,
    /// Hz
    pub diode_detuning: f64,
    /// Temperature model for the cloud after a linear ramp.
    pub heating: RampHeating,
}

impl Default for DecayProtocol {
    fn default() -> Self {
        DecayProtocol {
            fiber_ramp: FiberRamp::Instant,
            hold_after_ramp: 0.0,
            observe_duration: 2.0,
            bin_width: 5e-3,
            diode_power: 440e-6,
            fiber_power: 1.6,
            diode_detuning: 3.84e6,
            heating: RampHeating::None,
        }
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be non-negative"))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive"))
    }
}

impl DecayProtocol {
    pub fn validate(&self) -> Result<()> {
        if let FiberRamp::Linear { duration } = self.fiber_ramp {
            non_negative("ramp_duration", duration)?;
        }
        non_negative("hold_after_ramp", self.hold_after_ramp)?;
        non_negative("observe_duration", self.observe_duration)?;
        positive("bin_width", self.bin_width)?;
        non_negative("diode_power", self.diode_power)?;
        non_negative("fiber_power", self.fiber_power)?;
        if !self.diode_detuning.is_finite() {
            return Err(Error::invalid("diode_detuning", "must be finite"));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (self.observe_duration / self.bin_width - 1e-9)
            .ceil()
            .max(0.0) as usize
    }
}

/// Linear sweep of the diode frequency across the hyperfine lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalScanProtocol {
    /// Hz/s on the diode axis; negative sweeps downwards.
    pub scan_rate: f64,
    /// Hz
    pub span: f64,
    /// Hz
    pub start_detuning: f64,
    pub bin_width: f64,
    /// W
    pub fiber_power: f64,
    /// W
    pub diode_power: f64,
    /// Both lasers on before the sweep, s.
    pub thermalize_hold: f64,
    /// Diode detuning during the hold, Hz. `None` parks the diode a quarter
    /// linewidth blue of the highest line.
    pub hold_detuning: Option<f64>,
}

impl Default for OpticalScanProtocol {
    fn default() -> Self {
        OpticalScanProtocol {
            scan_rate: -45e6,
            span: 65e6,
            start_detuning: 44e6,
            bin_width: 5e-3,
            fiber_power: 1.6,
            diode_power: 270e-6,
            thermalize_hold: 0.5,
            hold_detuning: None,
        }
    }
}

impl OpticalScanProtocol {
    pub fn validate(&self) -> Result<()> {
        if !(self.scan_rate != 0.0 && self.scan_rate.is_finite()) {
            return Err(Error::invalid("scan_rate", "must be finite and non-zero"));
        }
        positive("span", self.span)?;
        positive("bin_width", self.bin_width)?;
        non_negative("fiber_power", self.fiber_power)?;
        non_negative("diode_power", self.diode_power)?;
        non_negative("thermalize_hold", self.thermalize_hold)?;
        if !self.start_detuning.is_finite() || !self.hold_detuning.unwrap_or(0.0).is_finite() {
            return Err(Error::invalid("start_detuning", "must be finite"));
        }
        Ok(())
    }

    /// Sweep time, s.
    pub fn scan_duration(&self) -> f64 {
        self.span / self.scan_rate.abs()
    }

    pub fn n_bins(&self) -> usize {
        (self.scan_duration() / self.bin_width - 1e-9).ceil() as usize
    }

    /// Diode detuning at time `t` into the sweep, Hz.
    pub fn detuning_at(&self, t: f64) -> f64 {
        self.start_detuning + self.scan_rate * t
    }

    /// Diode detuning during the hold, Hz.
    pub fn parking_detuning(&self, spectrum: &HyperfineSpectrum) -> f64 {
        self.hold_detuning.unwrap_or_else(|| {
            let top = spectrum
                .centers(self.fiber_power)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            top + 0.25 * spectrum.fwhm(self.fiber_power)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicrowaveMode {
    /// Expected rate from the thermal line density, Poisson sampled.
    Analytic,
    /// Resonant transfer of simulated atoms on their trajectories.
    MonteCarlo,
}

/// Extra spectrum from residual population in a second Zeeman state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualComponent {
    /// Relative to the main component.
    pub amplitude: f64,
    /// Ratio of the residual state's Zeeman detuning to the main one.
    pub detuning_scale: f64,
}

/// Microwave frequency sweep with the diode kept on the F = 1 line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrowaveScanProtocol {
    /// Hz
    pub f_start: f64,
    /// Hz
    pub f_end: f64,
    pub duration: f64,
    /// Resonance window FWHM, rad/s.
    pub rabi_frequency: f64,
    pub bin_width: f64,
    /// Subtracted from the microwave frequency on the output axis, Hz.
    pub axis_origin: f64,
    /// W
    pub diode_power: f64,
    /// W
    pub fiber_power: f64,
    pub mode: MicrowaveMode,
    pub residual: Option<ResidualComponent>,
}

/// |F=1, m_F=0> → |F=2, m_F=0> frequency of ⁸⁷Rb, Hz.
pub const CLOCK_FREQUENCY: f64 = 6.834_682_610_904e9;

impl Default for MicrowaveScanProtocol {
    fn default() -> Self {
        MicrowaveScanProtocol {
            f_start: 6.841e9,
            f_end: 6.835e9,
            duration: 0.32,
            rabi_frequency: 2.0 * PI * 23.7e3,
            bin_width: 1e-3,
            axis_origin: CLOCK_FREQUENCY,
            diode_power: 300e-6,
            fiber_power: 1.6,
            mode: MicrowaveMode::Analytic,
            residual: None,
        }
    }
}

impl MicrowaveScanProtocol {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_start", self.f_start),
            ("f_end", self.f_end),
            ("axis_origin", self.axis_origin),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        positive("duration", self.duration)?;
        positive("rabi_frequency", self.rabi_frequency)?;
        positive("bin_width", self.bin_width)?;
        non_negative("diode_power", self.diode_power)?;
        non_negative("fiber_power", self.fiber_power)?;
        if let Some(r) = self.residual {
            non_negative("residual_amplitude", r.amplitude)?;
            positive("residual_detuning_scale", r.detuning_scale)?;
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (self.duration / self.bin_width - 1e-9).ceil() as usize
    }

    /// Microwave frequency at time `t` into the sweep, Hz.
    pub fn frequency_at(&self, t: f64) -> f64 {
        self.f_start + (self.f_end - self.f_start) * t / self.duration
    }

    /// Detuning from the trap-bottom resonance at time `t`, rad/s.
    pub fn detuning_at(&self, t: f64, bottom_frequency: f64) -> f64 {
        2.0 * PI * (self.frequency_at(t) - bottom_frequency)
    }
}

//! The run configuration, its line-oriented text format and validation.
//!
//! Every line is `section.key = value [unit]`; `#` starts a comment. Lists
//! are comma separated and may carry one trailing unit. Keys whose stored
//! value is an angular frequency (rad/s) accept Hz-family units and convert
//! them with 2π; absolute frequencies and detunings on the laser axis stay
//! in Hz. Exactly one protocol is selected, either by `protocol = name` or
//! by the one protocol section (`decay`, `optical_scan`, `microwave_scan`)
//! that has keys.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector3;
use sha2::{Digest, Sha256};

use super::units::{self, Dim, Unit};
use crate::ensemble::RampHeating;
use crate::error::{Error, Result};
use crate::experiment::{
    Apparatus, DecayProtocol, FiberRamp, MicrowaveMode, MicrowaveScanProtocol, OpticalScanProtocol,
    ResidualComponent,
};
use crate::physics::BeamConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Heating {
    None,
    /// Temperature raised by `compression_factor` at the dimple depth of
    /// `reference_power`, proportionally to the depth otherwise.
    Adiabatic {
        compression_factor: f64,
        reference_power: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudConfig {
    pub n_phys: f64,
    pub n_sim: usize,
    /// K
    pub temperature: f64,
    pub heating: Heating,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig {
            n_phys: 1.8e6,
            n_sim: 20_000,
            temperature: 18e-6,
            heating: Heating::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolConfig {
    Decay(DecayProtocol),
    OpticalScan(OpticalScanProtocol),
    MicrowaveScan(MicrowaveScanProtocol),
}

impl ProtocolConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Decay(_) => "decay",
            ProtocolConfig::OpticalScan(_) => "optical_scan",
            ProtocolConfig::MicrowaveScan(_) => "microwave_scan",
        }
    }

    fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "decay" => ProtocolConfig::Decay(DecayProtocol::default()),
            "optical_scan" => ProtocolConfig::OpticalScan(OpticalScanProtocol::default()),
            "microwave_scan" => ProtocolConfig::MicrowaveScan(MicrowaveScanProtocol::default()),
            _ => return None,
        })
    }
}

const PROTOCOLS: [&str; 3] = ["decay", "optical_scan", "microwave_scan"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Exp,
    DoubleExp,
    MultiGauss,
    Temperature,
    Linear,
}

impl FitKind {
    pub const ALL: [FitKind; 5] = [
        FitKind::Exp,
        FitKind::DoubleExp,
        FitKind::MultiGauss,
        FitKind::Temperature,
        FitKind::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitKind::Exp => "exp",
            FitKind::DoubleExp => "double-exp",
            FitKind::MultiGauss => "multi-gauss",
            FitKind::Temperature => "temperature",
            FitKind::Linear => "linear",
        }
    }
}

impl std::str::FromStr for FitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::FitInput(format!(
                    "unknown model `{s}`; expected one of exp, double-exp, multi-gauss, temperature, linear"
                ))
            })
    }
}

/// Automatic fit of the produced series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSpec {
    pub model: FitKind,
    /// Number of Gaussians for `multi-gauss`.
    pub peaks: usize,
    /// Temperature-fit domain, rad/s above the trap bottom.
    pub min_detuning: f64,
    pub max_detuning: f64,
}

impl FitSpec {
    pub fn new(model: FitKind) -> Self {
        FitSpec {
            model,
            peaks: 4,
            min_detuning: 2.0 * PI * 1e3,
            max_detuning: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Beam powers here are the powers used by the protocol.
    pub apparatus: Apparatus,
    pub cloud: CloudConfig,
    pub protocol: ProtocolConfig,
    pub fit: Option<FitSpec>,
    /// Output file name stem.
    pub prefix: String,
}

impl RunConfig {
    pub fn new(protocol: ProtocolConfig) -> Self {
        let mut c = RunConfig {
            seed: 1,
            apparatus: Apparatus::default(),
            cloud: CloudConfig::default(),
            protocol,
            fit: None,
            prefix: "run".into(),
        };
        c.apparatus.diode.power = match protocol {
            ProtocolConfig::Decay(p) => p.diode_power,
            ProtocolConfig::OpticalScan(p) => p.diode_power,
            ProtocolConfig::MicrowaveScan(p) => p.diode_power,
        };
        c.sync();
        c
    }

    /// Heating model handed to the experiment layer.
    pub fn ramp_heating(&self) -> RampHeating {
        match self.cloud.heating {
            Heating::None => RampHeating::None,
            Heating::Adiabatic {
                compression_factor,
                reference_power,
            } => RampHeating::AdiabaticHeuristic {
                factor: compression_factor,
                reference_depth: self.apparatus.dimple_depth(reference_power),
            },
        }
    }

    /// Copies beam powers and heating into the protocol.
    fn sync(&mut self) {
        let (pd, pf) = (self.apparatus.diode.power, self.apparatus.fiber.power);
        let heating = self.ramp_heating();
        match &mut self.protocol {
            ProtocolConfig::Decay(p) => {
                p.diode_power = pd;
                p.fiber_power = pf;
                p.heating = heating;
            }
            ProtocolConfig::OpticalScan(p) => {
                p.diode_power = pd;
                p.fiber_power = pf;
            }
            ProtocolConfig::MicrowaveScan(p) => {
                p.diode_power = pd;
                p.fiber_power = pf;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::config(None, e.to_string());
        self.apparatus.validate().map_err(wrap)?;
        match &self.protocol {
            ProtocolConfig::Decay(p) => p.validate(),
            ProtocolConfig::OpticalScan(p) => p.validate(),
            ProtocolConfig::MicrowaveScan(p) => p.validate(),
        }
        .map_err(wrap)?;
        if self.fit.is_some_and(|f| f.min_detuning >= f.max_detuning) {
            return Err(Error::config(
                None,
                "fit_min_detuning must lie below fit_max_detuning",
            ));
        }
        Ok(())
    }

    /// Replaces one key, as if it had been written in the file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = Entry {
            line: 0,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        };
        if e.key == "protocol" {
            return Err(Error::config(None, "the protocol cannot be overridden"));
        }
        apply(self, &e)?;
        self.sync();
        self.validate()
    }

    /// Canonical text form; `parse_config` of it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("protocol", self.protocol.name().into());
        put("output.prefix", self.prefix.clone());

        let a = &self.apparatus;
        put("trap.omega_x", q(a.trap.omega_x, units::FREQUENCY, true));
        put("trap.omega_r", q(a.trap.omega_r, units::FREQUENCY, true));
        put(
            "trap.bottom_frequency",
            q(a.trap.bottom_frequency, units::FREQUENCY, false),
        );
        put(
            "trap.center",
            list(&a.trap.center.as_slice().to_vec(), units::LENGTH),
        );
        for (name, b) in [("diode", &a.diode), ("fiber", &a.fiber)] {
            put(
                &format!("beams.{name}.power"),
                q(b.power, units::POWER, false),
            );
            put(
                &format!("beams.{name}.waist"),
                q(b.waist, units::LENGTH, false),
            );
            put(
                &format!("beams.{name}.axis"),
                list(&b.axis.as_slice().to_vec(), units::NONE),
            );
            put(
                &format!("beams.{name}.shift_coefficient"),
                q(b.shift_coefficient, units::PER_POWER, false),
            );
            put(
                &format!("beams.{name}.scatter_coefficient"),
                q(b.scatter_coefficient, units::PER_POWER, false),
            );
            put(&format!("beams.{name}.duty_cycle"), num(b.duty_cycle));
        }
        put("beams.chop_period", q(a.chop_period, units::TIME, false));

        let r = &a.rates;
        put(
            "rates.two_photon_peak_rate",
            q(r.two_photon_peak_rate_ref, units::FREQUENCY, false),
        );
        put(
            "rates.two_photon_ref_intensity",
            q(r.two_photon_ref_intensity, units::INTENSITY, false),
        );
        put(
            "rates.ionization_rate",
            q(r.ionization_rate_ref, units::FREQUENCY, false),
        );
        put(
            "rates.ionization_ref_intensity",
            q(r.ionization_ref_intensity, units::INTENSITY, false),
        );
        put(
            "rates.spontaneous_decay_rate",
            q(r.spontaneous_decay_rate, units::FREQUENCY, false),
        );
        put("rates.detection_efficiency", num(r.detection_efficiency));

        let s = &a.spectrum;
        put(
            "spectrum.line_offsets",
            list(&s.line_offsets, units::FREQUENCY),
        );
        put("spectrum.line_weights", list(&s.line_weights, units::NONE));
        put(
            "spectrum.base_fwhm",
            q(s.base_linewidth_fwhm, units::FREQUENCY, false),
        );
        put(
            "spectrum.shift_slope",
            q(s.shift_slope, units::PER_POWER, false),
        );
        put(
            "spectrum.broadening_slope",
            q(s.broadening_slope, units::PER_POWER, false),
        );

        let c = &self.cloud;
        put("cloud.N_phys", num(c.n_phys));
        put("cloud.n_sim", c.n_sim.to_string());
        put("cloud.T", q(c.temperature, units::TEMPERATURE, false));
        match c.heating {
            Heating::None => put("cloud.heating", "none".into()),
            Heating::Adiabatic {
                compression_factor,
                reference_power,
            } => {
                put("cloud.heating", "adiabatic".into());
                put("cloud.compression_factor", num(compression_factor));
                put(
                    "cloud.reference_power",
                    q(reference_power, units::POWER, false),
                );
            }
        }

        let sec = self.protocol.name();
        let key = |k: &str| format!("{sec}.{k}");
        match &self.protocol {
            ProtocolConfig::Decay(p) => {
                match p.fiber_ramp {
                    FiberRamp::Instant => put(&key("ramp"), "instant".into()),
                    FiberRamp::Linear { duration } => {
                        put(&key("ramp"), "linear".into());
                        put(&key("ramp_duration"), q(duration, units::TIME, false));
                    }
                }
                put(
                    &key("hold_after_ramp"),
                    q(p.hold_after_ramp, units::TIME, false),
                );
                put(
                    &key("observe_duration"),
                    q(p.observe_duration, units::TIME, false),
                );
                put(&key("bin_width"), q(p.bin_width, units::TIME, false));
                put(
                    &key("diode_detuning"),
                    q(p.diode_detuning, units::FREQUENCY, false),
                );
            }
            ProtocolConfig::OpticalScan(p) => {
                put(&key("scan_rate"), q(p.scan_rate, units::SCAN_RATE, false));
                put(&key("span"), q(p.span, units::FREQUENCY, false));
                put(
                    &key("start_detuning"),
                    q(p.start_detuning, units::FREQUENCY, false),
                );
                put(&key("bin_width"), q(p.bin_width, units::TIME, false));
                put(
                    &key("thermalize_hold"),
                    q(p.thermalize_hold, units::TIME, false),
                );
                put(
                    &key("hold_detuning"),
                    p.hold_detuning
                        .map(|v| q(v, units::FREQUENCY, false))
                        .unwrap_or_else(|| "auto".into()),
                );
            }
            ProtocolConfig::MicrowaveScan(p) => {
                put(&key("f_start"), q(p.f_start, units::FREQUENCY, false));
                put(&key("f_end"), q(p.f_end, units::FREQUENCY, false));
                put(&key("duration"), q(p.duration, units::TIME, false));
                put(
                    &key("rabi_frequency"),
                    q(p.rabi_frequency, units::FREQUENCY, true),
                );
                put(&key("bin_width"), q(p.bin_width, units::TIME, false));
                put(
                    &key("axis_origin"),
                    q(p.axis_origin, units::FREQUENCY, false),
                );
                let mode = match p.mode {
                    MicrowaveMode::Analytic => "analytic",
                    MicrowaveMode::MonteCarlo => "monte_carlo",
                };
                put(&key("mode"), mode.into());
                match p.residual {
                    None => put(&key("residual_amplitude"), "none".into()),
                    Some(r) => {
                        put(&key("residual_amplitude"), num(r.amplitude));
                        put(&key("residual_scale"), num(r.detuning_scale));
                    }
                }
            }
        }
        match &self.fit {
            None => put(&key("fit"), "none".into()),
            Some(f) => {
                put(&key("fit"), f.model.name().into());
                put(&key("fit_peaks"), f.peaks.to_string());
                put(
                    &key("fit_min_detuning"),
                    q(f.min_detuning, units::FREQUENCY, true),
                );
                put(
                    &key("fit_max_detuning"),
                    q(f.max_detuning, units::FREQUENCY, true),
                );
            }
        }
        out
    }

    /// SHA-256 of the canonical text, hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e7).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn q(v: f64, dim: Dim, angular: bool) -> String {
    let unit = units::canonical(dim, angular);
    if unit.is_empty() {
        num(v)
    } else {
        format!("{} {unit}", num(v))
    }
}

fn list(v: &[f64], dim: Dim) -> String {
    let body = v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
    let unit = units::canonical(dim, false);
    if unit.is_empty() {
        body
    } else {
        format!("{body} {unit}")
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> Error {
        let line = (self.line > 0).then_some(self.line);
        Error::config(line, format!("`{}`: {}", self.key, message.into()))
    }
}

/// Legal interval of a scalar, in stored SI units.
#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
    lo_open: bool,
}

const fn closed(lo: f64, hi: f64) -> Range {
    Range {
        lo,
        hi,
        lo_open: false,
    }
}

const fn above(lo: f64, hi: f64) -> Range {
    Range {
        lo,
        hi,
        lo_open: true,
    }
}

impl Range {
    fn contains(&self, v: f64) -> bool {
        (if self.lo_open {
            v > self.lo
        } else {
            v >= self.lo
        }) && v <= self.hi
    }

    fn describe(&self, dim: Dim, angular: bool) -> String {
        let unit = units::canonical(dim, angular);
        let open = if self.lo_open { "(" } else { "[" };
        format!("{open}{}, {}] {unit}", num(self.lo), num(self.hi))
            .trim_end()
            .to_string()
    }
}

/// Splits `12.5 MHz` or `12.5MHz` into number and optional unit.
fn split_quantity(text: &str) -> Option<(f64, Option<&str>)> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once(char::is_whitespace) {
        return Some((parse_number(a)?, Some(b.trim())));
    }
    if let Some(v) = parse_number(t) {
        return Some((v, None));
    }
    (1..t.len())
        .rev()
        .filter(|&i| t.is_char_boundary(i))
        .find_map(|i| {
            let v = parse_number(&t[..i])?;
            units::parse_unit(&t[i..])?;
            Some((v, Some(&t[i..])))
        })
}

fn parse_number(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ if s
            .chars()
            .any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') =>
        {
            None
        }
        _ => s.parse().ok(),
    }
}

fn quantity(
    e: &Entry,
    text: &str,
    dim: Dim,
    angular: bool,
    fallback: Option<&Unit>,
) -> Result<f64> {
    let (v, unit) = split_quantity(text)
        .ok_or_else(|| e.err(format!("cannot read `{}` as a number", text.trim())))?;
    let unit = match unit {
        Some(u) => Some(units::parse_unit(u).ok_or_else(|| e.err(format!("unknown unit `{u}`")))?),
        None => fallback.copied(),
    };
    match unit {
        Some(u) => {
            if u.dim != dim {
                return Err(e.err(format!("expected {}", units::describe(dim))));
            }
            if !angular && dim == units::FREQUENCY && text.contains("rad") {
                return Err(e.err("stored in Hz; rad/s is only accepted for angular frequencies"));
            }
            Ok(v * units::conversion(&u, angular))
        }
        None if dim == units::NONE || v == 0.0 => Ok(v),
        None => Err(e.err(format!("missing unit; expected {}", units::describe(dim)))),
    }
}

fn scalar(e: &Entry, dim: Dim, angular: bool, range: Range) -> Result<f64> {
    let v = quantity(e, &e.value, dim, angular, None)?;
    if v.is_nan() || !range.contains(v) {
        return Err(e.err(format!(
            "{} outside legal range {}",
            e.value,
            range.describe(dim, angular)
        )));
    }
    Ok(v)
}

fn values(e: &Entry, dim: Dim, range: Range) -> Result<Vec<f64>> {
    let items: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(e.err("empty list element"));
    }
    let last_unit = split_quantity(items[items.len() - 1])
        .and_then(|(_, u)| u)
        .map(|u| units::parse_unit(u).ok_or_else(|| e.err(format!("unknown unit `{u}`"))))
        .transpose()?;
    items
        .iter()
        .map(|s| {
            let v = quantity(e, s, dim, false, last_unit.as_ref())?;
            if !range.contains(v) {
                return Err(e.err(format!(
                    "element {s} outside legal range {}",
                    range.describe(dim, false)
                )));
            }
            Ok(v)
        })
        .collect()
}

fn integer(e: &Entry, lo: u64, hi: u64) -> Result<u64> {
    let v: u64 = e
        .value
        .replace('_', "")
        .parse()
        .map_err(|_| e.err(format!("`{}` is not a non-negative integer", e.value)))?;
    if v < lo || v > hi {
        return Err(e.err(format!("{v} outside legal range [{lo}, {hi}]")));
    }
    Ok(v)
}

fn choice<'a>(e: &Entry, options: &[&'a str]) -> Result<&'a str> {
    options
        .iter()
        .find(|o| **o == e.value)
        .copied()
        .ok_or_else(|| {
            e.err(format!(
                "`{}` is not one of {}",
                e.value,
                options.join(", ")
            ))
        })
}

fn axis(e: &Entry) -> Result<Vector3<f64>> {
    let v = values(e, units::NONE, closed(-1.0, 1.0))?;
    if v.len() != 3 {
        return Err(e.err("three components required"));
    }
    let a = Vector3::new(v[0], v[1], v[2]);
    if (a.norm() - 1.0).abs() > 1e-9 {
        return Err(e.err("must be a unit vector"));
    }
    Ok(a)
}

const F: Dim = units::FREQUENCY;
const T: Dim = units::TIME;
const TWO_PI: f64 = 2.0 * PI;
const DURATION: Range = closed(0.0, 1000.0);
const BIN: Range = above(0.0, 10.0);
const DETUNING: Range = closed(-1e10, 1e10);

fn beam(b: &mut BeamConfig, e: &Entry, k: &str) -> Result<()> {
    match k {
        "power" => b.power = scalar(e, units::POWER, false, closed(0.0, 100.0))?,
        "waist" => b.waist = scalar(e, units::LENGTH, false, closed(1e-7, 1e-2))?,
        "axis" => b.axis = axis(e)?,
        "shift_coefficient" => {
            b.shift_coefficient = scalar(e, units::PER_POWER, false, closed(-1e12, 1e12))?
        }
        "scatter_coefficient" => {
            b.scatter_coefficient = scalar(e, units::PER_POWER, false, closed(0.0, 1e9))?
        }
        "duty_cycle" => b.duty_cycle = scalar(e, units::NONE, false, above(0.0, 1.0))?,
        _ => return Err(e.err("unknown key")),
    }
    Ok(())
}

fn apply(c: &mut RunConfig, e: &Entry) -> Result<()> {
    let (section, rest) = e.key.split_once('.').unwrap_or((e.key.as_str(), ""));
    let a = &mut c.apparatus;
    match (section, rest) {
        ("seed", "") => c.seed = integer(e, 0, u64::MAX)?,
        ("output", "prefix") => {
            let ok = !e.value.is_empty()
                && e.value
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch));
            if !ok {
                return Err(e.err("use letters, digits, `-`, `_` and `.` only"));
            }
            c.prefix = e.value.clone();
        }
        ("trap", "omega_x") => a.trap.omega_x = scalar(e, F, true, above(0.0, TWO_PI * 1e5))?,
        ("trap", "omega_r") => a.trap.omega_r = scalar(e, F, true, above(0.0, TWO_PI * 1e5))?,
        ("trap", "bottom_frequency") => {
            a.trap.bottom_frequency = scalar(e, F, false, closed(1e9, 2e10))?
        }
        ("trap", "center") => {
            let v = values(e, units::LENGTH, closed(-1e-2, 1e-2))?;
            if v.len() != 3 {
                return Err(e.err("three components required"));
            }
            a.trap.center = Vector3::new(v[0], v[1], v[2]);
        }
        ("beams", "chop_period") => a.chop_period = scalar(e, T, false, above(0.0, 1.0))?,
        ("beams", k) if k.starts_with("diode.") => beam(&mut a.diode, e, &k[6..])?,
        ("beams", k) if k.starts_with("fiber.") => beam(&mut a.fiber, e, &k[6..])?,
        ("rates", "two_photon_peak_rate") => {
            a.rates.two_photon_peak_rate_ref = scalar(e, F, false, above(0.0, 1e9))?
        }
        ("rates", "two_photon_ref_intensity") => {
            a.rates.two_photon_ref_intensity = scalar(e, units::INTENSITY, false, above(0.0, 1e15))?
        }
        ("rates", "ionization_rate") => {
            a.rates.ionization_rate_ref = scalar(e, F, false, above(0.0, 1e12))?
        }
        ("rates", "ionization_ref_intensity") => {
            a.rates.ionization_ref_intensity = scalar(e, units::INTENSITY, false, above(0.0, 1e15))?
        }
        ("rates", "spontaneous_decay_rate") => {
            a.rates.spontaneous_decay_rate = scalar(e, F, false, above(0.0, 1e12))?
        }
        ("rates", "detection_efficiency") => {
            a.rates.detection_efficiency = scalar(e, units::NONE, false, closed(0.0, 1.0))?
        }
        ("spectrum", "line_offsets") => a.spectrum.line_offsets = values(e, F, closed(-1e9, 1e9))?,
        ("spectrum", "line_weights") => {
            a.spectrum.line_weights = values(e, units::NONE, above(0.0, 1e6))?
        }
        ("spectrum", "base_fwhm") => {
            a.spectrum.base_linewidth_fwhm = scalar(e, F, false, above(0.0, 1e9))?
        }
        ("spectrum", "shift_slope") => {
            a.spectrum.shift_slope = scalar(e, units::PER_POWER, false, closed(-1e9, 1e9))?
        }
        ("spectrum", "broadening_slope") => {
            a.spectrum.broadening_slope = scalar(e, units::PER_POWER, false, closed(0.0, 1e9))?
        }
        ("cloud", "N_phys") => c.cloud.n_phys = scalar(e, units::NONE, false, above(0.0, 1e12))?,
        ("cloud", "n_sim") => c.cloud.n_sim = integer(e, 1, 100_000_000)? as usize,
        ("cloud", "T") => {
            c.cloud.temperature = scalar(e, units::TEMPERATURE, false, closed(1e-7, 1e-3))?
        }
        ("cloud", "heating") => {
            c.cloud.heating = match choice(e, &["none", "adiabatic"])? {
                "none" => Heating::None,
                _ => match c.cloud.heating {
                    h @ Heating::Adiabatic { .. } => h,
                    Heating::None => Heating::Adiabatic {
                        compression_factor: 1.0,
                        reference_power: 1.6,
                    },
                },
            }
        }
        ("cloud", "compression_factor") => {
            let v = scalar(e, units::NONE, false, closed(1.0, 100.0))?;
            match &mut c.cloud.heating {
                Heating::Adiabatic {
                    compression_factor, ..
                } => *compression_factor = v,
                Heating::None => return Err(e.err("requires `cloud.heating = adiabatic` first")),
            }
        }
        ("cloud", "reference_power") => {
            let v = scalar(e, units::POWER, false, above(0.0, 100.0))?;
            match &mut c.cloud.heating {
                Heating::Adiabatic {
                    reference_power, ..
                } => *reference_power = v,
                Heating::None => return Err(e.err("requires `cloud.heating = adiabatic` first")),
            }
        }
        (s, k) if PROTOCOLS.contains(&s) => {
            if s != c.protocol.name() {
                return Err(e.err("exactly one protocol required"));
            }
            protocol_key(c, e, k)?
        }
        _ => return Err(e.err("unknown key")),
    }
    Ok(())
}

fn fit_spec<'a>(c: &'a mut RunConfig, e: &Entry) -> Result<&'a mut FitSpec> {
    c.fit
        .as_mut()
        .ok_or_else(|| e.err("requires a `fit` model set earlier in the section"))
}

fn protocol_key(c: &mut RunConfig, e: &Entry, k: &str) -> Result<()> {
    match k {
        "fit" => {
            c.fit = match e.value.as_str() {
                "none" => None,
                v => {
                    let model: FitKind = v.parse().map_err(|_| {
                        e.err(format!("`{v}` is not one of none, exp, double-exp, multi-gauss, temperature, linear"))
                    })?;
                    Some(match c.fit {
                        Some(f) => FitSpec { model, ..f },
                        None => FitSpec::new(model),
                    })
                }
            };
            return Ok(());
        }
        "fit_peaks" => {
            fit_spec(c, e)?.peaks = integer(e, 1, 20)? as usize;
            return Ok(());
        }
        "fit_min_detuning" => {
            fit_spec(c, e)?.min_detuning = scalar(e, F, true, closed(0.0, f64::INFINITY))?;
            return Ok(());
        }
        "fit_max_detuning" => {
            fit_spec(c, e)?.max_detuning = scalar(e, F, true, above(0.0, f64::INFINITY))?;
            return Ok(());
        }
        _ => {}
    }
    match &mut c.protocol {
        ProtocolConfig::Decay(p) => match k {
            "ramp" => {
                p.fiber_ramp = match choice(e, &["instant", "linear"])? {
                    "instant" => FiberRamp::Instant,
                    _ => match p.fiber_ramp {
                        r @ FiberRamp::Linear { .. } => r,
                        FiberRamp::Instant => FiberRamp::Linear { duration: 0.5 },
                    },
                }
            }
            "ramp_duration" => {
                let v = scalar(e, T, false, above(0.0, 1000.0))?;
                match &mut p.fiber_ramp {
                    FiberRamp::Linear { duration } => *duration = v,
                    FiberRamp::Instant => return Err(e.err("requires `decay.ramp = linear` first")),
                }
            }
            "hold_after_ramp" => p.hold_after_ramp = scalar(e, T, false, DURATION)?,
            "observe_duration" => p.observe_duration = scalar(e, T, false, above(0.0, 1000.0))?,
            "bin_width" => p.bin_width = scalar(e, T, false, BIN)?,
            "diode_detuning" => p.diode_detuning = scalar(e, F, false, DETUNING)?,
            _ => return Err(e.err("unknown key")),
        },
        ProtocolConfig::OpticalScan(p) => match k {
            "scan_rate" => {
                p.scan_rate = scalar(e, units::SCAN_RATE, false, closed(-1e12, 1e12))?;
                if p.scan_rate == 0.0 {
                    return Err(e.err("must be non-zero"));
                }
            }
            "span" => p.span = scalar(e, F, false, above(0.0, 1e10))?,
            "start_detuning" => p.start_detuning = scalar(e, F, false, DETUNING)?,
            "bin_width" => p.bin_width = scalar(e, T, false, BIN)?,
            "thermalize_hold" => p.thermalize_hold = scalar(e, T, false, DURATION)?,
            "hold_detuning" => {
                p.hold_detuning = match e.value.as_str() {
                    "auto" => None,
                    _ => Some(scalar(e, F, false, DETUNING)?),
                }
            }
            _ => return Err(e.err("unknown key")),
        },
        ProtocolConfig::MicrowaveScan(p) => match k {
            "f_start" => p.f_start = scalar(e, F, false, closed(1e9, 2e10))?,
            "f_end" => p.f_end = scalar(e, F, false, closed(1e9, 2e10))?,
            "duration" => p.duration = scalar(e, T, false, above(0.0, 1000.0))?,
            "rabi_frequency" => p.rabi_frequency = scalar(e, F, true, above(0.0, TWO_PI * 1e8))?,
            "bin_width" => p.bin_width = scalar(e, T, false, BIN)?,
            "axis_origin" => p.axis_origin = scalar(e, F, false, closed(0.0, 2e10))?,
            "mode" => {
                p.mode = match choice(e, &["analytic", "monte_carlo"])? {
                    "analytic" => MicrowaveMode::Analytic,
                    _ => MicrowaveMode::MonteCarlo,
                }
            }
            "residual_amplitude" => {
                p.residual = match e.value.as_str() {
                    "none" => None,
                    _ => Some(ResidualComponent {
                        amplitude: scalar(e, units::NONE, false, closed(0.0, 1e3))?,
                        detuning_scale: p.residual.map(|r| r.detuning_scale).unwrap_or(0.5),
                    }),
                }
            }
            "residual_scale" => {
                let v = scalar(e, units::NONE, false, above(0.0, 100.0))?;
                match &mut p.residual {
                    Some(r) => r.detuning_scale = v,
                    None => return Err(e.err("requires `residual_amplitude` first")),
                }
            }
            _ => return Err(e.err("unknown key")),
        },
    }
    Ok(())
}

fn entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| {
            Error::config(
                Some(line),
                format!("expected `section.key = value`, got `{body}`"),
            )
        })?;
        let key = k.trim().to_string();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::config(
                Some(line),
                format!("malformed key `{}`", k.trim()),
            ));
        }
        if let Some(first) = seen.insert(key.clone(), line) {
            return Err(Error::config(
                Some(line),
                format!("`{key}` already set at line {first}"),
            ));
        }
        out.push(Entry {
            line,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

/// Parses and validates a configuration; defaults fill every omitted key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let entries = entries(text)?;
    let declared = entries.iter().find(|e| e.key == "protocol");
    let mut sections: Vec<&str> = entries
        .iter()
        .filter_map(|e| e.key.split_once('.').map(|(s, _)| s))
        .filter(|s| PROTOCOLS.contains(s))
        .collect();
    sections.dedup();
    sections.sort_unstable();
    sections.dedup();
    let name = match declared {
        Some(e) => {
            if e.value.is_empty() {
                return Err(Error::config(Some(e.line), "exactly one protocol required"));
            }
            let n = choice(e, &PROTOCOLS)?;
            if sections.iter().any(|s| *s != n) {
                return Err(Error::config(
                    Some(e.line),
                    format!(
                        "exactly one protocol required; found keys for {}",
                        sections.join(", ")
                    ),
                ));
            }
            n
        }
        None => match sections.as_slice() {
            [one] => *one,
            [] => return Err(Error::config(None, "exactly one protocol required")),
            many => {
                return Err(Error::config(
                    None,
                    format!(
                        "exactly one protocol required; found keys for {}",
                        many.join(", ")
                    ),
                ))
            }
        },
    };
    let mut config = RunConfig::new(ProtocolConfig::default_for(name).expect("known protocol"));
    for e in entries.iter().filter(|e| e.key != "protocol") {
        apply(&mut config, e)?;
    }
    config.sync();
    config.validate()?;
    Ok(config)
}

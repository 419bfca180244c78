//! Physical-unit suffixes of configuration values.

use std::f64::consts::PI;

/// Exponents of (second, kelvin, watt, metre).
pub(crate) type Dim = [i8; 4];

pub(crate) const NONE: Dim = [0, 0, 0, 0];
pub(crate) const FREQUENCY: Dim = [-1, 0, 0, 0];
pub(crate) const TEMPERATURE: Dim = [0, 1, 0, 0];
pub(crate) const POWER: Dim = [0, 0, 1, 0];
pub(crate) const LENGTH: Dim = [0, 0, 0, 1];
pub(crate) const TIME: Dim = [1, 0, 0, 0];
pub(crate) const PER_POWER: Dim = [-1, 0, -1, 0];
pub(crate) const SCAN_RATE: Dim = [-2, 0, 0, 0];
pub(crate) const INTENSITY: Dim = [0, 0, 1, -2];

/// A parsed unit: SI factor, dimension, and whether it counts cycles (Hz)
/// rather than radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Unit {
    pub factor: f64,
    pub dim: Dim,
    pub cycles: bool,
}

fn atom(token: &str) -> Option<Unit> {
    let (base, power) = match token.split_once('^') {
        Some((b, p)) => (b, p.parse::<i8>().ok()?),
        None => (token, 1),
    };
    let (factor, dim, cycles): (f64, Dim, bool) = match base {
        "1" | "" => (1.0, NONE, false),
        "Hz" => (1.0, FREQUENCY, true),
        "kHz" => (1e3, FREQUENCY, true),
        "MHz" => (1e6, FREQUENCY, true),
        "GHz" => (1e9, FREQUENCY, true),
        "rad" => (1.0, NONE, false),
        "K" => (1.0, TEMPERATURE, false),
        "mK" => (1e-3, TEMPERATURE, false),
        "uK" | "µK" => (1e-6, TEMPERATURE, false),
        "nK" => (1e-9, TEMPERATURE, false),
        "W" => (1.0, POWER, false),
        "mW" => (1e-3, POWER, false),
        "uW" | "µW" => (1e-6, POWER, false),
        "m" => (1.0, LENGTH, false),
        "cm" => (1e-2, LENGTH, false),
        "mm" => (1e-3, LENGTH, false),
        "um" | "µm" => (1e-6, LENGTH, false),
        "nm" => (1e-9, LENGTH, false),
        "s" => (1.0, TIME, false),
        "ms" => (1e-3, TIME, false),
        "us" | "µs" => (1e-6, TIME, false),
        "ns" => (1e-9, TIME, false),
        _ => return None,
    };
    let mut d = dim;
    for e in d.iter_mut() {
        *e *= power;
    }
    Some(Unit {
        factor: factor.powi(power as i32),
        dim: d,
        cycles,
    })
}

/// Parses `a` or `a/b/c` with optional integer powers (`m^2`, `s^-1`).
pub(crate) fn parse_unit(text: &str) -> Option<Unit> {
    let mut parts = text.split('/');
    let mut unit = atom(parts.next()?)?;
    for p in parts {
        let d = atom(p)?;
        if p.is_empty() {
            return None;
        }
        unit.factor /= d.factor;
        for (a, b) in unit.dim.iter_mut().zip(d.dim) {
            *a -= b;
        }
        unit.cycles |= d.cycles;
    }
    Some(unit)
}

/// SI unit written by the serializer for a dimension.
pub(crate) fn canonical(dim: Dim, angular: bool) -> &'static str {
    match dim {
        FREQUENCY if angular => "rad/s",
        FREQUENCY => "Hz",
        TEMPERATURE => "K",
        POWER => "W",
        LENGTH => "m",
        TIME => "s",
        PER_POWER => "Hz/W",
        SCAN_RATE => "Hz/s",
        INTENSITY => "W/m^2",
        _ => "",
    }
}

/// Factor turning a value written in `unit` into the stored SI value of a
/// key. Angular keys store rad/s, so cycle units gain 2π.
pub(crate) fn conversion(unit: &Unit, angular: bool) -> f64 {
    if angular && unit.cycles {
        unit.factor * 2.0 * PI
    } else {
        unit.factor
    }
}

pub(crate) fn describe(dim: Dim) -> &'static str {
    match dim {
        NONE => "dimensionless",
        FREQUENCY => "a frequency (Hz, kHz, MHz, GHz, rad/s) or rate (1/s)",
        TEMPERATURE => "a temperature (K, mK, uK, nK)",
        POWER => "a power (W, mW, uW)",
        LENGTH => "a length (m, mm, um, nm)",
        TIME => "a time (s, ms, us)",
        PER_POWER => "a frequency per power (e.g. MHz/W, s^-1/W)",
        SCAN_RATE => "a frequency per time (e.g. MHz/s)",
        INTENSITY => "an intensity (W/m^2)",
        _ => "an unsupported dimension",
    }
}

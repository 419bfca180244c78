use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// s
    Time,
    /// Hz
    DiodeDetuning,
    /// Hz, relative to the protocol's axis origin.
    MicrowaveDetuning,
}

impl AxisKind {
    pub fn unit(self) -> &'static str {
        match self {
            AxisKind::Time => "s",
            AxisKind::DiodeDetuning | AxisKind::MicrowaveDetuning => "Hz",
        }
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisKind::Time => "time",
            AxisKind::DiodeDetuning => "diode_detuning",
            AxisKind::MicrowaveDetuning => "microwave_detuning",
        })
    }
}

impl FromStr for AxisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(AxisKind::Time),
            "diode_detuning" => Ok(AxisKind::DiodeDetuning),
            "microwave_detuning" => Ok(AxisKind::MicrowaveDetuning),
            _ => Err(Error::Series(format!("unknown axis kind '{s}'"))),
        }
    }
}

/// Binned ion counts with ordered `key=value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTimeSeries {
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub axis_kind: AxisKind,
    pub metadata: Vec<(String, String)>,
}

impl CountTimeSeries {
    pub fn new(bin_centers: Vec<f64>, counts: Vec<u64>, axis_kind: AxisKind) -> Result<Self> {
        if bin_centers.len() != counts.len() {
            return Err(Error::Series(format!(
                "{} bin centers but {} counts",
                bin_centers.len(),
                counts.len()
            )));
        }
        Ok(CountTimeSeries {
            bin_centers,
            counts,
            axis_kind,
            metadata: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Insert or replace a metadata entry, keeping first-insertion order.
    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key).and_then(|v| v.parse().ok())
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# unit: {}", self.axis_kind.unit())?;
        writeln!(out, "# axis_kind={}", self.axis_kind)?;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "axis,counts")?;
        for (x, c) in self.bin_centers.iter().zip(&self.counts) {
            writeln!(out, "{x:e},{c}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut axis_kind = None;
        let mut metadata = Vec::new();
        let mut header = false;
        let mut centers = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if comment.starts_with("unit:") {
                    continue;
                }
                if let Some((k, v)) = comment.split_once('=') {
                    if k == "axis_kind" {
                        axis_kind = Some(v.parse()?);
                    } else {
                        metadata.push((k.to_string(), v.to_string()));
                    }
                }
                continue;
            }
            if !header {
                if line != "axis,counts" {
                    return Err(Error::Series(format!(
                        "line {lineno}: expected header 'axis,counts'"
                    )));
                }
                header = true;
                continue;
            }
            let (x, c) = line
                .split_once(',')
                .ok_or_else(|| Error::Series(format!("line {lineno}: expected two columns")))?;
            let x: f64 = x
                .trim()
                .parse()
                .map_err(|_| Error::Series(format!("line {lineno}: bad axis value '{x}'")))?;
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Series(format!("line {lineno}: bad count '{c}'")))?;
            centers.push(x);
            counts.push(c);
        }
        if !header {
            return Err(Error::Series("missing 'axis,counts' header".into()));
        }
        let mut s = CountTimeSeries::new(centers, counts, axis_kind.unwrap_or(AxisKind::Time))?;
        s.metadata = metadata;
        Ok(s)
    }
}

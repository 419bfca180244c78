//! Sample, run the protocol, write the series and optionally fit it.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::schema::{FitKind, FitSpec, ProtocolConfig, RunConfig};
use crate::analysis::{
    fit_double_exponential, fit_exponential, fit_linear, fit_multi_gaussian, fit_temperature_with,
    FitReport, TemperatureFitOptions,
};
use crate::ensemble::{
    effective_temperature_after_ramp, resample_equilibrium, sample_thermal_cloud,
};
use crate::error::{Error, Result};
use crate::experiment::{run_decay, run_microwave_scan, run_optical_scan, CountTimeSeries};
use crate::rng::derive_seed;

pub const TOOL_VERSION: &str = concat!("chipspec ", env!("CARGO_PKG_VERSION"));

const TAG_PREPARE: u64 = 0x31;

/// Files written by one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: CountTimeSeries,
    pub series_path: PathBuf,
    pub report: Option<FitReport>,
    pub report_path: Option<PathBuf>,
}

/// The series a configuration produces, with provenance metadata first.
pub fn simulate(config: &RunConfig) -> Result<CountTimeSeries> {
    config.validate()?;
    let app = &config.apparatus;
    let c = &config.cloud;
    let cloud = sample_thermal_cloud(c.n_sim, c.n_phys, c.temperature, &app.trap, config.seed)?;
    let series = match &config.protocol {
        ProtocolConfig::Decay(p) => run_decay(&cloud, p, app, config.seed)?,
        ProtocolConfig::OpticalScan(p) => run_optical_scan(&cloud, p, app, config.seed)?,
        ProtocolConfig::MicrowaveScan(p) => {
            // fiber ramped up and held before the sweep: equilibrium in the
            // dimple at the post-ramp temperature
            let dimple = app.scene(0.0, p.fiber_power);
            let t_eff = effective_temperature_after_ramp(
                c.temperature,
                app.dimple_depth(p.fiber_power),
                config.ramp_heating(),
            )?;
            let prepared = resample_equilibrium(
                &cloud,
                &dimple,
                t_eff,
                derive_seed(config.seed, TAG_PREPARE),
            )?;
            run_microwave_scan(&prepared, p, app, config.seed)?
        }
    };
    Ok(with_provenance(series, config))
}

fn with_provenance(mut series: CountTimeSeries, config: &RunConfig) -> CountTimeSeries {
    let rest = std::mem::take(&mut series.metadata);
    series.set_meta("tool_version", TOOL_VERSION);
    series.set_meta("seed", config.seed);
    series.set_meta("config_sha256", config.hash());
    for line in config.to_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            series.set_meta(&format!("config.{k}"), v);
        }
    }
    for (k, v) in rest {
        series.set_meta(&k, v);
    }
    series
}

/// Trap-bottom position on the series axis, Hz, when the series carries it.
pub fn trap_bottom_of(series: &CountTimeSeries) -> Option<f64> {
    series.meta_f64("trap_bottom")
}

/// Fits `series` with the model of `spec`.
pub fn fit_series(series: &CountTimeSeries, spec: &FitSpec) -> Result<FitReport> {
    match spec.model {
        FitKind::Exp => fit_exponential(series),
        FitKind::DoubleExp => fit_double_exponential(series),
        FitKind::MultiGauss => fit_multi_gaussian(series, spec.peaks),
        FitKind::Linear => fit_linear(series),
        FitKind::Temperature => {
            let bottom = trap_bottom_of(series).ok_or_else(|| {
                Error::FitInput("temperature fit needs `trap_bottom` in the series metadata".into())
            })?;
            let options = TemperatureFitOptions {
                min_detuning: spec.min_detuning,
                max_detuning: spec.max_detuning,
            };
            fit_temperature_with(series, bottom, &options)
        }
    }
}

/// Report document with provenance fields ahead of the fit.
pub fn report_json(report: &FitReport, provenance: &[(&str, String)]) -> String {
    let mut doc = serde_json::Map::new();
    for (k, v) in provenance {
        doc.insert((*k).to_string(), serde_json::Value::String(v.clone()));
    }
    if let serde_json::Value::Object(fields) = report.to_json_value() {
        doc.extend(fields);
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(doc)).expect("serializable") + "\n"
}

pub(crate) fn write_series(path: &Path, series: &CountTimeSeries) -> Result<()> {
    let file = fs::File::create(path)?;
    series.write_csv(BufWriter::new(file))?;
    Ok(())
}

/// Runs a configuration and writes `<prefix>.csv` (and `<prefix>.fit.json`
/// when an automatic fit is requested) into `out_dir`.
///
/// The series file is written before fitting, so a failed fit still leaves
/// the data behind; the fit error is returned afterwards.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let series = simulate(config)?;
    fs::create_dir_all(out_dir)?;
    let series_path = out_dir.join(format!("{}.csv", config.prefix));
    write_series(&series_path, &series)?;
    let mut out = RunOutput {
        series,
        series_path,
        report: None,
        report_path: None,
    };
    if let Some(spec) = &config.fit {
        let report = fit_series(&out.series, spec)?;
        let path = out_dir.join(format!("{}.fit.json", config.prefix));
        let provenance = [
            ("tool_version", TOOL_VERSION.to_string()),
            ("seed", config.seed.to_string()),
            ("config_sha256", config.hash()),
            ("series", out.series_path.display().to_string()),
        ];
        fs::write(&path, report_json(&report, &provenance))?;
        out.report = Some(report);
        out.report_path = Some(path);
    }
    Ok(out)
}

/// One row of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub output: RunOutput,
}

/// Runs `config` once per value of `param`, writing `<prefix>_<i>.csv` per
/// point and `<prefix>_sweep.csv` with the fitted parameters.
pub fn sweep(
    config: &RunConfig,
    param: &str,
    values: &[String],
    out_dir: &Path,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config(None, "sweep needs at least one value"));
    }
    let mut rows = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let mut c = config.clone();
        c.set(param, v)?;
        c.prefix = format!("{}_{i:02}", config.prefix);
        rows.push(SweepRow {
            value: v.trim().to_string(),
            output: run(&c, out_dir)?,
        });
    }
    fs::write(
        out_dir.join(format!("{}_sweep.csv", config.prefix)),
        sweep_table(config, param, &rows),
    )?;
    Ok(rows)
}

/// Summary table: one line per point, fitted values and sigmas as columns.
pub fn sweep_table(config: &RunConfig, param: &str, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "# tool_version={TOOL_VERSION}\n# seed={}\n# config_sha256={}\n# param={param}\n",
        config.seed,
        config.hash()
    );
    let names: Vec<String> = rows
        .iter()
        .find_map(|r| r.output.report.as_ref())
        .map(|r| r.names.clone())
        .unwrap_or_default();
    let mut header = vec!["value".to_string(), "file".into(), "detected".into()];
    for n in &names {
        header.push(n.clone());
        header.push(format!("{n}_sigma"));
    }
    if !names.is_empty() {
        header.push("converged".into());
    }
    out += &header.join(",");
    out.push('\n');
    for r in rows {
        let file = r
            .output
            .series_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut cells = vec![
            r.value.replace(',', ";"),
            file,
            r.output.series.total().to_string(),
        ];
        if let Some(rep) = &r.output.report {
            for (v, s) in rep.values.iter().zip(&rep.sigmas) {
                cells.push(format!("{v:e}"));
                cells.push(format!("{s:e}"));
            }
            cells.push(rep.converged.to_string());
        }
        out += &cells.join(",");
        out.push('\n');
    }
    out
}

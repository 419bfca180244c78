use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chipspec_core::analysis::FitReport;
use chipspec_core::config::{
    fit_series, parse_config, preset, report_json, run, sweep, FitKind, FitSpec, RunConfig,
    PRESETS, TOOL_VERSION,
};
use chipspec_core::experiment::CountTimeSeries;
use chipspec_core::Error;

#[derive(Parser)]
#[command(
    name = "chipspec",
    version,
    about = "Photoionization spectroscopy of chip-trapped atoms, simulated"
)]
struct Cli {
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file and write its series (and fit report).
    Run { config: PathBuf },
    /// Fit a series CSV with one of the shipped models.
    Fit {
        csv: PathBuf,
        /// exp, double-exp, multi-gauss, temperature or linear
        #[arg(value_parser = parse_model)]
        model: FitKind,
        /// Number of Gaussians for multi-gauss.
        #[arg(long, default_value_t = 4)]
        peaks: usize,
        /// Trap bottom on the series axis, Hz; read from the file when omitted.
        #[arg(long)]
        trap_bottom: Option<f64>,
        /// Lower edge of the temperature-fit domain, kHz above the trap bottom.
        #[arg(long)]
        min_detuning_khz: Option<f64>,
        /// Report path; `<csv stem>.<model>.json` in the output directory by default.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a configuration once per value of one key.
    Sweep {
        config: PathBuf,
        /// Key to vary, e.g. beams.fiber.power
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. "80 mW,0.24 W"; see --unit.
        #[arg(long)]
        values: String,
        /// Unit appended to values given without one.
        #[arg(long)]
        unit: Option<String>,
    },
    /// List or write the shipped configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Write `<name>.conf` into the output directory.
    Write {
        name: String,
    },
}

fn parse_model(s: &str) -> Result<FitKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure classes and their exit codes.
enum Failure {
    Config(String),
    Runtime(String),
    Fit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Fit(_) => 4,
        }
    }

    fn report(&self) {
        let (kind, msg) = match self {
            Failure::Config(m) => ("config", m),
            Failure::Runtime(m) => ("runtime", m),
            Failure::Fit(m) => ("fit", m),
        };
        eprintln!("chipspec: error kind={kind} code={}: {msg}", self.code());
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            Error::FitInput(_) | Error::PeakSeeding { .. } => Failure::Fit(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config =
        parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn check_converged(report: &FitReport) -> Result<(), Failure> {
    if report.converged {
        Ok(())
    } else {
        Err(Failure::Fit(format!(
            "{} fit did not converge",
            report.model
        )))
    }
}

fn cmd_run(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let config = load_config(path, cli.seed)?;
    let out = run(&config, &cli.out_dir)?;
    println!(
        "wrote {} ({} counts)",
        out.series_path.display(),
        out.series.total()
    );
    if let (Some(report), Some(p)) = (&out.report, &out.report_path) {
        println!("wrote {}", p.display());
        println!("{}", report.summary());
        check_converged(report)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    cli: &Cli,
    csv: &Path,
    model: FitKind,
    peaks: usize,
    trap_bottom: Option<f64>,
    min_detuning_khz: Option<f64>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let file = fs::File::open(csv)
        .map_err(|e| Failure::Runtime(format!("input error: {}: {e}", csv.display())))?;
    let mut series = CountTimeSeries::read_csv(std::io::BufReader::new(file))
        .map_err(|e| Failure::Runtime(format!("input error: {}: {e}", csv.display())))?;
    if let Some(b) = trap_bottom {
        series.set_meta("trap_bottom", b);
    }
    let mut spec = FitSpec::new(model);
    spec.peaks = peaks;
    if let Some(k) = min_detuning_khz {
        spec.min_detuning = 2.0 * std::f64::consts::PI * k * 1e3;
    }
    let report = fit_series(&series, &spec)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = csv
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            fs::create_dir_all(&cli.out_dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            cli.out_dir.join(format!("{stem}.{}.json", model.name()))
        }
    };
    let mut provenance = vec![
        ("tool_version", TOOL_VERSION.to_string()),
        ("series", csv.display().to_string()),
    ];
    for key in ["seed", "config_sha256"] {
        if let Some(v) = series.meta(key) {
            provenance.push((key, v.to_string()));
        }
    }
    fs::write(&path, report_json(&report, &provenance))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{}", report.summary());
    check_converged(&report)
}

fn cmd_sweep(
    cli: &Cli,
    path: &Path,
    param: &str,
    values: &str,
    unit: Option<&str>,
) -> Result<(), Failure> {
    let config = load_config(path, cli.seed)?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| match unit {
            Some(u) if v.parse::<f64>().is_ok() => format!("{v} {u}"),
            _ => v.to_string(),
        })
        .collect();
    let rows = sweep(&config, param, &values, &cli.out_dir)?;
    for r in &rows {
        let status = r
            .output
            .report
            .as_ref()
            .map(|rep| rep.summary())
            .unwrap_or_default();
        println!(
            "{param} = {}: {} {}",
            r.value,
            r.output.series_path.display(),
            status
        );
    }
    println!(
        "wrote {}",
        cli.out_dir
            .join(format!("{}_sweep.csv", config.prefix))
            .display()
    );
    for r in &rows {
        if let Some(rep) = &r.output.report {
            check_converged(rep)?;
        }
    }
    Ok(())
}

fn cmd_presets(cli: &Cli, action: &PresetAction) -> Result<(), Failure> {
    match action {
        PresetAction::List => {
            for (name, text) in PRESETS {
                let title = text
                    .lines()
                    .next()
                    .unwrap_or("")
                    .trim_start_matches('#')
                    .trim();
                println!("{name:16} {title}");
            }
        }
        PresetAction::Write { name } => {
            let text = preset(name).ok_or_else(|| {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                Failure::Config(format!(
                    "unknown preset `{name}`; known: {}",
                    known.join(", ")
                ))
            })?;
            fs::create_dir_all(&cli.out_dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            let path = cli.out_dir.join(format!("{name}.conf"));
            fs::write(&path, text).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Run { config } => cmd_run(cli, config),
        Command::Fit {
            csv,
            model,
            peaks,
            trap_bottom,
            min_detuning_khz,
            output,
        } => cmd_fit(
            cli,
            csv,
            *model,
            *peaks,
            *trap_bottom,
            *min_detuning_khz,
            output.as_deref(),
        ),
        Command::Sweep {
            config,
            param,
            values,
            unit,
        } => cmd_sweep(cli, config, param, values, unit.as_deref()),
        Command::Presets { action } => cmd_presets(cli, action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code())
        }
    }
}

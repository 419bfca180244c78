//! Fits of count series with the shipped models.

use std::f64::consts::PI;

use super::linear::weighted_linear_fit;
use super::lm::{levenberg_marquardt, FitModel, LmOptions};
use super::models::{DoubleExponential, Exponential, Linear, MultiGaussian, ThermalLine};
use super::peaks::{baseline_level, seed_peaks, smooth, PeakOptions};
use super::report::FitReport;
use crate::error::{Error, Result};
use crate::experiment::CountTimeSeries;
use crate::physics::rates::thermal_exponent_per_rad;

/// `1 / max(y, 1)`
pub fn poisson_weights(y: &[f64]) -> Vec<f64> {
    y.iter().map(|v| 1.0 / v.max(1.0)).collect()
}

/// Refits with the Poisson variance taken from the model instead of the
/// data. Data weights pull fits towards downward fluctuations, which biases
/// amplitudes and shifts blended peaks.
fn model_weighted<M: FitModel>(
    model: &M,
    x: &[f64],
    y: &[f64],
    mut report: FitReport,
) -> Result<FitReport> {
    if !report.converged {
        return Ok(report);
    }
    for _ in 0..2 {
        let w: Vec<f64> = x
            .iter()
            .map(|&v| 1.0 / model.predict(&report.values, v).max(1.0))
            .collect();
        match levenberg_marquardt(model, x, y, &w, &report.values, &LmOptions::default()) {
            Ok(r) if r.converged => report = r,
            _ => break,
        }
    }
    Ok(report)
}

fn sorted_xy(series: &CountTimeSeries) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = series
        .bin_centers
        .iter()
        .zip(&series.counts)
        .map(|(&x, &c)| (x, c as f64))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Decay data from the (smoothed) maximum onwards.
fn decay_domain(series: &CountTimeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    if series.len() < 10 {
        return Err(Error::FitInput(format!(
            "decay fit needs at least 10 bins, got {}",
            series.len()
        )));
    }
    let (x, y) = sorted_xy(series);
    let max = y.iter().cloned().fold(f64::MIN, f64::max);
    let min = y.iter().cloned().fold(f64::MAX, f64::min);
    if !(max > min) {
        return Err(Error::FitInput(
            "no dynamic range: non-positive data after baseline subtraction".into(),
        ));
    }
    let s = smooth(&y, 1.0);
    let start = s
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > s[best] { i } else { best });
    let start = start.min(x.len() - 10);
    Ok((x[start..].to_vec(), y[start..].to_vec()))
}

/// Log-linear regression of `y − c` on `x`, using points with `y > c`.
/// Returns (amplitude at x = 0, decay time).
fn log_linear(x: &[f64], y: &[f64], c: f64) -> Option<(f64, f64)> {
    let (mut xs, mut ls, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for (&a, &b) in x.iter().zip(y) {
        if b - c > 0.0 {
            xs.push(a);
            ls.push((b - c).ln());
            ws.push(b - c);
        }
    }
    let (fit, _) = weighted_linear_fit(&xs, &ls, &ws).ok()?;
    if fit.slope < 0.0 && fit.slope.is_finite() {
        Some((fit.intercept.exp(), -1.0 / fit.slope))
    } else {
        None
    }
}

fn span(x: &[f64]) -> f64 {
    (x[x.len() - 1] - x[0]).abs().max(f64::MIN_POSITIVE)
}

/// `amplitude·exp(−t/tau) + baseline`, fitted from the maximum onwards.
pub fn fit_exponential(series: &CountTimeSeries) -> Result<FitReport> {
    let (x, y) = decay_domain(series)?;
    let w = poisson_weights(&y);
    let s = smooth(&y, 1.0);
    let c0 = 0.5 * s.iter().cloned().fold(f64::MAX, f64::min);
    let t = span(&x);
    let (a0, tau0) = log_linear(&x, &y, c0)
        .ok_or_else(|| Error::FitInput("non-positive data after baseline subtraction".into()))?;
    let init = [a0, tau0.min(100.0 * t), c0];
    let first = levenberg_marquardt(&Exponential, &x, &y, &w, &init, &LmOptions::default())?;
    let mut report = model_weighted(&Exponential, &x, &y, first)?;
    let tau = report.values[1];
    let sigma = report.sigmas[1];
    let resolved = report.sigmas[0] < report.values[0].abs();
    if !(tau > 0.0) || tau > 10.0 * t || !(sigma < tau.abs()) || !resolved {
        report.flag("tau_unbounded");
    }
    Ok(report)
}

/// Sum of two exponentials plus a baseline; `tau_1 < tau_2` after fitting.
pub fn fit_double_exponential(series: &CountTimeSeries) -> Result<FitReport> {
    let (x, y) = decay_domain(series)?;
    let w = poisson_weights(&y);
    let n = x.len();
    let t = span(&x);
    let s = smooth(&y, 1.0);
    let c0 = 0.5 * s.iter().cloned().fold(f64::MAX, f64::min);

    let half = n / 2;
    let (a2, tau2) = log_linear(&x[half..], &y[half..], c0)
        .or_else(|| log_linear(&x, &y, c0))
        .ok_or_else(|| Error::FitInput("non-positive data after baseline subtraction".into()))?;
    let early = (n / 4).max(3);
    let resid: Vec<f64> = (0..early)
        .map(|i| y[i] - c0 - a2 * (-x[i] / tau2).exp())
        .collect();
    let mut seeds = vec![];
    if let Some((a1, tau1)) = log_linear(&x[..early], &resid, 0.0) {
        if tau1 < tau2 {
            seeds.push((a1, tau1));
        }
    }
    let a1_guess = (y[0] - c0 - a2 * (-x[0] / tau2).exp()).max(1.0);
    for frac in [0.01, 0.05, 0.2] {
        let tau1 = (frac * t).min(0.5 * tau2);
        seeds.push((a1_guess * (x[0] / tau1).min(700.0).exp(), tau1));
    }

    let mut best: Option<FitReport> = None;
    for (a1, tau1) in seeds {
        let init = [a1, tau1, a2, tau2, c0];
        let Ok(r) =
            levenberg_marquardt(&DoubleExponential, &x, &y, &w, &init, &LmOptions::default())
        else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => {
                (r.converged && !b.converged)
                    || (r.converged == b.converged && r.residual_norm < b.residual_norm)
            }
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::FitInput("double-exponential fit failed".into()))?;
    let mut report = model_weighted(&DoubleExponential, &x, &y, best)?;
    if report.values[1] > report.values[3] {
        report.values.swap(0, 2);
        report.values.swap(1, 3);
        report.sigmas.swap(0, 2);
        report.sigmas.swap(1, 3);
    }
    let (tau1, tau2) = (report.values[1], report.values[3]);
    if !(tau1 > 0.0)
        || tau2 / tau1 < 2.0
        || tau2 > 10.0 * t
        || report.sigmas.iter().any(|s| !s.is_finite())
    {
        report.flag("degenerate");
    }
    Ok(report)
}

/// Straight line through the counts, Poisson weighted, seeded by the
/// unweighted regression.
pub fn fit_linear(series: &CountTimeSeries) -> Result<FitReport> {
    let (x, y) = sorted_xy(series);
    let seed = super::linear::linear_fit(&x, &y)?;
    let w = poisson_weights(&y);
    let first = levenberg_marquardt(
        &Linear,
        &x,
        &y,
        &w,
        &[seed.slope, seed.intercept],
        &LmOptions::default(),
    )?;
    model_weighted(&Linear, &x, &y, first)
}

/// Multi-Gaussian fit from explicit initial peaks `(center, fwhm, amplitude)`.
pub fn fit_multi_gaussian_from(
    x: &[f64],
    y: &[f64],
    peaks: &[(f64, f64, f64)],
    baseline: f64,
) -> Result<FitReport> {
    let n_peaks = peaks.len();
    if n_peaks == 0 {
        return Err(Error::FitInput("at least one peak required".into()));
    }
    let mut init = Vec::with_capacity(3 * n_peaks + 1);
    for &(c, f, a) in peaks {
        init.extend([c, f, a]);
    }
    init.push(baseline);
    let w = poisson_weights(y);
    let model = MultiGaussian { n_peaks };
    let first = levenberg_marquardt(&model, x, y, &w, &init, &LmOptions::default())?;
    let mut report = model_weighted(&model, x, y, first)?;

    // widths enter squared; report them positive and peaks by center
    let mut order: Vec<usize> = (0..n_peaks).collect();
    order.sort_by(|&a, &b| report.values[3 * a].total_cmp(&report.values[3 * b]));
    let (v, s) = (report.values.clone(), report.sigmas.clone());
    for (slot, &k) in order.iter().enumerate() {
        for q in 0..3 {
            report.values[3 * slot + q] = v[3 * k + q];
            report.sigmas[3 * slot + q] = s[3 * k + q];
        }
        report.values[3 * slot + 1] = report.values[3 * slot + 1].abs();
    }
    if report.condition > 1e8 {
        report.flag("degenerate");
    }
    Ok(report)
}

/// Superposition of `n_peaks` Gaussians on a shared baseline, seeded from
/// the most prominent smoothed maxima. Centers are reported ascending.
pub fn fit_multi_gaussian(series: &CountTimeSeries, n_peaks: usize) -> Result<FitReport> {
    fit_multi_gaussian_with(series, n_peaks, &PeakOptions::default())
}

pub fn fit_multi_gaussian_with(
    series: &CountTimeSeries,
    n_peaks: usize,
    options: &PeakOptions,
) -> Result<FitReport> {
    if n_peaks == 0 {
        return Err(Error::FitInput("at least one peak required".into()));
    }
    if series.len() < 4 * n_peaks + 1 {
        return Err(Error::FitInput(format!(
            "{} peaks need at least {} bins, got {}",
            n_peaks,
            4 * n_peaks + 1,
            series.len()
        )));
    }
    let (x, y) = sorted_xy(series);
    let dx = span(&x) / (x.len() - 1) as f64;
    let base = baseline_level(&smooth(&y, options.smoothing_sigma));
    let mut seeds = seed_peaks(&y, n_peaks, options)?;
    seeds.sort_by_key(|p| p.index);
    // a blended neighbour inflates the half-prominence width; cap it at the
    // distance to the nearest other seed
    let widths: Vec<f64> = (0..seeds.len())
        .map(|k| {
            let mut w = seeds[k].width;
            if k > 0 {
                w = w.min((seeds[k].index - seeds[k - 1].index) as f64);
            }
            if k + 1 < seeds.len() {
                w = w.min((seeds[k + 1].index - seeds[k].index) as f64);
            }
            (w * dx).max(2.0 * dx)
        })
        .collect();
    let start = |width: &dyn Fn(usize) -> f64| -> Vec<(f64, f64, f64)> {
        seeds
            .iter()
            .enumerate()
            .map(|(k, p)| (x[p.index], width(k), (p.height - base).max(1.0)))
            .collect()
    };
    let acceptable = |r: &FitReport| r.converged && (0..n_peaks).all(|k| r.values[3 * k + 2] > 0.0);
    let first = fit_multi_gaussian_from(&x, &y, &start(&|k| widths[k]), base);
    if matches!(&first, Ok(r) if acceptable(r)) {
        return first;
    }
    // second start: one common width for all lines
    let mut sorted = widths.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let second = fit_multi_gaussian_from(&x, &y, &start(&|_| median), base);
    match (first, second) {
        (_, Ok(b)) if acceptable(&b) => Ok(b),
        (Ok(a), Ok(b)) => Ok(if b.converged && !a.converged { b } else { a }),
        (Ok(a), Err(_)) => Ok(a),
        (Err(_), b) => b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureFitOptions {
    /// Lower edge of the fit domain, rad/s.
    pub min_detuning: f64,
    /// Upper edge of the fit domain, rad/s.
    pub max_detuning: f64,
}

impl Default for TemperatureFitOptions {
    fn default() -> Self {
        TemperatureFitOptions {
            min_detuning: 2.0 * PI * 1e3,
            max_detuning: f64::INFINITY,
        }
    }
}

/// Thermal line fit on a microwave spectrum. `trap_bottom` is the
/// trap-bottom resonance on the series axis (Hz). Reports `T` (K) and
/// `amplitude`.
pub fn fit_temperature(series: &CountTimeSeries, trap_bottom: f64) -> Result<FitReport> {
    fit_temperature_with(series, trap_bottom, &TemperatureFitOptions::default())
}

pub fn fit_temperature_with(
    series: &CountTimeSeries,
    trap_bottom: f64,
    options: &TemperatureFitOptions,
) -> Result<FitReport> {
    let lo = options.min_detuning.max(2.0 * PI * 1e3);
    let (mut dw, mut y) = (Vec::new(), Vec::new());
    for (&a, &c) in series.bin_centers.iter().zip(&series.counts) {
        let d = 2.0 * PI * (a - trap_bottom);
        if d > lo && d <= options.max_detuning {
            dw.push(d);
            y.push(c as f64);
        }
    }
    if y.iter().all(|v| *v <= 0.0) {
        return Err(Error::FitInput(
            "no positive counts above the trap bottom".into(),
        ));
    }
    if dw.len() < 3 {
        return Err(Error::FitInput(
            "fewer than 3 bins above the trap bottom".into(),
        ));
    }
    let scaled: Vec<f64> = y.iter().zip(&dw).map(|(v, d)| v * d.sqrt()).collect();
    let (a0, inv_k) = log_linear(&dw, &scaled, 0.0)
        .ok_or_else(|| Error::FitInput("spectrum does not decay with detuning".into()))?;
    // k = 2ħ/(3 k_B T) = thermal_exponent_per_rad(1)/T
    let t0 = thermal_exponent_per_rad(1.0) * inv_k;
    let w = poisson_weights(&y);
    let first = levenberg_marquardt(
        &ThermalLine,
        &dw,
        &y,
        &w,
        &[a0, t0.ln()],
        &LmOptions::default(),
    )?;
    let raw = model_weighted(&ThermalLine, &dw, &y, first)?;
    let t = raw.values[1].exp();
    let mut report = FitReport {
        names: vec!["T".into(), "amplitude".into()],
        values: vec![t, raw.values[0]],
        sigmas: vec![t * raw.sigmas[1], raw.sigmas[0]],
        ..raw
    };
    if !report.sigmas[0].is_finite() {
        report.flag("degenerate");
    }
    Ok(report)
}

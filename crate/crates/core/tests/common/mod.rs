#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use chipspec_core::analysis::FitModel;
use chipspec_core::experiment::{AxisKind, CountTimeSeries};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).unwrap().sample(rng) as u64
    }
}

/// Counts drawn around `model` at `params`.
pub fn noisy<M: FitModel>(
    model: &M,
    params: &[f64],
    x: &[f64],
    axis: AxisKind,
    seed: u64,
) -> CountTimeSeries {
    let mut r = rng(seed);
    let counts = x
        .iter()
        .map(|&v| poisson(model.predict(params, v), &mut r))
        .collect();
    CountTimeSeries::new(x.to_vec(), counts, axis).unwrap()
}

/// Counts rounded from `model` at `params`.
pub fn rounded<M: FitModel>(
    model: &M,
    params: &[f64],
    x: &[f64],
    axis: AxisKind,
) -> CountTimeSeries {
    let counts = x
        .iter()
        .map(|&v| model.predict(params, v).round().max(0.0) as u64)
        .collect();
    CountTimeSeries::new(x.to_vec(), counts, axis).unwrap()
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Kolmogorov survival function Q(λ) = 2 Σ (−1)^(k−1) exp(−2k²λ²).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    kolmogorov_q((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d)
}

//! Detector model and laser chopping.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::rng::{substream, Purpose};

/// Bernoulli thinning of ion arrival times; order is preserved.
pub fn detect(event_times: &[f64], efficiency: f64, seed: u64) -> Vec<f64> {
    if efficiency >= 1.0 {
        return event_times.to_vec();
    }
    if efficiency <= 0.0 {
        return Vec::new();
    }
    let mut rng = substream(seed, Purpose::Detection, 0);
    event_times
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < efficiency)
        .collect()
}

/// `hazard` while the lasers are on within the current chopping period,
/// zero otherwise.
#[inline]
pub fn apply_chopping(hazard: f64, t: f64, duty_cycle: f64, period: f64) -> f64 {
    if duty_cycle >= 1.0 || t.rem_euclid(period) < duty_cycle * period {
        hazard
    } else {
        0.0
    }
}

/// Turn expected ion numbers per time bin into ion arrival times: a Poisson
/// number of ions per bin at uniformly distributed times, sorted. No more
/// than `max_events` ions are emitted in total.
pub fn emit_ions(
    expected: &[f64],
    bin_width: f64,
    t0: f64,
    max_events: u64,
    seed: u64,
) -> Vec<f64> {
    let mut times = Vec::new();
    for (b, &mean) in expected.iter().enumerate() {
        if !(mean > 0.0) {
            continue;
        }
        let mut rng = substream(seed, Purpose::Emission, b as u64);
        let drawn = Poisson::new(mean)
            .expect("finite positive mean")
            .sample(&mut rng) as u64;
        let n = drawn.min(max_events - times.len() as u64) as usize;
        let start = t0 + b as f64 * bin_width;
        let first = times.len();
        times.extend((0..n).map(|_| start + rng.random::<f64>() * bin_width));
        times[first..].sort_by(f64::total_cmp);
    }
    times
}

/// Histogram sorted arrival times into `n_bins` bins of `bin_width` from `t0`.
pub fn bin_events(times: &[f64], bin_width: f64, t0: f64, n_bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_bins];
    for &t in times {
        let b = ((t - t0) / bin_width).floor();
        if b >= 0.0 && (b as usize) < n_bins {
            counts[b as usize] += 1;
        }
    }
    counts
}

//! Peak seeding by smoothed local maxima and topographic prominence.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// Smoothed height.
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence, in bins.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Gaussian smoothing kernel σ, in bins.
    pub smoothing_sigma: f64,
    /// Prominence threshold in units of √baseline.
    pub threshold_sigmas: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions {
            smoothing_sigma: 2.0,
            threshold_sigmas: 3.0,
        }
    }
}

/// Gaussian smoothing with edge renormalization.
pub fn smooth(y: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return y.to_vec();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-r..=r)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let n = y.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (k, w) in (-r..=r).zip(&kernel) {
                let j = i + k;
                if (0..n).contains(&j) {
                    acc += w * y[j as usize];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect()
}

/// Robust baseline: the 20th percentile of the values.
pub fn baseline_level(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mut v = y.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 5]
}

fn prominence(s: &[f64], i: usize) -> f64 {
    let h = s[i];
    let mut left_min = h;
    let mut j = i;
    while j > 0 {
        j -= 1;
        if s[j] > h {
            break;
        }
        left_min = left_min.min(s[j]);
    }
    let mut right_min = h;
    let mut j = i;
    while j + 1 < s.len() {
        j += 1;
        if s[j] > h {
            break;
        }
        right_min = right_min.min(s[j]);
    }
    h - left_min.max(right_min)
}

fn half_width(s: &[f64], i: usize, prom: f64) -> f64 {
    let level = s[i] - 0.5 * prom;
    let mut l = i as f64;
    let mut j = i;
    while j > 0 {
        if s[j - 1] < level {
            l = (j - 1) as f64 + (level - s[j - 1]) / (s[j] - s[j - 1]);
            break;
        }
        j -= 1;
        l = j as f64;
    }
    let mut r = i as f64;
    let mut j = i;
    while j + 1 < s.len() {
        if s[j + 1] < level {
            r = j as f64 + (s[j] - level) / (s[j] - s[j + 1]);
            break;
        }
        j += 1;
        r = j as f64;
    }
    (r - l).max(1.0)
}

/// Remove the smoothing kernel's contribution from a Gaussian-like width.
fn deconvolved(width: f64, sigma: f64) -> f64 {
    let k = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
    (width * width - k * k).max(1.0).sqrt()
}

/// All local maxima of the smoothed data above the prominence threshold,
/// most prominent first.
pub fn find_peaks(y: &[f64], options: &PeakOptions) -> Vec<Peak> {
    let s = smooth(y, options.smoothing_sigma);
    let threshold = options.threshold_sigmas * baseline_level(&s).max(1.0).sqrt();
    let n = s.len();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        // treat a plateau as one candidate at its middle
        let mut k = i;
        while k + 1 < n && s[k + 1] == s[i] {
            k += 1;
        }
        let left_ok = i == 0 || s[i - 1] < s[i];
        let right_ok = k + 1 == n || s[k + 1] < s[k];
        if left_ok && right_ok && n > 1 {
            let c = (i + k) / 2;
            let prom = prominence(&s, c);
            if prom >= threshold && prom > 0.0 {
                peaks.push(Peak {
                    index: c,
                    height: s[c],
                    prominence: prom,
                    width: deconvolved(half_width(&s, c, prom), options.smoothing_sigma),
                });
            }
        }
        i = k + 1;
    }
    peaks.sort_by(|a, b| {
        b.prominence
            .total_cmp(&a.prominence)
            .then(a.index.cmp(&b.index))
    });
    peaks
}

/// The `wanted` most prominent peaks, sorted by index.
pub fn seed_peaks(y: &[f64], wanted: usize, options: &PeakOptions) -> Result<Vec<Peak>> {
    let mut peaks = find_peaks(y, options);
    if peaks.len() < wanted {
        return Err(Error::PeakSeeding {
            found: peaks.len(),
            wanted,
        });
    }
    peaks.truncate(wanted);
    peaks.sort_by_key(|p| p.index);
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(n: usize, centers: &[(f64, f64, f64)], base: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let x = i as f64;
                base + centers
                    .iter()
                    .map(|(c, w, a)| a * (-4.0 * 2f64.ln() * (x - c).powi(2) / (w * w)).exp())
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn finds_separated_peaks() {
        let y = gauss(200, &[(40.0, 10.0, 300.0), (120.0, 12.0, 200.0)], 20.0);
        let p = seed_peaks(&y, 2, &PeakOptions::default()).unwrap();
        assert_eq!(p[0].index, 40);
        assert_eq!(p[1].index, 120);
        assert!((p[0].width - 10.0).abs() < 1.0);
    }

    #[test]
    fn too_few_peaks_is_an_error() {
        let y = gauss(100, &[(50.0, 10.0, 300.0)], 20.0);
        match seed_peaks(&y, 3, &PeakOptions::default()) {
            Err(Error::PeakSeeding {
                found: 1,
                wanted: 3,
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_data_has_no_peaks() {
        assert!(find_peaks(&[5.0; 50], &PeakOptions::default()).is_empty());
    }

    #[test]
    fn smoothing_preserves_constants() {
        let s = smooth(&[2.0; 17], 2.0);
        assert!(s.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}

//! Shipped fit models. Widths are FWHM throughout.

use std::f64::consts::LN_2;

use super::lm::FitModel;
use crate::physics::rates::thermal_exponent_per_rad;

/// `amplitude·exp(−t/tau) + baseline`
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl FitModel for Exponential {
    fn name(&self) -> &str {
        "exp"
    }

    fn parameter_names(&self) -> Vec<String> {
        ["amplitude", "tau", "baseline"].map(String::from).to_vec()
    }

    fn predict(&self, p: &[f64], t: f64) -> f64 {
        p[0] * (-t / p[1]).exp() + p[2]
    }

    fn jacobian(&self, p: &[f64], t: f64, out: &mut [f64]) -> bool {
        let e = (-t / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * e * t / (p[1] * p[1]);
        out[2] = 1.0;
        true
    }
}

/// `a1·exp(−t/tau_1) + a2·exp(−t/tau_2) + baseline`
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleExponential;

impl FitModel for DoubleExponential {
    fn name(&self) -> &str {
        "double-exp"
    }

    fn parameter_names(&self) -> Vec<String> {
        ["amplitude_1", "tau_1", "amplitude_2", "tau_2", "baseline"]
            .map(String::from)
            .to_vec()
    }

    fn predict(&self, p: &[f64], t: f64) -> f64 {
        p[0] * (-t / p[1]).exp() + p[2] * (-t / p[3]).exp() + p[4]
    }

    fn jacobian(&self, p: &[f64], t: f64, out: &mut [f64]) -> bool {
        let e1 = (-t / p[1]).exp();
        let e2 = (-t / p[3]).exp();
        out[0] = e1;
        out[1] = p[0] * e1 * t / (p[1] * p[1]);
        out[2] = e2;
        out[3] = p[2] * e2 * t / (p[3] * p[3]);
        out[4] = 1.0;
        true
    }
}

/// Sum of `n` unit-peak Gaussians scaled by their amplitudes, plus a shared
/// baseline. Parameters per peak: center, fwhm, amplitude.
#[derive(Debug, Clone, Copy)]
pub struct MultiGaussian {
    pub n_peaks: usize,
}

const K4: f64 = 4.0 * LN_2;

impl FitModel for MultiGaussian {
    fn name(&self) -> &str {
        "multi-gauss"
    }

    fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(3 * self.n_peaks + 1);
        for i in 1..=self.n_peaks {
            names.push(format!("center_{i}"));
            names.push(format!("fwhm_{i}"));
            names.push(format!("amplitude_{i}"));
        }
        names.push("baseline".into());
        names
    }

    fn predict(&self, p: &[f64], x: f64) -> f64 {
        let mut y = p[3 * self.n_peaks];
        for k in 0..self.n_peaks {
            let (c, w, a) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            let d = x - c;
            y += a * (-K4 * d * d / (w * w)).exp();
        }
        y
    }

    fn jacobian(&self, p: &[f64], x: f64, out: &mut [f64]) -> bool {
        for k in 0..self.n_peaks {
            let (c, w, a) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            let d = x - c;
            let g = (-K4 * d * d / (w * w)).exp();
            out[3 * k] = a * g * 2.0 * K4 * d / (w * w);
            out[3 * k + 1] = a * g * 2.0 * K4 * d * d / (w * w * w);
            out[3 * k + 2] = g;
        }
        out[3 * self.n_peaks] = 1.0;
        true
    }

    fn step_scale(&self, p: &[f64], j: usize) -> f64 {
        // a center is measured against its line width
        if j < 3 * self.n_peaks && j % 3 == 0 {
            p[j].abs().max(p[j + 1].abs())
        } else {
            p[j].abs()
        }
    }
}

/// Thermal microwave line `amplitude·exp(−2ħΔω/(3k_B T))/√Δω` over Δω in
/// rad/s, with the temperature carried as `ln(T/K)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThermalLine;

impl FitModel for ThermalLine {
    fn name(&self) -> &str {
        "temperature"
    }

    fn parameter_names(&self) -> Vec<String> {
        ["amplitude", "log_temperature"].map(String::from).to_vec()
    }

    fn predict(&self, p: &[f64], dw: f64) -> f64 {
        let k = thermal_exponent_per_rad(p[1].exp());
        p[0] * (-k * dw).exp() / dw.sqrt()
    }

    fn jacobian(&self, p: &[f64], dw: f64, out: &mut [f64]) -> bool {
        let k = thermal_exponent_per_rad(p[1].exp());
        let base = (-k * dw).exp() / dw.sqrt();
        out[0] = base;
        // ∂k/∂lnT = −k
        out[1] = p[0] * base * k * dw;
        true
    }
}

/// `slope·x + intercept`
#[derive(Debug, Clone, Copy, Default)]
pub struct Linear;

impl FitModel for Linear {
    fn name(&self) -> &str {
        "linear"
    }

    fn parameter_names(&self) -> Vec<String> {
        ["slope", "intercept"].map(String::from).to_vec()
    }

    fn predict(&self, p: &[f64], x: f64) -> f64 {
        p[0] * x + p[1]
    }

    fn jacobian(&self, _p: &[f64], x: f64, out: &mut [f64]) -> bool {
        out[0] = x;
        out[1] = 1.0;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(model: &dyn FitModel, p: &[f64], x: f64) -> Vec<f64> {
        (0..p.len())
            .map(|j| {
                let h = 1e-6 * p[j].abs().max(1e-3);
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[j] += h;
                b[j] -= h;
                (model.predict(&a, x) - model.predict(&b, x)) / (2.0 * h)
            })
            .collect()
    }

    // deviation relative to the largest entry of each Jacobian column
    fn check(model: &dyn FitModel, p: &[f64], xs: &[f64]) {
        let mut out = vec![0.0; p.len()];
        let mut rows = Vec::new();
        for &x in xs {
            assert!(model.jacobian(p, x, &mut out));
            rows.push((out.clone(), central(model, p, x)));
        }
        for j in 0..p.len() {
            let scale = rows.iter().map(|(a, _)| a[j].abs()).fold(1e-300, f64::max);
            for (a, fd) in &rows {
                assert!((a[j] - fd[j]).abs() / scale < 1e-5, "{} p{j}", model.name());
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_central_differences() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        check(&Exponential, &[1000.0, 0.771, 5.0], &ts);
        check(
            &DoubleExponential,
            &[3000.0, 0.027, 1000.0, 0.724, 2.0],
            &ts,
        );
        let xs: Vec<f64> = (0..30).map(|i| -5e6 + i as f64 * 1e6).collect();
        check(
            &MultiGaussian { n_peaks: 2 },
            &[1e6, 7e6, 100.0, 8.73e6, 7e6, 80.0, 3.0],
            &xs,
        );
        let dw: Vec<f64> = (1..20).map(|i| i as f64 * 2e6).collect();
        check(&ThermalLine, &[1e5, (18e-6f64).ln()], &dw);
        check(&Linear, &[2.4e6, 3.84e6], &[0.08, 0.5, 1.6]);
    }

    #[test]
    fn forward_differences_survive_a_center_at_zero() {
        let model = MultiGaussian { n_peaks: 1 };
        let p = [0.0, 7e6, 300.0, 2.0];
        let (mut a, mut f) = ([0.0; 4], [0.0; 4]);
        for x in [-3e6, 1e6, 4e6] {
            assert!(model.jacobian(&p, x, &mut a));
            crate::analysis::numeric_jacobian(&model, &p, x, &mut f);
            assert!(
                (a[0] - f[0]).abs() < 1e-5 * a[0].abs(),
                "{} vs {}",
                a[0],
                f[0]
            );
        }
    }

    #[test]
    fn names_match_parameter_count() {
        assert_eq!(MultiGaussian { n_peaks: 4 }.parameter_names().len(), 13);
        assert_eq!(DoubleExponential.parameter_names()[3], "tau_2");
    }
}

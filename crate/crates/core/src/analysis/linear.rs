use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
}

/// Ordinary least squares with standard errors from the residual scatter.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    weighted_linear_fit(x, y, &vec![1.0; x.len()]).map(|(fit, _)| fit)
}

/// Weighted least squares. Returns the fit (uncertainties scaled by the
/// reduced χ²) and the unscaled covariance `[[var_s, cov], [cov, var_i]]`.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<(LinearFit, [[f64; 2]; 2])> {
    let n = x.len();
    if y.len() != n || w.len() != n {
        return Err(Error::FitInput(
            "x, y and weights must have equal lengths".into(),
        ));
    }
    if n < 3 {
        return Err(Error::FitInput("linear fit needs at least 3 points".into()));
    }
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::FitInput("weights must not all vanish".into()));
    }
    // center on the weighted mean of x and on the first y so a constant y
    // gives an exactly zero slope
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let y0 = y[0];
    let dy: Vec<f64> = y.iter().map(|v| v - y0).collect();
    let ym = dy.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - xm;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (dy[i] - ym);
    }
    let spread = x.iter().map(|v| (v - xm).abs()).fold(0.0, f64::max);
    if !(sxx > 0.0) || spread <= 1e-14 * xm.abs() {
        return Err(Error::FitInput(
            "rank deficient: all x values are identical".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = y0 + ym - slope * xm;
    let chi2: f64 = (0..n)
        .map(|i| w[i] * (y[i] - slope * x[i] - intercept).powi(2))
        .sum();
    let red = chi2 / (n - 2) as f64;
    let var_s = 1.0 / sxx;
    let var_i = 1.0 / sw + xm * xm / sxx;
    let cov = -xm / sxx;
    Ok((
        LinearFit {
            slope,
            intercept,
            slope_sigma: (var_s * red).sqrt(),
            intercept_sigma: (var_i * red).sqrt(),
        },
        [[var_s, cov], [cov, var_i]],
    ))
}

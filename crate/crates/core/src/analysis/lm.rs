//! Levenberg–Marquardt on weighted residuals.

use nalgebra::{DMatrix, DVector};

use super::report::FitReport;
use crate::error::{Error, Result};

/// A model `y = f(params, x)` for least-squares fitting.
pub trait FitModel {
    fn name(&self) -> &str;

    fn parameter_names(&self) -> Vec<String>;

    fn predict(&self, params: &[f64], x: f64) -> f64;

    /// Writes ∂f/∂pⱼ into `out` and returns true, or returns false when the
    /// model has no analytic derivative.
    fn jacobian(&self, _params: &[f64], _x: f64, _out: &mut [f64]) -> bool {
        false
    }

    /// Typical magnitude of parameter `j`, which sets its finite-difference
    /// step. Parameters that may sit at zero need a scale of their own.
    fn step_scale(&self, params: &[f64], j: usize) -> f64 {
        params[j].abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost change at an accepted step.
    pub ftol: f64,
    /// Largest |cosine| between residual vector and Jacobian columns.
    pub gtol: f64,
    pub initial_lambda: f64,
    /// Use forward differences even when an analytic Jacobian exists.
    pub numeric_jacobian: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            ftol: 1e-10,
            gtol: 1e-10,
            initial_lambda: 1e-3,
            numeric_jacobian: false,
        }
    }
}

/// Forward-difference Jacobian of `predict` at one point.
pub fn numeric_jacobian<M: FitModel + ?Sized>(model: &M, params: &[f64], x: f64, out: &mut [f64]) {
    let f0 = model.predict(params, x);
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = 1e-8 * model.step_scale(params, j).max(1e-6);
        p[j] = params[j] + h;
        out[j] = (model.predict(&p, x) - f0) / h;
        p[j] = params[j];
    }
}

struct Problem<'a, M: FitModel + ?Sized> {
    model: &'a M,
    x: &'a [f64],
    y: &'a [f64],
    sqrt_w: Vec<f64>,
    numeric: bool,
}

impl<M: FitModel + ?Sized> Problem<'_, M> {
    fn residuals(&self, p: &[f64]) -> Result<DVector<f64>> {
        let mut r = DVector::zeros(self.x.len());
        for i in 0..self.x.len() {
            let f = self.model.predict(p, self.x[i]);
            if !f.is_finite() {
                return Err(Error::FitInput(format!(
                    "model '{}' is not finite at x = {}",
                    self.model.name(),
                    self.x[i]
                )));
            }
            r[i] = self.sqrt_w[i] * (self.y[i] - f);
        }
        Ok(r)
    }

    /// Jacobian of the model values (not of the residuals), weighted.
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.x.len();
        let m = p.len();
        let mut jac = DMatrix::zeros(n, m);
        let mut row = vec![0.0; m];
        for i in 0..n {
            if self.numeric || !self.model.jacobian(p, self.x[i], &mut row) {
                numeric_jacobian(self.model, p, self.x[i], &mut row);
            }
            for j in 0..m {
                if !row[j].is_finite() {
                    return Err(Error::FitInput(format!(
                        "model '{}' has a non-finite derivative at x = {}",
                        self.model.name(),
                        self.x[i]
                    )));
                }
                jac[(i, j)] = self.sqrt_w[i] * row[j];
            }
        }
        Ok(jac)
    }
}

fn gradient_cosine(jac: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    let g = jac.transpose() * r;
    (0..jac.ncols())
        .map(|j| {
            let cn = jac.column(j).norm();
            if cn == 0.0 {
                0.0
            } else {
                (g[j] / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Condition number of the normal matrix after scaling it to unit diagonal.
fn scaled_condition(jtj: &DMatrix<f64>) -> f64 {
    let m = jtj.nrows();
    let d: Vec<f64> = (0..m).map(|j| jtj[(j, j)].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return f64::INFINITY;
    }
    let scaled = DMatrix::from_fn(m, m, |i, j| jtj[(i, j)] / (d[i] * d[j]));
    let eig = scaled.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// One undamped Gauss–Newton step, kept only if it lowers the cost. Removes
/// the bias the damping leaves at termination.
fn polish<M: FitModel + ?Sized>(
    problem: &Problem<'_, M>,
    p: &mut Vec<f64>,
    r: &mut DVector<f64>,
    cost: &mut f64,
    jac: &mut DMatrix<f64>,
    history: &mut Vec<f64>,
) -> Result<()> {
    let jtj = jac.transpose() * &*jac;
    let Some(chol) = jtj.cholesky() else {
        return Ok(());
    };
    let step = chol.solve(&(jac.transpose() * &*r));
    let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    if let Ok(r_trial) = problem.residuals(&trial) {
        let c = 0.5 * r_trial.norm_squared();
        if c < *cost {
            *p = trial;
            *r = r_trial;
            *cost = c;
            history.push(c);
            *jac = problem.jacobian(p)?;
        }
    }
    Ok(())
}

/// Damped Gauss–Newton minimization of `Σ wᵢ (yᵢ − f(p, xᵢ))²`.
pub fn levenberg_marquardt<M: FitModel + ?Sized>(
    model: &M,
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    init: &[f64],
    options: &LmOptions,
) -> Result<FitReport> {
    let names = model.parameter_names();
    if init.len() != names.len() {
        return Err(Error::FitInput(format!(
            "{} initial values for {} parameters",
            init.len(),
            names.len()
        )));
    }
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::FitInput(
            "x, y and weights must have equal lengths".into(),
        ));
    }
    if x.len() < init.len() {
        return Err(Error::FitInput(format!(
            "{} data points cannot constrain {} parameters",
            x.len(),
            init.len()
        )));
    }
    if y.iter().chain(x).chain(weights).any(|v| !v.is_finite()) || weights.iter().any(|w| *w < 0.0)
    {
        return Err(Error::FitInput(
            "data must be finite with non-negative weights".into(),
        ));
    }
    let problem = Problem {
        model,
        x,
        y,
        sqrt_w: weights.iter().map(|w| w.sqrt()).collect(),
        numeric: options.numeric_jacobian,
    };

    let m = init.len();
    let mut p = init.to_vec();
    let mut r = problem.residuals(&p)?;
    let mut cost = 0.5 * r.norm_squared();
    let mut jac = problem.jacobian(&p)?;
    let mut lambda = options.initial_lambda;
    let mut iterations = 0;
    let mut converged = false;
    let mut singular = false;
    let mut cost_history = vec![cost];
    // residuals at the rounding level of the data carry no direction
    let data: f64 = y
        .iter()
        .zip(&problem.sqrt_w)
        .map(|(v, s)| (v * s).powi(2))
        .sum();
    let floor = 0.5 * data * 1e-24;

    'outer: while iterations < options.max_iterations {
        if cost <= floor || gradient_cosine(&jac, &r) < options.gtol {
            converged = true;
            break;
        }
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        loop {
            let mut a = jtj.clone();
            for j in 0..m {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    singular = true;
                    break 'outer;
                }
                continue;
            };
            let step = chol.solve(&g);
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Ok(r_trial) = problem.residuals(&trial) {
                let c_trial = 0.5 * r_trial.norm_squared();
                if c_trial < cost {
                    let rel = (cost - c_trial) / cost;
                    p = trial;
                    r = r_trial;
                    cost = c_trial;
                    cost_history.push(cost);
                    jac = problem.jacobian(&p)?;
                    lambda = (lambda / 3.0).max(1e-15);
                    if rel < options.ftol {
                        converged = true;
                        polish(
                            &problem,
                            &mut p,
                            &mut r,
                            &mut cost,
                            &mut jac,
                            &mut cost_history,
                        )?;
                        break 'outer;
                    }
                    continue 'outer;
                }
            }
            let tiny = step
                .iter()
                .zip(&p)
                .all(|(s, v)| s.abs() <= 1e-14 * v.abs().max(1e-300));
            lambda *= 4.0;
            if tiny || lambda > 1e16 {
                // no descent direction left: a minimum if the gradient vanishes
                converged = cost <= floor || gradient_cosine(&jac, &r) < 1e-6;
                break 'outer;
            }
        }
    }

    let n = x.len();
    let jtj = jac.transpose() * &jac;
    let condition = scaled_condition(&jtj);
    let dof = n - m;
    let reduced = if dof > 0 {
        2.0 * cost / dof as f64
    } else {
        0.0
    };
    let scale = if dof > 0 { reduced } else { 1.0 };
    let sigmas = match jtj.clone().try_inverse() {
        Some(cov) if condition.is_finite() => (0..m)
            .map(|j| (cov[(j, j)].max(0.0) * scale).sqrt())
            .collect(),
        _ => vec![f64::INFINITY; m],
    };
    Ok(FitReport {
        model: model.name().to_string(),
        names,
        values: p,
        sigmas,
        residual_norm: r.norm(),
        reduced_chi2: reduced,
        iterations,
        converged: converged && !singular,
        condition,
        gradient: gradient_cosine(&jac, &r),
        cost_history,
        flags: Vec::new(),
    })
}

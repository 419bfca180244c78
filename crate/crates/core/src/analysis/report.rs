use serde_json::{json, Map, Value};

/// Result of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// 1σ, from the covariance scaled by the reduced χ².
    pub sigmas: Vec<f64>,
    pub residual_norm: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Condition number of the unit-diagonal normal matrix.
    pub condition: f64,
    /// Largest |cosine| between the residuals and a Jacobian column.
    pub gradient: f64,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Diagnostics such as `degenerate` or `tau_unbounded`.
    pub flags: Vec<String>,
}

impl FitReport {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.sigmas[i])
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    pub(crate) fn flag(&mut self, flag: &str) {
        if !self.has_flag(flag) {
            self.flags.push(flag.to_string());
        }
    }

    /// Values of all parameters whose name starts with `prefix`, in order.
    pub fn series(&self, prefix: &str) -> Vec<f64> {
        self.names
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, v)| *v)
            .collect()
    }

    pub fn sigma_series(&self, prefix: &str) -> Vec<f64> {
        self.names
            .iter()
            .zip(&self.sigmas)
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, v)| *v)
            .collect()
    }

    pub fn to_json_value(&self) -> Value {
        let mut params = Map::new();
        for ((n, v), s) in self.names.iter().zip(&self.values).zip(&self.sigmas) {
            params.insert(
                n.clone(),
                json!({ "value": finite(*v), "sigma": finite(*s) }),
            );
        }
        json!({
            "model": self.model,
            "parameters": params,
            "residual_norm": finite(self.residual_norm),
            "reduced_chi2": finite(self.reduced_chi2),
            "iterations": self.iterations,
            "converged": self.converged,
            "condition": finite(self.condition),
            "flags": self.flags,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("json output") + "\n"
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let mut out = format!("{}:", self.model);
        for ((n, v), s) in self.names.iter().zip(&self.values).zip(&self.sigmas) {
            out.push_str(&format!(" {n}={v:.6e}±{s:.2e}"));
        }
        out.push_str(if self.converged {
            " converged"
        } else {
            " NOT converged"
        });
        if !self.flags.is_empty() {
            out.push_str(&format!(" [{}]", self.flags.join(",")));
        }
        out
    }
}

/// JSON has no representation for inf/NaN; those become null.
fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resonance shell does not exist below the trap bottom (detuning {0} rad/s)")]
    NegativeDetuning(f64),

    #[error("sampler did not converge: acceptance rate {rate:.3} outside [0.1, 0.9]")]
    SamplerDiverged { rate: f64 },

    #[error("time step {dt:e} s exceeds the stability limit {limit:e} s")]
    TimeStepTooLarge { dt: f64, limit: f64 },

    #[error("fit input: {0}")]
    FitInput(String),

    #[error("peak seeding found {found} peaks, {wanted} requested")]
    PeakSeeding { found: usize, wanted: usize },

    #[error("malformed series file: {0}")]
    Series(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

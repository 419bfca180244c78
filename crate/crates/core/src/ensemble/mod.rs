//! Thermal atom clouds: Boltzmann sampling, classical propagation and
//! re-thermalization.

pub mod cloud;
pub mod heating;
pub mod integrator;
pub mod sampler;

pub use cloud::{AtomRecord, CloudState};
pub use heating::{effective_temperature_after_ramp, RampHeating};
pub use integrator::{choose_dt, integrate_trajectory, max_stable_dt, DEFAULT_DT};
pub use sampler::{resample_equilibrium, sample_thermal_cloud, SamplerConfig, ThermalSampler};

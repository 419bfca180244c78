//! Simulated experiment protocols and the detection chain.

pub mod apparatus;
pub mod decay;
pub mod detection;
mod engine;
pub mod microwave;
pub mod optical;
pub mod protocol;
pub mod series;

use nalgebra::Vector3;

use crate::physics::TrapConfig;

pub use apparatus::{Apparatus, Scene};
pub use decay::{run_decay, run_decay_tallied};
pub use detection::{apply_chopping, detect};
pub use engine::RunTally;
pub use microwave::{
    run_microwave_scan, run_microwave_scan_tallied, transverse_coupling, windowed_line_density,
};
pub use optical::{
    light_shift_cross_check, optical_scan_expectation, run_optical_scan, run_optical_scan_tallied,
    ScanExpectation, ShiftCrossCheck,
};
pub use protocol::{
    DecayProtocol, FiberRamp, MicrowaveMode, MicrowaveScanProtocol, OpticalScanProtocol,
    ResidualComponent, CLOCK_FREQUENCY,
};
pub use series::{AxisKind, CountTimeSeries};

/// Microwave detuning from the trap-bottom resonance at `pos`, rad/s.
pub fn zeeman_detuning(pos: &Vector3<f64>, trap: &TrapConfig) -> f64 {
    trap.zeeman_detuning(pos)
}

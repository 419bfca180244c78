//! Run configuration: the text format, presets and the run pipeline.

mod pipeline;
mod schema;
mod units;

pub use pipeline::{
    fit_series, report_json, run, simulate, sweep, sweep_table, trap_bottom_of, RunOutput,
    SweepRow, TOOL_VERSION,
};
pub use schema::{parse_config, CloudConfig, FitKind, FitSpec, Heating, ProtocolConfig, RunConfig};

/// Shipped configurations, by name.
pub const PRESETS: [(&str, &str); 5] = [
    (
        "fig2-instant",
        include_str!("../../presets/fig2-instant.conf"),
    ),
    (
        "fig2-ramped",
        include_str!("../../presets/fig2-ramped.conf"),
    ),
    ("fig3-scan", include_str!("../../presets/fig3-scan.conf")),
    (
        "fig4-lowpower",
        include_str!("../../presets/fig4-lowpower.conf"),
    ),
    (
        "fig4-highpower",
        include_str!("../../presets/fig4-highpower.conf"),
    ),
];

/// Text of a preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

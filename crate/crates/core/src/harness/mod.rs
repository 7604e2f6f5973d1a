//! Scenario-driven simulation runs: configuration, sweeps, metrics output
//! and bundled presets.

pub mod metrics;
pub mod presets;
pub mod run;
pub mod scenario;

pub use metrics::{emit_csv, parse_csv, schema_hash, MetricsRow, COLUMNS, SCHEMA_VERSION};
pub use presets::{preset, PRESETS};
pub use run::{load_code, run_all, run_point, run_scenario, run_sweep, sweep_points, write_outputs, PointResult};
pub use scenario::{parse_values, Scenario, SweepSpec, Toggles, BUILTIN_CODE};

/// Resolved configuration echo written next to the metrics.
pub fn resolved_echo(s: &Scenario) -> String {
    format!(
        "# resolved scenario\n# metrics schema v{SCHEMA_VERSION} sha256:{}\n\n{}",
        schema_hash(),
        s.to_text()
    )
}

//! Scenarios bundled with the simulator.

use super::scenario::Scenario;
use crate::error::{Error, Result};

/// `(name, description, scenario text)` of every bundled preset.
pub const PRESETS: &[(&str, &str, &str)] = &[
    (
        "fig2a_nep",
        "excess noise versus receiver NEP",
        include_str!("../../presets/fig2a_nep.scn"),
    ),
    (
        "fig2b_raman",
        "excess noise versus Raman noise density",
        include_str!("../../presets/fig2b_raman.scn"),
    ),
    (
        "fig2c_adc",
        "excess noise versus ADC resolution",
        include_str!("../../presets/fig2c_adc.scn"),
    ),
    (
        "fig3_rin",
        "transmittance and excess noise versus laser RIN",
        include_str!("../../presets/fig3_rin.scn"),
    ),
    (
        "fig4_sweeps",
        "I_AB and Holevo bound versus NEP, transmittance and modulation variance",
        include_str!("../../presets/fig4_sweeps.scn"),
    ),
    (
        "fig5_filter",
        "receive-filter bandwidth for sin^4 pulses",
        include_str!("../../presets/fig5_filter.scn"),
    ),
    (
        "fig6_phase",
        "pilot-aided phase recovery against a noise-free baseline",
        include_str!("../../presets/fig6_phase.scn"),
    ),
    (
        "sec6_key",
        "key extraction with the shipped rate-0.1 code",
        include_str!("../../presets/sec6_key.scn"),
    ),
];

/// Parses a bundled preset by name.
pub fn preset(name: &str) -> Result<Scenario> {
    let (_, _, text) = PRESETS
        .iter()
        .find(|(n, _, _)| *n == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{name}`")))?;
    Scenario::parse(text)
}

//! Quantum channel: loss and Raman noise from co-propagating classical traffic.

use crate::error::{invalid, Result};
use crate::signal::{add_awgn_optical, OpticalField, RandomStream};

/// How the channel transmittance is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelMode {
    /// Transmittance given directly.
    Fixed { transmittance: f64 },
    /// Derived from fibre length (km) and attenuation (dB/km).
    Fibre { length_km: f64, attenuation_db_per_km: f64 },
}

/// Where the Raman PSD is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RamanReference {
    /// PSD at the receiver input; noise added after the loss.
    Output,
    /// PSD at the channel input; noise added before the loss and attenuated with the signal.
    Input,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub mode: ChannelMode,
    /// One-sided Raman noise PSD in the signal band, W/Hz.
    pub raman_psd: f64,
    pub raman_reference: RamanReference,
}

impl ChannelSpec {
    pub fn fixed(transmittance: f64) -> Self {
        Self {
            mode: ChannelMode::Fixed { transmittance },
            raman_psd: 0.0,
            raman_reference: RamanReference::Output,
        }
    }

    pub fn fibre(length_km: f64, attenuation_db_per_km: f64) -> Self {
        Self {
            mode: ChannelMode::Fibre {
                length_km,
                attenuation_db_per_km,
            },
            raman_psd: 0.0,
            raman_reference: RamanReference::Output,
        }
    }

    pub fn transmittance(&self) -> f64 {
        match self.mode {
            ChannelMode::Fixed { transmittance } => transmittance,
            ChannelMode::Fibre {
                length_km,
                attenuation_db_per_km,
            } => transmittance(length_km, attenuation_db_per_km),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.mode {
            ChannelMode::Fixed { transmittance } => {
                if !(0.0..=1.0).contains(&transmittance) {
                    out.push(format!("channel.transmittance must be in [0, 1], got {transmittance}"));
                }
            }
            ChannelMode::Fibre {
                length_km,
                attenuation_db_per_km,
            } => {
                if !(length_km >= 0.0) {
                    out.push(format!("channel.length_km must be >= 0, got {length_km}"));
                }
                if !(attenuation_db_per_km >= 0.0) {
                    out.push(format!(
                        "channel.attenuation_db_per_km must be >= 0, got {attenuation_db_per_km}"
                    ));
                }
            }
        }
        if !(self.raman_psd >= 0.0) {
            out.push(format!("channel.raman_psd must be >= 0, got {}", self.raman_psd));
        }
        out
    }

    /// Attenuates and adds Raman noise (at the configured reference point).
    pub fn propagate(&self, field: &OpticalField, rng: &mut RandomStream) -> Result<OpticalField> {
        let t = self.transmittance();
        match self.raman_reference {
            RamanReference::Output => inject_raman(&attenuate(field, t)?, self.raman_psd, rng),
            RamanReference::Input => attenuate(&inject_raman(field, self.raman_psd, rng)?, t),
        }
    }
}

/// `10^(−α·L/10)`.
pub fn transmittance(length_km: f64, attenuation_db_per_km: f64) -> f64 {
    10f64.powf(-attenuation_db_per_km * length_km / 10.0)
}

/// Scales the field amplitude by `√T`.
pub fn attenuate(field: &OpticalField, t: f64) -> Result<OpticalField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("transmittance must be in [0, 1], got {t}")));
    }
    if t == 1.0 {
        return Ok(field.clone());
    }
    let s = t.sqrt();
    Ok(field.with_samples(field.samples().iter().map(|a| a * s).collect()))
}

/// Adds white Raman noise of one-sided PSD `raman_psd` (W/Hz).
pub fn inject_raman(field: &OpticalField, raman_psd: f64, rng: &mut RandomStream) -> Result<OpticalField> {
    add_awgn_optical(field, raman_psd, rng)
}

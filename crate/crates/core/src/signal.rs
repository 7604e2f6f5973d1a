//! Complex-baseband optical fields, seeded random streams and the shot-noise
//! unit conventions shared by every stage of the link.
//!
//! A field is a sequence of phasors relative to a carrier frequency, in units
//! of √W so that `|a|²` is the instantaneous optical power. Quadratures are
//! expressed in shot-noise units (SNU): the vacuum has variance 1 in each
//! quadrature and a coherent state with mean quadratures `(q, p)` carries
//! `(q² + p²) / 4` photons.

use num_complex::Complex64;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// C-band carrier used by the presets, Hz (≈1550 nm).
pub const DEFAULT_CARRIER_HZ: f64 = 193.4e12;

/// Energy of one photon at `carrier_frequency`, J.
pub fn photon_energy(carrier_frequency: f64) -> f64 {
    PLANCK * carrier_frequency
}

/// Shot-noise-unit conventions.
pub mod snu {
    /// Quadrature variance of the vacuum state.
    pub const VACUUM_VARIANCE: f64 = 1.0;

    /// Mean photon number of a coherent state with quadratures `(q, p)` in SNU.
    pub fn photon_number(q: f64, p: f64) -> f64 {
        (q * q + p * p) / 4.0
    }
}

/// Sampled complex envelope of a single-polarization optical field.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalField {
    carrier_frequency: f64,
    sample_rate: f64,
    samples: Vec<Complex64>,
    label: String,
}

impl OpticalField {
    /// Wraps `samples` (in √W) taken at `sample_rate` around `carrier_frequency`.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, carrier_frequency: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(invalid(format!(
                "carrier frequency must be positive, got {carrier_frequency}"
            )));
        }
        Ok(Self {
            carrier_frequency,
            sample_rate,
            samples,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same rates and label, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            carrier_frequency: self.carrier_frequency,
            sample_rate: self.sample_rate,
            samples,
            label: self.label.clone(),
        }
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Arithmetic mean of `|a|²` in W; zero for an empty field.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|a| a.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Free-function form of [`OpticalField::new`].
pub fn make_field(
    samples: Vec<Complex64>,
    sample_rate: f64,
    carrier_frequency: f64,
) -> Result<OpticalField> {
    OpticalField::new(samples, sample_rate, carrier_frequency)
}

/// Free-function form of [`OpticalField::mean_power`].
pub fn mean_power(field: &OpticalField) -> f64 {
    field.mean_power()
}

/// Reproducible random source identified by `(master_seed, substream_id)`.
///
/// Each physical noise source of a run draws from its own substream, so
/// switching one source on or off never shifts the draws of another.
#[derive(Debug, Clone)]
pub struct RandomStream {
    master_seed: u64,
    substream_id: u64,
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, substream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(substream_id);
        Self {
            master_seed,
            substream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn substream_id(&self) -> u64 {
        self.substream_id
    }

    /// Child stream keyed by `tag`; independent of the parent's current position.
    pub fn derive(&self, tag: u64) -> Self {
        Self::new(self.master_seed, splitmix64(self.substream_id ^ splitmix64(tag)))
    }

    /// One standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Adds white circular complex Gaussian noise of one-sided PSD `one_sided_psd`
/// (W/Hz) over the full simulation band: per-sample power variance
/// `psd · f_s`, split evenly between the real and imaginary parts.
pub fn add_awgn_optical(
    field: &OpticalField,
    one_sided_psd: f64,
    rng: &mut RandomStream,
) -> Result<OpticalField> {
    if !(one_sided_psd >= 0.0) {
        return Err(invalid(format!("PSD must be non-negative, got {one_sided_psd}")));
    }
    if one_sided_psd == 0.0 {
        return Ok(field.clone());
    }
    let sigma = (one_sided_psd * field.sample_rate() / 2.0).sqrt();
    let samples = field
        .samples()
        .iter()
        .map(|a| a + Complex64::new(sigma * rng.normal(), sigma * rng.normal()))
        .collect();
    Ok(field.with_samples(samples))
}

//! Coherent receiver: balanced homodyne or heterodyne detection with finite
//! quantum efficiency, shot noise, thermal (NEP) noise and ADC quantization.
//!
//! Outputs stay in raw photocurrent units (A). The SNU scale comes from the
//! calibration sequence in [`crate::dsp::calibrate_snu`].

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Result};
use crate::signal::{photon_energy, OpticalField, RandomStream, ELEMENTARY_CHARGE};

/// LO photons per sample below which `ShotModel::Auto` uses photocounting.
pub const POISSON_AUTO_THRESHOLD: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    HomodyneQ,
    HomodyneP,
    Heterodyne,
}

impl Detection {
    pub fn is_heterodyne(self) -> bool {
        matches!(self, Detection::Heterodyne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotModel {
    Poisson,
    Gaussian,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FullScale {
    /// `±k·σ̂` of the pre-quantizer signal.
    Auto { sigmas: f64 },
    /// Fixed `±A` in raw units.
    Fixed { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcSpec {
    pub bits: u32,
    pub full_scale: FullScale,
}

impl AdcSpec {
    pub fn auto(bits: u32) -> Self {
        Self {
            bits,
            full_scale: FullScale::Auto { sigmas: 5.0 },
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.bits < 1 || self.bits > 52 {
            out.push(format!("receiver.adc_bits must be in 1..=52, got {}", self.bits));
        }
        match self.full_scale {
            FullScale::Auto { sigmas } if !(sigmas > 0.0) => {
                out.push(format!("receiver.adc_full_scale_sigma must be > 0, got {sigmas}"))
            }
            FullScale::Fixed { amplitude } if !(amplitude > 0.0) => {
                out.push(format!("receiver.adc_full_scale must be > 0, got {amplitude}"))
            }
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSpec {
    pub detection: Detection,
    /// Quantum efficiency η.
    pub eta: f64,
    /// Noise-equivalent power, W/√Hz.
    pub nep: f64,
    /// LO power at each balanced photodiode pair, W.
    pub lo_power: f64,
    pub adc: Option<AdcSpec>,
    pub shot_model: ShotModel,
}

impl ReceiverSpec {
    pub fn new(detection: Detection, eta: f64, nep: f64, lo_power: f64) -> Self {
        Self {
            detection,
            eta,
            nep,
            lo_power,
            adc: None,
            shot_model: ShotModel::Auto,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            out.push(format!("receiver.eta must be in (0, 1], got {}", self.eta));
        }
        if !(self.nep >= 0.0) {
            out.push(format!("receiver.nep must be >= 0, got {}", self.nep));
        }
        if !(self.lo_power > 0.0) {
            out.push(format!("receiver.lo_power must be > 0, got {}", self.lo_power));
        }
        if let Some(adc) = &self.adc {
            out.extend(adc.violations());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v.join("; ")))
        }
    }

    /// Photodiode responsivity `η·e/(h·f_c)`, A/W.
    pub fn responsivity(&self, carrier_frequency: f64) -> f64 {
        self.eta * ELEMENTARY_CHARGE / photon_energy(carrier_frequency)
    }

    /// Shot-noise current variance per sample, `2e·R·P_LO·(f_s/2)`, A².
    pub fn shot_variance(&self, sample_rate: f64, carrier_frequency: f64) -> f64 {
        ELEMENTARY_CHARGE * self.responsivity(carrier_frequency) * self.lo_power * sample_rate
    }

    /// Thermal current variance per sample, `(R·NEP)²·(f_s/2)`, A².
    pub fn thermal_variance(&self, sample_rate: f64, carrier_frequency: f64) -> f64 {
        let r = self.responsivity(carrier_frequency);
        (r * self.nep).powi(2) * sample_rate / 2.0
    }

    /// Electronic noise in SNU, `η·NEP²/(2·h·f_c·P_LO)`.
    pub fn electronic_noise_snu(&self, carrier_frequency: f64) -> f64 {
        self.eta * self.nep * self.nep / (2.0 * photon_energy(carrier_frequency) * self.lo_power)
    }

    pub fn lo_photons_per_sample(&self, sample_rate: f64, carrier_frequency: f64) -> f64 {
        self.lo_power / (photon_energy(carrier_frequency) * sample_rate)
    }

    pub fn uses_photocounting(&self, sample_rate: f64, carrier_frequency: f64) -> bool {
        match self.shot_model {
            ShotModel::Poisson => true,
            ShotModel::Gaussian => false,
            ShotModel::Auto => {
                self.lo_photons_per_sample(sample_rate, carrier_frequency) < POISSON_AUTO_THRESHOLD
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValues {
    /// One quadrature per sample (homodyne).
    Real(Vec<f64>),
    /// `q + i·p` arm currents per sample (heterodyne).
    Complex(Vec<Complex64>),
}

impl RawValues {
    pub fn len(&self) -> usize {
        match self {
            RawValues::Real(v) => v.len(),
            RawValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values as complex numbers; homodyne data sits in the real part.
    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            RawValues::Real(v) => v.iter().map(|x| Complex64::new(*x, 0.0)).collect(),
            RawValues::Complex(v) => v.clone(),
        }
    }

    /// Every real component (both arms for heterodyne).
    pub fn components(&self) -> Vec<f64> {
        match self {
            RawValues::Real(v) => v.clone(),
            RawValues::Complex(v) => v.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawMeasurement {
    pub values: RawValues,
    pub spec: ReceiverSpec,
    pub sample_rate: f64,
    pub carrier_frequency: f64,
}

/// Detects `field` against Bob's LO.
///
/// Shot and thermal noise draw from separate children of `rng`, so toggling
/// one leaves the other's realization unchanged.
pub fn coherent_detect(
    field: &OpticalField,
    spec: &ReceiverSpec,
    rng: &mut RandomStream,
) -> Result<RawMeasurement> {
    detect(field, spec, true, rng)
}

/// Detection with the LO optionally blocked (dark measurement).
pub(crate) fn detect(
    field: &OpticalField,
    spec: &ReceiverSpec,
    lo_on: bool,
    rng: &mut RandomStream,
) -> Result<RawMeasurement> {
    if field.is_empty() {
        return Err(invalid("cannot detect an empty field"));
    }
    spec.validate()?;
    let mut shot = rng.derive(1);
    let mut thermal = rng.derive(2);
    let arm = Arm::new(spec, field.sample_rate(), field.carrier_frequency(), lo_on);

    let values = match spec.detection {
        Detection::HomodyneQ | Detection::HomodyneP => {
            let phase = if spec.detection == Detection::HomodyneP {
                FRAC_PI_2
            } else {
                0.0
            };
            RawValues::Real(
                field
                    .samples()
                    .iter()
                    .map(|a| arm.measure(*a, phase, &mut shot, &mut thermal))
                    .collect(),
            )
        }
        Detection::Heterodyne => {
            let split = std::f64::consts::FRAC_1_SQRT_2;
            RawValues::Complex(
                field
                    .samples()
                    .iter()
                    .map(|a| {
                        let a = a * split;
                        let q = arm.measure(a, 0.0, &mut shot, &mut thermal);
                        let p = arm.measure(a, FRAC_PI_2, &mut shot, &mut thermal);
                        Complex64::new(q, p)
                    })
                    .collect(),
            )
        }
    };
    Ok(RawMeasurement {
        values,
        spec: spec.clone(),
        sample_rate: field.sample_rate(),
        carrier_frequency: field.carrier_frequency(),
    })
}

/// One balanced photodiode pair.
struct Arm {
    lo_amplitude: f64,
    responsivity: f64,
    photons_per_joule_sample: f64,
    charge_rate: f64,
    shot_sigma: f64,
    thermal_sigma: f64,
    photocount: bool,
}

impl Arm {
    fn new(spec: &ReceiverSpec, fs: f64, fc: f64, lo_on: bool) -> Self {
        let lo_power = if lo_on { spec.lo_power } else { 0.0 };
        Self {
            lo_amplitude: lo_power.sqrt(),
            responsivity: spec.responsivity(fc),
            // expected photoelectrons per sample = η·P/(h f_c f_s)
            photons_per_joule_sample: spec.eta / (photon_energy(fc) * fs),
            charge_rate: ELEMENTARY_CHARGE * fs,
            shot_sigma: if lo_on {
                spec.shot_variance(fs, fc).sqrt()
            } else {
                0.0
            },
            thermal_sigma: spec.thermal_variance(fs, fc).sqrt(),
            photocount: spec.uses_photocounting(fs, fc),
        }
    }

    fn measure(
        &self,
        a: Complex64,
        lo_phase: f64,
        shot: &mut RandomStream,
        thermal: &mut RandomStream,
    ) -> f64 {
        let lo = Complex64::from_polar(self.lo_amplitude, lo_phase);
        let signal = if self.photocount {
            let plus = (lo + a).norm_sqr() / 2.0 * self.photons_per_joule_sample;
            let minus = (lo - a).norm_sqr() / 2.0 * self.photons_per_joule_sample;
            (poisson(plus, shot) - poisson(minus, shot)) * self.charge_rate
        } else {
            let beat = (a * lo.conj()).re;
            2.0 * self.responsivity * beat + self.shot_sigma * shot.normal()
        };
        if self.thermal_sigma > 0.0 {
            signal + self.thermal_sigma * thermal.normal()
        } else {
            signal
        }
    }
}

fn poisson(mean: f64, rng: &mut RandomStream) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng)
}

/// Step of the quantizer for `values` under `adc`, or `None` if the input is
/// constant zero under auto-ranging.
pub fn adc_step(values: &[f64], adc: &AdcSpec) -> Option<f64> {
    let levels = 2f64.powi(adc.bits as i32);
    let full_scale = match adc.full_scale {
        FullScale::Fixed { amplitude } => amplitude,
        FullScale::Auto { sigmas } => {
            let n = values.len() as f64;
            if n == 0.0 {
                return None;
            }
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let sigma = var.sqrt();
            if sigma == 0.0 {
                return None;
            }
            sigmas * sigma
        }
    };
    Some(2.0 * full_scale / levels)
}

/// Mid-tread uniform quantizer with clipping to `±(A − Δ/2)`.
pub fn quantize_with_step(values: &[f64], step: f64, full_scale: f64) -> Vec<f64> {
    let limit = full_scale - step / 2.0;
    values
        .iter()
        .map(|x| ((x / step).round() * step).clamp(-limit, limit))
        .collect()
}

fn quantize_real(values: &[f64], adc: &AdcSpec) -> Vec<f64> {
    match adc_step(values, adc) {
        Some(step) => {
            let full_scale = step * 2f64.powi(adc.bits as i32) / 2.0;
            quantize_with_step(values, step, full_scale)
        }
        None => {
            log::warn!("ADC input has zero spread; passing samples through unquantized");
            values.to_vec()
        }
    }
}

/// Digitizes a raw measurement; each heterodyne arm has its own converter.
pub fn quantize(meas: &RawMeasurement, adc: &AdcSpec) -> RawMeasurement {
    let values = match &meas.values {
        RawValues::Real(v) => RawValues::Real(quantize_real(v, adc)),
        RawValues::Complex(v) => {
            let q: Vec<f64> = v.iter().map(|z| z.re).collect();
            let p: Vec<f64> = v.iter().map(|z| z.im).collect();
            let q = quantize_real(&q, adc);
            let p = quantize_real(&p, adc);
            RawValues::Complex(q.into_iter().zip(p).map(|(a, b)| Complex64::new(a, b)).collect())
        }
    };
    RawMeasurement {
        values,
        spec: meas.spec.clone(),
        sample_rate: meas.sample_rate,
        carrier_frequency: meas.carrier_frequency,
    }
}

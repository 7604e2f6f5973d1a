//! Receiver DSP: Gaussian matched filtering, symbol sampling, shot-noise
//! calibration and pilot-aided phase recovery.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::rx::{self, Detection, RawValues, ReceiverSpec};
use crate::signal::{OpticalField, RandomStream};

/// Symbols of guard padding at each end of a filtered frame.
pub const GUARD_SYMBOLS: usize = 8;
/// Length of the block used for the timing-offset search.
pub const TRAINING_SYMBOLS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// 3-dB bandwidth, Hz.
    pub f3db: f64,
}

impl FilterSpec {
    pub fn relative(relative_bandwidth: f64, symbol_rate: f64) -> Self {
        Self {
            f3db: relative_bandwidth * symbol_rate,
        }
    }

    pub fn relative_bandwidth(&self, symbol_rate: f64) -> f64 {
        self.f3db / symbol_rate
    }

    pub fn violations(&self) -> Vec<String> {
        if self.f3db > 0.0 {
            Vec::new()
        } else {
            vec![format!("dsp.filter bandwidth must be > 0, got {}", self.f3db)]
        }
    }

    /// `|H(f)| = exp(−(ln2/2)·(f/f3db)²)`.
    pub fn response(&self, f: f64) -> f64 {
        (-(LN_2 / 2.0) * (f / self.f3db).powi(2)).exp()
    }
}

/// Zero-phase Gaussian low-pass with cyclic boundaries.
pub fn gaussian_lowpass(values: &[Complex64], spec: &FilterSpec, sample_rate: f64) -> Result<Vec<Complex64>> {
    if let Some(v) = spec.violations().into_iter().next() {
        return Err(invalid(v));
    }
    let n = values.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = values.to_vec();
    fwd.process(&mut buf);
    let df = sample_rate / n as f64;
    let norm = 1.0 / n as f64;
    for (k, x) in buf.iter_mut().enumerate() {
        let bin = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        *x *= spec.response(bin * df) * norm;
    }
    inv.process(&mut buf);
    Ok(buf)
}

/// [`gaussian_lowpass`] on a real sequence.
pub fn gaussian_lowpass_real(values: &[f64], spec: &FilterSpec, sample_rate: f64) -> Result<Vec<f64>> {
    let z: Vec<Complex64> = values.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    Ok(gaussian_lowpass(&z, spec, sample_rate)?.into_iter().map(|z| z.re).collect())
}

/// Filters each measured component independently.
pub fn filter_raw(values: &RawValues, spec: &FilterSpec, sample_rate: f64) -> Result<RawValues> {
    Ok(match values {
        RawValues::Real(v) => RawValues::Real(gaussian_lowpass_real(v, spec, sample_rate)?),
        RawValues::Complex(v) => RawValues::Complex(gaussian_lowpass(v, spec, sample_rate)?),
    })
}

/// Sample `i·sps + timing_offset` of each complete symbol slot.
pub fn extract_symbols<T: Copy>(filtered: &[T], samples_per_symbol: usize, timing_offset: usize) -> Result<Vec<T>> {
    if samples_per_symbol == 0 || timing_offset >= samples_per_symbol {
        return Err(invalid(format!(
            "timing offset {timing_offset} must lie in [0, {samples_per_symbol})"
        )));
    }
    let rem = filtered.len() % samples_per_symbol;
    if rem != 0 {
        log::warn!("dropping {rem} trailing samples of a partial symbol");
    }
    Ok(filtered
        .chunks_exact(samples_per_symbol)
        .map(|c| c[timing_offset])
        .collect())
}

fn extract_raw(values: &RawValues, sps: usize, offset: usize) -> Result<RawValues> {
    Ok(match values {
        RawValues::Real(v) => RawValues::Real(extract_symbols(v, sps, offset)?),
        RawValues::Complex(v) => RawValues::Complex(extract_symbols(v, sps, offset)?),
    })
}

/// Regression slope of `bob` on `alice` pooled over the measured quadratures.
pub fn pooled_slope(alice: &[Complex64], bob: &RawValues, detection: Detection) -> f64 {
    let (mut sab, mut saa) = (0.0, 0.0);
    match bob {
        RawValues::Real(b) => {
            for (a, b) in alice.iter().zip(b) {
                let a = if detection == Detection::HomodyneP { a.im } else { a.re };
                sab += a * b;
                saa += a * a;
            }
        }
        RawValues::Complex(b) => {
            for (a, b) in alice.iter().zip(b) {
                sab += a.re * b.re + a.im * b.im;
                saa += a.norm_sqr();
            }
        }
    }
    sab / saa
}

/// Offset in `0..sps` maximizing the slope of the first `training.len()`
/// extracted symbols against `training`.
pub fn best_timing_offset(
    filtered: &RawValues,
    training: &[Complex64],
    samples_per_symbol: usize,
    detection: Detection,
) -> Result<usize> {
    let take = training.len() * samples_per_symbol;
    let head = match filtered {
        RawValues::Real(v) => RawValues::Real(v[..take.min(v.len())].to_vec()),
        RawValues::Complex(v) => RawValues::Complex(v[..take.min(v.len())].to_vec()),
    };
    let mut best = (0, f64::NEG_INFINITY);
    for offset in 0..samples_per_symbol {
        let s = pooled_slope(training, &extract_raw(&head, samples_per_symbol, offset)?, detection);
        if s > best.1 {
            best = (offset, s);
        }
    }
    Ok(best.0)
}

/// One transmitted symbol and Bob's calibrated measurement of it.
///
/// Homodyne measurements occupy the measured component of `bob` (real part for
/// q, imaginary part for p); the other component is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolRecord {
    pub alice: Complex64,
    pub bob: Complex64,
    pub index: usize,
}

/// Pairs sent symbols with calibrated measurements.
pub fn symbol_records(alice: &[Complex64], bob: &RawValues, detection: Detection) -> Vec<SymbolRecord> {
    let bob: Vec<Complex64> = match bob {
        RawValues::Real(v) => v
            .iter()
            .map(|x| match detection {
                Detection::HomodyneP => Complex64::new(0.0, *x),
                _ => Complex64::new(*x, 0.0),
            })
            .collect(),
        RawValues::Complex(v) => v.clone(),
    };
    alice
        .iter()
        .zip(bob)
        .enumerate()
        .map(|(index, (a, b))| SymbolRecord {
            alice: *a,
            bob: b,
            index,
        })
        .collect()
}

/// Receiver-side processing applied identically to data and calibration runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DspConfig {
    pub filter: Option<FilterSpec>,
    pub samples_per_symbol: usize,
    /// Sample rate of the detected waveform, Hz.
    pub sample_rate: f64,
    pub carrier_frequency: f64,
    /// Timing offset used for the calibration runs.
    pub timing_offset: usize,
    /// Symbols per calibration run.
    pub calibration_symbols: usize,
}

/// Conversion from raw photocurrent to shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnuScale {
    pub raw_variance_per_snu: f64,
    pub dark_variance_raw: f64,
    pub shot_variance_raw: f64,
}

impl SnuScale {
    /// Electronic noise in SNU.
    pub fn v_el(&self) -> f64 {
        self.dark_variance_raw / self.shot_variance_raw
    }

    pub fn amplitude_to_snu(&self, raw: f64) -> f64 {
        raw / self.raw_variance_per_snu.sqrt()
    }

    pub fn variance_to_snu(&self, raw: f64) -> f64 {
        raw / self.raw_variance_per_snu
    }

    pub fn apply(&self, values: &RawValues) -> RawValues {
        let k = 1.0 / self.raw_variance_per_snu.sqrt();
        match values {
            RawValues::Real(v) => RawValues::Real(v.iter().map(|x| x * k).collect()),
            RawValues::Complex(v) => RawValues::Complex(v.iter().map(|x| x * k).collect()),
        }
    }
}

/// Filters and samples a detected waveform at `offset`.
pub fn process(values: &RawValues, config: &DspConfig, offset: usize) -> Result<RawValues> {
    let filtered = match &config.filter {
        Some(f) => filter_raw(values, f, config.sample_rate)?,
        None => values.clone(),
    };
    extract_raw(&filtered, config.samples_per_symbol, offset)
}

/// Mean square of the processed symbol values of `runs` vacuum chunks.
fn vacuum_power(receiver: &ReceiverSpec, config: &DspConfig, lo_on: bool, rng: &RandomStream) -> Result<f64> {
    const CHUNK: usize = 1 << 16;
    let sps = config.samples_per_symbol;
    let mut remaining = config.calibration_symbols;
    let (mut sum, mut count) = (0.0, 0usize);
    let mut chunk_id = 0;
    while remaining > 0 {
        let n = remaining.min(CHUNK);
        let field = OpticalField::new(
            vec![Complex64::new(0.0, 0.0); n * sps],
            config.sample_rate,
            config.carrier_frequency,
        )?;
        let mut r = rng.derive(chunk_id);
        let meas = rx::detect(&field, receiver, lo_on, &mut r)?;
        let symbols = process(&meas.values, config, config.timing_offset)?;
        let comps = symbols.components();
        sum += comps.iter().map(|x| x * x).sum::<f64>();
        count += comps.len();
        remaining -= n;
        chunk_id += 1;
    }
    Ok(sum / count as f64)
}

/// Dark (LO off) and vacuum (LO on) runs through the detector and DSP chain.
///
/// The ADC is not part of this path, so quantization shows up in the
/// calibrated data as excess noise.
pub fn calibrate_snu(receiver: &ReceiverSpec, config: &DspConfig, rng: &RandomStream) -> Result<SnuScale> {
    receiver.validate()?;
    if config.calibration_symbols == 0 {
        return Err(invalid("calibration needs at least one symbol"));
    }
    let dark = vacuum_power(receiver, config, false, &rng.derive(1))?;
    let total = vacuum_power(receiver, config, true, &rng.derive(2))?;
    let shot = total - dark;
    if !(shot > 0.0) {
        return Err(Error::Calibration(format!(
            "shot-noise variance {shot} is not positive (dark {dark}, total {total})"
        )));
    }
    Ok(SnuScale {
        raw_variance_per_snu: shot,
        dark_variance_raw: dark,
        shot_variance_raw: shot,
    })
}

/// Nearest-multiple-of-2π continuation.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut prev: Option<f64> = None;
    for &p in phases {
        let v = match prev {
            None => p,
            Some(q) => p + 2.0 * PI * ((q - p) / (2.0 * PI)).round(),
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Rotates every quantum symbol by the conjugate of the phase interpolated
/// linearly between neighbouring pilots (held constant outside the first and
/// last pilot) and removes the pilot slots.
pub fn phase_recover(symbols: &[Complex64], pilot_positions: &[usize], pilot_amplitude: f64) -> Result<Vec<Complex64>> {
    if pilot_positions.len() < 2 {
        return Err(Error::InsufficientPilots {
            found: pilot_positions.len(),
        });
    }
    if !(pilot_amplitude > 0.0) {
        return Err(invalid(format!("pilot amplitude must be > 0, got {pilot_amplitude}")));
    }
    if let Some(&last) = pilot_positions.last() {
        if last >= symbols.len() {
            return Err(invalid(format!("pilot position {last} beyond {} symbols", symbols.len())));
        }
    }
    let raw: Vec<f64> = pilot_positions.iter().map(|&i| symbols[i].arg()).collect();
    let phases = unwrap_phases(&raw);

    let mut out = Vec::with_capacity(symbols.len() - pilot_positions.len());
    let mut seg = 0;
    let mut next_pilot = 0;
    for (i, s) in symbols.iter().enumerate() {
        if next_pilot < pilot_positions.len() && pilot_positions[next_pilot] == i {
            next_pilot += 1;
            continue;
        }
        while seg + 2 < pilot_positions.len() && pilot_positions[seg + 1] < i {
            seg += 1;
        }
        let (p0, p1) = (pilot_positions[seg], pilot_positions[seg + 1]);
        let phi = if i <= p0 {
            phases[seg]
        } else if i >= p1 {
            phases[seg + 1]
        } else {
            let w = (i - p0) as f64 / (p1 - p0) as f64;
            phases[seg] * (1.0 - w) + phases[seg + 1] * w
        };
        out.push(s * Complex64::from_polar(1.0, -phi));
    }
    Ok(out)
}

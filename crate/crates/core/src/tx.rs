//! Transmitter: Gaussian quadrature symbols, pulse shaping, laser impairments
//! and time-multiplexed pilot insertion.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::signal::{photon_energy, OpticalField, RandomStream};

/// Pulse shape of one symbol slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    /// One sample per symbol.
    SingleSample,
    /// `sin⁴(π t / T_s)` envelope over the slot.
    Sin4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpec {
    /// Per-quadrature variance of the Gaussian ensemble, SNU.
    pub v_mod: f64,
    /// Symbol rate, Bd.
    pub symbol_rate: f64,
    pub samples_per_symbol: usize,
    pub pulse_shape: PulseShape,
}

impl ModulationSpec {
    pub fn single_sample(v_mod: f64, symbol_rate: f64) -> Self {
        Self {
            v_mod,
            symbol_rate,
            samples_per_symbol: 1,
            pulse_shape: PulseShape::SingleSample,
        }
    }

    pub fn sin4(v_mod: f64, symbol_rate: f64, samples_per_symbol: usize) -> Self {
        Self {
            v_mod,
            symbol_rate,
            samples_per_symbol,
            pulse_shape: PulseShape::Sin4,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.v_mod >= 0.0) {
            out.push(format!("modulation.v_mod must be >= 0, got {}", self.v_mod));
        }
        if !(self.symbol_rate > 0.0) {
            out.push(format!("modulation.symbol_rate must be > 0, got {}", self.symbol_rate));
        }
        match self.pulse_shape {
            PulseShape::SingleSample if self.samples_per_symbol != 1 => out.push(format!(
                "single-sample pulses need samples_per_symbol = 1, got {}",
                self.samples_per_symbol
            )),
            PulseShape::Sin4 if self.samples_per_symbol < 2 => out.push(format!(
                "sin4 pulses need samples_per_symbol >= 2, got {}",
                self.samples_per_symbol
            )),
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserSpec {
    /// Optical power, W.
    pub power: f64,
    /// Lorentzian FWHM linewidth relative to Bob's LO, Hz.
    pub linewidth: f64,
    /// One-sided relative intensity noise density, 1/Hz.
    pub rin_psd: f64,
}

impl Default for LaserSpec {
    fn default() -> Self {
        Self {
            power: 1e-3,
            linewidth: 0.0,
            rin_psd: 0.0,
        }
    }
}

impl LaserSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.power > 0.0) {
            out.push(format!("laser.power must be > 0, got {}", self.power));
        }
        if !(self.linewidth >= 0.0) {
            out.push(format!("laser.linewidth must be >= 0, got {}", self.linewidth));
        }
        if !(self.rin_psd >= 0.0) {
            out.push(format!("laser.rin_psd must be >= 0, got {}", self.rin_psd));
        }
        out
    }
}

/// Time-multiplexed phase reference: one pilot slot every `pilot_every` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSpec {
    pub pilot_every: usize,
    /// Known q amplitude of each pilot (p = 0), SNU.
    pub pilot_amplitude: f64,
    pub enabled: bool,
}

impl Default for PilotSpec {
    fn default() -> Self {
        Self {
            pilot_every: 8,
            pilot_amplitude: 2000.0,
            enabled: false,
        }
    }
}

impl PilotSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.enabled && self.pilot_every < 2 {
            out.push(format!("pilot.every must be >= 2, got {}", self.pilot_every));
        }
        if !(self.pilot_amplitude > 0.0) {
            out.push(format!("pilot.amplitude must be > 0, got {}", self.pilot_amplitude));
        }
        out
    }
}

/// `n` complex symbols with i.i.d. `N(0, v_mod)` quadratures.
pub fn draw_symbols(n: usize, v_mod: f64, rng: &mut RandomStream) -> Result<Vec<Complex64>> {
    if !(v_mod >= 0.0) {
        return Err(invalid(format!("v_mod must be >= 0, got {v_mod}")));
    }
    let sigma = v_mod.sqrt();
    Ok((0..n)
        .map(|_| {
            let q = rng.normal();
            let p = rng.normal();
            Complex64::new(sigma * q, sigma * p)
        })
        .collect())
}

/// Samples of the unit-peak pulse over one slot.
pub fn pulse_template(shape: PulseShape, samples_per_symbol: usize) -> Vec<f64> {
    match shape {
        PulseShape::SingleSample => vec![1.0; samples_per_symbol],
        PulseShape::Sin4 => (0..samples_per_symbol)
            .map(|k| (PI * k as f64 / samples_per_symbol as f64).sin().powi(4))
            .collect(),
    }
}

/// Converts SNU symbols into an optical field.
///
/// The envelope scale is fixed by the photon-number convention: a symbol
/// `(q, p)` carries pulse energy `(q² + p²)/4 · h·f_c`.
pub fn shape_pulses(
    symbols: &[Complex64],
    spec: &ModulationSpec,
    carrier_frequency: f64,
) -> Result<OpticalField> {
    spec.validate()?;
    let sps = spec.samples_per_symbol;
    let fs = spec.sample_rate();
    let template = pulse_template(spec.pulse_shape, sps);
    let template_energy: f64 = template.iter().map(|x| x * x).sum();
    let scale = (photon_energy(carrier_frequency) * fs / (4.0 * template_energy)).sqrt();

    let mut samples = Vec::with_capacity(symbols.len() * sps);
    for s in symbols {
        let a = s * scale;
        samples.extend(template.iter().map(|w| a * *w));
    }
    OpticalField::new(samples, fs, carrier_frequency)
}

/// Multiplies each sample by `√(1 + δᵢ)` with `δᵢ ~ N(0, rin·f_s/2)`.
///
/// Draws with `1 + δ < 0` are clipped to zero power.
pub fn apply_rin(field: &OpticalField, rin_psd: f64, rng: &mut RandomStream) -> Result<OpticalField> {
    if !(rin_psd >= 0.0) {
        return Err(invalid(format!("RIN density must be >= 0, got {rin_psd}")));
    }
    let var = rin_psd * field.sample_rate() / 2.0;
    if var >= 0.5 {
        return Err(Error::OutOfModel(format!(
            "relative power variance {var} over the band exceeds the perturbative limit 0.5"
        )));
    }
    if var == 0.0 {
        return Ok(field.clone());
    }
    let sigma = var.sqrt();
    let samples = field
        .samples()
        .iter()
        .map(|a| a * (1.0 + sigma * rng.normal()).max(0.0).sqrt())
        .collect();
    Ok(field.with_samples(samples))
}

/// Applies a Wiener phase walk with per-sample increment variance `2π·Δν/f_s`.
pub fn apply_phase_diffusion(
    field: &OpticalField,
    linewidth: f64,
    rng: &mut RandomStream,
) -> Result<OpticalField> {
    if !(linewidth >= 0.0) {
        return Err(invalid(format!("linewidth must be >= 0, got {linewidth}")));
    }
    if linewidth == 0.0 {
        return Ok(field.clone());
    }
    let step = (2.0 * PI * linewidth / field.sample_rate()).sqrt();
    let mut phase = 0.0;
    let samples = field
        .samples()
        .iter()
        .map(|a| {
            phase += step * rng.normal();
            a * Complex64::from_polar(1.0, phase)
        })
        .collect();
    Ok(field.with_samples(samples))
}

/// Multiplies every sample by `exp(iφ)`.
pub fn rotate(field: &OpticalField, phase: f64) -> OpticalField {
    if phase == 0.0 {
        return field.clone();
    }
    let r = Complex64::from_polar(1.0, phase);
    field.with_samples(field.samples().iter().map(|a| a * r).collect())
}

/// Interleaves pilots `(pilot_amplitude, 0)` into every `pilot_every`-th slot,
/// starting at slot 0. Returns the multiplexed sequence and pilot positions.
pub fn multiplex_pilot(quantum: &[Complex64], pilot: &PilotSpec) -> (Vec<Complex64>, Vec<usize>) {
    if !pilot.enabled {
        return (quantum.to_vec(), Vec::new());
    }
    let k = pilot.pilot_every;
    let p = Complex64::new(pilot.pilot_amplitude, 0.0);
    let mut out = Vec::with_capacity(quantum.len() + quantum.len() / (k - 1) + 1);
    let mut positions = Vec::new();
    for chunk in quantum.chunks(k - 1) {
        positions.push(out.len());
        out.push(p);
        out.extend_from_slice(chunk);
    }
    (out, positions)
}

/// Removes the slots at `positions` (sorted ascending).
pub fn demultiplex<T: Copy>(sequence: &[T], positions: &[usize]) -> Vec<T> {
    let mut out = Vec::with_capacity(sequence.len().saturating_sub(positions.len()));
    let mut next = positions.iter().peekable();
    for (i, x) in sequence.iter().enumerate() {
        if next.peek() == Some(&&i) {
            next.next();
            continue;
        }
        out.push(*x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::DEFAULT_CARRIER_HZ;

    fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (mean, m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    }

    #[test]
    fn zero_variance_symbols_are_zero() {
        let mut rng = RandomStream::new(1, 1);
        let s = draw_symbols(100, 0.0, &mut rng).unwrap();
        assert!(s.iter().all(|z| z.re == 0.0 && z.im == 0.0));
        assert!(draw_symbols(1, -1.0, &mut rng).is_err());
    }

    #[test]
    fn symbol_statistics() {
        let n = 1 << 20;
        let mut rng = RandomStream::new(11, 1);
        let s = draw_symbols(n, 5.0, &mut rng).unwrap();
        let q: Vec<f64> = s.iter().map(|z| z.re).collect();
        let p: Vec<f64> = s.iter().map(|z| z.im).collect();
        let rel = 3.0 * (2.0 / n as f64).sqrt();
        for xs in [&q, &p] {
            let (mean, var, _, _) = moments(xs);
            assert!((var / 5.0 - 1.0).abs() < rel, "variance {var}");
            assert!(mean.abs() < 3.0 * (5.0 / n as f64).sqrt(), "mean {mean}");
        }
    }

    #[test]
    fn gaussian_shape_moments() {
        let n = 1_000_000;
        let mut rng = RandomStream::new(12, 1);
        let s = draw_symbols(n / 2, 2.0, &mut rng).unwrap();
        let xs: Vec<f64> = s.iter().flat_map(|z| [z.re, z.im]).collect();
        let (_, _, skew, kurt) = moments(&xs);
        assert!(skew.abs() < 3.0 * (6.0 / n as f64).sqrt(), "skewness {skew}");
        assert!(kurt.abs() < 3.0 * (24.0 / n as f64).sqrt(), "excess kurtosis {kurt}");
    }

    #[test]
    fn sin4_peak_at_center() {
        let spec = ModulationSpec::sin4(1.0, 250e6, 16);
        let f = shape_pulses(&[Complex64::new(1.0, 0.0)], &spec, DEFAULT_CARRIER_HZ).unwrap();
        assert_eq!(f.len(), 16);
        let mut best = 0;
        for (i, a) in f.samples().iter().enumerate() {
            if a.norm() > f.samples()[best].norm() {
                best = i;
            }
        }
        assert!(best == 7 || best == 8);
        assert_eq!(best, 8);
    }

    #[test]
    fn pulse_energy_is_one_photon() {
        // Oracle: numeric integration of |envelope|² dt.
        for spec in [
            ModulationSpec::sin4(1.0, 250e6, 16),
            ModulationSpec::sin4(1.0, 250e6, 5),
            ModulationSpec::single_sample(1.0, 1e9),
        ] {
            let f = shape_pulses(&[Complex64::new(2.0, 0.0)], &spec, DEFAULT_CARRIER_HZ).unwrap();
            let dt = 1.0 / f.sample_rate();
            let energy: f64 = f.samples().iter().map(|a| a.norm_sqr() * dt).sum();
            let photons = energy / photon_energy(DEFAULT_CARRIER_HZ);
            assert!((photons - 1.0).abs() < 1e-12, "{photons}");
        }
    }

    #[test]
    fn zero_symbols_zero_field() {
        let spec = ModulationSpec::sin4(1.0, 250e6, 16);
        let f = shape_pulses(&[Complex64::new(0.0, 0.0); 4], &spec, DEFAULT_CARRIER_HZ).unwrap();
        assert_eq!(f.len(), 64);
        assert_eq!(f.mean_power(), 0.0);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ModulationSpec::single_sample(1.0, 1e9);
        spec.samples_per_symbol = 4;
        assert!(spec.validate().is_err());
        let spec = ModulationSpec::sin4(1.0, 1e9, 1);
        assert!(spec.validate().is_err());
        assert!(shape_pulses(&[], &spec, DEFAULT_CARRIER_HZ).is_err());
        let spec = ModulationSpec::single_sample(-1.0, 1e9);
        assert!(spec.validate().is_err());
    }

    fn constant_field(n: usize, fs: f64) -> OpticalField {
        OpticalField::new(vec![Complex64::new(1e-3, 0.0); n], fs, DEFAULT_CARRIER_HZ).unwrap()
    }

    #[test]
    fn rin_statistics() {
        let n = 1_000_000;
        let fs = 1e9;
        let f = constant_field(n, fs);
        let p0 = f.mean_power();
        let rin = 2.0 * 1e-2 / fs;
        let mut rng = RandomStream::new(3, 2);
        let g = apply_rin(&f, rin, &mut rng).unwrap();
        let rel: Vec<f64> = g.samples().iter().map(|a| a.norm_sqr() / p0 - 1.0).collect();
        let (mean, var, _, _) = moments(&rel);
        assert!((var / 1e-2 - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{var}");
        assert!(mean.abs() < 3e-4, "{mean}");
    }

    #[test]
    fn rin_zero_and_guard() {
        let f = constant_field(10, 1e9);
        let mut rng = RandomStream::new(3, 2);
        assert_eq!(apply_rin(&f, 0.0, &mut rng).unwrap(), f);
        match apply_rin(&f, 1.0 / 1e9, &mut rng) {
            Err(Error::OutOfModel(_)) => {}
            other => panic!("expected out-of-model, got {other:?}"),
        }
    }

    #[test]
    fn phase_diffusion_preserves_magnitude() {
        let f = OpticalField::new(
            (0..1000).map(|k| Complex64::new(k as f64, 1.0)).collect(),
            1e9,
            DEFAULT_CARRIER_HZ,
        )
        .unwrap();
        let mut rng = RandomStream::new(4, 4);
        assert_eq!(apply_phase_diffusion(&f, 0.0, &mut rng).unwrap(), f);
        let g = apply_phase_diffusion(&f, 1e6, &mut rng).unwrap();
        for (a, b) in f.samples().iter().zip(g.samples()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn wiener_increment_variance() {
        // Δν = 100 kHz, τ = 1 µs → 2πΔντ ≈ 0.628 rad².
        let fs = 1e8;
        let lag = 100;
        let realizations = 10_000;
        let f = OpticalField::new(vec![Complex64::new(1.0, 0.0); lag + 1], fs, DEFAULT_CARRIER_HZ)
            .unwrap();
        let mut rng = RandomStream::new(21, 5);
        let mut sq = Vec::with_capacity(realizations);
        for _ in 0..realizations {
            let g = apply_phase_diffusion(&f, 1e5, &mut rng).unwrap();
            // exact phase difference: the walk is accumulated, so use the
            // product of consecutive ratios to avoid wrapping.
            let mut d = 0.0;
            for w in g.samples().windows(2) {
                d += (w[1] / w[0]).arg();
            }
            sq.push(d * d);
        }
        let var = sq.iter().sum::<f64>() / realizations as f64;
        let expected = 2.0 * PI * 1e5 * 1e-6;
        assert!((expected - 0.628).abs() < 1e-3);
        let tol = 3.0 * expected * (2.0 / realizations as f64).sqrt();
        assert!((var - expected).abs() < tol, "{var} vs {expected}");
    }

    #[test]
    fn pilot_multiplexing() {
        let q: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let off = PilotSpec::default();
        let (seq, pos) = multiplex_pilot(&q, &off);
        assert_eq!(seq, q);
        assert!(pos.is_empty());

        let spec = PilotSpec {
            pilot_every: 4,
            pilot_amplitude: 20.0,
            enabled: true,
        };
        let (seq, pos) = multiplex_pilot(&q, &spec);
        assert_eq!(seq.len(), 12);
        assert_eq!(pos, vec![0, 4, 8]);
        for &i in &pos {
            assert_eq!(seq[i], Complex64::new(20.0, 0.0));
        }
        assert_eq!(demultiplex(&seq, &pos), q);
    }

    proptest::proptest! {
        #[test]
        fn demultiplex_inverts_multiplex(n in 0usize..200, k in 2usize..12) {
            let q: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 0.5)).collect();
            let spec = PilotSpec { pilot_every: k, pilot_amplitude: 3.0, enabled: true };
            let (seq, pos) = multiplex_pilot(&q, &spec);
            proptest::prop_assert_eq!(demultiplex(&seq, &pos), q);
        }
    }
}

//! End-to-end execution of scenario points and sweeps.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;

use super::metrics::MetricsRow;
use super::scenario::{Scenario, BUILTIN_CODE};
use crate::dsp::{
    best_timing_offset, calibrate_snu, filter_raw, phase_recover, process, symbol_records, DspConfig, SnuScale,
    SymbolRecord, GUARD_SYMBOLS, TRAINING_SYMBOLS,
};
use crate::error::{Error, Result};
use crate::estimation::{estimate_params, EstimationResult};
use crate::postproc::{key_pipeline, KeyResult, LdpcCode, ReconConfig};
use crate::rx::{coherent_detect, quantize, RawValues};
use crate::security::{secret_key_fraction, KeyFraction, SecurityParams};
use crate::signal::RandomStream;
use crate::tx::{
    apply_phase_diffusion, apply_rin, demultiplex, draw_symbols, multiplex_pilot, rotate, shape_pulses,
};

const SHIPPED_CODE: &str = include_str!("../../codes/rate0.1_n10000.alist");

/// Pipeline stages, each with its own random substream.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stage {
    Symbols = 1,
    Excess = 2,
    Rin = 3,
    Phase = 4,
    Channel = 5,
    Detect = 6,
    Calibration = 7,
    Postproc = 8,
}

fn stream(seed: u64, point: u64, stage: Stage) -> RandomStream {
    RandomStream::new(seed, (point << 8) | stage as u64)
}

/// Everything computed for one scenario point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub row: MetricsRow,
    pub estimation: EstimationResult,
    pub scale: SnuScale,
    pub timing_offset: usize,
    pub key: Option<KeyResult>,
}

/// Loads the LDPC code configured for post-processing.
pub fn load_code(s: &Scenario) -> Result<LdpcCode> {
    if s.postproc.code == BUILTIN_CODE {
        LdpcCode::from_alist(SHIPPED_CODE)
    } else {
        LdpcCode::load(s.code_path())
    }
}

fn key_fraction_or_nan(p: &SecurityParams<f64>) -> KeyFraction<f64> {
    match secret_key_fraction(p) {
        Ok(k) => k,
        Err(e) => {
            log::warn!("key fraction not evaluable: {e}");
            KeyFraction {
                raw: f64::NAN,
                clamped: f64::NAN,
                i_ab: f64::NAN,
                chi_eb: f64::NAN,
            }
        }
    }
}

/// Transmitted slot sequence (quantum symbols with pilots), quantum symbols
/// as Alice records them, and pilot positions.
fn transmit_symbols(s: &Scenario, point: u64) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<usize>)> {
    let alice = draw_symbols(s.n_symbols, s.modulation.v_mod, &mut stream(s.seed, point, Stage::Symbols))?;
    let xi = s.injected_excess();
    let sent: Vec<Complex64> = if xi > 0.0 {
        let mut rng = stream(s.seed, point, Stage::Excess);
        let sigma = xi.sqrt();
        alice
            .iter()
            .map(|a| a + Complex64::new(sigma * rng.normal(), sigma * rng.normal()))
            .collect()
    } else {
        alice.clone()
    };
    let (slots, positions) = multiplex_pilot(&sent, &s.pilot);
    Ok((slots, alice, positions))
}

/// Runs one scenario point; `point` selects the random substreams.
pub fn run_point(s: &Scenario, point: u64) -> Result<PointResult> {
    s.validate()?;
    let start = Instant::now();
    let seed = s.seed;
    let sps = s.modulation.samples_per_symbol;
    let fs = s.sample_rate();
    let fc = s.carrier_frequency;
    let detection = s.receiver.detection;

    let (slots, alice, positions) = transmit_symbols(s, point)?;
    let n_slots = slots.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut framed = vec![zero; GUARD_SYMBOLS];
    framed.extend_from_slice(&slots);
    framed.extend(std::iter::repeat_n(zero, GUARD_SYMBOLS));

    let mut field = shape_pulses(&framed, &s.modulation, fc)?;
    field = rotate(&field, s.phase_offset);
    if s.toggles.phase_noise {
        field = apply_phase_diffusion(&field, s.laser.linewidth, &mut stream(seed, point, Stage::Phase))?;
    }
    if s.toggles.rin {
        field = apply_rin(&field, s.laser.rin_psd, &mut stream(seed, point, Stage::Rin))?;
    }
    let field = s
        .channel
        .spec(s.toggles.raman)
        .propagate(&field, &mut stream(seed, point, Stage::Channel))?;

    let receiver = s.effective_receiver();
    let mut meas = coherent_detect(&field, &receiver, &mut stream(seed, point, Stage::Detect))?;
    if let Some(adc) = &receiver.adc {
        meas = quantize(&meas, adc);
    }
    let filtered = match s.filter() {
        Some(f) => filter_raw(&meas.values, &f, fs)?,
        None => meas.values,
    };
    let guard = GUARD_SYMBOLS * sps;
    let body = match filtered {
        RawValues::Real(v) => RawValues::Real(v[guard..guard + n_slots * sps].to_vec()),
        RawValues::Complex(v) => RawValues::Complex(v[guard..guard + n_slots * sps].to_vec()),
    };
    let timing_offset = match s.dsp.timing_offset {
        Some(o) => o,
        None if sps > 1 => {
            let training = &slots[..TRAINING_SYMBOLS.min(n_slots)];
            best_timing_offset(&body, training, sps, detection)?
        }
        None => 0,
    };
    let mut config = DspConfig {
        filter: None,
        samples_per_symbol: sps,
        sample_rate: fs,
        carrier_frequency: fc,
        timing_offset,
        calibration_symbols: s.dsp.calibration_symbols,
    };
    let symbols = process(&body, &config, timing_offset)?;
    config.filter = s.filter();

    let mut cal_receiver = receiver.clone();
    cal_receiver.adc = None;
    let scale = calibrate_snu(&cal_receiver, &config, &stream(seed, point, Stage::Calibration))?;
    let bob = scale.apply(&symbols);

    let bob = if s.pilot.enabled {
        let RawValues::Complex(v) = bob else {
            return Err(Error::InvalidArgument("pilots require heterodyne detection".into()));
        };
        if s.dsp.phase_recovery {
            RawValues::Complex(phase_recover(&v, &positions, s.pilot.pilot_amplitude)?)
        } else {
            RawValues::Complex(demultiplex(&v, &positions))
        }
    } else {
        bob
    };
    let records: Vec<SymbolRecord> = symbol_records(&alice, &bob, detection);

    let v_el_measured = scale.v_el();
    let v_el_used = if s.trusted_v_el { v_el_measured } else { 0.0 };
    let estimation = estimate_params(&records, s.modulation.v_mod, detection, v_el_used)?;

    let mut model = s.model_params();
    model.beta = s.beta;
    model.nu_pe = s.nu_pe;
    let model_key = key_fraction_or_nan(&model);

    let mut est = model;
    est.t = (estimation.t_eff / s.receiver.eta).clamp(0.0, 1.0);
    est.xi = estimation.xi_hat.max(0.0);
    est.v_el = v_el_used;
    let mut est_key = key_fraction_or_nan(&est);

    let mut fer = f64::NAN;
    let mut beta_achieved = f64::NAN;
    let key = if s.postproc.enabled {
        let code = load_code(s)?;
        let mut cfg = ReconConfig::new(s.postproc.dimension, stream(seed, point, Stage::Postproc).next_u64());
        cfg.max_iters = s.postproc.max_iters;
        let k = key_pipeline(&records, detection, &code, &cfg, &est)?;
        fer = k.fer;
        beta_achieved = k.beta_achieved;
        est_key = k.key_fraction;
        Some(k)
    } else {
        None
    };

    let row = MetricsRow {
        scenario: s.name.clone(),
        param: String::new(),
        value: f64::NAN,
        t_eff: estimation.t_eff,
        t_eff_stderr: 2.0 * estimation.t_hat * estimation.stderr_t,
        xi_hat: estimation.xi_hat,
        xi_stderr: estimation.stderr_xi,
        v_el: v_el_measured,
        i_ab: est_key.i_ab,
        chi_eb: est_key.chi_eb,
        skf: est_key.raw,
        i_ab_model: model_key.i_ab,
        chi_eb_model: model_key.chi_eb,
        skf_model: model_key.raw,
        fer,
        beta_achieved,
        n_symbols: records.len(),
        runtime_s: start.elapsed().as_secs_f64(),
    };
    Ok(PointResult {
        row,
        estimation,
        scale,
        timing_offset,
        key,
    })
}

/// Runs one scenario point with substream 0.
pub fn run_scenario(s: &Scenario) -> Result<MetricsRow> {
    Ok(run_point(s, 0)?.row)
}

/// One row per value of `param`; point `i` uses substream `i`.
///
/// Points run in parallel on the current rayon pool; the output order and
/// contents do not depend on scheduling.
pub fn run_sweep(s: &Scenario, param: &str, values: &[f64]) -> Result<Vec<MetricsRow>> {
    Ok(sweep_points(s, param, values)?.into_iter().map(|p| p.row).collect())
}

/// [`run_sweep`] keeping the full per-point results.
pub fn sweep_points(s: &Scenario, param: &str, values: &[f64]) -> Result<Vec<PointResult>> {
    let mut base = s.clone();
    base.sweeps.clear();
    let scenarios = values
        .iter()
        .map(|&v| {
            let mut p = base.clone();
            p.set_numeric(param, v)?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    for (p, v) in scenarios.iter().zip(values) {
        violations.extend(p.violations().into_iter().map(|m| format!("{param} = {v}: {m}")));
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    scenarios
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (p, &v))| {
            let mut r = run_point(p, i as u64)?;
            r.row.param = param.to_string();
            r.row.value = v;
            Ok(r)
        })
        .collect()
}

/// Runs every `[sweep]` of the scenario in order, or the single point when
/// there are none.
pub fn run_all(s: &Scenario) -> Result<Vec<PointResult>> {
    if s.sweeps.is_empty() {
        return Ok(vec![run_point(s, 0)?]);
    }
    let mut out = Vec::new();
    for sw in &s.sweeps {
        let mut base = s.clone();
        base.sweeps.clear();
        for (k, v) in &sw.set {
            base.set(k, v)?;
        }
        base.name = format!("{}{}", s.name, sw.label());
        out.extend(sweep_points(&base, &sw.param, &sw.values)?);
    }
    Ok(out)
}

/// Writes `metrics.csv`, `scenario.resolved` and, when post-processing ran
/// on a single point with `write_key`, `key.bin`/`key.txt` into `dir`.
pub fn write_outputs(s: &Scenario, results: &[PointResult], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let rows: Vec<MetricsRow> = results.iter().map(|r| r.row.clone()).collect();
    super::metrics::emit_csv(&rows, dir.join("metrics.csv"))?;
    std::fs::write(dir.join("scenario.resolved"), super::resolved_echo(s))?;
    if s.postproc.write_key {
        if let [PointResult { key: Some(k), .. }] = results {
            crate::postproc::write_key_files(k, dir)?;
        }
    }
    Ok(())
}

//! Reverse reconciliation and privacy amplification over a block of records.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::ldpc::{bp_decode, ldpc_syndrome, LdpcCode, DEFAULT_MAX_ITERS};
use super::multidim::{apply, bits_to_symbol, compute_llrs, multidim_map, norm, DIMENSIONS};
use super::privacy::privacy_amplify;
use crate::dsp::SymbolRecord;
use crate::error::{invalid, Error, Result};
use crate::estimation::{estimate_params, quadrature_pairs, EstimationResult};
use crate::rx::Detection;
use crate::security::{secret_key_fraction, KeyFraction, SecurityParams};
use crate::signal::RandomStream;

/// Smallest noise variance used for LLRs, SNU.
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconConfig {
    pub dimension: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl ReconConfig {
    pub fn new(dimension: usize, seed: u64) -> Self {
        Self {
            dimension,
            max_iters: DEFAULT_MAX_ITERS,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyResult {
    pub n_symbols: usize,
    pub frames_total: usize,
    pub frames_failed: usize,
    /// Frames discarded for a zero-norm block.
    pub degenerate_frames: usize,
    /// Frames whose decoder converged to a word other than Bob's.
    pub undetected_errors: usize,
    pub fer: f64,
    /// Syndrome bits disclosed, `m` per frame.
    pub leaked_bits: usize,
    pub reconciled_bits: usize,
    pub final_key: Vec<u8>,
    /// Alice's and Bob's amplified keys agree bit for bit.
    pub keys_identical: bool,
    pub skf: f64,
    pub key_fraction: KeyFraction<f64>,
    pub beta_achieved: f64,
    /// Per-dimension signal-to-noise ratio of the reconciliation channel.
    pub snr: f64,
    pub noise_var: f64,
    pub mean_iterations: f64,
    pub estimation: EstimationResult,
    /// Security parameters the key fraction was evaluated with.
    pub params: SecurityParams<f64>,
}

struct FrameOutcome {
    bob: Vec<u8>,
    alice: Vec<u8>,
    converged: bool,
    degenerate: bool,
    iterations: usize,
}

fn reconcile_frame(
    code: &LdpcCode,
    alice: &[f64],
    bob: &[f64],
    slope: f64,
    noise_var: f64,
    cfg: &ReconConfig,
    frame: usize,
) -> Result<FrameOutcome> {
    let d = cfg.dimension;
    let mut rng = RandomStream::new(cfg.seed, frame as u64);
    let bits: Vec<u8> = (0..code.n()).map(|_| rng.random_range(0..2u8)).collect();
    let mut llrs = Vec::with_capacity(code.n());
    for ((x, y), b) in alice.chunks(d).zip(bob.chunks(d)).zip(bits.chunks(d)) {
        let u = bits_to_symbol::<f64>(b);
        let m = match multidim_map(y, &u, d) {
            Ok(m) => m,
            Err(Error::DegenerateBlock) => {
                return Ok(FrameOutcome {
                    bob: bits,
                    alice: Vec::new(),
                    converged: false,
                    degenerate: true,
                    iterations: 0,
                })
            }
            Err(e) => return Err(e),
        };
        let scaled: Vec<f64> = x.iter().map(|v| slope * v).collect();
        let v = apply(&m, &scaled)?;
        llrs.extend(compute_llrs(&v, norm(y), noise_var));
    }
    let syndrome = ldpc_syndrome(code, &bits)?;
    let out = bp_decode(code, &llrs, &syndrome, cfg.max_iters)?;
    Ok(FrameOutcome {
        converged: out.converged,
        alice: out.bits,
        bob: bits,
        degenerate: false,
        iterations: out.iterations,
    })
}

/// Runs parameter estimation, reverse reconciliation and privacy amplification.
///
/// The leading `nu_pe` fraction of `records` is disclosed for estimation; the
/// estimated `T` and `ξ` replace `params.t` and `params.xi` for the key
/// fraction, together with the measured FER and efficiency.
pub fn key_pipeline(
    records: &[SymbolRecord],
    detection: Detection,
    code: &LdpcCode,
    cfg: &ReconConfig,
    params: &SecurityParams<f64>,
) -> Result<KeyResult> {
    let d = cfg.dimension;
    if !DIMENSIONS.contains(&d) {
        return Err(invalid(format!("dimension {d} is not one of 1, 2, 4, 8")));
    }
    if code.n() % d != 0 {
        return Err(invalid(format!("code length {} is not a multiple of d = {d}", code.n())));
    }
    params.validate()?;
    let n_pe = (params.nu_pe * records.len() as f64).floor() as usize;
    let (pe, key_records) = records.split_at(n_pe);
    let estimation = estimate_params(pe, params.v_mod, detection, params.v_el)?;
    let gain = if detection.is_heterodyne() { 2f64.sqrt() } else { 1.0 };
    let slope = estimation.t_hat / gain;
    let noise_var = (slope * slope * estimation.xi_hat + 1.0 + params.v_el).max(NOISE_FLOOR);

    let pairs = quadrature_pairs(key_records, detection);
    let frames_total = pairs.len() / code.n();
    if frames_total == 0 {
        return Err(Error::InsufficientData {
            needed: code.n(),
            got: pairs.len(),
        });
    }
    let (alice, bob): (Vec<f64>, Vec<f64>) = pairs[..frames_total * code.n()].iter().copied().unzip();
    let outcomes = (0..frames_total)
        .into_par_iter()
        .map(|f| {
            let span = f * code.n()..(f + 1) * code.n();
            reconcile_frame(code, &alice[span.clone()], &bob[span], slope, noise_var, cfg, f)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bob_key = Vec::new();
    let mut alice_key = Vec::new();
    let (mut failed, mut degenerate, mut undetected, mut iters) = (0, 0, 0, 0usize);
    for o in &outcomes {
        iters += o.iterations;
        if o.degenerate {
            degenerate += 1;
            failed += 1;
        } else if !o.converged {
            failed += 1;
        } else if o.alice != o.bob {
            undetected += 1;
            failed += 1;
        } else {
            bob_key.extend_from_slice(&o.bob);
            alice_key.extend_from_slice(&o.alice);
        }
    }
    let fer = failed as f64 / frames_total as f64;
    let snr = slope * slope * params.v_mod / noise_var;
    let capacity = 0.5 * (1.0 + snr).log2();
    let beta_achieved = code.rate() / capacity;

    let mut eval = *params;
    eval.t = (estimation.t_eff / params.eta).clamp(0.0, 1.0);
    eval.xi = estimation.xi_hat.max(0.0);
    eval.beta = beta_achieved;
    eval.fer = fer;
    let key_fraction = secret_key_fraction(&eval)?;

    let target = (key_fraction.clamped * records.len() as f64).floor() as usize;
    let out_len = target.min(bob_key.len());
    let pa_seed = RandomStream::new(cfg.seed, u64::MAX).next_u64();
    let final_key = privacy_amplify(&bob_key, pa_seed, out_len)?;
    let keys_identical = privacy_amplify(&alice_key, pa_seed, out_len)? == final_key;
    if !keys_identical {
        log::error!("amplified keys differ after reconciliation");
    }
    Ok(KeyResult {
        n_symbols: records.len(),
        frames_total,
        frames_failed: failed,
        degenerate_frames: degenerate,
        undetected_errors: undetected,
        fer,
        leaked_bits: frames_total * code.m(),
        reconciled_bits: bob_key.len(),
        final_key,
        keys_identical,
        skf: key_fraction.raw,
        key_fraction,
        beta_achieved,
        snr,
        noise_var,
        mean_iterations: iters as f64 / frames_total as f64,
        estimation,
        params: eval,
    })
}

/// Packs bits MSB first.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i))))
        .collect()
}

pub fn key_summary(r: &KeyResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n_symbols = {}", r.n_symbols);
    let _ = writeln!(s, "frames_total = {}", r.frames_total);
    let _ = writeln!(s, "frames_failed = {}", r.frames_failed);
    let _ = writeln!(s, "degenerate_frames = {}", r.degenerate_frames);
    let _ = writeln!(s, "undetected_errors = {}", r.undetected_errors);
    let _ = writeln!(s, "fer = {}", r.fer);
    let _ = writeln!(s, "leaked_bits = {}", r.leaked_bits);
    let _ = writeln!(s, "reconciled_bits = {}", r.reconciled_bits);
    let _ = writeln!(s, "final_key_bits = {}", r.final_key.len());
    let _ = writeln!(s, "keys_identical = {}", r.keys_identical);
    let _ = writeln!(s, "snr = {}", r.snr);
    let _ = writeln!(s, "beta_achieved = {}", r.beta_achieved);
    let _ = writeln!(s, "i_ab = {}", r.key_fraction.i_ab);
    let _ = writeln!(s, "chi_eb = {}", r.key_fraction.chi_eb);
    let _ = writeln!(s, "skf = {}", r.skf);
    s
}

/// Writes `key.bin` (packed key) and `key.txt` (summary) into `dir`.
pub fn write_key_files(r: &KeyResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::write(dir.join("key.bin"), pack_bits(&r.final_key))?;
    std::fs::write(dir.join("key.txt"), key_summary(r))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::SecurityDetection;
    use num_complex::Complex64;

    fn small_code() -> LdpcCode {
        // regular (3, 6) structure on 96 variables
        let n = 96;
        let m = 48;
        let cols = (0..n)
            .map(|v| (0..3).map(|k| ((v * 5 + k * 17 + k * k * v) % m) as u32).collect::<Vec<_>>())
            .map(|mut c: Vec<u32>| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        LdpcCode::from_columns(m, cols).unwrap()
    }

    fn records(n: usize, noise: f64, seed: u64) -> Vec<SymbolRecord> {
        let mut rng = RandomStream::new(seed, 0);
        (0..n)
            .map(|index| {
                let a = Complex64::new(2.0 * rng.normal(), 2.0 * rng.normal());
                let b = a * 0.5 + Complex64::new(noise * rng.normal(), noise * rng.normal());
                SymbolRecord { alice: a, bob: b, index }
            })
            .collect()
    }

    #[test]
    fn low_noise_link_agrees() {
        let code = small_code();
        let recs = records(5000, 1e-3, 1);
        let mut p = SecurityParams::new(4.0, 0.5, 0.0, 1.0, 0.0, SecurityDetection::Heterodyne);
        p.nu_pe = 0.2;
        let r = key_pipeline(&recs, Detection::Heterodyne, &code, &ReconConfig::new(8, 3), &p).unwrap();
        assert_eq!(r.fer, 0.0);
        assert!(r.keys_identical);
        assert_eq!(r.frames_total, (4000 * 2) / 96);
        assert_eq!(r.leaked_bits, r.frames_total * 48);
        let kf = r.key_fraction;
        let expect = (1.0 - 0.2) * (1.0 - r.fer) * (r.beta_achieved * kf.i_ab - kf.chi_eb);
        assert_eq!(r.skf, expect);
    }

    #[test]
    fn rejects_bad_inputs() {
        let code = small_code();
        let p = SecurityParams::new(4.0, 0.5, 0.0, 1.0, 0.0, SecurityDetection::Heterodyne);
        let recs = records(2000, 0.1, 2);
        assert!(key_pipeline(&recs, Detection::Heterodyne, &code, &ReconConfig::new(3, 1), &p).is_err());
        let few = records(30, 0.1, 2);
        assert!(key_pipeline(&few, Detection::Heterodyne, &code, &ReconConfig::new(8, 1), &p).is_err());
    }

    #[test]
    fn packing() {
        assert_eq!(pack_bits(&[1, 0, 0, 0, 0, 0, 0, 1, 1]), vec![0x81, 0x80]);
    }
}

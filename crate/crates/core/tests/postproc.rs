use cvqkd::postproc::ldpc::{bp_decode, ldpc_syndrome, LdpcCode, DEFAULT_MAX_ITERS};
use cvqkd::postproc::multidim::{apply, bits_to_symbol, compute_llrs, multidim_map, norm};
use cvqkd::signal::RandomStream;
use proptest::prelude::*;
use rand::Rng;

const SHIPPED_CODE: &str = include_str!("../codes/rate0.1_n10000.alist");

/// Operating point of the shipped code on the BIAWGN channel (linear SNR).
const CHARACTERIZED_SNR: f64 = 0.1875;
const WATERFALL_FRAMES: usize = 50;

fn shipped() -> LdpcCode {
    LdpcCode::from_alist(SHIPPED_CODE).unwrap()
}

fn random_bits(rng: &mut RandomStream, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Dense parity-check rows read straight from the alist row section.
fn dense_rows(text: &str) -> Vec<Vec<u8>> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let dims: Vec<usize> = lines[0].split_whitespace().map(|t| t.parse().unwrap()).collect();
    let (n, m) = (dims[0], dims[1]);
    lines[4 + n..4 + n + m]
        .iter()
        .map(|l| {
            let mut row = vec![0u8; n];
            for j in l.split_whitespace().map(|t| t.parse::<usize>().unwrap()).filter(|&j| j > 0) {
                row[j - 1] = 1;
            }
            row
        })
        .collect()
}

#[test]
fn shipped_code_shape() {
    let code = shipped();
    assert_eq!((code.n(), code.m()), (10_000, 9_000));
    assert!((code.rate() - 0.1).abs() < 1e-12);
    assert!(code.columns().iter().all(|c| !c.is_empty()));
    assert_eq!(LdpcCode::from_alist(&code.to_alist()).unwrap(), code);
}

#[test]
fn syndrome_matches_dense_product() {
    let code = shipped();
    let rows = dense_rows(SHIPPED_CODE);
    let mut rng = RandomStream::new(31, 0);
    for _ in 0..3 {
        let x = random_bits(&mut rng, code.n());
        let dense: Vec<u8> = rows
            .iter()
            .map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum::<u8>() % 2)
            .collect();
        assert_eq!(ldpc_syndrome(&code, &x).unwrap(), dense);
    }
}

#[test]
fn syndrome_is_linear() {
    let code = shipped();
    let mut rng = RandomStream::new(32, 0);
    assert!(ldpc_syndrome(&code, &vec![0; code.n()]).unwrap().iter().all(|&b| b == 0));
    for _ in 0..10 {
        let x = random_bits(&mut rng, code.n());
        let y = random_bits(&mut rng, code.n());
        let xy: Vec<u8> = x.iter().zip(&y).map(|(a, b)| a ^ b).collect();
        let sx = ldpc_syndrome(&code, &x).unwrap();
        let sy = ldpc_syndrome(&code, &y).unwrap();
        let sum: Vec<u8> = sx.iter().zip(&sy).map(|(a, b)| a ^ b).collect();
        assert_eq!(ldpc_syndrome(&code, &xy).unwrap(), sum);
    }
}

fn biawgn_frame(code: &LdpcCode, snr: f64, rng: &mut RandomStream) -> (Vec<u8>, Vec<f64>) {
    let sigma = (1.0 / snr).sqrt();
    let bits = random_bits(rng, code.n());
    let llrs = bits
        .iter()
        .map(|&b| 2.0 * snr * (if b == 0 { 1.0 } else { -1.0 } + sigma * rng.normal()))
        .collect();
    (bits, llrs)
}

fn frame_error_rate(code: &LdpcCode, snr: f64, frames: usize, seed: u64) -> f64 {
    let failed = (0..frames)
        .filter(|&f| {
            let mut rng = RandomStream::new(seed, f as u64);
            let (bits, llrs) = biawgn_frame(code, snr, &mut rng);
            let s = ldpc_syndrome(code, &bits).unwrap();
            let out = bp_decode(code, &llrs, &s, DEFAULT_MAX_ITERS).unwrap();
            !out.converged || out.bits != bits
        })
        .count();
    failed as f64 / frames as f64
}

#[test]
fn shipped_code_waterfall() {
    let code = shipped();
    let at = frame_error_rate(&code, CHARACTERIZED_SNR, WATERFALL_FRAMES, 41);
    let below = frame_error_rate(&code, CHARACTERIZED_SNR * 10f64.powf(-0.1), WATERFALL_FRAMES, 42);
    println!("FER {at} at SNR {CHARACTERIZED_SNR}, {below} one dB below");
    assert!(at <= 0.1, "FER {at} at the characterized SNR");
    assert!(below >= 0.9, "FER {below} one dB below");
}

#[test]
fn high_confidence_flip_still_decodes() {
    let code = shipped();
    let mut rng = RandomStream::new(43, 0);
    let (bits, mut llrs) = biawgn_frame(&code, 0.3, &mut rng);
    let s = ldpc_syndrome(&code, &bits).unwrap();
    let clean = bp_decode(&code, &llrs, &s, DEFAULT_MAX_ITERS).unwrap();
    assert!(clean.converged && clean.bits == bits);
    let (k, _) = llrs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap();
    llrs[k] = -llrs[k];
    let flipped = bp_decode(&code, &llrs, &s, DEFAULT_MAX_ITERS).unwrap();
    assert!(flipped.converged);
    assert_eq!(flipped.bits, clean.bits);
}

#[test]
fn check_order_does_not_change_decoding() {
    let code = shipped();
    let mut rng = RandomStream::new(44, 0);
    let mut order: Vec<usize> = (0..code.m()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let permuted = code.permute_checks(&order).unwrap();
    for snr in [0.3, 0.17] {
        let (bits, llrs) = biawgn_frame(&code, snr, &mut rng);
        let s = ldpc_syndrome(&code, &bits).unwrap();
        let s_perm: Vec<u8> = order.iter().map(|&o| s[o]).collect();
        assert_eq!(ldpc_syndrome(&permuted, &bits).unwrap(), s_perm);
        let a = bp_decode(&code, &llrs, &s, 60).unwrap();
        let b = bp_decode(&permuted, &llrs, &s_perm, 60).unwrap();
        assert_eq!(a, b);
    }
}

/// Blocks of the reconciliation channel `y = s·x + z` with unit-variance `z`.
struct Blocks {
    x: Vec<f64>,
    y: Vec<f64>,
    bits: Vec<u8>,
}

fn blocks(n_blocks: usize, d: usize, v_mod: f64, s: f64, seed: u64) -> Blocks {
    let mut rng = RandomStream::new(seed, 0);
    let x: Vec<f64> = (0..n_blocks * d).map(|_| v_mod.sqrt() * rng.normal()).collect();
    let y = x.iter().map(|xi| s * xi + rng.normal()).collect();
    let bits = random_bits(&mut rng, n_blocks * d);
    Blocks { x, y, bits }
}

#[test]
fn octonion_channel_keeps_quadrature_snr() {
    let (d, v_mod, s) = (8, 1.35, 0.35);
    let b = blocks(100_000, d, v_mod, s, 51);
    let (mut svu, mut suu, mut syy) = (0.0, 0.0, 0.0);
    let mut pairs = Vec::with_capacity(b.x.len());
    for ((x, y), bits) in b.x.chunks(d).zip(b.y.chunks(d)).zip(b.bits.chunks(d)) {
        let u = bits_to_symbol::<f64>(bits);
        let m = multidim_map(y, &u, d).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| s * v).collect();
        let v = apply(&m, &scaled).unwrap();
        let ny = norm(y);
        for (vi, ui) in v.iter().zip(&u) {
            let a = ny * ui;
            svu += vi * a;
            suu += a * a;
            pairs.push((*vi, a));
        }
        syy += ny * ny;
    }
    let k = svu / suu;
    let noise = pairs.iter().map(|(v, a)| (v - k * a).powi(2)).sum::<f64>() / pairs.len() as f64;
    let signal = k * k * syy / pairs.len() as f64;
    let empirical = signal / noise;
    let quadrature = s * s * v_mod;
    assert!(
        (empirical / quadrature - 1.0).abs() < 0.05,
        "empirical {empirical}, quadrature {quadrature}"
    );
}

#[test]
fn llrs_are_calibrated() {
    // quadrature SNR 0.15: s = 1, V_mod = 0.15, unit noise
    let d = 8;
    let b = blocks(100_000, d, 0.15, 1.0, 52);
    let bins = 20;
    let (lo, hi) = (-1.0, 1.0);
    let mut zeros = vec![0usize; bins];
    let mut counts = vec![0usize; bins];
    let mut centre = vec![0.0; bins];
    for ((x, y), bits) in b.x.chunks(d).zip(b.y.chunks(d)).zip(b.bits.chunks(d)) {
        let u = bits_to_symbol::<f64>(bits);
        let m = multidim_map(y, &u, d).unwrap();
        let v = apply(&m, x).unwrap();
        for (l, &bit) in compute_llrs(&v, norm(y), 1.0).iter().zip(bits) {
            if *l >= lo && *l < hi {
                let k = ((l - lo) / (hi - lo) * bins as f64) as usize;
                counts[k] += 1;
                centre[k] += l;
                zeros[k] += usize::from(bit == 0);
            }
        }
    }
    let mut checked = 0;
    for k in 0..bins {
        if counts[k] < 2000 {
            continue;
        }
        let l = centre[k] / counts[k] as f64;
        let logistic = 1.0 / (1.0 + (-l).exp());
        let empirical = zeros[k] as f64 / counts[k] as f64;
        assert!((empirical - logistic).abs() < 0.05 * logistic, "bin {k}: {empirical} vs {logistic}");
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn mapping_message_independent_of_bits() {
    // M = u·conj(ŷ) is uniform on the sphere whatever u is.
    let d = 8;
    let b = blocks(50_000, d, 1.35, 0.35, 53);
    let mut by_bit = [(0.0, 0.0, 0usize), (0.0, 0.0, 0usize)];
    for (y, bits) in b.y.chunks(d).zip(b.bits.chunks(d)) {
        let u = bits_to_symbol::<f64>(bits);
        let m = multidim_map(y, &u, d).unwrap();
        let e = &mut by_bit[bits[0] as usize];
        e.0 += m[0];
        e.1 += m[0] * m[0];
        e.2 += 1;
    }
    for (sum, sq, n) in by_bit {
        let n = n as f64;
        let mean = sum / n;
        let var = sq / n - mean * mean;
        assert!(mean.abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
        assert!((var - 1.0 / d as f64).abs() < 0.01, "var {var}");
    }
}

proptest! {
    #[test]
    fn mapping_is_isometric(
        y in proptest::collection::vec(-5.0f64..5.0, 8),
        z in proptest::collection::vec(-5.0f64..5.0, 8),
        bits in proptest::collection::vec(0u8..2, 8),
        dim in prop_oneof![Just(1usize), Just(2), Just(4), Just(8)],
    ) {
        let y = &y[..dim];
        prop_assume!(norm(y) > 1e-6);
        let u = bits_to_symbol::<f64>(&bits[..dim]);
        let m = multidim_map(y, &u, dim).unwrap();
        let w = apply(&m, &z[..dim]).unwrap();
        prop_assert!((norm(&w) - norm(&z[..dim])).abs() < 1e-10 * (1.0 + norm(&z[..dim])));
        let unit: Vec<f64> = y.iter().map(|v| v / norm(y)).collect();
        for (a, b) in apply(&m, &unit).unwrap().iter().zip(&u) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn llrs_are_odd(v in proptest::collection::vec(-10.0f64..10.0, 8), ny in 0.1f64..10.0, nv in 0.1f64..5.0) {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        for (a, b) in compute_llrs(&v, ny, nv).iter().zip(compute_llrs(&neg, ny, nv)) {
            prop_assert_eq!(*a, -b);
        }
    }
}

//! Toeplitz-matrix universal hashing over GF(2).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

/// Diagonal bits `r` (length `n + m − 1`) of the Toeplitz matrix `T[i][j] = r[i − j + n − 1]`.
pub fn toeplitz_diagonals(seed: u64, n: usize, m: usize) -> Vec<u8> {
    let len = (n + m).saturating_sub(1);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word = rng.next_u64();
        out.extend((0..64).map(|k| ((word >> k) & 1) as u8).take(len - out.len()));
    }
    out
}

/// Compresses `bits` to `out_len` bits with a seeded Toeplitz matrix.
pub fn privacy_amplify(bits: &[u8], seed: u64, out_len: usize) -> Result<Vec<u8>> {
    let n = bits.len();
    if out_len > n {
        return Err(invalid(format!("output length {out_len} exceeds input length {n}")));
    }
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let r = toeplitz_diagonals(seed, n, out_len);
    // y_i = Σ_j r[i − j + n − 1]·x_j is entry i + n − 1 of the linear convolution r * x.
    let size = (r.len() + n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let lift = |v: &[u8]| {
        let mut buf: Vec<Complex64> = v.iter().map(|&b| Complex64::new(f64::from(b & 1), 0.0)).collect();
        buf.resize(size, Complex64::new(0.0, 0.0));
        buf
    };
    let mut a = lift(&r);
    let mut b = lift(bits);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = size as f64;
    Ok((0..out_len)
        .map(|i| ((a[i + n - 1].re / scale).round() as u64 % 2) as u8)
        .collect())
}

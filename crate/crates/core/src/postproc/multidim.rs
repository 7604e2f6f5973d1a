//! Multidimensional reconciliation maps over the normed division algebras
//! (reals, complex numbers, quaternions, octonions).

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const DIMENSIONS: [usize; 4] = [1, 2, 4, 8];

fn check_dim(d: usize) -> Result<()> {
    if DIMENSIONS.contains(&d) {
        Ok(())
    } else {
        Err(invalid(format!("dimension {d} is not one of 1, 2, 4, 8")))
    }
}

/// Cayley–Dickson conjugate.
pub fn conj<R: Real>(x: &[R]) -> Vec<R> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { v } else { -v })
        .collect()
}

/// Cayley–Dickson product, `(a, b)(c, d) = (ac − d*b, da + bc*)`.
pub fn mul<R: Real>(x: &[R], y: &[R]) -> Vec<R> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = mul(a, c);
    let db = mul(&conj(d), b);
    let da = mul(d, a);
    let bc = mul(b, &conj(c));
    ac.iter()
        .zip(&db)
        .map(|(&p, &q)| p - q)
        .chain(da.iter().zip(&bc).map(|(&p, &q)| p + q))
        .collect()
}

pub fn norm<R: Real>(x: &[R]) -> R {
    x.iter().fold(R::zero(), |acc, &v| acc + v * v).sqrt()
}

/// Public mapping message `M = u ∘ conj(y/‖y‖)`, which satisfies `M ∘ (y/‖y‖) = u`.
pub fn multidim_map<R: Real>(y: &[R], u: &[R], d: usize) -> Result<Vec<R>> {
    check_dim(d)?;
    if y.len() != d || u.len() != d {
        return Err(invalid(format!("blocks of length {}/{} for d = {d}", y.len(), u.len())));
    }
    let ny = norm(y);
    if !(ny > R::zero()) {
        return Err(Error::DegenerateBlock);
    }
    let unit: Vec<R> = y.iter().map(|&v| v / ny).collect();
    Ok(mul(u, &conj(&unit)))
}

/// Applies a mapping message to a block, `M ∘ x`.
pub fn apply<R: Real>(m: &[R], x: &[R]) -> Result<Vec<R>> {
    if m.len() != x.len() {
        return Err(invalid("mapping message and block differ in length"));
    }
    check_dim(m.len())?;
    Ok(mul(m, x))
}

/// BIAWGN-equivalent LLRs of the bits behind `u` (positive means bit 0).
///
/// `v` is Alice's scaled data `M ∘ (s·x)` and `noise_var` the per-quadrature
/// noise about Bob's fitted line.
pub fn compute_llrs<R: Real>(v: &[R], y_norm: R, noise_var: R) -> Vec<R> {
    let two = R::lit(2.0);
    let root_d = R::from_usize(v.len()).unwrap_or_else(R::one).sqrt();
    v.iter().map(|&vi| two * vi * y_norm / (root_d * noise_var)).collect()
}

/// Bit `b` as the symbol `(1 − 2b)/√d`.
pub fn bits_to_symbol<R: Real>(bits: &[u8]) -> Vec<R> {
    let root_d = R::from_usize(bits.len()).unwrap_or_else(R::one).sqrt();
    bits.iter()
        .map(|&b| if b & 1 == 0 { R::one() / root_d } else { -R::one() / root_d })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::RandomStream;
    use num_complex::Complex64;
    use rand::Rng;

    fn random_block(rng: &mut RandomStream, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.normal()).collect()
    }

    fn random_bits(rng: &mut RandomStream, d: usize) -> Vec<u8> {
        (0..d).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn reproduces_u_and_is_isometric() {
        let mut rng = RandomStream::new(11, 0);
        for d in DIMENSIONS {
            let mut worst: f64 = 0.0;
            for _ in 0..100_000 / d {
                let y = random_block(&mut rng, d);
                let u = bits_to_symbol::<f64>(&random_bits(&mut rng, d));
                let m = multidim_map(&y, &u, d).unwrap();
                let ny = norm(&y);
                let unit: Vec<f64> = y.iter().map(|v| v / ny).collect();
                let back = apply(&m, &unit).unwrap();
                for (a, b) in back.iter().zip(&u) {
                    worst = worst.max((a - b).abs());
                }
                let z = random_block(&mut rng, d);
                let nz = norm(&z);
                worst = worst.max((norm(&apply(&m, &z).unwrap()) - nz).abs() / nz);
            }
            assert!(worst < 1e-10, "d = {d}: {worst}");
        }
    }

    #[test]
    fn d1_flips_sign() {
        let m = multidim_map(&[-3.0], &[1.0], 1).unwrap();
        assert_eq!(apply(&m, &[-1.0]).unwrap(), vec![1.0]);
        assert_eq!(m, vec![-1.0]);
    }

    #[test]
    fn d2_is_complex_multiplication() {
        let mut rng = RandomStream::new(12, 0);
        for _ in 0..1000 {
            let (a, b) = (random_block(&mut rng, 2), random_block(&mut rng, 2));
            let p = mul(&a, &b);
            let q = Complex64::new(a[0], a[1]) * Complex64::new(b[0], b[1]);
            assert!((p[0] - q.re).abs() < 1e-12 && (p[1] - q.im).abs() < 1e-12);
        }
    }

    #[test]
    fn quaternion_units() {
        let e = |k: usize| (0..4).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        // i·j = k, j·i = −k, i·i = −1
        assert_eq!(mul(&e(1), &e(2)), e(3));
        assert_eq!(mul(&e(2), &e(1)), e(3).iter().map(|v| -v).collect::<Vec<_>>());
        assert_eq!(mul(&e(1), &e(1)), vec![-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn degenerate_and_bad_dims() {
        assert!(matches!(multidim_map(&[0.0; 4], &[0.5; 4], 4), Err(Error::DegenerateBlock)));
        assert!(multidim_map(&[1.0; 3], &[1.0; 3], 3).is_err());
        assert!(multidim_map(&[1.0; 4], &[1.0; 2], 4).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let y = [0.3f32, -1.2, 0.8, 2.0, -0.1, 0.4, 0.9, -0.7];
        let u = bits_to_symbol::<f32>(&[0, 1, 1, 0, 1, 0, 0, 1]);
        let m = multidim_map(&y, &u, 8).unwrap();
        let ny = norm(&y);
        let unit: Vec<f32> = y.iter().map(|v| v / ny).collect();
        for (a, b) in apply(&m, &unit).unwrap().iter().zip(&u) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn llr_signs_and_symmetry() {
        let u = bits_to_symbol::<f64>(&[0, 1, 0, 0]);
        let llr = compute_llrs(&u, 3.0, 0.01);
        assert!(llr[0] > 0.0 && llr[1] < 0.0);
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        for (a, b) in compute_llrs(&neg, 3.0, 0.01).iter().zip(&llr) {
            assert_eq!(*a, -b);
        }
    }
}

//! Frame error rate of an alist code on the binary-input AWGN channel in the
//! syndrome formulation.
//!
//! ```text
//! cargo run --release -p cvqkd --example code_fer -- CODE.alist FRAMES[:MAX_ITERS] SNR [SNR ...]
//! ```
//!
//! SNR values are linear (signal power over noise variance per bit).

use cvqkd::postproc::ldpc::{bp_decode, ldpc_syndrome, LdpcCode, DEFAULT_MAX_ITERS};
use cvqkd::signal::RandomStream;
use rand::Rng;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = LdpcCode::load(&args[0]).expect("load code");
    let (frames, max_iters) = match args[1].split_once(':') {
        Some((f, i)) => (f.parse().expect("frame count"), i.parse().expect("iteration limit")),
        None => (args[1].parse().expect("frame count"), DEFAULT_MAX_ITERS),
    };
    for snr in args[2..].iter().map(|s| s.parse::<f64>().expect("snr")) {
        let sigma = (1.0 / snr).sqrt();
        let (mut failed, mut iters) = (0, 0);
        for f in 0..frames {
            let mut rng = RandomStream::new(99, f as u64);
            let bits: Vec<u8> = (0..code.n()).map(|_| rng.random_range(0..2u8)).collect();
            let llrs: Vec<f64> = bits
                .iter()
                .map(|&b| {
                    let y = if b == 0 { 1.0 } else { -1.0 } + sigma * rng.normal();
                    2.0 * y * snr
                })
                .collect();
            let s = ldpc_syndrome(&code, &bits).unwrap();
            let out = bp_decode(&code, &llrs, &s, max_iters).unwrap();
            iters += out.iterations;
            if !out.converged || out.bits != bits {
                failed += 1;
            }
        }
        println!(
            "snr = {snr:.4} ({:.3} dB) fer = {:.3} mean_iters = {:.1}",
            10.0 * snr.log10(),
            failed as f64 / frames as f64,
            iters as f64 / frames as f64
        );
    }
}

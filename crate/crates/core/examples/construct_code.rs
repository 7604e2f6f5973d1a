//! Builds a rate-0.1 multi-edge-type code by progressive edge growth and
//! writes it in alist format.
//!
//! ```text
//! cargo run --release -p cvqkd --example construct_code -- OUT.alist [n core type1 d1mix d2mix seed]
//! ```
//!
//! Degree mixes are written `deg:frac,deg:frac`. Without arguments after the
//! output path, the structure of the shipped `codes/rate0.1_n10000.alist` is used.

use cvqkd::postproc::peg::{peg_construct, MetStructure};

fn mix(s: &str) -> Vec<(usize, f64)> {
    s.split(',')
        .map(|p| {
            let (d, f) = p.split_once(':').expect("deg:frac");
            (d.parse().expect("degree"), f.parse().expect("fraction"))
        })
        .collect()
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().expect("output path");
    let get = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let s = MetStructure {
        n: get(1, "10000").parse().expect("n"),
        core: get(2, "1250").parse().expect("core"),
        type1_checks: get(3, "250").parse().expect("type1"),
        d1: mix(&get(4, "2:0.5,3:0.5")),
        d2: mix(&get(5, "18:0.8,32:0.2")),
    };
    let seed: u64 = get(6, "1").parse().expect("seed");
    let code = peg_construct(&s, seed).unwrap_or_else(|e| panic!("{e}"));
    code.save(out).expect("write alist");
    println!("n = {} m = {} rate = {} edges = {}", code.n(), code.m(), code.rate(), code.edges());
}

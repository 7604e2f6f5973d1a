//! Progressive edge-growth construction of low-rate multi-edge-type codes.
//!
//! The structure has three node groups:
//! * core variables, each with `d1` edges into the type-1 checks and
//!   `d2` edges into the type-2 checks;
//! * degree-one variables, each attached to its own type-2 check;
//! * type-1 checks, shared by the core variables only.
//!
//! With `k` core variables out of `n`, there are `n − k` type-2 checks and
//! `m1` type-1 checks, so the rate is `(k − m1)/n`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ldpc::LdpcCode;
use crate::error::{invalid, Result};
use crate::signal::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct MetStructure {
    pub n: usize,
    /// Number of core variables.
    pub core: usize,
    /// Number of type-1 checks.
    pub type1_checks: usize,
    /// Type-1 degree mix of the core variables as `(degree, fraction)`.
    pub d1: Vec<(usize, f64)>,
    /// Type-2 degree mix of the core variables as `(degree, fraction)`.
    pub d2: Vec<(usize, f64)>,
}

impl MetStructure {
    pub fn rate(&self) -> f64 {
        (self.core as f64 - self.type1_checks as f64) / self.n as f64
    }

    pub fn checks(&self) -> usize {
        self.n - self.core + self.type1_checks
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.core == 0 || self.core >= self.n {
            v.push(format!("core variable count {} must be in (0, n = {})", self.core, self.n));
        }
        if self.type1_checks == 0 || self.type1_checks >= self.core {
            v.push(format!(
                "type-1 check count {} must be in (0, core = {})",
                self.type1_checks, self.core
            ));
        }
        for (name, mix, limit) in [
            ("d1", &self.d1, self.type1_checks),
            ("d2", &self.d2, self.n.saturating_sub(self.core)),
        ] {
            let total: f64 = mix.iter().map(|(_, f)| f).sum();
            if mix.is_empty() || (total - 1.0).abs() > 1e-9 || mix.iter().any(|&(_, f)| f < 0.0) {
                v.push(format!("{name} fractions must be non-negative and sum to 1"));
            }
            if mix.iter().any(|&(d, _)| d == 0 || d > limit) {
                v.push(format!("{name} degrees must be in 1..={limit}"));
            }
        }
        v
    }

    /// Per-core-variable degree lists realizing the mixes as closely as possible.
    fn degree_sequence(&self, mix: &[(usize, f64)]) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.core);
        let mut acc = 0.0;
        for (i, &(d, f)) in mix.iter().enumerate() {
            acc += f;
            let end = if i + 1 == mix.len() {
                self.core
            } else {
                (acc * self.core as f64).round() as usize
            };
            out.resize(end.max(out.len()).min(self.core), d);
        }
        out
    }
}

struct Graph {
    var_adj: Vec<Vec<u32>>,
    chk_adj: Vec<Vec<u32>>,
    var_seen: Vec<u32>,
    chk_seen: Vec<u32>,
    epoch: u32,
}

impl Graph {
    fn connect(&mut self, v: usize, c: usize) {
        self.var_adj[v].push(c as u32);
        self.chk_adj[c].push(v as u32);
    }

    /// Checks in `range` that are farthest from `v` (unreachable if any).
    fn farthest(&mut self, v: usize, range: std::ops::Range<usize>) -> Vec<usize> {
        self.epoch += 1;
        let e = self.epoch;
        let in_range = |c: usize| range.contains(&c);
        let total = range.len();
        let mut reached = 0;
        self.var_seen[v] = e;
        let mut frontier: Vec<usize> = Vec::new();
        for &c in &self.var_adj[v] {
            let c = c as usize;
            if self.chk_seen[c] != e {
                self.chk_seen[c] = e;
                reached += usize::from(in_range(c));
                frontier.push(c);
            }
        }
        loop {
            let mut vars = Vec::new();
            for &c in &frontier {
                for &u in &self.chk_adj[c] {
                    let u = u as usize;
                    if self.var_seen[u] != e {
                        self.var_seen[u] = e;
                        vars.push(u);
                    }
                }
            }
            let mut next = Vec::new();
            let mut newly = 0;
            for &u in &vars {
                for &c in &self.var_adj[u] {
                    let c = c as usize;
                    if self.chk_seen[c] != e {
                        self.chk_seen[c] = e;
                        newly += usize::from(in_range(c));
                        next.push(c);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            if reached + newly == total {
                // everything is reached at this depth: prefer the last level
                return next.into_iter().filter(|&c| in_range(c)).collect();
            }
            reached += newly;
            frontier = next;
        }
        range.filter(|&c| self.chk_seen[c] != e).collect()
    }
}

/// Builds a code with the given structure; deterministic for a fixed seed.
pub fn peg_construct(s: &MetStructure, seed: u64) -> Result<LdpcCode> {
    let v = s.violations();
    if !v.is_empty() {
        return Err(invalid(v.join("; ")));
    }
    let mut rng = RandomStream::new(seed, 0);
    let m = s.checks();
    let m1 = s.type1_checks;
    let mut g = Graph {
        var_adj: vec![Vec::new(); s.n],
        chk_adj: vec![Vec::new(); m],
        var_seen: vec![0; s.n],
        chk_seen: vec![0; m],
        epoch: 0,
    };
    // Checks 0..m1 are type 1; check m1 + j owns degree-one variable core + j.
    for j in 0..s.n - s.core {
        g.connect(s.core + j, m1 + j);
    }
    let mut d1 = s.degree_sequence(&s.d1);
    let mut d2 = s.degree_sequence(&s.d2);
    d1.shuffle(&mut rng);
    d2.shuffle(&mut rng);
    let mut order: Vec<usize> = (0..s.core).collect();
    order.sort_by_key(|&v| d1[v] + d2[v]);
    for &v in &order {
        for (count, range) in [(d1[v], 0..m1), (d2[v], m1..m)] {
            for _ in 0..count {
                let candidates = g.farthest(v, range.clone());
                let candidates: Vec<usize> = candidates
                    .into_iter()
                    .filter(|&c| !g.var_adj[v].contains(&(c as u32)))
                    .collect();
                let min = candidates.iter().map(|&c| g.chk_adj[c].len()).min();
                let Some(min) = min else {
                    return Err(invalid(format!("no free check left for variable {v}")));
                };
                let best: Vec<usize> = candidates.into_iter().filter(|&c| g.chk_adj[c].len() == min).collect();
                let c = best[rng.random_range(0..best.len())];
                g.connect(v, c);
            }
        }
    }
    LdpcCode::from_columns(m, g.var_adj)
}

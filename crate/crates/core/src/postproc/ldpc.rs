//! Binary LDPC codes in the syndrome formulation: alist I/O, syndromes and
//! sum-product belief propagation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Magnitude limit applied to every LLR and message.
pub const LLR_CLAMP: f64 = 40.0;
pub const DEFAULT_MAX_ITERS: usize = 200;

/// Sparse parity-check matrix `H` (m×n over GF(2)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    /// Check indices of each variable node, ascending.
    cols: Vec<Vec<u32>>,
    /// Variable indices of each check node, ascending.
    rows: Vec<Vec<u32>>,
}

impl LdpcCode {
    /// Builds a code from per-variable check lists.
    pub fn from_columns(m: usize, cols: Vec<Vec<u32>>) -> Result<Self> {
        let n = cols.len();
        if n == 0 || m == 0 || m >= n {
            return Err(invalid(format!("parity-check shape {m}x{n} has no positive rate")));
        }
        let mut rows = vec![Vec::new(); m];
        let mut cols_sorted = Vec::with_capacity(n);
        for (v, col) in cols.into_iter().enumerate() {
            let mut col = col;
            col.sort_unstable();
            if col.is_empty() {
                return Err(invalid(format!("variable node {v} has no checks")));
            }
            if col.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!("variable node {v} lists a check twice")));
            }
            for &c in &col {
                if c as usize >= m {
                    return Err(invalid(format!("check index {c} out of range for m = {m}")));
                }
                rows[c as usize].push(v as u32);
            }
            cols_sorted.push(col);
        }
        Ok(Self {
            n,
            m,
            cols: cols_sorted,
            rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Information rate of the syndrome scheme, `1 − m/n`.
    pub fn rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.cols
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn edges(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// The same code with check nodes reordered: new check `i` is old check `order[i]`.
    pub fn permute_checks(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.m {
            return Err(invalid("check permutation has the wrong length"));
        }
        let mut inverse = vec![usize::MAX; self.m];
        for (new, &old) in order.iter().enumerate() {
            if old >= self.m || inverse[old] != usize::MAX {
                return Err(invalid("check order is not a permutation"));
            }
            inverse[old] = new;
        }
        let cols = self
            .cols
            .iter()
            .map(|col| col.iter().map(|&c| inverse[c as usize] as u32).collect())
            .collect();
        Self::from_columns(self.m, cols)
    }

    /// Parses the alist text format (1-based indices, zero padding allowed).
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut numbers = |what: &str| -> Result<(usize, Vec<usize>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of alist while reading {what}"),
            })?;
            let vals = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Parse {
                        line: no,
                        msg: format!("`{t}` is not a non-negative integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((no, vals))
        };
        let (no, dims) = numbers("dimensions")?;
        let [n, m] = dims[..] else {
            return Err(Error::Parse {
                line: no,
                msg: "expected `n m`".into(),
            });
        };
        let (no, maxes) = numbers("maximum degrees")?;
        if maxes.len() != 2 {
            return Err(Error::Parse {
                line: no,
                msg: "expected two maximum degrees".into(),
            });
        }
        let (no, col_deg) = numbers("column degrees")?;
        if col_deg.len() != n {
            return Err(Error::Parse {
                line: no,
                msg: format!("expected {n} column degrees, found {}", col_deg.len()),
            });
        }
        let (no, row_deg) = numbers("row degrees")?;
        if row_deg.len() != m {
            return Err(Error::Parse {
                line: no,
                msg: format!("expected {m} row degrees, found {}", row_deg.len()),
            });
        }
        let mut cols = Vec::with_capacity(n);
        for (v, &deg) in col_deg.iter().enumerate() {
            let (no, idx) = numbers("column lists")?;
            let idx: Vec<u32> = idx.into_iter().filter(|&i| i != 0).map(|i| (i - 1) as u32).collect();
            if idx.len() != deg {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("column {} lists {} checks, degree says {deg}", v + 1, idx.len()),
                });
            }
            cols.push(idx);
        }
        let code = Self::from_columns(m, cols).map_err(|e| Error::Parse {
            line: no,
            msg: e.to_string(),
        })?;
        for (c, &deg) in row_deg.iter().enumerate() {
            let (no, idx) = numbers("row lists")?;
            let mut idx: Vec<u32> = idx.into_iter().filter(|&i| i != 0).map(|i| (i - 1) as u32).collect();
            idx.sort_unstable();
            if idx.len() != deg || idx != code.rows[c] {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("row {} does not match the column lists", c + 1),
                });
            }
        }
        Ok(code)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_alist(&std::fs::read_to_string(path)?)
    }

    /// Serializes in alist format with zero padding.
    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} {}", self.n, self.m);
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for (lists, width) in [(&self.cols, max_col), (&self.rows, max_row)] {
            for l in lists.iter() {
                let mut it = l.iter().map(|&i| i as usize + 1).chain(std::iter::repeat(0).take(width - l.len()));
                let _ = writeln!(s, "{}", join(&mut it));
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_alist())?;
        Ok(())
    }
}

/// `H·x` over GF(2); bits are 0/1 bytes.
pub fn ldpc_syndrome(code: &LdpcCode, bits: &[u8]) -> Result<Vec<u8>> {
    if bits.len() != code.n {
        return Err(invalid(format!("word length {} does not match n = {}", bits.len(), code.n)));
    }
    Ok(code
        .rows
        .iter()
        .map(|row| row.iter().fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    /// `H·x̂` equals the target syndrome.
    pub converged: bool,
    pub iterations: usize,
}

/// Flooding sum-product decoding towards `target_syndrome`.
///
/// Positive LLR means bit 0.
pub fn bp_decode(code: &LdpcCode, llrs: &[f64], target_syndrome: &[u8], max_iters: usize) -> Result<DecodeResult> {
    if llrs.len() != code.n || target_syndrome.len() != code.m {
        return Err(invalid(format!(
            "decoder inputs of length {}/{} do not match code {}x{}",
            llrs.len(),
            target_syndrome.len(),
            code.m,
            code.n
        )));
    }
    let clamp = |x: f64| x.clamp(-LLR_CLAMP, LLR_CLAMP);
    let channel: Vec<f64> = llrs.iter().map(|&l| clamp(l)).collect();

    // Edge storage ordered by check; each variable keeps the positions of its edges.
    let mut row_start = Vec::with_capacity(code.m + 1);
    let mut edge_var = Vec::with_capacity(code.edges());
    row_start.push(0);
    for row in &code.rows {
        edge_var.extend(row.iter().map(|&v| v as usize));
        row_start.push(edge_var.len());
    }
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); code.n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut q: Vec<f64> = edge_var.iter().map(|&v| channel[v]).collect();
    let mut r = vec![0.0; edge_var.len()];
    let mut t = vec![0.0; edge_var.len()];
    let mut bits: Vec<u8> = channel.iter().map(|&l| u8::from(l < 0.0)).collect();
    if ldpc_syndrome(code, &bits)? == target_syndrome {
        return Ok(DecodeResult {
            bits,
            converged: true,
            iterations: 0,
        });
    }
    for iter in 1..=max_iters {
        for c in 0..code.m {
            let (lo, hi) = (row_start[c], row_start[c + 1]);
            let sign = if target_syndrome[c] & 1 == 1 { -1.0 } else { 1.0 };
            for e in lo..hi {
                t[e] = (q[e] / 2.0).tanh();
            }
            // exclusive products by a forward then backward sweep
            let mut acc = 1.0;
            for e in lo..hi {
                r[e] = acc;
                acc *= t[e];
            }
            acc = 1.0;
            for e in (lo..hi).rev() {
                let p = r[e] * acc;
                acc *= t[e];
                r[e] = clamp(sign * 2.0 * p.clamp(-1.0, 1.0).atanh());
            }
        }
        for v in 0..code.n {
            let edges = &var_edges[v];
            let total = channel[v] + edges.iter().map(|&e| r[e]).sum::<f64>();
            bits[v] = u8::from(total < 0.0);
            for &e in edges {
                q[e] = clamp(total - r[e]);
            }
        }
        if ldpc_syndrome(code, &bits)? == target_syndrome {
            return Ok(DecodeResult {
                bits,
                converged: true,
                iterations: iter,
            });
        }
    }
    Ok(DecodeResult {
        bits,
        converged: false,
        iterations: max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hamming(7,4) parity-check matrix.
    fn hamming() -> LdpcCode {
        let h = [[1, 0, 1, 0, 1, 0, 1], [0, 1, 1, 0, 0, 1, 1], [0, 0, 0, 1, 1, 1, 1]];
        let cols = (0..7)
            .map(|v| (0..3).filter(|&c| h[c][v] == 1).map(|c| c as u32).collect())
            .collect();
        LdpcCode::from_columns(3, cols).unwrap()
    }

    #[test]
    fn alist_round_trip() {
        let code = hamming();
        let text = code.to_alist();
        assert!(text.starts_with("7 3\n3 4\n"));
        assert_eq!(LdpcCode::from_alist(&text).unwrap(), code);
        assert!((code.rate() - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn alist_without_padding() {
        let text = "3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n";
        let code = LdpcCode::from_alist(text).unwrap();
        assert_eq!(code.rows()[1], vec![1, 2]);
    }

    #[test]
    fn alist_errors() {
        assert!(LdpcCode::from_alist("7 3\n3 4\n").is_err());
        let mut bad = hamming().to_alist();
        bad = bad.replacen("1 2 0", "1 3 0", 1);
        assert!(matches!(LdpcCode::from_alist(&bad), Err(Error::Parse { .. })));
        assert!(LdpcCode::from_columns(3, vec![vec![0], vec![], vec![1], vec![2]]).is_err());
    }

    #[test]
    fn syndrome_basics() {
        let code = hamming();
        assert_eq!(ldpc_syndrome(&code, &[0; 7]).unwrap(), vec![0; 3]);
        assert_eq!(ldpc_syndrome(&code, &[1, 0, 0, 0, 0, 0, 0]).unwrap(), vec![1, 0, 0]);
        assert!(ldpc_syndrome(&code, &[0; 6]).is_err());
    }

    #[test]
    fn noiseless_decode_is_immediate() {
        let code = hamming();
        let word = [1u8, 0, 1, 1, 0, 0, 1];
        let s = ldpc_syndrome(&code, &word).unwrap();
        let llrs: Vec<f64> = word.iter().map(|&b| if b == 1 { -1e9 } else { 1e9 }).collect();
        let out = bp_decode(&code, &llrs, &s, DEFAULT_MAX_ITERS).unwrap();
        assert!(out.converged && out.iterations <= 1);
        assert_eq!(out.bits, word);
    }

    #[test]
    fn corrects_single_error() {
        let code = hamming();
        let word = [0u8, 1, 1, 0, 0, 1, 1];
        let s = ldpc_syndrome(&code, &word).unwrap();
        let mut llrs: Vec<f64> = word.iter().map(|&b| if b == 1 { -2.0 } else { 2.0 }).collect();
        llrs[4] = -0.5;
        let out = bp_decode(&code, &llrs, &s, DEFAULT_MAX_ITERS).unwrap();
        assert!(out.converged);
        assert_eq!(out.bits, word);
    }
}

//! Per-point metrics and their CSV serialization.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

/// Version of the column layout; bumped whenever [`COLUMNS`] changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 18] = [
    "scenario",
    "param",
    "value",
    "t_eff",
    "t_eff_stderr",
    "xi_hat",
    "xi_stderr",
    "v_el",
    "i_ab",
    "chi_eb",
    "skf",
    "i_ab_model",
    "chi_eb_model",
    "skf_model",
    "fer",
    "beta_achieved",
    "n_symbols",
    "runtime_s",
];

/// Metrics of one scenario point. Quantities that do not apply are NaN.
///
/// `i_ab`, `chi_eb` and `skf` are evaluated from the estimated `T` and `ξ`
/// (and from measured FER and efficiency when post-processing ran); the
/// `_model` columns use the configured link parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    /// Swept parameter path; empty for a single run.
    pub param: String,
    pub value: f64,
    pub t_eff: f64,
    pub t_eff_stderr: f64,
    pub xi_hat: f64,
    pub xi_stderr: f64,
    /// Calibrated electronic noise, SNU.
    pub v_el: f64,
    pub i_ab: f64,
    pub chi_eb: f64,
    pub skf: f64,
    pub i_ab_model: f64,
    pub chi_eb_model: f64,
    pub skf_model: f64,
    pub fer: f64,
    pub beta_achieved: f64,
    pub n_symbols: usize,
    pub runtime_s: f64,
}

impl MetricsRow {
    /// Equality of every field except `runtime_s`, with NaN equal to NaN.
    pub fn same_results(&self, other: &Self) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.runtime_s = 0.0;
        b.runtime_s = 0.0;
        a.to_csv_line() == b.to_csv_line()
    }

    fn to_csv_line(&self) -> String {
        let f = |x: f64| format!("{x:.16e}");
        [
            quote(&self.scenario),
            quote(&self.param),
            f(self.value),
            f(self.t_eff),
            f(self.t_eff_stderr),
            f(self.xi_hat),
            f(self.xi_stderr),
            f(self.v_el),
            f(self.i_ab),
            f(self.chi_eb),
            f(self.skf),
            f(self.i_ab_model),
            f(self.chi_eb_model),
            f(self.skf_model),
            f(self.fer),
            f(self.beta_achieved),
            self.n_symbols.to_string(),
            f(self.runtime_s),
        ]
        .join(",")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits one CSV line, honouring double-quoted fields.
fn split_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

pub fn header() -> String {
    COLUMNS.join(",")
}

/// SHA-256 of the header line, hex encoded.
pub fn schema_hash() -> String {
    let digest = Sha256::digest(header().as_bytes());
    digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = header();
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Writes a fresh CSV file (an existing file is replaced, never appended to).
pub fn emit_csv(rows: &[MetricsRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(invalid("no metrics rows to write"));
    }
    std::fs::write(path, to_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty CSV".into(),
    })?;
    if head != header() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header does not match schema version {SCHEMA_VERSION}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let cells = split_line(line);
        if cells.len() != COLUMNS.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} fields, found {}", COLUMNS.len(), cells.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            cells[k].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("{}: `{}` is not a number", COLUMNS[k], cells[k]),
            })
        };
        rows.push(MetricsRow {
            scenario: cells[0].clone(),
            param: cells[1].clone(),
            value: num(2)?,
            t_eff: num(3)?,
            t_eff_stderr: num(4)?,
            xi_hat: num(5)?,
            xi_stderr: num(6)?,
            v_el: num(7)?,
            i_ab: num(8)?,
            chi_eb: num(9)?,
            skf: num(10)?,
            i_ab_model: num(11)?,
            chi_eb_model: num(12)?,
            skf_model: num(13)?,
            fer: num(14)?,
            beta_achieved: num(15)?,
            n_symbols: cells[16].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("n_symbols: `{}` is not an integer", cells[16]),
            })?,
            runtime_s: num(17)?,
        });
    }
    Ok(rows)
}

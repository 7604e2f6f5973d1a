//! Parameter estimation of effective transmittance and excess noise from
//! paired Alice/Bob records.

use crate::dsp::SymbolRecord;
use crate::error::{invalid, Error, Result};
use crate::rx::Detection;

/// Fewest records accepted by [`estimate_params`].
pub const MIN_RECORDS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    /// Quadrature-domain transmission `√T_eff`.
    pub t_hat: f64,
    pub t_eff: f64,
    /// Excess noise referred to the channel input, SNU.
    pub xi_hat: f64,
    /// Bob's variance per measured quadrature, SNU.
    pub v_b: f64,
    pub n_symbols: usize,
    pub stderr_t: f64,
    pub stderr_xi: f64,
}

/// Pooled `(x_A, x_B)` pairs for the measured quadratures.
pub fn quadrature_pairs(records: &[SymbolRecord], detection: Detection) -> Vec<(f64, f64)> {
    match detection {
        Detection::HomodyneQ => records.iter().map(|r| (r.alice.re, r.bob.re)).collect(),
        Detection::HomodyneP => records.iter().map(|r| (r.alice.im, r.bob.im)).collect(),
        Detection::Heterodyne => records
            .iter()
            .flat_map(|r| [(r.alice.re, r.bob.re), (r.alice.im, r.bob.im)])
            .collect(),
    }
}

/// Estimates `T_eff` and `ξ` with `v_el` treated as trusted.
///
/// Bob's per-quadrature model is `x_B = s·x_A + z` with
/// `Var(z) = s²·ξ + 1 + v_el`, where `s = √T_eff` for homodyne and
/// `s = √(T_eff/2)` for heterodyne. The residual variance about the fitted
/// line is used, which equals `Var(x_B) − s²·Var(x_A)`.
pub fn estimate_params(
    records: &[SymbolRecord],
    v_mod: f64,
    detection: Detection,
    v_el: f64,
) -> Result<EstimationResult> {
    if !(v_mod > 0.0) {
        return Err(invalid(format!("v_mod must be > 0, got {v_mod}")));
    }
    if records.len() < MIN_RECORDS {
        return Err(Error::InsufficientData {
            needed: MIN_RECORDS,
            got: records.len(),
        });
    }
    let pairs = quadrature_pairs(records, detection);
    let n = pairs.len() as f64;
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
    }
    let s = sab / saa;
    if !(s > 0.0) {
        return Err(Error::DegenerateLink(format!("regression slope {s} is not positive")));
    }
    let resid = ((sbb - s * sab) / n).max(0.0);
    let excess = resid - 1.0 - v_el;
    let xi_hat = excess / (s * s);

    let stderr_s = (resid / saa).sqrt();
    let stderr_resid = resid * (2.0 / n).sqrt();
    let stderr_xi = ((stderr_resid / (s * s)).powi(2) + (2.0 * excess / s.powi(3) * stderr_s).powi(2)).sqrt();

    let gain = if detection.is_heterodyne() { 2f64.sqrt() } else { 1.0 };
    let t_hat = s * gain;
    let stderr_t = stderr_s * gain;
    Ok(EstimationResult {
        t_hat,
        t_eff: t_hat * t_hat,
        xi_hat,
        v_b: sbb / n,
        n_symbols: records.len(),
        stderr_t: 2.0 * t_hat * stderr_t,
        stderr_xi,
    })
}

//! Gaussian-state calculus for the asymptotic collective-attack key rate:
//! covariance matrices, symplectic spectra, von Neumann entropies,
//! beamsplitters, measurement updates, `I_AB` and the trusted-detector
//! Holevo bound `χ_EB`.

use crate::error::{invalid, Error, Result};
use crate::rx::Detection;
use crate::scalar::Real;

/// Beamsplitter leakage standing in for a unit-efficiency detector that
/// still carries electronic noise.
pub const LIMIT_EPSILON: f64 = 1e-6;

/// Real symmetric `2N×2N` covariance matrix in SNU, ordered `(q₁, p₁, …, q_N, p_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<R: Real> {
    modes: usize,
    data: Vec<R>,
}

impl<R: Real> CovarianceMatrix<R> {
    /// Row-major entries; rejects non-square or asymmetric input.
    pub fn new(modes: usize, data: Vec<R>) -> Result<Self> {
        let d = 2 * modes;
        if modes == 0 || data.len() != d * d {
            return Err(invalid(format!(
                "{} entries do not form a {d}x{d} covariance matrix",
                data.len()
            )));
        }
        let scale = data.iter().fold(R::zero(), |m, x| m.max(x.abs()));
        let tol = R::epsilon() * R::lit(4500.0) * scale.max(R::one());
        for i in 0..d {
            for j in 0..i {
                if (data[i * d + j] - data[j * d + i]).abs() > tol {
                    return Err(invalid(format!("covariance matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { modes, data })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::thermal(&vec![R::one(); modes])
    }

    /// Product of thermal states with the given symplectic eigenvalues.
    pub fn thermal(nus: &[R]) -> Self {
        let d = 2 * nus.len();
        let mut data = vec![R::zero(); d * d];
        for (k, nu) in nus.iter().enumerate() {
            data[(2 * k) * d + 2 * k] = *nu;
            data[(2 * k + 1) * d + 2 * k + 1] = *nu;
        }
        Self { modes: nus.len(), data }
    }

    /// Two-mode squeezed vacuum with per-quadrature variance `v`.
    pub fn tmsv(v: R) -> Self {
        let c = (v * v - R::one()).max(R::zero()).sqrt();
        Self::two_mode(v, v, c)
    }

    /// `[[a·I, c·Z], [c·Z, b·I]]` with `Z = diag(1, −1)`.
    pub fn two_mode(a: R, b: R, c: R) -> Self {
        let z = R::zero();
        #[rustfmt::skip]
        let data = vec![
            a, z, c, z,
            z, a, z, -c,
            c, z, b, z,
            z, -c, z, b,
        ];
        Self { modes: 2, data }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.dim() + j]
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let (d1, d2) = (self.dim(), other.dim());
        let d = d1 + d2;
        let mut data = vec![R::zero(); d * d];
        for i in 0..d1 {
            for j in 0..d1 {
                data[i * d + j] = self.get(i, j);
            }
        }
        for i in 0..d2 {
            for j in 0..d2 {
                data[(d1 + i) * d + d1 + j] = other.get(i, j);
            }
        }
        Self {
            modes: self.modes + other.modes,
            data,
        }
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn submatrix(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            if m >= self.modes {
                return Err(invalid(format!("mode {m} out of range for {} modes", self.modes)));
            }
        }
        let idx: Vec<usize> = modes.iter().flat_map(|m| [2 * m, 2 * m + 1]).collect();
        let d = idx.len();
        let mut data = Vec::with_capacity(d * d);
        for &i in &idx {
            for &j in &idx {
                data.push(self.get(i, j));
            }
        }
        Ok(Self { modes: modes.len(), data })
    }

    /// Smallest symplectic eigenvalue is at least `1 − tolerance`.
    pub fn is_physical(&self) -> bool {
        match symplectic_eigenvalues(self) {
            Ok(nus) => nus.last().is_some_and(|nu| *nu >= R::one() - R::tolerance()),
            Err(_) => false,
        }
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric `n×n` row-major matrix.
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
fn jacobi_eigen<R: Real>(a: &[R], n: usize) -> (Vec<R>, Vec<R>) {
    let mut a = a.to_vec();
    let mut v = vec![R::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = R::one();
    }
    let two = R::lit(2.0);
    for _sweep in 0..100 {
        let off: R = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .fold(R::zero(), |s, (i, j)| s + a[i * n + j] * a[i * n + j]);
        let diag: R = (0..n).fold(R::zero(), |s, i| s + a[i * n + i] * a[i * n + i]);
        if off <= R::epsilon() * R::epsilon() * diag || off == R::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == R::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

fn matmul<R: Real>(a: &[R], b: &[R], n: usize) -> Vec<R> {
    let mut out = vec![R::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == R::zero() {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = out[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    out
}

/// `g(ν) = ((ν+1)/2)·log₂((ν+1)/2) − ((ν−1)/2)·log₂((ν−1)/2)`, with `g(1) = 0`.
pub fn g_entropy<R: Real>(nu: R) -> Result<R> {
    if !(nu >= R::one() - R::lit(1e-6)) {
        return Err(Error::Unphysical(format!("symplectic eigenvalue {nu:?} below 1")));
    }
    let two = R::lit(2.0);
    let nu = nu.max(R::one());
    let plus = (nu + R::one()) / two;
    let minus = (nu - R::one()) / two;
    let tail = if minus > R::zero() { minus * minus.log2() } else { R::zero() };
    Ok(plus * plus.log2() - tail)
}

/// Symplectic spectrum, sorted descending.
///
/// The spectrum is read off the symmetric matrix `Σ^{½}·Ωᵀ·Σ·Ω·Σ^{½}`, whose
/// eigenvalues are the squares `νₖ²`, each appearing twice.
pub fn symplectic_eigenvalues<R: Real>(sigma: &CovarianceMatrix<R>) -> Result<Vec<R>> {
    let d = sigma.dim();
    let (vals, vecs) = jacobi_eigen(sigma.as_slice(), d);
    if let Some(min) = vals.iter().copied().reduce(R::min) {
        if !(min > R::zero()) {
            return Err(Error::Unphysical(format!("covariance matrix is not positive definite (eigenvalue {min:?})")));
        }
    }
    let mut root = vec![R::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            root[i * d + j] = (0..d).fold(R::zero(), |s, k| s + vecs[i * d + k] * vals[k].sqrt() * vecs[j * d + k]);
        }
    }
    // Ωᵀ·Σ·Ω, with Ω = ⊕ [[0, 1], [−1, 0]]: (ΩᵀΣΩ)ᵢⱼ = sᵢ·sⱼ·Σ_{ī j̄}
    let partner = |i: usize| i ^ 1;
    let sign = |i: usize| if i % 2 == 0 { R::one() } else { -R::one() };
    let mut otso = vec![R::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            otso[i * d + j] = sign(i) * sign(j) * sigma.get(partner(i), partner(j));
        }
    }
    let mut m = matmul(&matmul(&root, &otso, d), &root, d);
    for i in 0..d {
        for j in 0..i {
            let avg = (m[i * d + j] + m[j * d + i]) / R::lit(2.0);
            m[i * d + j] = avg;
            m[j * d + i] = avg;
        }
    }
    let (mut sq, _) = jacobi_eigen(&m, d);
    sq.sort_by(|a, b| b.partial_cmp(a).expect("finite spectrum"));
    Ok(sq.iter().step_by(2).map(|x| x.max(R::zero()).sqrt()).collect())
}

/// Von Neumann entropy in bits.
pub fn entropy<R: Real>(sigma: &CovarianceMatrix<R>) -> Result<R> {
    symplectic_eigenvalues(sigma)?
        .into_iter()
        .try_fold(R::zero(), |s, nu| Ok(s + g_entropy(nu)?))
}

/// Mixes modes `a` and `b` on a beamsplitter of transmittance `tau`:
/// `a' = √τ·a + √(1−τ)·b`, `b' = −√(1−τ)·a + √τ·b`.
pub fn beamsplitter<R: Real>(sigma: &CovarianceMatrix<R>, a: usize, b: usize, tau: R) -> Result<CovarianceMatrix<R>> {
    if a == b || a >= sigma.modes() || b >= sigma.modes() {
        return Err(invalid(format!("beamsplitter modes ({a}, {b}) invalid for {} modes", sigma.modes())));
    }
    if !(tau >= R::zero() && tau <= R::one()) {
        return Err(invalid(format!("beamsplitter transmittance {tau:?} outside [0, 1]")));
    }
    let d = sigma.dim();
    let t = tau.sqrt();
    let r = (R::one() - tau).sqrt();
    let mut s = vec![R::zero(); d * d];
    for i in 0..d {
        s[i * d + i] = R::one();
    }
    for k in 0..2 {
        let (ia, ib) = (2 * a + k, 2 * b + k);
        s[ia * d + ia] = t;
        s[ia * d + ib] = r;
        s[ib * d + ia] = -r;
        s[ib * d + ib] = t;
    }
    CovarianceMatrix::new(sigma.modes(), congruence(sigma.as_slice(), &s, d))
}

/// `S·Σ·Sᵀ`, symmetrized.
fn congruence<R: Real>(sigma: &[R], s: &[R], d: usize) -> Vec<R> {
    let mut st = vec![R::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            st[i * d + j] = s[j * d + i];
        }
    }
    let out = matmul(&matmul(s, sigma, d), &st, d);
    let mut sym = out.clone();
    for i in 0..d {
        for j in 0..d {
            sym[i * d + j] = (out[i * d + j] + out[j * d + i]) / R::lit(2.0);
        }
    }
    sym
}

/// Measurement applied to a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    HomodyneQ,
    Heterodyne,
}

/// Conditional state of the remaining modes after measuring `mode`.
pub fn measure_mode<R: Real>(
    sigma: &CovarianceMatrix<R>,
    mode: usize,
    kind: MeasurementKind,
) -> Result<CovarianceMatrix<R>> {
    if sigma.modes() < 2 || mode >= sigma.modes() {
        return Err(invalid(format!("cannot measure mode {mode} of a {}-mode state", sigma.modes())));
    }
    let keep: Vec<usize> = (0..sigma.dim()).filter(|i| i / 2 != mode).collect();
    let (mq, mp) = (2 * mode, 2 * mode + 1);
    let k = keep.len();
    let mut out = Vec::with_capacity(k * k);
    match kind {
        MeasurementKind::HomodyneQ => {
            let bqq = sigma.get(mq, mq);
            if !(bqq > R::epsilon()) {
                return Err(Error::DegenerateMeasurement(format!("measured variance {bqq:?}")));
            }
            for &i in &keep {
                for &j in &keep {
                    out.push(sigma.get(i, j) - sigma.get(i, mq) * sigma.get(j, mq) / bqq);
                }
            }
        }
        MeasurementKind::Heterodyne => {
            let (b11, b12, b22) = (
                sigma.get(mq, mq) + R::one(),
                sigma.get(mq, mp),
                sigma.get(mp, mp) + R::one(),
            );
            let det = b11 * b22 - b12 * b12;
            if !(det > R::epsilon()) {
                return Err(Error::DegenerateMeasurement(format!("measured block determinant {det:?}")));
            }
            let (i11, i12, i22) = (b22 / det, -b12 / det, b11 / det);
            for &i in &keep {
                for &j in &keep {
                    let (ci1, ci2) = (sigma.get(i, mq), sigma.get(i, mp));
                    let (cj1, cj2) = (sigma.get(j, mq), sigma.get(j, mp));
                    let corr = ci1 * (i11 * cj1 + i12 * cj2) + ci2 * (i12 * cj1 + i22 * cj2);
                    out.push(sigma.get(i, j) - corr);
                }
            }
        }
    }
    let mut sym = out.clone();
    for i in 0..k {
        for j in 0..k {
            sym[i * k + j] = (out[i * k + j] + out[j * k + i]) / R::lit(2.0);
        }
    }
    CovarianceMatrix::new(sigma.modes() - 1, sym)
}

/// Detection scheme entering the security analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecurityDetection {
    Homodyne,
    Heterodyne,
}

impl From<Detection> for SecurityDetection {
    fn from(d: Detection) -> Self {
        if d.is_heterodyne() {
            SecurityDetection::Heterodyne
        } else {
            SecurityDetection::Homodyne
        }
    }
}

/// Physical and protocol parameters of a link. `t` is the channel
/// transmittance; `xi` is referred to the channel input; `v_el` is per
/// measured quadrature in SNU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams<R: Real> {
    pub v_mod: R,
    pub t: R,
    pub xi: R,
    pub eta: R,
    pub v_el: R,
    pub detection: SecurityDetection,
    pub beta: R,
    pub nu_pe: R,
    pub fer: R,
}

impl<R: Real> SecurityParams<R> {
    /// Ideal post-processing (`β = 1`, no estimation overhead, no frame errors).
    pub fn new(v_mod: R, t: R, xi: R, eta: R, v_el: R, detection: SecurityDetection) -> Self {
        Self {
            v_mod,
            t,
            xi,
            eta,
            v_el,
            detection,
            beta: R::one(),
            nu_pe: R::zero(),
            fer: R::zero(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let (zero, one) = (R::zero(), R::one());
        let mut out = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                out.push(msg)
            }
        };
        check(self.v_mod >= zero, format!("v_mod must be >= 0, got {:?}", self.v_mod));
        check(self.t >= zero && self.t <= one, format!("T must be in [0, 1], got {:?}", self.t));
        check(self.xi >= zero, format!("xi must be >= 0, got {:?}", self.xi));
        check(self.eta > zero && self.eta <= one, format!("eta must be in (0, 1], got {:?}", self.eta));
        check(self.v_el >= zero, format!("v_el must be >= 0, got {:?}", self.v_el));
        check(self.beta > zero && self.beta <= one, format!("beta must be in (0, 1], got {:?}", self.beta));
        check(self.nu_pe >= zero && self.nu_pe < one, format!("nu_pe must be in [0, 1), got {:?}", self.nu_pe));
        check(self.fer >= zero && self.fer <= one, format!("fer must be in [0, 1], got {:?}", self.fer));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v.join("; ")))
        }
    }
}

/// Entanglement-based link state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState<R: Real> {
    /// Alice's EPR mode and Bob's mode at the channel output.
    pub sigma_ab1: CovarianceMatrix<R>,
    /// Modes `[A, B, F, G]`: Bob's detected mode `B` after the detector
    /// beamsplitter, the detector-noise EPR arm `F` and its twin `G`
    /// (the `(F, G)` pair expressed in its un-squeezed frame).
    pub sigma_full: CovarianceMatrix<R>,
    pub bob_mode: usize,
}

/// Builds the entanglement-based state with a trusted detector.
///
/// The detector is a beamsplitter of transmittance `η` mixing Bob's mode with
/// one arm of an EPR pair of variance `v_d`, chosen so that Bob's measured
/// noise is `1 + v_el` per quadrature: `v_d = 1 + v_el/(1−η)` for homodyne,
/// `1 + 2·v_el/(1−η)` for heterodyne (one unit of `v_el` per arm). At `η = 1`
/// with `v_el > 0` a leakage of [`LIMIT_EPSILON`] stands in for the ideal detector.
pub fn build_link_state<R: Real>(p: &SecurityParams<R>) -> Result<LinkState<R>> {
    p.validate()?;
    let one = R::one();
    let v = p.v_mod + one;
    let a = v;
    let b = p.t * (v - one) + one + p.t * p.xi;
    let c = (p.t * (v * v - one)).sqrt();
    let sigma_ab1 = CovarianceMatrix::two_mode(a, b, c);

    let noise_units = match p.detection {
        SecurityDetection::Homodyne => one,
        SecurityDetection::Heterodyne => R::lit(2.0),
    };
    let mut eta = p.eta;
    if eta == one && p.v_el > R::zero() {
        eta = one - R::lit(LIMIT_EPSILON);
    }
    let v_d = if eta < one {
        one + noise_units * p.v_el / (one - eta)
    } else {
        one
    };
    let detector = detector_symplectic(eta, v_d);
    let full = sigma_ab1.direct_sum(&CovarianceMatrix::vacuum(2));
    let sigma_full = CovarianceMatrix::new(4, congruence(full.as_slice(), &detector, 8))?;
    Ok(LinkState {
        sigma_ab1,
        sigma_full,
        bob_mode: 1,
    })
}

/// `S₂(−r)·BS_{B,F}(η)·S₂(r)` on modes `[A, B, F, G]`, where `S₂(r)` is the
/// two-mode squeezer preparing the EPR pair of variance `cosh 2r = v_d` from
/// vacuum. The trailing `S₂(−r)` is local to `(F, G)`; it keeps entries
/// bounded as `v_d` grows, and leaves entropies of any set containing both
/// `F` and `G` unchanged.
fn detector_symplectic<R: Real>(eta: R, v_d: R) -> Vec<R> {
    let one = R::one();
    let two = R::lit(2.0);
    let t = eta.sqrt();
    let rho = (one - eta).sqrt();
    let ch2 = (v_d + one) / two;
    let sh2 = (v_d - one) / two;
    let (ch, sh) = (ch2.sqrt(), sh2.sqrt());
    // 1 − t without cancellation
    let omt = (one - eta) / (one + t);
    let mut x = vec![R::zero(); 64];
    x[0] = one;
    x[9] = one;
    for (k, sign) in [(0usize, one), (1usize, -one)] {
        let s = sign * sh;
        let (b, f, g) = (2 + k, 4 + k, 6 + k);
        x[b * 8 + b] = t;
        x[b * 8 + f] = rho * ch;
        x[b * 8 + g] = rho * s;
        x[f * 8 + b] = -rho * ch;
        x[f * 8 + f] = one - omt * ch2;
        x[f * 8 + g] = -omt * ch * s;
        x[g * 8 + b] = rho * s;
        x[g * 8 + f] = omt * ch * s;
        x[g * 8 + g] = one + omt * sh2;
    }
    x
}

/// Holevo bound on Eve's information about Bob's outcomes, in bits.
pub fn holevo_bound<R: Real>(p: &SecurityParams<R>) -> Result<R> {
    let state = build_link_state(p)?;
    let kind = match p.detection {
        SecurityDetection::Homodyne => MeasurementKind::HomodyneQ,
        SecurityDetection::Heterodyne => MeasurementKind::Heterodyne,
    };
    let s_e = entropy(&state.sigma_ab1)?;
    let cond = measure_mode(&state.sigma_full, state.bob_mode, kind)?;
    Ok((s_e - entropy(&cond)?).max(R::zero()))
}

/// Alice–Bob mutual information per symbol, in bits.
pub fn mutual_information<R: Real>(p: &SecurityParams<R>) -> R {
    let one = R::one();
    let tt = p.eta * p.t;
    match p.detection {
        SecurityDetection::Homodyne => {
            R::lit(0.5) * (one + tt * p.v_mod / (one + p.v_el + tt * p.xi)).log2()
        }
        SecurityDetection::Heterodyne => {
            let half = R::lit(0.5) * tt;
            (one + half * p.v_mod / (one + p.v_el + half * p.xi)).log2()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyFraction<R: Real> {
    /// `(1 − ν_PE)·(1 − FER)·(β·I_AB − χ_EB)`; negative when the protocol aborts.
    pub raw: R,
    pub clamped: R,
    pub i_ab: R,
    pub chi_eb: R,
}

pub fn secret_key_fraction<R: Real>(p: &SecurityParams<R>) -> Result<KeyFraction<R>> {
    let i_ab = mutual_information(p);
    let chi_eb = holevo_bound(p)?;
    let one = R::one();
    let raw = (one - p.nu_pe) * (one - p.fer) * (p.beta * i_ab - chi_eb);
    Ok(KeyFraction {
        raw,
        clamped: raw.max(R::zero()),
        i_ab,
        chi_eb,
    })
}

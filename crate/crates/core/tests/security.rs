use cvqkd::security::{
    beamsplitter, build_link_state, entropy, g_entropy, holevo_bound, measure_mode, mutual_information,
    secret_key_fraction, symplectic_eigenvalues, MeasurementKind, SecurityDetection,
};
use cvqkd::{CovarianceMatrix, SecurityParams};
use cvqkd::signal::RandomStream;
use proptest::prelude::*;
use rand::Rng;

fn g(nu: f64) -> f64 {
    if nu <= 1.0 {
        return 0.0;
    }
    let (p, m) = ((nu + 1.0) / 2.0, (nu - 1.0) / 2.0);
    p * p.log2() - m * m.log2()
}

/// Untrusted-detector Holevo bound from the two-mode closed form.
fn closed_form_chi(v_mod: f64, t: f64, xi: f64, det: SecurityDetection) -> f64 {
    let v = v_mod + 1.0;
    let a = v;
    let b = t * (v - 1.0) + 1.0 + t * xi;
    let c2 = t * (v * v - 1.0);
    let delta = a * a + b * b - 2.0 * c2;
    let d = a * b - c2;
    let root = (delta * delta - 4.0 * d * d).max(0.0).sqrt();
    let nu1 = ((delta + root) / 2.0).sqrt();
    let nu2 = ((delta - root) / 2.0).sqrt();
    let nu3 = match det {
        SecurityDetection::Homodyne => (a * (a - c2 / b)).sqrt(),
        SecurityDetection::Heterodyne => a - c2 / (b + 1.0),
    };
    g(nu1) + g(nu2) - g(nu3)
}

#[test]
fn generic_bound_matches_closed_form() {
    let mut rng = RandomStream::new(2024, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v_mod = rng.random_range(0.1..20.0);
        let t = rng.random_range(0.05..1.0);
        let xi = rng.random_range(0.0..0.2);
        for det in [SecurityDetection::Homodyne, SecurityDetection::Heterodyne] {
            let p = SecurityParams::new(v_mod, t, xi, 1.0, 0.0, det);
            let generic = holevo_bound(&p).unwrap();
            let oracle = closed_form_chi(v_mod, t, xi, det).max(0.0);
            worst = worst.max((generic - oracle).abs());
            let st = build_link_state(&p).unwrap();
            for s in [&st.sigma_ab1, &st.sigma_full] {
                assert!(symplectic_eigenvalues(s).unwrap().iter().all(|nu| *nu >= 1.0 - 1e-9));
            }
        }
    }
    assert!(worst < 1e-9, "worst deviation {worst}");
}

#[test]
fn key_point_reference_values() {
    // numpy reference (complex eigenvalues of iΩΣ, pseudo-inverse update)
    let p = SecurityParams::new(1.35, 0.35, 0.0116, 0.7, 0.0, SecurityDetection::Heterodyne);
    assert!((holevo_bound(&p).unwrap() - 0.1275).abs() < 5e-4);
    assert!((mutual_information(&p) - 0.2205).abs() < 5e-4);
    let p = SecurityParams::new(5.0, 0.05, 0.0, 0.7, 2.17e-3, SecurityDetection::Homodyne);
    assert!((mutual_information(&p) - 0.1161).abs() < 5e-4);
    assert!((holevo_bound(&p).unwrap() - 0.0956).abs() < 5e-4);
}

#[test]
fn purity_of_tmsv() {
    for k in 0..=198 {
        let v = 1.0 + 0.5 * k as f64;
        assert!(entropy(&CovarianceMatrix::tmsv(v)).unwrap().abs() < 1e-9, "V = {v}");
    }
}

#[test]
fn purification_identity() {
    // Loss with vacuum environment: the 3-mode state is pure.
    for (v, t) in [(2.0, 0.3), (6.0, 0.5), (21.0, 0.05)] {
        let s = CovarianceMatrix::tmsv(v).direct_sum(&CovarianceMatrix::vacuum(1));
        let s = beamsplitter(&s, 1, 2, t).unwrap();
        let ab = entropy(&s.submatrix(&[0, 1]).unwrap()).unwrap();
        let e = entropy(&s.submatrix(&[2]).unwrap()).unwrap();
        assert!((ab - e).abs() < 1e-9, "{ab} vs {e}");
    }
    // Trusted-detector construction at ξ = 0 with T = 1 is pure over [A, B, F, G].
    let p = SecurityParams::new(5.0, 1.0, 0.0, 0.7, 0.05, SecurityDetection::Homodyne);
    let full = build_link_state(&p).unwrap().sigma_full;
    let ab = entropy(&full.submatrix(&[0, 1]).unwrap()).unwrap();
    let fg = entropy(&full.submatrix(&[2, 3]).unwrap()).unwrap();
    assert!((ab - fg).abs() < 1e-9);
    assert!(entropy(&full).unwrap().abs() < 1e-9);
}

#[test]
fn detector_frame_matches_direct_construction() {
    // Direct construction: beamsplitter on σ_AB1 ⊕ TMSV(v_d), then measure B.
    for (eta, v_el, det) in [
        (0.7, 0.01, SecurityDetection::Homodyne),
        (0.5, 0.2, SecurityDetection::Heterodyne),
        (0.9, 0.05, SecurityDetection::Homodyne),
    ] {
        let p = SecurityParams::new(4.0, 0.4, 0.02, eta, v_el, det);
        let units = if det == SecurityDetection::Heterodyne { 2.0 } else { 1.0 };
        let v_d = 1.0 + units * v_el / (1.0 - eta);
        let st = build_link_state(&p).unwrap();
        let direct = beamsplitter(&st.sigma_ab1.direct_sum(&CovarianceMatrix::tmsv(v_d)), 1, 2, eta).unwrap();
        let kind = if det == SecurityDetection::Heterodyne {
            MeasurementKind::Heterodyne
        } else {
            MeasurementKind::HomodyneQ
        };
        let chi_direct = entropy(&st.sigma_ab1).unwrap() - entropy(&measure_mode(&direct, 1, kind).unwrap()).unwrap();
        assert!((holevo_bound(&p).unwrap() - chi_direct).abs() < 1e-9);
        for i in 0..4 {
            for j in 0..4 {
                assert!((st.sigma_full.get(i, j) - direct.get(i, j)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn holevo_increases_with_excess_noise() {
    let mut prev = -1.0;
    for k in 0..=20 {
        let xi = 0.005 * k as f64;
        let p = SecurityParams::new(5.0, 0.3, xi, 0.7, 2.17e-3, SecurityDetection::Homodyne);
        let chi = holevo_bound(&p).unwrap();
        assert!(chi > prev, "xi = {xi}");
        prev = chi;
    }
}

#[test]
fn key_fraction_has_interior_optimum_over_modulation() {
    // Fig 4 operating point with β = 0.95; optimum over V_mod on a fine grid.
    let v_el = 0.7 * 2.82e-12f64.powi(2) / (2.0 * cvqkd::signal::photon_energy(193.4e12) * 10e-3);
    let grid: Vec<f64> = (1..=400).map(|k| 0.05 * k as f64).collect();
    let rates: Vec<f64> = grid
        .iter()
        .map(|&v| {
            let mut p = SecurityParams::new(v, 0.3, 0.0, 0.7, v_el, SecurityDetection::Homodyne);
            p.beta = 0.95;
            secret_key_fraction(&p).unwrap().raw
        })
        .collect();
    let (imax, _) = rates
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    assert!(imax > 0 && imax < grid.len() - 1);
    assert!((2.0..=10.0).contains(&grid[imax]), "maximizer {}", grid[imax]);
}

#[test]
fn g_kernel_matches_reference() {
    for nu in [1.0, 1.000001, 1.5, 3.0, 17.0] {
        assert!((g_entropy(nu).unwrap() - g(nu)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn constructed_states_are_physical(
        v_mod in 0.0f64..30.0,
        t in 0.0f64..=1.0,
        xi in 0.0f64..0.3,
        eta in prop_oneof![Just(1.0f64), 0.05f64..1.0],
        v_el in 0.0f64..0.2,
        het in proptest::bool::ANY,
    ) {
        let det = if het { SecurityDetection::Heterodyne } else { SecurityDetection::Homodyne };
        let p = SecurityParams::new(v_mod, t, xi, eta, v_el, det);
        let st = build_link_state(&p).unwrap();
        for s in [&st.sigma_ab1, &st.sigma_full] {
            let nus = symplectic_eigenvalues(s).unwrap();
            prop_assert!(nus.iter().all(|nu| *nu >= 1.0 - 1e-9), "{:?}", nus);
        }
        let chi = holevo_bound(&p).unwrap();
        prop_assert!(chi >= 0.0);
        prop_assert!(mutual_information(&p) >= 0.0);
    }
}

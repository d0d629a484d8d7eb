//! Closed-form and counting oracles, checked against the library from outside.

use std::f64::consts::FRAC_PI_2;

use approx::assert_abs_diff_eq;
use bhl_core::geodesic::{
    integrate_geodesic, photon_orbit_radius, photon_orbit_state, Causal, GeodesicState, IntegratorOptions,
    OrbitSense,
};
use bhl_core::hyperbolic::{ConnectionProfile, DEFAULT_COLLAR};
use bhl_core::index::{eta_invariant, index_report, kernel_modes, IndexSettings, SpectralCondition};
use bhl_core::kerr::{kappa_scalars, ky_residual, metric_cov, metric_inv, xi_vector, Derivatives, KerrParams};
use proptest::prelude::*;

const T: f64 = 4.0;

fn ramp(a0: f64, a1: f64) -> ConnectionProfile {
    ConnectionProfile::ramp(T, a0, a1, DEFAULT_COLLAR).unwrap()
}

/// Abel-regularised `Σ_k sign(k + a) e^{-s|k + a|}`; the O(s) terms cancel,
/// so `s = 1e-3` is accurate to about 1e-7.
fn abel_eta(a: f64) -> f64 {
    let s = 1e-3;
    let mut sum = 0.0;
    for k in -60_000i64..=60_000 {
        let l = k as f64 + a;
        if l != 0.0 {
            sum += l.signum() * (-s * l.abs()).exp();
        }
    }
    sum
}

#[test]
fn schwarzschild_metric_at_r_four() {
    let th = 1.1;
    let g = metric_cov(1.0, 0.0, 4.0, th);
    assert_abs_diff_eq!(g[0][0], -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(g[1][1], 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(g[2][2], 16.0, epsilon = 1e-15);
    assert_abs_diff_eq!(g[3][3], 16.0 * th.sin().powi(2), epsilon = 1e-13);
    assert_eq!(g[0][3], 0.0);
}

#[test]
fn kerr_frame_dragging_component() {
    let g = metric_cov(1.0, 0.5, 3.0, FRAC_PI_2);
    assert_abs_diff_eq!(g[0][3], -1.0 / 3.0, epsilon = 1e-15);
}

#[test]
fn xi_and_kappa_at_zero_spin() {
    let k = KerrParams::new(1.0, 0.0).unwrap();
    let p = [0.0, 3.0, 0.9, 0.2];
    let xi = xi_vector(&k, &p, Derivatives::Analytic).unwrap();
    for (i, z) in xi.iter().enumerate() {
        assert_abs_diff_eq!(z.re, if i == 0 { 1.0 } else { 0.0 }, epsilon = 1e-12);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
    }
    let ks = kappa_scalars(&k, &p).unwrap();
    assert_abs_diff_eq!(ks.kappa1.re, -1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(ks.kappa1.im, 0.0, epsilon = 1e-15);
}

#[test]
fn radial_null_ray_moves_at_speed_f() {
    let k = KerrParams::new(1.0, 0.0).unwrap();
    for dir in [1.0, -1.0] {
        let r0 = 6.0;
        let f = 1.0 - 2.0 / r0;
        let s0 = GeodesicState::new(&k, [0.0, r0, FRAC_PI_2, 0.0], [1.0, dir * f, 0.0, 0.0], Causal::Null).unwrap();
        let tr = integrate_geodesic(&k, &s0, 3.0, &IntegratorOptions::default()).unwrap();
        assert!(tr.samples.len() > 2);
        for s in &tr.samples {
            let f = 1.0 - 2.0 / s.x[1];
            assert!((s.u[1] / s.u[0] - dir * f).abs() <= 1e-9, "r = {}", s.x[1]);
        }
    }
}

#[test]
fn photon_orbits_straddle_three_and_stay_circular() {
    let k = KerrParams::new(1.0, 0.5).unwrap();
    let closed = |s: f64| 2.0 * (1.0 + ((2.0 / 3.0) * (s * 0.5f64).acos()).cos());
    let pro = photon_orbit_radius(&k, (k.r_plus() + 1e-6, 3.0), OrbitSense::Prograde, 1e-13).unwrap();
    let retro = photon_orbit_radius(&k, (3.0, 5.0), OrbitSense::Retrograde, 1e-13).unwrap();
    assert!(pro < 3.0 && 3.0 < retro);
    assert_abs_diff_eq!(pro, closed(-1.0), epsilon = 1e-10);
    assert_abs_diff_eq!(retro, closed(1.0), epsilon = 1e-10);
    for (r0, sense) in [(pro, OrbitSense::Prograde), (retro, OrbitSense::Retrograde)] {
        let s0 = photon_orbit_state(&k, r0, sense).unwrap();
        let tr = integrate_geodesic(&k, &s0, 100.0, &IntegratorOptions::default()).unwrap();
        let dev = tr.samples.iter().map(|s| (s.x[1] - r0).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-4, "{sense:?}: {dev}");
        assert!(!tr.plunged);
    }
}

#[test]
fn eta_matches_the_abel_sum() {
    assert_abs_diff_eq!(abel_eta(0.3), 0.4, epsilon = 1e-6);
    for a in [0.3, 0.25, 0.5, 0.9, -1.7, 2.1] {
        assert_abs_diff_eq!(eta_invariant(a), abel_eta(a), epsilon = 1e-6);
    }
}

#[test]
fn index_examples() {
    let s = IndexSettings::default();
    let r = index_report(&ramp(0.3, 1.3), &s).unwrap();
    assert_eq!((r.aps_modes.len(), r.anti_aps_modes.len()), (1, 0));
    assert_abs_diff_eq!(r.rhs.value, 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.q_chiral, -2.0, epsilon = 1e-9);

    let r = index_report(&ramp(0.3, -1.7), &s).unwrap();
    assert!(r.aps_modes.is_empty());
    assert_eq!(r.anti_aps_modes, vec![0, 1]);
    assert_abs_diff_eq!(r.rhs.value, -2.0, epsilon = 1e-9);

    let r = index_report(&ramp(0.0, 1.0), &s).unwrap();
    assert_eq!((r.rhs.h0, r.rhs.h1), (1, 1));
    assert_abs_diff_eq!(r.rhs.value, 0.0, epsilon = 1e-9);
    assert_eq!(r.lhs, 0);

    let r = index_report(&ConnectionProfile::constant(T, 0.7).unwrap(), &s).unwrap();
    assert_eq!(r.lhs, 0);
    assert_abs_diff_eq!(r.q_chiral, 0.0, epsilon = 1e-12);
}

#[test]
fn index_over_flux_and_fractional_parts() {
    let s = IndexSettings::default();
    for frac in [0.0, 0.25, 0.5, 0.3] {
        for n in -3..=3 {
            let r = index_report(&ramp(frac, frac + n as f64), &s).unwrap();
            assert_eq!(r.lhs, r.rhs.value.round() as i64, "frac {frac} flux {n}");
            assert!(r.integrality_defect() <= 1e-9);
            assert!((r.q_left + r.q_right).abs() <= 1e-12);
            // equal fractional parts: boundary terms cancel
            assert_abs_diff_eq!(r.q_chiral, -2.0 * n as f64, epsilon = 1e-9);
        }
    }
}

/// Fractional part away from the guard band, or exactly zero.
fn endpoint() -> impl Strategy<Value = f64> {
    (-3i32..=3, prop_oneof![Just(0.0), 0.01f64..0.99]).prop_map(|(n, f)| n as f64 + f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn index_formula_holds(a0 in endpoint(), a1 in endpoint()) {
        let r = index_report(&ramp(a0, a1), &IndexSettings::default()).unwrap();
        prop_assert!(r.consistent(), "{a0} -> {a1}: lhs {} rhs {}", r.lhs, r.rhs.value);
        prop_assert!((r.q_left + r.q_right).abs() <= 1e-12);
    }

    #[test]
    fn index_is_homotopy_invariant(a0 in endpoint(), a1 in endpoint(), amp in -2.0f64..2.0, h in 1u32..4) {
        let s = IndexSettings::default();
        let p = ramp(a0, a1);
        let q = p.deformed(amp, h);
        prop_assert_eq!(q.endpoints(), p.endpoints());
        prop_assert_eq!(index_report(&q, &s).unwrap().lhs, index_report(&p, &s).unwrap().lhs);
    }

    /// Reversing time swaps the two spectral conditions. Zero modes of an
    /// integer endpoint sit on the anti-APS side in both directions, so they
    /// are set aside before comparing.
    #[test]
    fn time_reflection_swaps_kernels(a0 in endpoint(), a1 in endpoint()) {
        let s = IndexSettings::default();
        let (fwd, rev) = (ramp(a0, a1), ramp(a1, a0));
        let modes = |p: &ConnectionProfile, c| kernel_modes(p, &s, c).unwrap();
        let off_boundary = |v: Vec<i64>| -> Vec<i64> {
            v.into_iter().filter(|&k| k as f64 + a0 != 0.0 && k as f64 + a1 != 0.0).collect()
        };
        prop_assert_eq!(off_boundary(modes(&rev, SpectralCondition::AntiAps)), modes(&fwd, SpectralCondition::Aps));
        prop_assert_eq!(off_boundary(modes(&fwd, SpectralCondition::AntiAps)), modes(&rev, SpectralCondition::Aps));
    }

    #[test]
    fn eta_is_odd_and_periodic(a in -5.0f64..5.0) {
        prop_assume!((a - a.round()).abs() > 1e-9);
        prop_assert!((eta_invariant(a + 1.0) - eta_invariant(a)).abs() < 1e-12);
        prop_assert!((eta_invariant(-a) + eta_invariant(a)).abs() < 1e-12);
        prop_assert!(eta_invariant(a).abs() < 1.0);
    }

    #[test]
    fn inverse_metric_inverts(a in -0.99f64..0.99, dr in 0.05f64..20.0, th in 0.05f64..3.09) {
        let k = KerrParams::new(1.0, a).unwrap();
        let r = k.r_plus() + dr;
        let (g, gi) = (metric_cov(1.0, a, r, th), metric_inv(1.0, a, r, th));
        for i in 0..4 {
            for j in 0..4 {
                let e: f64 = (0..4).map(|k| g[i][k] * gi[k][j]).sum();
                let delta = f64::from(u8::from(i == j));
                let big = |row: &[f64; 4]| row.iter().map(|x| x.abs()).fold(0.0, f64::max);
                prop_assert!((e - delta).abs() < 1e-12 * (1.0 + big(&g[i]) * big(&gi[j])));
            }
        }
    }

    #[test]
    fn killing_yano_equation_holds(a in -0.99f64..0.99, dr in 0.1f64..20.0, th in 0.1f64..3.0) {
        let k = KerrParams::new(1.0, a).unwrap();
        let p = [0.0, k.r_plus() + dr, th, 0.0];
        prop_assert!(ky_residual(&k, &p, Derivatives::Analytic).unwrap() < 1e-10);
    }
}

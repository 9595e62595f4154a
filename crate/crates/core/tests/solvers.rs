mod common;

use common::{random_field, rel_diff, setup};
use std::f64::consts::PI;

use num_complex::Complex64;
use phaseret::solvers::{fit_amplitude, object_update_denominator};
use phaseret::{
    fit_observation_pixel, fit_observation_plane, make_transfer, object_update, AlgoParams, Propagator, RealGrid,
};
use proptest::prelude::*;

fn objective(o: f64, a: f64, m: f64, gamma: f64) -> f64 {
    0.5 * (o - a * a).powi(2) + (a - m).powi(2) / gamma
}

/// Coarse grid followed by a fine grid around the best coarse point.
fn grid_minimum(o: f64, m: f64, gamma: f64) -> f64 {
    let coarse = (0..=5000).map(|i| i as f64 * 1e-3);
    let best = coarse
        .min_by(|&a, &b| objective(o, a, m, gamma).total_cmp(&objective(o, b, m, gamma)))
        .unwrap();
    (-2000..=2000)
        .map(|i| (best + i as f64 * 1e-6).max(0.0))
        .map(|a| objective(o, a, m, gamma))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pixel_fit_beats_grid(o in -1.0f64..4.0, m in 0.0f64..3.0, arg in -PI..PI, log_gamma in -2.0f64..3.0) {
        let gamma = 10f64.powf(log_gamma);
        let p = Complex64::from_polar(m, arg);
        let u = fit_observation_pixel(o, p, gamma).unwrap();
        let got = 0.5 * (o - u.norm_sqr()).powi(2) + (u - p).norm_sqr() / gamma;
        prop_assert!(got <= grid_minimum(o, m, gamma) + 1e-9);
    }

    #[test]
    fn pixel_fit_keeps_phase(o in 0.0f64..4.0, m in 1e-3f64..3.0, arg in -PI..PI, gamma in 0.1f64..100.0) {
        let p = Complex64::from_polar(m, arg);
        let u = fit_observation_pixel(o, p, gamma).unwrap();
        if u.norm() > 0.0 {
            prop_assert!((u / u.norm() - p / m).norm() <= 1e-12);
        }
        prop_assert!(fit_amplitude(o, m, gamma) >= 0.0);
    }

    #[test]
    fn consistent_pixel_is_fixed(m in 0.0f64..3.0, arg in -PI..PI, gamma in 0.1f64..100.0) {
        let p = Complex64::from_polar(m, arg);
        let u = fit_observation_pixel(m * m, p, gamma).unwrap();
        prop_assert!((u - p).norm() <= 1e-10 * (1.0 + m));
    }
}

#[test]
fn plane_fit_matches_pixel_fit() {
    let u_half = random_field(1, 8, 12);
    let lambda = random_field(2, 8, 12).scaled(Complex64::new(0.1, 0.0));
    let observed = RealGrid::from_fn(8, 12, |r, c| 0.1 * (r * 12 + c) as f64 - 0.5).unwrap();
    let fitted = fit_observation_plane(&observed, &u_half, &lambda, 7.0).unwrap();
    for i in 0..u_half.len() {
        let p = u_half.samples()[i] - lambda.samples()[i];
        let want = fit_observation_pixel(observed.data()[i], p, 7.0).unwrap();
        assert_eq!(fitted.samples()[i], want);
    }
}

#[test]
fn object_update_inverts_consistent_planes() {
    let s = setup(16, 16, 3);
    let transfers: Vec<_> = s.distances().iter().map(|&z| make_transfer(&s, z).unwrap()).collect();
    let u0 = random_field(5, 16, 16);
    let planes: Vec<_> = transfers
        .iter()
        .map(|h| phaseret::propagate_forward(&u0, h).unwrap())
        .collect();
    let zero = phaseret::WaveField::zeros(16, 16, u0.pitch()).unwrap();
    let params = AlgoParams::with_defaults(vec![0.05; 3], 1);
    let got = object_update(
        &Propagator::new(16, 16),
        &planes,
        &vec![zero; 3],
        &u0,
        &transfers,
        &params,
    )
    .unwrap();
    assert!(rel_diff(&got, &u0) <= 1e-12);
    let den = object_update_denominator(&transfers, &params).unwrap();
    let expected = 3.0 * params.plane_weight(0) + 1.0 / params.xi;
    assert!(den.iter().all(|d| (d - expected).abs() <= 1e-9 * expected));
}

#[test]
fn object_update_rejects_plane_count_mismatch() {
    let s = setup(8, 8, 2);
    let transfers: Vec<_> = s.distances().iter().map(|&z| make_transfer(&s, z).unwrap()).collect();
    let u = random_field(1, 8, 8);
    let params = AlgoParams::with_defaults(vec![0.05; 2], 1);
    let r = object_update(
        &Propagator::new(8, 8),
        std::slice::from_ref(&u),
        &[u.clone(), u.clone()],
        &u,
        &transfers,
        &params,
    );
    assert!(r.is_err());
}

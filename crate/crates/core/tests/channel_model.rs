use std::f64::consts::PI;

use nalgebra::DMatrix;
use tsb_core::channel_model::{
    build_correlation_matrix, channel_rng, draw_channel, matrix_sqrt_psd, place_users, standard_complex_normal,
    CorrelationMatrix, UeGeometry,
};
use tsb_core::{CMatrix, C64};

fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

/// Composite trapezoid with `nodes` points for one entry of the one-ring matrix.
fn trapezoid_entry(phi: f64, dphi: f64, lag: i64, nodes: usize) -> C64 {
    let (lo, hi) = (phi - dphi / 2.0, phi + dphi / 2.0);
    let h = (hi - lo) / (nodes - 1) as f64;
    let f = |t: f64| C64::from_polar(1.0, PI * lag as f64 * t.cos());
    let mut acc = (f(lo) + f(hi)) * 0.5;
    for j in 1..nodes - 1 {
        acc += f(lo + j as f64 * h);
    }
    acc * h / dphi
}

#[test]
fn quadrature_matches_dense_trapezoid() {
    let (phi, dphi) = (PI / 2.0, PI / 10.0);
    let geom = UeGeometry::new(phi, dphi, 1.0).unwrap();
    let theta = build_correlation_matrix(&geom, 0.5, 4).unwrap();
    let mut worst = 0.0f64;
    for j in 0..4 {
        for i in 0..4 {
            let reference = trapezoid_entry(phi, dphi, j as i64 - i as i64, 10_000);
            worst = worst.max((theta.theta()[(j, i)] - reference).norm());
        }
    }
    assert!(worst <= 1e-8, "max elementwise difference {worst:.3e}");
}

#[test]
fn correlation_invariants_over_the_arc() {
    let n = 32;
    for g in place_users(9, PI / 6.0, 5.0 * PI / 6.0, PI / 10.0).unwrap() {
        let geom = UeGeometry::new(g.phi_center, g.delta_phi, 2.5).unwrap();
        let c = build_correlation_matrix(&geom, 0.5, n).unwrap();
        let t = c.theta();
        assert_eq!(t, &t.adjoint());
        for d in 0..n {
            assert_eq!(t[(d, d)], C64::new(2.5, 0.0));
        }
        let eig = t.clone().symmetric_eigenvalues();
        let lmax = eig.max();
        assert!(eig.min() >= -1e-10 * lmax);
        assert!(lmax <= n as f64 * 2.5 * (1.0 + 1e-12));
    }
}

#[test]
fn sqrt_reconstructs_random_psd() {
    let mut rng = channel_rng(11, 0, 0);
    for n in [3, 10, 40] {
        let a = CMatrix::from_fn(n, n, |_, _| standard_complex_normal(&mut rng));
        let theta = &a * a.adjoint();
        let m = matrix_sqrt_psd(&theta).unwrap();
        assert!(rel_frobenius(&(&m * m.adjoint()), &theta) <= 1e-8);
    }
}

#[test]
fn sqrt_of_rank_deficient_matrix() {
    let mut rng = channel_rng(12, 0, 0);
    let a = CMatrix::from_fn(16, 3, |_, _| standard_complex_normal(&mut rng));
    let theta = &a * a.adjoint();
    let m = matrix_sqrt_psd(&theta).unwrap();
    assert!(rel_frobenius(&(&m * m.adjoint()), &theta) <= 1e-8);
}

fn sample_covariance(sqrt_theta: &CMatrix, draws: usize, seed: u64) -> CMatrix {
    let n = sqrt_theta.nrows();
    let mut acc = CMatrix::zeros(n, n);
    let mut rng = channel_rng(seed, 0, 0);
    for _ in 0..draws {
        let h = draw_channel(sqrt_theta, &mut rng);
        acc.gerc(C64::new(1.0, 0.0), &h, &h, C64::new(1.0, 0.0));
    }
    acc / C64::new(draws as f64, 0.0)
}

#[test]
fn monte_carlo_covariance_of_identity() {
    let eye = CMatrix::identity(8, 8);
    let cov = sample_covariance(&eye, 10_000, 5);
    let err = rel_frobenius(&cov, &eye);
    assert!(err <= 0.05, "relative error {err:.4}");
}

#[test]
fn monte_carlo_covariance_of_one_ring() {
    let geom = UeGeometry::new(1.2, PI / 10.0, 1.0).unwrap();
    let c = build_correlation_matrix(&geom, 0.5, 16).unwrap();
    let cov = sample_covariance(c.sqrt_theta().unwrap(), 10_000, 6);
    let err = rel_frobenius(&cov, c.theta());
    assert!(err <= 0.10, "relative error {err:.4}");
}

#[test]
fn component_variances_are_one_half() {
    let mut rng = channel_rng(3, 1, 4);
    let n = 40_000;
    let (mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let z = standard_complex_normal(&mut rng);
        re2 += z.re * z.re;
        im2 += z.im * z.im;
        cross += z.re * z.im;
    }
    let n = n as f64;
    assert!((re2 / n - 0.5).abs() < 0.02);
    assert!((im2 / n - 0.5).abs() < 0.02);
    assert!((cross / n).abs() < 0.02);
}

#[test]
fn streams_are_distinct_per_trial_and_user() {
    let eye = CMatrix::identity(4, 4);
    let a = draw_channel(&eye, &mut channel_rng(1, 0, 0));
    let b = draw_channel(&eye, &mut channel_rng(1, 0, 1));
    let c = draw_channel(&eye, &mut channel_rng(1, 1, 0));
    let d = draw_channel(&eye, &mut channel_rng(2, 0, 0));
    assert_eq!(a, draw_channel(&eye, &mut channel_rng(1, 0, 0)));
    assert_ne!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, d);
}

#[test]
fn from_matrix_accepts_general_psd() {
    let theta = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0])).map(|x| C64::new(x, 0.0));
    let c = CorrelationMatrix::from_matrix(theta).unwrap();
    let s = c.sqrt_theta().unwrap();
    assert!((s[(0, 0)].re - 2.0).abs() < 1e-12);
    assert!((s[(1, 1)].re - 3.0).abs() < 1e-12);
}

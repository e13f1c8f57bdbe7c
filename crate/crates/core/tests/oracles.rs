//! Special functions against independent references.

use hermite_wave::specfun::{gamma, hermite_jet, hermite_z, kummer_m, kummer_u};
use statrs::function::erf::erf;
use statrs::function::gamma::gamma as ref_gamma;

mod common;
use common::{dopri, initial_values, integrate_hermite};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn hermite_solutions_match_integrator() {
    for lambda in [-2.0, -1.0, 0.6, 2.0] {
        for (c1, c2) in [(1.0, 0.0), (0.0, 1.0), (1.0, 2.0)] {
            let (z0, dz0) = initial_values(lambda, c1, c2);
            for i in 0..=29 {
                let zeta = 0.1 + 0.1 * i as f64;
                let z = hermite_z(lambda, c1, c2, zeta).unwrap();
                let reference = integrate_hermite(lambda, z0, dz0, zeta);
                let scale = reference.abs().max(1.0);
                assert!(
                    (z - reference).abs() < 1e-9 * scale,
                    "lambda {lambda}, C=({c1},{c2}), zeta {zeta}: {z} vs {reference}"
                );
            }
        }
    }
}

#[test]
fn jets_satisfy_the_equation() {
    for lambda in [-2.0, -1.0, 0.6, 2.0] {
        for i in 0..=29 {
            let zeta = 0.1 + 0.1 * i as f64;
            let j = hermite_jet(lambda, 1.0, 2.0, zeta).unwrap();
            assert!(j.residual(lambda, zeta).abs() < 1e-8, "lambda {lambda}, zeta {zeta}");
        }
    }
}

/// erf by its Maclaurin series, independent of the library.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn kummer_closed_forms() {
    let e1 = std::f64::consts::E - 1.0;
    assert!(rel(kummer_m(1.0, 2.0, 1.0).unwrap(), e1) < 1e-10);
    let expected = std::f64::consts::PI.sqrt() * erf_series(1.0) / 2.0;
    // statrs' erf is good to about 1e-11 here; the series is the reference.
    assert!((erf_series(1.0) - erf(1.0)).abs() < 1e-10);
    assert!((erf_series(1.0) - 0.8427007929497149).abs() < 1e-15);
    assert!(rel(kummer_m(0.5, 1.5, -1.0).unwrap(), expected) < 1e-10);
    assert!((kummer_m(0.5, 1.5, -1.0).unwrap() - 0.7468241328).abs() < 1e-10);
    for x in [-3.0, -0.5, 0.0, 0.7, 4.0] {
        let m = kummer_m(1.0, 2.0, x).unwrap();
        let closed = if x == 0.0 { 1.0 } else { x.exp_m1() / x };
        assert!(rel(m, closed) < 1e-12, "x = {x}");
    }
}

#[test]
fn kummer_u_identities() {
    assert!((kummer_u(0.5, 1.5, 4.0).unwrap() - 0.5).abs() < 1e-9);
    assert!(((kummer_u(0.5, 1.5, 1e4).unwrap() * 100.0) - 1.0).abs() < 1e-6);
    assert!(kummer_u(1.0, 2.0, 1.0).is_err());
    for (a, x) in [(0.3, 0.5), (1.7, 2.0), (2.5, 9.0)] {
        assert!(rel(kummer_u(a, a + 1.0, x).unwrap(), x.powf(-a)) < 1e-9, "a {a}, x {x}");
    }
}

#[test]
fn contiguous_relation() {
    for ia in 0..=20 {
        let a = -2.0 + 0.25 * ia as f64 + 0.01;
        for b in [0.5, 1.5, 2.5] {
            for ix in 0..=20 {
                let x = -10.0 + ix as f64;
                let m = kummer_m(a, b, x).unwrap();
                let r = (b - a) * kummer_m(a - 1.0, b, x).unwrap() + (2.0 * a - b + x) * m
                    - a * kummer_m(a + 1.0, b, x).unwrap();
                assert!(r.abs() < 1e-9 * m.abs().max(1.0), "a {a}, b {b}, x {x}: {r}");
            }
        }
    }
}

#[test]
fn kummer_transform_consistency() {
    for a in [-1.5, -0.3, 0.65, 1.2, 2.8] {
        for b in [0.5, 1.5, 2.5] {
            for ix in 0..=20 {
                let x = -10.0 + ix as f64;
                let m = kummer_m(a, b, x).unwrap();
                let t = x.exp() * kummer_m(b - a, b, -x).unwrap();
                assert!((m - t).abs() < 1e-10 * m.abs().max(1e-12), "a {a}, b {b}, x {x}");
            }
        }
    }
}

#[test]
fn gamma_against_reference() {
    for i in 1..200 {
        let x = -4.95 + 0.05 * i as f64 + 0.003;
        assert!(rel(gamma(x), ref_gamma(x)) < 1e-12, "x = {x}");
    }
}

#[test]
fn integrator_self_check() {
    let y = dopri(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, 1e-12);
    assert!(rel(y[0], 2f64.exp()) < 1e-10);
}

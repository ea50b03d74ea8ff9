use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use umbilic_core::ode::{self, Options};
use umbilic_core::special::{elliptic_k, jacobi_am, jacobi_cn, jacobi_sn};

/// s(φ) = ∫₀^φ dt / √(1 − m sin²t) by double-exponential quadrature.
fn incomplete_f(phi: f64, m: f64) -> f64 {
    quadrature::integrate(|t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, 1e-15).integral
}

fn am_by_rk(u: f64, m: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    // second-order form avoids the square-root branch at turning points
    let sol = ode::solve(|_, y: &[f64; 2]| [y[1], -m * y[0].sin() * y[0].cos()], 0.0, [0.0, 1.0], u, &Options::tight());
    sol.unwrap().y_end()[0]
}

#[test]
fn k_matches_quadrature() {
    for m in [-5.0, -0.5, 0.0, 0.09, 0.36, 0.81, 0.999] {
        let q = incomplete_f(FRAC_PI_2, m);
        assert!((elliptic_k(m).unwrap() - q).abs() < 1e-12 * q, "m = {m}");
    }
}

#[test]
fn quarter_period_identity() {
    for m in [0.1, 0.36, 0.7, 0.95] {
        let k = elliptic_k(m).unwrap();
        assert!((jacobi_am(k, m).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }
}

#[test]
fn am_inverts_incomplete_integral() {
    for m in [-2.0f64, 0.36, 0.9, 4.0] {
        for phi in [0.2f64, 0.4, 1.0] {
            let phi = if m > 1.0 { phi * (1.0 / m.sqrt()).asin() } else { phi };
            let u = incomplete_f(phi, m);
            assert!((jacobi_am(u, m).unwrap() - phi).abs() < 1e-12, "m = {m}, φ = {phi}");
        }
    }
}

#[test]
fn large_parameter_uses_integration() {
    for m in [-2e3, 5e3] {
        for u in [0.01, 0.05, 0.3] {
            let (x, y) = (jacobi_am(u, m).unwrap(), am_by_rk(u, m));
            assert!((x - y).abs() < 1e-9, "m = {m}, u = {u}: {x} vs {y}");
        }
    }
}

#[test]
fn pythagorean_identity_on_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let s: f64 = rng.gen_range(-20.0..20.0);
        let m: f64 = rng.gen_range(-3.0..3.0);
        let (sn, cn) = (jacobi_sn(s, m).unwrap(), jacobi_cn(s, m).unwrap());
        assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn am_agrees_with_direct_integration(m in -4.0f64..0.99, x in -1.0f64..1.0) {
        let k = elliptic_k(m).unwrap();
        let s = 4.0 * k * x;
        prop_assert!((jacobi_am(s, m).unwrap() - am_by_rk(s, m)).abs() < 1e-9);
    }

    #[test]
    fn am_is_odd(m in -5.0f64..5.0, s in 0.0f64..10.0) {
        prop_assert!((jacobi_am(-s, m).unwrap() + jacobi_am(s, m).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn am_quasi_periodic(m in 0.0f64..0.99, s in -5.0f64..5.0) {
        let k = elliptic_k(m).unwrap();
        let d = jacobi_am(s + 2.0 * k, m).unwrap() - jacobi_am(s, m).unwrap() - PI;
        prop_assert!(d.abs() < 1e-10);
    }
}

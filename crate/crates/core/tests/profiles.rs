use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use umbilic_core::ode::deriv5_2;
use umbilic_core::profile::*;
use umbilic_core::special::{elliptic_k, jacobi_am};

const TOL: f64 = 1e-12;

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::integrate(f, a, b, 1e-14).integral
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

fn check_arclength(c: &GeneratingCurve) {
    let (lo, hi) = c.s_range;
    for s in grid(lo, hi, 401) {
        let j = c.jet(s);
        assert!((j.drho.powi(2) + j.dt.powi(2) - 1.0).abs() < 1e-8);
        assert!((j.theta.cos() - j.drho).abs() < 1e-8 && (j.theta.sin() - j.dt).abs() < 1e-8);
    }
}

#[test]
fn a1_closed_form_at_origin() {
    let c = s2xr_profile(1.0, (-10.0, 10.0), TOL).unwrap();
    assert!(c.is_closed_form());
    let j = c.jet(0.0);
    assert_eq!((j.rho, j.t), (0.0, 0.0));
    assert!((j.drho - 1.0).abs() < 1e-15);
}

#[test]
fn closed_forms_match_integration() {
    let range = (-10.0, 10.0);
    let pairs = [
        (s2xr_profile(1.0, range, TOL).unwrap(), s2xr_a1_integrated(range, TOL).unwrap()),
        (h2xr_parabolic_profile(range), h2xr_parabolic_integrated(range, TOL).unwrap()),
    ];
    for (closed, integ) in &pairs {
        for s in grid(-10.0, 10.0, 2001) {
            let (a, b) = (closed.state(s), integ.state(s));
            assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8, "s = {s}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn closed_forms_pointwise() {
    let a1 = s2xr_profile(1.0, (-10.0, 10.0), TOL).unwrap();
    let par = h2xr_parabolic_profile((-10.0, 10.0));
    for s in grid(-10.0, 10.0, 201) {
        let [r, t, _] = a1.state(s);
        assert!((r - (FRAC_PI_2 - 2.0 * (-s).exp().atan())).abs() < 1e-12);
        assert!((t - s.cosh().ln()).abs() < 1e-12);
        let [r, t, th] = par.state(s);
        assert!((r + s.cosh().ln()).abs() < 1e-12);
        assert!((t - (2.0 * s.exp().atan() - FRAC_PI_2)).abs() < 1e-12);
        // θ' = sin θ
        assert!((par.jet(s).dtheta - th.sin()).abs() < 1e-12);
        assert!((par.jet(s).drho + s.tanh()).abs() < 1e-12);
    }
}

#[test]
fn parabolic_asymptotics_and_parity() {
    let par = h2xr_parabolic_profile((-40.0, 40.0));
    assert!((par.state(30.0)[0] + 30.0 - 2f64.ln()).abs() < 1e-12);
    for s in grid(0.0, 20.0, 50) {
        assert!((par.state(s)[1] + par.state(-s)[1]).abs() < 1e-14);
        assert_eq!(par.state(s)[0], par.state(-s)[0]);
    }
    assert_eq!(par.find_event(ProfileEvent::RhoPrimeZero, 1e-14).unwrap(), 0.0);
}

#[test]
fn a1_event_inverts_closed_form() {
    let c = s2xr_profile(1.0, (-5.0, 5.0), TOL).unwrap();
    let v = FRAC_PI_2 - 2.0 * (-1.0f64).exp().atan();
    assert!((c.find_event(ProfileEvent::RhoHits(v), 1e-15).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn half_period_s1_matches_quadrature() {
    for a in [0.3, 0.6, 0.9] {
        let m = a * a;
        let oracle = quad(|r| 1.0 / (1.0 - m * r.sin().powi(2)).sqrt(), 0.0, PI);
        let c = s2xr_profile(a, (-1.0, 2.0 * oracle), TOL).unwrap();
        let s1 = c.periods.s1.unwrap();
        assert!((s1 - oracle).abs() < 1e-8, "a = {a}");
        assert!((s1 - 2.0 * elliptic_k(m).unwrap()).abs() < 1e-8);
        assert!((jacobi_am(s1, m).unwrap() - PI).abs() < 1e-10);
    }
}

#[test]
fn closure_and_periodicity_a_lt_1() {
    for a in [0.3, 0.6, 0.9] {
        let s1 = 2.0 * elliptic_k(a * a).unwrap();
        let c = s2xr_profile(a, (-2.0 * s1, 4.0 * s1), TOL).unwrap();
        for s in grid(-2.0 * s1, 2.0 * s1, 301) {
            let (p, q) = (c.state(s), c.state(s + 2.0 * s1));
            assert!((q[0] - p[0] - 2.0 * PI).abs() < 1e-8);
            assert!((q[1] - p[1]).abs() < 1e-8);
        }
    }
}

#[test]
fn rho_is_jacobi_amplitude() {
    let a: f64 = 0.6;
    let s1 = 2.0 * elliptic_k(a * a).unwrap();
    let c = s2xr_profile(a, (-2.0 * s1, 2.0 * s1), TOL).unwrap();
    for s in grid(-2.0 * s1, 2.0 * s1, 1001) {
        assert!((c.state(s)[0] - jacobi_am(s, a * a).unwrap()).abs() < 1e-8);
    }
    check_arclength(&c);
}

#[test]
fn delta_a_matches_quadrature() {
    for a in [1.5f64, 2.0, 3.0] {
        let l = (1.0 / a).asin();
        // sin ρ = sin φ / a removes the endpoint singularity
        let oracle = quad(|p| 1.0 / (a * a - p.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2);
        let c = s2xr_profile(a, (-8.0 * oracle, 8.0 * oracle), TOL).unwrap();
        let d = c.find_event(ProfileEvent::RhoPrimeZero, 1e-15).unwrap();
        assert!((d - oracle).abs() < 1e-8, "a = {a}");
        assert_eq!(c.periods.delta, Some(d));
        assert!((c.state(d)[0] - l).abs() < 1e-10);
        check_four_delta_symmetry(&c, d);
    }
    let c = s2xr_profile(2.0, (-3.0, 3.0), TOL).unwrap();
    let d = c.periods.delta.unwrap();
    assert!((c.state(d)[0] - PI / 6.0).abs() < 1e-12);
}

fn check_four_delta_symmetry(c: &GeneratingCurve, d: f64) {
    let td = c.state(d)[1];
    for s in grid(-3.0 * d, 3.0 * d, 121) {
        let (p, q) = (c.state(s), c.state(s + 4.0 * d));
        assert!((q[0] - p[0]).abs() < 1e-8 && (q[1] - p[1]).abs() < 1e-8);
        let r = c.state(2.0 * d - s);
        assert!((r[1] - (2.0 * td - p[1])).abs() < 1e-8);
    }
}

#[test]
fn elliptic_b_family() {
    for b in [0.5f64, 1.0, 2.0] {
        let l = (1.0 / b).asinh();
        // sinh ρ = sin φ / b
        let oracle = quad(|p| 1.0 / (b * b + p.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2);
        let c = h2xr_elliptic_profile(b, (-8.0 * oracle, 8.0 * oracle), TOL).unwrap();
        let j0 = c.jet(0.0);
        assert_eq!(j0.rho, 0.0);
        assert!((j0.drho - 1.0).abs() < 1e-15);
        let d = c.periods.delta.unwrap();
        assert!((d - oracle).abs() < 1e-8, "b = {b}");
        assert!((c.state(d)[0] - l).abs() < 1e-10);
        check_four_delta_symmetry(&c, d);
        check_arclength(&c);
    }
    let c = h2xr_elliptic_profile(1.0, (-3.0, 3.0), TOL).unwrap();
    assert!((c.state(c.periods.delta.unwrap())[0] - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-10);
}

#[test]
fn hyperbolic_c_family() {
    for c in [0.25f64, 0.5, 0.75] {
        let g = h2xr_hyperbolic_profile(c, (-20.0, 20.0), TOL).unwrap();
        assert!((g.jet(0.0).drho - (1.0 - c * c).sqrt()).abs() < 1e-15);
        let s0 = g.periods.delta.unwrap();
        let rmax = (1.0 / c).acosh();
        assert!((g.state(s0)[0] - rmax).abs() < 1e-10, "c = {c}");
        // sinh ρ = sinh(ρ_max) sin φ
        let oracle = quad(|p| 1.0 / (c * c + (1.0 - c * c) * p.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2);
        assert!((s0 - oracle).abs() < 1e-8);
        let t0 = g.state(s0)[1];
        for s in grid(-s0, s0, 41) {
            let (p, q) = (g.state(s), g.state(s + 4.0 * s0));
            assert!((q[0] - p[0]).abs() < 1e-8);
            assert!((q[1] - p[1] - 4.0 * t0).abs() < 1e-8);
        }
        check_arclength(&g);
    }
}

#[test]
fn second_order_residuals() {
    // ρ'' = −a² sin ρ cos ρ, −b² cosh ρ sinh ρ, −c² cosh ρ sinh ρ
    // the FD second derivative sees the interpolant's error curvature (≈ err/step²), hence rtol 1e-13
    // (curve, ρ'' law, FD step scaled to the profile's frequency)
    let cases: Vec<(GeneratingCurve, Box<dyn Fn(f64) -> f64>, f64)> = vec![
        (s2xr_profile(0.6, (-6.0, 6.0), 1e-13).unwrap(), Box::new(|r: f64| -0.36 * r.sin() * r.cos()), 2e-3),
        (s2xr_profile(3.0, (-6.0, 6.0), 1e-13).unwrap(), Box::new(|r: f64| -9.0 * r.sin() * r.cos()), 6e-4),
        (h2xr_elliptic_profile(0.5, (-6.0, 6.0), 1e-13).unwrap(), Box::new(|r: f64| -0.25 * r.sinh() * r.cosh()), 2e-3),
        (h2xr_hyperbolic_profile(0.5, (-6.0, 6.0), 1e-13).unwrap(), Box::new(|r: f64| -0.25 * r.sinh() * r.cosh()), 2e-3),
    ];
    for (i, (c, rhs, h)) in cases.iter().enumerate() {
        let h = *h;
        for s in grid(-5.0, 5.0, 101) {
            let rpp = deriv5_2(|x| c.state(x)[0], s, h);
            assert!((rpp - rhs(c.state(s)[0])).abs() < 1e-8, "case {i} s = {s}: {}", rpp - rhs(c.state(s)[0]));
        }
    }
}

#[test]
fn sol_profile_basics() {
    let p1 = sol_profile(1.0, TOL).unwrap();
    assert_eq!(p1.z_max(), 0.0);
    let p4 = sol_profile(4f64.exp(), TOL).unwrap();
    assert_eq!(p4.z_max(), 1.0);
    // y_a = ∫_{−∞}^0 dz / (e^{−z} √(e^{−4z} − 1)); e^{2z} = sin φ gives ½∫₀^{π/2} √(sin φ) dφ
    let oracle = 0.5 * quad(|p: f64| p.sin().sqrt(), 0.0, FRAC_PI_2);
    assert!((p1.y_a - oracle).abs() < 1e-8, "{} vs {oracle}", p1.y_a);
    for p in [&p1, &p4] {
        let smax = p.sigma_at_z(p.z_max() - 6.0).unwrap();
        for s in grid(-smax, smax, 201) {
            let fi = p.first_integral_residual(s);
            assert!(fi < 1e-9, "σ = {s}: {fi}, z = {}", p.state(s)[1]);
            let r = p.ode_residual(s);
            assert!(r.abs() < 1e-8, "σ = {s}: {r}, z = {}", p.state(s)[1]);
        }
        for y in grid(0.0, 0.9 * p.y_a, 40) {
            assert!((p.z_of_y(y).unwrap() - p.z_of_y(-y).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn csv_has_header_and_full_precision() {
    let c = h2xr_parabolic_profile((-1.0, 1.0));
    let mut buf = Vec::new();
    c.write_csv(&mut buf, 5).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "s,rho,t,theta");
    assert_eq!(lines.len(), 6);
    let v: f64 = lines[3].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(v, c.state(0.0)[1]);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(s2xr_profile(0.0, (-1.0, 1.0), TOL).is_err());
    assert!(h2xr_elliptic_profile(-1.0, (-1.0, 1.0), TOL).is_err());
    assert!(h2xr_hyperbolic_profile(1.0, (-1.0, 1.0), TOL).is_err());
    assert!(sol_profile(0.0, TOL).is_err());
    let c = s2xr_profile(0.6, (-1.0, 1.0), TOL).unwrap();
    assert_eq!(c.find_event(ProfileEvent::RhoHits(10.0), 1e-12), Err(ProfileError::NotBracketed));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotational_profiles_have_odd_rho_even_t(a in 0.2f64..4.0, s in 0.0f64..4.0) {
        let c = s2xr_profile(a, (-4.0, 4.0), TOL).unwrap();
        let (p, q) = (c.state(s), c.state(-s));
        prop_assert!((p[0] + q[0]).abs() < 1e-8);
        prop_assert!((p[1] - q[1]).abs() < 1e-8);
    }

    #[test]
    fn arclength_holds_everywhere(b in 0.2f64..3.0, s in -4.0f64..4.0) {
        let c = h2xr_elliptic_profile(b, (-4.0, 4.0), TOL).unwrap();
        let j = c.jet(s);
        prop_assert!((j.drho.powi(2) + j.dt.powi(2) - 1.0).abs() < 1e-12);
        // first integrals: ρ'² = 1 − b² sinh²ρ, t' = b sinh ρ
        prop_assert!((j.dt - b * j.rho.sinh()).abs() < 1e-8);
    }
}

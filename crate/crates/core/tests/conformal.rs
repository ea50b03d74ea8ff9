use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;
use umbilic_core::conformal::*;
use umbilic_core::geometry::{IsometrySpec, ModelGeometry, M3, V3};
use umbilic_core::profile::{sol_profile, Family, FamilySpec};
use umbilic_core::surface::families::{family_patch, slice_patch};
use umbilic_core::surface::{umbilicity_defect, SurfacePatch};

fn family(f: Family, p: Option<f64>) -> SurfacePatch {
    family_patch(&FamilySpec::new(f, p).unwrap(), 1e-12).unwrap().patch
}

#[test]
fn s2xr_map_examples() {
    assert!((s2xr_to_r3(&V3::z(), 0.0) - V3::z()).norm() == 0.0);
    assert!((s2xr_to_r3(&V3::x(), 2f64.ln()) - V3::new(2.0, 0.0, 0.0)).norm() < 1e-15);
    // chart origin is the north pole
    assert_eq!(S2xRToR3.eval(&V3::new(0.0, 0.0, 0.0)).unwrap(), V3::z());
}

#[test]
fn product_maps_are_conformal() {
    let pts = box_points([-0.8, -0.8, -1.0], [0.8, 0.8, 1.0], 8);
    let r = conformality_check(&S2xRToR3, &pts, 1e-3);
    assert!(r.failures.is_empty());
    assert!(r.max_off_proportionality < 1e-8, "{}", r.max_off_proportionality);
    assert!(r.max_factor_error.unwrap() < 1e-8);

    let pts = box_points([-0.6, -0.6, FRAC_PI_2 - 1.0], [0.6, 0.6, FRAC_PI_2 + 1.0], 8);
    let r = conformality_check(&H2xIToH3::default(), &pts, 1e-3);
    assert!(r.failures.is_empty());
    assert!(r.max_off_proportionality < 1e-8, "{}", r.max_off_proportionality);
    assert!(r.max_factor_error.unwrap() < 1e-8);
}

#[test]
fn conformality_controls() {
    let pts = box_points([-0.5, -0.5, -0.5], [0.5, 0.5, 0.5], 7);
    let id = Linear { space: ModelGeometry::s2xr(), m: M3::identity() };
    let r = conformality_check(&id, &pts, 1e-3);
    assert!(r.samples.iter().all(|s| (s.phi - 1.0).abs() < 1e-12));
    let shear = Linear { space: ModelGeometry::r3(), m: M3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0) };
    assert!(conformality_check(&shear, &pts, 1e-3).max_off_proportionality > 0.1);
}

#[test]
fn h3_map_against_closed_form() {
    // the normal geodesic from (0, y, z) is the circle x² + Z² = z²; at distance d it
    // reaches (z tanh d, y, z sech d), and d = ln tan(t/2) gives (−z cos t, y, z sin t)
    for (y, z) in [(0.0, 1.0), (0.4, 0.3), (-1.2, 2.5)] {
        for t in [0.3, 1.0, FRAC_PI_2, 2.2, 2.9] {
            let img = h2xi_to_h3(&V3::new(0.0, y, z), t, 1e-13).unwrap();
            let want = V3::new(-z * t.cos(), y, z * t.sin());
            assert!((img.point - want).norm() < 1e-10 * (1.0 + z), "{y} {z} {t}");
            assert!(!img.clipped);
        }
        let p = V3::new(0.0, y, z);
        assert!((h2xi_to_h3(&p, FRAC_PI_2, 1e-13).unwrap().point - p).norm() < 1e-15);
        // small-ε: signed distance ln tan(π/4 + ε/2) = ε + O(ε³) along N = z∂x
        let eps = 1e-3;
        let q = h2xi_to_h3(&p, FRAC_PI_2 + eps, 1e-13).unwrap().point;
        assert!((q - (p + V3::new(z * eps, 0.0, 0.0))).norm() < z * eps * eps);
    }
    assert!(h2xi_to_h3(&V3::new(0.0, 0.0, 1.0), 0.0, 1e-13).unwrap().clipped);
    assert!(h2xi_to_h3(&V3::new(0.1, 0.0, 1.0), 1.0, 1e-13).is_err());
}

#[test]
fn disk_to_half_plane_is_an_isometry_onto_the_plane() {
    // chart origin ↦ i, and the hyperbolic distance from the origin is preserved
    let (y, z) = h2_half_plane(0.0, 0.0);
    assert!(y.abs() < 1e-15 && (z - 1.0).abs() < 1e-15);
    for (x, yy) in [(0.3, 0.1), (-0.5, 0.4), (0.0, -0.7)] {
        let r = f64::hypot(x, yy);
        let d_disk = 2.0 * r.atanh();
        let (a, b) = h2_half_plane(x, yy);
        let d_half = (1.0 + (a * a + (b - 1.0).powi(2)) / (2.0 * b)).acosh();
        assert!((d_disk - d_half).abs() < 1e-13);
    }
}

#[test]
fn parabolic_surface_maps_to_a_horosphere() {
    let sp = family(Family::H2xRParabolic, None);
    // S_P has t ∈ (−π/2, π/2); shift into (0, π)
    let shifted = sp.with_isometry(&IsometrySpec::VerticalShift { c: FRAC_PI_2 }).unwrap();
    let img = pushforward(Arc::new(H2xIToH3::default()), &shifted, 1e-3);
    let d = umbilicity_defect(&img, 32, 32);
    assert_eq!(d.failed, 0);
    assert!(d.max < 1e-5, "{:?}", d);
    for (u, v) in img.grid(9, 9) {
        let (l1, l2) = img.principal_curvatures(u, v).unwrap();
        assert!((l1.abs() - 1.0).abs() < 1e-4 && (l2.abs() - 1.0).abs() < 1e-4, "{l1} {l2}");
    }
}

#[test]
fn slices_map_to_equidistant_surfaces() {
    let map: Arc<dyn ConformalMap> = Arc::new(H2xIToH3::default());
    for t in [0.6, 1.2, FRAC_PI_2, 2.5] {
        let img = pushforward(map.clone(), &slice_patch(ModelGeometry::h2xr(), t, 0.6), 1e-3);
        let ls: Vec<f64> = img.grid(12, 12).into_iter().flat_map(|(u, v)| {
            let (a, b) = img.principal_curvatures(u, v).unwrap();
            [a, b]
        }).collect();
        let mean = ls.iter().sum::<f64>() / ls.len() as f64;
        let var = ls.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / ls.len() as f64;
        assert!(var < 1e-8, "t = {t}: {var:e}");
        // tanh(ln tan(t/2)) = −cos t
        assert!((mean.abs() - t.cos().abs()).abs() < 1e-5, "t = {t}: {mean}");
    }
}

#[test]
fn slices_map_to_round_spheres() {
    for t in [0.0, -0.7, 1.3] {
        let p = slice_patch(ModelGeometry::s2xr(), t, 1.5);
        let worst = p.grid(40, 40).into_iter().map(|(u, v)| (S2xRToR3.eval(&p.point(u, v)).unwrap().norm() - t.exp()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10 * t.exp(), "{worst:e}");
    }
}

#[test]
fn umbilic_patches_stay_umbilic() {
    let s2: Arc<dyn ConformalMap> = Arc::new(S2xRToR3);
    for p in [family(Family::S2xRALt1, Some(0.6)), family(Family::S2xRAEq1, None), family(Family::S2xRAGt1, Some(1.5))] {
        let img = pushforward(s2.clone(), &p, 1e-4);
        let d = umbilicity_defect(&img, 24, 24);
        assert!(d.failed == 0 && d.max < 1e-5, "{}: {:?}", p.label, d);
    }
    let h3: Arc<dyn ConformalMap> = Arc::new(H2xIToH3::default());
    for p in [family(Family::H2xRElliptic, Some(1.0)), family(Family::H2xRHyperbolic, Some(0.5))] {
        // keep the part of the surface whose height fits in an interval of length π − 0.4, then centre it at π/2
        // stay off the rotation axis and the end of the profile, where the parametrization degenerates
        let (u0, u1) = (p.u_range.0.max(0.1), p.u_range.1 - 0.1);
        let mut w = 0.5 * (u1 - u0);
        let mid = 0.5 * (u0 + u1);
        let range = |w: f64| {
            let ts: Vec<f64> = p.restrict((mid - w, mid + w), p.v_range).grid(41, 3).into_iter().map(|(u, v)| p.point(u, v).z).collect();
            (ts.iter().copied().fold(f64::INFINITY, f64::min), ts.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        };
        while range(w).1 - range(w).0 > PI - 0.4 {
            w *= 0.8;
        }
        let (lo, hi) = range(w);
        let q = p.restrict((mid - w, mid + w), p.v_range).with_isometry(&IsometrySpec::VerticalShift { c: FRAC_PI_2 - 0.5 * (lo + hi) }).unwrap();
        let img = pushforward(h3.clone(), &q, 1e-3);
        let d = umbilicity_defect(&img, 24, 24);
        assert!(d.failed == 0 && d.max < 1e-5, "{}: {:?}", p.label, d);
    }
}

#[test]
fn sol_flattening_metric_and_exponent() {
    for a in [1.0, 4f64.exp()] {
        let p = sol_profile(a, 1e-12).unwrap();
        let f = sol_flattening(&p, 4.0, 41).unwrap();
        assert!(f.max_metric_residual < 1e-8, "{}", f.max_metric_residual);
        assert!(f.max_first_integral_residual < 1e-8, "{}", f.max_first_integral_residual);
        assert!((f.fitted_g_yy_exponent + 6.0).abs() < 1e-6, "{}", f.fitted_g_yy_exponent);
        assert!(f.exponent_discrepancy && f.quoted_g_yy_exponent == -1.0);
        assert!(f.xi_increasing);
        assert_eq!(f.samples[20].xi, 0.0);
        assert!((f.z_max - 0.25 * a.ln()).abs() < 1e-15);
    }
}

#[test]
fn flattening_coordinate_against_direct_quadrature() {
    let p = sol_profile(1.0, 1e-12).unwrap();
    let f = sol_flattening(&p, 2.0, 9).unwrap();
    // ξ(y) = ∫₀^y e^{−4z(y')} dy' by quadrature in y
    for s in f.samples.iter().filter(|s| s.y > 0.0) {
        let direct = quadrature::integrate(|y: f64| (-4.0 * p.z_of_y(y).unwrap()).exp(), 0.0, s.y, 1e-13).integral;
        assert!((direct - s.xi).abs() < 1e-8 * (1.0 + s.xi), "{} vs {}", direct, s.xi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn s2xr_map_conformal_everywhere(x in -3.0f64..3.0, y in -3.0f64..3.0, t in -2.0f64..2.0) {
        let r = conformality_check(&S2xRToR3, &[V3::new(x, y, t)], 1e-3 / (1.0 + x.abs() + y.abs()));
        prop_assert!(r.max_off_proportionality < 1e-8);
        prop_assert!(r.max_factor_error.unwrap() < 1e-8);
    }
}

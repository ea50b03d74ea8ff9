//! Patches of the invariant umbilic families and their companions.
//!
//! Product charts place the point at distance ρ from the origin of M²(κ) at
//! chart radius r(ρ); H² points are built in the upper half-plane and carried
//! to the disk by a Cayley map.

use super::{lift, Analytic, SurfaceError, SurfacePatch, HD};
use crate::geometry::cx::Cx;
use crate::geometry::{exp_map, GeomError, ModelGeometry, SpaceKind, V3};
use crate::profile::{
    self, Family, FamilySpec, GeneratingCurve, Law, ProfileEvent, SolProfile,
};
use crate::special::elliptic_k;
use num_dual::DualNum;
use std::f64::consts::PI;
use std::sync::Arc;

/// Half-width of the tube around a rotation axis (or chart pole) left out of patches.
pub const AXIS_TUBE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitAction {
    /// Rotations about the vertical axis through the origin.
    Rotation,
    /// Parabolic translations fixing an ideal point of H².
    Parabolic,
    /// Hyperbolic translations along a geodesic of H².
    Hyperbolic,
    /// Sol translations in x.
    SolTranslation,
}

/// Chart radius of the point at signed distance ρ from the origin of M²(κ).
pub fn chart_radius<D: DualNum<Primitive = f64> + Copy>(space: &ModelGeometry, rho: D) -> D {
    let k = space.kappa;
    // products use 2/(1+κr²), the fibration chart 1/(1+κr²/4)
    let scale = if space.kind == SpaceKind::M3KappaTau { 2.0 } else { 1.0 };
    if k > 0.0 {
        let s = k.sqrt();
        (rho * D::from(0.5 * s)).tan() * D::from(scale / s)
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (rho * D::from(0.5 * s)).tanh() * D::from(scale / s)
    } else {
        rho * D::from(0.5 * scale)
    }
}

fn profile_pair(c: &GeneratingCurve, s: HD) -> (HD, HD) {
    let j = c.jet(s.re);
    (lift(s, j.rho, j.drho, j.ddrho), lift(s, j.t, j.dt, j.ddt))
}

fn cayley(w: Cx<HD>) -> Cx<HD> {
    (w - Cx::i()) / (w + Cx::i())
}

/// Orbit of a generating curve under a one-parameter group: `(u, v) = (s, group parameter)`.
pub fn orbit_surface(
    space: ModelGeometry,
    curve: Arc<GeneratingCurve>,
    action: OrbitAction,
    s_range: (f64, f64),
    v_range: (f64, f64),
) -> Result<SurfacePatch, SurfaceError> {
    let product = matches!(space.kind, SpaceKind::S2xR | SpaceKind::H2xR)
        || (space.kind == SpaceKind::M3KappaTau);
    let ok = match action {
        OrbitAction::Rotation => product && matches!(curve.law, Law::Rotational { .. }),
        OrbitAction::Parabolic => space.kind == SpaceKind::H2xR && curve.law == Law::Parabolic,
        OrbitAction::Hyperbolic => space.kind == SpaceKind::H2xR && matches!(curve.law, Law::Hyperbolic { .. }),
        OrbitAction::SolTranslation => false,
    };
    if !ok {
        return Err(SurfaceError::Incompatible(format!("{:?} orbit of a {:?} profile in {:?}", action, curve.law, space.kind)));
    }
    if product && (curve.kappa - space.kappa).abs() > 0.0 {
        return Err(SurfaceError::Incompatible(format!("profile for κ = {} in a κ = {} space", curve.kappa, space.kappa)));
    }
    let label = match &curve.spec {
        Some(s) => format!("{}{}", s.family, s.param.map(|p| format!("({p})")).unwrap_or_default()),
        None => format!("{action:?} orbit"),
    };
    let c = curve.clone();
    let patch = match action {
        OrbitAction::Rotation => revolution_patch(space, c, s_range, v_range).with_label(label),
        OrbitAction::Parabolic => SurfacePatch::new(
            space,
            Analytic(move |s: HD, phi: HD| {
                let (rho, t) = profile_pair(&c, s);
                // horocycles Im w = e^{−ρ}; the ideal point w = ∞ maps to ζ = −1
                let w = Cx::new(phi, (-rho).exp());
                let z = (Cx::i() - w) / (Cx::i() + w);
                [z.re, z.im, t]
            }),
            s_range,
            v_range,
            label,
        ),
        OrbitAction::Hyperbolic => SurfacePatch::new(
            space,
            Analytic(move |s: HD, phi: HD| {
                let (rho, t) = profile_pair(&c, s);
                // the point at signed distance ρ from the imaginary axis, pushed along it by e^φ
                let w = Cx::new(-rho.tanh(), rho.cosh().recip()).scale(phi.exp());
                let z = cayley(w);
                [z.re, z.im, t]
            }),
            s_range,
            v_range,
            label,
        ),
        OrbitAction::SolTranslation => unreachable!(),
    };
    Ok(patch)
}

/// Surface of revolution about the chart axis, with ρ read as distance in the
/// base of `space` whatever curvature the profile was integrated for.
pub fn revolution_patch(space: ModelGeometry, curve: Arc<GeneratingCurve>, s_range: (f64, f64), v_range: (f64, f64)) -> SurfacePatch {
    SurfacePatch::new(
        space,
        Analytic(move |s: HD, phi: HD| {
            let (rho, t) = profile_pair(&curve, s);
            let r = chart_radius(&space, rho);
            [r * phi.cos(), r * phi.sin(), t]
        }),
        s_range,
        v_range,
        "revolution",
    )
}

/// Geodesic sphere of radius `r` about `center`, `(u, v)` = (polar, azimuth) of
/// the initial direction in a g-orthonormal frame. Differentiated by central
/// differences over the exponential map.
pub fn geodesic_sphere_patch(space: ModelGeometry, center: V3, r: f64, polar: (f64, f64), tol: f64) -> Result<SurfacePatch, SurfaceError> {
    space.check(&center)?;
    let g = space.metric(&center);
    let frame = g.cholesky().ok_or(SurfaceError::Geometry(GeomError::Parameters("metric not positive definite".into())))?;
    // columns of L^{-T} are g-orthonormal
    let basis = frame.l().transpose().try_inverse().expect("cholesky factor is invertible");
    let f = move |u: f64, v: f64| {
        let dir = V3::new(u.sin() * v.cos(), u.sin() * v.sin(), u.cos());
        exp_map(&space, &center, &(basis * dir * r), tol).unwrap_or(V3::repeat(f64::NAN))
    };
    let label = format!("geodesic sphere r={r}");
    Ok(SurfacePatch::from_fn(space, f, polar, (-PI, PI), label))
}

/// The minimal companion of the parabolic family: the same profile under the
/// parabolic group of the opposite ideal point, `w = φ + i e^{ρ}`.
pub fn minimal_companion(s_range: (f64, f64), v_range: (f64, f64)) -> SurfacePatch {
    let c = profile::h2xr_parabolic_profile((s_range.0 - 1.0, s_range.1 + 1.0));
    SurfacePatch::new(
        ModelGeometry::h2xr(),
        Analytic(move |s: HD, phi: HD| {
            let (rho, t) = profile_pair(&c, s);
            let z = cayley(Cx::new(phi, rho.exp()));
            [z.re, z.im, t]
        }),
        s_range,
        v_range,
        "h2xr/parabolic minimal companion",
    )
}

/// F_a: X(t, σ) = (t, y(σ), z(σ)).
pub fn sol_fa_patch(profile: Arc<SolProfile>, t_range: (f64, f64), sigma_range: (f64, f64)) -> SurfacePatch {
    let label = format!("sol/fa({})", profile.a);
    let p = profile.clone();
    SurfacePatch::new(
        ModelGeometry::sol(),
        Analytic(move |t: HD, sigma: HD| {
            let j = p.jet(sigma.re);
            [t, lift(sigma, j.y, j.dy, j.ddy), lift(sigma, j.z, j.dz, j.ddz)]
        }),
        t_range,
        sigma_range,
        label,
    )
}

/// Horizontal slice M² × {t0}.
pub fn slice_patch(space: ModelGeometry, t0: f64, half_width: f64) -> SurfacePatch {
    SurfacePatch::new(
        space,
        Analytic(move |u: HD, v: HD| [u, v, u * 0.0 + t0]),
        (-half_width, half_width),
        (-half_width, half_width),
        format!("slice t = {t0}"),
    )
}

/// Vertical cylinder over the geodesic through the origin along the x-axis (u = chart x, v = height).
pub fn vertical_plane_patch(space: ModelGeometry, half_width: f64, height: f64) -> SurfacePatch {
    SurfacePatch::new(
        space,
        Analytic(|u: HD, v: HD| [u, u * 0.0, v]),
        (-half_width, half_width),
        (-height, height),
        "vertical plane over a geodesic",
    )
}

/// Sol plane {y = y0}, parametrized by (x, z).
pub fn sol_plane_y(y0: f64) -> SurfacePatch {
    SurfacePatch::new(
        ModelGeometry::sol(),
        Analytic(move |x: HD, z: HD| [x, x * 0.0 + y0, z]),
        (-1.0, 1.0),
        (-1.0, 1.0),
        format!("sol plane y = {y0}"),
    )
}

/// Sol plane {z = z0}, parametrized by (x, y): minimal, not umbilic.
pub fn sol_plane_z(z0: f64) -> SurfacePatch {
    SurfacePatch::new(
        ModelGeometry::sol(),
        Analytic(move |x: HD, y: HD| [x, y, x * 0.0 + z0]),
        (-1.0, 1.0),
        (-1.0, 1.0),
        format!("sol plane z = {z0}"),
    )
}

/// A patch of the family together with the profile it was built from.
#[derive(Debug, Clone)]
pub struct FamilyPatch {
    pub spec: FamilySpec,
    pub patch: SurfacePatch,
    pub curve: Option<Arc<GeneratingCurve>>,
    pub sol: Option<Arc<SolProfile>>,
}

/// Arclength at which the profile first reaches ρ = `value` on the positive side.
fn s_at_rho(c: &GeneratingCurve, value: f64) -> Result<f64, SurfaceError> {
    Ok(c.find_event(ProfileEvent::RhoHits(value), 1e-14)?)
}

/// Default patch of each family, with axis tubes and chart poles excluded.
pub fn family_patch(spec: &FamilySpec, tol: f64) -> Result<FamilyPatch, SurfaceError> {
    let plain = |patch| Ok(FamilyPatch { spec: *spec, patch, curve: None, sol: None });
    let full = (-PI, PI);
    let s2 = ModelGeometry::s2xr();
    let h2 = ModelGeometry::h2xr();
    let rot = |space, c: GeneratingCurve, s_range| -> Result<FamilyPatch, SurfaceError> {
        let c = Arc::new(c);
        let patch = orbit_surface(space, c.clone(), OrbitAction::Rotation, s_range, full)?;
        Ok(FamilyPatch { spec: *spec, patch, curve: Some(c), sol: None })
    };
    match spec.family {
        Family::S2xRSlice => plain(slice_patch(s2, 0.3, 1.5)),
        Family::S2xRCylinder => plain(vertical_plane_patch(s2, 2.0, 1.0)),
        Family::H2xRSlice => plain(slice_patch(h2, 0.3, 0.6)),
        Family::H2xRVerticalPlane => plain(vertical_plane_patch(h2, 0.8, 1.0)),
        Family::SolGeodesicPlane => plain(sol_plane_y(0.0)),
        Family::S2xRALt1 => {
            let a = spec.param.unwrap();
            let s1 = 2.0 * elliptic_k(a * a).map_err(|_| SurfaceError::Incompatible("K".into()))?;
            let c = profile::s2xr_profile(a, (-1.0, s1 + 1.0), tol)?;
            let lo = s_at_rho(&c, AXIS_TUBE)?;
            let hi = s_at_rho(&c, PI - AXIS_TUBE)?;
            rot(s2, c, (lo, hi))
        }
        Family::S2xRAEq1 => {
            let c = profile::s2xr_profile(1.0, (-1.0, 7.0), tol)?;
            let lo = s_at_rho(&c, AXIS_TUBE)?;
            rot(s2, c, (lo, 6.0))
        }
        Family::S2xRAGt1 => {
            let a = spec.param.unwrap();
            let delta = elliptic_k(1.0 / (a * a)).map_err(|_| SurfaceError::Incompatible("K".into()))? / a;
            let c = profile::s2xr_profile(a, (-1.0, 2.0 * delta + 1.0), tol)?;
            let lo = s_at_rho(&c, AXIS_TUBE)?;
            let d = c.periods.delta.ok_or(SurfaceError::Incompatible("no turning point".into()))?;
            rot(s2, c, (lo, 2.0 * d - lo))
        }
        Family::H2xRElliptic => {
            let b = spec.param.unwrap();
            let m = 1.0 / (1.0 + b * b);
            let delta = m.sqrt() * elliptic_k(m).map_err(|_| SurfaceError::Incompatible("K".into()))?;
            let c = profile::h2xr_elliptic_profile(b, (-1.0, 2.0 * delta + 1.0), tol)?;
            let lo = s_at_rho(&c, AXIS_TUBE)?;
            let d = c.periods.delta.ok_or(SurfaceError::Incompatible("no turning point".into()))?;
            rot(h2, c, (lo, 2.0 * d - lo))
        }
        Family::H2xRParabolic => {
            let c = Arc::new(profile::h2xr_parabolic_profile((-3.0, 3.0)));
            let patch = orbit_surface(h2, c.clone(), OrbitAction::Parabolic, (-2.0, 2.0), (-2.0, 2.0))?;
            Ok(FamilyPatch { spec: *spec, patch, curve: Some(c), sol: None })
        }
        Family::H2xRHyperbolic => {
            let cc = spec.param.unwrap();
            let s0 = elliptic_k(1.0 - cc * cc).map_err(|_| SurfaceError::Incompatible("K".into()))?;
            let c = Arc::new(profile::h2xr_hyperbolic_profile(cc, (-2.5 * s0, 2.5 * s0), tol)?);
            let patch = orbit_surface(h2, c.clone(), OrbitAction::Hyperbolic, (-2.0 * s0, 2.0 * s0), (-1.0, 1.0))?;
            Ok(FamilyPatch { spec: *spec, patch, curve: Some(c), sol: None })
        }
        Family::SolFa => {
            let p = Arc::new(profile::sol_profile(spec.param.unwrap(), tol)?);
            let w = p.sigma_at_z(p.z_max() - 3.0).ok_or(SurfaceError::Incompatible("Sol window".into()))?;
            let patch = sol_fa_patch(p.clone(), (-1.0, 1.0), (-w, w));
            Ok(FamilyPatch { spec: *spec, patch, curve: None, sol: Some(p) })
        }
    }
}

/// Every family at the parameters exercised by the test suites.
pub fn standard_specs() -> Vec<FamilySpec> {
    let mut out = Vec::new();
    for f in Family::ALL {
        let params: Vec<f64> = match f {
            Family::S2xRALt1 => vec![0.3, 0.6, 0.9],
            Family::S2xRAGt1 => vec![1.5, 3.0],
            Family::H2xRElliptic => vec![0.5, 1.0, 2.0],
            Family::H2xRHyperbolic => vec![0.25, 0.5, 0.75],
            Family::SolFa => vec![1.0, 4f64.exp()],
            _ => vec![],
        };
        if params.is_empty() {
            out.push(FamilySpec::new(f, None).expect("parameter-free family"));
        } else {
            out.extend(params.into_iter().map(|p| FamilySpec::new(f, Some(p)).expect("tested parameter")));
        }
    }
    out
}

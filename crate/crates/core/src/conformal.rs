//! Conformal diffeomorphisms out of the product spaces, and the conformal
//! coordinates on the Sol surfaces F_a.
//!
//! * S²×R → R³∖{0}, (p, t) ↦ eᵗp, factor eᵗ.
//! * H²×(0,π) → H³, (p, t) ↦ exp_p(ln tan(t/2)·N), factor 1/sin t; H² is the
//!   vertical plane {x = 0} of the half-space model with unit normal N = z∂x.
//! * F_a → (t, ξ), with ξ the arclength-type coordinate making the induced metric e^{2z}(dt² + dξ²).

use crate::geometry::{exp_map, GeomError, ModelGeometry, M3, V3};
use crate::ode::deriv5;
use crate::profile::{ProfileError, SolProfile};
use crate::surface::{FiniteDifference, SurfacePatch};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConformalKind {
    #[serde(rename = "S2xR_to_R3punctured")]
    S2xRToR3Punctured,
    #[serde(rename = "H2xI_to_H3")]
    H2xIToH3,
    #[serde(rename = "Sol_Fa_flattening")]
    SolFaFlattening,
    /// Linear maps of the chart, used as controls.
    #[serde(rename = "linear")]
    Linear,
}

/// A map between chart domains of two model geometries.
pub trait ConformalMap: Send + Sync {
    fn kind(&self) -> ConformalKind;
    fn domain(&self) -> ModelGeometry;
    fn codomain(&self) -> ModelGeometry;
    fn eval(&self, p: &V3) -> Result<V3, GeomError>;

    /// Known conformal factor φ (pullback = φ²·g), if any.
    fn factor(&self, _p: &V3) -> Option<f64> {
        None
    }

    /// Chart Jacobian by fourth-order central differences.
    fn jacobian(&self, p: &V3, h: f64) -> Result<M3, GeomError> {
        let mut jac = M3::zeros();
        for j in 0..3 {
            let at = |s: f64| {
                let mut q = *p;
                q[j] += s;
                self.eval(&q)
            };
            let (a, b, c, d) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
            jac.set_column(j, &((a - 8.0 * b + 8.0 * c - d) / (12.0 * h)));
        }
        Ok(jac)
    }
}

/// Inverse stereographic projection of the S²×R chart onto the unit sphere.
pub fn s2_point(x: f64, y: f64) -> V3 {
    let r2 = x * x + y * y;
    V3::new(2.0 * x, 2.0 * y, 1.0 - r2) / (1.0 + r2)
}

/// (p, t) ↦ eᵗ p for a unit vector p.
pub fn s2xr_to_r3(p: &V3, t: f64) -> V3 {
    t.exp() * p
}

#[derive(Debug, Clone, Copy, Default)]
pub struct S2xRToR3;

impl ConformalMap for S2xRToR3 {
    fn kind(&self) -> ConformalKind {
        ConformalKind::S2xRToR3Punctured
    }
    fn domain(&self) -> ModelGeometry {
        ModelGeometry::s2xr()
    }
    fn codomain(&self) -> ModelGeometry {
        ModelGeometry::r3()
    }
    fn eval(&self, p: &V3) -> Result<V3, GeomError> {
        Ok(s2xr_to_r3(&s2_point(p.x, p.y), p.z))
    }
    fn factor(&self, p: &V3) -> Option<f64> {
        Some(p.z.exp())
    }
}

/// Half-plane coordinates (y, z) of a point of the unit-disk chart of H².
pub fn h2_half_plane(x: f64, y: f64) -> (f64, f64) {
    // w = i(1+ζ)/(1−ζ)
    let (a, b) = (1.0 + x, y);
    let (c, d) = (1.0 - x, -y);
    let den = c * c + d * d;
    let (re, im) = ((a * c + b * d) / den, (b * c - a * d) / den);
    (-im, re)
}

/// Distance from the embedded plane is ln tan(t/2); t is clipped to
/// [`T_CLIP`, π − `T_CLIP`] where the image leaves any bounded region.
pub const T_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H3Image {
    pub point: V3,
    pub clipped: bool,
}

/// exp_p(ln tan(t/2)·N(p)) for p = (0, y, z) in the vertical plane of the half-space.
pub fn h2xi_to_h3(p: &V3, t: f64, tol: f64) -> Result<H3Image, GeomError> {
    let h3 = ModelGeometry::h3();
    if p.x != 0.0 || !h3.in_domain(p) {
        return Err(GeomError::Domain([p.x, p.y, p.z]));
    }
    let tc = t.clamp(T_CLIP, PI - T_CLIP);
    let d = (0.5 * tc).tan().ln();
    let normal = V3::new(p.z, 0.0, 0.0);
    let point = exp_map(&h3, p, &(d * normal), tol)?;
    Ok(H3Image { point, clipped: tc != t })
}

#[derive(Debug, Clone, Copy)]
pub struct H2xIToH3 {
    pub tol: f64,
}

impl Default for H2xIToH3 {
    fn default() -> Self {
        Self { tol: 1e-13 }
    }
}

impl ConformalMap for H2xIToH3 {
    fn kind(&self) -> ConformalKind {
        ConformalKind::H2xIToH3
    }
    fn domain(&self) -> ModelGeometry {
        ModelGeometry::h2xr()
    }
    fn codomain(&self) -> ModelGeometry {
        ModelGeometry::h3()
    }
    fn eval(&self, p: &V3) -> Result<V3, GeomError> {
        if !(p.z > 0.0 && p.z < PI) {
            return Err(GeomError::Domain([p.x, p.y, p.z]));
        }
        let (y, z) = h2_half_plane(p.x, p.y);
        Ok(h2xi_to_h3(&V3::new(0.0, y, z), p.z, self.tol)?.point)
    }
    fn factor(&self, p: &V3) -> Option<f64> {
        Some(1.0 / p.z.sin())
    }
}

/// X ↦ M X between two charts; the identity and shears serve as controls.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub space: ModelGeometry,
    pub m: M3,
}

impl ConformalMap for Linear {
    fn kind(&self) -> ConformalKind {
        ConformalKind::Linear
    }
    fn domain(&self) -> ModelGeometry {
        self.space
    }
    fn codomain(&self) -> ModelGeometry {
        self.space
    }
    fn eval(&self, p: &V3) -> Result<V3, GeomError> {
        Ok(self.m * p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorSample {
    pub point: [f64; 3],
    /// √(tr(g⁻¹G)/3) from the pullback G.
    pub phi: f64,
    /// ‖G − φ²g‖ / ‖G‖ (Frobenius).
    pub off_proportionality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalityReport {
    pub kind: ConformalKind,
    pub max_off_proportionality: f64,
    /// max |φ − known factor| / known factor, when the map declares one.
    pub max_factor_error: Option<f64>,
    pub samples: Vec<FactorSample>,
    /// Points where the map or its Jacobian could not be evaluated.
    pub failures: Vec<[f64; 3]>,
}

/// Pullback Gram matrix against the domain metric at every grid point.
pub fn conformality_check(map: &dyn ConformalMap, points: &[V3], h: f64) -> ConformalityReport {
    let (dom, cod) = (map.domain(), map.codomain());
    let results: Vec<Result<(FactorSample, Option<f64>), [f64; 3]>> = points
        .par_iter()
        .map(|p| {
            let fail = [p.x, p.y, p.z];
            let q = map.eval(p).map_err(|_| fail)?;
            let jac = map.jacobian(p, h).map_err(|_| fail)?;
            if !cod.in_domain(&q) {
                return Err(fail);
            }
            let pull = jac.transpose() * cod.metric(&q) * jac;
            let g = dom.metric(p);
            let phi2 = (g.try_inverse().ok_or(fail)? * pull).trace() / 3.0;
            let off = (pull - phi2 * g).norm() / pull.norm();
            let phi = phi2.sqrt();
            let ferr = map.factor(p).map(|f| (phi - f).abs() / f);
            Ok((FactorSample { point: fail, phi, off_proportionality: off }, ferr))
        })
        .collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let mut ferr: Option<f64> = None;
    for r in results {
        match r {
            Ok((s, e)) => {
                samples.push(s);
                if let Some(e) = e {
                    ferr = Some(ferr.map_or(e, |m| m.max(e)));
                }
            }
            Err(p) => failures.push(p),
        }
    }
    let max_off = samples.iter().map(|s| s.off_proportionality).fold(0.0, f64::max);
    ConformalityReport { kind: map.kind(), max_off_proportionality: max_off, max_factor_error: ferr, samples, failures }
}

/// Regular `n³` grid on a box of the domain chart, endpoints included.
pub fn box_points(lo: [f64; 3], hi: [f64; 3], n: usize) -> Vec<V3> {
    let at = |d: usize, k: usize| lo[d] + (hi[d] - lo[d]) * k as f64 / (n - 1).max(1) as f64;
    let mut v = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                v.push(V3::new(at(0, i), at(1, j), at(2, k)));
            }
        }
    }
    v
}

/// Image of a patch, differentiated by second-order central differences with step `h`.
pub fn pushforward(map: Arc<dyn ConformalMap>, patch: &SurfacePatch, h: f64) -> SurfacePatch {
    let inner = patch.clone();
    let m = map.clone();
    let f = move |u: f64, v: f64| m.eval(&inner.point(u, v)).unwrap_or(V3::repeat(f64::NAN));
    SurfacePatch::new(map.codomain(), FiniteDifference { f, h }, patch.u_range, patch.v_range, format!("{} → {:?}", patch.label, map.kind()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatSample {
    pub sigma: f64,
    pub y: f64,
    pub z: f64,
    pub xi: f64,
    pub g_tt: f64,
    /// Induced g_yy = e^{−2z} + z'² from the embedding (t, y, z(y)).
    pub g_yy: f64,
    /// a·e^{−6z}: g_yy after substituting the first integral.
    pub g_yy_first_integral: f64,
    /// |g_ξξ / g_tt − 1|, g_ξξ from differentiating the ξ table.
    pub metric_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolFlattening {
    pub kind: ConformalKind,
    pub a: f64,
    pub samples: Vec<FlatSample>,
    pub max_metric_residual: f64,
    /// max |g_yy − a e^{−6z}| / g_yy.
    pub max_first_integral_residual: f64,
    /// Least-squares slope of ln g_yy against z.
    pub fitted_g_yy_exponent: f64,
    /// The g_yy exponent in the commonly quoted form ds² = e^{2z}dt² + e^{−z}dy²; the embedding gives −6.
    pub quoted_g_yy_exponent: f64,
    pub exponent_discrepancy: bool,
    pub xi_increasing: bool,
    /// sup z on F_a, which bounds the conformal factor e^{2z}.
    pub z_max: f64,
}

/// ξ(σ) = ∫₀^σ √(g_σσ/g_tt) dσ along the profile, with g read off the embedding.
fn xi_at(p: &SolProfile, sigma: f64) -> f64 {
    let integrand = |s: f64| {
        let j = p.jet(s);
        let g_ss = (-2.0 * j.z).exp() * j.dy * j.dy + j.dz * j.dz;
        (g_ss / (2.0 * j.z).exp()).sqrt()
    };
    if sigma == 0.0 {
        return 0.0;
    }
    quadrature::integrate(integrand, 0.0, sigma, 1e-14).integral
}

/// Conformal coordinates on F_a over the profile window where z ≥ z_max − `depth`.
pub fn sol_flattening(profile: &SolProfile, depth: f64, n: usize) -> Result<SolFlattening, ProfileError> {
    let z_max = profile.z_max();
    let w = profile.sigma_at_z(z_max - depth).ok_or(ProfileError::NotBracketed)?;
    let a = profile.a;
    let samples: Vec<FlatSample> = (0..n)
        .into_par_iter()
        .map(|k| {
            let sigma = -w + 2.0 * w * k as f64 / (n - 1) as f64;
            let j = profile.jet(sigma);
            let g_tt = (2.0 * j.z).exp();
            let g_yy = (-2.0 * j.z).exp() + j.slope * j.slope;
            let g_ss = (-2.0 * j.z).exp() * j.dy * j.dy + j.dz * j.dz;
            let dxi = deriv5(|s| xi_at(profile, s), sigma, 1e-3 * w);
            let g_xixi = g_ss / (dxi * dxi);
            FlatSample {
                sigma,
                y: j.y,
                z: j.z,
                xi: xi_at(profile, sigma),
                g_tt,
                g_yy,
                g_yy_first_integral: a * (-6.0 * j.z).exp(),
                metric_residual: (g_xixi / g_tt - 1.0).abs(),
            }
        })
        .collect();
    let max_metric_residual = samples.iter().map(|s| s.metric_residual).fold(0.0, f64::max);
    let max_fi = samples.iter().map(|s| (s.g_yy - s.g_yy_first_integral).abs() / s.g_yy).fold(0.0, f64::max);
    // slope of ln(g_yy) = ln a + k z
    let m = samples.len() as f64;
    let (sz, sl) = samples.iter().fold((0.0, 0.0), |(a, b), s| (a + s.z, b + s.g_yy.ln()));
    let (mz, ml) = (sz / m, sl / m);
    let (num, den) = samples.iter().fold((0.0, 0.0), |(n, d), s| (n + (s.z - mz) * (s.g_yy.ln() - ml), d + (s.z - mz).powi(2)));
    let fitted = num / den;
    let quoted = -1.0;
    let xi_increasing = samples.windows(2).all(|p| p[1].xi > p[0].xi);
    Ok(SolFlattening {
        kind: ConformalKind::SolFaFlattening,
        a,
        samples,
        max_metric_residual,
        max_first_integral_residual: max_fi,
        fitted_g_yy_exponent: fitted,
        quoted_g_yy_exponent: quoted,
        exponent_discrepancy: (fitted - quoted).abs() > 0.5,
        xi_increasing,
        z_max,
    })
}

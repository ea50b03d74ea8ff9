//! Parametrized surfaces in the model spaces and their extrinsic curvature.
//!
//! A patch is a chart map `(u, v) ↦ X(u, v)` together with second-order jets.
//! Orbit surfaces are written once over hyper-dual numbers, so X_u … X_vv are
//! exact to rounding; arbitrary maps fall back to central differences.
//!
//! Principal curvatures are the eigenvalues of the Weingarten map
//! X ↦ ∇̄_X N, so an umbilic surface has ∇̄_X N = λX with λ the common value.

pub mod classify;
pub mod families;
pub mod mesh;

use crate::geometry::space::cross_with;
use crate::geometry::{contract, GeomError, IsometrySpec, ModelGeometry, SpaceKind, V3};
use crate::profile::ProfileError;
use nalgebra::Matrix2;
use num_dual::HyperDual64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

pub type HD = HyperDual64;
pub type M2 = Matrix2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("immersion fails at ({u}, {v}): det I = {det:e}")]
    Immersion { u: f64, v: f64, det: f64 },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("incompatible construction: {0}")]
    Incompatible(String),
    #[error("surface is not umbilic (defect {0:e})")]
    NotUmbilic(f64),
    #[error("no transversal level among the requested slices")]
    Transversality,
}

/// Position and first/second partial derivatives of a chart map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub x: V3,
    pub xu: V3,
    pub xv: V3,
    pub xuu: V3,
    pub xuv: V3,
    pub xvv: V3,
}

pub trait ChartMap: Send + Sync {
    fn jet(&self, u: f64, v: f64) -> Jet;

    fn point(&self, u: f64, v: f64) -> V3 {
        self.jet(u, v).x
    }
}

/// Chart map written over hyper-dual numbers; three evaluations give the full jet.
pub struct Analytic<F>(pub F);

fn part(x: &[HD; 3], f: impl Fn(&HD) -> f64) -> V3 {
    V3::new(f(&x[0]), f(&x[1]), f(&x[2]))
}

impl<F: Fn(HD, HD) -> [HD; 3] + Send + Sync> ChartMap for Analytic<F> {
    fn jet(&self, u: f64, v: f64) -> Jet {
        let c = HD::from_re;
        let uu = (self.0)(c(u).derivative1().derivative2(), c(v));
        let uv = (self.0)(c(u).derivative1(), c(v).derivative2());
        let vv = (self.0)(c(u), c(v).derivative1().derivative2());
        Jet {
            x: part(&uu, |d| d.re),
            xu: part(&uu, |d| d.eps1),
            xv: part(&uv, |d| d.eps2),
            xuu: part(&uu, |d| d.eps1eps2),
            xuv: part(&uv, |d| d.eps1eps2),
            xvv: part(&vv, |d| d.eps1eps2),
        }
    }

    fn point(&self, u: f64, v: f64) -> V3 {
        part(&(self.0)(HD::from_re(u), HD::from_re(v)), |d| d.re)
    }
}

/// Second-order central differences with step `h` (error O(h²)).
pub struct FiniteDifference<F> {
    pub f: F,
    pub h: f64,
}

impl<F: Fn(f64, f64) -> V3 + Send + Sync> ChartMap for FiniteDifference<F> {
    fn jet(&self, u: f64, v: f64) -> Jet {
        let (f, h) = (&self.f, self.h);
        let x = f(u, v);
        let (up, um, vp, vm) = (f(u + h, v), f(u - h, v), f(u, v + h), f(u, v - h));
        let cross = f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h);
        Jet {
            x,
            xu: (up - um) / (2.0 * h),
            xv: (vp - vm) / (2.0 * h),
            xuu: (up - 2.0 * x + um) / (h * h),
            xuv: cross / (4.0 * h * h),
            xvv: (vp - 2.0 * x + vm) / (h * h),
        }
    }

    fn point(&self, u: f64, v: f64) -> V3 {
        (self.f)(u, v)
    }
}

/// Chart map followed by an ambient isometry; jets are pushed through exactly.
struct Composed {
    inner: Arc<dyn ChartMap>,
    space: ModelGeometry,
    iso: IsometrySpec,
}

impl ChartMap for Composed {
    fn jet(&self, u: f64, v: f64) -> Jet {
        let j = self.inner.jet(u, v);
        // second-order chain rule through a hyper-dual evaluation of the isometry
        let eval = |a: V3, b: V3, ab: V3| {
            let p: [HD; 3] = std::array::from_fn(|i| HD::new(j.x[i], a[i], b[i], ab[i]));
            self.iso.apply_generic(&self.space, p)
        };
        let uu = eval(j.xu, j.xu, j.xuu);
        let uv = eval(j.xu, j.xv, j.xuv);
        let vv = eval(j.xv, j.xv, j.xvv);
        Jet {
            x: part(&uu, |d| d.re),
            xu: part(&uu, |d| d.eps1),
            xv: part(&uv, |d| d.eps2),
            xuu: part(&uu, |d| d.eps1eps2),
            xuv: part(&uv, |d| d.eps1eps2),
            xvv: part(&vv, |d| d.eps1eps2),
        }
    }
}

/// Lifts a scalar function known through its value and first two derivatives at
/// `x.re` to a hyper-dual number (second-order chain rule).
pub fn lift(x: HD, f0: f64, f1: f64, f2: f64) -> HD {
    HD::new(f0, f1 * x.eps1, f1 * x.eps2, f1 * x.eps1eps2 + f2 * x.eps1 * x.eps2)
}

#[derive(Clone)]
pub struct SurfacePatch {
    pub space: ModelGeometry,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub label: String,
    map: Arc<dyn ChartMap>,
}

impl std::fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("space", &self.space)
            .field("u_range", &self.u_range)
            .field("v_range", &self.v_range)
            .field("label", &self.label)
            .finish()
    }
}

/// First and second fundamental forms and unit normal at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forms {
    pub jet: Jet,
    pub first: M2,
    pub second: M2,
    pub normal: V3,
}

/// Extrinsic data at one point.
///
/// `nu`, `t`, `jt` refer to the unit vertical field (∂t, ξ, or E₃ = ∂z in Sol);
/// in spaces without one (H³, R³) `nu` is NaN and `t`, `jt` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCurvature {
    pub forms: Forms,
    /// λ₁ ≤ λ₂, eigenvalues of X ↦ ∇̄_X N.
    pub lambda1: f64,
    pub lambda2: f64,
    /// (λ₁ + λ₂)/2, the umbilicity factor on umbilic surfaces.
    pub lambda: f64,
    /// Mean curvature (λ₁ + λ₂)/2 in the same orientation convention.
    pub h: f64,
    pub defect: f64,
    pub nu: f64,
    pub t: V3,
    pub jt: V3,
}

/// |λ₁ − λ₂| / (1 + |λ₁| + |λ₂|).
pub fn normalized_defect(l1: f64, l2: f64) -> f64 {
    (l1 - l2).abs() / (1.0 + l1.abs() + l2.abs())
}

impl SurfacePatch {
    pub fn new(
        space: ModelGeometry,
        map: impl ChartMap + 'static,
        u_range: (f64, f64),
        v_range: (f64, f64),
        label: impl Into<String>,
    ) -> Self {
        Self { space, u_range, v_range, label: label.into(), map: Arc::new(map) }
    }

    /// Patch from a plain map, differentiated by central differences with step
    /// 1e−4 × (domain span).
    pub fn from_fn(
        space: ModelGeometry,
        f: impl Fn(f64, f64) -> V3 + Send + Sync + 'static,
        u_range: (f64, f64),
        v_range: (f64, f64),
        label: impl Into<String>,
    ) -> Self {
        let span = (u_range.1 - u_range.0).max(v_range.1 - v_range.0);
        Self::new(space, FiniteDifference { f, h: 1e-4 * span }, u_range, v_range, label)
    }

    /// The same patch differentiated by central differences with step `h`.
    pub fn finite_difference(&self, h: f64) -> Self {
        let m = self.map.clone();
        let fd = FiniteDifference { f: move |u, v| m.point(u, v), h };
        Self::new(self.space, fd, self.u_range, self.v_range, format!("{} (fd h={h:e})", self.label))
    }

    /// Image of the patch under an ambient isometry.
    pub fn with_isometry(&self, iso: &IsometrySpec) -> Result<Self, SurfaceError> {
        iso.validate(&self.space)?;
        let c = Composed { inner: self.map.clone(), space: self.space, iso: *iso };
        Ok(Self { map: Arc::new(c), label: format!("{} ∘ {:?}", self.label, iso), ..self.clone() })
    }

    pub fn with_label(self, label: impl Into<String>) -> Self {
        Self { label: label.into(), ..self }
    }

    pub fn restrict(&self, u_range: (f64, f64), v_range: (f64, f64)) -> Self {
        Self { u_range, v_range, ..self.clone() }
    }

    pub fn jet(&self, u: f64, v: f64) -> Jet {
        self.map.jet(u, v)
    }

    pub fn point(&self, u: f64, v: f64) -> V3 {
        self.map.point(u, v)
    }

    /// Uniform `nu × nv` grid over the domain, endpoints included, row-major in v.
    pub fn grid(&self, nu: usize, nv: usize) -> Vec<(f64, f64)> {
        let at = |r: (f64, f64), k: usize, n: usize| if n < 2 { 0.5 * (r.0 + r.1) } else { r.0 + (r.1 - r.0) * k as f64 / (n - 1) as f64 };
        (0..nv).flat_map(|j| (0..nu).map(move |i| (at(self.u_range, i, nu), at(self.v_range, j, nv)))).collect()
    }

    pub fn fundamental_forms(&self, u: f64, v: f64) -> Result<Forms, SurfaceError> {
        let jet = self.jet(u, v);
        self.space.check(&jet.x)?;
        let g = self.space.metric(&jet.x);
        let ip = |a: &V3, b: &V3| (a.transpose() * g * b)[(0, 0)];
        let first = M2::new(ip(&jet.xu, &jet.xu), ip(&jet.xu, &jet.xv), ip(&jet.xu, &jet.xv), ip(&jet.xv, &jet.xv));
        let det = first.determinant();
        if !(det > 1e-10 * (1.0 + first.norm_squared())) {
            return Err(SurfaceError::Immersion { u, v, det });
        }
        let n = cross_with(&g, &jet.xu, &jet.xv);
        let normal = n / ip(&n, &n).sqrt();
        let gam = self.space.gamma(&jet.x);
        let sec = |xij: &V3, a: &V3, b: &V3| ip(&(xij + contract(&gam, a, b)), &normal);
        let b12 = sec(&jet.xuv, &jet.xu, &jet.xv);
        let second = M2::new(sec(&jet.xuu, &jet.xu, &jet.xu), b12, b12, sec(&jet.xvv, &jet.xv, &jet.xv));
        Ok(Forms { jet, first, second, normal })
    }

    pub fn curvature(&self, u: f64, v: f64) -> Result<PointCurvature, SurfaceError> {
        let forms = self.fundamental_forms(u, v)?;
        // Weingarten map W = −I⁻¹ II; its trace-free part gives λ₂ − λ₁ without cancellation
        let w = -forms.first.try_inverse().expect("checked nondegenerate") * forms.second;
        let lambda = 0.5 * w.trace();
        let a11 = 0.5 * (w[(0, 0)] - w[(1, 1)]);
        let half = (a11 * a11 + w[(0, 1)] * w[(1, 0)]).max(0.0).sqrt();
        let (lambda1, lambda2) = (lambda - half, lambda + half);
        let x = forms.jet.x;
        let (nu, t, jt) = match self.space.vertical(&x) {
            Some(xi) => {
                let nu = self.space.inner(&x, &forms.normal, &xi);
                let t = xi - nu * forms.normal;
                (nu, t, self.space.cross(&x, &forms.normal, &t))
            }
            None => (f64::NAN, V3::zeros(), V3::zeros()),
        };
        Ok(PointCurvature {
            forms,
            lambda1,
            lambda2,
            lambda,
            h: lambda,
            defect: normalized_defect(lambda1, lambda2),
            nu,
            t,
            jt,
        })
    }

    pub fn principal_curvatures(&self, u: f64, v: f64) -> Result<(f64, f64), SurfaceError> {
        self.curvature(u, v).map(|c| (c.lambda1, c.lambda2))
    }

    /// Curvature on the `nu × nv` grid, evaluated in parallel; order matches [`Self::grid`].
    pub fn curvature_grid(&self, nu: usize, nv: usize) -> Vec<((f64, f64), Result<PointCurvature, SurfaceError>)> {
        self.grid(nu, nv).into_par_iter().map(|(u, v)| ((u, v), self.curvature(u, v))).collect()
    }

    pub fn is_product(&self) -> bool {
        matches!(self.space.kind, SpaceKind::S2xR | SpaceKind::H2xR)
            || (self.space.kind == SpaceKind::M3KappaTau && self.space.tau == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridStats {
    pub max: f64,
    pub mean: f64,
    pub argmax: (f64, f64),
    pub points: usize,
    /// Grid points where the patch was not an immersion or left the chart.
    pub failed: usize,
}

fn stats(values: impl Iterator<Item = ((f64, f64), Option<f64>)>) -> GridStats {
    let mut s = GridStats { max: 0.0, mean: 0.0, argmax: (f64::NAN, f64::NAN), points: 0, failed: 0 };
    let mut sum = 0.0;
    for (uv, val) in values {
        match val {
            Some(d) if d.is_finite() => {
                if s.points == 0 || d > s.max {
                    s.max = d;
                    s.argmax = uv;
                }
                sum += d;
                s.points += 1;
            }
            _ => s.failed += 1,
        }
    }
    if s.points > 0 {
        s.mean = sum / s.points as f64;
    }
    s
}

/// Normalized umbilicity defect statistics over the grid.
pub fn umbilicity_defect(patch: &SurfacePatch, nu: usize, nv: usize) -> GridStats {
    stats(patch.curvature_grid(nu, nv).into_iter().map(|(uv, c)| (uv, c.ok().map(|c| c.defect))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCurvatureStats {
    pub min: f64,
    pub max: f64,
    /// Statistics of |H|.
    pub abs: GridStats,
}

pub fn mean_curvature(patch: &SurfacePatch, nu: usize, nv: usize) -> MeanCurvatureStats {
    let grid = patch.curvature_grid(nu, nv);
    let hs: Vec<f64> = grid.iter().filter_map(|(_, c)| c.as_ref().ok().map(|c| c.h)).collect();
    MeanCurvatureStats {
        min: hs.iter().copied().fold(f64::INFINITY, f64::min),
        max: hs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        abs: stats(grid.into_iter().map(|(uv, c)| (uv, c.ok().map(|c| c.h.abs())))),
    }
}

/// Per-vertex defect values on the grid (NaN where evaluation failed).
pub fn defect_field(patch: &SurfacePatch, nu: usize, nv: usize) -> Vec<f64> {
    patch.curvature_grid(nu, nv).into_iter().map(|(_, c)| c.map(|c| c.defect).unwrap_or(f64::NAN)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_dual::DualNum;

    #[test]
    fn lift_matches_direct_evaluation() {
        let s = HD::from_re(0.7).derivative1().derivative2();
        let a = lift(s, 0.7f64.sin(), 0.7f64.cos(), -0.7f64.sin());
        let b = s.sin();
        assert!((a.eps1 - b.eps1).abs() < 1e-15 && (a.eps1eps2 - b.eps1eps2).abs() < 1e-15);
    }

    #[test]
    fn euclidean_plane_is_flat() {
        let p = SurfacePatch::new(ModelGeometry::r3(), Analytic(|u: HD, v: HD| [u, v, u * 0.0 + 2.0]), (-1.0, 1.0), (-1.0, 1.0), "plane");
        let c = p.curvature(0.2, 0.3).unwrap();
        assert_eq!((c.lambda1, c.lambda2), (0.0, 0.0));
        assert!(c.nu.is_nan());
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let p = SurfacePatch::new(ModelGeometry::r3(), Analytic(|u: HD, _v: HD| [u, u, u]), (0.0, 1.0), (0.0, 1.0), "line");
        assert!(matches!(p.curvature(0.5, 0.5), Err(SurfaceError::Immersion { .. })));
    }
}

//! Numerical checks of the identities behind the classification results.
//!
//! Every check evaluates a residual on a grid and reports max/mean. Derivatives
//! of surface quantities (λ, ν, the components of T and JT) are taken by
//! fourth-order central differences in the chart; ambient curvature comes from
//! the metric.

mod falsify;
mod sol;

pub use falsify::{geodesic_sphere_shape, nonexistence_falsifier, FalsifierConfig, FalsifierResult, FamilyFloor, Regime, TrialFamily};
pub use sol::{check_sol_identities, sol_curvature_form};

use crate::geometry::space::gamma_from;
use crate::geometry::{GeomError, ModelGeometry, SpaceKind, M3, V3};
use crate::ode::deriv5;
use crate::surface::{PointCurvature, SurfaceError, SurfacePatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Below this many points a residual statistic is not reported.
pub const MIN_POINTS: usize = 256;
/// Points where |T| falls below this are skipped by checks that need T ≠ 0.
pub const T_FLOOR: f64 = 1e-6;
/// Umbilicity precondition for the λ-based checks.
pub const UMBILIC_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("patch is not umbilic: max defect {0:e}")]
    NotUmbilic(f64),
    #[error("grid has {0} points; at least {MIN_POINTS} are required")]
    GridTooSmall(usize),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityName {
    Killing,
    CurvatureCommutator,
    DanielFormula,
    GradientProduct,
    GradientSol,
    #[serde(rename = "bracket_TJT")]
    BracketTJT,
    JtNu,
    SolFrameTable,
    SolCurvatureFormula,
    LieLambda,
    AlphaComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub label: String,
    pub dims: Vec<usize>,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: IdentityName,
    pub space: ModelGeometry,
    pub grid: GridInfo,
    pub residual_stats: ResidualStats,
    /// Points where the identity is vacuous or ill-conditioned (T ≈ 0, ν ≈ 0).
    pub skipped: usize,
}

/// Flat JSON record of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub identity: IdentityName,
    pub space: ModelGeometry,
    pub grid: GridInfo,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub skipped_points: usize,
}

impl IdentityCheck {
    pub fn report(&self) -> VerificationReport {
        VerificationReport {
            identity: self.name,
            space: self.space,
            grid: self.grid.clone(),
            max_residual: self.residual_stats.max,
            mean_residual: self.residual_stats.mean,
            skipped_points: self.skipped,
        }
    }

    /// Number of points that entered the statistics.
    pub fn evaluated(&self) -> usize {
        self.grid.points - self.skipped
    }
}

fn collect(name: IdentityName, space: ModelGeometry, grid: GridInfo, values: Vec<Result<Option<f64>, VerifyError>>) -> Result<IdentityCheck, VerifyError> {
    let mut vals = Vec::with_capacity(values.len());
    let mut skipped = 0;
    for v in values {
        match v? {
            Some(x) => vals.push(x),
            None => skipped += 1,
        }
    }
    let (max, mean) = if vals.is_empty() {
        (0.0, 0.0)
    } else {
        (vals.iter().copied().fold(0.0, f64::max), vals.iter().sum::<f64>() / vals.len() as f64)
    };
    Ok(IdentityCheck { name, space, grid, residual_stats: ResidualStats { max, mean }, skipped })
}

/// Cell-centred `nu × nv` sample of a patch; `fd_step` is relative to each side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchGrid {
    pub nu: usize,
    pub nv: usize,
    pub fd_step: f64,
}

impl Default for PatchGrid {
    fn default() -> Self {
        Self { nu: 16, nv: 16, fd_step: 1e-3 }
    }
}

impl PatchGrid {
    pub fn new(nu: usize, nv: usize) -> Self {
        Self { nu, nv, ..Self::default() }
    }

    pub fn with_fd_step(self, fd_step: f64) -> Self {
        Self { fd_step, ..self }
    }

    fn points(&self, patch: &SurfacePatch) -> Result<Vec<(f64, f64)>, VerifyError> {
        let n = self.nu * self.nv;
        if n < MIN_POINTS {
            return Err(VerifyError::GridTooSmall(n));
        }
        let at = |r: (f64, f64), k: usize, n: usize| r.0 + (r.1 - r.0) * (k as f64 + 0.5) / n as f64;
        Ok((0..self.nv)
            .flat_map(|j| (0..self.nu).map(move |i| (at(patch.u_range, i, self.nu), at(patch.v_range, j, self.nv))))
            .collect())
    }

    fn steps(&self, patch: &SurfacePatch) -> (f64, f64) {
        (self.fd_step * (patch.u_range.1 - patch.u_range.0), self.fd_step * (patch.v_range.1 - patch.v_range.0))
    }

    fn info(&self, patch: &SurfacePatch) -> GridInfo {
        GridInfo { label: patch.label.clone(), dims: vec![self.nu, self.nv], points: self.nu * self.nv }
    }
}

/// Axis-aligned box of chart points, used for pointwise ambient identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxGrid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub n: [usize; 3],
}

impl BoxGrid {
    /// 8 × 8 × 4 points in [−h, h]² × [−v, v].
    pub fn centered(h: f64, v: f64) -> Self {
        Self { lo: [-h, -h, -v], hi: [h, h, v], n: [8, 8, 4] }
    }

    fn points(&self) -> Result<Vec<V3>, VerifyError> {
        let total = self.n.iter().product::<usize>();
        if total < MIN_POINTS {
            return Err(VerifyError::GridTooSmall(total));
        }
        let at = |d: usize, k: usize| {
            if self.n[d] < 2 {
                0.5 * (self.lo[d] + self.hi[d])
            } else {
                self.lo[d] + (self.hi[d] - self.lo[d]) * k as f64 / (self.n[d] - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(total);
        for k in 0..self.n[2] {
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    out.push(V3::new(at(0, i), at(1, j), at(2, k)));
                }
            }
        }
        Ok(out)
    }

    fn info(&self) -> GridInfo {
        GridInfo { label: "box".into(), dims: self.n.to_vec(), points: self.n.iter().product() }
    }
}

/// Christoffel symbols from central differences of the metric, independent of
/// the dual-number path used elsewhere.
pub fn christoffels_fd(space: &ModelGeometry, p: &V3, h: f64) -> crate::geometry::Christoffel {
    let dg: [M3; 3] = std::array::from_fn(|m| {
        M3::from_fn(|i, j| {
            deriv5(
                |s| {
                    let mut q = *p;
                    q[m] += s;
                    space.metric(&q)[(i, j)]
                },
                0.0,
                h,
            )
        })
    });
    let ginv = space.metric(p).try_inverse().unwrap_or_else(M3::zeros);
    gamma_from(&ginv, &dg)
}

fn random_unit(space: &ModelGeometry, p: &V3, rng: &mut ChaCha8Rng) -> V3 {
    loop {
        let x = V3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n2 = space.inner(p, &x, &x);
        if n2 > 1e-3 {
            return x / n2.sqrt();
        }
    }
}

/// ∇̄_X ξ = τ X∧ξ for random unit X at each grid point, with ∇̄ from finite-difference
/// Christoffel symbols.
pub fn check_killing(space: &ModelGeometry, grid: &BoxGrid, seed: u64) -> Result<IdentityCheck, VerifyError> {
    let xi = space
        .vertical(&V3::zeros())
        .filter(|_| space.has_vertical())
        .ok_or_else(|| VerifyError::Unsupported(format!("{:?} has no fibration chart", space.kind)))?;
    let pts = grid.points()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<V3> = pts.iter().map(|p| random_unit(space, p, &mut rng)).collect();
    let values = pts
        .par_iter()
        .zip(dirs)
        .map(|(p, x)| {
            space.check(p)?;
            let gam = christoffels_fd(space, p, 1e-3);
            let lhs = crate::geometry::contract(&gam, &x, &xi);
            let rhs = space.tau * space.cross(p, &x, &xi);
            let d = lhs - rhs;
            Ok(Some(space.inner(p, &d, &d).sqrt()))
        })
        .collect();
    collect(IdentityName::Killing, *space, grid.info(), values)
}

/// Factor c in R(X_u,X_v)N = c ν (⟨X_v,T⟩X_u − ⟨X_u,T⟩X_v).
fn curvature_factor(space: &ModelGeometry) -> Result<f64, VerifyError> {
    match space.kind {
        SpaceKind::S2xR | SpaceKind::H2xR | SpaceKind::M3KappaTau => Ok(space.kappa - 4.0 * space.tau * space.tau),
        SpaceKind::Sol => Ok(2.0),
        SpaceKind::H3 | SpaceKind::R3 => Err(VerifyError::Unsupported(format!("{:?} has no vertical field", space.kind))),
    }
}

fn norm(space: &ModelGeometry, p: &V3, x: &V3) -> f64 {
    space.inner(p, x, x).sqrt()
}

/// |R(X_u,X_v)N − cν(⟨X_v,T⟩X_u − ⟨X_u,T⟩X_v)| / (|X_u||X_v|) at one point.
fn daniel_residual(patch: &SurfacePatch, u: f64, v: f64, factor: f64) -> Result<f64, VerifyError> {
    let c = patch.curvature(u, v)?;
    let (x, xu, xv, n) = (c.forms.jet.x, c.forms.jet.xu, c.forms.jet.xv, c.forms.normal);
    let s = &patch.space;
    let lhs = s.riemann(&x).apply(&xu, &xv, &n);
    let rhs = factor * c.nu * (s.inner(&x, &xv, &c.t) * xu - s.inner(&x, &xu, &c.t) * xv);
    Ok(norm(s, &x, &(lhs - rhs)) / (norm(s, &x, &xu) * norm(s, &x, &xv)))
}

/// Daniel's formula for the normal curvature term, on any immersed patch in a
/// product or fibration space (the identity does not need umbilicity).
pub fn check_daniel_formula(patch: &SurfacePatch, grid: &PatchGrid) -> Result<IdentityCheck, VerifyError> {
    if patch.space.kind == SpaceKind::Sol {
        return Err(VerifyError::Unsupported("use the Sol curvature check in Sol".into()));
    }
    let factor = curvature_factor(&patch.space)?;
    let values = grid.points(patch)?.into_par_iter().map(|(u, v)| daniel_residual(patch, u, v, factor).map(Some)).collect();
    collect(IdentityName::DanielFormula, patch.space, grid.info(patch), values)
}

/// Scalar fields read off the curvature at one point: λ, ν and the chart
/// components of T and JT in the basis (X_u, X_v).
#[derive(Debug, Clone, Copy)]
struct Fields {
    lambda: f64,
    nu: f64,
    t: [f64; 2],
    jt: [f64; 2],
}

impl Fields {
    fn from(c: &PointCurvature, space: &ModelGeometry) -> Self {
        let x = c.forms.jet.x;
        let comps = |w: &V3| {
            let b = nalgebra::Vector2::new(space.inner(&x, w, &c.forms.jet.xu), space.inner(&x, w, &c.forms.jet.xv));
            let s = c.forms.first.try_inverse().expect("nondegenerate first form") * b;
            [s[0], s[1]]
        };
        Self { lambda: c.lambda, nu: c.nu, t: comps(&c.t), jt: comps(&c.jt) }
    }

    fn flat(&self) -> [f64; 6] {
        [self.lambda, self.nu, self.t[0], self.t[1], self.jt[0], self.jt[1]]
    }
}

/// Point data plus the chart partials of every field.
struct Local {
    c: PointCurvature,
    f: Fields,
    du: [f64; 6],
    dv: [f64; 6],
}

impl Local {
    fn at(patch: &SurfacePatch, u: f64, v: f64, (hu, hv): (f64, f64)) -> Result<Self, VerifyError> {
        let c = patch.curvature(u, v)?;
        let f = Fields::from(&c, &patch.space);
        let eval = |a: f64, b: f64| -> Result<[f64; 6], VerifyError> { Ok(Fields::from(&patch.curvature(a, b)?, &patch.space).flat()) };
        let mut su = [[0.0; 6]; 4];
        let mut sv = [[0.0; 6]; 4];
        for (k, o) in [-2.0, -1.0, 1.0, 2.0].into_iter().enumerate() {
            su[k] = eval(u + o * hu, v)?;
            sv[k] = eval(u, v + o * hv)?;
        }
        let d = |s: &[[f64; 6]; 4], h: f64| std::array::from_fn(|i| (s[0][i] - 8.0 * s[1][i] + 8.0 * s[2][i] - s[3][i]) / (12.0 * h));
        Ok(Self { c, f, du: d(&su, hu), dv: d(&sv, hv) })
    }

    /// Directional derivative of field `i` along the chart vector `w`.
    fn along(&self, w: [f64; 2], i: usize) -> f64 {
        w[0] * self.du[i] + w[1] * self.dv[i]
    }

    /// Ambient vector with chart components `w`.
    fn vector(&self, w: [f64; 2]) -> V3 {
        w[0] * self.c.forms.jet.xu + w[1] * self.c.forms.jet.xv
    }

    /// Intrinsic gradient of λ.
    fn grad_lambda(&self) -> V3 {
        let s = self.c.forms.first.try_inverse().expect("nondegenerate first form") * nalgebra::Vector2::new(self.du[0], self.dv[0]);
        self.vector([s[0], s[1]])
    }

    /// Chart components of [T, JT].
    fn bracket(&self) -> [f64; 2] {
        let (t, jt) = (self.f.t, self.f.jt);
        std::array::from_fn(|j| self.along(t, 4 + j) - self.along(jt, 2 + j))
    }

    fn t_norm(&self, space: &ModelGeometry) -> f64 {
        norm(space, &self.c.forms.jet.x, &self.c.t)
    }
}

fn require_umbilic(patch: &SurfacePatch, grid: &PatchGrid) -> Result<(), VerifyError> {
    let worst = grid
        .points(patch)?
        .into_par_iter()
        .map(|(u, v)| patch.curvature(u, v).map(|c| c.defect))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if worst > UMBILIC_TOL {
        return Err(VerifyError::NotUmbilic(worst));
    }
    Ok(())
}

/// R(X_u,X_v)N = λ_v X_u − λ_u X_v on an umbilic patch, ambient curvature against
/// finite-difference derivatives of λ. Works in every model space.
pub fn check_curvature_commutator(patch: &SurfacePatch, grid: &PatchGrid) -> Result<IdentityCheck, VerifyError> {
    require_umbilic(patch, grid)?;
    let h = grid.steps(patch);
    let s = patch.space;
    let values = grid
        .points(patch)?
        .into_par_iter()
        .map(|(u, v)| {
            let l = Local::at(patch, u, v, h)?;
            let j = &l.c.forms.jet;
            let lhs = s.riemann(&j.x).apply(&j.xu, &j.xv, &l.c.forms.normal);
            let rhs = l.dv[0] * j.xu - l.du[0] * j.xv;
            Ok(Some(norm(&s, &j.x, &(lhs - rhs)) / (norm(&s, &j.x, &j.xu) * norm(&s, &j.x, &j.xv))))
        })
        .collect();
    collect(IdentityName::CurvatureCommutator, s, grid.info(patch), values)
}

/// ∇λ = cνT on an umbilic patch (c = κ − 4τ² in products and fibrations, 2 in Sol).
pub fn check_gradient_identity(patch: &SurfacePatch, grid: &PatchGrid) -> Result<IdentityCheck, VerifyError> {
    let factor = curvature_factor(&patch.space)?;
    require_umbilic(patch, grid)?;
    let h = grid.steps(patch);
    let s = patch.space;
    let values = grid
        .points(patch)?
        .into_par_iter()
        .map(|(u, v)| {
            let l = Local::at(patch, u, v, h)?;
            let d = l.grad_lambda() - factor * l.f.nu * l.c.t;
            Ok(Some(norm(&s, &l.c.forms.jet.x, &d)))
        })
        .collect();
    let name = if s.kind == SpaceKind::Sol { IdentityName::GradientSol } else { IdentityName::GradientProduct };
    collect(name, s, grid.info(patch), values)
}

/// [T, JT] = 0 and JT(ν) = −τ|T|² on an umbilic patch in a product (τ = 0) space.
/// Points with |T| < [`T_FLOOR`] are skipped.
pub fn check_bracket_and_jtnu(patch: &SurfacePatch, grid: &PatchGrid) -> Result<(IdentityCheck, IdentityCheck), VerifyError> {
    if !patch.space.has_vertical() {
        return Err(VerifyError::Unsupported(format!("{:?} has no vertical field", patch.space.kind)));
    }
    require_umbilic(patch, grid)?;
    let h = grid.steps(patch);
    let s = patch.space;
    let locals: Vec<Result<Option<Local>, VerifyError>> = grid
        .points(patch)?
        .into_par_iter()
        .map(|(u, v)| {
            let c = patch.curvature(u, v)?;
            if norm(&s, &c.forms.jet.x, &c.t) < T_FLOOR {
                return Ok(None);
            }
            Local::at(patch, u, v, h).map(Some)
        })
        .collect();
    let mut bracket = Vec::new();
    let mut jtnu = Vec::new();
    for l in locals {
        match l {
            Err(e) => return Err(e),
            Ok(None) => {
                bracket.push(Ok(None));
                jtnu.push(Ok(None));
            }
            Ok(Some(l)) => {
                let x = l.c.forms.jet.x;
                bracket.push(Ok(Some(norm(&s, &x, &l.vector(l.bracket())))));
                let t2 = l.t_norm(&s).powi(2);
                jtnu.push(Ok(Some((l.along(l.f.jt, 1) + s.tau * t2).abs())));
            }
        }
    }
    Ok((collect(IdentityName::BracketTJT, s, grid.info(patch), bracket)?, collect(IdentityName::JtNu, s, grid.info(patch), jtnu)?))
}

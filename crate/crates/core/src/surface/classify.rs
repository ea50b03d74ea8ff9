//! Slice-structure classifier for surfaces in M²(κ) × R.
//!
//! Each horizontal level t = t₀ of the patch is a curve in M²(κ) × {t₀}. When
//! every level has constant geodesic curvature and the surface meets the level
//! at a constant angle, the surface is invariant under a one-parameter group;
//! in H² the value of |k_g| against 1 tells which (circle, horocycle,
//! equidistant curve).

use super::{SurfaceError, SurfacePatch};
use crate::geometry::{contract, V3};
use crate::roots;
use serde::Serialize;

/// Width of the band separating the k_g classes.
pub const CLASS_BAND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceTag {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Geodesic,
    /// Constant curvature, but too close to a class boundary to decide.
    Ambiguous,
    /// Curvature or angle not constant along the level: no invariance detected.
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: f64,
    pub samples: usize,
    /// Mean of |k_g| along the level.
    pub geodesic_curvature: f64,
    /// max |k_g − mean| along the level.
    pub kg_residual: f64,
    /// Mean of ν = ⟨N, ∂t⟩ along the level.
    pub angle: f64,
    pub angle_residual: f64,
    pub tag: SliceTag,
    /// True when the level was tangential (|T| too small) or not met by the patch.
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceClassification {
    pub levels: Vec<LevelReport>,
    pub tag: SliceTag,
}

/// Geodesic curvature and angle at the level point `(u, v)`, by implicit differentiation of z(u, v) = t₀.
fn level_point(patch: &SurfacePatch, u: f64, v: f64) -> Option<(f64, f64)> {
    let j = patch.jet(u, v);
    let space = &patch.space;
    let (zu, zv) = (j.xu.z, j.xv.z);
    let c = patch.curvature(u, v).ok()?;
    if zu.abs() < 1e-9 || c.t.norm() < 1e-6 {
        return None;
    }
    let du = -zv / zu;
    let ddu = -(j.xvv.z + 2.0 * j.xuv.z * du + j.xuu.z * du * du) / zu;
    let horiz = |w: V3| V3::new(w.x, w.y, 0.0);
    let c1 = horiz(j.xv + j.xu * du);
    let c2 = horiz(j.xvv + 2.0 * j.xuv * du + j.xuu * du * du + j.xu * ddu);
    let x = j.x;
    let speed2 = space.inner(&x, &c1, &c1);
    let xi = V3::z();
    let n = space.cross(&x, &xi, &c1) / speed2.sqrt();
    let acc = c2 + contract(&space.gamma(&x), &c1, &c1);
    Some((space.inner(&x, &acc, &n) / speed2, c.nu))
}

fn tag_for(kappa: f64, k: f64) -> SliceTag {
    if k < CLASS_BAND {
        return SliceTag::Geodesic;
    }
    if kappa >= 0.0 {
        return SliceTag::Elliptic;
    }
    // in H²(−1): circles |k| > 1, horocycles |k| = 1, equidistant curves |k| < 1
    let d = k - 1.0;
    if d.abs() <= CLASS_BAND {
        SliceTag::Parabolic
    } else if d.abs() <= 10.0 * CLASS_BAND {
        SliceTag::Ambiguous
    } else if d > 0.0 {
        SliceTag::Elliptic
    } else {
        SliceTag::Hyperbolic
    }
}

/// Classifies the slice structure of a patch in a product space.
///
/// For each level t₀, `samples` values of v are taken across the domain and the
/// first u with X(u, v).t = t₀ is located (the parameter u must cross the level).
pub fn classify_slice_structure(patch: &SurfacePatch, levels: &[f64], samples: usize) -> Result<SliceClassification, SurfaceError> {
    if !patch.is_product() {
        return Err(SurfaceError::Incompatible("slice classification needs a product space".into()));
    }
    let kappa = patch.space.kappa;
    let (u0, u1) = patch.u_range;
    let scan = 400;
    let mut reports = Vec::new();
    for &t0 in levels {
        let mut kg = Vec::new();
        let mut nus = Vec::new();
        for k in 0..samples {
            let v = patch.v_range.0 + (patch.v_range.1 - patch.v_range.0) * (k as f64 + 0.5) / samples as f64;
            let f = |u: f64| patch.point(u, v).z - t0;
            let mut root = None;
            let mut ua = u0;
            let mut fa = f(ua);
            for i in 1..=scan {
                let ub = u0 + (u1 - u0) * i as f64 / scan as f64;
                let fb = f(ub);
                if fa == 0.0 || fa * fb < 0.0 {
                    root = roots::brent(f, ua, ub, 1e-15);
                    break;
                }
                ua = ub;
                fa = fb;
            }
            if let Some((k_g, nu)) = root.and_then(|u| level_point(patch, u, v)) {
                kg.push(k_g.abs());
                nus.push(nu);
            }
        }
        let report = if kg.len() < 3 {
            LevelReport {
                level: t0,
                samples: kg.len(),
                geodesic_curvature: f64::NAN,
                kg_residual: f64::NAN,
                angle: f64::NAN,
                angle_residual: f64::NAN,
                tag: SliceTag::None,
                skipped: true,
            }
        } else {
            let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
            let spread = |x: &[f64], m: f64| x.iter().map(|y| (y - m).abs()).fold(0.0, f64::max);
            let (mk, mn) = (mean(&kg), mean(&nus));
            let (rk, rn) = (spread(&kg, mk), spread(&nus, mn));
            let tag = if rk > CLASS_BAND || rn > CLASS_BAND { SliceTag::None } else { tag_for(kappa, mk) };
            LevelReport {
                level: t0,
                samples: kg.len(),
                geodesic_curvature: mk,
                kg_residual: rk,
                angle: mn,
                angle_residual: rn,
                tag,
                skipped: false,
            }
        };
        reports.push(report);
    }
    let active: Vec<SliceTag> = reports.iter().filter(|r| !r.skipped).map(|r| r.tag).collect();
    if active.is_empty() {
        return Err(SurfaceError::Transversality);
    }
    let tag = if active.contains(&SliceTag::None) {
        SliceTag::None
    } else if active.iter().all(|t| *t == active[0]) {
        active[0]
    } else {
        SliceTag::Ambiguous
    };
    Ok(SliceClassification { levels: reports, tag })
}

//! Sol: frame derivatives, curvature tensor, and the Lie-bracket argument on umbilic patches.

use super::{
    check_gradient_identity, collect, daniel_residual, norm, random_unit, require_umbilic, IdentityCheck, IdentityName, Local, PatchGrid, VerifyError,
    T_FLOOR,
};
use crate::geometry::space::sol_frame;
use crate::geometry::{contract, ModelGeometry, SpaceKind, V3};
use crate::ode::deriv5;
use crate::surface::SurfacePatch;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// ⟨R(X,Y)Z,W⟩ in Sol written through the metric and ∂z only.
pub fn sol_curvature_form(space: &ModelGeometry, p: &V3, x: &V3, y: &V3, z: &V3, w: &V3) -> f64 {
    let ip = |a: &V3, b: &V3| space.inner(p, a, b);
    let e3 = V3::z();
    let (x3, y3, z3, w3) = (ip(x, &e3), ip(y, &e3), ip(z, &e3), ip(w, &e3));
    (ip(x, z) * ip(y, w) - ip(x, w) * ip(y, z)) + 2.0 * (ip(x, w) * y3 * z3 + ip(y, z) * x3 * w3 - ip(x, z) * y3 * w3 - ip(y, w) * x3 * z3)
}

/// ∇̄_{E_i}E_j as combinations of the frame: `TABLE[i][j]` holds the coefficients.
const TABLE: [[[f64; 3]; 3]; 3] = [
    [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
    [[0.0; 3], [0.0; 3], [0.0; 3]],
];

fn frame_table_residual(space: &ModelGeometry, p: &V3) -> f64 {
    let e = sol_frame(p);
    let gam = space.gamma(p);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            // directional derivative of the chart components of E_j along E_i
            let de = V3::from_fn(|k, _| deriv5(|s| sol_frame(&(p + s * e[i]))[j][k], 0.0, 1e-3));
            let cov = de + contract(&gam, &e[i], &e[j]);
            let want = TABLE[i][j][0] * e[0] + TABLE[i][j][1] * e[1] + TABLE[i][j][2] * e[2];
            worst = worst.max(norm(space, p, &(cov - want)));
        }
    }
    worst
}

/// Frame table, curvature formula, gradient, bracket, JT(ν), [T,JT](λ) and the α-component
/// of T, each over the same grid of an umbilic Sol patch.
///
/// With T = αE₁ + βE₂ + γE₃: [T,JT] = 4αβ/(ν(1−ν²)) T + (α²−β²)(1+ν²)/(ν²(1−ν²)) JT,
/// JT(ν) = 2αβ/ν and [T,JT](λ) = 8αβ; points with |T| or |ν| below 1e−6 are skipped there.
/// The JT coefficient does not enter [T,JT](λ), since JT(λ) = 2ν⟨T,JT⟩ = 0.
pub fn check_sol_identities(patch: &SurfacePatch, grid: &PatchGrid, seed: u64) -> Result<Vec<IdentityCheck>, VerifyError> {
    let s = patch.space;
    if s.kind != SpaceKind::Sol {
        return Err(VerifyError::Unsupported("Sol identities need a Sol patch".into()));
    }
    require_umbilic(patch, grid)?;
    let pts = grid.points(patch)?;
    let info = grid.info(patch);
    let h = grid.steps(patch);

    let frame = pts.par_iter().map(|&(u, v)| Ok(Some(frame_table_residual(&s, &patch.point(u, v))))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<[V3; 4]> = pts
        .iter()
        .map(|&(u, v)| {
            let p = patch.point(u, v);
            std::array::from_fn(|_| random_unit(&s, &p, &mut rng))
        })
        .collect();
    let curvature = pts
        .par_iter()
        .zip(probes)
        .map(|(&(u, v), [x, y, z, w])| {
            let p = patch.point(u, v);
            let q = (s.riemann(&p).quad(&x, &y, &z, &w) - sol_curvature_form(&s, &p, &x, &y, &z, &w)).abs();
            Ok(Some(q.max(daniel_residual(patch, u, v, 2.0)?)))
        })
        .collect();

    let locals: Vec<Result<Local, VerifyError>> = pts.par_iter().map(|&(u, v)| Local::at(patch, u, v, h)).collect();
    let mut bracket = Vec::new();
    let mut jtnu = Vec::new();
    let mut lie = Vec::new();
    let mut alpha = Vec::new();
    for l in locals {
        let l = l?;
        let x = l.c.forms.jet.x;
        let e = sol_frame(&x);
        let a = s.inner(&x, &l.c.t, &e[0]);
        let b = s.inner(&x, &l.c.t, &e[1]);
        let nu = l.f.nu;
        alpha.push(Ok(Some(a.abs())));
        if l.t_norm(&s) < T_FLOOR || nu.abs() < T_FLOOR {
            bracket.push(Ok(None));
            jtnu.push(Ok(None));
            lie.push(Ok(None));
            continue;
        }
        let one = 1.0 - nu * nu;
        let br = l.bracket();
        let want = (4.0 * a * b / (nu * one)) * l.c.t + ((a * a - b * b) * (1.0 + nu * nu) / (nu * nu * one)) * l.c.jt;
        bracket.push(Ok(Some(norm(&s, &x, &(l.vector(br) - want)))));
        jtnu.push(Ok(Some((l.along(l.f.jt, 1) - 2.0 * a * b / nu).abs())));
        let applied = l.along(br, 0);
        let factor = a * b * (3.0 * nu * nu - 2.0 * nu - 1.0);
        lie.push(Ok(Some((applied - 8.0 * a * b).abs().max(factor.abs()))));
    }

    Ok(vec![
        collect(IdentityName::SolFrameTable, s, info.clone(), frame)?,
        collect(IdentityName::SolCurvatureFormula, s, info.clone(), curvature)?,
        check_gradient_identity(patch, grid)?,
        collect(IdentityName::BracketTJT, s, info.clone(), bracket)?,
        collect(IdentityName::JtNu, s, info.clone(), jtnu)?,
        collect(IdentityName::LieLambda, s, info.clone(), lie)?,
        collect(IdentityName::AlphaComponent, s, info, alpha)?,
    ])
}

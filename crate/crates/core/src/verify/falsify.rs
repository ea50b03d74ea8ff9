//! Multistart search for nearly umbilic surfaces in M³(κ, τ).
//!
//! Two trial families in the fibration chart, both invariant under rotation
//! about the fiber through the origin (an isometry for every κ, τ), so the
//! defect on a 24 × 24 grid equals its maximum over the 24 profile samples:
//!
//! * geodesic spheres of radius r about the origin, shape operator from Jacobi fields;
//! * surfaces of revolution whose profile solves θ' = a·cs_k(ρ) for a free k.
//!
//! The normalized defect is scale-dependent (it tends to 0 on tiny surfaces),
//! so both families are bounded in size and curvature; see [`TrialFamily`].

use super::VerifyError;
use crate::geometry::{contract, ModelGeometry, V3};
use crate::ode::{self, Options};
use crate::profile::product_profile;
use crate::surface::{families::revolution_patch, normalized_defect};
use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Samples along the profile (and, by symmetry, around each orbit).
pub const GRID: usize = 24;
/// Profile window length for the revolution family.
const WINDOW: f64 = 0.6;
/// Minimum base distance from the rotation axis, where every revolution surface is umbilic.
const RHO_MIN: f64 = 0.3;
const RHO_MAX: f64 = 2.0;
const R_MIN: f64 = 0.5;
/// Principal curvature cap for the revolution family: no more curved than the
/// smallest trial sphere, so both families live on one length scale.
const CURV_MAX: f64 = 1.0 / R_MIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialFamily {
    /// Geodesic spheres, r ∈ [0.5, 2].
    GeodesicSpheres,
    /// Revolution surfaces with parameters (a, k, s₀): a ∈ [0.2, 3], k ∈ [−2, 2],
    /// profile window s ∈ [s₀, s₀ + 0.6] with s₀ ∈ [0.2, 3], base distance in [0.3, 2]
    /// and |λᵢ| ≤ 2.
    RevolutionProfiles,
}

impl TrialFamily {
    pub const ALL: [TrialFamily; 2] = [TrialFamily::GeodesicSpheres, TrialFamily::RevolutionProfiles];

    fn bounds(self) -> Vec<(f64, f64)> {
        match self {
            TrialFamily::GeodesicSpheres => vec![(R_MIN, 2.0)],
            TrialFamily::RevolutionProfiles => vec![(0.2, 3.0), (-2.0, 2.0), (0.2, 3.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// τ ≠ 0 and κ ≠ 4τ²: no umbilic surface exists.
    Nonexistence,
    /// κ = 4τ²: a space form, geodesic spheres are umbilic.
    SpaceFormControl,
    /// τ = 0: a product, the rotational families are umbilic.
    ProductControl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FalsifierConfig {
    pub kappa: f64,
    pub tau: f64,
    pub n_starts: usize,
    /// Nelder–Mead iterations allowed per start.
    pub max_iters: u64,
    pub seed: u64,
}

impl FalsifierConfig {
    pub fn new(kappa: f64, tau: f64, n_starts: usize, seed: u64) -> Self {
        Self { kappa, tau, n_starts, max_iters: 300, seed }
    }

    pub fn regime(&self) -> Regime {
        if (self.kappa - 4.0 * self.tau * self.tau).abs() < 1e-14 {
            Regime::SpaceFormControl
        } else if self.tau == 0.0 {
            Regime::ProductControl
        } else {
            Regime::Nonexistence
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyFloor {
    pub family: TrialFamily,
    pub min_defect: f64,
    pub best_params: Vec<f64>,
    pub evaluations: u64,
    /// Starts that stopped on the iteration cap rather than converging.
    pub exhausted_starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsifierResult {
    pub config: FalsifierConfig,
    pub regime: Regime,
    pub min_defect_found: f64,
    pub best_family: TrialFamily,
    pub best_params: Vec<f64>,
    pub families: Vec<FamilyFloor>,
    /// The start that produced the minimum hit the iteration cap: the floor is partial.
    pub budget_exhausted: bool,
}

/// Distance outside the box, for the penalty.
fn violation(p: &[f64], bounds: &[(f64, f64)]) -> f64 {
    p.iter().zip(bounds).map(|(x, (lo, hi))| (lo - x).max(x - hi).max(0.0)).sum()
}

/// Principal curvatures of the geodesic sphere of radius `r` about the origin, at
/// the point reached from the initial direction of polar angle `polar`.
pub fn geodesic_sphere_shape(space: &ModelGeometry, r: f64, polar: f64) -> Option<(f64, f64)> {
    // at the origin of the fibration chart the metric is the identity
    let (s, c) = polar.sin_cos();
    let dir = V3::new(s, 0.0, c);
    let e = [V3::new(c, 0.0, -s), V3::y()];
    let mut y0 = [0.0; 18];
    for k in 0..3 {
        y0[3 + k] = r * dir[k];
        y0[9 + k] = e[0][k];
        y0[15 + k] = e[1][k];
    }
    let sp = *space;
    let rhs = move |_: f64, y: &[f64; 18]| {
        let x = V3::new(y[0], y[1], y[2]);
        let dx = V3::new(y[3], y[4], y[5]);
        let (gam, dgam) = sp.gamma_d1(&x);
        let acc = -contract(&gam, &dx, &dx);
        let mut out = [0.0; 18];
        for k in 0..3 {
            out[k] = y[3 + k];
            out[3 + k] = acc[k];
        }
        for b in 0..2 {
            let o = 6 + 6 * b;
            let j = V3::new(y[o], y[o + 1], y[o + 2]);
            let dj = V3::new(y[o + 3], y[o + 4], y[o + 5]);
            // J'' = −(∂_m Γ J^m)(ẋ, ẋ) − 2Γ(ẋ, J')
            let mut ddj = -2.0 * contract(&gam, &dx, &dj);
            for m in 0..3 {
                ddj -= j[m] * contract(&dgam[m], &dx, &dx);
            }
            for k in 0..3 {
                out[o + k] = y[o + 3 + k];
                out[o + 3 + k] = ddj[k];
            }
        }
        out
    };
    let sol = ode::solve(rhs, 0.0, y0, 1.0, &Options::with_tol(1e-12, 1e-14)).ok()?;
    let y = sol.y_end();
    let x = V3::new(y[0], y[1], y[2]);
    if !space.in_domain(&x) {
        return None;
    }
    let dx = V3::new(y[3], y[4], y[5]);
    let gam = space.gamma(&x);
    let j: [V3; 2] = std::array::from_fn(|b| V3::new(y[6 + 6 * b], y[7 + 6 * b], y[8 + 6 * b]));
    // ∇_J N with N = γ'/r is (J' + Γ(γ', J))/r
    let p: [V3; 2] = std::array::from_fn(|b| {
        let o = 6 + 6 * b;
        (V3::new(y[o + 3], y[o + 4], y[o + 5]) + contract(&gam, &dx, &j[b])) / r
    });
    let ip = |a: &V3, b: &V3| space.inner(&x, a, b);
    let g = nalgebra::Matrix2::new(ip(&j[0], &j[0]), ip(&j[0], &j[1]), ip(&j[1], &j[0]), ip(&j[1], &j[1]));
    let m = nalgebra::Matrix2::new(ip(&j[0], &p[0]), ip(&j[0], &p[1]), ip(&j[1], &p[0]), ip(&j[1], &p[1]));
    if g.determinant() < 1e-12 * (1.0 + g.norm_squared()) {
        return None;
    }
    let w = g.try_inverse()? * m;
    let mean = 0.5 * w.trace();
    let a11 = 0.5 * (w[(0, 0)] - w[(1, 1)]);
    let half = (a11 * a11 + w[(0, 1)] * w[(1, 0)]).max(0.0).sqrt();
    Some((mean - half, mean + half))
}

struct Objective {
    space: ModelGeometry,
    family: TrialFamily,
}

impl Objective {
    fn defect(&self, p: &[f64]) -> f64 {
        let bounds = self.family.bounds();
        let out = violation(p, &bounds);
        if out > 0.0 {
            return 1.0 + out;
        }
        match self.family {
            TrialFamily::GeodesicSpheres => {
                let mut worst: f64 = 0.0;
                for k in 0..GRID {
                    match geodesic_sphere_shape(&self.space, p[0], PI * k as f64 / (GRID - 1) as f64) {
                        Some((l1, l2)) => worst = worst.max(normalized_defect(l1, l2)),
                        None => return 2.0,
                    }
                }
                worst
            }
            TrialFamily::RevolutionProfiles => self.revolution_defect(p[0], p[1], p[2]),
        }
    }

    fn revolution_defect(&self, a: f64, k: f64, s0: f64) -> f64 {
        let s1 = s0 + WINDOW;
        let Ok(curve) = product_profile(k, a, (0.0, s1), 1e-11) else {
            return 2.0;
        };
        let rho_scale = if self.space.kappa > 0.0 { self.space.kappa.sqrt() } else { 1.0 };
        let patch = revolution_patch(self.space, Arc::new(curve), (s0, s1), (-PI, PI));
        let mut worst: f64 = 0.0;
        let mut penalty: f64 = 0.0;
        for i in 0..GRID {
            let s = s0 + WINDOW * i as f64 / (GRID - 1) as f64;
            let rho = patch_rho(&patch, s, &self.space);
            // keep clear of the axis and (for κ > 0) of the chart's pole
            penalty += (RHO_MIN - rho).max(0.0) + (rho * rho_scale - RHO_MAX).max(0.0);
            match patch.principal_curvatures(s, 0.0) {
                Ok((l1, l2)) => {
                    penalty += (l1.abs().max(l2.abs()) - CURV_MAX).max(0.0);
                    worst = worst.max(normalized_defect(l1, l2));
                }
                Err(_) => return 2.0,
            }
        }
        if penalty > 0.0 {
            1.0 + penalty
        } else {
            worst
        }
    }
}

/// Base distance of the profile point from the axis, read back from the chart radius.
fn patch_rho(patch: &crate::surface::SurfacePatch, s: f64, space: &ModelGeometry) -> f64 {
    let x = patch.point(s, 0.0);
    let r = x.x.hypot(x.y);
    let k = space.kappa;
    if k > 0.0 {
        2.0 * (0.5 * k.sqrt() * r).atan() / k.sqrt()
    } else if k < 0.0 {
        2.0 * (0.5 * (-k).sqrt() * r).atanh() / (-k).sqrt()
    } else {
        r
    }
}

impl CostFunction for Objective {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        Ok(self.defect(p))
    }
}

struct Run {
    cost: f64,
    params: Vec<f64>,
    evaluations: u64,
    exhausted: bool,
}

fn run_start(space: ModelGeometry, family: TrialFamily, x0: Vec<f64>, max_iters: u64) -> Run {
    let bounds = family.bounds();
    let mut simplex = vec![x0.clone()];
    for (i, (lo, hi)) in bounds.iter().enumerate() {
        let mut p = x0.clone();
        let step = 0.1 * (hi - lo);
        // step inward so the initial simplex stays feasible
        p[i] += if x0[i] + step <= *hi { step } else { -step };
        simplex.push(p);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-13).expect("positive tolerance");
    let obj = Objective { space, family };
    let res = Executor::new(obj, solver).configure(|s| s.max_iters(max_iters)).run();
    match res {
        Ok(r) => {
            let st = r.state();
            let exhausted = matches!(st.get_termination_status(), TerminationStatus::Terminated(TerminationReason::MaxItersReached));
            let evaluations = st.get_func_counts().values().sum();
            Run { cost: st.get_best_cost(), params: st.get_best_param().cloned().unwrap_or(x0), evaluations, exhausted }
        }
        Err(_) => Run { cost: f64::INFINITY, params: x0, evaluations: 0, exhausted: true },
    }
}

/// Minimizes the maximum normalized defect over each trial family from
/// `n_starts` seeded random starts; restarts run in parallel and are merged by
/// minimum, so the result depends only on the configuration.
pub fn nonexistence_falsifier(cfg: &FalsifierConfig) -> Result<FalsifierResult, VerifyError> {
    let space = ModelGeometry::m3(cfg.kappa, cfg.tau)?;
    if cfg.n_starts == 0 {
        return Err(VerifyError::Unsupported("at least one start is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut floors = Vec::new();
    let mut best: Option<(f64, TrialFamily, Vec<f64>, bool)> = None;
    for family in TrialFamily::ALL {
        let starts: Vec<Vec<f64>> = (0..cfg.n_starts).map(|_| family.bounds().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()).collect();
        let runs: Vec<Run> = starts.into_par_iter().map(|x0| run_start(space, family, x0, cfg.max_iters)).collect();
        let evaluations = runs.iter().map(|r| r.evaluations).sum();
        let exhausted_starts = runs.iter().filter(|r| r.exhausted).count();
        // first minimum in start order keeps the merge deterministic
        let top = runs.iter().fold(&runs[0], |b, r| if r.cost < b.cost { r } else { b });
        floors.push(FamilyFloor { family, min_defect: top.cost, best_params: top.params.clone(), evaluations, exhausted_starts });
        if best.as_ref().map_or(true, |b| top.cost < b.0) {
            best = Some((top.cost, family, top.params.clone(), top.exhausted));
        }
    }
    let (min_defect_found, best_family, best_params, budget_exhausted) = best.expect("two families searched");
    Ok(FalsifierResult { config: *cfg, regime: cfg.regime(), min_defect_found, best_family, best_params, families: floors, budget_exhausted })
}

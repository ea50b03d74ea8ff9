//! Generating curves of the invariant umbilic surfaces.
//!
//! Product-space profiles are arclength curves `(ρ(s), t(s))` in a vertical
//! totally geodesic plane with slope angle θ: ρ' = cos θ, t' = sin θ. Each
//! family is fixed by the law for θ'. These first-order systems are smooth
//! through ρ = 0 and through turning points, so no square-root branch ever has
//! to be chosen.
//!
//! The Sol profile is integrated in Euclidean arclength σ of the `(y, z)` chart
//! plane (y' = cos ψ, z' = sin ψ), which stays regular up to the blow-down
//! where z → −∞.

use crate::ode::{self, Dense, OdeError, Options};
use crate::roots;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    /// Parameter outside the family's legal range; the message names the range.
    #[error("{0}")]
    Param(String),
    #[error("event not bracketed in the integration range")]
    NotBracketed,
    #[error("profile integration failed: {0}")]
    Integration(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    S2xRSlice,
    S2xRCylinder,
    S2xRALt1,
    S2xRAEq1,
    S2xRAGt1,
    H2xRSlice,
    H2xRVerticalPlane,
    H2xRElliptic,
    H2xRParabolic,
    H2xRHyperbolic,
    SolGeodesicPlane,
    SolFa,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::S2xRSlice,
        Family::S2xRCylinder,
        Family::S2xRALt1,
        Family::S2xRAEq1,
        Family::S2xRAGt1,
        Family::H2xRSlice,
        Family::H2xRVerticalPlane,
        Family::H2xRElliptic,
        Family::H2xRParabolic,
        Family::H2xRHyperbolic,
        Family::SolGeodesicPlane,
        Family::SolFa,
    ];

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Family::S2xRSlice | Family::H2xRSlice => "slice",
            Family::S2xRCylinder => "cylinder",
            Family::S2xRALt1 => "a-lt-1",
            Family::S2xRAEq1 => "a-eq-1",
            Family::S2xRAGt1 => "a-gt-1",
            Family::H2xRVerticalPlane => "vertical-plane",
            Family::H2xRElliptic => "elliptic",
            Family::H2xRParabolic => "parabolic",
            Family::H2xRHyperbolic => "hyperbolic",
            Family::SolGeodesicPlane => "geodesic-plane",
            Family::SolFa => "fa",
        }
    }

    pub fn space_name(self) -> &'static str {
        match self {
            Family::S2xRSlice | Family::S2xRCylinder | Family::S2xRALt1 | Family::S2xRAEq1 | Family::S2xRAGt1 => "s2xr",
            Family::H2xRSlice
            | Family::H2xRVerticalPlane
            | Family::H2xRElliptic
            | Family::H2xRParabolic
            | Family::H2xRHyperbolic => "h2xr",
            Family::SolGeodesicPlane | Family::SolFa => "sol",
        }
    }

    pub fn from_names(space: &str, family: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.space_name() == space && f.cli_name() == family)
    }

    /// `(parameter symbol, human-readable legal range)`; `None` for parameter-free families.
    pub fn parameter(self) -> Option<(&'static str, &'static str)> {
        match self {
            Family::S2xRALt1 => Some(("a", "(0,1)")),
            Family::S2xRAGt1 => Some(("a", "(1,inf)")),
            Family::H2xRElliptic => Some(("b", "(0,inf)")),
            Family::H2xRHyperbolic => Some(("c", "(0,1)")),
            Family::SolFa => Some(("a", "(0,inf)")),
            _ => None,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Family::S2xRSlice => "horizontal slice S2x{t0}, totally geodesic",
            Family::S2xRCylinder => "vertical cylinder over a great circle, totally geodesic",
            Family::S2xRALt1 => "rotational, profile crosses both poles; not homologous to zero",
            Family::S2xRAEq1 => "rotational, profile asymptotic to the equator; closed-form profile",
            Family::S2xRAGt1 => "rotational sphere-type surface, homologous to zero",
            Family::H2xRSlice => "horizontal slice H2x{t0}, totally geodesic",
            Family::H2xRVerticalPlane => "vertical plane over a geodesic, totally geodesic",
            Family::H2xRElliptic => "rotational (elliptic isometries), compact profile period",
            Family::H2xRParabolic => "parabolic-invariant surface S_P, horocycle slices",
            Family::H2xRHyperbolic => "hyperbolic-invariant, equidistant slices",
            Family::SolGeodesicPlane => "vertical plane {y = y0}, totally geodesic",
            Family::SolFa => "x-translation invariant F_a, z(0) = log(a)/4",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.space_name(), self.cli_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub param: Option<f64>,
}

impl FamilySpec {
    pub fn new(family: Family, param: Option<f64>) -> Result<Self, ProfileError> {
        let err = |m: &str| Err(ProfileError::Param(m.to_string()));
        match (family.parameter(), param) {
            (None, Some(_)) => return err(&format!("family {family} takes no parameter")),
            (Some((sym, range)), None) => return err(&format!("{sym} is required and must lie in {range}")),
            (Some(_), Some(p)) if !p.is_finite() => return err("parameter must be finite"),
            _ => {}
        }
        let ok = match (family, param) {
            (Family::S2xRALt1, Some(a)) => a > 0.0 && a < 1.0,
            (Family::S2xRAGt1, Some(a)) => a > 1.0,
            (Family::H2xRElliptic | Family::SolFa, Some(b)) => b > 0.0,
            (Family::H2xRHyperbolic, Some(c)) => c > 0.0 && c < 1.0,
            _ => true,
        };
        if !ok {
            let (sym, range) = family.parameter().unwrap();
            return err(&format!("{sym} must lie in {range}"));
        }
        Ok(Self { family, param })
    }
}

/// Law for θ' along an arclength profile with ρ' = cos θ, t' = sin θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    /// θ' = a·cs_κ(ρ): rotational umbilic profiles over M²(κ) (the a- and b-families).
    Rotational { a: f64, kappa: f64 },
    /// θ' = c·sinh ρ (H², equidistant slices).
    Hyperbolic { c: f64 },
    /// θ' = sin θ (H², horocycle slices).
    Parabolic,
}

impl Law {
    fn theta_prime(&self, rho: f64, theta: f64) -> f64 {
        match *self {
            Law::Rotational { a, kappa } => a * cs_kappa(kappa, rho),
            Law::Hyperbolic { c } => c * rho.sinh(),
            Law::Parabolic => theta.sin(),
        }
    }

    fn rhs(&self, y: &[f64; 3]) -> [f64; 3] {
        let (s, c) = y[2].sin_cos();
        [c, s, self.theta_prime(y[0], y[2])]
    }

    /// dθ'/dρ and dθ'/dθ, for third derivatives of the profile.
    fn theta_prime_partials(&self, rho: f64, theta: f64) -> (f64, f64) {
        match *self {
            Law::Rotational { a, kappa } => (-a * kappa * sn_kappa(kappa, rho), 0.0),
            Law::Hyperbolic { c } => (c * rho.cosh(), 0.0),
            Law::Parabolic => (0.0, theta.cos()),
        }
    }
}

/// sn_κ(ρ): sin(√κρ)/√κ, ρ, or sinh(√−κρ)/√−κ.
pub fn sn_kappa(kappa: f64, rho: f64) -> f64 {
    if kappa > 0.0 {
        let k = kappa.sqrt();
        (k * rho).sin() / k
    } else if kappa < 0.0 {
        let k = (-kappa).sqrt();
        (k * rho).sinh() / k
    } else {
        rho
    }
}

/// cs_κ(ρ) = sn_κ'(ρ).
pub fn cs_kappa(kappa: f64, rho: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * rho).cos()
    } else if kappa < 0.0 {
        ((-kappa).sqrt() * rho).cosh()
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ClosedForm {
    /// ρ = π/2 − 2 arctan e^{−s}, t = log cosh s.
    AEq1,
    /// θ = 2 arctan e^s, ρ = −log cosh s, t = 2 arctan e^s − π/2.
    Parabolic,
}

impl ClosedForm {
    fn state(self, s: f64) -> [f64; 3] {
        match self {
            ClosedForm::AEq1 => {
                let rho = FRAC_PI_2 - 2.0 * (-s).exp().atan();
                [rho, log_cosh(s), rho]
            }
            ClosedForm::Parabolic => {
                let th = 2.0 * s.exp().atan();
                [-log_cosh(s), th - FRAC_PI_2, th]
            }
        }
    }

    fn law(self) -> Law {
        match self {
            ClosedForm::AEq1 => Law::Rotational { a: 1.0, kappa: 1.0 },
            ClosedForm::Parabolic => Law::Parabolic,
        }
    }
}

/// log cosh s without overflow.
pub fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodData {
    /// First s > 0 with ρ(s) = π (S²×R, a < 1).
    pub s1: Option<f64>,
    /// First s > 0 with ρ'(s) = 0 (δ_a, δ_b, or the hyperbolic turning point s₀).
    pub delta: Option<f64>,
}

/// Profile derivatives at one arclength value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub s: f64,
    pub rho: f64,
    pub drho: f64,
    pub ddrho: f64,
    pub t: f64,
    pub dt: f64,
    pub ddt: f64,
    pub theta: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileEvent {
    RhoPrimeZero,
    RhoHits(f64),
    BlowDown,
}

#[derive(Debug, Clone)]
enum Source {
    Closed(ClosedForm),
    Integrated { fwd: Option<Dense<3>>, bwd: Option<Dense<3>> },
}

/// Arclength profile `(s, ρ, t, θ)` of a product-space family.
#[derive(Debug, Clone)]
pub struct GeneratingCurve {
    pub spec: Option<FamilySpec>,
    pub law: Law,
    pub kappa: f64,
    pub s_range: (f64, f64),
    pub periods: PeriodData,
    source: Source,
}

fn opts_for(tol: f64) -> Options {
    Options { rtol: tol, atol: tol * 1e-2, ..Options::default() }
}

impl GeneratingCurve {
    /// Integrates `law` from the state `(ρ, t, θ)` at s = 0 over `s_range` (which must contain 0).
    pub fn integrate(law: Law, kappa: f64, init: [f64; 3], s_range: (f64, f64), tol: f64) -> Result<Self, ProfileError> {
        let (lo, hi) = s_range;
        assert!(lo <= 0.0 && hi >= 0.0, "s_range must contain 0");
        let opts = opts_for(tol);
        let rhs = |_: f64, y: &[f64; 3]| law.rhs(y);
        let fwd = if hi > 0.0 { Some(ode::solve(rhs, 0.0, init, hi, &opts)?) } else { None };
        let bwd = if lo < 0.0 { Some(ode::solve(rhs, 0.0, init, lo, &opts)?) } else { None };
        let mut c = Self {
            spec: None,
            law,
            kappa,
            s_range,
            periods: PeriodData::default(),
            source: Source::Integrated { fwd, bwd },
        };
        c.periods.delta = c.find_event(ProfileEvent::RhoPrimeZero, 1e-14).ok().filter(|s| *s > 0.0);
        Ok(c)
    }

    fn closed(form: ClosedForm, spec: FamilySpec, kappa: f64, s_range: (f64, f64)) -> Self {
        Self { spec: Some(spec), law: form.law(), kappa, s_range, periods: PeriodData::default(), source: Source::Closed(form) }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.source, Source::Closed(_))
    }

    /// `(ρ, t, θ)` at arclength `s`.
    pub fn state(&self, s: f64) -> [f64; 3] {
        match &self.source {
            Source::Closed(f) => f.state(s),
            Source::Integrated { fwd, bwd } => {
                let d = if s >= 0.0 { fwd.as_ref().or(bwd.as_ref()) } else { bwd.as_ref().or(fwd.as_ref()) };
                d.expect("profile has no integrated branch").eval(s)
            }
        }
    }

    pub fn jet(&self, s: f64) -> ProfileJet {
        let [rho, t, theta] = self.state(s);
        let (sn, cs) = theta.sin_cos();
        let dtheta = self.law.theta_prime(rho, theta);
        ProfileJet { s, rho, drho: cs, ddrho: -sn * dtheta, t, dt: sn, ddt: cs * dtheta, theta, dtheta }
    }

    /// Third derivatives (ρ''', t''') from the law, used for curvature gradients.
    pub fn third(&self, s: f64) -> (f64, f64) {
        let [rho, _, theta] = self.state(s);
        let (sn, cs) = theta.sin_cos();
        let th1 = self.law.theta_prime(rho, theta);
        let (pr, pt) = self.law.theta_prime_partials(rho, theta);
        let th2 = pr * cs + pt * th1;
        (-cs * th1 * th1 - sn * th2, -sn * th1 * th1 + cs * th2)
    }

    /// Locates an event; among all roots in `s_range` the one closest to s = 0 is returned
    /// (the positive one on ties).
    pub fn find_event(&self, event: ProfileEvent, tol: f64) -> Result<f64, ProfileError> {
        let g = |y: &[f64; 3]| match event {
            ProfileEvent::RhoPrimeZero => y[2].cos(),
            ProfileEvent::RhoHits(v) => y[0] - v,
            ProfileEvent::BlowDown => f64::NAN,
        };
        if event == ProfileEvent::BlowDown {
            return Err(ProfileError::NotBracketed);
        }
        let mut found: Vec<f64> = Vec::new();
        match &self.source {
            Source::Integrated { fwd, bwd } => {
                for d in [fwd, bwd].into_iter().flatten() {
                    found.extend(d.roots(|_, y| g(y), 4, tol));
                }
            }
            Source::Closed(f) => {
                let (lo, hi) = self.s_range;
                let n = 4000;
                let h = |s: f64| g(&f.state(s));
                let mut sa = lo;
                let mut ga = h(sa);
                for k in 1..=n {
                    let sb = lo + (hi - lo) * k as f64 / n as f64;
                    let gb = h(sb);
                    if ga == 0.0 {
                        found.push(sa);
                    } else if ga * gb < 0.0 {
                        found.extend(roots::brent(h, sa, sb, tol));
                    }
                    sa = sb;
                    ga = gb;
                }
                if ga == 0.0 {
                    found.push(sa);
                }
            }
        }
        found
            .into_iter()
            .min_by(|a, b| a.abs().total_cmp(&b.abs()).then(b.total_cmp(a)))
            .ok_or(ProfileError::NotBracketed)
    }

    /// Uniform samples `(s, ρ, t, θ)` over `s_range`.
    pub fn samples(&self, n: usize) -> Vec<[f64; 4]> {
        let (lo, hi) = self.s_range;
        (0..n)
            .map(|k| {
                let s = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
                let [r, t, th] = self.state(s);
                [s, r, t, th]
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, n: usize) -> io::Result<()> {
        writeln!(w, "s,rho,t,theta")?;
        for [s, r, t, th] in self.samples(n) {
            writeln!(w, "{s:.16e},{r:.16e},{t:.16e},{th:.16e}")?;
        }
        Ok(())
    }
}

/// S²×R profile with parameter a: ρ' = √(1 − a² sin²ρ), t' = a sin ρ (closed form at a = 1).
pub fn s2xr_profile(a: f64, s_range: (f64, f64), tol: f64) -> Result<GeneratingCurve, ProfileError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ProfileError::Param("a must be > 0".into()));
    }
    if a == 1.0 {
        let spec = FamilySpec::new(Family::S2xRAEq1, None)?;
        return Ok(GeneratingCurve::closed(ClosedForm::AEq1, spec, 1.0, s_range));
    }
    let family = if a < 1.0 { Family::S2xRALt1 } else { Family::S2xRAGt1 };
    let mut c = GeneratingCurve::integrate(Law::Rotational { a, kappa: 1.0 }, 1.0, [0.0; 3], s_range, tol)?;
    c.spec = Some(FamilySpec::new(family, Some(a))?);
    if a < 1.0 {
        c.periods.s1 = c.find_event(ProfileEvent::RhoHits(PI), 1e-14).ok();
        c.periods.delta = None;
    }
    Ok(c)
}

/// Integrated (not closed-form) a = 1 profile, for cross-checking the closed form.
pub fn s2xr_a1_integrated(s_range: (f64, f64), tol: f64) -> Result<GeneratingCurve, ProfileError> {
    GeneratingCurve::integrate(Law::Rotational { a: 1.0, kappa: 1.0 }, 1.0, [0.0; 3], s_range, tol)
}

/// H²×R elliptic (rotational) profile: ρ' = √(1 − b² sinh²ρ), t' = b sinh ρ.
pub fn h2xr_elliptic_profile(b: f64, s_range: (f64, f64), tol: f64) -> Result<GeneratingCurve, ProfileError> {
    let spec = FamilySpec::new(Family::H2xRElliptic, Some(b))?;
    let mut c = GeneratingCurve::integrate(Law::Rotational { a: b, kappa: -1.0 }, -1.0, [0.0; 3], s_range, tol)?;
    c.spec = Some(spec);
    Ok(c)
}

/// H²×R parabolic profile (closed form).
pub fn h2xr_parabolic_profile(s_range: (f64, f64)) -> GeneratingCurve {
    let spec = FamilySpec { family: Family::H2xRParabolic, param: None };
    GeneratingCurve::closed(ClosedForm::Parabolic, spec, -1.0, s_range)
}

/// Integrated parabolic profile θ' = sin θ from θ(0) = π/2.
pub fn h2xr_parabolic_integrated(s_range: (f64, f64), tol: f64) -> Result<GeneratingCurve, ProfileError> {
    GeneratingCurve::integrate(Law::Parabolic, -1.0, [0.0, 0.0, FRAC_PI_2], s_range, tol)
}

/// H²×R hyperbolic profile: ρ'² − 1 = −c² cosh²ρ, t' = c cosh ρ, with ρ'(0) = √(1 − c²).
pub fn h2xr_hyperbolic_profile(c: f64, s_range: (f64, f64), tol: f64) -> Result<GeneratingCurve, ProfileError> {
    let spec = FamilySpec::new(Family::H2xRHyperbolic, Some(c))?;
    let mut g = GeneratingCurve::integrate(Law::Hyperbolic { c }, -1.0, [0.0, 0.0, c.asin()], s_range, tol)?;
    g.spec = Some(spec);
    Ok(g)
}

/// Rotational umbilic-product profile over M²(κ) with θ' = a·cs_κ(ρ); used by trial families.
pub fn product_profile(kappa: f64, a: f64, s_range: (f64, f64), tol: f64) -> Result<GeneratingCurve, ProfileError> {
    GeneratingCurve::integrate(Law::Rotational { a, kappa }, kappa, [0.0; 3], s_range, tol)
}

/// Sol profile z(y) of F_a: z'' + 3z'² + 2e^{−2z} = 0, z'(0) = 0, z(0) = ¼ log a.
///
/// Stored in chart arclength σ ≥ 0; negative σ is obtained from the evenness
/// of z. Internally the slope is carried as w = ψ + π/2, which tends to 0 at the
/// blow-down, so relative step control keeps cos ψ (hence z' = tan ψ) accurate
/// even where |z'| is huge.
#[derive(Debug, Clone)]
pub struct SolProfile {
    pub a: f64,
    pub z_clip: f64,
    /// Arclength where z reaches `z_clip`.
    pub sigma_clip: f64,
    /// Half-width of the profile's y-domain: |y| < y_a.
    pub y_a: f64,
    dense: Dense<3>,
}

pub const SOL_Z_CLIP: f64 = -30.0;

/// State `(y, z, w)`: y' = sin w, z' = −cos w, w' = −3 cos²w sin w − 2e^{−2z} sin³w.
fn sol_rhs(y: &[f64; 3]) -> [f64; 3] {
    let (s, c) = y[2].sin_cos();
    [s, -c, -3.0 * c * c * s - 2.0 * (-2.0 * y[1]).exp() * s * s * s]
}

pub fn sol_profile(a: f64, tol: f64) -> Result<SolProfile, ProfileError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ProfileError::Param("a must lie in (0,inf)".into()));
    }
    let z0 = 0.25 * a.ln();
    // y(0) = 0 would drive the automatic first-step guess to zero under atol = 1e-30
    let opts = Options { rtol: tol, atol: 1e-30, h0: 1e-3, ..Options::default() };
    let z_clip = SOL_Z_CLIP;
    let dense = ode::solve_until(|_, y: &[f64; 3]| sol_rhs(y), 0.0, [0.0, z0, FRAC_PI_2], 1e4, &opts, |_, y| y[1] < z_clip)?;
    let sigma_clip = dense.first_root(|_, y| y[1] - z_clip, 1e-14).ok_or(ProfileError::NotBracketed)?;
    let y_clip = dense.eval(sigma_clip)[0];
    // tail ∫_{−∞}^{z_clip} dz / √(a e^{−6z} − e^{−2z}); the integrand decays like e^{3z}
    let tail = quadrature::integrate(
        |z: f64| 1.0 / (a * (-6.0 * z).exp() - (-2.0 * z).exp()).sqrt(),
        z_clip - 40.0,
        z_clip,
        1e-30,
    )
    .integral;
    Ok(SolProfile { a, z_clip, sigma_clip, y_a: y_clip + tail, dense })
}

/// Derivatives of the Sol profile in σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolJet {
    pub sigma: f64,
    pub y: f64,
    pub dy: f64,
    pub ddy: f64,
    pub z: f64,
    pub dz: f64,
    pub ddz: f64,
    /// z'(y) = tan ψ, computed without cancellation.
    pub slope: f64,
}

impl SolProfile {
    pub fn z_max(&self) -> f64 {
        self.dense.eval(0.0)[1]
    }

    /// `(y, z, cos ψ, sin ψ)` at σ.
    fn frame(&self, sigma: f64) -> [f64; 4] {
        let [y, z, w] = self.dense.eval(sigma.abs());
        let (sw, cw) = w.sin_cos();
        if sigma < 0.0 {
            [-y, z, sw, cw]
        } else {
            [y, z, sw, -cw]
        }
    }

    /// `(y, z, ψ)` at chart arclength σ, |σ| ≤ σ_clip.
    pub fn state(&self, sigma: f64) -> [f64; 3] {
        let [y, z, c, s] = self.frame(sigma);
        [y, z, s.atan2(c)]
    }

    pub fn jet(&self, sigma: f64) -> SolJet {
        let [y, z, c, s] = self.frame(sigma);
        let dpsi = -3.0 * s * s * c - 2.0 * (-2.0 * z).exp() * c * c * c;
        SolJet { sigma, y, dy: c, ddy: -s * dpsi, z, dz: s, ddz: c * dpsi, slope: s / c }
    }

    /// σ at which z falls to `z` (z ≤ z_max), on the positive branch.
    pub fn sigma_at_z(&self, z: f64) -> Option<f64> {
        if z > self.z_max() || z < self.z_clip {
            return None;
        }
        if z == self.z_max() {
            return Some(0.0);
        }
        roots::brent(|s| self.dense.eval(s)[1] - z, 0.0, self.sigma_clip, 1e-15)
    }

    /// σ(y) for |y| < y(σ_clip), by safeguarded Newton (dy/dσ = cos ψ > 0).
    pub fn sigma_at_y(&self, y: f64) -> Option<f64> {
        let ya = y.abs();
        let yc = self.dense.eval(self.sigma_clip)[0];
        if ya > yc {
            return None;
        }
        let s = roots::newton_bracketed(
            |s| {
                let st = self.dense.eval(s);
                (st[0] - ya, st[2].sin())
            },
            0.0,
            self.sigma_clip,
            ya,
            1e-15,
        )?;
        Some(s.copysign(y))
    }

    pub fn z_of_y(&self, y: f64) -> Option<f64> {
        self.sigma_at_y(y).map(|s| self.frame(s)[1])
    }

    /// z'(y) = tan ψ.
    pub fn dz_dy(&self, y: f64) -> Option<f64> {
        self.sigma_at_y(y).map(|s| self.jet(s).slope)
    }

    /// Relative residual of z'' + 3z'² + 2e^{−2z} at σ, normalized by 1 + 3z'² + 2e^{−2z}.
    /// z'' = d(tan ψ)/dσ / cos ψ uses a fourth-order finite difference of the dense output.
    pub fn ode_residual(&self, sigma: f64) -> f64 {
        let j = self.jet(sigma);
        let h = 1e-3;
        let zyy = ode::deriv5(|s| self.jet(s).slope, sigma, h) / j.dy;
        let (a, b) = (3.0 * j.slope * j.slope, 2.0 * (-2.0 * j.z).exp());
        (zyy + a + b) / (1.0 + a + b)
    }

    /// |z'² − (a e^{−6z} − e^{−2z})| / (1 + a e^{−6z}) at σ.
    pub fn first_integral_residual(&self, sigma: f64) -> f64 {
        let j = self.jet(sigma);
        let big = self.a * (-6.0 * j.z).exp();
        (j.slope * j.slope - (big - (-2.0 * j.z).exp())).abs() / (1.0 + big)
    }

    pub fn samples(&self, n: usize, z_min: f64) -> Vec<[f64; 2]> {
        let smax = self.sigma_at_z(z_min.max(self.z_clip)).unwrap_or(self.sigma_clip);
        (0..n)
            .map(|k| {
                let s = -smax + 2.0 * smax * k as f64 / (n.max(2) - 1) as f64;
                let st = self.state(s);
                [st[0], st[1]]
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W, n: usize, z_min: f64) -> io::Result<()> {
        writeln!(w, "y,z")?;
        for [y, z] in self.samples(n, z_min) {
            writeln!(w, "{y:.16e},{z:.16e}")?;
        }
        Ok(())
    }
}

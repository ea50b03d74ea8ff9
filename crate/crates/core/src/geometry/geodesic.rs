use super::space::{contract, GeomError, ModelGeometry, V3};
use crate::ode::{self, Dense, Options, Termination};

/// Geodesic through `p` with initial velocity `v`, integrated on `[0, t_end]`.
/// State layout: `[x, y, z, ẋ, ẏ, ż]`.
pub fn geodesic(space: &ModelGeometry, p: &V3, v: &V3, t_end: f64, opts: &Options) -> Result<Dense<6>, GeomError> {
    space.check(p)?;
    let rhs = |_: f64, s: &[f64; 6]| {
        let x = V3::new(s[0], s[1], s[2]);
        let w = V3::new(s[3], s[4], s[5]);
        let a = -contract(&space.gamma(&x), &w, &w);
        [s[3], s[4], s[5], a.x, a.y, a.z]
    };
    let y0 = [p.x, p.y, p.z, v.x, v.y, v.z];
    let sol = ode::solve_until(rhs, 0.0, y0, t_end, opts, |_, s| !space.in_domain(&V3::new(s[0], s[1], s[2])))
        .map_err(|e| match e {
            // the chart metric degenerates as the geodesic runs off the chart
            ode::OdeError::StepUnderflow { t } | ode::OdeError::NonFinite { t } => GeomError::Escape(t),
            other => GeomError::Integration(other.to_string()),
        })?;
    if sol.termination == Termination::Stopped {
        return Err(GeomError::Escape(sol.t_end()));
    }
    Ok(sol)
}

/// exp_p(v): the geodesic at parameter 1. `tol` sets the integrator's tolerances.
pub fn exp_map(space: &ModelGeometry, p: &V3, v: &V3, tol: f64) -> Result<V3, GeomError> {
    if v.norm() == 0.0 {
        space.check(p)?;
        return Ok(*p);
    }
    let opts = Options::with_tol(tol, tol * 1e-2);
    let sol = geodesic(space, p, v, 1.0, &opts)?;
    let e = sol.y_end();
    Ok(V3::new(e[0], e[1], e[2]))
}

/// max over the knots of | |γ'(t)| − |v| |.
pub fn speed_drift(space: &ModelGeometry, sol: &Dense<6>) -> f64 {
    let speed = |t: f64| {
        let s = sol.eval(t);
        let x = V3::new(s[0], s[1], s[2]);
        let w = V3::new(s[3], s[4], s[5]);
        space.inner(&x, &w, &w).sqrt()
    };
    let v0 = speed(sol.t_start());
    sol.knots().into_iter().map(|t| (speed(t) - v0).abs()).fold(0.0, f64::max)
}

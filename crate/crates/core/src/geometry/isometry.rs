use super::cx::Cx;
use super::space::{GeomError, ModelGeometry, SpaceKind, M3, V3};
use num_dual::{Dual64, DualNum};
use serde::{Deserialize, Serialize};

/// One isometry of a model space, in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IsometrySpec {
    Identity,
    /// Rotation by `angle` about the vertical line over the base point `axis`.
    Rotation { angle: f64, axis: [f64; 2] },
    /// H² factor only: parabolic motion fixing the ideal point `e^{i·ideal_angle}` of the disk.
    Parabolic { ideal_angle: f64, shift: f64 },
    /// H² factor only: translation by `distance` along the geodesic through the
    /// chart origin with direction angle `direction`.
    Hyperbolic { direction: f64, distance: f64 },
    VerticalShift { c: f64 },
    /// t ↦ 2t₀ − t.
    SliceReflection { t0: f64 },
    /// `(x,y,z) ↦ (sx·e^{−c}x + a, sy·e^{c}y + b, z + c)`, or with `swap`
    /// `(x,y,z) ↦ (sx·e^{−c}y + a, sy·e^{c}x + b, −z + c)`.
    Sol { sx: f64, sy: f64, a: f64, b: f64, c: f64, swap: bool },
}

impl IsometrySpec {
    pub fn validate(&self, space: &ModelGeometry) -> Result<(), GeomError> {
        use SpaceKind::*;
        let bad = |m: &str| Err(GeomError::Isometry(m.to_string()));
        match (*self, space.kind) {
            (IsometrySpec::Identity, _) => Ok(()),
            (IsometrySpec::Rotation { axis, .. }, S2xR | H2xR) => {
                if space.in_domain(&V3::new(axis[0], axis[1], 0.0)) {
                    Ok(())
                } else {
                    bad("rotation axis outside the chart")
                }
            }
            (IsometrySpec::Rotation { axis, .. }, M3KappaTau) => {
                if axis == [0.0, 0.0] {
                    Ok(())
                } else {
                    bad("fibration rotations are supported about the chart axis only")
                }
            }
            (IsometrySpec::Parabolic { .. } | IsometrySpec::Hyperbolic { .. }, H2xR) => Ok(()),
            (IsometrySpec::VerticalShift { .. }, S2xR | H2xR | M3KappaTau) => Ok(()),
            (IsometrySpec::SliceReflection { .. }, S2xR | H2xR) => Ok(()),
            (IsometrySpec::Sol { sx, sy, .. }, Sol) => {
                if sx.abs() == 1.0 && sy.abs() == 1.0 {
                    Ok(())
                } else {
                    bad("Sol signs must be ±1")
                }
            }
            (spec, kind) => Err(GeomError::Isometry(format!("{spec:?} is not an isometry of {kind:?}"))),
        }
    }

    /// Applies the isometry to a chart point of any dual-number type (no validation).
    pub fn apply_generic<D: DualNum<Primitive = f64> + Copy>(&self, space: &ModelGeometry, p: [D; 3]) -> [D; 3] {
        let [x, y, z] = p;
        // unit-curvature complex coordinate of the base
        let k = space.kappa.abs().sqrt().max(f64::MIN_POSITIVE);
        let eps = if space.kappa < 0.0 { 1.0 } else { -1.0 };
        let to = |x: D, y: D| Cx::new(x * k, y * k);
        let back = |w: Cx<D>| (w.re / k, w.im / k);
        match *self {
            IsometrySpec::Identity => p,
            IsometrySpec::Rotation { angle, axis } => {
                if space.kind == SpaceKind::M3KappaTau {
                    let (s, c) = angle.sin_cos();
                    return [x * c - y * s, x * s + y * c, z];
                }
                let q: Cx<D> = Cx::cst(axis[0] * k, axis[1] * k);
                let one = Cx::real(1.0);
                let epsq = q.conj().scale(D::from(eps));
                let w = to(x, y);
                let m = (w - q) / (one - epsq * w);
                let m = m * Cx::cis(D::from(angle));
                let w2 = (m + q) / (one + epsq * m);
                let (a, b) = back(w2);
                [a, b, z]
            }
            IsometrySpec::Parabolic { ideal_angle, shift } => {
                let rot = Cx::cis(D::from(-ideal_angle));
                let w = to(x, y) * rot;
                let one = Cx::real(1.0);
                // disk → upper half-plane sending the ideal point 1 to ∞
                let h = Cx::i() * (one + w) / (one - w);
                let h = h + Cx::real(shift);
                let w2 = (h - Cx::i()) / (h + Cx::i());
                let (a, b) = back(w2 * rot.conj());
                [a, b, z]
            }
            IsometrySpec::Hyperbolic { direction, distance } => {
                let rot = Cx::cis(D::from(-direction));
                let w = to(x, y) * rot;
                let th = Cx::real((0.5 * distance).tanh());
                let w2 = (w + th) / (Cx::real(1.0) + th * w);
                let (a, b) = back(w2 * rot.conj());
                [a, b, z]
            }
            IsometrySpec::VerticalShift { c } => [x, y, z + c],
            IsometrySpec::SliceReflection { t0 } => [x, y, -z + 2.0 * t0],
            IsometrySpec::Sol { sx, sy, a, b, c, swap } => {
                let (u, v, s) = if swap { (y, x, -1.0) } else { (x, y, 1.0) };
                [u * (sx * (-c).exp()) + a, v * (sy * c.exp()) + b, z * s + c]
            }
        }
    }
}

pub fn apply_isometry(space: &ModelGeometry, iso: &IsometrySpec, p: &V3) -> Result<V3, GeomError> {
    iso.validate(space)?;
    space.check(p)?;
    let q = iso.apply_generic(space, [p.x, p.y, p.z]);
    Ok(V3::new(q[0], q[1], q[2]))
}

/// Jacobian of the isometry at `p` (columns are images of the coordinate vectors).
pub fn isometry_jacobian(space: &ModelGeometry, iso: &IsometrySpec, p: &V3) -> M3 {
    let mut j = M3::zeros();
    for c in 0..3 {
        let q: [Dual64; 3] = std::array::from_fn(|i| {
            let d = Dual64::from_re(p[i]);
            if i == c {
                d.derivative()
            } else {
                d
            }
        });
        let img = iso.apply_generic(space, q);
        for r in 0..3 {
            j[(r, c)] = img[r].eps;
        }
    }
    j
}

/// max |Jᵀ g(φ(p)) J − g(p)|, relative to |g(p)|.
pub fn pullback_residual(space: &ModelGeometry, iso: &IsometrySpec, p: &V3) -> Result<f64, GeomError> {
    let q = apply_isometry(space, iso, p)?;
    let j = isometry_jacobian(space, iso, p);
    let pulled = j.transpose() * space.metric(&q) * j;
    let g = space.metric(p);
    Ok((pulled - g).amax() / g.amax())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sol_scaling_example() {
        let iso = IsometrySpec::Sol { sx: 1.0, sy: 1.0, a: 0.0, b: 0.0, c: 2f64.ln(), swap: false };
        let q = apply_isometry(&ModelGeometry::sol(), &iso, &V3::new(1.0, 1.0, 0.0)).unwrap();
        assert!((q - V3::new(0.5, 2.0, 2f64.ln())).norm() < 1e-15);
    }

    #[test]
    fn half_turn_about_origin() {
        let iso = IsometrySpec::Rotation { angle: std::f64::consts::PI, axis: [0.0, 0.0] };
        let p = V3::new(0.3, -0.2, 1.5);
        let q = apply_isometry(&ModelGeometry::h2xr(), &iso, &p).unwrap();
        assert!((q - V3::new(-0.3, 0.2, 1.5)).norm() < 1e-15);
    }

    #[test]
    fn wrong_space_is_rejected() {
        let iso = IsometrySpec::Parabolic { ideal_angle: 0.0, shift: 1.0 };
        assert!(apply_isometry(&ModelGeometry::s2xr(), &iso, &V3::zeros()).is_err());
    }
}

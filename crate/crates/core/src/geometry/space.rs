use nalgebra::{Matrix3, Vector3};
use num_dual::{Dual64, DualNum, HyperDual64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type V3 = Vector3<f64>;
pub type M3 = Matrix3<f64>;

/// Γ^k_ij stored as `g[k][i][j]`.
pub type Christoffel = [[[f64; 3]; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    S2xR,
    H2xR,
    Sol,
    M3KappaTau,
    H3,
    R3,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {0:?} lies outside the chart domain")]
    Domain([f64; 3]),
    #[error("invalid model parameters: {0}")]
    Parameters(String),
    #[error("geodesic left the chart at parameter {0}")]
    Escape(f64),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("ill-formed isometry: {0}")]
    Isometry(String),
}

/// A chartable homogeneous 3-manifold.
///
/// Charts:
/// * `S2xR`, `H2xR`: stereographic / disk chart, `(2/(1+κr²))²(dx²+dy²) + dt²`.
/// * `M3KappaTau`: fibration chart `λ²(dx²+dy²) + (dz + τλ(y dx − x dy))²`, `λ = 1/(1+κr²/4)`.
/// * `Sol`: `e^{2z}dx² + e^{−2z}dy² + dz²`.
/// * `H3`: upper half-space `(dx²+dy²+dz²)/z²`.
/// * `R3`: Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelGeometry {
    pub kind: SpaceKind,
    pub kappa: f64,
    pub tau: f64,
}

impl ModelGeometry {
    pub fn s2xr() -> Self {
        Self { kind: SpaceKind::S2xR, kappa: 1.0, tau: 0.0 }
    }

    pub fn h2xr() -> Self {
        Self { kind: SpaceKind::H2xR, kappa: -1.0, tau: 0.0 }
    }

    pub fn sol() -> Self {
        Self { kind: SpaceKind::Sol, kappa: 0.0, tau: 0.0 }
    }

    pub fn h3() -> Self {
        Self { kind: SpaceKind::H3, kappa: -1.0, tau: 0.0 }
    }

    pub fn r3() -> Self {
        Self { kind: SpaceKind::R3, kappa: 0.0, tau: 0.0 }
    }

    pub fn m3(kappa: f64, tau: f64) -> Result<Self, GeomError> {
        if !kappa.is_finite() || !tau.is_finite() {
            return Err(GeomError::Parameters("kappa and tau must be finite".into()));
        }
        Ok(Self { kind: SpaceKind::M3KappaTau, kappa, tau })
    }

    pub fn s2xr_with(kappa: f64) -> Result<Self, GeomError> {
        if !(kappa > 0.0) {
            return Err(GeomError::Parameters("S2xR needs kappa > 0".into()));
        }
        Ok(Self { kind: SpaceKind::S2xR, kappa, tau: 0.0 })
    }

    pub fn h2xr_with(kappa: f64) -> Result<Self, GeomError> {
        if !(kappa < 0.0) {
            return Err(GeomError::Parameters("H2xR needs kappa < 0".into()));
        }
        Ok(Self { kind: SpaceKind::H2xR, kappa, tau: 0.0 })
    }

    /// `κ − 4τ² = 0`: the fibration is a space form with a 6-dimensional isometry group.
    pub fn is_space_form(&self) -> bool {
        match self.kind {
            SpaceKind::M3KappaTau => (self.kappa - 4.0 * self.tau * self.tau).abs() < 1e-14,
            SpaceKind::H3 | SpaceKind::R3 => true,
            _ => false,
        }
    }

    /// Product spaces and fibrations carry a unit vertical Killing field.
    pub fn has_vertical(&self) -> bool {
        matches!(self.kind, SpaceKind::S2xR | SpaceKind::H2xR | SpaceKind::M3KappaTau)
    }

    pub fn in_domain(&self, p: &V3) -> bool {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return false;
        }
        let r2 = p.x * p.x + p.y * p.y;
        match self.kind {
            SpaceKind::S2xR | SpaceKind::H2xR => 1.0 + self.kappa * r2 > 0.0,
            SpaceKind::M3KappaTau => 1.0 + 0.25 * self.kappa * r2 > 0.0,
            SpaceKind::H3 => p.z > 0.0,
            SpaceKind::Sol | SpaceKind::R3 => true,
        }
    }

    pub fn check(&self, p: &V3) -> Result<(), GeomError> {
        if self.in_domain(p) {
            Ok(())
        } else {
            Err(GeomError::Domain([p.x, p.y, p.z]))
        }
    }

    /// Metric coefficients for any dual-number type; the single source of truth
    /// for every derivative taken in this module.
    pub fn metric_generic<D: DualNum<Primitive = f64> + Copy>(&self, p: &[D; 3]) -> [[D; 3]; 3] {
        let zero = D::from(0.0);
        let one = D::from(1.0);
        let [x, y, z] = *p;
        let diag = |a: D, b: D, c: D| [[a, zero, zero], [zero, b, zero], [zero, zero, c]];
        match self.kind {
            SpaceKind::S2xR | SpaceKind::H2xR => {
                let f = (one + (x * x + y * y) * self.kappa).recip() * 2.0;
                let f2 = f * f;
                diag(f2, f2, one)
            }
            SpaceKind::M3KappaTau => {
                let l = (one + (x * x + y * y) * (0.25 * self.kappa)).recip();
                let l2 = l * l;
                let tl = l * self.tau;
                // ω = dz + τλ(y dx − x dy)
                let wx = tl * y;
                let wy = -(tl * x);
                [[l2 + wx * wx, wx * wy, wx], [wx * wy, l2 + wy * wy, wy], [wx, wy, one]]
            }
            SpaceKind::Sol => {
                let e = (z * 2.0).exp();
                diag(e, e.recip(), one)
            }
            SpaceKind::H3 => {
                let w = (z * z).recip();
                diag(w, w, w)
            }
            SpaceKind::R3 => diag(one, one, one),
        }
    }

    pub fn metric(&self, p: &V3) -> M3 {
        let g = self.metric_generic(&[p.x, p.y, p.z]);
        M3::from_fn(|i, j| g[i][j])
    }

    pub fn metric_at(&self, p: &V3) -> Result<M3, GeomError> {
        self.check(p)?;
        Ok(self.metric(p))
    }

    /// ∂_m g_ij as `dg[m]`.
    pub fn metric_d1(&self, p: &V3) -> (M3, [M3; 3]) {
        let mut dg = [M3::zeros(); 3];
        let mut g = M3::zeros();
        for (m, dgm) in dg.iter_mut().enumerate() {
            let q: [Dual64; 3] = std::array::from_fn(|i| {
                let d = Dual64::from_re(p[i]);
                if i == m {
                    d.derivative()
                } else {
                    d
                }
            });
            let gm = self.metric_generic(&q);
            *dgm = M3::from_fn(|i, j| gm[i][j].eps);
            g = M3::from_fn(|i, j| gm[i][j].re);
        }
        (g, dg)
    }

    /// Metric, first and second derivatives: `ddg[m][n] = ∂_m∂_n g`.
    pub fn metric_d2(&self, p: &V3) -> (M3, [M3; 3], [[M3; 3]; 3]) {
        let mut g = M3::zeros();
        let mut dg = [M3::zeros(); 3];
        let mut ddg = [[M3::zeros(); 3]; 3];
        for m in 0..3 {
            for n in m..3 {
                let q: [HyperDual64; 3] = std::array::from_fn(|i| {
                    let mut d = HyperDual64::from_re(p[i]);
                    if i == m {
                        d = d.derivative1();
                    }
                    if i == n {
                        d = d.derivative2();
                    }
                    d
                });
                let gm = self.metric_generic(&q);
                let h = M3::from_fn(|i, j| gm[i][j].eps1eps2);
                ddg[m][n] = h;
                ddg[n][m] = h;
                if m == n {
                    dg[m] = M3::from_fn(|i, j| gm[i][j].eps1);
                    g = M3::from_fn(|i, j| gm[i][j].re);
                }
            }
        }
        (g, dg, ddg)
    }

    pub fn christoffels(&self, p: &V3) -> Result<Christoffel, GeomError> {
        self.check(p)?;
        Ok(self.gamma(p))
    }

    /// Christoffel symbols without the domain check (hot path).
    pub fn gamma(&self, p: &V3) -> Christoffel {
        let (g, dg) = self.metric_d1(p);
        let ginv = g.try_inverse().unwrap_or_else(M3::zeros);
        gamma_from(&ginv, &dg)
    }

    /// Γ and ∂_m Γ (`dgamma[m][k][i][j]`), analytic through ∂g and ∂²g.
    pub fn gamma_d1(&self, p: &V3) -> (Christoffel, [Christoffel; 3]) {
        let (g, dg, ddg) = self.metric_d2(p);
        let ginv = g.try_inverse().unwrap_or_else(M3::zeros);
        // Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let lower = |l: usize, i: usize, j: usize| 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
        let dlower =
            |m: usize, l: usize, i: usize, j: usize| 0.5 * (ddg[m][i][(j, l)] + ddg[m][j][(i, l)] - ddg[m][l][(i, j)]);
        let gam = gamma_from(&ginv, &dg);
        let mut dgam = [[[[0.0; 3]; 3]; 3]; 3];
        for m in 0..3 {
            let dginv = -ginv * dg[m] * ginv;
            for k in 0..3 {
                for i in 0..3 {
                    for j in i..3 {
                        let mut s = 0.0;
                        for l in 0..3 {
                            s += dginv[(k, l)] * lower(l, i, j) + ginv[(k, l)] * dlower(m, l, i, j);
                        }
                        dgam[m][k][i][j] = s;
                        dgam[m][k][j][i] = s;
                    }
                }
            }
        }
        (gam, dgam)
    }

    pub fn riemann(&self, p: &V3) -> Riemann {
        let (gam, dgam) = self.gamma_d1(p);
        // R^l_{kij} = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
        let mut r = [[[[0.0; 3]; 3]; 3]; 3];
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut s = dgam[i][l][j][k] - dgam[j][l][i][k];
                        for m in 0..3 {
                            s += gam[l][i][m] * gam[m][j][k] - gam[l][j][m] * gam[m][i][k];
                        }
                        r[l][k][i][j] = s;
                    }
                }
            }
        }
        Riemann { r, g: self.metric(p) }
    }

    /// Curvature with the sign convention R(X,Y)Z = ∇_Y∇_X Z − ∇_X∇_Y Z − ∇_{[Y,X]}Z.
    pub fn curvature_tensor(&self, p: &V3, x: &V3, y: &V3, z: &V3) -> Result<V3, GeomError> {
        self.check(p)?;
        Ok(self.riemann(p).apply(x, y, z))
    }

    /// ∇_X Y for a vector field Y with known directional derivative `dy = X(Y)` in the chart.
    pub fn covariant(&self, gam: &Christoffel, x: &V3, y: &V3, dy: &V3) -> V3 {
        dy + contract(gam, x, y)
    }

    /// Riemannian cross product: ⟨X∧Y, Z⟩ = √det g · det[X Y Z].
    pub fn cross(&self, p: &V3, x: &V3, y: &V3) -> V3 {
        let g = self.metric(p);
        cross_with(&g, x, y)
    }

    pub fn inner(&self, p: &V3, x: &V3, y: &V3) -> f64 {
        (x.transpose() * self.metric(p) * y)[(0, 0)]
    }

    /// Unit vertical field: ∂t for products, ∂z for the fibration and (as E₃) for Sol.
    pub fn vertical(&self, _p: &V3) -> Option<V3> {
        match self.kind {
            SpaceKind::S2xR | SpaceKind::H2xR | SpaceKind::M3KappaTau | SpaceKind::Sol => Some(V3::z()),
            SpaceKind::H3 | SpaceKind::R3 => None,
        }
    }

    /// Left-invariant orthonormal frame of Sol.
    pub fn sol_frame(&self, p: &V3) -> Option<[V3; 3]> {
        (self.kind == SpaceKind::Sol).then(|| sol_frame(p))
    }
}

pub fn sol_frame(p: &V3) -> [V3; 3] {
    [V3::new((-p.z).exp(), 0.0, 0.0), V3::new(0.0, p.z.exp(), 0.0), V3::z()]
}

pub(crate) fn gamma_from(ginv: &M3, dg: &[M3; 3]) -> Christoffel {
    let mut gam = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in i..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gam[k][i][j] = 0.5 * s;
                gam[k][j][i] = 0.5 * s;
            }
        }
    }
    gam
}

/// Γ(X, Y)^k = Γ^k_ij X^i Y^j.
pub fn contract(gam: &Christoffel, x: &V3, y: &V3) -> V3 {
    V3::from_fn(|k, _| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += gam[k][i][j] * x[i] * y[j];
            }
        }
        s
    })
}

pub fn cross_with(g: &M3, x: &V3, y: &V3) -> V3 {
    let det = g.determinant();
    let ginv = g.try_inverse().unwrap_or_else(M3::zeros);
    det.sqrt() * (ginv * x.cross(y))
}

/// Coordinate Riemann tensor at a point, standard convention stored as `r[l][k][i][j] = R^l_{kij}`.
#[derive(Debug, Clone)]
pub struct Riemann {
    pub r: [[[[f64; 3]; 3]; 3]; 3],
    pub g: M3,
}

impl Riemann {
    /// R_std(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z.
    pub fn apply_std(&self, x: &V3, y: &V3, z: &V3) -> V3 {
        V3::from_fn(|l, _| {
            let mut s = 0.0;
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        s += self.r[l][k][i][j] * x[i] * y[j] * z[k];
                    }
                }
            }
            s
        })
    }

    /// The convention used throughout: R = −R_std.
    pub fn apply(&self, x: &V3, y: &V3, z: &V3) -> V3 {
        -self.apply_std(x, y, z)
    }

    /// ⟨R(X,Y)Z, W⟩ in the working convention.
    pub fn quad(&self, x: &V3, y: &V3, z: &V3, w: &V3) -> f64 {
        (self.apply(x, y, z).transpose() * self.g * w)[(0, 0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_metrics() {
        let o = V3::zeros();
        assert_eq!(ModelGeometry::s2xr().metric(&o), M3::from_diagonal(&V3::new(4.0, 4.0, 1.0)));
        assert_eq!(ModelGeometry::h2xr().metric(&o), M3::from_diagonal(&V3::new(4.0, 4.0, 1.0)));
        assert_eq!(ModelGeometry::sol().metric(&o), M3::identity());
    }

    #[test]
    fn domain_errors() {
        let h = ModelGeometry::h2xr();
        assert!(h.metric_at(&V3::new(0.8, 0.8, 0.0)).is_err());
        assert!(ModelGeometry::h3().metric_at(&V3::new(0.0, 0.0, -1.0)).is_err());
    }

    #[test]
    fn r3_is_flat() {
        let g = ModelGeometry::r3().gamma(&V3::new(0.3, -2.0, 5.0));
        assert!(g.iter().flatten().flatten().all(|&v| v == 0.0));
    }
}

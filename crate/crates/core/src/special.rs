//! Complete elliptic integral K(m) and Jacobi amplitude/sn/cn for real parameter m.
//!
//! All evaluations reduce to the AGM/descending-Landen scheme on m ∈ [0, 1):
//! m > 1 through the reciprocal-parameter transformation, m < 0 through the
//! imaginary-parameter transformation. For |m| > 1e3 the transformations lose
//! accuracy, so the amplitude is obtained by integrating φ'' = −m sin φ cos φ.

use crate::ode::{self, Options};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("K(m) diverges for m >= 1 (got m = {0})")]
    KDomain(f64),
    #[error("parameter is not finite")]
    NonFinite,
    #[error("amplitude integration failed: {0}")]
    Integration(#[from] ode::OdeError),
}

const AGM_TOL: f64 = 1e-16;

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind, K(m) = ∫₀^{π/2} dt / √(1 − m sin²t).
pub fn elliptic_k(m: f64) -> Result<f64, SpecialError> {
    if !m.is_finite() {
        return Err(SpecialError::NonFinite);
    }
    if m >= 1.0 {
        return Err(SpecialError::KDomain(m));
    }
    Ok(FRAC_PI_2 / agm(1.0, (1.0 - m).sqrt()))
}

/// Amplitude for 0 ≤ m < 1 by the descending Landen (AGM) scheme.
fn am_unit(u: f64, m: f64) -> f64 {
    if m == 0.0 {
        return u;
    }
    let mut a = vec![1.0f64];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while c.last().unwrap().abs() > 1e-17 && a.len() < 40 {
        let an = *a.last().unwrap();
        let cn = 0.5 * (an - b);
        let bn = (an * b).sqrt();
        a.push(0.5 * (an + b));
        c.push(cn);
        b = bn;
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for k in (1..=n).rev() {
        phi = 0.5 * (phi + (c[k] / a[k] * phi.sin()).asin());
    }
    phi
}

fn am_ode(u: f64, m: f64) -> Result<f64, SpecialError> {
    if u == 0.0 {
        return Ok(0.0);
    }
    let opts = Options::tight();
    let sol = ode::solve(|_, y: &[f64; 2]| [y[1], -m * y[0].sin() * y[0].cos()], 0.0, [0.0, 1.0], u.abs(), &opts)?;
    Ok(sol.y_end()[0] * u.signum())
}

/// Jacobi amplitude am(u | m): the solution of φ' = √(1 − m sin²φ), φ(0) = 0.
pub fn jacobi_am(u: f64, m: f64) -> Result<f64, SpecialError> {
    if !u.is_finite() || !m.is_finite() {
        return Err(SpecialError::NonFinite);
    }
    if u < 0.0 {
        // am is odd; evaluating on |u| makes that exact in floating point
        return jacobi_am(-u, m).map(|v| -v);
    }
    if m.abs() > 1e3 {
        return am_ode(u, m);
    }
    if (0.0..1.0).contains(&m) {
        return Ok(am_unit(u, m));
    }
    if m == 1.0 {
        // Gudermannian
        return Ok(u.sinh().atan());
    }
    if m > 1.0 {
        // sn(u|m) = sn(u√m | 1/m)/√m; φ stays in [−asin(1/√m), asin(1/√m)]
        let k = m.sqrt();
        let s = am_unit(u * k, 1.0 / m).sin() / k;
        return Ok(s.asin());
    }
    // m < 0: am(u|−μ) = ψ − atan(sinψ cosψ (1 − c) / (cos²ψ + c sin²ψ)),
    // ψ = am(u√(1+μ) | μ/(1+μ)), c = 1/√(1+μ)
    let mu = -m;
    let mp = mu / (1.0 + mu);
    let psi = am_unit(u * (1.0 + mu).sqrt(), mp);
    let c = 1.0 / (1.0 + mu).sqrt();
    let (s, co) = psi.sin_cos();
    Ok(psi - (s * co * (1.0 - c)).atan2(co * co + c * s * s))
}

pub fn jacobi_sn(u: f64, m: f64) -> Result<f64, SpecialError> {
    jacobi_am(u, m).map(f64::sin)
}

pub fn jacobi_cn(u: f64, m: f64) -> Result<f64, SpecialError> {
    jacobi_am(u, m).map(f64::cos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_zero_is_half_pi() {
        assert_eq!(elliptic_k(0.0).unwrap(), FRAC_PI_2);
    }

    #[test]
    fn k_rejects_one() {
        assert!(matches!(elliptic_k(1.0), Err(SpecialError::KDomain(_))));
        assert!(elliptic_k(1.5).is_err());
    }

    #[test]
    fn am_trivial_cases() {
        assert_eq!(jacobi_am(0.0, 0.7).unwrap(), 0.0);
        assert_eq!(jacobi_am(1.3, 0.0).unwrap(), 1.3);
    }

    #[test]
    fn am_is_exactly_odd() {
        for &m in &[-3.0, -0.2, 0.3, 0.99, 1.0, 2.5] {
            for &u in &[0.1, 0.7, 2.3, 9.1] {
                assert_eq!(jacobi_am(-u, m).unwrap(), -jacobi_am(u, m).unwrap());
            }
        }
    }
}

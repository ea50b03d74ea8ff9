//! Scalar root finding.

/// Brent's method on a bracketing interval; `None` if `f(a)` and `f(b)` share a sign.
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa * fb > 0.0 || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some(b)
}

/// Newton iteration safeguarded by a bracket; falls back to bisection steps.
pub fn newton_bracketed<F: Fn(f64) -> (f64, f64)>(f: F, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> Option<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo * fhi > 0.0 {
        return None;
    }
    let rising = fhi > flo;
    let mut x = x0.clamp(lo.min(hi), lo.max(hi));
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo.min(hi) || next >= lo.max(hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cosine_zero() {
        let r = brent(f64::cos, 0.0, 3.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn newton_cube_root() {
        let r = newton_bracketed(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 1.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }
}

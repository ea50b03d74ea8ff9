//! Adaptive DOP853 integration with a continuous (dense) solution.
//!
//! Every accepted step stores its seventh-order interpolant, so a solution can
//! be evaluated anywhere in its range and events can be located by root
//! finding on the interpolant instead of by re-integration.

mod tableau;

use crate::roots;
use tableau::*;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Maximum |h|; `f64::INFINITY` for no cap.
    pub h_max: f64,
    /// Initial step; 0 selects one automatically.
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_max: f64::INFINITY, h0: 0.0, max_steps: 200_000 }
    }
}

impl Options {
    pub fn tight() -> Self {
        Self { rtol: 1e-13, atol: 1e-14, ..Self::default() }
    }

    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step limit reached at t = {t}")]
    MaxSteps { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Reached the requested end point.
    Completed,
    /// A stop predicate fired at the end of the last accepted step.
    Stopped,
}

#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    cont: [[f64; N]; 8],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        let mut y = [0.0; N];
        for i in 0..N {
            let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * s) * s1) * s;
            y[i] = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * s1) * s) * s1) * s;
        }
        y
    }

    fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Continuous solution on `[t_start, t_end]` (or the reverse when integrating backwards).
#[derive(Debug, Clone)]
pub struct Dense<const N: usize> {
    t_start: f64,
    y_start: [f64; N],
    segs: Vec<Segment<N>>,
    pub termination: Termination,
    pub evaluations: usize,
}

impl<const N: usize> Dense<N> {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segs.last().map_or(self.t_start, Segment::t1)
    }

    pub fn y_end(&self) -> [f64; N] {
        self.eval(self.t_end())
    }

    pub fn n_steps(&self) -> usize {
        self.segs.len()
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t_start
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.forward() { (self.t_start, self.t_end()) } else { (self.t_end(), self.t_start) };
        t >= a && t <= b
    }

    /// Evaluates the interpolant; `t` outside the range is clamped to the nearest segment.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.segs.is_empty() {
            return self.y_start;
        }
        let fwd = self.forward();
        // first segment whose far end lies beyond t
        let idx = self.segs.partition_point(|s| if fwd { s.t1() < t } else { s.t1() > t });
        self.segs[idx.min(self.segs.len() - 1)].eval(t)
    }

    /// Step boundaries, including the start point.
    pub fn knots(&self) -> Vec<f64> {
        std::iter::once(self.t_start).chain(self.segs.iter().map(Segment::t1)).collect()
    }

    /// All roots of `g(t, y(t))` in the solution range, refined on the interpolant.
    ///
    /// Each step is subdivided `sub` times when scanning for sign changes, which
    /// catches a double crossing inside one long step.
    pub fn roots<G>(&self, g: G, sub: usize, tol: f64) -> Vec<f64>
    where
        G: Fn(f64, &[f64; N]) -> f64,
    {
        let sub = sub.max(1);
        let h = |t: f64| g(t, &self.eval(t));
        let mut out: Vec<f64> = Vec::new();
        let mut ta = self.t_start;
        let mut ga = g(ta, &self.y_start);
        if ga == 0.0 {
            out.push(ta);
        }
        for seg in &self.segs {
            for j in 1..=sub {
                let tb = seg.t0 + seg.h * j as f64 / sub as f64;
                let gb = g(tb, &seg.eval(tb));
                if gb == 0.0 {
                    out.push(tb);
                } else if ga * gb < 0.0 {
                    if let Some(r) = roots::brent(&h, ta, tb, tol) {
                        out.push(r);
                    }
                }
                ta = tb;
                ga = gb;
            }
        }
        out.dedup_by(|a, b| (*a - *b).abs() <= tol);
        out
    }

    /// First root of `g` along the direction of integration.
    pub fn first_root<G>(&self, g: G, tol: f64) -> Option<f64>
    where
        G: Fn(f64, &[f64; N]) -> f64,
    {
        self.roots(g, 4, tol).into_iter().next()
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn solve<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, opts: &Options) -> Result<Dense<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    solve_until(f, t0, y0, t1, opts, |_, _| false)
}

/// Like [`solve`], but halts after the first accepted step whose end state satisfies `stop`.
pub fn solve_until<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &Options,
    mut stop: S,
) -> Result<Dense<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let mut out = Dense { t_start: t0, y_start: y0, segs: Vec::new(), termination: Termination::Completed, evaluations: 0 };
    if t1 == t0 {
        return Ok(out);
    }
    let dir = (t1 - t0).signum();
    let n = N as f64;
    let sk = |y: &[f64; N], z: &[f64; N], i: usize| opts.atol + opts.rtol * y[i].abs().max(z[i].abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut nfev = 1usize;
    let mut h = if opts.h0 != 0.0 { opts.h0.abs().min(opts.h_max) * dir } else { initial_step(&mut f, t, &y, &k1, dir, opts) };
    nfev += 1;
    let mut last_rejected = false;

    let comb = |y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]| -> [f64; N] {
        let mut r = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for (c, k) in terms {
                acc += c * k[i];
            }
            r[i] += h * acc;
        }
        r
    };

    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            out.evaluations = nfev;
            return Ok(out);
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t });
        }
        let mut last = false;
        if (t + 1.01 * h - t1) * dir > 0.0 {
            h = t1 - t;
            last = true;
        }

        let k2 = f(t + C2 * h, &comb(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(&y, h, &[(A41, &k1), (A43, &k3)]));
        let k5 = f(t + C5 * h, &comb(&y, h, &[(A51, &k1), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + C6 * h, &comb(&y, h, &[(A61, &k1), (A64, &k4), (A65, &k5)]));
        let k7 = f(t + C7 * h, &comb(&y, h, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
        let k8 = f(t + C8 * h, &comb(&y, h, &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]));
        let k9 = f(
            t + C9 * h,
            &comb(&y, h, &[(A91, &k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
        );
        let k10 = f(
            t + C10 * h,
            &comb(&y, h, &[(A101, &k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)]),
        );
        let k11 = f(
            t + C11 * h,
            &comb(
                &y,
                h,
                &[(A111, &k1), (A114, &k4), (A115, &k5), (A116, &k6), (A117, &k7), (A118, &k8), (A119, &k9), (A1110, &k10)],
            ),
        );
        let t_new = t + h;
        let yy1 = comb(
            &y,
            h,
            &[
                (A121, &k1),
                (A124, &k4),
                (A125, &k5),
                (A126, &k6),
                (A127, &k7),
                (A128, &k8),
                (A129, &k9),
                (A1210, &k10),
                (A1211, &k11),
            ],
        );
        let k12 = f(t_new, &yy1);
        nfev += 11;

        let incr = comb(
            &[0.0; N],
            1.0,
            &[(B1, &k1), (B6, &k6), (B7, &k7), (B8, &k8), (B9, &k9), (B10, &k10), (B11, &k11), (B12, &k12)],
        );
        let mut y_new = y;
        for i in 0..N {
            y_new[i] += h * incr[i];
        }
        if y_new.iter().any(|v| !v.is_finite()) {
            if last_rejected && h.abs() < 1e-10 {
                return Err(OdeError::NonFinite { t });
            }
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..N {
            let s = sk(&y, &y_new, i);
            let e2 = incr[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
            err2 += (e2 / s).powi(2);
            let e = ER1 * k1[i] + ER6 * k6[i] + ER7 * k7[i] + ER8 * k8[i] + ER9 * k9[i] + ER10 * k10[i] + ER11 * k11[i]
                + ER12 * k12[i];
            err += (e / s).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (deno * n)).sqrt();

        let fac11 = err.powf(1.0 / 8.0);
        let fac = (1.0 / 6.0f64).max((1.0 / 0.33f64).min(fac11 / 0.9));
        let mut h_new = h / fac;

        if err <= 1.0 {
            let k_new = f(t_new, &y_new);
            nfev += 1;

            // dense output coefficients
            let mut cont = [[0.0; N]; 8];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k_new[i] - bspl;
                cont[4][i] = D41 * k1[i] + D46 * k6[i] + D47 * k7[i] + D48 * k8[i] + D49 * k9[i] + D410 * k10[i]
                    + D411 * k11[i]
                    + D412 * k12[i];
                cont[5][i] = D51 * k1[i] + D56 * k6[i] + D57 * k7[i] + D58 * k8[i] + D59 * k9[i] + D510 * k10[i]
                    + D511 * k11[i]
                    + D512 * k12[i];
                cont[6][i] = D61 * k1[i] + D66 * k6[i] + D67 * k7[i] + D68 * k8[i] + D69 * k9[i] + D610 * k10[i]
                    + D611 * k11[i]
                    + D612 * k12[i];
                cont[7][i] = D71 * k1[i] + D76 * k6[i] + D77 * k7[i] + D78 * k8[i] + D79 * k9[i] + D710 * k10[i]
                    + D711 * k11[i]
                    + D712 * k12[i];
            }
            let k14 = f(
                t + C14 * h,
                &comb(
                    &y,
                    h,
                    &[
                        (A141, &k1),
                        (A147, &k7),
                        (A148, &k8),
                        (A149, &k9),
                        (A1410, &k10),
                        (A1411, &k11),
                        (A1412, &k12),
                        (A1413, &k_new),
                    ],
                ),
            );
            let k15 = f(
                t + C15 * h,
                &comb(
                    &y,
                    h,
                    &[
                        (A151, &k1),
                        (A156, &k6),
                        (A157, &k7),
                        (A158, &k8),
                        (A1511, &k11),
                        (A1512, &k12),
                        (A1513, &k_new),
                        (A1514, &k14),
                    ],
                ),
            );
            let k16 = f(
                t + C16 * h,
                &comb(
                    &y,
                    h,
                    &[
                        (A161, &k1),
                        (A166, &k6),
                        (A167, &k7),
                        (A168, &k8),
                        (A169, &k9),
                        (A1613, &k_new),
                        (A1614, &k14),
                        (A1615, &k15),
                    ],
                ),
            );
            nfev += 3;
            for i in 0..N {
                cont[4][i] = h * (cont[4][i] + D413 * k_new[i] + D414 * k14[i] + D415 * k15[i] + D416 * k16[i]);
                cont[5][i] = h * (cont[5][i] + D513 * k_new[i] + D514 * k14[i] + D515 * k15[i] + D516 * k16[i]);
                cont[6][i] = h * (cont[6][i] + D613 * k_new[i] + D614 * k14[i] + D615 * k15[i] + D616 * k16[i]);
                cont[7][i] = h * (cont[7][i] + D713 * k_new[i] + D714 * k14[i] + D715 * k15[i] + D716 * k16[i]);
            }
            out.segs.push(Segment { t0: t, h, cont });

            k1 = k_new;
            y = y_new;
            t = if last { t1 } else { t_new };
            if last_rejected {
                h_new = dir * h_new.abs().min(h.abs());
            }
            last_rejected = false;
            if stop(t, &y) {
                out.termination = Termination::Stopped;
                out.evaluations = nfev;
                return Ok(out);
            }
            if last {
                out.evaluations = nfev;
                return Ok(out);
            }
        } else {
            h_new = h / (1.0 / 0.33f64).min(fac11 / 0.9);
            last_rejected = true;
        }
        h = dir * h_new.abs().min(opts.h_max);
    }
    Err(OdeError::MaxSteps { t })
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], dir: f64, opts: &Options) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y[i].abs();
        dnf += (k1[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(opts.h_max) * dir;
    let mut y1 = *y;
    for i in 0..N {
        y1[i] += h * k1[i];
    }
    let k2 = f(t + h, &y1);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y[i].abs();
        der2 += ((k2[i] - k1[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h.abs();
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { (h.abs() * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    dir * (100.0 * h.abs()).min(h1).min(opts.h_max)
}

/// Fourth-order central difference of a scalar function.
pub fn deriv5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second difference.
pub fn deriv5_2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

//! Minimal complex arithmetic over dual numbers, enough for Möbius maps of the disk.

use num_dual::DualNum;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy)]
pub struct Cx<D> {
    pub re: D,
    pub im: D,
}

impl<D: DualNum<Primitive = f64> + Copy> Cx<D> {
    pub fn new(re: D, im: D) -> Self {
        Self { re, im }
    }

    pub fn real(x: f64) -> Self {
        Self { re: D::from(x), im: D::from(0.0) }
    }

    pub fn cst(re: f64, im: f64) -> Self {
        Self { re: D::from(re), im: D::from(im) }
    }

    pub fn i() -> Self {
        Self::cst(0.0, 1.0)
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> D {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, k: D) -> Self {
        Self { re: self.re * k, im: self.im * k }
    }

    /// e^{iθ}
    pub fn cis(theta: D) -> Self {
        Self { re: theta.cos(), im: theta.sin() }
    }
}

impl<D: DualNum<Primitive = f64> + Copy> Add for Cx<D> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<D: DualNum<Primitive = f64> + Copy> Sub for Cx<D> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<D: DualNum<Primitive = f64> + Copy> Neg for Cx<D> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl<D: DualNum<Primitive = f64> + Copy> Mul for Cx<D> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl<D: DualNum<Primitive = f64> + Copy> Div for Cx<D> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr().recip();
        Self { re: (self.re * o.re + self.im * o.im) * d, im: (self.im * o.re - self.re * o.im) * d }
    }
}

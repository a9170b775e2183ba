//! Truncated Taylor series ("jets") for exact higher derivatives.
//!
//! A `Jet<N>` stores the first `N` normalized Taylor coefficients
//! `f(x0 + h) = c[0] + c[1] h + ... + c[N-1] h^(N-1) + O(h^N)`.
//! Arithmetic on jets propagates the coefficients exactly, so the k-th
//! derivative is `k! * c[k]` without any step-size error.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    coeffs: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(value: f64) -> Self {
        let mut coeffs = [0.0; N];
        if N > 0 {
            coeffs[0] = value;
        }
        Self { coeffs }
    }

    /// The independent variable expanded around `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut jet = Self::constant(x0);
        if N > 1 {
            jet.coeffs[1] = 1.0;
        }
        jet
    }

    pub fn from_coeffs(coeffs: [f64; N]) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64; N] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut factorial = 1.0;
        for i in 2..=k {
            factorial *= i as f64;
        }
        self.coeffs[k] * factorial
    }

    pub fn scale(mut self, factor: f64) -> Self {
        for c in &mut self.coeffs {
            *c *= factor;
        }
        self
    }

    /// Multiplicative inverse via the Cauchy-product recurrence. The constant
    /// term must be nonzero.
    pub fn recip(&self) -> Self {
        let mut out = [0.0; N];
        let inv0 = 1.0 / self.coeffs[0];
        out[0] = inv0;
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.coeffs[j] * out[k - j];
            }
            out[k] = -acc * inv0;
        }
        Self { coeffs: out }
    }

    pub fn powi(&self, mut exp: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::constant(1.0);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            exp >>= 1;
            if exp > 0 {
                base = base * base;
            }
        }
        acc
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = [0.0; N];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().take(N - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }
}

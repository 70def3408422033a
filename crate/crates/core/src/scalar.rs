//! Scalars and log-domain magnitudes.
//!
//! Coefficients are stored as `Complex64` for both fields; real vectors keep
//! a zero imaginary part. Products such as `β_n = w_1 ⋯ w_n` are kept as
//! [`SignedLogScalar`] so that `n!`-sized values never overflow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Div, Mul};

pub type Scalar = Complex64;

pub const ZERO: Scalar = Complex64::new(0.0, 0.0);
pub const ONE: Scalar = Complex64::new(1.0, 0.0);

pub fn real(x: f64) -> Scalar {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    #[default]
    Real,
    Complex,
}

/// A nonzero-or-zero scalar stored as `phase · exp(log_mag)`.
///
/// `log_mag == -inf` encodes zero. The phase is a unit-modulus complex
/// number (`±1` for real values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogScalar {
    pub log_mag: f64,
    pub phase: Complex64,
}

impl SignedLogScalar {
    pub fn zero() -> Self {
        Self { log_mag: f64::NEG_INFINITY, phase: ONE }
    }

    pub fn one() -> Self {
        Self { log_mag: 0.0, phase: ONE }
    }

    pub fn from_log(log_mag: f64, phase: Complex64) -> Self {
        Self { log_mag, phase }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            return Self::zero();
        }
        Self { log_mag: x.abs().ln(), phase: real(x.signum()) }
    }

    pub fn from_scalar(z: Scalar) -> Self {
        let m = z.norm();
        if m == 0.0 {
            return Self::zero();
        }
        Self { log_mag: m.ln(), phase: z / m }
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn abs(&self) -> f64 {
        self.log_mag.exp()
    }

    /// Back to a plain scalar; overflows to infinity or underflows to zero.
    pub fn to_scalar(&self) -> Scalar {
        if self.is_zero() {
            return ZERO;
        }
        self.phase * self.log_mag.exp()
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Self { log_mag: -self.log_mag, phase: self.phase.conj() }
    }

    pub fn powi(&self, n: i64) -> Self {
        if n == 0 {
            return Self::one();
        }
        let phase = if n > 0 {
            self.phase.powi(n as i32)
        } else {
            self.phase.conj().powi((-n) as i32)
        };
        Self { log_mag: self.log_mag * n as f64, phase }
    }
}

impl Mul for SignedLogScalar {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        Self { log_mag: self.log_mag + rhs.log_mag, phase: self.phase * rhs.phase }
    }
}

impl Div for SignedLogScalar {
    type Output = Self;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

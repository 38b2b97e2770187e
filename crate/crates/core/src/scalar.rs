//! Scalar abstractions.
//!
//! Probability tables and the functionals evaluated on them only need an
//! ordered field, so they are generic over [`Prob`], which admits exact
//! rationals. Everything that touches complex amplitudes additionally needs
//! transcendental functions and is generic over [`Real`].

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered field used for probabilities.
pub trait Prob: Copy + PartialOrd + Num + Debug + Send + Sync + 'static {
    /// Nearest representable value (exact for the rationals in practice
    /// only when `v` is dyadic).
    fn from_f64_approx(v: f64) -> Self;
    fn to_f64_approx(self) -> f64;

    /// `num / den`, exact for rationals.
    fn from_ratio(num: u64, den: u64) -> Self {
        Self::from_f64_approx(num as f64 / den as f64)
    }

    /// Comparison slack for normalisation checks: zero for exact types.
    fn tolerance() -> Self {
        Self::from_f64_approx(1e-9)
    }

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

/// Floating-point scalar backing complex linear algebra.
pub trait Real: Prob + Float + FromPrimitive + Display {
    /// Converts an `f64` literal. Infallible for the supported float types.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }
}

impl Prob for f64 {
    fn from_f64_approx(v: f64) -> Self {
        v
    }
    fn to_f64_approx(self) -> f64 {
        self
    }
}

impl Prob for f32 {
    fn from_f64_approx(v: f64) -> Self {
        v as f32
    }
    fn to_f64_approx(self) -> f64 {
        self as f64
    }
    fn tolerance() -> Self {
        1e-5
    }
}

impl Real for f64 {}
impl Real for f32 {}

impl Prob for Rational64 {
    fn from_f64_approx(v: f64) -> Self {
        Rational64::approximate_float(v).unwrap_or_else(|| Rational64::from_integer(0))
    }
    fn to_f64_approx(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        Rational64::new(num as i64, den as i64)
    }
    fn tolerance() -> Self {
        Rational64::from_integer(0)
    }
}

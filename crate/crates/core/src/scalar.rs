//! Real scalar types the numeric modules are generic over.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// A real floating-point field usable as the base of the complex matrices.
///
/// The associated tolerances are the defaults used when a caller does not
/// pass explicit ones. They are expressed relative to a scale of
/// `1 + max operand norm`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static {
    /// Identities that hold exactly up to roundoff.
    const IDENTITY_TOL: f64;
    /// Pass/fail threshold of verification reports.
    const VERDICT_TOL: f64;
    /// Successive-difference threshold of the limit detector.
    const STABILIZATION_TOL: f64;
    /// Relative singular-value cutoff for rank decisions.
    const RANK_TOL: f64;

    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn identity_tol() -> Self {
        Self::of(Self::IDENTITY_TOL)
    }

    fn verdict_tol() -> Self {
        Self::of(Self::VERDICT_TOL)
    }

    fn stabilization_tol() -> Self {
        Self::of(Self::STABILIZATION_TOL)
    }

    fn rank_tol() -> Self {
        Self::of(Self::RANK_TOL)
    }
}

impl Real for f64 {
    const IDENTITY_TOL: f64 = 1e-9;
    const VERDICT_TOL: f64 = 1e-8;
    const STABILIZATION_TOL: f64 = 1e-10;
    const RANK_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const IDENTITY_TOL: f64 = 1e-4;
    const VERDICT_TOL: f64 = 1e-3;
    const STABILIZATION_TOL: f64 = 1e-5;
    const RANK_TOL: f64 = 1e-5;
}

/// Complex number over `T`.
pub fn cx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::of(re), T::of(im))
}

/// `x!` as a real.
pub fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * T::of(i as f64))
}

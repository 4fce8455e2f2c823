//! Floating point abstraction for the numerical kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the solver can work in: `f32` or `f64`.
///
/// Tolerances are part of the type because a pivot threshold that is sane in
/// double precision is noise in single precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Primal feasibility tolerance (constraint and bound violation).
    const FEASIBILITY_TOL: f64;
    /// Reduced cost tolerance for optimality.
    const OPTIMALITY_TOL: f64;
    /// Smallest tableau entry accepted as a pivot.
    const PIVOT_TOL: f64;

    fn feasibility_tol() -> Self {
        Self::of(Self::FEASIBILITY_TOL)
    }

    fn optimality_tol() -> Self {
        Self::of(Self::OPTIMALITY_TOL)
    }

    fn pivot_tol() -> Self {
        Self::of(Self::PIVOT_TOL)
    }

    /// Converts an `f64` literal, rounding if the type is narrower.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const FEASIBILITY_TOL: f64 = 1e-7;
    const OPTIMALITY_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const FEASIBILITY_TOL: f64 = 1e-4;
    const OPTIMALITY_TOL: f64 = 1e-5;
    const PIVOT_TOL: f64 = 1e-5;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_ordered() {
        assert!(f64::optimality_tol() <= f64::feasibility_tol());
        assert!(f32::feasibility_tol() > f32::EPSILON);
        assert_eq!(f64::of(0.5), 0.5);
    }
}

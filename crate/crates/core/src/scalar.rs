//! Floating-point abstraction shared by the closed-form solvers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar used by the equilibrium analysis: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance for equality tests on rates, earnings and queue positions.
    fn rel_tol() -> Self;

    /// Converts an `f64` literal. Every finite `f64` is representable (possibly rounded).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl Scalar for f64 {
    fn rel_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn rel_tol() -> Self {
        1e-5
    }
}

/// `a` and `b` agree to the scalar's relative tolerance.
pub fn approx_eq<S: Scalar>(a: S, b: S) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= S::rel_tol() * scale
}

/// `a` exceeds `b` by more than the relative tolerance.
pub fn definitely_gt<S: Scalar>(a: S, b: S) -> bool {
    a > b && !approx_eq(a, b)
}

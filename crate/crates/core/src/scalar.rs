//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
///
/// Every `Scalar` can represent any finite `f64` (possibly rounded), so the
/// conversion never fails.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn from_usize<T: Scalar>(v: usize) -> T {
    T::from_usize(v).expect("usize representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

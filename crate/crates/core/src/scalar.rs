//! Scalar abstraction for the generic numeric kernels.
//!
//! Leaf math (machine equations, controller blocks, rational transfer
//! functions, margins, correlation statistics, loop-shaping formulas) is
//! written against [`Scalar`] so it runs on `f32` and `f64` alike. Dense
//! linear algebra and the assembled farm pipeline are `f64`-only.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_deg(self) -> Self {
        self * Self::lit(180.0) / Self::PI()
    }

    #[inline]
    fn to_rad(self) -> Self {
        self * Self::PI() / Self::lit(180.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `10^(db/20)`.
#[inline]
pub fn db_to_mag<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(20.0))
}

/// `20 log10(mag)`.
#[inline]
pub fn mag_to_db<T: Scalar>(mag: T) -> T {
    T::lit(20.0) * mag.log10()
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_deg<T: Scalar>(deg: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut w = deg % full;
    if w <= -half {
        w = w + full;
    } else if w > half {
        w = w - full;
    }
    w
}

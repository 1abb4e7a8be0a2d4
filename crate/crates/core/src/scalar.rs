//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the computations are generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative slack applied to every inclusive `<= eps` comparison.
    ///
    /// Error bounds that are met with equality analytically (UBM at
    /// `eps = 0.1`, LOL at `eps = E_1`) land a few ulps either side of `eps`
    /// after transcendental evaluation; the slack keeps those on the
    /// satisfied side.
    #[inline]
    fn bound_slack() -> Self {
        Self::lit(1e-10).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `x * y` with the convention `0 * inf = 0`, used for drifts and counts.
#[inline]
pub(crate) fn mul_zero_inf<T: Real>(x: T, y: T) -> T {
    if x.is_zero() || y.is_zero() {
        T::zero()
    } else {
        x * y
    }
}

/// Neumaier-compensated running sum; long probability sums stay within a
/// few ulps of exact instead of drifting with the term count.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

pub fn compensated_sum<T: Real>(terms: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::default();
    for x in terms {
        acc.add(x);
    }
    acc.value()
}

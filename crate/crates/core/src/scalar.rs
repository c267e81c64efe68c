//! Scalar abstraction shared by every module.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub type C<T> = Complex<T>;
pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;

/// Real scalar usable by the library (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Default + Send + Sync + 'static
{
    /// Unit roundoff.
    fn eps() -> Self;

    /// Eigenvalues of a general complex square matrix.
    fn general_eigenvalues(m: &CMat<Self>) -> Result<Vec<C<Self>>>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn eps() -> Self {
                <$t>::EPSILON
            }

            fn general_eigenvalues(m: &CMat<Self>) -> Result<Vec<C<Self>>> {
                let n = m.nrows();
                if n != m.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: m.ncols(),
                    });
                }
                if n == 0 {
                    return Ok(Vec::new());
                }
                let fm = faer::Mat::<Complex<$t>>::from_fn(n, n, |i, j| m[(i, j)]);
                fm.eigenvalues()
                    .map_err(|e| Error::Numerical(format!("eigenvalue iteration failed: {e:?}")))
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Converts an `f64` literal into `T`.
#[inline]
pub fn re<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable")
}

#[inline]
pub fn cx<T: Real>(r: f64, i: f64) -> C<T> {
    Complex::new(re(r), re(i))
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite scalar")
}

#[inline]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn cre<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    nalgebra::ComplexField::modulus(z)
}

#[inline]
pub fn cexp<T: Real>(z: C<T>) -> C<T> {
    nalgebra::ComplexField::exp(z)
}

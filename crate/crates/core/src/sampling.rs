//! Seeded random matrices for sampling-based checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::orthonormal_columns;
use crate::scalar::{re, CMat, Real, C};

pub type SampleRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<T: Real, R: Rng>(rng: &mut R) -> T {
    let x: f64 = rng.sample(StandardNormal);
    re(x)
}

pub fn complex_gaussian<T: Real>(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat<T> {
    CMat::from_fn(rows, cols, |_, _| C::new(gaussian(rng), gaussian(rng)))
}

/// Haar-distributed unitary matrix.
pub fn random_unitary<T: Real>(n: usize, rng: &mut impl Rng) -> CMat<T> {
    loop {
        let g = complex_gaussian::<T>(n, n, rng);
        let q = orthonormal_columns(&g, re(1e-10));
        if q.ncols() == n {
            return q;
        }
    }
}

/// Random contraction `U diag(s) V*` with singular values uniform in `[0, 1]`.
pub fn random_contraction<T: Real>(n: usize, rng: &mut impl Rng) -> CMat<T> {
    let u = random_unitary::<T>(n, rng);
    let v = random_unitary::<T>(n, rng);
    let s = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C::new(re(rng.random::<f64>()), T::zero())
        } else {
            C::new(T::zero(), T::zero())
        }
    });
    u * s * v.adjoint()
}

/// Random Hermitian positive semidefinite matrix of the given rank.
pub fn random_psd<T: Real>(n: usize, rank: usize, rng: &mut impl Rng) -> CMat<T> {
    let b = complex_gaussian::<T>(n, rank, rng);
    &b * b.adjoint()
}

pub fn random_unit_vector<T: Real>(n: usize, rng: &mut impl Rng) -> CMat<T> {
    let v = complex_gaussian::<T>(n, 1, rng);
    let nv = v.norm();
    v.unscale(nv)
}

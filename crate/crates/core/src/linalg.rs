//! Dense helpers: pivoted orthonormalisation, complements, principal angles.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cre, re, CMat, Real, C};

/// Orthonormal basis of the column span of `m`, via Gram-Schmidt with
/// column pivoting by remaining norm. Columns whose residual norm falls
/// below `rtol` times the largest initial column norm are treated as dependent.
pub fn orthonormal_columns<T: Real>(m: &CMat<T>, rtol: T) -> CMat<T> {
    let scale = (0..m.ncols())
        .map(|j| m.column(j).norm())
        .fold(T::zero(), |x, y| x.max(y));
    if scale == T::zero() {
        return CMat::zeros(m.nrows(), 0);
    }
    orthonormal_columns_abs(m, rtol * scale)
}

/// As [`orthonormal_columns`] with an absolute cut-off.
pub fn orthonormal_columns_abs<T: Real>(m: &CMat<T>, atol: T) -> CMat<T> {
    let (nr, nc) = m.shape();
    let mut a = m.clone();
    let mut q: Vec<nalgebra::DVector<C<T>>> = Vec::new();
    let mut alive: Vec<bool> = vec![true; nc];
    for _ in 0..nr.min(nc) {
        let mut best = None;
        let mut best_norm = T::zero();
        for j in 0..nc {
            if alive[j] {
                let nj = a.column(j).norm();
                if nj > best_norm {
                    best_norm = nj;
                    best = Some(j);
                }
            }
        }
        let Some(j) = best else { break };
        if best_norm <= atol {
            break;
        }
        alive[j] = false;
        let mut v = a.column(j).clone_owned();
        for _ in 0..2 {
            for qk in &q {
                let c = qk.dotc(&v);
                v.axpy(-c, qk, C::new(T::one(), T::zero()));
            }
        }
        let nv = v.norm();
        if nv <= atol {
            continue;
        }
        v.unscale_mut(nv);
        for k in 0..nc {
            if alive[k] {
                let c = v.dotc(&a.column(k));
                let mut col = a.column_mut(k);
                col.axpy(-c, &v, C::new(T::one(), T::zero()));
            }
        }
        q.push(v);
    }
    if q.is_empty() {
        return CMat::zeros(nr, 0);
    }
    CMat::from_columns(&q)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q`.
pub fn complement<T: Real>(q: &CMat<T>) -> CMat<T> {
    let n = q.nrows();
    let p = CMat::<T>::identity(n, n) - q * q.adjoint();
    orthonormal_columns_abs(&p, re(1e-6))
}

/// Sine of the largest principal angle between two orthonormal bases.
/// Returns 1 when the dimensions differ.
pub fn subspace_distance<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    if a.ncols() != b.ncols() {
        return T::one();
    }
    if a.ncols() == 0 {
        return T::zero();
    }
    let r = b - a * (a.adjoint() * b);
    spectral_norm(&r)
}

pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    m.singular_values().max()
}

pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * cre(re::<T>(0.5))
}

/// `(m - m*) / 2i`
pub fn skew_form<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m - m.adjoint()) * C::new(T::zero(), re(-0.5))
}

/// Ascending eigenvalues of the Hermitian part of `h`.
pub fn hermitian_eigenvalues<T: Real>(h: &CMat<T>) -> Vec<T> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let e = SymmetricEigen::new(hermitian_part(h));
    let mut v: Vec<T> = e.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Eigenpairs of the Hermitian part of `h`, ascending.
pub fn hermitian_eigen<T: Real>(h: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let e = SymmetricEigen::new(hermitian_part(h));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        e.eigenvalues[a]
            .partial_cmp(&e.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn min_eigenvalue<T: Real>(h: &CMat<T>) -> T {
    hermitian_eigenvalues(h)
        .first()
        .copied()
        .unwrap_or_else(T::zero)
}

pub fn max_eigenvalue<T: Real>(h: &CMat<T>) -> T {
    hermitian_eigenvalues(h)
        .last()
        .copied()
        .unwrap_or_else(T::zero)
}

/// Moore-Penrose pseudo-inverse with relative singular value cut-off.
pub fn pinv<T: Real>(m: &CMat<T>, rtol: T) -> Result<CMat<T>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(CMat::zeros(m.ncols(), m.nrows()));
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.pseudo_inverse(rtol * smax)
        .map_err(|e| Error::Numerical(e.to_string()))
}

/// Solves `a x = b` for square `a` by LU; errors on singular `a`.
pub fn solve<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("LU factor has a zero pivot".into()))
}

pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, z| acc.max(crate::scalar::cabs(*z)))
}

pub fn diag_c<T: Real>(d: &[T]) -> CMat<T> {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { cre(d[i]) } else { C::zero() })
}

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> CMat<T> {
    m.map(cre)
}

pub fn vstack<T: Real>(top: &CMat<T>, bottom: &CMat<T>) -> CMat<T> {
    let (n0, c) = top.shape();
    let n1 = bottom.nrows();
    CMat::from_fn(n0 + n1, c, |i, j| {
        if i < n0 {
            top[(i, j)]
        } else {
            bottom[(i - n0, j)]
        }
    })
}

pub fn hstack<T: Real>(left: &CMat<T>, right: &CMat<T>) -> CMat<T> {
    let (r, c0) = left.shape();
    let c1 = right.ncols();
    CMat::from_fn(r, c0 + c1, |i, j| {
        if j < c0 {
            left[(i, j)]
        } else {
            right[(i, j - c0)]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{complex_gaussian, rng_from_seed};

    #[test]
    fn orthonormal_columns_detects_rank() {
        let mut rng = rng_from_seed(3);
        let a: CMat<f64> = complex_gaussian(7, 3, &mut rng);
        let b: CMat<f64> = complex_gaussian(3, 5, &mut rng);
        let m = &a * &b;
        let q = orthonormal_columns(&m, 1e-12);
        assert_eq!(q.ncols(), 3);
        let g = q.adjoint() * &q;
        assert!(max_abs(&(g - CMat::identity(3, 3))) < 1e-13);
        let r = &m - &q * (q.adjoint() * &m);
        assert!(max_abs(&r) < 1e-12 * max_abs(&m));
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = rng_from_seed(5);
        let q = orthonormal_columns(&complex_gaussian::<f64>(6, 2, &mut rng), 1e-12);
        let c = complement(&q);
        assert_eq!(c.ncols(), 4);
        assert!(max_abs(&(q.adjoint() * &c)) < 1e-13);
    }

    #[test]
    fn distance_of_rotated_line() {
        let a = CMat::<f64>::from_column_slice(2, 1, &[cre(1.0), cre(0.0)]);
        let t = 0.3f64;
        let b = CMat::<f64>::from_column_slice(2, 1, &[cre(t.cos()), cre(t.sin())]);
        assert!((subspace_distance(&a, &b) - t.sin()).abs() < 1e-14);
    }
}

//! Finite-dimensional linear relations in `H ⊕ H`.
//!
//! A relation is stored as an orthonormal basis of its graph, expressed in
//! isometric coordinates where the (possibly weighted) inner product of `H`
//! becomes the Euclidean one.

use nalgebra::DVector;
use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    complement, hermitian_eigenvalues, hstack, max_abs, orthonormal_columns, skew_form,
    spectral_norm, subspace_distance, vstack,
};
use crate::sampling::{random_unit_vector, random_unitary};
use crate::scalar::{cre, imag_unit, re, CMat, Real, C};

/// Absolute tolerance used by classification and rank decisions.
pub fn default_tol<T: Real>() -> T {
    re::<T>(1e-10).max(re::<T>(1e3) * T::eps())
}

pub(crate) fn rank_tol<T: Real>() -> T {
    re::<T>(1e-12).max(re::<T>(10.0) * T::eps())
}

/// `ℂⁿ` with inner product `Σ w_k x_k conj(y_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotSpace<T: Real> {
    dim: usize,
    weights: Option<Vec<T>>,
}

impl<T: Real> PivotSpace<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, weights: None }
    }

    pub fn weighted(weights: Vec<T>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > T::zero())) {
            return Err(Error::InvalidParameter(format!(
                "pivot weights must be positive, got {}",
                crate::scalar::to_f64(*w)
            )));
        }
        Ok(Self {
            dim: weights.len(),
            weights: Some(weights),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    fn sqrt_weight(&self, i: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[i].sqrt())
    }

    /// Rows scaled by `√w`.
    pub fn to_iso(&self, m: &CMat<T>) -> CMat<T> {
        match &self.weights {
            None => m.clone(),
            Some(_) => CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * self.sqrt_weight(i)),
        }
    }

    pub fn from_iso(&self, m: &CMat<T>) -> CMat<T> {
        match &self.weights {
            None => m.clone(),
            Some(_) => CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / self.sqrt_weight(i)),
        }
    }

    /// Operator matrix in natural coordinates to isometric coordinates.
    pub fn operator_to_iso(&self, a: &CMat<T>) -> CMat<T> {
        match &self.weights {
            None => a.clone(),
            Some(_) => CMat::from_fn(a.nrows(), a.ncols(), |i, j| {
                a[(i, j)] * (self.sqrt_weight(i) / self.sqrt_weight(j))
            }),
        }
    }

    pub fn operator_from_iso(&self, a: &CMat<T>) -> CMat<T> {
        match &self.weights {
            None => a.clone(),
            Some(_) => CMat::from_fn(a.nrows(), a.ncols(), |i, j| {
                a[(i, j)] * (self.sqrt_weight(j) / self.sqrt_weight(i))
            }),
        }
    }

    pub fn inner(&self, x: &DVector<C<T>>, y: &DVector<C<T>>) -> C<T> {
        (0..self.dim).fold(C::zero(), |acc, i| {
            let w = self.weights.as_ref().map_or(T::one(), |w| w[i]);
            acc + x[i] * y[i].conj() * w
        })
    }
}

/// Linear subspace of `H ⊕ H`.
#[derive(Clone, Debug)]
pub struct LinearRelation<T: Real> {
    space: PivotSpace<T>,
    basis: CMat<T>,
}

impl<T: Real> LinearRelation<T> {
    /// Span of the pairs `(f[:, j], fp[:, j])`, given in natural coordinates.
    pub fn from_pairs(space: PivotSpace<T>, f: &CMat<T>, fp: &CMat<T>) -> Result<Self> {
        let n = space.dim();
        for m in [f, fp] {
            if m.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
        if f.ncols() != fp.ncols() {
            return Err(Error::DimensionMismatch {
                expected: f.ncols(),
                found: fp.ncols(),
            });
        }
        let stacked = vstack(&space.to_iso(f), &space.to_iso(fp));
        Ok(Self::from_iso_spanning(space, &stacked))
    }

    pub(crate) fn from_iso_spanning(space: PivotSpace<T>, stacked: &CMat<T>) -> Self {
        let basis = orthonormal_columns(stacked, rank_tol());
        Self { space, basis }
    }

    /// Graph of the matrix `a` on all of `H`.
    pub fn graph(space: PivotSpace<T>, a: &CMat<T>) -> Result<Self> {
        let n = space.dim();
        Self::from_pairs(space, &CMat::identity(n, n), a)
    }

    /// Graph of `a` restricted to the span of the columns of `domain`.
    pub fn graph_on(space: PivotSpace<T>, a: &CMat<T>, domain: &CMat<T>) -> Result<Self> {
        if a.ncols() != domain.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.ncols(),
                found: domain.nrows(),
            });
        }
        let fp = a * domain;
        Self::from_pairs(space, domain, &fp)
    }

    /// `{0} × span(m)`.
    pub fn multivalued(space: PivotSpace<T>, m: &CMat<T>) -> Result<Self> {
        let z = CMat::zeros(space.dim(), m.ncols());
        Self::from_pairs(space, &z, m)
    }

    /// `{(0, 0)}`.
    pub fn zero(space: PivotSpace<T>) -> Self {
        let n = space.dim();
        Self {
            space,
            basis: CMat::zeros(2 * n, 0),
        }
    }

    /// `{0} × H`.
    pub fn pure_multivalued(space: PivotSpace<T>) -> Self {
        let n = space.dim();
        let basis = vstack(&CMat::zeros(n, n), &CMat::identity(n, n));
        Self { space, basis }
    }

    pub fn space(&self) -> &PivotSpace<T> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal graph basis in isometric coordinates (`2n × rank`).
    pub fn iso_basis(&self) -> &CMat<T> {
        &self.basis
    }

    fn iso_f(&self) -> CMat<T> {
        self.basis.rows(0, self.dim()).into_owned()
    }

    fn iso_fp(&self) -> CMat<T> {
        self.basis.rows(self.dim(), self.dim()).into_owned()
    }

    /// First components of the basis pairs, natural coordinates.
    pub fn domain_part(&self) -> CMat<T> {
        self.space.from_iso(&self.iso_f())
    }

    /// Second components of the basis pairs, natural coordinates.
    pub fn range_part(&self) -> CMat<T> {
        self.space.from_iso(&self.iso_fp())
    }

    /// Orthonormal basis (isometric coordinates) of `dom Θ`.
    pub fn domain_iso(&self) -> CMat<T> {
        orthonormal_columns(&self.iso_f(), rank_tol())
    }

    /// Orthonormal basis (isometric coordinates) of `{f' : (0, f') ∈ Θ}`.
    pub fn multivalued_part_iso(&self) -> CMat<T> {
        let f = self.iso_f();
        if f.ncols() == 0 {
            return f;
        }
        let rows = orthonormal_columns(&f.adjoint(), rank_tol());
        let ker = complement_in(&rows, f.ncols());
        orthonormal_columns(&(self.iso_fp() * ker), rank_tol())
    }

    pub fn is_operator(&self) -> bool {
        self.multivalued_part_iso().ncols() == 0
    }

    pub fn inverse(&self) -> Self {
        let n = self.dim();
        let b = vstack(
            &self.basis.rows(n, n).into_owned(),
            &self.basis.rows(0, n).into_owned(),
        );
        Self {
            space: self.space.clone(),
            basis: b,
        }
    }

    /// `{(a f, b f')}` for scalars `a`, `b`.
    pub fn scale(&self, a: C<T>, b: C<T>) -> Self {
        let n = self.dim();
        let f = self.iso_f() * a;
        let fp = self.iso_fp() * b;
        let _ = n;
        Self::from_iso_spanning(self.space.clone(), &vstack(&f, &fp))
    }

    /// Image `{(a0 f, a1 f')}` under natural-coordinate matrices, landing in `target`.
    pub fn map(&self, target: PivotSpace<T>, a0: &CMat<T>, a1: &CMat<T>) -> Result<Self> {
        let f = a0 * self.domain_part();
        let fp = a1 * self.range_part();
        Self::from_pairs(target, &f, &fp)
    }

    /// Closed sum of two relations in the same space.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(Self::from_iso_spanning(
            self.space.clone(),
            &hstack(&self.basis, &other.basis),
        ))
    }

    /// `self ⊆ other` up to `tol`.
    pub fn is_subset_of(&self, other: &Self, tol: T) -> bool {
        if self.space != other.space {
            return false;
        }
        let r = &self.basis - &other.basis * (other.basis.adjoint() * &self.basis);
        max_abs(&r) <= tol
    }

    /// Sine of the largest principal angle between the graphs.
    pub fn distance(&self, other: &Self) -> T {
        subspace_distance(&self.basis, &other.basis)
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Compressed form `M = F* F'` on the graph basis: `c* M c = ⟨f'|f⟩`.
    fn form(&self) -> CMat<T> {
        self.iso_f().adjoint() * self.iso_fp()
    }
}

fn complement_in<T: Real>(q: &CMat<T>, n: usize) -> CMat<T> {
    if q.ncols() == 0 {
        return CMat::identity(n, n);
    }
    complement(q)
}

/// Classification of a relation.
#[derive(Clone, Debug, Serialize)]
pub struct RelationVerdict<T: Real + Serialize> {
    pub dim: usize,
    pub rank: usize,
    pub dissipative: bool,
    pub maximal_dissipative: bool,
    pub accretive: bool,
    pub symmetric: bool,
    pub selfadjoint: bool,
    pub nonnegative: bool,
    /// `-sup Im ⟨h'|h⟩` over unit graph vectors; negative means violation.
    pub margin: T,
    /// `inf Re ⟨h'|h⟩` over unit graph vectors.
    pub accretivity_margin: T,
    /// `sup |Im ⟨h'|h⟩|` over unit graph vectors.
    pub symmetry_defect: T,
    pub sampled_margin: Option<T>,
    pub samples: usize,
}

/// Classifies a relation from the exact extreme values of its numerical cone.
/// `samples` additionally draws that many seeded random graph vectors.
pub fn classify_relation<T: Real + Serialize>(
    rel: &LinearRelation<T>,
    samples: usize,
) -> RelationVerdict<T> {
    let tol = default_tol::<T>();
    let m = rel.form();
    let im = hermitian_eigenvalues(&skew_form(&m));
    let rl = hermitian_eigenvalues(&m);
    let (im_min, im_max) = match (im.first(), im.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => (T::zero(), T::zero()),
    };
    let re_min = rl.first().copied().unwrap_or_else(T::zero);
    let n = rel.dim();
    let r = rel.rank();
    let dissipative = im_max <= tol;
    let symmetric = im_max <= tol && im_min >= -tol;
    let accretive = re_min >= -tol;
    let sampled_margin = (samples > 0 && r > 0).then(|| {
        let mut rng = crate::sampling::rng_from_seed(0x5eed);
        let mut worst = T::max_value().unwrap_or_else(T::one);
        for _ in 0..samples {
            let c = random_unit_vector::<T>(r, &mut rng);
            let v = (c.adjoint() * &m * &c)[(0, 0)];
            worst = worst.min(-v.im);
        }
        worst
    });
    RelationVerdict {
        dim: n,
        rank: r,
        dissipative,
        maximal_dissipative: dissipative && r == n,
        accretive,
        symmetric,
        selfadjoint: symmetric && r == n,
        nonnegative: symmetric && accretive,
        margin: -im_max,
        accretivity_margin: re_min,
        symmetry_defect: im_max.abs().max(im_min.abs()),
        sampled_margin,
        samples,
    }
}

/// `Θ* = {(g, g') : ⟨f'|g⟩ = ⟨f|g'⟩ for all (f, f') ∈ Θ}`.
pub fn adjoint_relation<T: Real>(rel: &LinearRelation<T>) -> LinearRelation<T> {
    let n = rel.dim();
    let j = vstack(&rel.iso_fp(), &(-rel.iso_f()));
    let basis = if j.ncols() == 0 {
        CMat::identity(2 * n, 2 * n)
    } else {
        complement(&j)
    };
    LinearRelation {
        space: rel.space.clone(),
        basis,
    }
}

/// Contraction with its own pivot space.
#[derive(Clone, Debug)]
pub struct ContractionOp<T: Real> {
    space: PivotSpace<T>,
    matrix: CMat<T>,
}

impl<T: Real> ContractionOp<T> {
    /// Checks `‖K‖ ≤ 1` in the space's norm, with slack `1e-10`.
    pub fn new(space: PivotSpace<T>, matrix: CMat<T>) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let op = Self { space, matrix };
        let nk = op.norm();
        if nk > T::one() + default_tol::<T>() {
            return Err(Error::NotContraction {
                norm: crate::scalar::to_f64(nk),
            });
        }
        Ok(op)
    }

    pub fn unweighted(matrix: CMat<T>) -> Result<Self> {
        Self::new(PivotSpace::new(matrix.nrows()), matrix)
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn space(&self) -> &PivotSpace<T> {
        &self.space
    }

    pub fn norm(&self) -> T {
        spectral_norm(&self.space.operator_to_iso(&self.matrix))
    }

    /// `‖K*K - I‖`, zero for unitary `K`.
    pub fn unitarity_defect(&self) -> T {
        let k = self.space.operator_to_iso(&self.matrix);
        let n = k.nrows();
        spectral_norm(&(k.adjoint() * &k - CMat::identity(n, n)))
    }
}

/// Cayley transform of a dissipative relation: a contraction defined on
/// `dom = {h' - i h}`, extended by zero to all of `H`.
#[derive(Clone, Debug)]
pub struct CayleyTransform<T: Real> {
    space: PivotSpace<T>,
    matrix: CMat<T>,
    domain_iso: CMat<T>,
}

impl<T: Real> CayleyTransform<T> {
    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    /// Orthonormal basis of the domain, isometric coordinates.
    pub fn domain_iso(&self) -> &CMat<T> {
        &self.domain_iso
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_iso.ncols()
    }

    pub fn is_total(&self) -> bool {
        self.domain_dim() == self.space.dim()
    }

    pub fn into_contraction(self) -> Result<ContractionOp<T>> {
        if !self.is_total() {
            return Err(Error::NotDissipative { margin: f64::NAN });
        }
        ContractionOp::new(self.space, self.matrix)
    }
}

/// `Cay(Θ) = {(h' - i h, h' + i h)}`.
pub fn cayley<T: Real + Serialize>(rel: &LinearRelation<T>) -> Result<CayleyTransform<T>> {
    let v = classify_relation(rel, 0);
    if !v.dissipative {
        return Err(Error::NotDissipative {
            margin: crate::scalar::to_f64(v.margin),
        });
    }
    let i = imag_unit::<T>();
    let f = rel.iso_f();
    let fp = rel.iso_fp();
    let d = &fp - &f * i;
    let e = &fp + &f * i;
    let n = rel.dim();
    let space = rel.space.clone();
    if d.ncols() == 0 {
        return Ok(CayleyTransform {
            space,
            matrix: CMat::zeros(n, n),
            domain_iso: CMat::zeros(n, 0),
        });
    }
    let g = d.adjoint() * &d;
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("Cayley domain Gram matrix".into()))?;
    let k_iso = &e * chol.solve(&d.adjoint());
    Ok(CayleyTransform {
        matrix: space.operator_from_iso(&k_iso),
        domain_iso: orthonormal_columns(&d, rank_tol()),
        space,
    })
}

/// `Ξ = {((K - I) f, i (K + I) f)}`.
pub fn inverse_cayley<T: Real>(k: &ContractionOp<T>) -> LinearRelation<T> {
    let space = k.space.clone();
    let kt = space.operator_to_iso(&k.matrix);
    inverse_cayley_iso(space, &kt)
}

fn inverse_cayley_iso<T: Real>(space: PivotSpace<T>, kt: &CMat<T>) -> LinearRelation<T> {
    let n = space.dim();
    let id = CMat::<T>::identity(n, n);
    let f = kt - &id;
    let fp = (kt + &id) * imag_unit::<T>();
    LinearRelation::from_iso_spanning(space, &vstack(&f, &fp))
}

fn require_nonnegative<T: Real + Serialize>(rel: &LinearRelation<T>) -> Result<()> {
    let v = classify_relation(rel, 0);
    if !(v.symmetric && v.nonnegative) {
        return Err(Error::NotSymmetricNonnegative(format!(
            "symmetry defect {:e}, accretivity margin {:e}",
            crate::scalar::to_f64(v.symmetry_defect),
            crate::scalar::to_f64(v.accretivity_margin)
        )));
    }
    Ok(())
}

/// Largest nonnegative selfadjoint extension: the compression of the
/// operator part to `D = closure(dom Ψ)`, plus `{0} × D^⊥`.
pub fn friedrichs<T: Real + Serialize>(rel: &LinearRelation<T>) -> Result<LinearRelation<T>> {
    require_nonnegative(rel)?;
    let n = rel.dim();
    let f = rel.iso_f();
    let fp = rel.iso_fp();
    let pd = orthonormal_columns(&f, rank_tol());
    let d = pd.ncols();
    let coords = pd.adjoint() * &f;
    let image = pd.adjoint() * &fp;
    let a = if d == 0 {
        CMat::zeros(0, 0)
    } else {
        let gram = &coords * coords.adjoint();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Singular("domain coordinates".into()))?;
        let raw = &image * coords.adjoint() * chol.inverse();
        (&raw + raw.adjoint()) * cre(re::<T>(0.5))
    };
    let perp = complement_in(&pd, n);
    let perp = if d == 0 { CMat::identity(n, n) } else { perp };
    let top = hstack(&pd, &CMat::zeros(n, perp.ncols()));
    let bottom = hstack(&(&pd * a), &perp);
    Ok(LinearRelation::from_iso_spanning(
        rel.space.clone(),
        &vstack(&top, &bottom),
    ))
}

/// Smallest nonnegative selfadjoint extension, `((Ψ⁻¹)_F)⁻¹`.
pub fn krein<T: Real + Serialize>(rel: &LinearRelation<T>) -> Result<LinearRelation<T>> {
    Ok(friedrichs(&rel.inverse())?.inverse())
}

/// `(Ξ + I)⁻¹` for a nonnegative selfadjoint relation, natural coordinates.
pub fn resolvent_of_relation<T: Real + Serialize>(rel: &LinearRelation<T>) -> Result<CMat<T>> {
    Ok(rel.space.operator_from_iso(&resolvent_iso(rel)?))
}

/// `(Ξ + I)⁻¹` in isometric coordinates, where it is Hermitian.
pub fn resolvent_iso<T: Real + Serialize>(rel: &LinearRelation<T>) -> Result<CMat<T>> {
    let v = classify_relation(rel, 0);
    if !(v.selfadjoint && v.nonnegative) {
        return Err(Error::NotSelfadjointNonnegative(format!(
            "rank {} of {}, symmetry defect {:e}, accretivity margin {:e}",
            v.rank,
            v.dim,
            crate::scalar::to_f64(v.symmetry_defect),
            crate::scalar::to_f64(v.accretivity_margin)
        )));
    }
    let f = rel.iso_f();
    let s = &f + rel.iso_fp();
    let lu = s.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Singular("Ξ + I".into()))?;
    let r = f * inv;
    Ok((&r + r.adjoint()) * cre(re::<T>(0.5)))
}

/// Draws a nonnegative selfadjoint extension of a symmetric nonnegative
/// relation by completing its (isometric) Cayley transform to a random
/// unitary and rejecting candidates that are not nonnegative.
pub fn sample_nonnegative_extension<T: Real + Serialize>(
    rel: &LinearRelation<T>,
    rng: &mut impl Rng,
    max_tries: usize,
) -> Result<Option<LinearRelation<T>>> {
    require_nonnegative(rel)?;
    let c = cayley(rel)?;
    let n = rel.dim();
    let space = rel.space.clone();
    let q = c.domain_iso.clone();
    let k_iso = space.operator_to_iso(&c.matrix);
    let ran = orthonormal_columns(&(&k_iso * &q), rank_tol());
    let qc = complement_in(&q, n);
    let rc = complement_in(&ran, n);
    let qc = if q.ncols() == 0 {
        CMat::identity(n, n)
    } else {
        qc
    };
    let rc = if ran.ncols() == 0 {
        CMat::identity(n, n)
    } else {
        rc
    };
    let base = &k_iso * &q * q.adjoint();
    for _ in 0..max_tries {
        let w = random_unitary::<T>(qc.ncols(), rng);
        let u = &base + &rc * w * qc.adjoint();
        let ext = inverse_cayley_iso(space.clone(), &u);
        let v = classify_relation(&ext, 0);
        if v.selfadjoint && v.nonnegative {
            return Ok(Some(ext));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_c, min_eigenvalue};
    use crate::sampling::{complex_gaussian, random_contraction, random_psd, rng_from_seed};

    fn sp(n: usize) -> PivotSpace<f64> {
        PivotSpace::new(n)
    }

    #[test]
    fn scalar_graph_classification() {
        let z = |re: f64, im: f64| CMat::from_element(1, 1, C::new(re, im));
        let g = |a| LinearRelation::graph(sp(1), &a).unwrap();

        let v = classify_relation(&g(z(0.0, -1.0)), 0);
        assert!(v.maximal_dissipative);
        assert!(!v.symmetric);

        let v = classify_relation(&g(z(0.0, 1.0)), 0);
        assert!(!v.dissipative);

        let v = classify_relation(&g(z(2.0, 0.0)), 0);
        assert!(v.selfadjoint && v.nonnegative);

        let v = classify_relation(&LinearRelation::<f64>::pure_multivalued(sp(1)), 0);
        assert!(v.selfadjoint && v.maximal_dissipative);
    }

    #[test]
    fn cayley_of_anchor_relations() {
        let i = CMat::<f64>::identity(3, 3);
        let k = cayley(&LinearRelation::graph(sp(3), &CMat::zeros(3, 3)).unwrap()).unwrap();
        assert!(max_abs(&(k.matrix() + &i)) < 1e-15);

        let k = cayley(&LinearRelation::<f64>::pure_multivalued(sp(3))).unwrap();
        assert!(max_abs(&(k.matrix() - &i)) < 1e-15);

        let minus_i = &i * C::new(0.0, -1.0);
        let k = cayley(&LinearRelation::graph(sp(3), &minus_i).unwrap()).unwrap();
        assert!(max_abs(k.matrix()) < 1e-15);
    }

    #[test]
    fn cayley_of_operator_matches_closed_form() {
        let mut rng = rng_from_seed(11);
        let n = 4;
        let h = random_psd::<f64>(n, n, &mut rng);
        let t = &h * C::new(0.0, -1.0) + complex_gaussian(n, n, &mut rng) * C::new(0.1, 0.0);
        let rel = LinearRelation::graph(sp(n), &t).unwrap();
        if !classify_relation(&rel, 0).dissipative {
            return;
        }
        let k = cayley(&rel).unwrap();
        let id = CMat::<f64>::identity(n, n);
        let i = C::new(0.0, 1.0);
        let closed = (&t + &id * i) * (&t - &id * i).try_inverse().unwrap();
        assert!(max_abs(&(k.matrix() - closed)) < 1e-12);
    }

    #[test]
    fn not_dissipative_is_rejected() {
        let a = CMat::from_element(1, 1, C::new(0.0, 1.0));
        let rel = LinearRelation::graph(sp(1), &a).unwrap();
        assert!(matches!(cayley(&rel), Err(Error::NotDissipative { .. })));
    }

    #[test]
    fn partial_cayley_of_symmetric_operator() {
        let a = CMat::from_column_slice(2, 1, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        let op = CMat::<f64>::identity(2, 2) * C::new(2.0, 0.0);
        let rel = LinearRelation::graph_on(sp(2), &op, &a).unwrap();
        let c = cayley(&rel).unwrap();
        assert_eq!(c.domain_dim(), 1);
        assert!(!c.is_total());
    }

    #[test]
    fn friedrichs_krein_two_dim_example() {
        let a = 3.0;
        let e1 = CMat::from_column_slice(2, 1, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        let rel = LinearRelation::from_pairs(sp(2), &e1, &(e1.clone() * C::new(a, 0.0))).unwrap();
        let rf = resolvent_of_relation(&friedrichs(&rel).unwrap()).unwrap();
        let rk = resolvent_of_relation(&krein(&rel).unwrap()).unwrap();
        let want_f = diag_c(&[1.0 / (1.0 + a), 0.0]);
        let want_k = diag_c(&[1.0 / (1.0 + a), 1.0]);
        assert!(max_abs(&(rf - want_f)) < 1e-14);
        assert!(max_abs(&(rk - want_k)) < 1e-14);
    }

    #[test]
    fn friedrichs_of_trivial_relation() {
        let rel = LinearRelation::<f64>::zero(sp(3));
        let f = friedrichs(&rel).unwrap();
        let k = krein(&rel).unwrap();
        assert!(f.distance(&LinearRelation::pure_multivalued(sp(3))) < 1e-14);
        assert!(k.distance(&LinearRelation::graph(sp(3), &CMat::zeros(3, 3)).unwrap()) < 1e-14);
    }

    #[test]
    fn densely_defined_positive_operator_is_its_own_extension() {
        let mut rng = rng_from_seed(2);
        let h = random_psd::<f64>(4, 4, &mut rng) + CMat::identity(4, 4);
        let rel = LinearRelation::graph(sp(4), &h).unwrap();
        let d = friedrichs(&rel).unwrap().distance(&rel);
        assert!(d < 1e-12, "{d}");
        assert!(krein(&rel).unwrap().distance(&rel) < 1e-12);
    }

    #[test]
    fn weighted_resolvent_matches_operator_inverse() {
        let space = PivotSpace::weighted(vec![1.0, 4.0, 0.25]).unwrap();
        let a = diag_c(&[2.0, 0.5, 7.0]);
        let rel = LinearRelation::graph(space, &a).unwrap();
        let r = resolvent_of_relation(&rel).unwrap();
        let want = diag_c(&[1.0 / 3.0, 1.0 / 1.5, 1.0 / 8.0]);
        assert!(max_abs(&(r - want)) < 1e-14);
    }

    #[test]
    fn weighted_adjoint_of_matrix() {
        let w = vec![1.0, 2.0, 5.0];
        let space = PivotSpace::weighted(w.clone()).unwrap();
        let mut rng = rng_from_seed(4);
        let a = complex_gaussian::<f64>(3, 3, &mut rng);
        let rel = LinearRelation::graph(space.clone(), &a).unwrap();
        let wm = diag_c(&w);
        let wi = diag_c(&w.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
        let adj = wi * a.adjoint() * wm;
        let want = LinearRelation::graph(space, &adj).unwrap();
        assert!(adjoint_relation(&rel).distance(&want) < 1e-12);
    }

    #[test]
    fn sampled_extension_is_sandwiched() {
        let mut rng = rng_from_seed(9);
        let n = 4;
        let dom = complex_gaussian::<f64>(n, 2, &mut rng);
        let t = random_psd::<f64>(n, n, &mut rng);
        let rel = LinearRelation::graph_on(sp(n), &t, &dom).unwrap();
        let ext = sample_nonnegative_extension(&rel, &mut rng, 4096)
            .unwrap()
            .expect("extension");
        assert!(rel.is_subset_of(&ext, 1e-10));
        let rf = resolvent_iso(&friedrichs(&rel).unwrap()).unwrap();
        let rk = resolvent_iso(&krein(&rel).unwrap()).unwrap();
        let re_ = resolvent_iso(&ext).unwrap();
        assert!(min_eigenvalue(&(&re_ - &rf)) > -1e-10);
        assert!(min_eigenvalue(&(&rk - &re_)) > -1e-10);
    }

    #[test]
    fn contraction_check() {
        let mut rng = rng_from_seed(1);
        let k = random_contraction::<f64>(3, &mut rng);
        assert!(ContractionOp::unweighted(k.clone()).is_ok());
        let big = k * C::new(2.0, 0.0) + CMat::identity(3, 3);
        assert!(matches!(
            ContractionOp::unweighted(big),
            Err(Error::NotContraction { .. })
        ));
    }
}

//! Mutually dual m-order spaces `H_{-,+}`, `H`, `H_{+,-}` over a common
//! orthonormal basis, described by a positive weight sequence `s`.
//!
//! `‖x‖_{-,+} = ‖diag(s) x‖` and `‖y‖_{+,-} = ‖diag(s)⁻¹ y‖`; the pairing is the
//! pivot inner product `Σ w_k x_k conj(y_k)` (unit weights by default).

use nalgebra::DVector;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::scalar::{CMat, CVec, Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// The pivot space `H`.
    Pivot,
    /// `H_{-,+}`
    MinusPlus,
    /// `H_{+,-}`
    PlusMinus,
}

impl Side {
    pub fn dual(self) -> Side {
        match self {
            Side::Pivot => Side::Pivot,
            Side::MinusPlus => Side::PlusMinus,
            Side::PlusMinus => Side::MinusPlus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Signature {
    /// `T : H_{-,+} → H_{+,-}`, `T# : H_{-,+} → H_{+,-}`
    A1,
    /// `T : H → H_{-,+}`, `T# : H_{+,-} → H`
    A2,
    /// `T : H_{-,+} → H`, `T# : H → H_{+,-}`
    A3,
    /// `T : H_{-,+} → H_{-,+}`, `T# : H_{+,-} → H_{+,-}`
    A4,
}

impl Signature {
    pub const ALL: [Signature; 4] = [Signature::A1, Signature::A2, Signature::A3, Signature::A4];

    fn domains(self) -> ((Side, Side), (Side, Side)) {
        use Side::*;
        match self {
            Signature::A1 => ((MinusPlus, PlusMinus), (MinusPlus, PlusMinus)),
            Signature::A2 => ((Pivot, MinusPlus), (PlusMinus, Pivot)),
            Signature::A3 => ((MinusPlus, Pivot), (Pivot, PlusMinus)),
            Signature::A4 => ((MinusPlus, MinusPlus), (PlusMinus, PlusMinus)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MOrderWeights<T: Real> {
    s: Vec<T>,
    pivot: Option<Vec<T>>,
}

impl<T: Real> MOrderWeights<T> {
    pub fn new(s: Vec<T>) -> Result<Self> {
        check_positive(&s, "m-order weights")?;
        Ok(Self { s, pivot: None })
    }

    /// Attaches pivot weights `w` so that the pairing becomes `Σ w x conj(y)`.
    pub fn with_pivot_weights(mut self, w: Vec<T>) -> Result<Self> {
        check_positive(&w, "pivot weights")?;
        if w.len() != self.s.len() {
            return Err(Error::DimensionMismatch {
                expected: self.s.len(),
                found: w.len(),
            });
        }
        self.pivot = Some(w);
        Ok(self)
    }

    pub fn s(&self) -> &[T] {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn pivot_weights(&self) -> Option<&[T]> {
        self.pivot.as_deref()
    }

    fn side_scale(&self, side: Side, k: usize) -> T {
        match side {
            Side::Pivot => T::one(),
            Side::MinusPlus => self.s[k],
            Side::PlusMinus => T::one() / self.s[k],
        }
    }

    fn root_pivot(&self, k: usize) -> T {
        self.pivot.as_ref().map_or(T::one(), |w| w[k].sqrt())
    }

    /// Norm of `h` regarded as an element of `side`.
    pub fn norm(&self, h: &CVec<T>, side: Side) -> T {
        (0..self.dim())
            .map(|k| {
                let a = crate::scalar::cabs(h[k]) * self.side_scale(side, k) * self.root_pivot(k);
                a * a
            })
            .fold(T::zero(), |x, y| x + y)
            .sqrt()
    }

    /// Pivot pairing `⟨a|b⟩`.
    pub fn pairing(&self, a: &CVec<T>, b: &CVec<T>) -> C<T> {
        (0..self.dim()).fold(C::zero(), |acc, k| {
            let w = self.pivot.as_ref().map_or(T::one(), |w| w[k]);
            acc + a[k] * b[k].conj() * w
        })
    }

    /// `sup { |⟨h|g⟩| : ‖g‖ = 1 in the dual of side }`, attained at an
    /// explicit maximiser.
    pub fn dual_norm(&self, h: &CVec<T>, side: Side) -> T {
        let g = self.dual_maximiser(h, side);
        crate::scalar::cabs(self.pairing(h, &g))
    }

    /// Unit vector of the dual side maximising `|⟨h|·⟩|`.
    pub fn dual_maximiser(&self, h: &CVec<T>, side: Side) -> CVec<T> {
        let dual = side.dual();
        let mut g = DVector::from_fn(self.dim(), |k, _| {
            let sc = self.side_scale(side, k);
            h[k] * (sc * sc)
        });
        let ng = self.norm(&g, dual);
        if ng > T::zero() {
            g.unscale_mut(ng);
        }
        g
    }

    /// Unitary maps between the three spaces, as diagonal multipliers.
    pub fn unitary_maps(&self) -> UnitaryMaps<T> {
        UnitaryMaps {
            to_minus_plus: self.s.iter().map(|&x| T::one() / x).collect(),
            to_plus_minus: self.s.clone(),
            riesz: self.s.iter().map(|&x| x * x).collect(),
        }
    }

    /// `T#` defined by `⟨T f|g⟩ = ⟨f|T# g⟩`; the coefficient matrix is
    /// `W⁻¹ T* W` for every signature.
    pub fn sharp_adjoint(&self, t: &CMat<T>, _signature: Signature) -> Result<CMat<T>> {
        let n = self.dim();
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.nrows().max(t.ncols()),
            });
        }
        let ta = t.adjoint();
        Ok(match &self.pivot {
            None => ta,
            Some(w) => CMat::from_fn(n, n, |i, j| ta[(i, j)] * (w[j] / w[i])),
        })
    }

    /// Operator norm of `t` between the given sides.
    pub fn operator_norm(&self, t: &CMat<T>, from: Side, to: Side) -> T {
        let n = self.dim();
        let m = CMat::from_fn(n, n, |i, j| {
            let num = self.side_scale(to, i) * self.root_pivot(i);
            let den = self.side_scale(from, j) * self.root_pivot(j);
            t[(i, j)] * (num / den)
        });
        spectral_norm(&m)
    }

    /// `(‖T‖, ‖T#‖)`, each in the operator norm of its signature.
    pub fn sharp_norms(&self, t: &CMat<T>, signature: Signature) -> Result<(T, T)> {
        let ts = self.sharp_adjoint(t, signature)?;
        let ((a0, a1), (b0, b1)) = signature.domains();
        Ok((
            self.operator_norm(t, a0, a1),
            self.operator_norm(&ts, b0, b1),
        ))
    }
}

fn check_positive<T: Real>(v: &[T], what: &str) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(**x > T::zero())) {
        return Err(Error::InvalidParameter(format!(
            "{what} must be positive, got {}",
            crate::scalar::to_f64(*x)
        )));
    }
    Ok(())
}

/// Diagonal unitary maps in coefficient form.
#[derive(Clone, Debug)]
pub struct UnitaryMaps<T: Real> {
    /// `H → H_{-,+}`
    pub to_minus_plus: Vec<T>,
    /// `H → H_{+,-}`
    pub to_plus_minus: Vec<T>,
    /// `H_{-,+} → H_{+,-}`
    pub riesz: Vec<T>,
}

impl<T: Real> UnitaryMaps<T> {
    pub fn apply(d: &[T], h: &CVec<T>) -> CVec<T> {
        DVector::from_fn(h.len(), |k, _| h[k] * d[k])
    }

    pub fn apply_inverse(d: &[T], h: &CVec<T>) -> CVec<T> {
        DVector::from_fn(h.len(), |k, _| h[k] / d[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{complex_gaussian, rng_from_seed};

    fn weights() -> MOrderWeights<f64> {
        MOrderWeights::new(vec![0.3, 1.0, 2.5, 7.0]).unwrap()
    }

    fn col(m: CMat<f64>) -> CVec<f64> {
        m.column(0).into_owned()
    }

    #[test]
    fn dual_norm_equals_closed_form() {
        let w = weights();
        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let h = col(complex_gaussian(4, 1, &mut rng));
            for side in [Side::Pivot, Side::MinusPlus, Side::PlusMinus] {
                let gap = (w.dual_norm(&h, side) - w.norm(&h, side)).abs();
                assert!(gap < 1e-12);
            }
        }
    }

    #[test]
    fn dual_norm_bounds_random_pairings() {
        let w = weights();
        let mut rng = rng_from_seed(9);
        let h = col(complex_gaussian(4, 1, &mut rng));
        let d = w.dual_norm(&h, Side::PlusMinus);
        for _ in 0..200 {
            let g = col(complex_gaussian(4, 1, &mut rng));
            let g = &g / C::new(w.norm(&g, Side::MinusPlus), 0.0);
            assert!(w.pairing(&h, &g).norm() <= d * (1.0 + 1e-12));
        }
    }

    #[test]
    fn unitary_maps_preserve_norms() {
        let w = weights();
        let u = w.unitary_maps();
        let mut rng = rng_from_seed(10);
        let h = col(complex_gaussian(4, 1, &mut rng));
        let n = h.norm();
        let a = UnitaryMaps::apply(&u.to_minus_plus, &h);
        let b = UnitaryMaps::apply(&u.to_plus_minus, &h);
        assert!((w.norm(&a, Side::MinusPlus) - n).abs() < 1e-12);
        assert!((w.norm(&b, Side::PlusMinus) - n).abs() < 1e-12);
        let c = UnitaryMaps::apply(&u.riesz, &a);
        assert!((w.norm(&c, Side::PlusMinus) - n).abs() < 1e-12);
    }

    #[test]
    fn sharp_adjoint_identity_and_involution() {
        let w = weights()
            .with_pivot_weights(vec![1.0, 2.0, 0.5, 3.0])
            .unwrap();
        let mut rng = rng_from_seed(12);
        let t = complex_gaussian::<f64>(4, 4, &mut rng);
        let ts = w.sharp_adjoint(&t, Signature::A1).unwrap();
        let f = col(complex_gaussian(4, 1, &mut rng));
        let g = col(complex_gaussian(4, 1, &mut rng));
        let lhs = w.pairing(&(&t * &f), &g);
        let rhs = w.pairing(&f, &(&ts * &g));
        assert!((lhs - rhs).norm() < 1e-12);
        let back = w.sharp_adjoint(&ts, Signature::A1).unwrap();
        assert!((back - t).norm() < 1e-12);
    }

    #[test]
    fn sharp_norms_agree() {
        let w = weights();
        let mut rng = rng_from_seed(13);
        let t = complex_gaussian::<f64>(4, 4, &mut rng);
        for sig in Signature::ALL {
            let (a, b) = w.sharp_norms(&t, sig).unwrap();
            assert!((a - b).abs() < 1e-10 * a, "{sig:?}");
        }
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(MOrderWeights::new(vec![1.0, 0.0]).is_err());
    }
}

//! Impedance boundary operators on spectral trace spaces, their Cayley
//! contractions, abstract boundary conditions, and Friedrichs/Krein
//! extensions of nonnegative impedance operators.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    complement, diag_c, hermitian_eigen, hermitian_part, hstack, max_abs, min_eigenvalue,
    orthonormal_columns, skew_form, spectral_norm,
};
use crate::linrel::{
    cayley, classify_relation, default_tol, friedrichs, krein, resolvent_iso, ContractionOp,
    LinearRelation, PivotSpace,
};
use crate::morder::MOrderWeights;
use crate::sampling::gaussian;
use crate::scalar::{cre, imag_unit, re, to_f64, CMat, Real, C};
use crate::tracespace::{trace_weights, HodgeBasis, QuadNode, SurfaceModel};

pub type DevFn<T> = Arc<dyn Fn(T) -> C<T> + Send + Sync>;
pub type PointFn<T> = Arc<dyn Fn(&QuadNode<T>) -> C<T> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Region<T: Real + Serialize> {
    /// `θ < theta0` on every spherical component.
    Cap { theta0: T },
    /// `x0 ≤ x < x1` on every toroidal component.
    Strip { x0: T, x1: T },
}

impl<T: Real + Serialize> Region<T> {
    pub fn contains(&self, model: SurfaceModel, node: &QuadNode<T>) -> Result<bool> {
        match (self, model.is_toroidal()) {
            (Region::Cap { theta0 }, false) => Ok(node.chart[0] < *theta0),
            (Region::Strip { x0, x1 }, true) => Ok(node.chart[0] >= *x0 && node.chart[0] < *x1),
            _ => Err(Error::InvalidParameter(format!(
                "region does not apply to surface model {model}"
            ))),
        }
    }
}

/// Positive part of a Gaussian series `Σ ξ_k u_k` with `Var ξ_k = λ_k^{-2s}`.
#[derive(Clone, Debug, Serialize)]
pub struct RandomField<T: Real + Serialize> {
    pub s: T,
    pub seed: u64,
    pub truncation: usize,
    pub coeffs: Vec<T>,
}

#[derive(Clone)]
pub enum ImpedanceSpec<T: Real + Serialize> {
    Constant(C<T>),
    /// `z = f(-Dev)` as a function of the Hodge eigenvalue `λ²`.
    DevFunction {
        f: DevFn<T>,
        description: String,
    },
    Pointwise {
        f: PointFn<T>,
        description: String,
    },
    Indicator(Region<T>),
    Random(RandomField<T>),
}

impl<T: Real + Serialize> fmt::Debug for ImpedanceSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl<T: Real + Serialize> ImpedanceSpec<T> {
    pub fn constant(z: T) -> Self {
        ImpedanceSpec::Constant(cre(z))
    }

    pub fn dev_function(
        description: impl Into<String>,
        f: impl Fn(T) -> C<T> + Send + Sync + 'static,
    ) -> Self {
        ImpedanceSpec::DevFunction {
            f: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn pointwise(
        description: impl Into<String>,
        f: impl Fn(&QuadNode<T>) -> C<T> + Send + Sync + 'static,
    ) -> Self {
        ImpedanceSpec::Pointwise {
            f: Arc::new(f),
            description: description.into(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ImpedanceSpec::Constant(z) => format!("const:{}{:+}i", to_f64(z.re), to_f64(z.im)),
            ImpedanceSpec::DevFunction { description, .. } => format!("f-dev:{description}"),
            ImpedanceSpec::Pointwise { description, .. } => format!("pointwise:{description}"),
            ImpedanceSpec::Indicator(Region::Cap { theta0 }) => {
                format!("cap:theta0={}", to_f64(*theta0))
            }
            ImpedanceSpec::Indicator(Region::Strip { x0, x1 }) => {
                format!("strip:x0={},x1={}", to_f64(*x0), to_f64(*x1))
            }
            ImpedanceSpec::Random(r) => format!("random:s={},seed={}", to_f64(r.s), r.seed),
        }
    }

    /// True when `z` is real-valued.
    pub fn is_real(&self, basis: &HodgeBasis<T>) -> Result<bool> {
        Ok(match self {
            ImpedanceSpec::Constant(z) => z.im == T::zero(),
            ImpedanceSpec::Indicator(_) | ImpedanceSpec::Random(_) => true,
            ImpedanceSpec::DevFunction { f, .. } => basis
                .modes()
                .iter()
                .all(|m| f(m.lambda * m.lambda).im == T::zero()),
            ImpedanceSpec::Pointwise { .. } => sample_impedance(basis, self)?
                .iter()
                .all(|z| z.im == T::zero()),
        })
    }
}

/// Values of a pointwise impedance at the quadrature nodes.
pub fn sample_impedance<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    z: &ImpedanceSpec<T>,
) -> Result<Vec<C<T>>> {
    let surf = basis.surface();
    let nodes = surf.nodes();
    match z {
        ImpedanceSpec::Constant(c) => Ok(vec![*c; nodes.len()]),
        ImpedanceSpec::Pointwise { f, .. } => Ok(nodes.iter().map(|n| f(n)).collect()),
        ImpedanceSpec::Indicator(region) => nodes
            .iter()
            .map(|n| {
                Ok(if region.contains(surf.model(), n)? {
                    C::new(T::one(), T::zero())
                } else {
                    C::zero()
                })
            })
            .collect(),
        ImpedanceSpec::Random(r) => {
            if r.coeffs.len() > surf.modes().len() {
                return Err(Error::DimensionMismatch {
                    expected: surf.modes().len(),
                    found: r.coeffs.len(),
                });
            }
            Ok((0..nodes.len())
                .map(|q| {
                    let smp = surf.sample_modes(q);
                    let v = r
                        .coeffs
                        .iter()
                        .zip(smp.iter())
                        .fold(T::zero(), |acc, (c, m)| acc + *c * m.value);
                    cre(v.max(T::zero()))
                })
                .collect())
        }
        ImpedanceSpec::DevFunction { .. } => Err(Error::InvalidParameter(
            "a function of the surface Laplacian has no pointwise values".into(),
        )),
    }
}

/// Galerkin matrix of `Mul_z` in the Hodge basis.
pub fn mulz_matrix<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    z: &ImpedanceSpec<T>,
) -> Result<CMat<T>> {
    let tol = -re::<T>(1e-12);
    if let ImpedanceSpec::DevFunction { f, .. } = z {
        let vals: Vec<C<T>> = basis
            .modes()
            .iter()
            .map(|m| f(m.lambda * m.lambda))
            .collect();
        if let Some((k, v)) = vals.iter().enumerate().find(|(_, v)| v.re < tol) {
            return Err(Error::NotAccretive {
                value: to_f64(v.re),
                location: format!("mode {}", basis.modes()[k].label),
            });
        }
        let n = vals.len();
        return Ok(CMat::from_fn(n, n, |i, j| {
            if i == j {
                vals[i]
            } else {
                C::zero()
            }
        }));
    }
    let vals = sample_impedance(basis, z)?;
    if let Some((q, v)) = vals.iter().enumerate().find(|(_, v)| v.re < tol) {
        let node = &basis.surface().nodes()[q];
        return Err(Error::NotAccretive {
            value: to_f64(v.re),
            location: format!(
                "node {q} (component {}, chart ({}, {}))",
                node.component,
                to_f64(node.chart[0]),
                to_f64(node.chart[1])
            ),
        });
    }
    basis.multiplier_gram(&vals)
}

/// `T = S_γ Mul_z S_γ` in the pivot coordinates of the trace space.
#[derive(Clone, Debug)]
pub struct BoundaryOperator<T: Real + Serialize> {
    pub matrix: CMat<T>,
    pub description: String,
    pub weights: MOrderWeights<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OperatorVerdict<T: Real + Serialize> {
    pub accretive: bool,
    pub selfadjoint: bool,
    /// Smallest eigenvalue of the Hermitian part.
    pub accretivity_margin: T,
    /// `‖(T - T*)/2i‖`
    pub hermitian_defect: T,
}

pub fn boundary_operator<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    z: &ImpedanceSpec<T>,
) -> Result<BoundaryOperator<T>> {
    let g = mulz_matrix(basis, z)?;
    let weights = trace_weights(basis);
    let sg: Vec<T> = weights.s().iter().map(|&x| T::one() / x).collect();
    let n = g.nrows();
    let matrix = CMat::from_fn(n, n, |i, j| g[(i, j)] * (sg[i] * sg[j]));
    Ok(BoundaryOperator {
        matrix,
        description: z.describe(),
        weights,
    })
}

pub fn classify_operator<T: Real + Serialize>(op: &BoundaryOperator<T>) -> OperatorVerdict<T> {
    let tol = default_tol::<T>() * spectral_norm(&op.matrix).max(T::one());
    let margin = min_eigenvalue(&hermitian_part(&op.matrix));
    let defect = spectral_norm(&skew_form(&op.matrix));
    OperatorVerdict {
        accretive: margin >= -tol,
        selfadjoint: defect <= tol,
        accretivity_margin: margin,
        hermitian_defect: defect,
    }
}

/// `K_z = (T - I)(T + I)⁻¹`
pub fn cayley_kz<T: Real + Serialize>(op: &BoundaryOperator<T>) -> Result<ContractionOp<T>> {
    let n = op.matrix.nrows();
    let id = CMat::<T>::identity(n, n);
    let k = (&op.matrix + &id)
        .lu()
        .solve(&(&op.matrix - &id))
        .ok_or_else(|| Error::Singular("T + I".into()))?;
    ContractionOp::unweighted(k)
}

/// The condition `T0 h0 + T1 h1' = 0` with `T0 = (I + K) U_π` and
/// `T1 = (I - K) (U_π#)⁻¹`, where `h1 = i h1'` is the second boundary value.
#[derive(Clone, Debug)]
pub struct BoundaryCondition<T: Real + Serialize> {
    pub t0: CMat<T>,
    pub t1: CMat<T>,
    pub k: CMat<T>,
    pub weights: MOrderWeights<T>,
}

pub fn condition_from_contraction<T: Real + Serialize>(
    weights: &MOrderWeights<T>,
    k: &ContractionOp<T>,
) -> Result<BoundaryCondition<T>> {
    let n = weights.dim();
    let km = k.matrix();
    if km.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: km.nrows(),
        });
    }
    let id = CMat::<T>::identity(n, n);
    let s = weights.s();
    let upi = diag_c(s);
    let upi_sharp_inv = diag_c(&s.iter().map(|&x| T::one() / x).collect::<Vec<_>>());
    Ok(BoundaryCondition {
        t0: (&id + km) * upi,
        t1: (&id - km) * upi_sharp_inv,
        k: km.clone(),
        weights: weights.clone(),
    })
}

pub fn assemble_condition<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    k: &ContractionOp<T>,
) -> Result<BoundaryCondition<T>> {
    condition_from_contraction(&trace_weights(basis), k)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionVerdict<T: Real + Serialize> {
    pub m_dissipative: bool,
    pub selfadjoint: bool,
    /// `-sup Im ⟨h1|h0⟩` over unit elements of the relation.
    pub margin: T,
    pub rank: usize,
    pub dim: usize,
    /// `‖Cay(Θ_V) - K‖`
    pub contraction_recovery_error: T,
}

impl<T: Real + Serialize> BoundaryCondition<T> {
    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    /// `Θ = {(h0, h1)}` with `h1 = i h1'` and `T0 h0 + T1 h1' = 0`.
    pub fn relation(&self) -> LinearRelation<T> {
        let n = self.dim();
        let rows = hstack(&self.t0, &self.t1);
        let row_space = orthonormal_columns(&rows.adjoint(), re(1e-12));
        let null = if row_space.ncols() == 0 {
            CMat::identity(2 * n, 2 * n)
        } else {
            complement(&row_space)
        };
        let f0 = null.rows(0, n).into_owned();
        let f1 = null.rows(n, n).into_owned() * imag_unit::<T>();
        LinearRelation::from_pairs(PivotSpace::new(n), &f0, &f1).expect("square blocks")
    }

    /// `Θ_V = {(U_π h0, (U_π#)⁻¹ h1)}`.
    pub fn relation_v(&self) -> LinearRelation<T> {
        let s = self.weights.s();
        let a0 = diag_c(s);
        let a1 = diag_c(&s.iter().map(|&x| T::one() / x).collect::<Vec<_>>());
        let n = self.dim();
        self.relation()
            .map(PivotSpace::new(n), &a0, &a1)
            .expect("square maps")
    }

    pub fn classify(&self) -> Result<ConditionVerdict<T>> {
        let theta = self.relation();
        let v = classify_relation(&theta, 0);
        let kk = cayley(&self.relation_v())?;
        let err = max_abs(&(kk.matrix() - &self.k));
        Ok(ConditionVerdict {
            m_dissipative: v.maximal_dissipative,
            selfadjoint: v.selfadjoint,
            margin: v.margin,
            rank: v.rank,
            dim: v.dim,
            contraction_recovery_error: err,
        })
    }
}

pub fn classify_condition<T: Real + Serialize>(
    cond: &BoundaryCondition<T>,
) -> Result<ConditionVerdict<T>> {
    cond.classify()
}

/// Domain on which a nonnegative impedance operator is first defined.
#[derive(Clone, Debug)]
pub enum RestrictedDomain<T: Real> {
    Full,
    /// Eigenvectors of `T` with eigenvalue at least `τ ‖T‖`.
    Threshold(T),
    /// Span of the given columns (pivot coordinates).
    Span(CMat<T>),
}

pub const DEFAULT_DOMAIN_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct FkExtensions<T: Real + Serialize> {
    pub friedrichs: BoundaryCondition<T>,
    pub krein: BoundaryCondition<T>,
    pub psi_friedrichs: LinearRelation<T>,
    pub psi_krein: LinearRelation<T>,
    /// Sine of the largest principal angle between `Θ_F` and `Θ_K`.
    pub gap: T,
    /// `‖(Ψ_K + I)⁻¹ - (Ψ_F + I)⁻¹‖`
    pub resolvent_difference: T,
    pub domain_dim: usize,
    pub dim: usize,
}

pub fn fk_extensions<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    z: &ImpedanceSpec<T>,
    domain: &RestrictedDomain<T>,
) -> Result<FkExtensions<T>> {
    let op = boundary_operator(basis, z)?;
    fk_from_operator(&op, domain)
}

pub fn fk_from_operator<T: Real + Serialize>(
    op: &BoundaryOperator<T>,
    domain: &RestrictedDomain<T>,
) -> Result<FkExtensions<T>> {
    let t = &op.matrix;
    let n = t.nrows();
    let verdict = classify_operator(op);
    if !(verdict.selfadjoint && verdict.accretive) {
        return Err(Error::NotSymmetricNonnegative(format!(
            "impedance operator: hermitian defect {:e}, accretivity margin {:e}",
            to_f64(verdict.hermitian_defect),
            to_f64(verdict.accretivity_margin)
        )));
    }
    let d = match domain {
        RestrictedDomain::Full => CMat::identity(n, n),
        RestrictedDomain::Threshold(tau) => {
            let (vals, vecs) = hermitian_eigen(t);
            let cut = *tau * vals.last().map_or(T::zero(), |v| v.abs());
            let keep: Vec<usize> = (0..n).filter(|&j| vals[j] >= cut).collect();
            CMat::from_fn(n, keep.len(), |i, j| vecs[(i, keep[j])])
        }
        RestrictedDomain::Span(m) => m.clone(),
    };
    let space = PivotSpace::new(n);
    let psi = LinearRelation::graph_on(space, t, &d)?;
    let psi_f = friedrichs(&psi)?;
    let psi_k = krein(&psi)?;
    let minus_i = C::new(T::zero(), -T::one());
    let one = C::new(T::one(), T::zero());
    let kf = cayley(&psi_f.scale(one, minus_i))?.into_contraction()?;
    let kk = cayley(&psi_k.scale(one, minus_i))?.into_contraction()?;
    let cf = condition_from_contraction(&op.weights, &kf)?;
    let ck = condition_from_contraction(&op.weights, &kk)?;
    let gap = cf.relation().distance(&ck.relation());
    let rdiff = spectral_norm(&(resolvent_iso(&psi_k)? - resolvent_iso(&psi_f)?));
    Ok(FkExtensions {
        friedrichs: cf,
        krein: ck,
        psi_friedrichs: psi_f,
        psi_krein: psi_k,
        gap,
        resolvent_difference: rdiff,
        domain_dim: psi.domain_iso().ncols(),
        dim: n,
    })
}

/// Seeded Gaussian series on the first `truncation` scalar modes. Mode `k`
/// draws from its own ChaCha stream so coefficients do not depend on the
/// truncation.
pub fn sample_random_impedance<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    s: T,
    truncation: usize,
    seed: u64,
) -> Result<ImpedanceSpec<T>> {
    let modes = basis.surface().modes();
    if truncation > modes.len() {
        return Err(Error::InvalidParameter(format!(
            "random impedance truncation {truncation} exceeds {} scalar modes",
            modes.len()
        )));
    }
    let coeffs = modes[..truncation]
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let xi: T = gaussian(&mut rng);
            xi * m.lambda.powf(-s)
        })
        .collect();
    Ok(ImpedanceSpec::Random(RandomField {
        s,
        seed,
        truncation,
        coeffs,
    }))
}

/// Pointwise values of the untruncated-at-zero series `Σ ξ_k u_k`.
pub fn random_series_values<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    field: &RandomField<T>,
) -> Vec<T> {
    let surf = basis.surface();
    (0..surf.nodes().len())
        .map(|q| {
            surf.sample_modes(q)
                .iter()
                .zip(field.coeffs.iter())
                .fold(T::zero(), |acc, (m, c)| acc + *c * m.value)
        })
        .collect()
}

/// Block-diagonal Hodge-coordinate map induced by a change of harmonic frame.
pub fn harmonic_frame_map<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    frame: &nalgebra::DMatrix<T>,
) -> CMat<T> {
    let (ns, b1, _) = basis.blocks();
    let n = basis.len();
    let mut p = CMat::<T>::identity(n, n);
    for a in 0..b1 {
        for b in 0..b1 {
            p[(ns + a, ns + b)] = cre(frame[(a, b)]);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linrel::inverse_cayley;
    use crate::tracespace::{build_surface, hodge_basis, Family};

    fn sphere(lmax: usize) -> HodgeBasis<f64> {
        hodge_basis(&build_surface(SurfaceModel::Sphere, lmax, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn unit_impedance_gives_identity_galerkin_matrix() {
        let b = sphere(4);
        let g = mulz_matrix(&b, &ImpedanceSpec::constant(1.0)).unwrap();
        let n = b.len();
        assert!(max_abs(&(g - CMat::identity(n, n))) < 1e-12);
    }

    #[test]
    fn constant_impedance_closed_form() {
        let b = sphere(5);
        for alpha in [0.5, 1.0, 2.0] {
            let op = boundary_operator(&b, &ImpedanceSpec::constant(alpha)).unwrap();
            let k = cayley_kz(&op).unwrap();
            for (j, m) in b.modes().iter().enumerate() {
                let want = match m.family {
                    Family::Curl => (alpha - m.lambda) / (alpha + m.lambda),
                    Family::Gradient => (alpha * m.lambda - 1.0) / (alpha * m.lambda + 1.0),
                    Family::Harmonic => (alpha - 1.0) / (alpha + 1.0),
                };
                assert!((k.matrix()[(j, j)] - C::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cos_squared_weight_on_first_gradients() {
        // ∫ cos²θ |∇_S Y_1i|² / 2 reduces to moments of n_z² over the sphere.
        let b = sphere(3);
        let z = ImpedanceSpec::pointwise("cos^2", |n: &QuadNode<f64>| {
            C::new(n.normal[2] * n.normal[2], 0.0)
        });
        let g = mulz_matrix(&b, &z).unwrap();
        for (j, m) in b.modes().iter().enumerate() {
            let want = match m.label.as_str() {
                "grad Y(1,0)" | "curl Y(1,0)" => 0.2,
                "grad Y(1,1)" | "grad Y(1,-1)" | "curl Y(1,1)" | "curl Y(1,-1)" => 0.4,
                _ => continue,
            };
            assert!((g[(j, j)].re - want).abs() < 1e-12, "{}", m.label);
        }
    }

    #[test]
    fn negative_impedance_rejected() {
        let b = sphere(2);
        let r = mulz_matrix(&b, &ImpedanceSpec::constant(-0.1));
        assert!(matches!(r, Err(Error::NotAccretive { .. })));
    }

    #[test]
    fn condition_relation_is_impedance_graph() {
        let b = sphere(3);
        let alpha = 1.7;
        let op = boundary_operator(&b, &ImpedanceSpec::constant(alpha)).unwrap();
        let k = cayley_kz(&op).unwrap();
        let cond = assemble_condition(&b, &k).unwrap();
        let n = b.len();
        let want = LinearRelation::graph(
            PivotSpace::new(n),
            &(CMat::<f64>::identity(n, n) * C::new(0.0, -alpha)),
        )
        .unwrap();
        assert!(cond.relation().distance(&want) < 1e-12);
        let v = cond.classify().unwrap();
        assert!(v.m_dissipative);
        assert!(v.contraction_recovery_error < 1e-12);
    }

    #[test]
    fn anchor_contractions() {
        let b = sphere(2);
        let n = b.len();
        let w = trace_weights(&b);
        let ident = CMat::<f64>::identity(n, n);

        let cond =
            condition_from_contraction(&w, &ContractionOp::unweighted(ident.clone()).unwrap())
                .unwrap();
        let rel = cond.relation();
        assert!(rel.distance(&LinearRelation::pure_multivalued(PivotSpace::new(n))) < 1e-12);
        assert!(cond.classify().unwrap().selfadjoint);

        let cond =
            condition_from_contraction(&w, &ContractionOp::unweighted(-ident.clone()).unwrap())
                .unwrap();
        let zero = LinearRelation::graph(PivotSpace::new(n), &CMat::zeros(n, n)).unwrap();
        assert!(cond.relation().distance(&zero) < 1e-12);
    }

    #[test]
    fn inverse_cayley_of_kz_is_rotated_operator() {
        let b = sphere(2);
        let op = boundary_operator(&b, &ImpedanceSpec::constant(0.7)).unwrap();
        let k = cayley_kz(&op).unwrap();
        let xi = inverse_cayley(&k);
        let n = b.len();
        let want =
            LinearRelation::graph(PivotSpace::new(n), &(&op.matrix * C::new(0.0, -1.0))).unwrap();
        assert!(xi.distance(&want) < 1e-12);
    }

    #[test]
    fn full_domain_fk_coincide() {
        let b = sphere(2);
        let fk = fk_extensions(&b, &ImpedanceSpec::constant(1.3), &RestrictedDomain::Full).unwrap();
        assert!(fk.gap < 1e-12);
        assert!(fk.resolvent_difference < 1e-12);
    }

    #[test]
    fn random_impedance_has_zero_mean_series() {
        let b = sphere(4);
        let z = sample_random_impedance(&b, 1.2, 15, 7).unwrap();
        let ImpedanceSpec::Random(r) = &z else {
            unreachable!()
        };
        let vals = random_series_values(&b, r);
        let mean: f64 = b
            .surface()
            .nodes()
            .iter()
            .zip(vals.iter())
            .map(|(n, v)| n.weight * v)
            .sum();
        assert!(mean.abs() < 1e-12);
        let again = sample_random_impedance(&b, 1.2, 24, 7).unwrap();
        let ImpedanceSpec::Random(r2) = &again else {
            unreachable!()
        };
        assert_eq!(&r2.coeffs[..15], &r.coeffs[..]);
        assert!(sample_impedance(&b, &z)
            .unwrap()
            .iter()
            .all(|v| v.re >= 0.0));
    }
}

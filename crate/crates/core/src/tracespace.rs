//! Spectral tangential trace spaces on closed surfaces.
//!
//! Tangential fields are expanded in the Hodge basis
//! `{∇u_k/λ_k} ∪ {harmonic} ∪ {-n × ∇u_k/λ_k}`, where `u_k` are
//! `L²`-normalised eigenfunctions of the Laplace-Beltrami operator with
//! eigenvalue `λ_k²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::morder::MOrderWeights;
use crate::scalar::{from_usize, re, to_f64, CMat, CVec, Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceModel {
    Sphere,
    FlatTorus,
    TwoSpheres,
    TwoTori,
}

impl SurfaceModel {
    pub fn components(self) -> usize {
        match self {
            SurfaceModel::Sphere | SurfaceModel::FlatTorus => 1,
            SurfaceModel::TwoSpheres | SurfaceModel::TwoTori => 2,
        }
    }

    pub fn is_toroidal(self) -> bool {
        matches!(self, SurfaceModel::FlatTorus | SurfaceModel::TwoTori)
    }
}

impl fmt::Display for SurfaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceModel::Sphere => "sphere",
            SurfaceModel::FlatTorus => "flat_torus",
            SurfaceModel::TwoSpheres => "two_spheres",
            SurfaceModel::TwoTori => "two_tori",
        })
    }
}

impl FromStr for SurfaceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(SurfaceModel::Sphere),
            "torus" | "flat_torus" => Ok(SurfaceModel::FlatTorus),
            "two_spheres" => Ok(SurfaceModel::TwoSpheres),
            "two_tori" => Ok(SurfaceModel::TwoTori),
            other => Err(Error::InvalidParameter(format!(
                "unknown surface model `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModeShape {
    /// Real spherical harmonic; `m < 0` selects the sine branch.
    Harmonic { l: usize, m: i64 },
    /// `cos(m x + n y)` or `sin(m x + n y)`, normalised.
    Fourier { m: i64, n: i64, sine: bool },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarMode<T: Real + Serialize> {
    pub lambda: T,
    pub component: usize,
    pub label: String,
    pub shape: ModeShape,
}

#[derive(Clone, Debug)]
pub struct QuadNode<T: Real> {
    pub component: usize,
    /// `(θ, φ)` on spheres, `(x, y)` on tori.
    pub chart: [T; 2],
    pub position: [T; 3],
    pub normal: [T; 3],
    pub weight: T,
}

#[derive(Clone, Debug)]
pub struct SpectralSurface<T: Real + Serialize> {
    model: SurfaceModel,
    truncation: usize,
    quad_factor: f64,
    modes: Vec<ScalarMode<T>>,
    nodes: Vec<QuadNode<T>>,
    /// Columns give the harmonic fields in terms of the reference frame.
    harmonic_frame: DMatrix<T>,
}

pub const DEFAULT_QUAD_FACTOR: f64 = 3.0;

fn scaled_count(qf: f64, base: usize) -> usize {
    ((qf * base as f64).ceil() as usize).max(1)
}

/// Builds a truncated spectral surface. `truncation` is `lmax` on spheres
/// and `kmax` on tori.
pub fn build_surface<T: Real + Serialize>(
    model: SurfaceModel,
    truncation: usize,
    quad_factor: f64,
) -> Result<SpectralSurface<T>> {
    if truncation == 0 {
        return Err(Error::InvalidParameter(
            "truncation must be at least 1".into(),
        ));
    }
    if !(quad_factor > 0.0) || !quad_factor.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quadrature factor must be positive, got {quad_factor}"
        )));
    }
    let comps = model.components();
    let mut modes = Vec::new();
    let mut nodes = Vec::new();
    for c in 0..comps {
        if model.is_toroidal() {
            modes.extend(torus_modes::<T>(truncation, c));
            nodes.extend(torus_nodes::<T>(truncation, quad_factor, c));
        } else {
            modes.extend(sphere_modes::<T>(truncation, c));
            nodes.extend(sphere_nodes::<T>(truncation, quad_factor, c));
        }
    }
    modes.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.component.cmp(&b.component))
            .then(a.label.cmp(&b.label))
    });
    let b1 = if model.is_toroidal() { 2 * comps } else { 0 };
    Ok(SpectralSurface {
        model,
        truncation,
        quad_factor,
        modes,
        nodes,
        harmonic_frame: DMatrix::identity(b1, b1),
    })
}

fn sphere_modes<T: Real + Serialize>(lmax: usize, component: usize) -> Vec<ScalarMode<T>> {
    let mut v = Vec::new();
    for l in 1..=lmax {
        let lam = from_usize::<T>(l * (l + 1)).sqrt();
        for m in -(l as i64)..=(l as i64) {
            v.push(ScalarMode {
                lambda: lam,
                component,
                label: format!("Y({l},{m})"),
                shape: ModeShape::Harmonic { l, m },
            });
        }
    }
    v
}

fn torus_modes<T: Real + Serialize>(kmax: usize, component: usize) -> Vec<ScalarMode<T>> {
    let k = kmax as i64;
    let mut v = Vec::new();
    for m in 0..=k {
        for n in -k..=k {
            if m * m + n * n > k * k || (m == 0 && n <= 0) {
                continue;
            }
            let lam = re::<T>(((m * m + n * n) as f64).sqrt());
            for sine in [false, true] {
                let tag = if sine { "sin" } else { "cos" };
                v.push(ScalarMode {
                    lambda: lam,
                    component,
                    label: format!("{tag}({m},{n})"),
                    shape: ModeShape::Fourier { m, n, sine },
                });
            }
        }
    }
    v
}

fn sphere_center<T: Real>(component: usize) -> [T; 3] {
    [re(3.0 * component as f64), T::zero(), T::zero()]
}

fn sphere_nodes<T: Real>(lmax: usize, qf: f64, component: usize) -> Vec<QuadNode<T>> {
    let nt = scaled_count(qf, lmax + 1);
    let np = 2 * nt + 1;
    let (xs, ws) = gauss_legendre::<T>(nt);
    let two_pi = T::two_pi();
    let dphi = two_pi / from_usize::<T>(np);
    let c = sphere_center::<T>(component);
    let mut out = Vec::with_capacity(nt * np);
    for (x, w) in xs.iter().zip(ws.iter()) {
        let theta = x.acos();
        let st = (T::one() - *x * *x).sqrt();
        for j in 0..np {
            let phi = dphi * from_usize::<T>(j);
            let nrm = [st * phi.cos(), st * phi.sin(), *x];
            out.push(QuadNode {
                component,
                chart: [theta, phi],
                position: [c[0] + nrm[0], c[1] + nrm[1], c[2] + nrm[2]],
                normal: nrm,
                weight: *w * dphi,
            });
        }
    }
    out
}

fn torus_nodes<T: Real>(kmax: usize, qf: f64, component: usize) -> Vec<QuadNode<T>> {
    let n = scaled_count(qf, 2 * kmax + 2);
    let h = T::two_pi() / from_usize::<T>(n);
    let z = re::<T>(3.0 * component as f64);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = h * from_usize::<T>(i);
            let y = h * from_usize::<T>(j);
            out.push(QuadNode {
                component,
                chart: [x, y],
                position: [x, y, z],
                normal: [T::zero(), T::zero(), T::one()],
                weight: h * h,
            });
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes descending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        xs.push(re(x));
        ws.push(re(2.0 / ((1.0 - x * x) * dp * dp)));
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fully normalised associated Legendre functions `P̄_l^m(cos θ)` and their
/// `θ`-derivatives for `0 ≤ m ≤ l ≤ lmax`, without the Condon-Shortley phase.
fn normalized_legendre<T: Real>(lmax: usize, theta: T) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let x = theta.cos();
    let s = theta.sin();
    let mut p = vec![vec![T::zero(); lmax + 1]; lmax + 1];
    let mut dp = vec![vec![T::zero(); lmax + 1]; lmax + 1];
    p[0][0] = T::one() / (re::<T>(4.0) * T::pi()).sqrt();
    for m in 1..=lmax {
        let mf = from_usize::<T>(m);
        p[m][m] =
            ((re::<T>(2.0) * mf + T::one()) / (re::<T>(2.0) * mf)).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..lmax {
        let mf = from_usize::<T>(m);
        p[m + 1][m] = (re::<T>(2.0) * mf + re(3.0)).sqrt() * x * p[m][m];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let lf = from_usize::<T>(l);
            let mf = from_usize::<T>(m);
            let l1 = lf - T::one();
            let a = ((re::<T>(4.0) * lf * lf - T::one()) / (lf * lf - mf * mf)).sqrt();
            let b = ((l1 * l1 - mf * mf) / (re::<T>(4.0) * l1 * l1 - T::one())).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    for l in 0..=lmax {
        for m in 0..=l {
            let lf = from_usize::<T>(l);
            let mf = from_usize::<T>(m);
            let prev = if l >= 1 && l - 1 >= m {
                p[l - 1][m]
            } else {
                T::zero()
            };
            let c = if l >= 1 {
                ((lf * lf - mf * mf) * (re::<T>(2.0) * lf + T::one())
                    / (re::<T>(2.0) * lf - T::one()))
                .sqrt()
            } else {
                T::zero()
            };
            dp[l][m] = (lf * x * p[l][m] - c * prev) / s;
        }
    }
    (p, dp)
}

/// Value and tangential gradient (in `ℝ³`) of a scalar mode at a node.
#[derive(Clone, Copy, Debug)]
pub struct ModeSample<T> {
    pub value: T,
    pub gradient: [T; 3],
}

impl<T: Real + Serialize> SpectralSurface<T> {
    pub fn model(&self) -> SurfaceModel {
        self.model
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn quad_factor(&self) -> f64 {
        self.quad_factor
    }

    pub fn modes(&self) -> &[ScalarMode<T>] {
        &self.modes
    }

    pub fn nodes(&self) -> &[QuadNode<T>] {
        &self.nodes
    }

    pub fn b0(&self) -> usize {
        self.model.components()
    }

    pub fn b1(&self) -> usize {
        self.harmonic_frame.ncols()
    }

    pub fn harmonic_frame(&self) -> &DMatrix<T> {
        &self.harmonic_frame
    }

    /// Replaces the harmonic frame by `frame` (orthogonal `b1 × b1`);
    /// the new harmonic field `j` is `Σ_k frame[k, j] h_k`.
    pub fn with_harmonic_frame(mut self, frame: DMatrix<T>) -> Result<Self> {
        let b1 = self.b1();
        if frame.nrows() != b1 || frame.ncols() != b1 {
            return Err(Error::DimensionMismatch {
                expected: b1,
                found: frame.nrows(),
            });
        }
        let defect = (frame.transpose() * &frame - DMatrix::<T>::identity(b1, b1)).amax();
        if defect > re(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "harmonic frame is not orthogonal (defect {:e})",
                to_f64(defect)
            )));
        }
        self.harmonic_frame = frame;
        Ok(self)
    }

    /// Samples every scalar mode at node `q`; modes on other components vanish.
    pub fn sample_modes(&self, q: usize) -> Vec<ModeSample<T>> {
        let node = &self.nodes[q];
        let zero = ModeSample {
            value: T::zero(),
            gradient: [T::zero(); 3],
        };
        if self.model.is_toroidal() {
            let [x, y] = node.chart;
            let scale = T::one() / (T::pi() * T::SQRT_2());
            self.modes
                .iter()
                .map(|md| {
                    if md.component != node.component {
                        return zero;
                    }
                    let ModeShape::Fourier { m, n, sine } = md.shape else {
                        unreachable!()
                    };
                    let mf = re::<T>(m as f64);
                    let nf = re::<T>(n as f64);
                    let arg = mf * x + nf * y;
                    let (v, d) = if sine {
                        (arg.sin(), arg.cos())
                    } else {
                        (arg.cos(), -arg.sin())
                    };
                    ModeSample {
                        value: v * scale,
                        gradient: [d * mf * scale, d * nf * scale, T::zero()],
                    }
                })
                .collect()
        } else {
            let [theta, phi] = node.chart;
            let (p, dp) = normalized_legendre(self.truncation, theta);
            let st = theta.sin();
            let ct = theta.cos();
            let e_t = [ct * phi.cos(), ct * phi.sin(), -st];
            let e_p = [-phi.sin(), phi.cos(), T::zero()];
            let r2 = T::SQRT_2();
            self.modes
                .iter()
                .map(|md| {
                    if md.component != node.component {
                        return zero;
                    }
                    let ModeShape::Harmonic { l, m } = md.shape else {
                        unreachable!()
                    };
                    let am = m.unsigned_abs() as usize;
                    let mf = re::<T>(am as f64);
                    let (v, dth, dph) = if m == 0 {
                        (p[l][0], dp[l][0], T::zero())
                    } else {
                        let (c, s) = ((mf * phi).cos(), (mf * phi).sin());
                        if m > 0 {
                            (
                                r2 * p[l][am] * c,
                                r2 * dp[l][am] * c,
                                -r2 * mf * p[l][am] * s,
                            )
                        } else {
                            (
                                r2 * p[l][am] * s,
                                r2 * dp[l][am] * s,
                                r2 * mf * p[l][am] * c,
                            )
                        }
                    };
                    let g = dph / st;
                    ModeSample {
                        value: v,
                        gradient: [
                            dth * e_t[0] + g * e_p[0],
                            dth * e_t[1] + g * e_p[1],
                            dth * e_t[2] + g * e_p[2],
                        ],
                    }
                })
                .collect()
        }
    }

    /// Reference-frame harmonic fields at node `q` (before frame rotation).
    fn reference_harmonics(&self, q: usize) -> Vec<[T; 3]> {
        let node = &self.nodes[q];
        let b1 = self.b1();
        let mut out = vec![[T::zero(); 3]; b1];
        if self.model.is_toroidal() {
            let a = T::one() / T::two_pi();
            out[2 * node.component] = [a, T::zero(), T::zero()];
            out[2 * node.component + 1] = [T::zero(), a, T::zero()];
        }
        out
    }

    /// Harmonic fields (in the current frame) at node `q`.
    pub fn harmonic_fields(&self, q: usize) -> Vec<[T; 3]> {
        let r = self.reference_harmonics(q);
        let b1 = self.b1();
        (0..b1)
            .map(|j| {
                let mut v = [T::zero(); 3];
                for (k, rk) in r.iter().enumerate() {
                    for d in 0..3 {
                        v[d] += self.harmonic_frame[(k, j)] * rk[d];
                    }
                }
                v
            })
            .collect()
    }

    /// Surface area of each component computed by quadrature.
    pub fn component_areas(&self) -> Vec<T> {
        let mut a = vec![T::zero(); self.b0()];
        for n in &self.nodes {
            a[n.component] += n.weight;
        }
        a
    }
}

pub fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gradient,
    Harmonic,
    Curl,
}

#[derive(Clone, Debug, Serialize)]
pub struct HodgeMode<T: Real + Serialize> {
    pub family: Family,
    pub lambda: T,
    pub component: usize,
    pub label: String,
}

/// Orthonormal Hodge basis of tangential `L²` fields, tabulated at the
/// quadrature nodes.
#[derive(Clone, Debug)]
pub struct HodgeBasis<T: Real + Serialize> {
    surface: SpectralSurface<T>,
    modes: Vec<HodgeMode<T>>,
    /// Row `3 q + d` holds component `d` at node `q`.
    fields: DMatrix<T>,
    weights: DVector<T>,
    gram_residual: T,
    harmonic_ncross: DMatrix<T>,
}

pub const DEFAULT_GRAM_TOLERANCE: f64 = 1e-9;

pub fn hodge_basis<T: Real + Serialize>(surface: &SpectralSurface<T>) -> Result<HodgeBasis<T>> {
    hodge_basis_with_tolerance(surface, re(DEFAULT_GRAM_TOLERANCE))
}

pub fn hodge_basis_with_tolerance<T: Real + Serialize>(
    surface: &SpectralSurface<T>,
    tolerance: T,
) -> Result<HodgeBasis<T>> {
    let ns = surface.modes.len();
    let b1 = surface.b1();
    let nm = 2 * ns + b1;
    let nq = surface.nodes.len();
    let mut fields = DMatrix::<T>::zeros(3 * nq, nm);
    let mut hfields = DMatrix::<T>::zeros(3 * nq, b1);
    let mut nfields = DMatrix::<T>::zeros(3 * nq, b1);
    for q in 0..nq {
        let nrm = surface.nodes[q].normal;
        let samples = surface.sample_modes(q);
        for (k, smp) in samples.iter().enumerate() {
            let lam = surface.modes[k].lambda;
            let g = [
                smp.gradient[0] / lam,
                smp.gradient[1] / lam,
                smp.gradient[2] / lam,
            ];
            let c = cross(nrm, g);
            for d in 0..3 {
                fields[(3 * q + d, k)] = g[d];
                fields[(3 * q + d, ns + b1 + k)] = -c[d];
            }
        }
        for (j, h) in surface.harmonic_fields(q).into_iter().enumerate() {
            let nh = cross(nrm, h);
            for d in 0..3 {
                fields[(3 * q + d, ns + j)] = h[d];
                hfields[(3 * q + d, j)] = h[d];
                nfields[(3 * q + d, j)] = nh[d];
            }
        }
    }
    let weights = DVector::from_fn(3 * nq, |r, _| surface.nodes[r / 3].weight);
    let gram = weighted_gram(&fields, &weights, &fields);
    let gram_residual = (gram - DMatrix::<T>::identity(nm, nm)).amax();
    if !(gram_residual <= tolerance) {
        return Err(Error::QuadratureUnderResolved {
            residual: to_f64(gram_residual),
            tolerance: to_f64(tolerance),
        });
    }
    let harmonic_ncross = weighted_gram(&hfields, &weights, &nfields);
    let mut modes = Vec::with_capacity(nm);
    for m in &surface.modes {
        modes.push(HodgeMode {
            family: Family::Gradient,
            lambda: m.lambda,
            component: m.component,
            label: format!("grad {}", m.label),
        });
    }
    for j in 0..b1 {
        modes.push(HodgeMode {
            family: Family::Harmonic,
            lambda: T::zero(),
            component: if surface.model.is_toroidal() {
                j / 2
            } else {
                0
            },
            label: format!("harmonic {j}"),
        });
    }
    for m in &surface.modes {
        modes.push(HodgeMode {
            family: Family::Curl,
            lambda: m.lambda,
            component: m.component,
            label: format!("curl {}", m.label),
        });
    }
    Ok(HodgeBasis {
        surface: surface.clone(),
        modes,
        fields,
        weights,
        gram_residual,
        harmonic_ncross,
    })
}

/// `Aᵀ diag(w) B`
fn weighted_gram<T: Real>(a: &DMatrix<T>, w: &DVector<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut wb = b.clone();
    for (r, mut row) in wb.row_iter_mut().enumerate() {
        row *= w[r];
    }
    a.transpose() * wb
}

/// Tangential field given by complex coefficients in a Hodge basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentialField<T: Real> {
    pub coeffs: CVec<T>,
}

impl<T: Real> TangentialField<T> {
    pub fn new(coeffs: CVec<T>) -> Self {
        Self { coeffs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UpiDirection {
    /// `U_π : H_{-,+} → H`
    Forward,
    /// `U_π⁻¹ : H → H_{-,+}`
    Inverse,
    /// `U_π# : H → H_{+,-}`
    SharpForward,
    /// `(U_π#)⁻¹ : H_{+,-} → H`
    SharpInverse,
}

/// Dual Riesz bases `w_j^π = s_j⁻¹ v_j` and `w_j^γ = s_j v_j`.
#[derive(Clone, Debug)]
pub struct RieszBases<T: Real> {
    pub pi_scale: Vec<T>,
    pub gamma_scale: Vec<T>,
}

impl<T: Real + Serialize> HodgeBasis<T> {
    pub fn surface(&self) -> &SpectralSurface<T> {
        &self.surface
    }

    pub fn modes(&self) -> &[HodgeMode<T>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn gram_residual(&self) -> T {
        self.gram_residual
    }

    /// `(gradient, harmonic, curl)` block sizes.
    pub fn blocks(&self) -> (usize, usize, usize) {
        let ns = self.surface.modes.len();
        (ns, self.surface.b1(), ns)
    }

    /// Real field table, row `3 q + d`, one column per basis mode.
    pub fn fields(&self) -> &DMatrix<T> {
        &self.fields
    }

    /// Quadrature weight per table row.
    pub fn row_weights(&self) -> &DVector<T> {
        &self.weights
    }

    pub fn gram(&self) -> DMatrix<T> {
        weighted_gram(&self.fields, &self.weights, &self.fields)
    }

    /// Galerkin matrix `∫ z v_b · v_a` for a pointwise multiplier sampled at
    /// the nodes.
    pub fn multiplier_gram(&self, z: &[C<T>]) -> Result<CMat<T>> {
        let nq = self.surface.nodes.len();
        if z.len() != nq {
            return Err(Error::DimensionMismatch {
                expected: nq,
                found: z.len(),
            });
        }
        let wr = DVector::from_fn(3 * nq, |r, _| self.weights[r] * z[r / 3].re);
        let wi = DVector::from_fn(3 * nq, |r, _| self.weights[r] * z[r / 3].im);
        let gr = weighted_gram(&self.fields, &wr, &self.fields);
        let gi = weighted_gram(&self.fields, &wi, &self.fields);
        Ok(CMat::from_fn(gr.nrows(), gr.ncols(), |i, j| {
            C::new(gr[(i, j)], gi[(i, j)])
        }))
    }

    /// Values of a field at the nodes.
    pub fn evaluate(&self, field: &TangentialField<T>) -> Vec<[C<T>; 3]> {
        let nq = self.surface.nodes.len();
        (0..nq)
            .map(|q| {
                let mut v = [C::zero(); 3];
                for (j, c) in field.coeffs.iter().enumerate() {
                    for (d, vd) in v.iter_mut().enumerate() {
                        *vd += *c * self.fields[(3 * q + d, j)];
                    }
                }
                v
            })
            .collect()
    }

    /// Orders of the trace norms: `λ^{1/2}` on curl modes, `λ^{-1/2}` on
    /// gradient modes, `1` on harmonic modes.
    pub fn trace_weight_vector(&self) -> Vec<T> {
        self.modes
            .iter()
            .map(|m| match m.family {
                Family::Gradient => T::one() / m.lambda.sqrt(),
                Family::Harmonic => T::one(),
                Family::Curl => m.lambda.sqrt(),
            })
            .collect()
    }
}

pub fn trace_weights<T: Real + Serialize>(basis: &HodgeBasis<T>) -> MOrderWeights<T> {
    MOrderWeights::new(basis.trace_weight_vector()).expect("positive trace weights")
}

pub fn riesz_bases<T: Real + Serialize>(basis: &HodgeBasis<T>) -> RieszBases<T> {
    let s = basis.trace_weight_vector();
    RieszBases {
        pi_scale: s.iter().map(|&x| T::one() / x).collect(),
        gamma_scale: s,
    }
}

impl<T: Real + Serialize> RieszBases<T> {
    /// `⟨w_j^π | w_k^γ⟩` from coefficient vectors and the pivot pairing.
    pub fn cross_gram_coefficients(&self) -> DMatrix<T> {
        let n = self.pi_scale.len();
        DMatrix::from_fn(n, n, |j, k| {
            if j == k {
                self.pi_scale[j] * self.gamma_scale[k]
            } else {
                T::zero()
            }
        })
    }

    /// `∫ w_j^π · w_k^γ` by surface quadrature of the tabulated fields.
    pub fn cross_gram_quadrature(&self, basis: &HodgeBasis<T>) -> DMatrix<T> {
        let g = basis.gram();
        DMatrix::from_fn(g.nrows(), g.ncols(), |j, k| {
            g[(j, k)] * self.pi_scale[j] * self.gamma_scale[k]
        })
    }
}

pub fn s_gamma<T: Real + Serialize>(basis: &HodgeBasis<T>) -> Vec<T> {
    basis
        .trace_weight_vector()
        .iter()
        .map(|&x| T::one() / x)
        .collect()
}

pub fn apply_upi<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    field: &TangentialField<T>,
    direction: UpiDirection,
) -> TangentialField<T> {
    let s = basis.trace_weight_vector();
    let coeffs = DVector::from_fn(field.coeffs.len(), |k, _| {
        let c = field.coeffs[k];
        match direction {
            UpiDirection::Forward | UpiDirection::SharpForward => c * s[k],
            UpiDirection::Inverse | UpiDirection::SharpInverse => c / s[k],
        }
    });
    TangentialField { coeffs }
}

/// `x ↦ n(x) × v(x)` in Hodge coordinates.
pub fn n_cross<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    field: &TangentialField<T>,
) -> TangentialField<T> {
    let (ns, b1, _) = basis.blocks();
    let c = &field.coeffs;
    let mut out = DVector::from_element(c.len(), C::zero());
    for k in 0..ns {
        out[ns + b1 + k] -= c[k];
        out[k] += c[ns + b1 + k];
    }
    for a in 0..b1 {
        for b in 0..b1 {
            out[ns + a] += c[ns + b] * basis.harmonic_ncross[(a, b)];
        }
    }
    TangentialField { coeffs: out }
}

/// Hodge Laplacian on tangential fields (`λ²` on exact and coexact modes).
pub fn laplace_de_rham<T: Real + Serialize>(
    basis: &HodgeBasis<T>,
    field: &TangentialField<T>,
) -> TangentialField<T> {
    let coeffs = DVector::from_fn(field.coeffs.len(), |k, _| {
        let l = basis.modes[k].lambda;
        field.coeffs[k] * (l * l)
    });
    TangentialField { coeffs }
}

/// Summary used by reports.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceInfo {
    pub model: SurfaceModel,
    pub truncation: usize,
    pub quad_factor: f64,
    pub scalar_modes: usize,
    pub tangential_modes: usize,
    pub quadrature_nodes: usize,
    pub b0: usize,
    pub b1: usize,
    pub gram_residual: f64,
}

pub fn surface_info<T: Real + Serialize>(basis: &HodgeBasis<T>) -> SurfaceInfo {
    let s = basis.surface();
    SurfaceInfo {
        model: s.model(),
        truncation: s.truncation(),
        quad_factor: s.quad_factor(),
        scalar_modes: s.modes().len(),
        tangential_modes: basis.len(),
        quadrature_nodes: s.nodes().len(),
        b0: s.b0(),
        b1: s.b1(),
        gram_residual: to_f64(basis.gram_residual()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(lmax: usize) -> HodgeBasis<f64> {
        hodge_basis(&build_surface(SurfaceModel::Sphere, lmax, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(6);
        for k in 0..12 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            assert!((q - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn mode_counts() {
        let s = build_surface::<f64>(SurfaceModel::Sphere, 8, 3.0).unwrap();
        assert_eq!(s.modes().len(), 80);
        let t = build_surface::<f64>(SurfaceModel::FlatTorus, 1, 3.0).unwrap();
        assert_eq!(t.modes().len(), 4);
        let t = build_surface::<f64>(SurfaceModel::FlatTorus, 4, 3.0).unwrap();
        assert_eq!(t.modes().len(), 48);
        assert_eq!(hodge_basis(&t).unwrap().len(), 98);
        let two = build_surface::<f64>(SurfaceModel::TwoSpheres, 2, 3.0).unwrap();
        assert_eq!(two.b0(), 2);
        assert_eq!(two.b1(), 0);
        let two = build_surface::<f64>(SurfaceModel::TwoTori, 2, 3.0).unwrap();
        assert_eq!(two.b1(), 4);
    }

    #[test]
    fn zero_truncation_rejected() {
        assert!(build_surface::<f64>(SurfaceModel::Sphere, 0, 3.0).is_err());
    }

    #[test]
    fn sphere_area_and_first_harmonic() {
        let s = build_surface::<f64>(SurfaceModel::Sphere, 3, 3.0).unwrap();
        assert!((s.component_areas()[0] - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let c = (3.0 / (4.0 * std::f64::consts::PI)).sqrt();
        let idx = s
            .modes()
            .iter()
            .position(|m| m.shape == ModeShape::Harmonic { l: 1, m: 0 })
            .unwrap();
        for q in [0, 7, 40] {
            let z = s.nodes()[q].normal[2];
            assert!((s.sample_modes(q)[idx].value - c * z).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_energy_of_harmonics() {
        let s = build_surface::<f64>(SurfaceModel::Sphere, 5, 3.0).unwrap();
        let mut e = vec![0.0; s.modes().len()];
        for q in 0..s.nodes().len() {
            let w = s.nodes()[q].weight;
            for (k, smp) in s.sample_modes(q).iter().enumerate() {
                e[k] += w * smp.gradient.iter().map(|g| g * g).sum::<f64>();
            }
        }
        for (k, m) in s.modes().iter().enumerate() {
            let ModeShape::Harmonic { l, .. } = m.shape else {
                unreachable!()
            };
            assert!((e[k] - (l * (l + 1)) as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let s = build_surface::<f64>(SurfaceModel::Sphere, 4, 2.0).unwrap();
        let (p, dp) = normalized_legendre::<f64>(4, 0.7);
        let h = 1e-6;
        let (pp, _) = normalized_legendre::<f64>(4, 0.7 + h);
        let (pm, _) = normalized_legendre::<f64>(4, 0.7 - h);
        for l in 0..=4 {
            for m in 0..=l {
                let fd = (pp[l][m] - pm[l][m]) / (2.0 * h);
                assert!((fd - dp[l][m]).abs() < 1e-8, "{l} {m} {}", p[l][m]);
            }
        }
        assert!(s.nodes().len() > 0);
    }

    #[test]
    fn hodge_gram_is_identity() {
        let b = sphere(4);
        assert!(b.gram_residual() < 1e-12);
        let t =
            hodge_basis(&build_surface::<f64>(SurfaceModel::FlatTorus, 3, 3.0).unwrap()).unwrap();
        assert!(t.gram_residual() < 1e-12);
    }

    #[test]
    fn under_resolved_quadrature_is_reported() {
        let s = build_surface::<f64>(SurfaceModel::Sphere, 6, 0.5).unwrap();
        let r = hodge_basis(&s);
        assert!(matches!(r, Err(Error::QuadratureUnderResolved { .. })));
    }

    #[test]
    fn n_cross_squares_to_minus_identity() {
        for b in [
            sphere(3),
            hodge_basis(&build_surface::<f64>(SurfaceModel::TwoTori, 2, 3.0).unwrap()).unwrap(),
        ] {
            let n = b.len();
            let f = TangentialField::new(DVector::from_fn(n, |k, _| C::new(k as f64, 1.0)));
            let g = n_cross(&b, &n_cross(&b, &f));
            assert!((g.coeffs + f.coeffs).norm() < 1e-12);
        }
    }

    #[test]
    fn n_cross_agrees_with_pointwise_cross_product() {
        let b =
            hodge_basis(&build_surface::<f64>(SurfaceModel::FlatTorus, 2, 3.0).unwrap()).unwrap();
        let n = b.len();
        let f = TangentialField::new(DVector::from_fn(n, |k, _| {
            C::new(1.0 / (k as f64 + 1.0), 0.5)
        }));
        let g = n_cross(&b, &f);
        let vf = b.evaluate(&f);
        let vg = b.evaluate(&g);
        for q in 0..vf.len() {
            let nrm = b.surface().nodes()[q].normal;
            let re_ = cross(nrm, [vf[q][0].re, vf[q][1].re, vf[q][2].re]);
            let im_ = cross(nrm, [vf[q][0].im, vf[q][1].im, vf[q][2].im]);
            for d in 0..3 {
                assert!((vg[q][d] - C::new(re_[d], im_[d])).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn riesz_bases_are_biorthogonal() {
        let b = sphere(4);
        let r = riesz_bases(&b);
        let n = b.len();
        let dev = (r.cross_gram_quadrature(&b) - DMatrix::<f64>::identity(n, n)).amax();
        assert!(dev < 1e-11);
    }
}

//! One-dimensional Maxwell system on `[0, 1]`:
//! `M ψ = (H'/ε, -E'/μ)` with `Γ₀ψ = (H(0), H(1))`, `Γ₁ψ = (E(0), -E(1))`,
//! boundary conditions `(K + I)Γ₀ψ + i(K - I)Γ₁ψ = 0` for a contraction `K`,
//! a summation-by-parts discretisation with penalty closure, and
//! Crank-Nicolson evolution of `ψ_t = -i M ψ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, max_abs, skew_form, spectral_norm};
use crate::linrel::ContractionOp;
use crate::scalar::{cabs, cexp, cre, from_usize, imag_unit, re, to_f64, CMat, CVec, Real, C};
use crate::tracespace::gauss_legendre;

/// Positive piecewise-constant coefficient on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile<T: Real + Serialize> {
    breaks: Vec<T>,
    values: Vec<T>,
}

impl<T: Real + Serialize> Profile<T> {
    pub fn constant(v: T) -> Result<Self> {
        Self::piecewise(Vec::new(), vec![v])
    }

    /// `values[k]` on `(breaks[k-1], breaks[k])`.
    pub fn piecewise(breaks: Vec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: breaks.len() + 1,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::InvalidParameter(
                "coefficients must be positive".into(),
            ));
        }
        let mut prev = T::zero();
        for b in &breaks {
            if !(*b > prev && *b < T::one()) {
                return Err(Error::InvalidParameter(
                    "breakpoints must increase strictly inside (0, 1)".into(),
                ));
            }
            prev = *b;
        }
        Ok(Self { breaks, values })
    }

    pub fn is_constant(&self) -> bool {
        self.breaks.is_empty()
    }

    /// Value at `x`; the mean of both sides at a breakpoint.
    pub fn at(&self, x: T) -> T {
        for (k, b) in self.breaks.iter().enumerate() {
            if x == *b {
                return (self.values[k] + self.values[k + 1]) / re(2.0);
            }
            if x < *b {
                return self.values[k];
            }
        }
        *self.values.last().expect("nonempty")
    }

    fn edges(&self) -> Vec<T> {
        let mut e = vec![T::zero()];
        e.extend(self.breaks.iter().copied());
        e.push(T::one());
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Maxwell1D<T: Real + Serialize> {
    pub eps: Profile<T>,
    pub mu: Profile<T>,
}

impl<T: Real + Serialize> Maxwell1D<T> {
    pub fn constant(eps: T, mu: T) -> Result<Self> {
        Ok(Self {
            eps: Profile::constant(eps)?,
            mu: Profile::constant(mu)?,
        })
    }

    pub fn vacuum() -> Self {
        Self::constant(T::one(), T::one()).expect("positive")
    }

    /// `W = diag(-i, i)`
    pub fn rotation(&self) -> CMat<T> {
        let mut w = CMat::zeros(2, 2);
        w[(0, 0)] = C::new(T::zero(), -T::one());
        w[(1, 1)] = C::new(T::zero(), T::one());
        w
    }

    /// Subintervals on which both coefficients are constant.
    fn pieces(&self) -> Vec<(T, T)> {
        let mut e = self.eps.edges();
        e.extend(self.mu.edges());
        e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        e.dedup();
        e.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Boundary condition at both endpoints.
#[derive(Clone, Debug)]
pub enum BoundarySpec<T: Real> {
    Contraction(ContractionOp<T>),
    /// `E(0) = -i z0 H(0)`, `E(1) = i z1 H(1)`.
    Impedance {
        z0: C<T>,
        z1: C<T>,
    },
}

impl<T: Real> BoundarySpec<T> {
    pub fn contraction(k: CMat<T>) -> Result<Self> {
        Ok(BoundarySpec::Contraction(ContractionOp::unweighted(k)?))
    }

    pub fn impedance(z0: T, z1: T) -> Self {
        BoundarySpec::Impedance {
            z0: cre(z0),
            z1: cre(z1),
        }
    }

    /// `K = (Z - I)(Z + I)⁻¹` for the impedance form.
    pub fn k_matrix(&self) -> Result<CMat<T>> {
        match self {
            BoundarySpec::Contraction(k) => Ok(k.matrix().clone()),
            BoundarySpec::Impedance { z0, z1 } => {
                check_impedance(*z0, *z1)?;
                let one = C::new(T::one(), T::zero());
                let mut k = CMat::zeros(2, 2);
                k[(0, 0)] = (*z0 - one) / (*z0 + one);
                k[(1, 1)] = (*z1 - one) / (*z1 + one);
                Ok(k)
            }
        }
    }
}

fn check_impedance<T: Real>(z0: C<T>, z1: C<T>) -> Result<()> {
    for (name, z) in [("z0", z0), ("z1", z1)] {
        if !(z.re >= T::zero()) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NotAccretive {
                value: to_f64(z.re),
                location: name.into(),
            });
        }
    }
    Ok(())
}

/// Sparse row storage used for repeated products.
#[derive(Clone, Debug)]
struct SparseRows<T: Real> {
    rows: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> SparseRows<T> {
    fn from_dense(m: &CMat<T>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != C::zero())
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        for (i, row) in self.rows.iter().enumerate() {
            y[i] = row.iter().fold(C::zero(), |acc, (j, v)| acc + *v * x[*j]);
        }
    }
}

/// Discretised generator `M_h` on `n` intervals; unknowns are ordered
/// `(E_0..E_n, H_0..H_n)`.
#[derive(Clone, Debug)]
pub struct DiscreteGenerator<T: Real + Serialize> {
    pub model: Maxwell1D<T>,
    pub n: usize,
    pub sbp: Sbp,
    pub nodes: Vec<T>,
    /// Diagonal of the discrete `ε, μ`-weighted norm.
    pub weights: Vec<T>,
    pub matrix: CMat<T>,
    pub k: CMat<T>,
    /// Rows of `Γ₀` and `Γ₁` as functionals on the grid vector.
    pub gamma0: CMat<T>,
    pub gamma1: CMat<T>,
    /// `R ψ = 0` is the discrete boundary condition.
    pub residual: CMat<T>,
    /// Penalty test functionals: `M_h = M₀ + W⁻¹ Y* R`.
    pub penalty: CMat<T>,
    sparse: SparseRows<T>,
}

pub const MIN_GRID: usize = 16;

/// Summation-by-parts first-derivative operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sbp {
    /// Central interior stencil, one-sided first-order closure.
    Second,
    /// Fourth-order interior stencil, second-order closure.
    #[default]
    Fourth,
}

impl std::str::FromStr for Sbp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" | "second" => Ok(Sbp::Second),
            "4" | "fourth" => Ok(Sbp::Fourth),
            other => Err(Error::InvalidParameter(format!(
                "unknown SBP operator `{other}` (2, 4)"
            ))),
        }
    }
}

/// Returns `D` and the diagonal norm `H`, with
/// `H D + (H D)ᵀ = diag(-1, 0, ..., 0, 1)`.
fn sbp_derivative<T: Real>(n: usize, sbp: Sbp) -> (DMatrix<T>, Vec<T>) {
    match sbp {
        Sbp::Second => sbp_second(n),
        Sbp::Fourth => sbp_fourth(n),
    }
}

fn sbp_second<T: Real>(n: usize) -> (DMatrix<T>, Vec<T>) {
    let h = T::one() / from_usize::<T>(n);
    let half = re::<T>(0.5);
    let mut d = DMatrix::<T>::zeros(n + 1, n + 1);
    d[(0, 0)] = -T::one() / h;
    d[(0, 1)] = T::one() / h;
    d[(n, n - 1)] = -T::one() / h;
    d[(n, n)] = T::one() / h;
    for j in 1..n {
        d[(j, j - 1)] = -half / h;
        d[(j, j + 1)] = half / h;
    }
    let mut norm = vec![h; n + 1];
    norm[0] = h * half;
    norm[n] = h * half;
    (d, norm)
}

fn sbp_fourth<T: Real>(n: usize) -> (DMatrix<T>, Vec<T>) {
    let h = T::one() / from_usize::<T>(n);
    let q = |a: f64, b: f64| re::<T>(a / b);
    let closure: [[T; 6]; 4] = [
        [
            q(-24.0, 17.0),
            q(59.0, 34.0),
            q(-4.0, 17.0),
            q(-3.0, 34.0),
            T::zero(),
            T::zero(),
        ],
        [
            q(-1.0, 2.0),
            T::zero(),
            q(1.0, 2.0),
            T::zero(),
            T::zero(),
            T::zero(),
        ],
        [
            q(4.0, 43.0),
            q(-59.0, 86.0),
            T::zero(),
            q(59.0, 86.0),
            q(-4.0, 43.0),
            T::zero(),
        ],
        [
            q(3.0, 98.0),
            T::zero(),
            q(-59.0, 98.0),
            T::zero(),
            q(32.0, 49.0),
            q(-4.0, 49.0),
        ],
    ];
    let interior = [
        q(1.0, 12.0),
        q(-2.0, 3.0),
        T::zero(),
        q(2.0, 3.0),
        q(-1.0, 12.0),
    ];
    let mut d = DMatrix::<T>::zeros(n + 1, n + 1);
    for j in 4..=(n - 4) {
        for (o, c) in interior.iter().enumerate() {
            d[(j, j + o - 2)] = *c / h;
        }
    }
    for (r, row) in closure.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            d[(r, c)] = *v / h;
            d[(n - r, n - c)] = -*v / h;
        }
    }
    let mut norm = vec![h; n + 1];
    for (r, w) in [q(17.0, 48.0), q(59.0, 48.0), q(43.0, 48.0), q(49.0, 48.0)]
        .iter()
        .enumerate()
    {
        norm[r] = h * *w;
        norm[n - r] = h * *w;
    }
    (d, norm)
}

/// Generator without boundary penalty.
fn core_generator<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    n: usize,
    sbp: Sbp,
) -> (CMat<T>, Vec<T>, Vec<T>) {
    let (d, norm) = sbp_derivative::<T>(n, sbp);
    let nodes: Vec<T> = (0..=n)
        .map(|j| from_usize::<T>(j) / from_usize::<T>(n))
        .collect();
    let eps: Vec<T> = nodes.iter().map(|&x| model.eps.at(x)).collect();
    let mu: Vec<T> = nodes.iter().map(|&x| model.mu.at(x)).collect();
    let dim = 2 * (n + 1);
    let mut m = CMat::<T>::zeros(dim, dim);
    for j in 0..=n {
        for l in 0..=n {
            let v = d[(j, l)];
            if v != T::zero() {
                m[(j, n + 1 + l)] = cre(v / eps[j]);
                m[(n + 1 + j, l)] = cre(-v / mu[j]);
            }
        }
    }
    let mut weights = Vec::with_capacity(dim);
    weights.extend((0..=n).map(|j| norm[j] * eps[j]));
    weights.extend((0..=n).map(|j| norm[j] * mu[j]));
    (m, weights, nodes)
}

fn trace_rows<T: Real>(n: usize) -> (CMat<T>, CMat<T>) {
    let dim = 2 * (n + 1);
    let one = C::new(T::one(), T::zero());
    let mut g0 = CMat::zeros(2, dim);
    let mut g1 = CMat::zeros(2, dim);
    g0[(0, n + 1)] = one;
    g0[(1, 2 * n + 1)] = one;
    g1[(0, 0)] = one;
    g1[(1, n)] = -one;
    (g0, g1)
}

pub fn build_generator<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    bc: &BoundarySpec<T>,
    n: usize,
) -> Result<DiscreteGenerator<T>> {
    build_generator_with(model, bc, n, Sbp::default())
}

pub fn build_generator_with<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    bc: &BoundarySpec<T>,
    n: usize,
    sbp: Sbp,
) -> Result<DiscreteGenerator<T>> {
    if n < MIN_GRID {
        return Err(Error::InvalidParameter(format!(
            "grid size {n} below minimum {MIN_GRID}"
        )));
    }
    let k = bc.k_matrix()?;
    let (m0, weights, nodes) = core_generator(model, n, sbp);
    let (g0, g1) = trace_rows::<T>(n);
    let i = imag_unit::<T>();
    let (residual, penalty) = match bc {
        BoundarySpec::Contraction(_) => {
            let p = &g1 + &g0 * i;
            let q = &g1 - &g0 * i;
            let r = &p - &k * &q;
            let y = (&p + &k * &q) * C::new(T::zero(), re(0.25));
            (r, y)
        }
        BoundarySpec::Impedance { z0, z1 } => {
            let z = [*z0, *z1];
            let one = C::new(T::one(), T::zero());
            let mut r = g1.clone();
            let mut y = CMat::zeros(2, g0.ncols());
            for a in 0..2 {
                let scale = T::one() / (z[a] + one).norm_sqr();
                for c in 0..g0.ncols() {
                    r[(a, c)] += i * z[a] * g0[(a, c)];
                    y[(a, c)] = i * (z[a] * g1[(a, c)] + i * g0[(a, c)]) * scale;
                }
            }
            (r, y)
        }
    };
    let dim = m0.nrows();
    let sat = penalty.adjoint() * &residual;
    let mut matrix = m0;
    for a in 0..dim {
        for b in 0..dim {
            let v = sat[(a, b)];
            if v != C::zero() {
                matrix[(a, b)] += v / weights[a];
            }
        }
    }
    let sparse = SparseRows::from_dense(&matrix);
    Ok(DiscreteGenerator {
        model: model.clone(),
        n,
        sbp,
        nodes,
        weights,
        matrix,
        k,
        gamma0: g0,
        gamma1: g1,
        residual,
        penalty,
        sparse,
    })
}

impl<T: Real + Serialize> DiscreteGenerator<T> {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, x: &[C<T>], y: &mut [C<T>]) {
        self.sparse.apply(x, y)
    }

    /// `⟨u|v⟩_h = Σ w u conj(v)`
    pub fn inner(&self, u: &[C<T>], v: &[C<T>]) -> C<T> {
        u.iter()
            .zip(v.iter())
            .zip(self.weights.iter())
            .fold(C::zero(), |acc, ((a, b), w)| acc + *a * b.conj() * *w)
    }

    pub fn energy(&self, u: &[C<T>]) -> T {
        self.inner(u, u).re
    }

    /// `W^{1/2} M_h W^{-1/2}`: the generator in coordinates where the
    /// discrete norm is Euclidean.
    pub fn isometric_matrix(&self) -> CMat<T> {
        let d = self.dim();
        CMat::from_fn(d, d, |a, b| {
            self.matrix[(a, b)] * (self.weights[a].sqrt() / self.weights[b].sqrt())
        })
    }

    /// Operator norm of `M_h` in the discrete weighted norm.
    pub fn operator_norm(&self) -> T {
        let d = self.dim();
        let sw: Vec<T> = self.weights.iter().map(|w| w.sqrt()).collect();
        let mut tmp = vec![C::zero(); d];
        let mut tmp2 = vec![C::zero(); d];
        let adj = SparseRows::from_dense(&self.matrix.adjoint());
        let sq = lanczos_max(
            d,
            |x, y| {
                for a in 0..d {
                    tmp[a] = x[a] / sw[a];
                }
                self.sparse.apply(&tmp, &mut tmp2);
                for a in 0..d {
                    tmp2[a] *= sw[a] * sw[a];
                }
                adj.apply(&tmp2, y);
                for a in 0..d {
                    y[a] /= sw[a];
                }
            },
            300,
            re(1e-14),
        );
        sq.sqrt()
    }

    /// `Im ⟨M_h ψ|ψ⟩_h` computed from the boundary values only.
    pub fn boundary_form(&self, psi: &[C<T>]) -> T {
        let v = DVector::from_column_slice(psi);
        let i = imag_unit::<T>();
        let p = (&self.gamma1 + &self.gamma0 * i) * &v;
        let q = (&self.gamma1 - &self.gamma0 * i) * &v;
        let kq = &self.k * &q;
        let _ = p;
        (kq.norm_squared() - q.norm_squared()) / re(4.0)
    }
}

/// Eigenvalues of `M_h`.
pub fn spectrum<T: Real + Serialize>(gen: &DiscreteGenerator<T>) -> Result<Vec<C<T>>> {
    T::general_eigenvalues(&gen.matrix)
}

/// Largest eigenvalue of a Hermitian operator given by its action, by
/// Lanczos iteration; stops once the Ritz residual `β_m |y_m|` falls below
/// `rtol` times the Ritz value.
pub fn lanczos_max<T: Real>(
    n: usize,
    mut apply: impl FnMut(&[C<T>], &mut [C<T>]),
    max_iter: usize,
    rtol: T,
) -> T {
    let mut v: Vec<C<T>> = (0..n)
        .map(|k| {
            let t = from_usize::<T>(k + 1);
            C::new(
                T::one() + (t * re(0.618_033_988_749_895)).sin() * re(0.5),
                (t * re(0.3)).cos() * re(0.25),
            )
        })
        .collect();
    let nv = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
    v.iter_mut().for_each(|z| *z /= nv);
    let mut v_prev = vec![C::zero(); n];
    let mut w = vec![C::zero(); n];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut theta = T::zero();
    let steps = max_iter.min(n).max(1);
    for it in 0..steps {
        apply(&v, &mut w);
        let a = v
            .iter()
            .zip(w.iter())
            .fold(C::zero(), |acc, (x, y)| acc + x.conj() * *y)
            .re;
        let b_prev = beta.last().copied().unwrap_or_else(T::zero);
        for k in 0..n {
            w[k] = w[k] - v[k] * a - v_prev[k] * b_prev;
        }
        alpha.push(a);
        let b = w.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        let (t, last) = tridiagonal_top(&alpha, &beta);
        theta = t;
        let done = b * last.abs() <= rtol * theta.abs() || it + 1 == steps;
        if done || b == T::zero() {
            break;
        }
        beta.push(b);
        for k in 0..n {
            v_prev[k] = v[k];
            v[k] = w[k] / b;
        }
    }
    theta
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `a`
/// and off-diagonal `b`, with the last component of its unit eigenvector.
fn tridiagonal_top<T: Real>(a: &[T], b: &[T]) -> (T, T) {
    let m = a.len();
    let t = DMatrix::<T>::from_fn(m, m, |i, j| {
        if i == j {
            a[i]
        } else if i == j + 1 {
            b[j]
        } else if j == i + 1 {
            b[i]
        } else {
            T::zero()
        }
    });
    let eig = SymmetricEigen::new(t);
    let (k, top) = eig.eigenvalues.iter().enumerate().fold(
        (0, T::min_value().unwrap_or_else(|| -T::one())),
        |(bk, bv), (k, v)| {
            if *v > bv {
                (k, *v)
            } else {
                (bk, bv)
            }
        },
    );
    (top, eig.eigenvectors[(m - 1, k)])
}

/// Sample points `λ` in the open upper half-plane: real parts uniformly in
/// `[-20, 20]` on each of the imaginary levels `{0.1, 0.5, 2, 10}`.
pub fn default_lambda_grid<T: Real>(samples: usize) -> Vec<C<T>> {
    let levels = [0.1, 0.5, 2.0, 10.0];
    let per = samples.div_ceil(levels.len()).max(1);
    let mut out = Vec::with_capacity(samples);
    'outer: for lv in levels {
        for k in 0..per {
            if out.len() == samples {
                break 'outer;
            }
            let x = if per == 1 {
                0.0
            } else {
                -20.0 + 40.0 * k as f64 / (per - 1) as f64
            };
            out.push(C::new(re(x), re(lv)));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventReport<T: Real + Serialize> {
    pub samples: usize,
    /// `max (Im λ) ‖(M_h - λ)⁻¹‖` over the samples.
    pub max_scaled_resolvent: T,
    pub worst_lambda: [T; 2],
    /// `sup Im ⟨M_h ψ|ψ⟩_h / ‖ψ‖²_h`, which bounds every eigenvector's
    /// Rayleigh quotient.
    pub numerical_range_max_im: T,
}

/// Resolvent norms for many boundary conditions on one grid. The
/// isometric generator is `A = H + E_P C E_Pᵀ`, with `H` Hermitian and
/// independent of the boundary condition and `C` supported on the four
/// boundary unknowns, so `(A - λ)⁻¹` is diagonal plus rank four in the
/// eigenbasis of `H`.
#[derive(Clone, Debug)]
pub struct ResolventProbe<T: Real + Serialize> {
    model: Maxwell1D<T>,
    n: usize,
    sbp: Sbp,
    reference: DMatrix<T>,
    lambda: Vec<T>,
    /// Rows of the eigenvector matrix at the boundary unknowns (`4 × dim`).
    boundary_rows: DMatrix<T>,
    boundary_idx: [usize; 4],
}

impl<T: Real + Serialize> ResolventProbe<T> {
    pub fn new(model: &Maxwell1D<T>, n: usize) -> Result<Self> {
        Self::new_with(model, n, Sbp::default())
    }

    pub fn new_with(model: &Maxwell1D<T>, n: usize, sbp: Sbp) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::InvalidParameter(format!(
                "grid size {n} below minimum {MIN_GRID}"
            )));
        }
        let (m0, w, _) = core_generator(model, n, sbp);
        let d = m0.nrows();
        let a = DMatrix::<T>::from_fn(d, d, |i, j| m0[(i, j)].re * (w[i].sqrt() / w[j].sqrt()));
        let reference = (&a + a.transpose()) * re::<T>(0.5);
        let eig = SymmetricEigen::new(reference.clone());
        let idx = [0, n, n + 1, 2 * n + 1];
        let boundary_rows = DMatrix::from_fn(4, d, |r, j| eig.eigenvectors[(idx[r], j)]);
        Ok(Self {
            model: model.clone(),
            n,
            sbp,
            reference,
            lambda: eig.eigenvalues.iter().copied().collect(),
            boundary_rows,
            boundary_idx: idx,
        })
    }

    /// `C = A - H` restricted to the boundary unknowns.
    fn boundary_block(&self, gen: &DiscreteGenerator<T>) -> Result<CMat<T>> {
        if gen.n != self.n || gen.sbp != self.sbp || gen.model != self.model {
            return Err(Error::InvalidParameter(
                "generator does not match the probe grid".into(),
            ));
        }
        let a = gen.isometric_matrix();
        let d = a.nrows();
        let idx = self.boundary_idx;
        let on_boundary = |i: usize| idx.contains(&i);
        let mut stray = T::zero();
        for i in 0..d {
            for j in 0..d {
                if !(on_boundary(i) && on_boundary(j)) {
                    stray = stray.max(cabs(a[(i, j)] - cre(self.reference[(i, j)])));
                }
            }
        }
        let scale = max_abs(&a);
        if stray > re::<T>(1e-13) * scale {
            return Err(Error::Numerical(format!(
                "boundary coupling leaks into the interior ({:e})",
                to_f64(stray)
            )));
        }
        Ok(CMat::from_fn(4, 4, |r, c| {
            a[(idx[r], idx[c])] - cre(self.reference[(idx[r], idx[c])])
        }))
    }

    pub fn report(
        &self,
        gen: &DiscreteGenerator<T>,
        lambdas: &[C<T>],
    ) -> Result<ResolventReport<T>> {
        if let Some(l) = lambdas.iter().find(|l| !(l.im > T::zero())) {
            return Err(Error::InvalidParameter(format!(
                "resolvent sample {}{:+}i is not in the upper half-plane",
                to_f64(l.re),
                to_f64(l.im)
            )));
        }
        let c = self.boundary_block(gen)?;
        let num_range = hermitian_eigenvalues(&skew_form(&c))
            .last()
            .copied()
            .unwrap_or_else(T::zero);
        let mut best = T::zero();
        let mut worst = [T::zero(), T::zero()];
        for l in lambdas {
            let v = self.scaled_resolvent_norm(&c, *l)?;
            if v > best {
                best = v;
                worst = [l.re, l.im];
            }
        }
        Ok(ResolventReport {
            samples: lambdas.len(),
            max_scaled_resolvent: best,
            worst_lambda: worst,
            numerical_range_max_im: num_range,
        })
    }

    /// `(Im λ) ‖(A - λ)⁻¹‖` for boundary block `c`.
    fn scaled_resolvent_norm(&self, c: &CMat<T>, l: C<T>) -> Result<T> {
        let d = self.lambda.len();
        let dinv: Vec<C<T>> = self
            .lambda
            .iter()
            .map(|&x| C::new(T::one(), T::zero()) / (cre(x) - l))
            .collect();
        let u = &self.boundary_rows;
        let mut s4 = CMat::<T>::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = C::zero();
                for j in 0..d {
                    acc += dinv[j] * (u[(a, j)] * u[(b, j)]);
                }
                s4[(a, b)] = acc;
            }
        }
        let inner = CMat::<T>::identity(4, 4) + &s4 * c;
        let x = c * inner.lu().try_inverse().ok_or_else(|| {
            Error::Singular(format!(
                "λ = {}{:+}i is an eigenvalue",
                to_f64(l.re),
                to_f64(l.im)
            ))
        })?;
        let xa = x.adjoint();
        let mut t1 = vec![C::zero(); d];
        let apply_r = |x4: &CMat<T>, conj: bool, v: &[C<T>], out: &mut [C<T>], t1: &mut [C<T>]| {
            for j in 0..d {
                t1[j] = if conj {
                    v[j] * dinv[j].conj()
                } else {
                    v[j] * dinv[j]
                };
            }
            let mut y = [C::zero(); 4];
            for (a, ya) in y.iter_mut().enumerate() {
                *ya = (0..d).fold(C::zero(), |acc, j| acc + t1[j] * u[(a, j)]);
            }
            let mut z = [C::zero(); 4];
            for a in 0..4 {
                z[a] = (0..4).fold(C::zero(), |acc, b| acc + x4[(a, b)] * y[b]);
            }
            for j in 0..d {
                let corr = (0..4).fold(C::<T>::zero(), |acc, a| acc + z[a] * u[(a, j)]);
                let dj = if conj { dinv[j].conj() } else { dinv[j] };
                out[j] = t1[j] - corr * dj;
            }
        };
        let mut mid = vec![C::zero(); d];
        let sq = lanczos_max(
            d,
            |v, out| {
                apply_r(&x, false, v, &mut mid, &mut t1);
                apply_r(&xa, true, &mid, out, &mut t1);
            },
            200,
            re(1e-13),
        );
        Ok(l.im * sq.sqrt())
    }
}

pub fn numerical_range_and_resolvent<T: Real + Serialize>(
    gen: &DiscreteGenerator<T>,
    lambdas: &[C<T>],
) -> Result<ResolventReport<T>> {
    ResolventProbe::new_with(&gen.model, gen.n, gen.sbp)?.report(gen, lambdas)
}

/// Dense `(Im λ) ‖(M_h - λ)⁻¹‖` in the weighted norm, for small grids.
pub fn scaled_resolvent_dense<T: Real + Serialize>(
    gen: &DiscreteGenerator<T>,
    l: C<T>,
) -> Result<T> {
    let a = gen.isometric_matrix();
    let d = a.nrows();
    let shifted = a - CMat::<T>::identity(d, d) * l;
    let inv = shifted
        .try_inverse()
        .ok_or_else(|| Error::Singular("M_h - λ".into()))?;
    Ok(l.im * spectral_norm(&inv))
}

/// Band LU factorisation with partial pivoting (dense storage, band-limited
/// loops).
#[derive(Clone, Debug)]
struct BandLu<T: Real> {
    n: usize,
    upper: usize,
    lower: usize,
    a: Vec<C<T>>,
    piv: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    fn new(m: &CMat<T>) -> Result<Self> {
        let n = m.nrows();
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != C::zero() {
                    if i > j {
                        lower = lower.max(i - j);
                    } else {
                        upper = upper.max(j - i);
                    }
                }
            }
        }
        let mut a: Vec<C<T>> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        let mut piv = vec![0; n];
        let ub = upper + lower;
        for k in 0..n {
            let last = (k + lower).min(n - 1);
            let mut p = k;
            let mut best = a[k * n + k].norm_sqr();
            for i in (k + 1)..=last {
                let v = a[i * n + k].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            piv[k] = p;
            let jend = (k + ub).min(n - 1);
            if p != k {
                for j in k..=jend {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..=last {
                let l = a[i * n + k] / pivot;
                if l == C::zero() {
                    continue;
                }
                a[i * n + k] = l;
                for j in (k + 1)..=jend {
                    let v = a[k * n + j];
                    a[i * n + j] -= l * v;
                }
            }
        }
        Ok(Self {
            n,
            upper: ub,
            lower,
            a,
            piv,
        })
    }

    fn solve(&self, b: &mut [C<T>]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in (k + 1)..=(k + self.lower).min(n - 1) {
                b[i] -= self.a[i * n + k] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in (k + 1)..=(k + self.upper).min(n - 1) {
                s -= self.a[k * n + j] * b[j];
            }
            b[k] = s / self.a[k * n + k];
        }
    }
}

/// Node order `0, n, 1, n-1, ...` with `(E_j, H_j)` adjacent, so that the
/// generator (including the coupling of both endpoints) is banded.
fn folded_order(n: usize) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(n + 1);
    let (mut lo, mut hi) = (0usize, n);
    while lo <= hi {
        nodes.push(lo);
        if hi != lo {
            nodes.push(hi);
        }
        lo += 1;
        if hi == 0 {
            break;
        }
        hi -= 1;
    }
    let mut perm = Vec::with_capacity(2 * (n + 1));
    for j in nodes {
        perm.push(j);
        perm.push(n + 1 + j);
    }
    perm
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepRecord<T: Real + Serialize> {
    pub step: usize,
    pub t: T,
    pub energy: T,
    /// `d/dt ‖ψ‖²_h = 2 Im ⟨M_h ψ|ψ⟩_h` at this step.
    pub boundary_flux: T,
}

#[derive(Clone, Debug)]
pub struct EvolutionTrace<T: Real + Serialize> {
    pub records: Vec<StepRecord<T>>,
    pub final_state: CVec<T>,
}

impl<T: Real + Serialize> EvolutionTrace<T> {
    /// Largest relative one-step energy increase.
    pub fn max_energy_increase(&self) -> T {
        self.records
            .windows(2)
            .map(|w| {
                if w[0].energy > T::zero() {
                    (w[1].energy - w[0].energy) / w[0].energy
                } else {
                    w[1].energy
                }
            })
            .fold(T::min_value().unwrap_or_else(|| -T::one()), |a, b| a.max(b))
    }

    pub fn max_relative_drift(&self) -> T {
        let e0 = self.records[0].energy;
        self.records
            .iter()
            .map(|r| ((r.energy - e0) / e0).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,t,energy,boundary_flux\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:.6e},{:.16e},{:.16e}\n",
                r.step,
                to_f64(r.t),
                to_f64(r.energy),
                to_f64(r.boundary_flux)
            ));
        }
        s
    }
}

/// Crank-Nicolson: `(I + i dt/2 M_h) ψ⁺ = (I - i dt/2 M_h) ψ`.
pub fn evolve_cn<T: Real + Serialize>(
    gen: &DiscreteGenerator<T>,
    psi0: &CVec<T>,
    dt: T,
    steps: usize,
) -> Result<EvolutionTrace<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    let d = gen.dim();
    if psi0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi0.len(),
        });
    }
    let perm = folded_order(gen.n);
    let half = C::new(T::zero(), dt / re(2.0));
    let lhs = CMat::from_fn(d, d, |a, b| {
        let v = gen.matrix[(perm[a], perm[b])] * half;
        if a == b {
            v + C::new(T::one(), T::zero())
        } else {
            v
        }
    });
    let lu = BandLu::new(&lhs)?;
    let mut psi: Vec<C<T>> = psi0.iter().copied().collect();
    let mut mpsi = vec![C::zero(); d];
    let mut rhs = vec![C::zero(); d];
    let mut records = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        gen.apply(&psi, &mut mpsi);
        let energy = gen.energy(&psi);
        let flux = re::<T>(2.0) * gen.inner(&mpsi, &psi).im;
        records.push(StepRecord {
            step,
            t: dt * from_usize::<T>(step),
            energy,
            boundary_flux: flux,
        });
        if step == steps {
            break;
        }
        for a in 0..d {
            let nat = perm[a];
            rhs[a] = psi[nat] - mpsi[nat] * half;
        }
        lu.solve(&mut rhs);
        if rhs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("non-finite state in time stepping".into()));
        }
        for a in 0..d {
            psi[perm[a]] = rhs[a];
        }
    }
    Ok(EvolutionTrace {
        records,
        final_state: DVector::from_vec(psi),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseDirection {
    Standing,
    Right,
    Left,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PulseSpec<T: Real + Serialize> {
    pub x0: T,
    pub width: T,
    pub direction: PulseDirection,
}

/// `E = exp(-((x - x0)/w)²)`, with `H = 0` or the matching travelling-wave
/// partner `H = ∓ i √(ε/μ) E`.
pub fn gaussian_pulse<T: Real + Serialize>(
    gen: &DiscreteGenerator<T>,
    pulse: &PulseSpec<T>,
) -> Result<CVec<T>> {
    if !(pulse.width > T::zero()) {
        return Err(Error::InvalidParameter(
            "pulse width must be positive".into(),
        ));
    }
    let n = gen.n;
    let mut v = DVector::from_element(gen.dim(), C::zero());
    for (j, &x) in gen.nodes.iter().enumerate() {
        let a = (x - pulse.x0) / pulse.width;
        let e = (-(a * a)).exp();
        let y = (gen.model.eps.at(x) / gen.model.mu.at(x)).sqrt();
        v[j] = cre(e);
        v[n + 1 + j] = match pulse.direction {
            PulseDirection::Standing => C::zero(),
            PulseDirection::Right => C::new(T::zero(), -y * e),
            PulseDirection::Left => C::new(T::zero(), y * e),
        };
    }
    Ok(v)
}

/// Characteristic function of the continuum problem for constant `ε, μ`:
/// `det((K + I) G₀(λ) + i (K - I) G₁(λ))`, where `G₀`, `G₁` are the boundary
/// values of the plane waves `E = e^{±iκx}`, `H = ∓ i Y e^{±iκx}`,
/// `κ = λ √(εμ)`, `Y = √(ε/μ)`.
pub fn characteristic_function<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    k: &CMat<T>,
    lambda: C<T>,
) -> Result<C<T>> {
    if !(model.eps.is_constant() && model.mu.is_constant()) {
        return Err(Error::InvalidParameter(
            "characteristic equation needs constant coefficients".into(),
        ));
    }
    let eps = model.eps.at(T::zero());
    let mu = model.mu.at(T::zero());
    let kappa = lambda * (eps * mu).sqrt();
    let y = (eps / mu).sqrt();
    let i = imag_unit::<T>();
    let ea = cexp(i * kappa);
    let eb = cexp(-i * kappa);
    let one = C::new(T::one(), T::zero());
    let mut g0 = CMat::<T>::zeros(2, 2);
    let mut g1 = CMat::<T>::zeros(2, 2);
    g0[(0, 0)] = -i * y;
    g0[(0, 1)] = i * y;
    g0[(1, 0)] = -i * y * ea;
    g0[(1, 1)] = i * y * eb;
    g1[(0, 0)] = one;
    g1[(0, 1)] = one;
    g1[(1, 0)] = -ea;
    g1[(1, 1)] = -eb;
    let id = CMat::<T>::identity(2, 2);
    let m = (k + &id) * g0 + (k - &id) * g1 * i;
    Ok(m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)])
}

/// Net change of `arg f` along the positively oriented boundary of
/// `[re0, re1] × [im0, im1]`, divided by `2π`.
fn winding_number<T: Real>(f: &impl Fn(C<T>) -> C<T>, corners: [C<T>; 4]) -> Result<i64> {
    let mut total = 0.0f64;
    for s in 0..4 {
        let a = corners[s];
        let b = corners[(s + 1) % 4];
        total += arg_change(f, a, b, 0)?;
    }
    Ok((total / std::f64::consts::TAU).round() as i64)
}

fn arg_change<T: Real>(f: &impl Fn(C<T>) -> C<T>, a: C<T>, b: C<T>, depth: usize) -> Result<f64> {
    let pieces = 64;
    let mut acc = 0.0;
    let mut prev = f(a);
    for k in 1..=pieces {
        let t = re::<T>(k as f64 / pieces as f64);
        let z = a + (b - a) * t;
        let cur = f(z);
        let d = phase_diff(prev, cur);
        if d.abs() > 0.4 {
            if depth > 24 {
                return Err(Error::Numerical(
                    "argument principle did not resolve".into(),
                ));
            }
            let z0 = a + (b - a) * re::<T>((k - 1) as f64 / pieces as f64);
            acc += arg_change(f, z0, z, depth + 1)?;
        } else {
            acc += d;
        }
        prev = cur;
    }
    Ok(acc)
}

fn phase_diff<T: Real>(a: C<T>, b: C<T>) -> f64 {
    let r = b / a;
    to_f64(r.im).atan2(to_f64(r.re))
}

/// Roots of the characteristic function inside the rectangle
/// `[re0, re1] × [im0, im1]`, counted by the argument principle and located
/// by Newton iteration from a grid of starting points.
pub fn characteristic_roots<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    k: &CMat<T>,
    re_range: (T, T),
    im_range: (T, T),
) -> Result<Vec<C<T>>> {
    let f = |l: C<T>| characteristic_function(model, k, l).expect("constant model");
    characteristic_function(model, k, C::zero())?;
    let corners = [
        C::new(re_range.0, im_range.0),
        C::new(re_range.1, im_range.0),
        C::new(re_range.1, im_range.1),
        C::new(re_range.0, im_range.1),
    ];
    let count = winding_number(&f, corners)?;
    if count < 0 {
        return Err(Error::Numerical("negative root count".into()));
    }
    let count = count as usize;
    let mut roots: Vec<C<T>> = Vec::new();
    let inside = |z: C<T>| {
        z.re >= re_range.0 && z.re <= re_range.1 && z.im >= im_range.0 && z.im <= im_range.1
    };
    let mut density = 8usize;
    while roots.len() < count && density <= 512 {
        let nx = ((to_f64(re_range.1 - re_range.0)) * density as f64 / std::f64::consts::PI).ceil()
            as usize
            + 1;
        let ny = ((to_f64(im_range.1 - im_range.0)) * density as f64 / std::f64::consts::PI).ceil()
            as usize
            + 1;
        for ix in 0..=nx {
            for iy in 0..=ny {
                let z0 = C::new(
                    re_range.0 + (re_range.1 - re_range.0) * re::<T>(ix as f64 / nx as f64),
                    im_range.0 + (im_range.1 - im_range.0) * re::<T>(iy as f64 / ny.max(1) as f64),
                );
                if let Some(z) = newton(&f, z0) {
                    if inside(z) && !roots.iter().any(|r| cabs(*r - z) < re(1e-7)) {
                        roots.push(z);
                    }
                }
            }
        }
        density *= 2;
    }
    if roots.len() != count {
        return Err(Error::Numerical(format!(
            "found {} roots, argument principle counts {count}",
            roots.len()
        )));
    }
    roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(roots)
}

fn newton<T: Real>(f: &impl Fn(C<T>) -> C<T>, mut z: C<T>) -> Option<C<T>> {
    let h = re::<T>(1e-6);
    for _ in 0..60 {
        let fz = f(z);
        let df = (f(z + cre(h)) - f(z - cre(h))) / cre(h * re(2.0));
        if cabs(df) == T::zero() {
            return None;
        }
        let step = fz / df;
        z -= step;
        if cabs(step) < re::<T>(1e-14) * (T::one() + cabs(z)) {
            return Some(z);
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
    }
    (cabs(f(z)) < re(1e-10)).then_some(z)
}

/// For each target, the distance to the nearest eigenvalue.
pub fn nearest_errors<T: Real>(eigs: &[C<T>], targets: &[C<T>]) -> Vec<T> {
    targets
        .iter()
        .map(|t| {
            eigs.iter()
                .map(|e| cabs(*e - *t))
                .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
        })
        .collect()
}

type ScalarFn<T> = Arc<dyn Fn(T) -> C<T> + Send + Sync>;

/// Smooth field `(E, H)` together with its derivative.
#[derive(Clone)]
pub struct SmoothField<T: Real> {
    pub e: ScalarFn<T>,
    pub de: ScalarFn<T>,
    pub h: ScalarFn<T>,
    pub dh: ScalarFn<T>,
}

impl<T: Real> SmoothField<T> {
    pub fn new(
        e: impl Fn(T) -> C<T> + Send + Sync + 'static,
        de: impl Fn(T) -> C<T> + Send + Sync + 'static,
        h: impl Fn(T) -> C<T> + Send + Sync + 'static,
        dh: impl Fn(T) -> C<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            e: Arc::new(e),
            de: Arc::new(de),
            h: Arc::new(h),
            dh: Arc::new(dh),
        }
    }

    pub fn gamma0(&self) -> [C<T>; 2] {
        [(self.h)(T::zero()), (self.h)(T::one())]
    }

    pub fn gamma1(&self) -> [C<T>; 2] {
        [(self.e)(T::zero()), -(self.e)(T::one())]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenReport<T: Real + Serialize> {
    /// `(M*ψ|φ) - (ψ|M*φ)`
    pub lhs: [T; 2],
    /// `⟨Γ₁ψ|Γ₀φ⟩ - ⟨Γ₀ψ|Γ₁φ⟩`
    pub rhs: [T; 2],
    pub residual: T,
}

/// `(u|v)_{ε,μ} = ∫ ε u_E conj(v_E) + μ u_H conj(v_H)` of `M*ψ` against `φ`
/// and of `ψ` against `M*φ`, by Gauss-Legendre quadrature on each
/// coefficient piece.
pub fn green_identity<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    psi: &SmoothField<T>,
    phi: &SmoothField<T>,
) -> GreenReport<T> {
    let (xs, ws) = gauss_legendre::<T>(40);
    let mut lhs = C::zero();
    for (a, b) in model.pieces() {
        let mid = (a + b) / re(2.0);
        let half = (b - a) / re(2.0);
        let eps = model.eps.at(mid);
        let mu = model.mu.at(mid);
        for (x, w) in xs.iter().zip(ws.iter()) {
            let t = mid + half * *x;
            let wt = *w * half;
            let ms_e = (psi.dh)(t) / eps;
            let ms_h = -(psi.de)(t) / mu;
            let mf_e = (phi.dh)(t) / eps;
            let mf_h = -(phi.de)(t) / mu;
            let first = ms_e * (phi.e)(t).conj() * eps + ms_h * (phi.h)(t).conj() * mu;
            let second = (psi.e)(t) * mf_e.conj() * eps + (psi.h)(t) * mf_h.conj() * mu;
            lhs += (first - second) * wt;
        }
    }
    let g0p = psi.gamma0();
    let g1p = psi.gamma1();
    let g0f = phi.gamma0();
    let g1f = phi.gamma1();
    let mut rhs = C::zero();
    for a in 0..2 {
        rhs += g1p[a] * g0f[a].conj() - g0p[a] * g1f[a].conj();
    }
    GreenReport {
        lhs: [lhs.re, lhs.im],
        rhs: [rhs.re, rhs.im],
        residual: cabs(lhs - rhs),
    }
}

pub fn green_identity_residual<T: Real + Serialize>(
    model: &Maxwell1D<T>,
    psi: &SmoothField<T>,
    phi: &SmoothField<T>,
) -> T {
    green_identity(model, psi, phi).residual
}

/// Built-in smooth test pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenCase {
    /// `ψ = (sin πx, cos πx)`, `φ = (x, 1)`
    Trig1,
    /// `ψ = (e^{2πix}, cos 3x)`, `φ = (sin(πx/2) + i, x²)`
    Trig2,
    /// `ψ = (1 + x - x², 2x³)`, `φ = (x², 1 - x)`
    Poly1,
    /// Fields vanishing at both endpoints.
    Interior,
    /// `ψ = φ` satisfying `Γ₁ψ = -i Z Γ₀ψ` with `Z = diag(z0, z1)`.
    Leontovich { z0: f64, z1: f64 },
}

impl GreenCase {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "trig1" => Ok(GreenCase::Trig1),
            "trig2" => Ok(GreenCase::Trig2),
            "poly1" => Ok(GreenCase::Poly1),
            "interior" => Ok(GreenCase::Interior),
            "leontovich" => Ok(GreenCase::Leontovich { z0: 1.0, z1: 0.5 }),
            other => Err(Error::InvalidParameter(format!(
                "unknown Green identity case `{other}` (trig1, trig2, poly1, interior, leontovich)"
            ))),
        }
    }

    pub fn fields<T: Real>(self) -> (SmoothField<T>, SmoothField<T>) {
        let pi = T::pi();
        let c = |x: T| cre(x);
        let zero = |_: T| C::<T>::zero();
        let one = |_: T| C::new(T::one(), T::zero());
        match self {
            GreenCase::Trig1 => (
                SmoothField::new(
                    move |x: T| c((pi * x).sin()),
                    move |x: T| c(pi * (pi * x).cos()),
                    move |x: T| c((pi * x).cos()),
                    move |x: T| c(-pi * (pi * x).sin()),
                ),
                SmoothField::new(c, one, one, zero),
            ),
            GreenCase::Trig2 => {
                let tp = T::two_pi();
                let i = imag_unit::<T>();
                let three = re::<T>(3.0);
                let hp = pi / re(2.0);
                (
                    SmoothField::new(
                        move |x: T| cexp(i * tp * x),
                        move |x: T| i * tp * cexp(i * tp * x),
                        move |x: T| c((three * x).cos()),
                        move |x: T| c(-three * (three * x).sin()),
                    ),
                    SmoothField::new(
                        move |x: T| c((hp * x).sin()) + i,
                        move |x: T| c(hp * (hp * x).cos()),
                        move |x: T| c(x * x),
                        move |x: T| c(re::<T>(2.0) * x),
                    ),
                )
            }
            GreenCase::Poly1 => (
                SmoothField::new(
                    |x: T| cre(T::one() + x - x * x),
                    |x: T| cre(T::one() - re::<T>(2.0) * x),
                    |x: T| cre(re::<T>(2.0) * x * x * x),
                    |x: T| cre(re::<T>(6.0) * x * x),
                ),
                SmoothField::new(
                    |x: T| cre(x * x),
                    |x: T| cre(re::<T>(2.0) * x),
                    |x: T| cre(T::one() - x),
                    |_: T| cre(-T::one()),
                ),
            ),
            GreenCase::Interior => {
                let s2 = move |k: T, x: T| (k * pi * x).sin().powi(2);
                let ds2 = move |k: T, x: T| {
                    re::<T>(2.0) * k * pi * (k * pi * x).sin() * (k * pi * x).cos()
                };
                let one_ = T::one();
                let two = re::<T>(2.0);
                (
                    SmoothField::new(
                        move |x: T| cre(s2(one_, x)),
                        move |x: T| cre(ds2(one_, x)),
                        move |x: T| cre(s2(one_, x) * x),
                        move |x: T| cre(ds2(one_, x) * x + s2(one_, x)),
                    ),
                    SmoothField::new(
                        move |x: T| C::new(s2(two, x), s2(one_, x)),
                        move |x: T| C::new(ds2(two, x), ds2(one_, x)),
                        move |x: T| cre(s2(one_, x) * x.cos()),
                        move |x: T| cre(ds2(one_, x) * x.cos() - s2(one_, x) * x.sin()),
                    ),
                )
            }
            GreenCase::Leontovich { z0, z1 } => {
                let i = imag_unit::<T>();
                let z0 = cre(re::<T>(z0));
                let z1 = cre(re::<T>(z1));
                let e0 = -i * z0 * cre(re::<T>(3.0));
                let e1 = i * z1;
                let a = re::<T>(0.3);
                let f = SmoothField::new(
                    move |x: T| e0 * cre(T::one() - x) + e1 * cre(x) + cre(a * (pi * x).sin()),
                    move |x: T| e1 - e0 + cre(a * pi * (pi * x).cos()),
                    move |x: T| cre(re::<T>(2.0) + (pi * x).cos()),
                    move |x: T| cre(-pi * (pi * x).sin()),
                );
                (f.clone(), f)
            }
        }
    }
}

/// Discrete Green identity: `⟨M_hψ|φ⟩_h - ⟨ψ|M_hφ⟩_h` against the discrete
/// boundary form plus the penalty contributions.
pub fn discrete_green_residual<T: Real + Serialize>(
    gen: &DiscreteGenerator<T>,
    psi: &[C<T>],
    phi: &[C<T>],
) -> T {
    let d = gen.dim();
    let mut mp = vec![C::zero(); d];
    let mut mf = vec![C::zero(); d];
    gen.apply(psi, &mut mp);
    gen.apply(phi, &mut mf);
    let lhs = gen.inner(&mp, phi) - gen.inner(psi, &mf);
    let vp = DVector::from_column_slice(psi);
    let vf = DVector::from_column_slice(phi);
    let g0p = &gen.gamma0 * &vp;
    let g1p = &gen.gamma1 * &vp;
    let g0f = &gen.gamma0 * &vf;
    let g1f = &gen.gamma1 * &vf;
    let rp = &gen.residual * &vp;
    let rf = &gen.residual * &vf;
    let yp = &gen.penalty * &vp;
    let yf = &gen.penalty * &vf;
    let pair = |a: &CVec<T>, b: &CVec<T>| b.dotc(a);
    let rhs = pair(&g1p, &g0f) - pair(&g0p, &g1f) + pair(&rp, &yf) - pair(&yp, &rf);
    cabs(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_contraction, rng_from_seed};

    fn vac() -> Maxwell1D<f64> {
        Maxwell1D::vacuum()
    }

    #[test]
    fn rotation_is_skew_unitary() {
        let w = vac().rotation();
        let id = CMat::<f64>::identity(2, 2);
        assert!(max_abs(&(w.adjoint() * &w - &id)) < 1e-15);
        assert!(max_abs(&(w.adjoint() + &w)) < 1e-15);
    }

    #[test]
    fn unit_impedance_is_zero_contraction() {
        let k = BoundarySpec::<f64>::impedance(1.0, 1.0).k_matrix().unwrap();
        assert!(max_abs(&k) == 0.0);
    }

    #[test]
    fn impedance_and_contraction_assemblies_agree() {
        let m = vac();
        for (z0, z1) in [(0.0, 0.0), (1.0, 0.5), (3.0, 0.2)] {
            let bz = BoundarySpec::impedance(z0, z1);
            let gz = build_generator(&m, &bz, 32).unwrap();
            let gk = build_generator(
                &m,
                &BoundarySpec::contraction(bz.k_matrix().unwrap()).unwrap(),
                32,
            )
            .unwrap();
            let diff = max_abs(&(&gz.matrix - &gk.matrix)) / max_abs(&gk.matrix);
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn energy_identity_on_random_states() {
        let mut rng = rng_from_seed(21);
        let m = Maxwell1D::constant(2.0, 0.5).unwrap();
        let k = random_contraction::<f64>(2, &mut rng);
        let g = build_generator(&m, &BoundarySpec::contraction(k).unwrap(), 20).unwrap();
        let psi = crate::sampling::complex_gaussian::<f64>(g.dim(), 1, &mut rng);
        let psi: Vec<_> = psi.iter().copied().collect();
        let mut mp = vec![C::zero(); g.dim()];
        g.apply(&psi, &mut mp);
        let im = g.inner(&mp, &psi).im;
        assert!((im - g.boundary_form(&psi)).abs() < 1e-11 * g.energy(&psi) * 40.0);
        assert!(im <= 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_norm() {
        let mut rng = rng_from_seed(3);
        let k = random_contraction::<f64>(2, &mut rng);
        let g = build_generator(&vac(), &BoundarySpec::contraction(k).unwrap(), 24).unwrap();
        let dense = spectral_norm(&g.isometric_matrix());
        let fast = g.operator_norm();
        assert!((fast - dense).abs() < 1e-10 * dense, "{fast} {dense}");
    }

    #[test]
    fn structured_resolvent_matches_dense() {
        let mut rng = rng_from_seed(4);
        let m = vac();
        let probe = ResolventProbe::new(&m, 24).unwrap();
        for _ in 0..3 {
            let k = random_contraction::<f64>(2, &mut rng);
            let g = build_generator(&m, &BoundarySpec::contraction(k).unwrap(), 24).unwrap();
            for l in [C::new(1.0, 0.1), C::new(-7.0, 2.0), C::new(30.0, 0.5)] {
                let c = probe.boundary_block(&g).unwrap();
                let fast = probe.scaled_resolvent_norm(&c, l).unwrap();
                let dense = scaled_resolvent_dense(&g, l).unwrap();
                assert!((fast - dense).abs() < 1e-9 * dense, "{fast} {dense}");
            }
        }
    }

    #[test]
    fn selfadjoint_resolvent_is_tight_near_eigenvalue() {
        let g = build_generator(&vac(), &BoundarySpec::impedance(0.0, 0.0), 64).unwrap();
        let eigs = spectrum(&g).unwrap();
        let e = eigs
            .iter()
            .min_by(|a, b| {
                (a.re - 3.14)
                    .abs()
                    .partial_cmp(&(b.re - 3.14).abs())
                    .unwrap()
            })
            .unwrap();
        let rep = numerical_range_and_resolvent(&g, &[C::new(e.re, 1e-3)]).unwrap();
        assert!(rep.max_scaled_resolvent > 0.999 && rep.max_scaled_resolvent <= 1.0 + 1e-8);
        assert!(rep.numerical_range_max_im.abs() < 1e-10);
    }

    #[test]
    fn absorbing_resolvent_at_i() {
        let g = build_generator(&vac(), &BoundarySpec::impedance(1.0, 1.0), 64).unwrap();
        let rep = numerical_range_and_resolvent(&g, &[C::new(0.0, 1.0)]).unwrap();
        assert!(rep.max_scaled_resolvent <= 1.0 + 1e-8);
    }

    #[test]
    fn lower_half_plane_sample_rejected() {
        let g = build_generator(&vac(), &BoundarySpec::impedance(1.0, 1.0), 16).unwrap();
        assert!(numerical_range_and_resolvent(&g, &[C::new(0.0, -1.0)]).is_err());
    }

    #[test]
    fn summation_by_parts_property() {
        let n = 20;
        for (sbp, order) in [(Sbp::Second, 1), (Sbp::Fourth, 2)] {
            let (d, norm) = sbp_derivative::<f64>(n, sbp);
            let hd = DMatrix::from_diagonal(&DVector::from_vec(norm.clone())) * &d;
            let mut b = DMatrix::<f64>::zeros(n + 1, n + 1);
            b[(0, 0)] = -1.0;
            b[(n, n)] = 1.0;
            assert!((&hd + hd.transpose() - b).amax() < 1e-14);
            let x: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
            for p in 0..=order {
                let u = DVector::from_iterator(n + 1, x.iter().map(|t| t.powi(p)));
                let du = &d * u;
                for j in 0..=n {
                    let exact = if p == 0 {
                        0.0
                    } else {
                        p as f64 * x[j].powi(p - 1)
                    };
                    assert!((du[j] - exact).abs() < 1e-11, "p={p} j={j}");
                }
            }
            assert!((norm.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn band_lu_solves() {
        let mut rng = rng_from_seed(6);
        let k = random_contraction::<f64>(2, &mut rng);
        let g = build_generator(&vac(), &BoundarySpec::contraction(k).unwrap(), 20).unwrap();
        let perm = folded_order(20);
        let d = g.dim();
        let a = CMat::from_fn(d, d, |i, j| {
            g.matrix[(perm[i], perm[j])] * C::new(0.0, 0.01)
                + if i == j { C::new(1.0, 0.0) } else { C::zero() }
        });
        let lu = BandLu::new(&a).unwrap();
        assert!(lu.lower <= 16);
        let b = crate::sampling::complex_gaussian::<f64>(d, 1, &mut rng);
        let mut x: Vec<_> = b.iter().copied().collect();
        lu.solve(&mut x);
        let r = &a * DVector::from_vec(x) - b.column(0);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = build_generator(&vac(), &BoundarySpec::impedance(1.0, 0.5), 32).unwrap();
        let tr = evolve_cn(&g, &DVector::from_element(g.dim(), C::zero()), 1e-2, 10).unwrap();
        assert!(tr.records.iter().all(|r| r.energy == 0.0));
    }

    #[test]
    fn characteristic_roots_dirichlet() {
        let k = -CMat::<f64>::identity(2, 2);
        let roots = characteristic_roots(&vac(), &k, (-10.0, 10.0), (-1.0, 1.0)).unwrap();
        assert_eq!(roots.len(), 7);
        for (r, j) in roots.iter().zip(-3..=3) {
            assert!((r - C::new(j as f64 * std::f64::consts::PI, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn characteristic_roots_of_absorbing_ends() {
        // K = 0 makes both ends transparent: no eigenvalues at all.
        let k = CMat::<f64>::zeros(2, 2);
        let roots = characteristic_roots(&vac(), &k, (-10.0, 10.0), (-5.0, 5.0)).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn green_cases() {
        for case in [
            GreenCase::Trig1,
            GreenCase::Trig2,
            GreenCase::Poly1,
            GreenCase::Interior,
        ] {
            let (p, f) = case.fields::<f64>();
            assert!(green_identity_residual(&vac(), &p, &f) < 1e-12, "{case:?}");
        }
        let (p, f) = GreenCase::Interior.fields::<f64>();
        let r = green_identity(&vac(), &p, &f);
        assert!(r.rhs[0].abs() + r.rhs[1].abs() < 1e-28);
        assert!(r.lhs[0].abs() + r.lhs[1].abs() < 1e-12);
    }

    #[test]
    fn leontovich_dissipation() {
        let (z0, z1) = (1.0, 0.5);
        let (p, f) = GreenCase::Leontovich { z0, z1 }.fields::<f64>();
        let m = Maxwell1D::constant(1.5, 0.7).unwrap();
        let r = green_identity(&m, &p, &f);
        // LHS = 2i Im(M*ψ|ψ) and H(0) = 3, H(1) = 1.
        let want = -(z0 * 9.0 + z1 * 1.0);
        assert!(r.lhs[0].abs() < 1e-12);
        assert!((r.lhs[1] / 2.0 - want).abs() < 1e-12);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn piecewise_profile_green() {
        let m = Maxwell1D {
            eps: Profile::piecewise(vec![0.3], vec![1.0, 4.0]).unwrap(),
            mu: Profile::piecewise(vec![0.6], vec![2.0, 1.0]).unwrap(),
        };
        let (p, f) = GreenCase::Trig2.fields::<f64>();
        assert!(green_identity_residual(&m, &p, &f) < 1e-12);
    }

    #[test]
    fn conductor_eigenvalues_converge_for_both_operators() {
        let exact: Vec<C<f64>> = (1..=3)
            .map(|k| C::new(k as f64 * std::f64::consts::PI, 0.0))
            .collect();
        let bc = BoundarySpec::contraction(-CMat::<f64>::identity(2, 2)).unwrap();
        for sbp in [Sbp::Second, Sbp::Fourth] {
            let err = |n: usize| {
                let g = build_generator_with(&vac(), &bc, n, sbp).unwrap();
                nearest_errors(&spectrum(&g).unwrap(), &exact)
                    .into_iter()
                    .fold(0.0, f64::max)
            };
            let order = (err(48) / err(96)).log2();
            assert!(order > 1.9, "{sbp:?} {order}");
        }
    }

    #[test]
    fn small_grid_rejected() {
        assert!(build_generator(&vac(), &BoundarySpec::impedance(1.0, 1.0), 8).is_err());
    }

    #[test]
    fn negative_impedance_rejected() {
        assert!(build_generator(&vac(), &BoundarySpec::impedance(-1.0, 1.0), 32).is_err());
    }
}

//! Dense linear algebra helpers, finite-difference oracles, quadrature and
//! one-dimensional root finding shared by the rest of the crate.
//!
//! Vectors are plain `&[f64]` slices; symmetric matrices are wrapped in
//! [`SymBilinearForm`]. Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for [`eigen_classify`], relative to the spectral norm.
pub const DEFAULT_EIGEN_TOLERANCE: f64 = 1e-9;

/// Default node count for composite Simpson quadrature on one segment.
pub const DEFAULT_QUADRATURE_NODES: usize = 65;

/// A symmetric bilinear form on coordinate space, stored as a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBilinearForm(DMatrix<f64>);

impl SymBilinearForm {
    /// Wraps `m` after checking that it is square, finite and symmetric to
    /// within `1e-12` relative to its largest entry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument(format!(
                "bilinear form must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteSample { at: vec![] });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Replaces `m` by `(m + mᵀ)/2`.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// Builds a form from row-major entries; the result is symmetrized.
    pub fn from_row_slice(n: usize, entries: &[f64]) -> Self {
        Self::symmetrized(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Evaluates the form on `(u, w)`.
    pub fn apply(&self, u: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.0[(i, j)] * w[j];
            }
            acc += u[i] * row;
        }
        acc
    }

    /// The covector `g(v, ·)` as coordinates.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Solves `g z = b`; `None` when the matrix is singular.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let lu = self.0.clone().lu();
        lu.solve(&DVector::from_column_slice(b))
            .map(|z| z.iter().copied().collect())
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .amax()
    }

    /// Largest absolute entry difference to `other`, divided by the largest
    /// absolute entry of `self` (floored at `f64::MIN_POSITIVE`).
    pub fn relative_difference(&self, other: &SymBilinearForm) -> f64 {
        let diff = (&self.0 - &other.0).amax();
        diff / self.0.amax().max(f64::MIN_POSITIVE)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }
}

impl std::ops::Add for SymBilinearForm {
    type Output = SymBilinearForm;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

/// Sign type of a symmetric form under a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemiDefiniteDegenerate,
    Indefinite,
    NegativeSemiDefinite,
    NegativeDefinite,
}

impl Definiteness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Definiteness::PositiveDefinite => "PositiveDefinite",
            Definiteness::PositiveSemiDefiniteDegenerate => "PositiveSemiDefiniteDegenerate",
            Definiteness::Indefinite => "Indefinite",
            Definiteness::NegativeSemiDefinite => "NegativeSemiDefinite",
            Definiteness::NegativeDefinite => "NegativeDefinite",
        }
    }

    /// Stable integer code used by the C API.
    pub fn as_code(&self) -> i32 {
        match self {
            Definiteness::PositiveDefinite => 0,
            Definiteness::PositiveSemiDefiniteDegenerate => 1,
            Definiteness::Indefinite => 2,
            Definiteness::NegativeSemiDefinite => 3,
            Definiteness::NegativeDefinite => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub classification: Definiteness,
}

impl EigenReport {
    pub fn is_positive_definite(&self) -> bool {
        self.classification == Definiteness::PositiveDefinite
    }
}

/// Eigen-decomposes `m` and classifies its sign type. An eigenvalue counts
/// as zero when its magnitude is at most `tolerance · ‖m‖₂`.
pub fn eigen_classify(m: &SymBilinearForm, tolerance: f64) -> Result<EigenReport> {
    if m.matrix().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample { at: vec![] });
    }
    let eig = SymmetricEigen::new(m.matrix().clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let norm = eigenvalues.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    let shell = tolerance * norm;
    let positive = eigenvalues.iter().filter(|&&l| l > shell).count();
    let negative = eigenvalues.iter().filter(|&&l| l < -shell).count();
    let zero = eigenvalues.len() - positive - negative;
    let classification = match (positive, negative, zero) {
        (_, 0, 0) => Definiteness::PositiveDefinite,
        (0, _, 0) => Definiteness::NegativeDefinite,
        (p, n, _) if p > 0 && n > 0 => Definiteness::Indefinite,
        (_, 0, _) => Definiteness::PositiveSemiDefiniteDegenerate,
        _ => Definiteness::NegativeSemiDefinite,
    };
    Ok(EigenReport {
        min_eigenvalue: eigenvalues[0],
        eigenvalues,
        classification,
    })
}

fn probe<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteSample { at: x.to_vec() })
    }
}

/// Central-difference gradient with step `cbrt(eps)·max(1, scale)`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], scale: f64) -> Result<Vec<f64>> {
    let h = f64::EPSILON.cbrt() * scale.abs().max(1.0);
    let mut probe_point = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe_point[i] = x[i] + h;
        let plus = probe(&f, &probe_point)?;
        probe_point[i] = x[i] - h;
        let minus = probe(&f, &probe_point)?;
        probe_point[i] = x[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Central mixed second differences with step `h = eps^(1/4)·max(1, scale)`.
///
/// Entry `(i, j)` is `[f(x+hᵢ+hⱼ) − f(x+hᵢ−hⱼ) − f(x−hᵢ+hⱼ) + f(x−hᵢ−hⱼ)] / 4h²`,
/// taken at `h` and `h/2` and Richardson-extrapolated, then symmetrized.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], scale: f64) -> Result<SymBilinearForm> {
    let n = x.len();
    let h = f64::EPSILON.powf(0.25) * scale.abs().max(1.0);
    let mut p = x.to_vec();
    let mut eval = |i: usize, si: f64, j: usize, sj: f64| -> Result<f64> {
        p.copy_from_slice(x);
        p[i] += si;
        p[j] += sj;
        probe(&f, &p)
    };
    let mut stencil = |i: usize, j: usize, h: f64| -> Result<f64> {
        let v = eval(i, h, j, h)? - eval(i, h, j, -h)? - eval(i, -h, j, h)? + eval(i, -h, j, -h)?;
        Ok(v / (4.0 * h * h))
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let coarse = stencil(i, j, h)?;
            let fine = stencil(i, j, 0.5 * h)?;
            m[(i, j)] = (4.0 * fine - coarse) / 3.0;
            m[(j, i)] = m[(i, j)];
        }
    }
    Ok(SymBilinearForm::symmetrized(m))
}

/// Composite Simpson rule on `[a, b]` with `nodes` sample points (an even
/// count is bumped to the next odd one; at least 3).
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> Result<f64> {
    let nodes = simpson_node_count(nodes);
    let intervals = nodes - 1;
    let h = (b - a) / intervals as f64;
    let mut acc = 0.0;
    for k in 0..nodes {
        let t = if k == intervals { b } else { a + h * k as f64 };
        let y = f(t);
        if !y.is_finite() {
            return Err(Error::NonFiniteSample { at: vec![t] });
        }
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * y;
    }
    Ok(acc * h / 3.0)
}

pub(crate) fn simpson_node_count(nodes: usize) -> usize {
    let n = nodes.max(3);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Parameters of the Simpson nodes used by [`integrate_1d`].
pub fn simpson_nodes(a: f64, b: f64, nodes: usize) -> Vec<f64> {
    let nodes = simpson_node_count(nodes);
    let intervals = nodes - 1;
    let h = (b - a) / intervals as f64;
    (0..nodes)
        .map(|k| if k == intervals { b } else { a + h * k as f64 })
        .collect()
}

/// Finds a root of `g` on `(0, ∞)`.
///
/// Brackets a sign change by doubling outward from `bracket_hint` (both up
/// and down, at most 60 times), then refines with Illinois regula falsi.
/// Also works for step functions such as `±1` membership indicators, in
/// which case the bracket collapses to adjacent floats.
pub fn ray_root<G: Fn(f64) -> f64>(g: G, bracket_hint: f64) -> Result<f64> {
    if !(bracket_hint > 0.0 && bracket_hint.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bracket hint must be positive, got {bracket_hint}"
        )));
    }
    let eval = |l: f64| -> Result<f64> {
        let y = g(l);
        if y.is_nan() {
            Err(Error::NonFiniteSample { at: vec![l] })
        } else {
            Ok(y)
        }
    };
    let g0 = eval(bracket_hint)?;
    if g0 == 0.0 {
        return Ok(bracket_hint);
    }
    let mut bracket = None;
    let (mut lo, mut glo) = (bracket_hint, g0);
    let (mut hi, mut ghi) = (bracket_hint, g0);
    for _ in 0..60 {
        let next_hi = hi * 2.0;
        let g_next_hi = eval(next_hi)?;
        if g_next_hi == 0.0 {
            return Ok(next_hi);
        }
        if g_next_hi.signum() != ghi.signum() {
            bracket = Some((hi, ghi, next_hi, g_next_hi));
            break;
        }
        hi = next_hi;
        ghi = g_next_hi;

        let next_lo = lo * 0.5;
        let g_next_lo = eval(next_lo)?;
        if g_next_lo == 0.0 {
            return Ok(next_lo);
        }
        if g_next_lo.signum() != glo.signum() {
            bracket = Some((next_lo, g_next_lo, lo, glo));
            break;
        }
        lo = next_lo;
        glo = g_next_lo;
    }
    let (mut a, mut ga, mut b, mut gb) = bracket.ok_or(Error::NoBracket { hint: bracket_hint })?;

    // Illinois: halve the retained endpoint's value when the same side
    // is kept twice in a row.
    let mut side = 0i8;
    for _ in 0..500 {
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !(c > a && c < b) || !c.is_finite() {
            c = 0.5 * (a + b);
        }
        let gc = eval(c)?;
        if gc.abs() <= 1e-12 * c.abs().max(1.0) {
            return Ok(c);
        }
        if gc.signum() == ga.signum() {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs() {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(0.5 * (a + b))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| alpha * xi + yi).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|xi| alpha * xi).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Symmetric rank-one form `c · a ⊗ a`.
pub fn outer(a: &[f64], c: f64) -> SymBilinearForm {
    let n = a.len();
    SymBilinearForm::symmetrized(DMatrix::from_fn(n, n, |i, j| c * a[i] * a[j]))
}

/// Symmetric form `c · (a ⊗ b + b ⊗ a) / 2`.
pub fn sym_outer(a: &[f64], b: &[f64], c: f64) -> SymBilinearForm {
    let n = a.len();
    SymBilinearForm::symmetrized(DMatrix::from_fn(n, n, |i, j| {
        0.5 * c * (a[i] * b[j] + b[i] * a[j])
    }))
}

/// i-th element of the van der Corput sequence in the given prime base.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Point `i` of the Halton sequence in `[0,1)^dims` (dims ≤ 12).
pub fn halton(i: u64, dims: usize) -> Vec<f64> {
    (0..dims).map(|d| radical_inverse(i + 1, PRIMES[d])).collect()
}

/// Deterministic, well-spread unit directions in `R^dims`.
///
/// In 2D these are the equally spaced angles `2πk/count`; in higher
/// dimensions, Halton points pushed through Box–Muller and normalized.
pub fn unit_directions(dims: usize, count: usize) -> Vec<Vec<f64>> {
    match dims {
        0 => vec![],
        1 => (0..count)
            .map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }])
            .collect(),
        2 => (0..count)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let pairs = dims.div_ceil(2);
            (0..count as u64)
                .map(|i| {
                    let u = halton(i, 2 * pairs);
                    let mut z = Vec::with_capacity(2 * pairs);
                    for p in 0..pairs {
                        let r = (-2.0 * (1.0 - u[2 * p]).ln()).sqrt();
                        let th = std::f64::consts::TAU * u[2 * p + 1];
                        z.push(r * th.cos());
                        z.push(r * th.sin());
                    }
                    z.truncate(dims);
                    let n = norm(&z);
                    scale(1.0 / n, &z)
                })
                .collect()
        }
    }
}

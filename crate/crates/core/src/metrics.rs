//! Conic pseudo-Finsler metrics on a single chart.
//!
//! A [`ConicMetric`] bundles a chart, a domain predicate `A ⊂ TM`, the value
//! `F` and (optionally) a closed-form fundamental tensor. When no closed form
//! is attached, the tensor is the finite-difference Hessian of `F²/2` in the
//! fiber.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::minkowski::GaugeNorm;
use crate::numkernel::{self, eigen_classify, fd_hessian, norm, EigenReport, SymBilinearForm};

type PointPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type FiberPredicate = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;
type FiberValue = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type FiberTensor = Arc<dyn Fn(&[f64], &[f64]) -> Result<SymBilinearForm> + Send + Sync>;
type FiberDiagnostic = Arc<dyn Fn(&[f64], &[f64]) -> Option<Error> + Send + Sync>;

/// Directions probed when deciding whether a domain is empty or contains a
/// whole punctured tangent space.
pub(crate) const DOMAIN_PROBES: usize = 64;

/// An open subset of `R^N` used as the single chart of a manifold.
#[derive(Clone)]
pub struct ChartManifold {
    dimension: usize,
    member: PointPredicate,
    sample_lo: Vec<f64>,
    sample_hi: Vec<f64>,
}

impl fmt::Debug for ChartManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartManifold")
            .field("dimension", &self.dimension)
            .field("sample_lo", &self.sample_lo)
            .field("sample_hi", &self.sample_hi)
            .finish_non_exhaustive()
    }
}

impl ChartManifold {
    /// `sample_lo`/`sample_hi` bound the box used for random base points.
    pub fn new(
        dimension: usize,
        member: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        sample_lo: Vec<f64>,
        sample_hi: Vec<f64>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("chart dimension must be at least 1".into()));
        }
        check_dim(dimension, sample_lo.len())?;
        check_dim(dimension, sample_hi.len())?;
        if sample_lo.iter().zip(&sample_hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("sample box must have lo < hi".into()));
        }
        Ok(Self {
            dimension,
            member: Arc::new(member),
            sample_lo,
            sample_hi,
        })
    }

    /// All of `R^N`, sampled on `[-1, 1]^N`.
    pub fn euclidean(dimension: usize) -> Self {
        Self::new(dimension, |_| true, vec![-1.0; dimension], vec![1.0; dimension])
            .expect("valid chart")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dimension && p.iter().all(|x| x.is_finite()) && (self.member)(p)
    }

    pub fn sample_box(&self) -> (&[f64], &[f64]) {
        (&self.sample_lo, &self.sample_hi)
    }

    /// Center of the sample box.
    pub fn probe_point(&self) -> Vec<f64> {
        self.sample_lo
            .iter()
            .zip(&self.sample_hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Deterministic Halton points of the sample box that lie in the chart.
    pub fn sample_points(&self, count: usize) -> Vec<Vec<f64>> {
        (1..)
            .map(|i| {
                numkernel::halton(i, self.dimension)
                    .iter()
                    .zip(self.sample_lo.iter().zip(&self.sample_hi))
                    .map(|(u, (a, b))| a + u * (b - a))
                    .collect::<Vec<f64>>()
            })
            .take(count.saturating_mul(50).max(1))
            .filter(|p| self.contains(p))
            .take(count)
            .collect()
    }
}

/// A tangent vector `vec` based at the chart point `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub base: Vec<f64>,
    pub vec: Vec<f64>,
}

impl TangentVec {
    pub fn new(base: Vec<f64>, vec: Vec<f64>) -> Self {
        Self { base, vec }
    }
}

/// Square root of a (possibly position-dependent) Riemannian metric.
#[derive(Clone)]
pub struct RiemannAtom {
    matrix: Arc<dyn Fn(&[f64]) -> SymBilinearForm + Send + Sync>,
    constant: bool,
}

impl fmt::Debug for RiemannAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RiemannAtom")
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

impl RiemannAtom {
    pub fn new(matrix: impl Fn(&[f64]) -> SymBilinearForm + Send + Sync + 'static) -> Self {
        Self {
            matrix: Arc::new(matrix),
            constant: false,
        }
    }

    pub fn constant(m: SymBilinearForm) -> Self {
        Self {
            matrix: Arc::new(move |_| m.clone()),
            constant: true,
        }
    }

    pub fn euclidean(dimension: usize) -> Self {
        Self::constant(SymBilinearForm::identity(dimension))
    }

    pub fn matrix_at(&self, p: &[f64]) -> SymBilinearForm {
        (self.matrix)(p)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// `√(g_p(v, v))`.
    pub fn length(&self, p: &[f64], v: &[f64]) -> f64 {
        self.matrix_at(p).apply(v, v).max(0.0).sqrt()
    }
}

/// A one-form `β = Σ b_i dx^i` with position-dependent coefficients.
#[derive(Clone)]
pub struct OneFormAtom {
    covector: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    constant: bool,
}

impl fmt::Debug for OneFormAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OneFormAtom")
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

impl OneFormAtom {
    pub fn new(covector: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            covector: Arc::new(covector),
            constant: false,
        }
    }

    pub fn constant(b: Vec<f64>) -> Self {
        Self {
            covector: Arc::new(move |_| b.clone()),
            constant: true,
        }
    }

    pub fn coefficients(&self, p: &[f64]) -> Vec<f64> {
        (self.covector)(p)
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn apply(&self, p: &[f64], v: &[f64]) -> f64 {
        numkernel::dot(&self.coefficients(p), v)
    }
}

/// A conic pseudo-Finsler metric `(A, F)`.
#[derive(Clone)]
pub struct ConicMetric {
    manifold: ChartManifold,
    domain: FiberPredicate,
    value: FiberValue,
    analytic_tensor: Option<FiberTensor>,
    diagnostic: Option<FiberDiagnostic>,
    zero_in_domain: bool,
    translation_invariant: bool,
    label: String,
}

impl fmt::Debug for ConicMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConicMetric")
            .field("label", &self.label)
            .field("manifold", &self.manifold)
            .field("analytic_tensor", &self.analytic_tensor.is_some())
            .field("zero_in_domain", &self.zero_in_domain)
            .finish_non_exhaustive()
    }
}

impl ConicMetric {
    /// Assembles a metric from its parts.
    ///
    /// `domain` is consulted only for nonzero vectors; `value` and `tensor`
    /// only for nonzero vectors in the domain. The zero vector belongs to `A`
    /// exactly when every probed direction at the chart's probe point does.
    pub fn from_parts(
        manifold: ChartManifold,
        domain: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        analytic_tensor: Option<FiberTensor>,
        translation_invariant: bool,
        label: impl Into<String>,
    ) -> Self {
        let mut m = Self {
            manifold,
            domain: Arc::new(domain),
            value: Arc::new(value),
            analytic_tensor,
            diagnostic: None,
            zero_in_domain: false,
            translation_invariant,
            label: label.into(),
        };
        let base = m.manifold.probe_point();
        m.zero_in_domain = m.manifold.contains(&base)
            && numkernel::unit_directions(m.dimension(), DOMAIN_PROBES)
                .iter()
                .all(|d| (m.domain)(&base, d));
        m
    }

    /// Square root of a Riemannian metric; the domain is `TM`.
    pub fn riemannian(manifold: ChartManifold, atom: RiemannAtom) -> Self {
        let a = atom.clone();
        let t = atom.clone();
        Self::from_parts(
            manifold,
            |_, _| true,
            move |p, v| a.length(p, v),
            Some(Arc::new(move |p, _| Ok(t.matrix_at(p)))),
            atom.is_constant(),
            "riemannian",
        )
    }

    /// `F = β` on `A = {β > 0}`; the tensor `b bᵀ` is degenerate.
    pub fn positive_one_form(manifold: ChartManifold, form: OneFormAtom) -> Self {
        let d = form.clone();
        let f = form.clone();
        let t = form.clone();
        Self::from_parts(
            manifold,
            move |p, v| d.apply(p, v) > 0.0,
            move |p, v| f.apply(p, v),
            Some(Arc::new(move |p, _| Ok(numkernel::outer(&t.coefficients(p), 1.0)))),
            form.is_constant(),
            "positive_one_form",
        )
    }

    /// The translation-invariant metric `F(p, v) = ‖v‖` of a gauge (no
    /// closed-form tensor).
    pub fn minkowski(manifold: ChartManifold, gauge: GaugeNorm) -> Result<Self> {
        check_dim(manifold.dimension(), gauge.dimension())?;
        let d = gauge.clone();
        let f = gauge.clone();
        Ok(Self::from_parts(
            manifold,
            move |_, v| d.contains(v),
            move |_, v| f.value(v).unwrap_or(f64::NAN),
            None,
            true,
            "minkowski",
        ))
    }

    /// Attaches a more specific error for vectors outside the domain.
    pub fn with_domain_diagnostic(
        mut self,
        diagnostic: impl Fn(&[f64], &[f64]) -> Option<Error> + Send + Sync + 'static,
    ) -> Self {
        self.diagnostic = Some(Arc::new(diagnostic));
        self
    }

    pub fn manifold(&self) -> &ChartManifold {
        &self.manifold
    }

    pub fn dimension(&self) -> usize {
        self.manifold.dimension()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn has_analytic_tensor(&self) -> bool {
        self.analytic_tensor.is_some()
    }

    /// A copy of the metric with the closed-form tensor dropped, so that
    /// [`ConicMetric::tensor`] falls back to finite differences.
    pub fn without_analytic_tensor(&self) -> Self {
        Self {
            analytic_tensor: None,
            ..self.clone()
        }
    }

    pub fn zero_in_domain(&self) -> bool {
        self.zero_in_domain
    }

    /// True when `F(p, v)` does not depend on `p`.
    pub fn is_translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    pub fn in_domain(&self, base: &[f64], v: &[f64]) -> bool {
        if base.len() != self.dimension() || v.len() != self.dimension() {
            return false;
        }
        if !self.manifold.contains(base) || !v.iter().all(|x| x.is_finite()) {
            return false;
        }
        if v.iter().all(|&x| x == 0.0) {
            return self.zero_in_domain;
        }
        (self.domain)(base, v)
    }

    fn check(&self, base: &[f64], v: &[f64]) -> Result<()> {
        check_dim(self.dimension(), base.len())?;
        check_dim(self.dimension(), v.len())?;
        if self.in_domain(base, v) {
            return Ok(());
        }
        if let Some(e) = self.diagnostic.as_ref().and_then(|d| d(base, v)) {
            return Err(e);
        }
        Err(Error::OutsideDomain {
            base: base.to_vec(),
            v: v.to_vec(),
        })
    }

    /// `F(v)`.
    pub fn eval(&self, base: &[f64], v: &[f64]) -> Result<f64> {
        self.check(base, v)?;
        if v.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        let f = (self.value)(base, v);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFiniteSample { at: v.to_vec() })
        }
    }

    /// `F(v)` or NaN, for use inside finite-difference probes.
    pub(crate) fn eval_or_nan(&self, base: &[f64], v: &[f64]) -> f64 {
        self.eval(base, v).unwrap_or(f64::NAN)
    }

    fn check_nonzero(&self, base: &[f64], v: &[f64]) -> Result<()> {
        self.check(base, v)?;
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument(
                "the fundamental tensor is not defined at the zero vector".into(),
            ));
        }
        Ok(())
    }

    /// Fundamental tensor `g_v`: the closed form when present, otherwise the
    /// finite-difference oracle.
    pub fn tensor(&self, base: &[f64], v: &[f64]) -> Result<SymBilinearForm> {
        self.check_nonzero(base, v)?;
        match &self.analytic_tensor {
            Some(t) => t(base, v),
            None => self.fd_tensor(base, v),
        }
    }

    /// Finite-difference Hessian of `F²/2` in the fiber (always available).
    pub fn fd_tensor(&self, base: &[f64], v: &[f64]) -> Result<SymBilinearForm> {
        self.check_nonzero(base, v)?;
        fd_hessian(
            |u| {
                let f = self.eval_or_nan(base, u);
                0.5 * f * f
            },
            v,
            norm(v),
        )
    }

    /// Angular metric `h_v = g_v − (g_v v)(g_v v)ᵀ / F(v)²`.
    pub fn angular_tensor(&self, base: &[f64], v: &[f64]) -> Result<SymBilinearForm> {
        let g = self.tensor(base, v)?;
        let f = self.eval(base, v)?;
        Ok(angular_from(&g, v, f))
    }
}

/// `g − (g v)(g v)ᵀ / f²`.
pub(crate) fn angular_from(g: &SymBilinearForm, v: &[f64], f: f64) -> SymBilinearForm {
    let gv = g.lower(v);
    g.clone() + numkernel::outer(&gv, -1.0 / (f * f))
}

pub fn eval_f(m: &ConicMetric, v: &TangentVec) -> Result<f64> {
    m.eval(&v.base, &v.vec)
}

pub fn tensor(m: &ConicMetric, v: &TangentVec) -> Result<SymBilinearForm> {
    m.tensor(&v.base, &v.vec)
}

pub fn angular_tensor(m: &ConicMetric, v: &TangentVec) -> Result<SymBilinearForm> {
    m.angular_tensor(&v.base, &v.vec)
}

pub fn classify_point(m: &ConicMetric, v: &TangentVec, tolerance: f64) -> Result<EigenReport> {
    eigen_classify(&m.tensor(&v.base, &v.vec)?, tolerance)
}

/// Classification of `samples` deterministic unit directions at `base`.
///
/// Directions outside `A` carry [`Error::OutsideDomain`]. Results are in
/// direction order regardless of evaluation order.
pub fn convexity_scan(
    m: &ConicMetric,
    base: &[f64],
    samples: usize,
    tolerance: f64,
) -> Vec<(Vec<f64>, Result<EigenReport>)> {
    numkernel::unit_directions(m.dimension(), samples.max(1))
        .into_par_iter()
        .map(|d| {
            let report = m
                .tensor(base, &d)
                .and_then(|g| eigen_classify(&g, tolerance));
            (d, report)
        })
        .collect()
}

/// Sampled test of `F(v) ≥ √(g₀(v, v))` on `A`.
pub fn lower_bound_check(
    m: &ConicMetric,
    bound: &RiemannAtom,
    base_samples: usize,
    dir_samples: usize,
) -> bool {
    let bases = m.manifold().sample_points(base_samples.max(1));
    let dirs = numkernel::unit_directions(m.dimension(), dir_samples.max(1));
    bases.par_iter().all(|p| {
        dirs.iter().all(|d| match m.eval(p, d) {
            Ok(f) => f >= bound.length(p, d) * (1.0 - 1e-12),
            Err(_) => true,
        })
    })
}

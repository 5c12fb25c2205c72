//! Minkowski conic pseudo-norms on a fixed vector space.
//!
//! A [`GaugeNorm`] is a positively homogeneous function on a conic domain.
//! It can come from a closed unit ball (by root-finding along rays), from a
//! 2D indicatrix given in polar form (exact formula `|v| / r(θ)`), or from a
//! closed-form expression.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::numkernel::{self, fd_gradient, fd_hessian, norm, ray_root, SymBilinearForm};

type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type GaugeFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of segment samples used to decide whether two vectors are comparable.
pub const SEGMENT_SAMPLES: usize = 33;

/// An open cone in `R^N` given by a membership predicate.
#[derive(Clone)]
pub struct ConicDomainV {
    dimension: usize,
    member: Predicate,
}

impl fmt::Debug for ConicDomainV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConicDomainV")
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl ConicDomainV {
    pub fn new(dimension: usize, member: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            dimension,
            member: Arc::new(member),
        }
    }

    /// The whole space (including the zero vector).
    pub fn full(dimension: usize) -> Self {
        Self::new(dimension, |_| true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dimension && v.iter().all(|x| x.is_finite()) && (self.member)(v)
    }

    /// Sampled cone test: membership is preserved under scaling by 0.5, 2 and 10.
    pub fn is_conic_on(&self, samples: &[Vec<f64>]) -> bool {
        samples.iter().filter(|v| self.contains(v)).all(|v| {
            [0.5, 2.0, 10.0]
                .iter()
                .all(|&l| self.contains(&numkernel::scale(l, v)))
        })
    }
}

/// Where a gauge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeSource {
    IndicatrixCurve2D,
    ClosedFormExpression,
    BallMembershipPredicate,
}

/// A Minkowski conic pseudo-norm `‖·‖_B`.
#[derive(Clone)]
pub struct GaugeNorm {
    domain: ConicDomainV,
    value: GaugeFn,
    source: GaugeSource,
}

impl fmt::Debug for GaugeNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeNorm")
            .field("domain", &self.domain)
            .field("source", &self.source)
            .finish_non_exhaustive()
    }
}

impl GaugeNorm {
    /// A gauge from an explicit formula; `value` is only called on domain vectors.
    pub fn closed_form(
        domain: ConicDomainV,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            value: Arc::new(move |v| Ok(value(v))),
            source: GaugeSource::ClosedFormExpression,
        }
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn domain(&self) -> &ConicDomainV {
        &self.domain
    }

    pub fn source(&self) -> GaugeSource {
        self.source
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.domain.contains(v)
    }

    /// `‖v‖`; errors with [`Error::OutsideCone`] off the domain.
    pub fn value(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dimension(), v.len())?;
        if !self.domain.contains(v) {
            return Err(Error::OutsideCone { v: v.to_vec() });
        }
        if v.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        (self.value)(v)
    }

    fn energy_or_nan(&self, v: &[f64]) -> f64 {
        match self.value(v) {
            Ok(x) => 0.5 * x * x,
            Err(_) => f64::NAN,
        }
    }
}

/// A curve `c(θ) = r(θ)(cos θ, sin θ)` with its first two derivatives.
#[derive(Clone)]
pub struct PolarCurve2D {
    r: ScalarFn,
    r_dot: ScalarFn,
    r_ddot: ScalarFn,
    theta_range: Option<(f64, f64)>,
}

impl fmt::Debug for PolarCurve2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolarCurve2D")
            .field("theta_range", &self.theta_range)
            .finish_non_exhaustive()
    }
}

impl PolarCurve2D {
    /// A curve on the open interval `theta_range` (length at most 2π), or a
    /// closed 2π-periodic curve when `theta_range` is `None`.
    pub fn new(
        r: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r_dot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r_ddot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        theta_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        if let Some((lo, hi)) = theta_range {
            if !(lo < hi && hi - lo <= TAU + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "angular interval ({lo}, {hi}) must be non-empty and at most 2π long"
                )));
            }
        }
        Ok(Self {
            r: Arc::new(r),
            r_dot: Arc::new(r_dot),
            r_ddot: Arc::new(r_ddot),
            theta_range,
        })
    }

    pub fn r(&self, theta: f64) -> f64 {
        (self.r)(theta)
    }

    pub fn r_dot(&self, theta: f64) -> f64 {
        (self.r_dot)(theta)
    }

    pub fn r_ddot(&self, theta: f64) -> f64 {
        (self.r_ddot)(theta)
    }

    pub fn theta_range(&self) -> Option<(f64, f64)> {
        self.theta_range
    }

    /// The representative of the polar angle of `v` inside the interval.
    pub fn angle_of(&self, v: &[f64]) -> Option<f64> {
        if v.len() != 2 || (v[0] == 0.0 && v[1] == 0.0) {
            return None;
        }
        let base = v[1].atan2(v[0]);
        match self.theta_range {
            None => Some(base),
            Some((lo, hi)) => {
                let k = ((lo - base) / TAU).ceil();
                let mut th = base + k * TAU;
                if th <= lo {
                    th += TAU;
                }
                (th > lo && th < hi).then_some(th)
            }
        }
    }

    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.r(theta);
        [r * theta.cos(), r * theta.sin()]
    }

    /// `ċ(θ)`.
    pub fn tangent(&self, theta: f64) -> [f64; 2] {
        let (r, rd) = (self.r(theta), self.r_dot(theta));
        let (s, c) = theta.sin_cos();
        [rd * c - r * s, rd * s + r * c]
    }

    /// Sampled check that `r > 0` and that `r_dot`, `r_ddot` agree with
    /// central differences of `r` to `rel_tol`.
    pub fn check_derivatives(&self, samples: usize, rel_tol: f64) -> bool {
        let (lo, hi) = self.theta_range.unwrap_or((-PI, PI));
        let h = 1e-5;
        (1..=samples).all(|k| {
            let th = lo + (hi - lo) * k as f64 / (samples + 1) as f64;
            let r = self.r(th);
            let d1 = (self.r(th + h) - self.r(th - h)) / (2.0 * h);
            let d2 = (self.r(th + h) - 2.0 * r + self.r(th - h)) / (h * h);
            let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
            r > 0.0 && close(self.r_dot(th), d1, rel_tol) && close(self.r_ddot(th), d2, 1e3 * rel_tol)
        })
    }
}

/// Gauge of the region bounded by a polar curve: `‖v‖ = |v| / r(θ(v))` on
/// the union of rays with angle in the curve's interval.
pub fn gauge_from_curve(curve: &PolarCurve2D) -> GaugeNorm {
    let dom_curve = curve.clone();
    let domain = ConicDomainV::new(2, move |v| dom_curve.angle_of(v).is_some());
    let c = curve.clone();
    GaugeNorm {
        domain,
        value: Arc::new(move |v| {
            let th = c.angle_of(v).ok_or_else(|| Error::OutsideCone { v: v.to_vec() })?;
            Ok(norm(v) / c.r(th))
        }),
        source: GaugeSource::IndicatrixCurve2D,
    }
}

/// Gauge `inf{λ > 0 : v/λ ∈ B}` of a ball given by a membership predicate.
///
/// Directions along which no boundary crossing is found are reported as
/// [`Error::DegenerateDirection`].
pub fn gauge_from_ball(
    dimension: usize,
    member: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    cone: ConicDomainV,
) -> Result<GaugeNorm> {
    check_dim(dimension, cone.dimension())?;
    let member = Arc::new(member);
    Ok(GaugeNorm {
        domain: cone,
        value: Arc::new(move |v| {
            let scaled = |lam: f64| -> f64 {
                let p: Vec<f64> = v.iter().map(|x| x / lam).collect();
                if member(&p) {
                    1.0
                } else {
                    -1.0
                }
            };
            ray_root(scaled, norm(v).max(f64::MIN_POSITIVE)).map_err(|e| match e {
                Error::NoBracket { .. } => Error::DegenerateDirection { v: v.to_vec() },
                other => other,
            })
        }),
        source: GaugeSource::BallMembershipPredicate,
    })
}

/// `ĝ(θ) = (2ṙ² + r(r − r̈)) / √(r² + ṙ²)`; its sign is the convexity sign of
/// the curve at `c(θ)`.
pub fn curve_convexity(curve: &PolarCurve2D, theta: f64) -> f64 {
    let r = curve.r(theta);
    let rd = curve.r_dot(theta);
    let rdd = curve.r_ddot(theta);
    (2.0 * rd * rd + r * (r - rdd)) / (r * r + rd * rd).sqrt()
}

/// Finite-difference Hessian of `‖·‖²/2` at `v`.
pub fn fundamental_tensor_norm(norm_b: &GaugeNorm, v: &[f64]) -> Result<SymBilinearForm> {
    norm_b.value(v)?;
    fd_hessian(|u| norm_b.energy_or_nan(u), v, norm(v))
}

/// `g_v(v, ·)`, the gradient of `‖·‖²/2` at `v` (one derivative less than
/// the full tensor, hence more accurate).
pub fn tensor_row_norm(norm_b: &GaugeNorm, v: &[f64]) -> Result<Vec<f64>> {
    norm_b.value(v)?;
    fd_gradient(|u| norm_b.energy_or_nan(u), v, norm(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallDirection {
    Forward,
    Backward,
}

/// Membership of `probe` in the affine ball `B^±_center(radius)`.
pub fn affine_ball(
    norm_b: &GaugeNorm,
    center: &[f64],
    radius: f64,
    direction: BallDirection,
    probe: &[f64],
) -> bool {
    let d = match direction {
        BallDirection::Forward => numkernel::sub(probe, center),
        BallDirection::Backward => numkernel::sub(center, probe),
    };
    match norm_b.value(&d) {
        Ok(x) => x < radius,
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleReport {
    /// Equality within slack.
    Holds,
    HoldsStrict,
    Violated,
    NotComparable,
}

/// True when every sampled point `t v1 + (1 − t) v2` of the segment lies in
/// the domain; on such pairs a strongly convex gauge satisfies the strict
/// triangle inequality.
pub fn segment_in_domain(norm_b: &GaugeNorm, v1: &[f64], v2: &[f64]) -> bool {
    v1.len() == v2.len()
        && numkernel::simpson_nodes(0.0, 1.0, SEGMENT_SAMPLES)
            .into_iter()
            .all(|t| {
                let p: Vec<f64> = v1.iter().zip(v2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                norm_b.contains(&p)
            })
}

/// Compares `‖v1 + v2‖` with `‖v1‖ + ‖v2‖` (slack `1e-10` relative).
///
/// The pair is comparable when `v1`, `v2` and `v1 + v2` lie in the domain.
/// The segment between `v1` and `v2` may leave it; that is exactly how the
/// inequality can fail for convex indicatrices (see [`segment_in_domain`]).
pub fn triangle_report(norm_b: &GaugeNorm, v1: &[f64], v2: &[f64]) -> TriangleReport {
    if v1.len() != v2.len() {
        return TriangleReport::NotComparable;
    }
    let sum = numkernel::add(v1, v2);
    let (Ok(n1), Ok(n2), Ok(ns)) = (norm_b.value(v1), norm_b.value(v2), norm_b.value(&sum)) else {
        return TriangleReport::NotComparable;
    };
    let rhs = n1 + n2;
    let slack = 1e-10 * rhs.max(1.0);
    if ns > rhs + slack {
        TriangleReport::Violated
    } else if ns < rhs - slack {
        TriangleReport::HoldsStrict
    } else {
        TriangleReport::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FundamentalInequality {
    Holds,
    Equality,
    Violated,
}

/// Compares `g_{v1}(v1, v2)` with `‖v1‖‖v2‖` (equality band `1e-9` relative).
pub fn fundamental_inequality_check(
    norm_b: &GaugeNorm,
    v1: &[f64],
    v2: &[f64],
) -> Result<FundamentalInequality> {
    let row = tensor_row_norm(norm_b, v1)?;
    let lhs = numkernel::dot(&row, v2);
    let rhs = norm_b.value(v1)? * norm_b.value(v2)?;
    let band = 1e-9 * rhs.abs().max(1.0);
    Ok(if (lhs - rhs).abs() <= band {
        FundamentalInequality::Equality
    } else if lhs < rhs {
        FundamentalInequality::Holds
    } else {
        FundamentalInequality::Violated
    })
}

/// Curves and gauges of the standard planar examples.
pub mod catalog {
    use super::*;

    /// Unit circle (Euclidean norm).
    pub fn circle() -> PolarCurve2D {
        PolarCurve2D::new(|_| 1.0, |_| 0.0, |_| 0.0, None).expect("valid curve")
    }

    /// Closed curve `r(θ) = 1 + a cos(kθ)`, `|a| < 1`; concave near the
    /// minima of `r` once `a k²` is large enough.
    pub fn cosine_circle(a: f64, k: f64) -> Result<PolarCurve2D> {
        if !(a.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("need |a| < 1, got {a}")));
        }
        PolarCurve2D::new(
            move |t| 1.0 + a * (k * t).cos(),
            move |t| -a * k * (k * t).sin(),
            move |t| -a * k * k * (k * t).cos(),
            None,
        )
    }

    /// Archimedean spiral `c(θ) = θ(cos θ, sin θ)` on `(ε, 2π − ε)`.
    pub fn spiral(epsilon: f64) -> Result<PolarCurve2D> {
        if !(epsilon > 0.0 && epsilon < PI) {
            return Err(Error::InvalidArgument(format!(
                "spiral requires 0 < ε < π, got {epsilon}"
            )));
        }
        PolarCurve2D::new(|t| t, |_| 1.0, |_| 0.0, Some((epsilon, TAU - epsilon)))
    }

    /// Hyperbola branch `(sinh t, cosh t)` on `(π/4, 3π/4)`; its gauge is the
    /// Lorentzian length `√(y² − x²)` of future timelike vectors.
    pub fn lorentz_hyperbola() -> PolarCurve2D {
        PolarCurve2D::new(
            |t| 1.0 / (-(2.0 * t).cos()).sqrt(),
            |t| {
                let c = -(2.0 * t).cos();
                -(2.0 * t).sin() * c.powf(-1.5)
            },
            |t| {
                let c = -(2.0 * t).cos();
                let s2 = (2.0 * t).sin();
                2.0 * c * c.powf(-1.5) + 3.0 * s2 * s2 * c.powf(-2.5)
            },
            Some((FRAC_PI_4, 3.0 * FRAC_PI_4)),
        )
        .expect("valid curve")
    }

    /// Parabola `(t, 1 − t²)` on `(−π/2, 3π/2)`; every direction except the
    /// negative y axis is in the domain.
    pub fn parabola() -> PolarCurve2D {
        // r = 2 / (S + Q), Q = √(4 − 3S²)
        let parts = |t: f64| {
            let (s, c) = t.sin_cos();
            let q = (4.0 - 3.0 * s * s).sqrt();
            let q1 = -3.0 * s * c / q;
            let q2 = -3.0 * (c * c - s * s) / q - 9.0 * s * s * c * c / (q * q * q);
            (s + q, c + q1, -s + q2)
        };
        PolarCurve2D::new(
            move |t| 2.0 / parts(t).0,
            move |t| {
                let (d, d1, _) = parts(t);
                -2.0 * d1 / (d * d)
            },
            move |t| {
                let (d, d1, d2) = parts(t);
                -2.0 * d2 / (d * d) + 4.0 * d1 * d1 / (d * d * d)
            },
            Some((-FRAC_PI_2, 3.0 * FRAC_PI_2)),
        )
        .expect("valid curve")
    }

    /// Parabola branch `(t, √(1 − t))`, `t < 1`, on `(0, π)`; domain is the
    /// open upper half plane.
    pub fn half_plane_parabola() -> PolarCurve2D {
        // r = 2 / (C + P), P = √(1 + 3S²)
        let parts = |t: f64| {
            let (s, c) = t.sin_cos();
            let p = (1.0 + 3.0 * s * s).sqrt();
            let p1 = 3.0 * s * c / p;
            let p2 = 3.0 * (c * c - s * s) / p - 9.0 * s * s * c * c / (p * p * p);
            (c + p, -s + p1, -c + p2)
        };
        PolarCurve2D::new(
            move |t| 2.0 / parts(t).0,
            move |t| {
                let (d, d1, _) = parts(t);
                -2.0 * d1 / (d * d)
            },
            move |t| {
                let (d, d1, d2) = parts(t);
                -2.0 * d2 / (d * d) + 4.0 * d1 * d1 / (d * d * d)
            },
            Some((0.0, PI)),
        )
        .expect("valid curve")
    }

    /// `√(y² − x²)` on future timelike vectors `|x| < y`.
    pub fn lorentz_gauge() -> GaugeNorm {
        GaugeNorm::closed_form(ConicDomainV::new(2, |v| v[0].abs() < v[1]), |v| {
            (v[1] * v[1] - v[0] * v[0]).sqrt()
        })
    }

    /// Closed form of the [`parabola`] gauge: `(y + √(y² + 4x²)) / 2`.
    pub fn parabola_gauge() -> GaugeNorm {
        GaugeNorm::closed_form(
            ConicDomainV::new(2, |v| !(v[0] == 0.0 && v[1] <= 0.0)),
            |v| 0.5 * (v[1] + (v[1] * v[1] + 4.0 * v[0] * v[0]).sqrt()),
        )
    }

    /// Closed form of the [`half_plane_parabola`] gauge: `(x + √(x² + 4y²)) / 2`.
    pub fn half_plane_parabola_gauge() -> GaugeNorm {
        GaugeNorm::closed_form(ConicDomainV::new(2, |v| v[1] > 0.0), |v| {
            0.5 * (v[0] + (v[0] * v[0] + 4.0 * v[1] * v[1]).sqrt())
        })
    }

    /// Parabola ball `{y ≤ 1 − x²}` with the negative y axis removed from the cone.
    pub fn parabola_ball() -> GaugeNorm {
        gauge_from_ball(
            2,
            |p| p[1] <= 1.0 - p[0] * p[0],
            ConicDomainV::new(2, |v| !(v[0] == 0.0 && v[1] <= 0.0)),
        )
        .expect("dimensions agree")
    }
}

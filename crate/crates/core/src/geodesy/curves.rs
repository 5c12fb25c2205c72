use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metrics::ConicMetric;
use crate::numkernel::{self, integrate_1d, simpson_nodes, DEFAULT_QUADRATURE_NODES};

type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
struct Piece {
    a: f64,
    b: f64,
    position: PathFn,
    velocity: PathFn,
}

/// A piecewise-smooth curve: smooth pieces on consecutive parameter intervals.
///
/// Velocities are taken inside each piece, so at a break point both the left
/// and the right derivative are sampled.
#[derive(Clone)]
pub struct Curve {
    pieces: Vec<Piece>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let breaks: Vec<(f64, f64)> = self.pieces.iter().map(|p| (p.a, p.b)).collect();
        f.debug_struct("Curve").field("pieces", &breaks).finish()
    }
}

impl Curve {
    pub fn smooth(
        a: f64,
        b: f64,
        position: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        velocity: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty parameter interval [{a}, {b}]")));
        }
        Ok(Self {
            pieces: vec![Piece {
                a,
                b,
                position: Arc::new(position),
                velocity: Arc::new(velocity),
            }],
        })
    }

    /// Straight segment from `p` to `q` on `[0, 1]`.
    pub fn segment(p: &[f64], q: &[f64]) -> Result<Self> {
        Self::polyline(&[p.to_vec(), q.to_vec()], 0.0, 1.0)
    }

    /// Polygon through `points`, each edge given an equal share of `[a, b]`.
    pub fn polyline(points: &[Vec<f64>], a: f64, b: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("a polyline needs at least two points".into()));
        }
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty parameter interval [{a}, {b}]")));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: points.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
            });
        }
        let k = points.len() - 1;
        let dt = (b - a) / k as f64;
        let pieces = points
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let t0 = a + i as f64 * dt;
                let p0 = w[0].clone();
                let vel = numkernel::scale(1.0 / dt, &numkernel::sub(&w[1], &w[0]));
                let v2 = vel.clone();
                Piece {
                    a: t0,
                    b: if i + 1 == k { b } else { t0 + dt },
                    position: Arc::new(move |t| numkernel::axpy(t - t0, &v2, &p0)),
                    velocity: Arc::new(move |_| vel.clone()),
                }
            })
            .collect();
        Ok(Self { pieces })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.pieces[0].a, self.pieces[self.pieces.len() - 1].b)
    }

    fn piece_at(&self, t: f64) -> &Piece {
        self.pieces
            .iter()
            .find(|p| t <= p.b)
            .unwrap_or(&self.pieces[self.pieces.len() - 1])
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        (self.piece_at(t).position)(t)
    }

    /// Left velocity at break points.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        (self.piece_at(t).velocity)(t)
    }

    /// Checks admissibility at the quadrature nodes of every piece and
    /// integrates `integrand(F(γ̇))` piece by piece.
    fn integrate(&self, m: &ConicMetric, nodes: usize, integrand: impl Fn(f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for piece in &self.pieces {
            for t in simpson_nodes(piece.a, piece.b, nodes) {
                let x = (piece.position)(t);
                let v = (piece.velocity)(t);
                if !m.in_domain(&x, &v) || v.iter().all(|&c| c == 0.0) {
                    return Err(Error::NotAdmissible { parameter: t });
                }
            }
            total += integrate_1d(
                |t| match m.eval(&(piece.position)(t), &(piece.velocity)(t)) {
                    Ok(f) => integrand(f),
                    Err(_) => f64::NAN,
                },
                piece.a,
                piece.b,
                nodes,
            )?;
        }
        Ok(total)
    }
}

/// `ℓ_F(γ) = ∫ F(γ̇)`, Simpson with `nodes` points per piece (65 by default).
pub fn curve_length(m: &ConicMetric, curve: &Curve, nodes: Option<usize>) -> Result<f64> {
    curve.integrate(m, nodes.unwrap_or(DEFAULT_QUADRATURE_NODES), |f| f)
}

/// `E_F(γ) = ∫ F(γ̇)²`.
pub fn energy(m: &ConicMetric, curve: &Curve, nodes: Option<usize>) -> Result<f64> {
    curve.integrate(m, nodes.unwrap_or(DEFAULT_QUADRATURE_NODES), |f| f * f)
}

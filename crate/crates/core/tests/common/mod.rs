#![allow(dead_code)]

use finslerkit::combinators::{self, LCombiner, NamedFamily, PhiProfile};
use finslerkit::geodesy::SeparationGraph;
use finslerkit::metrics::{ChartManifold, ConicMetric, OneFormAtom, RiemannAtom};
use finslerkit::numkernel::SymBilinearForm;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Hessian of `w ↦ F(p, w)²/2` at `v`: four-point mixed stencil, Richardson-combined
/// over `h` and `h/2`, with `h` halved from `2e-3 |v|` until successive estimates
/// settle. Independent of the library's FD code. `None` when a probe leaves the domain.
pub fn fd_oracle(m: &ConicMetric, p: &[f64], v: &[f64]) -> Option<SymBilinearForm> {
    fd_oracle_with_estimate(m, p, v).map(|(g, _)| g)
}

/// As [`fd_oracle`], also returning the relative discrepancy between the two finest
/// accepted estimates.
pub fn fd_oracle_with_estimate(m: &ConicMetric, p: &[f64], v: &[f64]) -> Option<(SymBilinearForm, f64)> {
    let n = v.len();
    let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let energy = |w: &[f64]| -> Option<f64> {
        if !m.in_domain(p, w) {
            return None;
        }
        m.eval(p, w).ok().map(|f| 0.5 * f * f)
    };
    let stencil = |h: f64| -> Option<Vec<f64>> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let probe = |si: f64, sj: f64| {
                    let mut w = v.to_vec();
                    w[i] += si * h;
                    w[j] += sj * h;
                    energy(&w)
                };
                let val = (probe(1.0, 1.0)? - probe(1.0, -1.0)? - probe(-1.0, 1.0)? + probe(-1.0, -1.0)?)
                    / (4.0 * h * h);
                out[i * n + j] = val;
                out[j * n + i] = val;
            }
        }
        Some(out)
    };
    let rel = |a: &[f64], b: &[f64]| {
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        d / b.iter().map(|x| x.abs()).fold(0.0, f64::max)
    };
    let mut h = 2e-3 * scale;
    let mut coarse = stencil(h)?;
    let mut fine = stencil(h / 2.0)?;
    let mut prev: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let mut best = (f64::INFINITY, prev.clone());
    for _ in 0..6 {
        h /= 2.0;
        coarse = fine;
        fine = match stencil(h / 2.0) {
            Some(f) => f,
            None => break,
        };
        let next: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
        let d = rel(&prev, &next);
        if d < best.0 {
            best = (d, next.clone());
        }
        if d < 1e-9 {
            break;
        }
        prev = next;
    }
    Some((SymBilinearForm::from_row_slice(n, &best.1), best.0))
}

/// Bellman–Ford over every ordered node pair, using only `edge_weight`.
pub fn bellman_ford(graph: &SeparationGraph, source: usize) -> Vec<f64> {
    let k = graph.node_count();
    let mut edges = Vec::new();
    for a in 0..k {
        for b in 0..k {
            if let Some(w) = graph.edge_weight(a, b) {
                edges.push((a, b, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; k];
    dist[source] = 0.0;
    for _ in 0..k {
        let mut changed = false;
        for &(a, b, w) in &edges {
            if dist[a] + w < dist[b] {
                dist[b] = dist[a] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn euclid(n: usize) -> ConicMetric {
    ConicMetric::riemannian(ChartManifold::euclidean(n), RiemannAtom::euclidean(n))
}

/// A position-dependent Riemannian metric, positive definite everywhere.
pub fn warped(n: usize) -> ConicMetric {
    let atom = RiemannAtom::new(move |p: &[f64]| {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0 + 0.2 * p[(i + 1) % n].sin().powi(2);
        }
        d[1] = 0.1 * p[0].cos();
        d[n] = d[1];
        SymBilinearForm::from_row_slice(n, &d)
    });
    ConicMetric::riemannian(ChartManifold::euclidean(n), atom)
}

/// `β = b (cos(0.3 x₂), sin(0.3 x₂), 0, …)`, of Euclidean norm `b`.
pub fn rotating_form(n: usize, b: f64) -> OneFormAtom {
    OneFormAtom::new(move |p: &[f64]| {
        let mut c = vec![0.0; n];
        let t = 0.3 * p[1];
        c[0] = b * t.cos();
        c[1] = b * t.sin();
        c
    })
}

pub fn constant_form(n: usize, b: f64) -> OneFormAtom {
    let mut c = vec![0.0; n];
    c[0] = b;
    OneFormAtom::constant(c)
}

pub fn named(family: NamedFamily, f0: &ConicMetric, beta: &OneFormAtom) -> ConicMetric {
    combinators::named_family(family, f0, beta).unwrap().0
}

/// Position-dependent Randers metric `F₀ + β` with `F₀` warped.
pub fn position_randers(n: usize, b: f64) -> ConicMetric {
    combinators::phi_combine(&warped(n), &rotating_form(n, b), &PhiProfile::randers()).unwrap()
}

pub fn sum_metric(n: usize) -> ConicMetric {
    combinators::combine(
        &LCombiner::sum(2, 1),
        &[warped(n), position_randers(n, 0.4)],
        &[constant_form(n, 0.3)],
    )
    .unwrap()
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::metrics::ConicMetric;
use crate::minkowski::{BallDirection, SEGMENT_SAMPLES};
use crate::numkernel::{self, integrate_1d, simpson_nodes};

/// Axis-aligned box `[lo, hi]` in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("grid box needs lo < hi in every axis".into()));
        }
        Ok(Self { lo, hi })
    }
}

/// Weights of the edges leaving each node, indexed by offset.
#[derive(Debug, Clone)]
enum EdgeWeights {
    /// Translation-invariant metric: one weight per offset, shared by all nodes.
    Uniform(Vec<Option<f64>>),
    /// `weights[node][offset]`.
    PerNode(Vec<Vec<Option<f64>>>),
}

/// A regular grid whose directed edges join each node to every node within
/// `neighbor_radius` steps per axis, weighted by the F-length of the straight
/// segment. Inadmissible edges are stored as `None`.
#[derive(Debug, Clone)]
pub struct SeparationGraph {
    grid: GridBox,
    resolution: usize,
    neighbor_radius: usize,
    offsets: Vec<Vec<i64>>,
    weights: EdgeWeights,
}

/// Graph separation between two nodes. `value` is infinite exactly when the
/// witness path is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub value: f64,
    pub witness_path: Vec<usize>,
}

fn segment_weight(m: &ConicMetric, x: &[f64], delta: &[f64]) -> Option<f64> {
    let nodes = simpson_nodes(0.0, 1.0, SEGMENT_SAMPLES);
    for &t in &nodes {
        if !m.in_domain(&numkernel::axpy(t, delta, x), delta) {
            return None;
        }
    }
    integrate_1d(
        |t| m.eval_or_nan(&numkernel::axpy(t, delta, x), delta),
        0.0,
        1.0,
        SEGMENT_SAMPLES,
    )
    .ok()
}

/// Builds the grid graph over `grid` with `resolution` nodes per axis.
///
/// Edge weights are computed concurrently; for translation-invariant metrics
/// a single weight per offset is computed.
pub fn build_separation_graph(
    m: &ConicMetric,
    grid: &GridBox,
    resolution: usize,
    neighbor_radius: usize,
) -> Result<SeparationGraph> {
    check_dim(m.dimension(), grid.lo.len())?;
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    if neighbor_radius < 1 {
        return Err(Error::InvalidArgument("neighbor radius must be at least 1".into()));
    }
    let n = m.dimension();
    let r = neighbor_radius.min(resolution - 1) as i64;
    let mut offsets = vec![vec![]];
    for _ in 0..n {
        offsets = offsets
            .into_iter()
            .flat_map(|o: Vec<i64>| {
                (-r..=r).map(move |k| {
                    let mut o = o.clone();
                    o.push(k);
                    o
                })
            })
            .collect();
    }
    offsets.retain(|o| o.iter().any(|&k| k != 0));
    let mut g = SeparationGraph {
        grid: grid.clone(),
        resolution,
        neighbor_radius: r as usize,
        offsets,
        weights: EdgeWeights::Uniform(vec![]),
    };
    let spacing = g.spacing();
    let delta = |o: &[i64]| -> Vec<f64> { o.iter().zip(&spacing).map(|(&k, h)| k as f64 * h).collect() };
    g.weights = if m.is_translation_invariant() {
        let x = g.node_point(0);
        EdgeWeights::Uniform(
            g.offsets
                .par_iter()
                .map(|o| segment_weight(m, &x, &delta(o)))
                .collect(),
        )
    } else {
        EdgeWeights::PerNode(
            (0..g.node_count())
                .into_par_iter()
                .map(|i| {
                    let x = g.node_point(i);
                    let idx = g.node_multi_index(i);
                    g.offsets
                        .iter()
                        .map(|o| {
                            if g.shift(&idx, o, 1).is_none() {
                                None
                            } else {
                                segment_weight(m, &x, &delta(o))
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    };
    Ok(g)
}

impl SeparationGraph {
    pub fn dimension(&self) -> usize {
        self.grid.lo.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn neighbor_radius(&self) -> usize {
        self.neighbor_radius
    }

    pub fn grid(&self) -> &GridBox {
        &self.grid
    }

    pub fn node_count(&self) -> usize {
        self.resolution.pow(self.dimension() as u32)
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.grid
            .lo
            .iter()
            .zip(&self.grid.hi)
            .map(|(a, b)| (b - a) / (self.resolution - 1) as f64)
            .collect()
    }

    /// Per-axis grid indices of a node (first axis varies fastest).
    pub fn node_multi_index(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        (0..self.dimension())
            .map(|_| {
                let i = rest % self.resolution;
                rest /= self.resolution;
                i
            })
            .collect()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.resolution + i)
    }

    fn shift(&self, idx: &[usize], o: &[i64], sign: i64) -> Option<usize> {
        let mut out = Vec::with_capacity(idx.len());
        for (&i, &k) in idx.iter().zip(o) {
            let j = i as i64 + sign * k;
            if j < 0 || j >= self.resolution as i64 {
                return None;
            }
            out.push(j as usize);
        }
        Some(self.flat(&out))
    }

    pub fn node_point(&self, node: usize) -> Vec<f64> {
        let h = self.spacing();
        self.node_multi_index(node)
            .iter()
            .zip(self.grid.lo.iter().zip(&h))
            .map(|(&i, (lo, h))| lo + i as f64 * h)
            .collect()
    }

    /// The node closest to `point` (coordinates clamped to the box).
    pub fn nearest_node(&self, point: &[f64]) -> Result<usize> {
        check_dim(self.dimension(), point.len())?;
        let h = self.spacing();
        let idx: Vec<usize> = point
            .iter()
            .zip(self.grid.lo.iter().zip(&h))
            .map(|(x, (lo, h))| ((x - lo) / h).round().clamp(0.0, (self.resolution - 1) as f64) as usize)
            .collect();
        Ok(self.flat(&idx))
    }

    fn weight(&self, node: usize, offset: usize) -> Option<f64> {
        match &self.weights {
            EdgeWeights::Uniform(w) => w[offset],
            EdgeWeights::PerNode(w) => w[node][offset],
        }
    }

    /// Weight of the edge from `from` to `to`, if the edge exists and is admissible.
    pub fn edge_weight(&self, from: usize, to: usize) -> Option<f64> {
        let a = self.node_multi_index(from);
        let b = self.node_multi_index(to);
        let o: Vec<i64> = a.iter().zip(&b).map(|(&x, &y)| y as i64 - x as i64).collect();
        let k = self.offsets.iter().position(|p| *p == o)?;
        self.weight(from, k)
    }

    /// Number of admissible edges.
    pub fn admissible_edge_count(&self) -> usize {
        (0..self.node_count())
            .map(|i| {
                let idx = self.node_multi_index(i);
                (0..self.offsets.len())
                    .filter(|&k| self.shift(&idx, &self.offsets[k], 1).is_some() && self.weight(i, k).is_some())
                    .count()
            })
            .sum()
    }

    /// Dijkstra from `source`; `Forward` follows edges, `Backward` follows
    /// them in reverse. Returns distances and predecessors.
    fn dijkstra(&self, source: usize, direction: BallDirection, target: Option<usize>) -> (Vec<f64>, Vec<usize>) {
        let count = self.node_count();
        let mut dist = vec![f64::INFINITY; count];
        let mut prev = vec![usize::MAX; count];
        let mut done = vec![false; count];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry { dist: 0.0, node: source });
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if Some(node) == target {
                break;
            }
            let idx = self.node_multi_index(node);
            for (k, o) in self.offsets.iter().enumerate() {
                let (next, w) = match direction {
                    BallDirection::Forward => match self.shift(&idx, o, 1) {
                        Some(nb) => (nb, self.weight(node, k)),
                        None => continue,
                    },
                    BallDirection::Backward => match self.shift(&idx, o, -1) {
                        Some(nb) => (nb, self.weight(nb, k)),
                        None => continue,
                    },
                };
                let Some(w) = w else { continue };
                let nd = d + w;
                if nd < dist[next] || (nd == dist[next] && node < prev[next]) {
                    dist[next] = nd;
                    prev[next] = node;
                    heap.push(Entry { dist: nd, node: next });
                }
            }
        }
        (dist, prev)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "node {node} out of range (graph has {} nodes)",
                self.node_count()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    dist: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed for a min-heap; ties go to the smaller node index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest admissible discrete path from `p` to `q`.
pub fn separation(graph: &SeparationGraph, p: usize, q: usize) -> Result<SeparationResult> {
    graph.check_node(p)?;
    graph.check_node(q)?;
    let (dist, prev) = graph.dijkstra(p, BallDirection::Forward, Some(q));
    if !dist[q].is_finite() {
        return Ok(SeparationResult {
            value: f64::INFINITY,
            witness_path: vec![],
        });
    }
    let mut path = vec![q];
    let mut cur = q;
    while cur != p {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Ok(SeparationResult {
        value: dist[q],
        witness_path: path,
    })
}

/// Nodes reachable from `p` by admissible discrete paths (including `p`).
pub fn reachability(graph: &SeparationGraph, p: usize) -> Result<Vec<usize>> {
    graph.check_node(p)?;
    let (dist, _) = graph.dijkstra(p, BallDirection::Forward, None);
    Ok((0..dist.len()).filter(|&i| dist[i].is_finite()).collect())
}

/// Nodes at separation `< r` from `p` (forward) or to `p` (backward).
pub fn df_ball(graph: &SeparationGraph, p: usize, r: f64, direction: BallDirection) -> Result<Vec<usize>> {
    graph.check_node(p)?;
    let (dist, _) = graph.dijkstra(p, direction, None);
    Ok((0..dist.len()).filter(|&i| dist[i] < r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ChartManifold, OneFormAtom, RiemannAtom};
    use crate::minkowski::catalog;

    fn euclid() -> ConicMetric {
        ConicMetric::riemannian(ChartManifold::euclidean(2), RiemannAtom::euclidean(2))
    }

    fn lorentz() -> ConicMetric {
        ConicMetric::minkowski(ChartManifold::euclidean(2), catalog::lorentz_gauge()).unwrap()
    }

    #[test]
    fn euclidean_grid() {
        let bx = GridBox::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap();
        let g = build_separation_graph(&euclid(), &bx, 41, 3).unwrap();
        let p = g.nearest_node(&[0.0, 0.0]).unwrap();
        let q = g.nearest_node(&[3.0, 4.0]).unwrap();
        let s = separation(&g, p, q).unwrap();
        assert!((s.value - 5.0).abs() < 0.1, "{}", s.value);
        assert_eq!(s.witness_path.first(), Some(&p));
        assert_eq!(s.witness_path.last(), Some(&q));
        assert_eq!(reachability(&g, p).unwrap().len(), g.node_count());
        let back = separation(&g, q, p).unwrap();
        assert!((back.value - s.value).abs() < 1e-12);
    }

    #[test]
    fn dy_graph() {
        let m = ConicMetric::positive_one_form(
            ChartManifold::euclidean(2),
            OneFormAtom::constant(vec![0.0, 1.0]),
        );
        let bx = GridBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let g = build_separation_graph(&m, &bx, 11, 2).unwrap();
        let p = g.nearest_node(&[0.5, 0.5]).unwrap();
        let up = g.nearest_node(&[0.6, 0.6]).unwrap();
        let flat = g.nearest_node(&[0.6, 0.5]).unwrap();
        assert!(g.edge_weight(p, up).is_some());
        assert!(g.edge_weight(p, flat).is_none());
        let reach = reachability(&g, p).unwrap();
        let py = g.node_point(p)[1];
        assert!(reach.iter().all(|&i| i == p || g.node_point(i)[1] > py));
    }

    #[test]
    fn lorentz_cone() {
        let bx = GridBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let g = build_separation_graph(&lorentz(), &bx, 21, 10).unwrap();
        let p = g.nearest_node(&[0.0, 0.0]).unwrap();
        let a = g.nearest_node(&[0.1, 0.2]).unwrap();
        let b = g.nearest_node(&[0.2, 0.2]).unwrap();
        assert!(g.edge_weight(p, a).is_some());
        assert!(g.edge_weight(p, b).is_none());
        let out = g.nearest_node(&[1.0, 0.5]).unwrap();
        let s = separation(&g, p, out).unwrap();
        assert!(s.value.is_infinite() && s.witness_path.is_empty());
    }

    #[test]
    fn backward_ball_mirrors_forward() {
        let bx = GridBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = build_separation_graph(&lorentz(), &bx, 11, 3).unwrap();
        let p = g.nearest_node(&[0.0, 0.0]).unwrap();
        let fwd = df_ball(&g, p, 0.5, BallDirection::Forward).unwrap();
        let bwd = df_ball(&g, p, 0.5, BallDirection::Backward).unwrap();
        let mirror = |i: usize| {
            let x = g.node_point(i);
            g.nearest_node(&[x[0], -x[1]]).unwrap()
        };
        let mut mirrored: Vec<usize> = fwd.iter().map(|&i| mirror(i)).collect();
        mirrored.sort_unstable();
        assert_eq!(mirrored, bwd);
    }
}

//! The commands behind `finslerkit <command>`, each producing a CSV table
//! and a small summary.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::config::{build_metric, BuiltMetric, GridSpec, MetricSpec, RunConfig};
use crate::combinators;
use crate::error::{Error, Result};
use crate::geodesy::{self, GeodesicState, GridBox, SeparationGraph};
use crate::metrics::ConicMetric;
use crate::minkowski::{self, BallDirection, ConicDomainV, GaugeNorm};
use crate::numkernel::{self, eigen_classify, DEFAULT_EIGEN_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Eval,
    Tensor,
    Classify,
    Scan,
    Detcheck,
    Geodesic,
    Expmap,
    Gauss,
    Separation,
    Ball,
    Reach,
    Indicatrix,
    Oracle,
}

impl Command {
    pub const ALL: [Command; 13] = [
        Command::Eval,
        Command::Tensor,
        Command::Classify,
        Command::Scan,
        Command::Detcheck,
        Command::Geodesic,
        Command::Expmap,
        Command::Gauss,
        Command::Separation,
        Command::Ball,
        Command::Reach,
        Command::Indicatrix,
        Command::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Tensor => "tensor",
            Command::Classify => "classify",
            Command::Scan => "scan",
            Command::Detcheck => "detcheck",
            Command::Geodesic => "geodesic",
            Command::Expmap => "expmap",
            Command::Gauss => "gauss",
            Command::Separation => "separation",
            Command::Ball => "ball",
            Command::Reach => "reach",
            Command::Indicatrix => "indicatrix",
            Command::Oracle => "oracle",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command {s:?}")))
    }
}

/// Output of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub summary: Map<String, Value>,
}

enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

struct Table {
    out: String,
    columns: usize,
}

impl Table {
    fn new(header: &[String]) -> Self {
        Self {
            out: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(x) => format!("{x:.16e}"),
                Cell::I(i) => i.to_string(),
                Cell::S(s) => s,
            })
            .collect();
        let _ = writeln!(self.out, "{}", line.join(","));
    }
}

fn cols(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn header(parts: &[&[String]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn floats(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|&x| Cell::F(x)).collect()
}

fn required<'a, T>(x: &'a Option<T>, field: &str, cmd: Command) -> Result<&'a T> {
    x.as_ref().ok_or_else(|| Error::Validation {
        path: format!("run.{field}"),
        constraint: format!("required by `{}`", cmd.name()),
    })
}

fn status(r: &Result<impl Sized>) -> &'static str {
    match r {
        Ok(_) => "ok",
        Err(e) => e.code(),
    }
}

/// Fails with the first error when every row failed, so that a single
/// out-of-domain request surfaces as a domain error.
fn all_failed<T>(rows: &[Result<T>]) -> Result<()> {
    match rows.iter().find_map(|r| r.as_ref().err()) {
        Some(e) if !rows.is_empty() && rows.iter().all(Result::is_err) => Err(e.clone()),
        _ => Ok(()),
    }
}

struct Ctx<'a> {
    cmd: Command,
    built: BuiltMetric,
    run: &'a RunConfig,
    seed: u64,
    tolerance: f64,
}

impl Ctx<'_> {
    fn m(&self) -> &ConicMetric {
        &self.built.metric
    }

    fn n(&self) -> usize {
        self.built.metric.dimension()
    }

    fn base(&self) -> Vec<f64> {
        self.run.base.clone().unwrap_or_else(|| self.m().manifold().probe_point())
    }

    /// Explicit `vectors`, or `directions` deterministic unit directions.
    fn vectors_or_directions(&self, default_dirs: usize) -> Vec<Vec<f64>> {
        match &self.run.vectors {
            Some(v) => v.clone(),
            None => unit_directions(self.n(), self.run.directions.unwrap_or(default_dirs)),
        }
    }

    fn step(&self) -> f64 {
        self.run.step.unwrap_or(1e-2)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Evenly spaced angles in 2D (so the `theta` column is exact), low
/// discrepancy directions otherwise.
fn unit_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(1);
    if n == 2 {
        (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()
    } else {
        numkernel::unit_directions(n, count)
    }
}

fn angle(v: &[f64]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(std::f64::consts::TAU)
}

/// Runs `cmd`. `seed` and `tolerance` override the config values.
pub fn run_command(
    cmd: Command,
    spec: &MetricSpec,
    run: &RunConfig,
    seed: Option<u64>,
    tolerance: Option<f64>,
) -> Result<Report> {
    if let Some(t) = tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Validation {
                path: "--tolerance".into(),
                constraint: format!("must be positive and finite, got {t}"),
            });
        }
    }
    let ctx = Ctx {
        cmd,
        built: build_metric(spec, run)?,
        run,
        seed: seed.or(run.seed).unwrap_or(0),
        tolerance: tolerance.or(run.tolerance).unwrap_or(DEFAULT_EIGEN_TOLERANCE),
    };
    let (csv, mut summary) = match cmd {
        Command::Eval => eval(&ctx)?,
        Command::Tensor => tensor(&ctx)?,
        Command::Classify => classify(&ctx)?,
        Command::Scan => scan(&ctx)?,
        Command::Detcheck => detcheck(&ctx)?,
        Command::Geodesic => geodesic(&ctx)?,
        Command::Expmap => expmap(&ctx)?,
        Command::Gauss => gauss(&ctx)?,
        Command::Separation => separation(&ctx)?,
        Command::Ball => ball(&ctx)?,
        Command::Reach => reach(&ctx)?,
        Command::Indicatrix => indicatrix(&ctx)?,
        Command::Oracle => oracle(&ctx)?,
    };
    let mut head = Map::new();
    head.insert("command".into(), json!(cmd.name()));
    head.insert("metric".into(), json!(ctx.m().label()));
    head.insert("dimension".into(), json!(ctx.n()));
    head.insert("seed".into(), json!(ctx.seed));
    head.insert("tolerance".into(), json!(ctx.tolerance));
    head.append(&mut summary);
    Ok(Report { csv, summary: head })
}

type Out = Result<(String, Map<String, Value>)>;

fn summary(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn eval(c: &Ctx) -> Out {
    let base = c.base();
    let vs = required(&c.run.vectors, "vectors", c.cmd)?;
    let n = c.n();
    let results: Vec<Result<f64>> = vs.iter().map(|v| c.m().eval(&base, v)).collect();
    all_failed(&results)?;
    let mut t = Table::new(&header(&[&cols("v", n), &names(&["F", "status"])]));
    for (v, r) in vs.iter().zip(&results) {
        let mut row = floats(v);
        row.push(Cell::F(*r.as_ref().unwrap_or(&f64::NAN)));
        row.push(status(r).into());
        t.row(row);
    }
    let ok = results.iter().filter(|r| r.is_ok()).count();
    Ok((t.out, summary(vec![("rows", json!(vs.len())), ("in_domain", json!(ok))])))
}

fn tensor(c: &Ctx) -> Out {
    let base = c.base();
    let vs = required(&c.run.vectors, "vectors", c.cmd)?;
    let n = c.n();
    let results: Vec<_> = vs.iter().map(|v| c.m().tensor(&base, v)).collect();
    all_failed(&results)?;
    let g_cols: Vec<String> = (1..=n).flat_map(|i| (1..=n).map(move |j| format!("g{i}{j}"))).collect();
    let mut t = Table::new(&header(&[&cols("v", n), &g_cols, &names(&["det", "status"])]));
    for (v, r) in vs.iter().zip(&results) {
        let mut row = floats(v);
        match r {
            Ok(g) => {
                row.extend(g.matrix().transpose().iter().map(|&x| Cell::F(x)));
                row.push(Cell::F(g.determinant()));
            }
            Err(_) => row.extend((0..=n * n).map(|_| Cell::F(f64::NAN))),
        }
        row.push(status(r).into());
        t.row(row);
    }
    Ok((t.out, summary(vec![("rows", json!(vs.len()))])))
}

fn classify(c: &Ctx) -> Out {
    let base = c.base();
    let n = c.n();
    let dirs = c.vectors_or_directions(360);
    let reports: Vec<_> = dirs
        .par_iter()
        .map(|d| c.m().tensor(&base, d).and_then(|g| eigen_classify(&g, c.tolerance)))
        .collect();
    let theta: Vec<String> = if n == 2 { names(&["theta"]) } else { vec![] };
    let strong_col: Vec<String> = if c.built.strong.is_some() { names(&["in_strong_domain"]) } else { vec![] };
    let mut t = Table::new(&header(&[
        &theta,
        &cols("d", n),
        &names(&["status", "classification", "min_eigenvalue"]),
        &strong_col,
    ]));
    let (mut pd, mut inside, mut strong) = (0usize, 0usize, 0usize);
    for (d, r) in dirs.iter().zip(&reports) {
        let mut row = Vec::new();
        if n == 2 {
            row.push(Cell::F(angle(d)));
        }
        row.extend(floats(d));
        row.push(status(r).into());
        match r {
            Ok(rep) => {
                inside += 1;
                pd += rep.is_positive_definite() as usize;
                row.push(rep.classification.as_str().into());
                row.push(Cell::F(rep.min_eigenvalue));
            }
            Err(_) => {
                row.push("none".into());
                row.push(Cell::F(f64::NAN));
            }
        }
        if let Some(s) = &c.built.strong {
            let inside_strong = s(&base, d);
            strong += inside_strong as usize;
            row.push(inside_strong.into());
        }
        t.row(row);
    }
    let total = dirs.len() as f64;
    let mut s = summary(vec![
        ("directions", json!(dirs.len())),
        ("in_domain", json!(inside)),
        ("positive_definite", json!(pd)),
        ("pd_fraction", json!(pd as f64 / total)),
    ]);
    if c.built.strong.is_some() {
        s.insert("strong_domain_fraction".into(), json!(strong as f64 / total));
    }
    Ok((t.out, s))
}

fn scan(c: &Ctx) -> Out {
    let n = c.n();
    let bases = match &c.run.bases {
        Some(b) => b.clone(),
        None => c.m().manifold().sample_points(c.run.samples.unwrap_or(16)),
    };
    let dirs = c.run.directions.unwrap_or(64);
    let mut t = Table::new(&header(&[
        &cols("x", n),
        &names(&["directions", "in_domain", "positive_definite", "pd_fraction"]),
    ]));
    let (mut all_pd, mut all_in) = (0usize, 0usize);
    for p in &bases {
        let scan = crate::metrics::convexity_scan(c.m(), p, dirs, c.tolerance);
        let inside = scan.iter().filter(|(_, r)| r.is_ok()).count();
        let pd = scan
            .iter()
            .filter(|(_, r)| r.as_ref().is_ok_and(|e| e.is_positive_definite()))
            .count();
        all_pd += pd;
        all_in += inside;
        let mut row = floats(p);
        row.extend([dirs.into(), inside.into(), pd.into(), Cell::F(pd as f64 / dirs as f64)]);
        t.row(row);
    }
    Ok((
        t.out,
        summary(vec![
            ("bases", json!(bases.len())),
            ("directions_per_base", json!(dirs)),
            ("in_domain", json!(all_in)),
            ("positive_definite", json!(all_pd)),
        ]),
    ))
}

fn detcheck(c: &Ctx) -> Out {
    let (f0, beta, profile) = c.built.phi_parts.as_ref().ok_or_else(|| Error::Validation {
        path: "metric.type".into(),
        constraint: "`detcheck` needs a `phi` or `named` metric".into(),
    })?;
    let base = c.base();
    let n = c.n();
    let dirs = c.vectors_or_directions(360);
    let mut t = Table::new(&header(&[
        &cols("d", n),
        &names(&[
            "status",
            "det_direct",
            "det_formula",
            "rel_diff",
            "characterization",
            "eigen_pd",
            "agree",
        ]),
    ]));
    let (mut max_rel, mut agree, mut inside) = (0.0_f64, 0usize, 0usize);
    for d in &dirs {
        let r = c.m().tensor(&base, d).and_then(|g| {
            let direct = g.determinant();
            let formula = combinators::det_tensor_formula(f0, beta, profile, &base, d)?;
            let ch = combinators::characterization_nd(f0, beta, profile, &base, d)?;
            let pd = eigen_classify(&g, c.tolerance)?.is_positive_definite();
            Ok((direct, formula, ch, pd))
        });
        let mut row = floats(d);
        row.push(status(&r).into());
        match r {
            Ok((direct, formula, ch, pd)) => {
                inside += 1;
                let rel = (direct - formula).abs() / direct.abs().max(formula.abs()).max(f64::MIN_POSITIVE);
                max_rel = max_rel.max(rel);
                agree += (ch == pd) as usize;
                row.extend([direct.into(), formula.into(), rel.into(), ch.into(), pd.into(), (ch == pd).into()]);
            }
            Err(_) => row.extend((0..6).map(|_| Cell::F(f64::NAN))),
        }
        t.row(row);
    }
    Ok((
        t.out,
        summary(vec![
            ("directions", json!(dirs.len())),
            ("in_domain", json!(inside)),
            ("max_rel_diff", json!(max_rel)),
            ("characterization_agreements", json!(agree)),
        ]),
    ))
}

fn geodesic(c: &Ctx) -> Out {
    let base = required(&c.run.base, "base", c.cmd)?;
    let v = required(&c.run.vectors, "vectors", c.cmd)?.first().ok_or_else(|| Error::Validation {
        path: "run.vectors".into(),
        constraint: "needs one initial velocity".into(),
    })?;
    let start = GeodesicState {
        position: base.clone(),
        velocity: v.clone(),
        parameter: 0.0,
    };
    let path = geodesy::geodesic_shoot(c.m(), &start, c.run.t_end.unwrap_or(1.0), c.step())?;
    let n = c.n();
    let mut t = Table::new(&header(&[&names(&["t"]), &cols("x", n), &cols("v", n), &names(&["speed"])]));
    let mut speeds = Vec::with_capacity(path.len());
    for s in &path {
        let speed = c.m().eval(&s.position, &s.velocity).unwrap_or(f64::NAN);
        speeds.push(speed);
        let mut row = vec![Cell::F(s.parameter)];
        row.extend(floats(&s.position));
        row.extend(floats(&s.velocity));
        row.push(speed.into());
        t.row(row);
    }
    let spread = speeds.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - speeds.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        t.out,
        summary(vec![
            ("samples", json!(path.len())),
            ("end", json!(path.last().map(|s| s.position.clone()))),
            ("speed_spread", json!(spread)),
        ]),
    ))
}

fn expmap(c: &Ctx) -> Out {
    let base = required(&c.run.base, "base", c.cmd)?;
    let vs = required(&c.run.vectors, "vectors", c.cmd)?;
    let n = c.n();
    let results: Vec<_> = vs.par_iter().map(|v| geodesy::exp_map(c.m(), base, v, c.step())).collect();
    all_failed(&results)?;
    let mut t = Table::new(&header(&[&cols("v", n), &cols("exp", n), &names(&["status"])]));
    for (v, r) in vs.iter().zip(&results) {
        let mut row = floats(v);
        match r {
            Ok(p) => row.extend(floats(p)),
            Err(_) => row.extend((0..n).map(|_| Cell::F(f64::NAN))),
        }
        row.push(status(r).into());
        t.row(row);
    }
    Ok((t.out, summary(vec![("rows", json!(vs.len()))])))
}

fn gauss(c: &Ctx) -> Out {
    let base = c.base();
    let n = c.n();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = match (&c.run.vectors, &c.run.w) {
        (Some(v), Some(w)) if v.len() == w.len() => v.iter().cloned().zip(w.iter().cloned()).collect(),
        (Some(_), Some(_)) => {
            return Err(Error::Validation {
                path: "run.w".into(),
                constraint: "must have as many entries as run.vectors".into(),
            })
        }
        _ => {
            let mut rng = c.rng();
            let mut draw = || (0..n).map(|_| rng.random_range(-0.5..0.5)).collect::<Vec<f64>>();
            (0..c.run.samples.unwrap_or(100)).map(|_| (draw(), draw())).collect()
        }
    };
    let results: Vec<_> = pairs
        .par_iter()
        .map(|(v, w)| geodesy::gauss_lemma_residual(c.m(), &base, v, w, c.step()))
        .collect();
    all_failed(&results)?;
    let mut t = Table::new(&header(&[&cols("v", n), &cols("w", n), &names(&["residual", "status"])]));
    let mut max_res = 0.0_f64;
    for ((v, w), r) in pairs.iter().zip(&results) {
        let mut row = floats(v);
        row.extend(floats(w));
        let x = *r.as_ref().unwrap_or(&f64::NAN);
        if x.is_finite() {
            max_res = max_res.max(x.abs());
        }
        row.push(x.into());
        row.push(status(r).into());
        t.row(row);
    }
    Ok((t.out, summary(vec![("pairs", json!(pairs.len())), ("max_abs_residual", json!(max_res))])))
}

fn graphs(c: &Ctx) -> Result<Vec<SeparationGraph>> {
    let g: &GridSpec = required(&c.run.grid, "grid", c.cmd)?;
    let grid = GridBox::new(g.lo.clone(), g.hi.clone())?;
    g.resolutions
        .iter()
        .map(|&res| {
            let radius = g.neighbor_radius.unwrap_or(((res - 1) / 2).max(1));
            geodesy::build_separation_graph(c.m(), &grid, res, radius)
        })
        .collect()
}

fn node_inside(graph: &SeparationGraph, p: &[f64], path: &str) -> Result<usize> {
    let g = graph.grid();
    if p.iter().zip(g.lo.iter().zip(&g.hi)).any(|(x, (a, b))| x < a || x > b) {
        return Err(Error::Validation {
            path: path.into(),
            constraint: format!("point {p:?} lies outside the grid box"),
        });
    }
    graph.nearest_node(p)
}

fn separation(c: &Ctx) -> Out {
    let from = required(&c.run.from, "from", c.cmd)?;
    let to = required(&c.run.to, "to", c.cmd)?;
    let n = c.n();
    let mut t = Table::new(&header(&[
        &names(&["resolution", "neighbor_radius"]),
        &cols("to", n),
        &names(&["value", "hops"]),
    ]));
    let mut values = Vec::new();
    for graph in graphs(c)? {
        let p = node_inside(&graph, from, "run.from")?;
        for (i, q) in to.iter().enumerate() {
            let q_node = node_inside(&graph, q, &format!("run.to[{i}]"))?;
            let r = geodesy::separation(&graph, p, q_node)?;
            let mut row = vec![graph.resolution().into(), graph.neighbor_radius().into()];
            row.extend(floats(q));
            row.push(r.value.into());
            row.push(r.witness_path.len().saturating_sub(1).into());
            t.row(row);
            values.push(json!({
                "resolution": graph.resolution(),
                "to": q,
                "value": if r.value.is_finite() { json!(r.value) } else { json!("inf") },
            }));
        }
    }
    Ok((t.out, summary(vec![("separations", Value::Array(values))])))
}

/// The forward (or backward) affine ball of `m` frozen at `center`.
fn frozen_gauge(m: &ConicMetric, center: &[f64]) -> GaugeNorm {
    let (d, f) = (m.clone(), m.clone());
    let (p1, p2) = (center.to_vec(), center.to_vec());
    GaugeNorm::closed_form(ConicDomainV::new(m.dimension(), move |v| d.in_domain(&p1, v)), move |v| {
        f.eval(&p2, v).unwrap_or(f64::NAN)
    })
}

fn ball(c: &Ctx) -> Out {
    let from = required(&c.run.from, "from", c.cmd)?;
    let radius = *required(&c.run.radius, "radius", c.cmd)?;
    let direction: BallDirection = c.run.direction.map(Into::into).unwrap_or(BallDirection::Forward);
    let graph = graphs(c)?.swap_remove(0);
    let p = node_inside(&graph, from, "run.from")?;
    let members = geodesy::df_ball(&graph, p, radius, direction)?;
    let gauge = frozen_gauge(c.m(), from);
    let n = c.n();
    let mut t = Table::new(&header(&[&names(&["node"]), &cols("x", n), &names(&["in_df_ball", "in_affine_ball"])]));
    let mut in_ball = vec![false; graph.node_count()];
    for &i in &members {
        in_ball[i] = true;
    }
    let (mut affine_count, mut both) = (0usize, 0usize);
    for node in 0..graph.node_count() {
        let x = graph.node_point(node);
        let affine = minkowski::affine_ball(&gauge, from, radius, direction, &x);
        affine_count += affine as usize;
        both += (affine && in_ball[node]) as usize;
        if !(affine || in_ball[node]) {
            continue;
        }
        let mut row = vec![node.into()];
        row.extend(floats(&x));
        row.push(in_ball[node].into());
        row.push(affine.into());
        t.row(row);
    }
    Ok((
        t.out,
        summary(vec![
            ("resolution", json!(graph.resolution())),
            ("df_ball_nodes", json!(members.len())),
            ("affine_ball_nodes", json!(affine_count)),
            ("common_nodes", json!(both)),
        ]),
    ))
}

fn reach(c: &Ctx) -> Out {
    let from = required(&c.run.from, "from", c.cmd)?;
    let graph = graphs(c)?.swap_remove(0);
    let p = node_inside(&graph, from, "run.from")?;
    let nodes = geodesy::reachability(&graph, p)?;
    let n = c.n();
    let mut t = Table::new(&header(&[&names(&["node"]), &cols("x", n)]));
    for &i in &nodes {
        let mut row = vec![i.into()];
        row.extend(floats(&graph.node_point(i)));
        t.row(row);
    }
    Ok((
        t.out,
        summary(vec![
            ("resolution", json!(graph.resolution())),
            ("reachable", json!(nodes.len())),
            ("nodes", json!(graph.node_count())),
        ]),
    ))
}

fn indicatrix(c: &Ctx) -> Out {
    if c.n() != 2 {
        return Err(Error::Validation {
            path: "run.dimension".into(),
            constraint: "`indicatrix` needs dimension 2".into(),
        });
    }
    let base = c.base();
    let dirs = unit_directions(2, c.run.points.unwrap_or(720));
    let mut t = Table::new(&names(&["theta", "x", "y"]));
    let mut kept = 0usize;
    for d in &dirs {
        let Ok(f) = c.m().eval(&base, d) else { continue };
        if !(f > 0.0 && f.is_finite()) {
            continue;
        }
        kept += 1;
        t.row(vec![angle(d).into(), (d[0] / f).into(), (d[1] / f).into()]);
    }
    if kept == 0 {
        return Err(Error::DomainEmpty { base });
    }
    Ok((t.out, summary(vec![("vertices", json!(kept)), ("directions", json!(dirs.len()))])))
}

fn oracle(c: &Ctx) -> Out {
    let n = c.n();
    let samples = c.run.samples.unwrap_or(1000);
    let mut rng = c.rng();
    let (lo, hi) = c.m().manifold().sample_box();
    let (lo, hi) = (lo.to_vec(), hi.to_vec());
    let mut draws = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while draws.len() < samples && attempts < samples * 50 {
        attempts += 1;
        let p: Vec<f64> = (0..n).map(|i| rng.random_range(lo[i]..hi[i])).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if c.m().manifold().contains(&p) && c.m().in_domain(&p, &v) {
            draws.push((p, v));
        }
    }
    if draws.is_empty() {
        return Err(Error::DomainEmpty { base: c.m().manifold().probe_point() });
    }
    let results: Vec<Result<f64>> = draws
        .par_iter()
        .map(|(p, v)| {
            let a = c.m().tensor(p, v)?;
            let f = c.m().fd_tensor(p, v)?;
            Ok(a.relative_difference(&f))
        })
        .collect();
    let mut t = Table::new(&header(&[&cols("x", n), &cols("v", n), &names(&["rel_diff", "status"])]));
    let mut max_rel = 0.0_f64;
    for ((p, v), r) in draws.iter().zip(&results) {
        let mut row = floats(p);
        row.extend(floats(v));
        let x = *r.as_ref().unwrap_or(&f64::NAN);
        if x.is_finite() {
            max_rel = max_rel.max(x);
        }
        row.push(x.into());
        row.push(status(r).into());
        t.row(row);
    }
    let failed = results.iter().filter(|r| r.is_err()).count();
    Ok((
        t.out,
        summary(vec![
            ("samples", json!(draws.len())),
            ("failed", json!(failed)),
            ("analytic_tensor", json!(c.m().has_analytic_tensor())),
            ("max_rel_diff", json!(max_rel)),
        ]),
    ))
}

//! Config documents: a metric expression tree plus run parameters.
//!
//! A document is a JSON object `{"metric": MetricSpec, "run": RunConfig}`.
//! Metric nodes are tagged by `"type"`; see the README for the full schema.


use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::expr::{position_names, position_values, CompiledExpr, ExprSrc};
use crate::combinators::{
    self, FiberPredicate, LCombiner, NamedFamily, PhiProfile, ReversibleMode,
};
use crate::error::{Error, Result};
use crate::metrics::{ChartManifold, ConicMetric, OneFormAtom, RiemannAtom};
use crate::minkowski::{self, catalog, BallDirection, PolarCurve2D};
use crate::numkernel::SymBilinearForm;

/// Coefficients of a one-form, one expression per coordinate.
pub type FormSpec = Vec<ExprSrc>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// `√(v·G(x)v)`; identity when `matrix` is omitted.
    Riemannian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<ExprSrc>>>,
    },
    /// `F = β` on `{β > 0}`.
    Oneform { coefficients: FormSpec },
    /// Minkowski gauge of the curve `r(t)(cos t, sin t)`. Missing
    /// derivatives are taken by central differences.
    GaugeCurve2d {
        r: ExprSrc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_dot: Option<ExprSrc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_ddot: Option<ExprSrc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interval: Option<[f64; 2]>,
    },
    LorentzExample,
    SpiralExample { epsilon: f64 },
    ParabolaExample,
    HalfParabolaExample,
    Sum {
        #[serde(default)]
        metrics: Vec<MetricSpec>,
        #[serde(default)]
        forms: Vec<FormSpec>,
    },
    PowerQ {
        q: f64,
        #[serde(default)]
        metrics: Vec<MetricSpec>,
        #[serde(default)]
        forms: Vec<FormSpec>,
    },
    Phi {
        base: Box<MetricSpec>,
        form: FormSpec,
        profile: ProfileSpec,
    },
    /// A named `(F₀, β)` family. `base` defaults to the Euclidean metric and
    /// `form` to `b dx1`.
    Named {
        family: FamilyName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<MetricSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        form: Option<FormSpec>,
    },
    F1f2 {
        f1: Box<MetricSpec>,
        f2: Box<MetricSpec>,
        profile: ProfileSpec,
    },
    Reversibilize {
        mode: ReversibleName,
        metric: Box<MetricSpec>,
    },
    /// `√L(F_1, …, β_1, …)` for an expression `l` in `a1, a2, …`; the
    /// argument cone is `{cone > 0}` (default: `l > 0`).
    Combine {
        l: ExprSrc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cone: Option<ExprSrc>,
        #[serde(default)]
        metrics: Vec<MetricSpec>,
        #[serde(default)]
        forms: Vec<FormSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Unit,
    Randers,
    Kropina { q: f64 },
    Matsumoto { q: f64 },
    SquareOverF0,
    /// Expressions in `s`; `domain > 0` is the profile interval (default:
    /// where `phi` is positive and finite).
    Custom {
        phi: ExprSrc,
        phi_dot: ExprSrc,
        phi_ddot: ExprSrc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<ExprSrc>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Kropina,
    Matsumoto,
    Randers,
    SquareOverF0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversibleName {
    Sum,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionName {
    Forward,
    Backward,
}

impl From<DirectionName> for BallDirection {
    fn from(d: DirectionName) -> Self {
        match d {
            DirectionName::Forward => BallDirection::Forward,
            DirectionName::Backward => BallDirection::Backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// The chart is `{member > 0}`; all of `R^N` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<ExprSrc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Nodes per axis, one graph per entry.
    pub resolutions: Vec<usize>,
    /// Defaults to `(resolution − 1) / 2`, i.e. every node of the box is a
    /// direct neighbour of the center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor_radius: Option<usize>,
}

macro_rules! opt {
    ($($(#[$m:meta])* $name:ident: $t:ty,)*) => {
        /// Run parameters. Only the fields a command uses are required.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunConfig {
            #[serde(default = "default_dimension")]
            pub dimension: usize,
            $(
                $(#[$m])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $name: Option<$t>,
            )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { dimension: default_dimension(), $($name: None,)* }
            }
        }
    };
}

opt! {
    chart: ChartSpec,
    base: Vec<f64>,
    /// Several base points (`scan`); sampled from the chart when omitted.
    bases: Vec<Vec<f64>>,
    vectors: Vec<Vec<f64>>,
    /// Second vectors for `gauss`, paired with `vectors`.
    w: Vec<Vec<f64>>,
    /// Number of deterministic unit directions.
    directions: usize,
    /// Number of random samples (`oracle`, `gauss`, `scan` bases).
    samples: usize,
    tolerance: f64,
    seed: u64,
    t_end: f64,
    step: f64,
    grid: GridSpec,
    from: Vec<f64>,
    to: Vec<Vec<f64>>,
    radius: f64,
    direction: DirectionName,
    /// Vertices of the `indicatrix` polygon.
    points: usize,
}

fn default_dimension() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    metric: MetricSpec,
    #[serde(default)]
    run: RunConfig,
}

/// Parses a config document.
pub fn parse_config(text: &str) -> Result<(MetricSpec, RunConfig)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            line: inner.line(),
            path,
            message: inner.to_string(),
        }
    })?;
    validate_run(&doc.run)?;
    validate_spec(&doc.metric, &doc.run, "metric")?;
    Ok((doc.metric, doc.run))
}

/// Renders a document that [`parse_config`] reads back unchanged.
pub fn render(spec: &MetricSpec, run: &RunConfig) -> String {
    let doc = Document {
        metric: spec.clone(),
        run: run.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("documents always serialize")
}

fn invalid(path: &str, constraint: impl Into<String>) -> Error {
    Error::Validation {
        path: path.to_string(),
        constraint: constraint.into(),
    }
}

fn validate_run(run: &RunConfig) -> Result<()> {
    let n = run.dimension;
    if n == 0 {
        return Err(invalid("run.dimension", "must be at least 1"));
    }
    let positive = [
        ("run.tolerance", run.tolerance),
        ("run.step", run.step),
        ("run.t_end", run.t_end),
        ("run.radius", run.radius),
    ];
    for (path, x) in positive {
        if let Some(x) = x {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(path, format!("must be positive and finite, got {x}")));
            }
        }
    }
    let check_len = |path: &str, v: &[f64]| -> Result<()> {
        if v.len() != n {
            return Err(invalid(path, format!("expected {n} components, found {}", v.len())));
        }
        Ok(())
    };
    if let Some(c) = &run.chart {
        check_len("run.chart.lo", &c.lo)?;
        check_len("run.chart.hi", &c.hi)?;
        if c.lo.iter().zip(&c.hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("run.chart", "need lo < hi in every axis"));
        }
    }
    if let Some(b) = &run.base {
        check_len("run.base", b)?;
    }
    if let Some(f) = &run.from {
        check_len("run.from", f)?;
    }
    let lists = [
        ("run.bases", &run.bases),
        ("run.vectors", &run.vectors),
        ("run.w", &run.w),
        ("run.to", &run.to),
    ];
    for (path, list) in lists {
        for (i, v) in list.iter().flatten().enumerate() {
            check_len(&format!("{path}[{i}]"), v)?;
        }
    }
    if let Some(g) = &run.grid {
        check_len("run.grid.lo", &g.lo)?;
        check_len("run.grid.hi", &g.hi)?;
        if g.lo.iter().zip(&g.hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("run.grid", "need lo < hi in every axis"));
        }
        if g.resolutions.is_empty() || g.resolutions.iter().any(|&r| r < 2) {
            return Err(invalid("run.grid.resolutions", "need at least one resolution, each >= 2"));
        }
        if g.neighbor_radius == Some(0) {
            return Err(invalid("run.grid.neighbor_radius", "must be at least 1"));
        }
    }
    Ok(())
}

/// Validates the tree by building it once.
fn validate_spec(spec: &MetricSpec, run: &RunConfig, path: &str) -> Result<()> {
    build_at(spec, &chart_of(run)?, path).map(|_| ())
}

/// A metric built from a spec, with the extra structure some commands use.
#[derive(Clone)]
pub struct BuiltMetric {
    pub metric: ConicMetric,
    /// Strong-convexity domain of a named family.
    pub strong: Option<FiberPredicate>,
    /// `(F₀, β, φ)` when the root is a `phi` or `named` node.
    pub phi_parts: Option<(ConicMetric, OneFormAtom, PhiProfile)>,
}

impl BuiltMetric {
    fn plain(metric: ConicMetric) -> Self {
        Self {
            metric,
            strong: None,
            phi_parts: None,
        }
    }
}

/// Builds the chart described by `run`.
pub fn chart_of(run: &RunConfig) -> Result<ChartManifold> {
    let n = run.dimension;
    match &run.chart {
        None => Ok(ChartManifold::euclidean(n)),
        Some(c) => {
            let member = match &c.member {
                None => None,
                Some(src) => Some(CompiledExpr::compile(src, &position_names(n), "run.chart.member")?),
            };
            ChartManifold::new(
                n,
                move |p| member.as_ref().is_none_or(|e| e.eval(&position_values(p)) > 0.0),
                c.lo.clone(),
                c.hi.clone(),
            )
            .map_err(|e| invalid("run.chart", e.to_string()))
        }
    }
}

/// Builds the metric of a parsed document.
pub fn build_metric(spec: &MetricSpec, run: &RunConfig) -> Result<BuiltMetric> {
    build_at(spec, &chart_of(run)?, "metric")
}

/// Library errors that reflect a bad config become validation errors at the
/// node's path, citing the library code.
fn at(path: &str, e: Error) -> Error {
    match e {
        Error::BadExponent { .. }
        | Error::InvalidArity(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidArgument(_) => invalid(path, format!("{}: {e}", e.code())),
        other => other,
    }
}

fn need_dim(chart: &ChartManifold, n: usize, path: &str) -> Result<()> {
    if chart.dimension() != n {
        return Err(invalid(
            path,
            format!("this metric is {n}-dimensional but run.dimension is {}", chart.dimension()),
        ));
    }
    Ok(())
}

fn build_form(form: &FormSpec, chart: &ChartManifold, path: &str) -> Result<OneFormAtom> {
    let n = chart.dimension();
    if form.len() != n {
        return Err(invalid(path, format!("expected {n} coefficients, found {}", form.len())));
    }
    let names = position_names(n);
    let coeffs = form
        .iter()
        .enumerate()
        .map(|(i, c)| CompiledExpr::compile(c, &names, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    if coeffs.iter().all(CompiledExpr::is_constant) {
        return Ok(OneFormAtom::constant(coeffs.iter().map(|c| c.eval(&vec![0.0; names.len()])).collect()));
    }
    Ok(OneFormAtom::new(move |p| {
        let vals = position_values(p);
        coeffs.iter().map(|c| c.eval(&vals)).collect()
    }))
}

fn build_riemann(matrix: &Option<Vec<Vec<ExprSrc>>>, chart: &ChartManifold, path: &str) -> Result<RiemannAtom> {
    let n = chart.dimension();
    let Some(rows) = matrix else {
        return Ok(RiemannAtom::euclidean(n));
    };
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(&format!("{path}.matrix"), format!("expected a {n}x{n} matrix")));
    }
    let names = position_names(n);
    let entries = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, e)| (i, j, e)))
        .map(|(i, j, e)| CompiledExpr::compile(e, &names, &format!("{path}.matrix[{i}][{j}]")))
        .collect::<Result<Vec<_>>>()?;
    let at_point = move |p: &[f64]| {
        let vals = position_values(p);
        SymBilinearForm::symmetrized(DMatrix::from_row_iterator(n, n, entries.iter().map(|e| e.eval(&vals))))
    };
    let constant = rows.iter().flatten().all(|e| matches!(e, ExprSrc::Number(_)));
    if constant {
        let g = at_point(&vec![0.0; n]);
        crate::numkernel::eigen_classify(&g, 1e-12)
            .ok()
            .filter(|r| r.is_positive_definite())
            .ok_or_else(|| invalid(&format!("{path}.matrix"), "matrix must be positive definite"))?;
        return Ok(RiemannAtom::constant(g));
    }
    Ok(RiemannAtom::new(at_point))
}

fn build_profile(p: &ProfileSpec, path: &str) -> Result<PhiProfile> {
    Ok(match p {
        ProfileSpec::Unit => PhiProfile::unit(),
        ProfileSpec::Randers => PhiProfile::randers(),
        ProfileSpec::Kropina { q } => PhiProfile::kropina(*q).map_err(|e| at(&format!("{path}.q"), e))?,
        ProfileSpec::Matsumoto { q } => PhiProfile::matsumoto(*q).map_err(|e| at(&format!("{path}.q"), e))?,
        ProfileSpec::SquareOverF0 => PhiProfile::square_over_f0(),
        ProfileSpec::Custom {
            phi,
            phi_dot,
            phi_ddot,
            domain,
        } => {
            let s = vec!["s".to_string()];
            let f = CompiledExpr::compile(phi, &s, &format!("{path}.phi"))?;
            let d = CompiledExpr::compile(phi_dot, &s, &format!("{path}.phi_dot"))?;
            let dd = CompiledExpr::compile(phi_ddot, &s, &format!("{path}.phi_ddot"))?;
            let dom = match domain {
                Some(src) => Some(CompiledExpr::compile(src, &s, &format!("{path}.domain"))?),
                None => None,
            };
            let f2 = f.clone();
            PhiProfile::new(
                "custom",
                move |x| f.eval(&[x]),
                move |x| d.eval(&[x]),
                move |x| dd.eval(&[x]),
                move |x| match &dom {
                    Some(e) => e.eval(&[x]) > 0.0,
                    None => {
                        let y = f2.eval(&[x]);
                        y.is_finite() && y > 0.0
                    }
                },
            )
        }
    })
}

fn build_list(specs: &[MetricSpec], chart: &ChartManifold, path: &str) -> Result<Vec<ConicMetric>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| build_at(s, chart, &format!("{path}[{i}]")).map(|b| b.metric))
        .collect()
}

fn build_forms(forms: &[FormSpec], chart: &ChartManifold, path: &str) -> Result<Vec<OneFormAtom>> {
    forms
        .iter()
        .enumerate()
        .map(|(i, f)| build_form(f, chart, &format!("{path}[{i}]")))
        .collect()
}

fn fd_derivative(e: CompiledExpr, order: u8) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    move |t| match order {
        1 => {
            let h = 1e-5;
            (e.eval(&[t + h]) - e.eval(&[t - h])) / (2.0 * h)
        }
        _ => {
            let h = 1e-4;
            (e.eval(&[t + h]) - 2.0 * e.eval(&[t]) + e.eval(&[t - h])) / (h * h)
        }
    }
}

fn build_at(spec: &MetricSpec, chart: &ChartManifold, path: &str) -> Result<BuiltMetric> {
    let n = chart.dimension();
    let gauge_metric = |g: minkowski::GaugeNorm, label: &str| -> Result<BuiltMetric> {
        need_dim(chart, 2, path)?;
        Ok(BuiltMetric::plain(
            ConicMetric::minkowski(chart.clone(), g).map_err(|e| at(path, e))?.with_label(label),
        ))
    };
    match spec {
        MetricSpec::Riemannian { matrix } => Ok(BuiltMetric::plain(ConicMetric::riemannian(
            chart.clone(),
            build_riemann(matrix, chart, path)?,
        ))),
        MetricSpec::Oneform { coefficients } => Ok(BuiltMetric::plain(ConicMetric::positive_one_form(
            chart.clone(),
            build_form(coefficients, chart, &format!("{path}.coefficients"))?,
        ))),
        MetricSpec::GaugeCurve2d {
            r,
            r_dot,
            r_ddot,
            interval,
        } => {
            need_dim(chart, 2, path)?;
            let t = vec!["t".to_string()];
            let r = CompiledExpr::compile(r, &t, &format!("{path}.r"))?;
            let r1: Box<dyn Fn(f64) -> f64 + Send + Sync> = match r_dot {
                Some(src) => {
                    let e = CompiledExpr::compile(src, &t, &format!("{path}.r_dot"))?;
                    Box::new(move |x| e.eval(&[x]))
                }
                None => Box::new(fd_derivative(r.clone(), 1)),
            };
            let r2: Box<dyn Fn(f64) -> f64 + Send + Sync> = match r_ddot {
                Some(src) => {
                    let e = CompiledExpr::compile(src, &t, &format!("{path}.r_ddot"))?;
                    Box::new(move |x| e.eval(&[x]))
                }
                None => Box::new(fd_derivative(r.clone(), 2)),
            };
            let curve = PolarCurve2D::new(move |x| r.eval(&[x]), r1, r2, interval.map(|[a, b]| (a, b)))
                .map_err(|e| at(&format!("{path}.interval"), e))?;
            gauge_metric(minkowski::gauge_from_curve(&curve), "gauge_curve_2d")
        }
        MetricSpec::LorentzExample => gauge_metric(catalog::lorentz_gauge(), "lorentz_example"),
        MetricSpec::SpiralExample { epsilon } => {
            let curve = catalog::spiral(*epsilon).map_err(|e| at(&format!("{path}.epsilon"), e))?;
            gauge_metric(minkowski::gauge_from_curve(&curve), "spiral_example")
        }
        MetricSpec::ParabolaExample => gauge_metric(catalog::parabola_gauge(), "parabola_example"),
        MetricSpec::HalfParabolaExample => {
            gauge_metric(catalog::half_plane_parabola_gauge(), "half_parabola_example")
        }
        MetricSpec::Sum { metrics, forms } => {
            let ms = build_list(metrics, chart, &format!("{path}.metrics"))?;
            let fs = build_forms(forms, chart, &format!("{path}.forms"))?;
            if ms.is_empty() {
                return Err(invalid(&format!("{path}.metrics"), "sum needs at least one metric"));
            }
            let c = LCombiner::sum(ms.len(), fs.len());
            Ok(BuiltMetric::plain(combinators::combine(&c, &ms, &fs).map_err(|e| at(path, e))?))
        }
        MetricSpec::PowerQ { q, metrics, forms } => {
            let ms = build_list(metrics, chart, &format!("{path}.metrics"))?;
            let fs = build_forms(forms, chart, &format!("{path}.forms"))?;
            if ms.is_empty() {
                return Err(invalid(&format!("{path}.metrics"), "power_q needs at least one metric"));
            }
            Ok(BuiltMetric::plain(
                combinators::power_q_combine(&ms, &fs, *q).map_err(|e| at(&format!("{path}.q"), e))?,
            ))
        }
        MetricSpec::Phi { base, form, profile } => {
            let f0 = build_at(base, chart, &format!("{path}.base"))?.metric;
            let beta = build_form(form, chart, &format!("{path}.form"))?;
            let profile = build_profile(profile, &format!("{path}.profile"))?;
            let metric = combinators::phi_combine(&f0, &beta, &profile).map_err(|e| at(path, e))?;
            Ok(BuiltMetric {
                metric,
                strong: None,
                phi_parts: Some((f0, beta, profile)),
            })
        }
        MetricSpec::Named {
            family,
            q,
            b,
            base,
            form,
        } => {
            let q = q.unwrap_or(1.0);
            let fam = match family {
                FamilyName::Kropina => NamedFamily::Kropina(q),
                FamilyName::Matsumoto => NamedFamily::Matsumoto(q),
                FamilyName::Randers => NamedFamily::Randers,
                FamilyName::SquareOverF0 => NamedFamily::SquareOverF0,
            };
            let f0 = match base {
                Some(s) => build_at(s, chart, &format!("{path}.base"))?.metric,
                None => ConicMetric::riemannian(chart.clone(), RiemannAtom::euclidean(n)),
            };
            let beta = match (form, b) {
                (Some(f), None) => build_form(f, chart, &format!("{path}.form"))?,
                (None, Some(b)) => {
                    let mut c = vec![0.0; n];
                    c[0] = *b;
                    OneFormAtom::constant(c)
                }
                _ => return Err(invalid(path, "give exactly one of `b` and `form`")),
            };
            let profile = fam.profile().map_err(|e| at(&format!("{path}.q"), e))?;
            let (metric, strong) =
                combinators::named_family(fam, &f0, &beta).map_err(|e| at(path, e))?;
            Ok(BuiltMetric {
                metric,
                strong: Some(strong),
                phi_parts: Some((f0, beta, profile)),
            })
        }
        MetricSpec::F1f2 { f1, f2, profile } => {
            let a = build_at(f1, chart, &format!("{path}.f1"))?.metric;
            let b = build_at(f2, chart, &format!("{path}.f2"))?.metric;
            let profile = build_profile(profile, &format!("{path}.profile"))?;
            Ok(BuiltMetric::plain(
                combinators::f1f2_combine(&a, &b, &profile).map_err(|e| at(path, e))?,
            ))
        }
        MetricSpec::Reversibilize { mode, metric } => {
            let f = build_at(metric, chart, &format!("{path}.metric"))?.metric;
            let mode = match mode {
                ReversibleName::Sum => ReversibleMode::Sum,
                ReversibleName::Quadratic => ReversibleMode::Quadratic,
            };
            Ok(BuiltMetric::plain(combinators::reversibilize(&f, mode).map_err(|e| at(path, e))?))
        }
        MetricSpec::Combine {
            l,
            cone,
            metrics,
            forms,
        } => {
            let ms = build_list(metrics, chart, &format!("{path}.metrics"))?;
            let fs = build_forms(forms, chart, &format!("{path}.forms"))?;
            let k = ms.len() + fs.len();
            if k == 0 {
                return Err(invalid(path, "combine needs at least one argument"));
            }
            let names: Vec<String> = (1..=k).map(|i| format!("a{i}")).collect();
            let l = CompiledExpr::compile(l, &names, &format!("{path}.l"))?;
            let cone = match cone {
                Some(src) => CompiledExpr::compile(src, &names, &format!("{path}.cone"))?,
                None => l.clone(),
            };
            let c = LCombiner::new(
                ms.len(),
                fs.len(),
                move |x| l.eval(x),
                move |x| cone.eval(x) > 0.0,
                "custom",
            );
            Ok(BuiltMetric::plain(combinators::combine(&c, &ms, &fs).map_err(|e| at(path, e))?))
        }
    }
}

/// Specs for the built-in examples, keyed by name.
pub fn builtin_examples() -> Vec<(&'static str, MetricSpec)> {
    let euclid = || Box::new(MetricSpec::Riemannian { matrix: None });
    let named = |family, q: Option<f64>, b| MetricSpec::Named {
        family,
        q,
        b: Some(b),
        base: None,
        form: None,
    };
    vec![
        ("euclidean", MetricSpec::Riemannian { matrix: None }),
        ("randers", named(FamilyName::Randers, None, 0.5)),
        ("kropina", named(FamilyName::Kropina, Some(1.0), 1.0)),
        ("matsumoto", named(FamilyName::Matsumoto, Some(1.0), 0.5)),
        ("square_over_f0", named(FamilyName::SquareOverF0, None, 0.5)),
        (
            "cosine_gauge",
            MetricSpec::GaugeCurve2d {
                r: "1 + 0.2*cos(3*t)".into(),
                r_dot: Some("-0.6*sin(3*t)".into()),
                r_ddot: Some("-1.8*cos(3*t)".into()),
                interval: None,
            },
        ),
        ("spiral", MetricSpec::SpiralExample { epsilon: 0.1 }),
        ("lorentz", MetricSpec::LorentzExample),
        ("parabola", MetricSpec::ParabolaExample),
        ("half_parabola", MetricSpec::HalfParabolaExample),
        ("dy", MetricSpec::Oneform { coefficients: vec![0.0.into(), 1.0.into()] }),
        (
            "position_randers",
            MetricSpec::Phi {
                base: Box::new(MetricSpec::Riemannian {
                    matrix: Some(vec![
                        vec!["1 + 0.1*y^2".into(), 0.0.into()],
                        vec![0.0.into(), "1 + 0.1*x^2".into()],
                    ]),
                }),
                form: vec!["0.3*sin(y)".into(), "0.2*cos(x)".into()],
                profile: ProfileSpec::Randers,
            },
        ),
        (
            "sum",
            MetricSpec::Sum {
                metrics: vec![*euclid(), MetricSpec::SpiralExample { epsilon: 0.1 }],
                forms: vec![vec![0.2.into(), 0.0.into()]],
            },
        ),
        (
            "power_q",
            MetricSpec::PowerQ {
                q: 3.0,
                metrics: vec![*euclid()],
                forms: vec![vec![0.5.into(), 0.0.into()]],
            },
        ),
        (
            "gen_matsumoto",
            MetricSpec::F1f2 {
                f1: euclid(),
                f2: Box::new(MetricSpec::Riemannian {
                    matrix: Some(vec![vec![0.04.into(), 0.0.into()], vec![0.0.into(), 0.09.into()]]),
                }),
                profile: ProfileSpec::Matsumoto { q: 1.0 },
            },
        ),
        (
            "reversible_randers",
            MetricSpec::Reversibilize {
                mode: ReversibleName::Quadratic,
                metric: Box::new(named(FamilyName::Randers, None, 0.5)),
            },
        ),
        (
            "custom_combine",
            MetricSpec::Combine {
                l: "(a1^4 + a2^4)^(1/2)".into(),
                cone: None,
                metrics: vec![*euclid()],
                forms: vec![vec![0.3.into(), 0.4.into()]],
            },
        ),
    ]
}

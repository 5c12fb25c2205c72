//! Homogeneous combinations of conic Finsler metrics and one-forms.
//!
//! Given metrics `F_1..F_n` and one-forms `β_{n+1}..β_{n+m}`, a degree-2
//! homogeneous `L` yields `F = √L(F_1, …, F_n, β_{n+1}, …, β_{n+m})`. Its
//! fundamental tensor is
//!
//! ```text
//! 2 g_v(w, w) = Σ_k (L_{,k} / F_k) h^k_v(w, w) + P Hess(L) Pᵀ,
//! P = (g^1_v(v, w)/F_1, …, g^n_v(v, w)/F_n, β_{n+1}(w), …, β_{n+m}(w)),
//! ```
//!
//! with `h^k` the angular metric of `F_k`. Every constructor here attaches
//! that closed form (or a specialization of it) as the metric's analytic
//! tensor.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::metrics::{angular_from, ChartManifold, ConicMetric, OneFormAtom, DOMAIN_PROBES};
use crate::numkernel::{
    self, eigen_classify, fd_gradient, fd_hessian, norm, Definiteness, SymBilinearForm,
};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ScalarPredicate = Arc<dyn Fn(f64) -> bool + Send + Sync>;
type VecFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> SymBilinearForm + Send + Sync>;
type VecPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Membership test on `A`, used for strong-convexity domains.
pub type FiberPredicate = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;

/// Tolerance for the strict inequalities of the convexity criteria.
pub const CRITERION_TOLERANCE: f64 = 1e-9;

/// A profile `φ > 0` on a set `I ⊂ R` together with its first two derivatives.
#[derive(Clone)]
pub struct PhiProfile {
    name: String,
    phi: ScalarFn,
    phi_dot: ScalarFn,
    phi_ddot: ScalarFn,
    member: ScalarPredicate,
}

impl fmt::Debug for PhiProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiProfile").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Profile quantities at one argument `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValues {
    pub s: f64,
    pub phi: f64,
    pub phi_dot: f64,
    pub phi_ddot: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub psi_ddot: f64,
    /// `2ψ − sψ̇`
    pub phi1: f64,
    /// `2ψψ̈ − ψ̇²`
    pub phi2: f64,
}

impl PhiProfile {
    pub fn new(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_dot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_ddot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        member: impl Fn(f64) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            phi: Arc::new(phi),
            phi_dot: Arc::new(phi_dot),
            phi_ddot: Arc::new(phi_ddot),
            member: Arc::new(member),
        }
    }

    /// `φ ≡ 1`.
    pub fn unit() -> Self {
        Self::new("unit", |_| 1.0, |_| 0.0, |_| 0.0, |s: f64| s.is_finite())
    }

    /// `φ(s) = 1 + s` on `s > −1`.
    pub fn randers() -> Self {
        Self::new("randers", |s| 1.0 + s, |_| 1.0, |_| 0.0, |s| s > -1.0)
    }

    /// `φ(s) = |s|^{−q}` on `s ≠ 0`, `q > 0`.
    pub fn kropina(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::BadExponent {
                family: "kropina".into(),
                q,
            });
        }
        Ok(Self::new(
            format!("kropina({q})"),
            move |s: f64| s.abs().powf(-q),
            move |s: f64| -q * s.abs().powf(-q) / s,
            move |s: f64| q * (q + 1.0) * s.abs().powf(-q) / (s * s),
            |s: f64| s != 0.0 && s.is_finite(),
        ))
    }

    /// `φ(s) = |1 − s|^{−q}` on `s ≠ 1`, for `q > 0` or `q ≤ −1`.
    pub fn matsumoto(q: f64) -> Result<Self> {
        if !((q > 0.0 || q <= -1.0) && q.is_finite()) {
            return Err(Error::BadExponent {
                family: "matsumoto".into(),
                q,
            });
        }
        Ok(Self::new(
            format!("matsumoto({q})"),
            move |s: f64| (1.0 - s).abs().powf(-q),
            move |s: f64| q * (1.0 - s).abs().powf(-q) / (1.0 - s),
            move |s: f64| q * (q + 1.0) * (1.0 - s).abs().powf(-q) / ((1.0 - s) * (1.0 - s)),
            |s: f64| s != 1.0 && s.is_finite(),
        ))
    }

    /// `φ(s) = (1 + s)²` on `s ≠ −1`, giving `(F₀ + β)²/F₀`.
    pub fn square_over_f0() -> Self {
        Self::new(
            "square_over_f0",
            |s| (1.0 + s) * (1.0 + s),
            |s| 2.0 * (1.0 + s),
            |_| 2.0,
            |s: f64| s != -1.0 && s.is_finite(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, s: f64) -> bool {
        s.is_finite() && (self.member)(s)
    }

    pub fn values(&self, s: f64) -> Result<ProfileValues> {
        if !self.contains(s) {
            return Err(Error::OutsideProfile { s });
        }
        let phi = (self.phi)(s);
        let phi_dot = (self.phi_dot)(s);
        let phi_ddot = (self.phi_ddot)(s);
        let psi = phi * phi;
        let psi_dot = 2.0 * phi * phi_dot;
        let psi_ddot = 2.0 * (phi_dot * phi_dot + phi * phi_ddot);
        Ok(ProfileValues {
            s,
            phi,
            phi_dot,
            phi_ddot,
            psi,
            psi_dot,
            psi_ddot,
            phi1: 2.0 * psi - s * psi_dot,
            phi2: 2.0 * psi * psi_ddot - psi_dot * psi_dot,
        })
    }
}

/// `φ₁(s) > τ` and `φ₂(s) ≥ −τ`; false off the profile set.
pub fn phi_convexity_ok(profile: &PhiProfile, s: f64) -> bool {
    match profile.values(s) {
        Ok(p) => p.phi1 > CRITERION_TOLERANCE && p.phi2 >= -CRITERION_TOLERANCE,
        Err(_) => false,
    }
}

/// A degree-2 positively homogeneous `L` on a cone `B ⊂ R^{n+m}`.
#[derive(Clone)]
pub struct LCombiner {
    n: usize,
    m: usize,
    l: VecFn,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
    cone: VecPredicate,
    label: String,
}

impl fmt::Debug for LCombiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LCombiner")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("analytic_derivatives", &self.has_analytic_derivatives())
            .finish_non_exhaustive()
    }
}

impl LCombiner {
    /// A combiner whose derivatives are obtained by finite differences.
    pub fn new(
        n: usize,
        m: usize,
        l: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        cone: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        label: impl Into<String>,
    ) -> Self {
        Self {
            n,
            m,
            l: Arc::new(l),
            grad: None,
            hess: None,
            cone: Arc::new(cone),
            label: label.into(),
        }
    }

    pub fn with_derivatives(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> SymBilinearForm + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self.hess = Some(Arc::new(hess));
        self
    }

    /// `L = (x_1 + … + x_{n+m})²` on `{x_k > 0 (k ≤ n), Σx > 0}`.
    pub fn sum(n: usize, m: usize) -> Self {
        let k = n + m;
        Self::new(
            n,
            m,
            |x| x.iter().sum::<f64>().powi(2),
            move |x| x[..n].iter().all(|&a| a > 0.0) && x.iter().sum::<f64>() > 0.0,
            "sum",
        )
        .with_derivatives(
            move |x| vec![2.0 * x.iter().sum::<f64>(); k],
            move |_| SymBilinearForm::symmetrized(DMatrix::from_element(k, k, 2.0)),
        )
    }

    /// `L = (Σ |x_r|^q)^{2/q}`, `q ≥ 1`; the one-form slots must be nonzero
    /// when `q < 2`.
    pub fn power_q(n: usize, m: usize, q: f64) -> Result<Self> {
        check_power_exponent(q)?;
        let k = n + m;
        let r_of = move |x: &[f64]| x.iter().map(|a| a.abs().powf(q)).sum::<f64>().powf(1.0 / q);
        Ok(Self::new(
            n,
            m,
            move |x| r_of(x).powi(2),
            move |x| {
                x[..n].iter().all(|&a| a > 0.0) && (q >= 2.0 || x[n..].iter().all(|&a| a != 0.0))
            },
            format!("power_q({q})"),
        )
        .with_derivatives(
            move |x| {
                let r = r_of(x);
                x.iter()
                    .map(|&a| 2.0 * r.powf(2.0 - q) * signed_pow(a, q - 1.0))
                    .collect()
            },
            move |x| {
                let r = r_of(x);
                let mut h = DMatrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        h[(i, j)] = 2.0 * (2.0 - q) * r.powf(2.0 - 2.0 * q)
                            * signed_pow(x[i], q - 1.0)
                            * signed_pow(x[j], q - 1.0);
                    }
                    h[(i, i)] += 2.0 * (q - 1.0) * r.powf(2.0 - q) * x[i].abs().powf(q - 2.0);
                }
                SymBilinearForm::symmetrized(h)
            },
        ))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.grad.is_some() && self.hess.is_some()
    }

    pub fn in_cone(&self, x: &[f64]) -> bool {
        x.len() == self.n + self.m && x.iter().all(|a| a.is_finite()) && (self.cone)(x)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.l)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.grad {
            Some(g) => Ok(g(x)),
            None => fd_gradient(|y| self.value_or_nan(y), x, norm(x)),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymBilinearForm> {
        match &self.hess {
            Some(h) => Ok(h(x)),
            None => fd_hessian(|y| self.value_or_nan(y), x, norm(x)),
        }
    }

    fn value_or_nan(&self, x: &[f64]) -> f64 {
        if self.in_cone(x) {
            self.value(x)
        } else {
            f64::NAN
        }
    }
}

/// `sign(a)|a|^e`.
fn signed_pow(a: f64, e: f64) -> f64 {
    a.signum() * a.abs().powf(e)
}

fn check_power_exponent(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::BadExponent {
            family: "power_q".into(),
            q,
        })
    }
}

/// Conditions (A) `L_{,k} ≥ 0`, (B) `Hess(L)` positive semi-definite and
/// (C) `L_{,1} + … + L_{,n} > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbcReport {
    pub a_ok: bool,
    pub b_ok: bool,
    pub c_ok: bool,
}

impl AbcReport {
    pub fn all(&self) -> bool {
        self.a_ok && self.b_ok && self.c_ok
    }
}

pub fn check_conditions_abc(combiner: &LCombiner, x: &[f64]) -> Result<AbcReport> {
    check_dim(combiner.n + combiner.m, x.len())?;
    if !combiner.in_cone(x) {
        return Err(Error::InvalidArgument(format!("{x:?} is outside the cone of L")));
    }
    let grad = combiner.gradient(x)?;
    let hess = combiner.hessian(x)?;
    let tau = CRITERION_TOLERANCE;
    let partials = &grad[..combiner.n];
    let class = eigen_classify(&hess, tau)?.classification;
    Ok(AbcReport {
        a_ok: partials.iter().all(|&p| p >= -tau),
        b_ok: matches!(
            class,
            Definiteness::PositiveDefinite | Definiteness::PositiveSemiDefiniteDegenerate
        ),
        c_ok: partials.iter().sum::<f64>() > tau,
    })
}

/// Values and tensors of the inputs at one tangent vector.
struct Inputs {
    f: Vec<f64>,
    g: Vec<SymBilinearForm>,
    /// `g^k_v v`
    u: Vec<Vec<f64>>,
    /// one-form coefficients
    b: Vec<Vec<f64>>,
    /// `β_μ(v)`
    beta: Vec<f64>,
}

impl Inputs {
    fn gather(metrics: &[ConicMetric], forms: &[OneFormAtom], p: &[f64], v: &[f64]) -> Result<Self> {
        let mut out = Inputs {
            f: Vec::with_capacity(metrics.len()),
            g: Vec::with_capacity(metrics.len()),
            u: Vec::with_capacity(metrics.len()),
            b: Vec::with_capacity(forms.len()),
            beta: Vec::with_capacity(forms.len()),
        };
        for m in metrics {
            let g = m.tensor(p, v)?;
            out.f.push(m.eval(p, v)?);
            out.u.push(g.lower(v));
            out.g.push(g);
        }
        for w in forms {
            let b = w.coefficients(p);
            out.beta.push(numkernel::dot(&b, v));
            out.b.push(b);
        }
        Ok(out)
    }

    fn args(&self) -> Vec<f64> {
        self.f.iter().chain(&self.beta).copied().collect()
    }

    /// Rows `g^k v / F_k` followed by `b_μ`.
    fn jacobian(&self, dim: usize) -> DMatrix<f64> {
        let rows = self.f.len() + self.b.len();
        let mut j = DMatrix::zeros(rows, dim);
        for (k, (u, f)) in self.u.iter().zip(&self.f).enumerate() {
            for i in 0..dim {
                j[(k, i)] = u[i] / f;
            }
        }
        for (mu, b) in self.b.iter().enumerate() {
            for i in 0..dim {
                j[(self.f.len() + mu, i)] = b[i];
            }
        }
        j
    }

    fn angular(&self, k: usize, v: &[f64]) -> SymBilinearForm {
        angular_from(&self.g[k], v, self.f[k])
    }
}

/// The closed-form tensor of a general `L`-combination.
fn central_tensor(inputs: &Inputs, v: &[f64], grad: &[f64], hess: &SymBilinearForm) -> SymBilinearForm {
    let dim = v.len();
    let mut g = DMatrix::zeros(dim, dim);
    for k in 0..inputs.f.len() {
        g += inputs.angular(k, v).matrix() * (0.5 * grad[k] / inputs.f[k]);
    }
    let j = inputs.jacobian(dim);
    g += j.transpose() * hess.matrix() * &j * 0.5;
    SymBilinearForm::symmetrized(g)
}

fn shared_chart(metrics: &[ConicMetric]) -> Result<ChartManifold> {
    let first = metrics
        .first()
        .ok_or_else(|| Error::InvalidArity("at least one conic Finsler input is required".into()))?;
    let dim = first.dimension();
    for m in metrics {
        check_dim(dim, m.dimension())?;
    }
    let charts: Vec<ChartManifold> = metrics.iter().map(|m| m.manifold().clone()).collect();
    let (lo, hi) = first.manifold().sample_box();
    ChartManifold::new(
        dim,
        move |p| charts.iter().all(|c| c.contains(p)),
        lo.to_vec(),
        hi.to_vec(),
    )
}

fn check_forms(forms: &[OneFormAtom], chart: &ChartManifold) -> Result<()> {
    let p = chart.probe_point();
    for w in forms {
        check_dim(chart.dimension(), w.coefficients(&p).len())?;
    }
    Ok(())
}

fn ensure_nonempty(metric: ConicMetric) -> Result<ConicMetric> {
    let base = metric.manifold().probe_point();
    let any = numkernel::unit_directions(metric.dimension(), DOMAIN_PROBES)
        .iter()
        .any(|d| metric.in_domain(&base, d));
    if any {
        Ok(metric)
    } else {
        Err(Error::DomainEmpty { base })
    }
}

fn all_constant(metrics: &[ConicMetric], forms: &[OneFormAtom]) -> bool {
    metrics.iter().all(|m| m.is_translation_invariant()) && forms.iter().all(|w| w.is_constant())
}

/// `F = √L(F_1, …, F_n, β_{n+1}, …, β_{n+m})` on
/// `A = ∩ A_k ∩ {arguments ∈ B}` with the central closed-form tensor.
pub fn combine(
    combiner: &LCombiner,
    metrics: &[ConicMetric],
    forms: &[OneFormAtom],
) -> Result<ConicMetric> {
    if metrics.len() != combiner.n || forms.len() != combiner.m {
        return Err(Error::InvalidArity(format!(
            "combiner expects {} metrics and {} one-forms, got {} and {}",
            combiner.n,
            combiner.m,
            metrics.len(),
            forms.len()
        )));
    }
    let chart = shared_chart(metrics)?;
    check_forms(forms, &chart)?;
    let ms: Arc<[ConicMetric]> = metrics.into();
    let ws: Arc<[OneFormAtom]> = forms.into();
    let args = {
        let (ms, ws) = (ms.clone(), ws.clone());
        move |p: &[f64], v: &[f64]| -> Option<Vec<f64>> {
            let mut x = Vec::with_capacity(ms.len() + ws.len());
            for m in ms.iter() {
                let f = m.eval(p, v).ok()?;
                if !(f > 0.0) {
                    return None;
                }
                x.push(f);
            }
            x.extend(ws.iter().map(|w| w.apply(p, v)));
            Some(x)
        }
    };
    let args = Arc::new(args);
    let (c1, c2, c3) = (combiner.clone(), combiner.clone(), combiner.clone());
    let (a1, a2) = (args.clone(), args.clone());
    let tensor = move |p: &[f64], v: &[f64]| -> Result<SymBilinearForm> {
        let inputs = Inputs::gather(&ms, &ws, p, v)?;
        let x = inputs.args();
        let grad = c3.gradient(&x)?;
        let hess = c3.hessian(&x)?;
        Ok(central_tensor(&inputs, v, &grad, &hess))
    };
    let label = format!("combine[{}]", combiner.label);
    ensure_nonempty(ConicMetric::from_parts(
        chart,
        move |p, v| a1(p, v).is_some_and(|x| c1.in_cone(&x)),
        move |p, v| a2(p, v).map_or(f64::NAN, |x| c2.value(&x).sqrt()),
        Some(Arc::new(tensor)),
        all_constant(metrics, forms),
        label,
    ))
}

/// `R = (Σ F_k^q + Σ |β_μ|^q)^{1/q}` for `q ≥ 1`; when `q < 2` the vectors
/// with some `β_μ(v) = 0` are removed from the domain.
///
/// The tensor is evaluated in a cancellation-free form: with `a_r` the
/// arguments and `x_r` their `w`-derivatives,
/// `g(w,w) = R^{2−2q} [R^q Σ F_k^{q−2} h^k(w,w)
///   + ½(q−1) Σ_{r,s} |a_r a_s|^{q−2} (x_r a_s − x_s a_r)² + (Σ |a_r|^{q−2} a_r x_r)²]`.
pub fn power_q_combine(metrics: &[ConicMetric], forms: &[OneFormAtom], q: f64) -> Result<ConicMetric> {
    check_power_exponent(q)?;
    let chart = shared_chart(metrics)?;
    check_forms(forms, &chart)?;
    let ms: Arc<[ConicMetric]> = metrics.into();
    let ws: Arc<[OneFormAtom]> = forms.into();
    let (dm, dw) = (ms.clone(), ws.clone());
    let (vm, vw) = (ms.clone(), ws.clone());
    let domain = move |p: &[f64], v: &[f64]| {
        dm.iter().all(|m| m.eval(p, v).is_ok_and(|f| f > 0.0))
            && (q >= 2.0 || dw.iter().all(|w| w.apply(p, v) != 0.0))
    };
    let value = move |p: &[f64], v: &[f64]| {
        let s: f64 = vm.iter().map(|m| m.eval_or_nan(p, v).powf(q)).sum::<f64>()
            + vw.iter().map(|w| w.apply(p, v).abs().powf(q)).sum::<f64>();
        s.powf(1.0 / q)
    };
    let tensor = move |p: &[f64], v: &[f64]| -> Result<SymBilinearForm> {
        let inputs = Inputs::gather(&ms, &ws, p, v)?;
        let a = inputs.args();
        let dim = v.len();
        let j = inputs.jacobian(dim);
        let rq: f64 = a.iter().map(|x| x.abs().powf(q)).sum();
        let r = rq.powf(1.0 / q);
        let mut g = DMatrix::zeros(dim, dim);
        for k in 0..inputs.f.len() {
            g += inputs.angular(k, v).matrix() * (rq * inputs.f[k].powf(q - 2.0));
        }
        let weights: Vec<f64> = a.iter().map(|x| x.abs().powf(q - 2.0)).collect();
        if q != 1.0 {
            for rr in 0..a.len() {
                for ss in (rr + 1)..a.len() {
                    let d = j.row(rr) * a[ss] - j.row(ss) * a[rr];
                    g += d.transpose() * &d * ((q - 1.0) * weights[rr] * weights[ss]);
                }
            }
        }
        let mut lead = j.row(0) * 0.0;
        for rr in 0..a.len() {
            lead += j.row(rr) * (weights[rr] * a[rr]);
        }
        g += lead.transpose() * &lead;
        g *= r.powf(2.0 - 2.0 * q);
        Ok(SymBilinearForm::symmetrized(g))
    };
    ensure_nonempty(ConicMetric::from_parts(
        chart,
        domain,
        value,
        Some(Arc::new(tensor)),
        all_constant(metrics, forms),
        format!("power_q({q})"),
    ))
}

/// `F = F₀ φ(β/F₀)` on `{v ∈ A₀ : β(v)/F₀(v) ∈ I}`.
pub fn phi_combine(f0: &ConicMetric, beta: &OneFormAtom, profile: &PhiProfile) -> Result<ConicMetric> {
    let chart = shared_chart(std::slice::from_ref(f0))?;
    check_forms(std::slice::from_ref(beta), &chart)?;
    let arg = {
        let (f0, beta) = (f0.clone(), beta.clone());
        Arc::new(move |p: &[f64], v: &[f64]| -> Option<(f64, f64)> {
            let a = f0.eval(p, v).ok().filter(|a| *a > 0.0)?;
            Some((a, beta.apply(p, v) / a))
        })
    };
    let (a1, a2, a3) = (arg.clone(), arg.clone(), arg);
    let (pr1, pr2, pr3, pr4) = (profile.clone(), profile.clone(), profile.clone(), profile.clone());
    let (f0t, bt) = (f0.clone(), beta.clone());
    let tensor = move |p: &[f64], v: &[f64]| -> Result<SymBilinearForm> {
        let f = f0t.eval(p, v)?;
        let g0 = f0t.tensor(p, v)?;
        let b = bt.coefficients(p);
        let pv = pr3.values(numkernel::dot(&b, v) / f)?;
        Ok(phi_tensor(&g0, f, &b, v, &pv))
    };
    let metric = ConicMetric::from_parts(
        chart,
        move |p, v| a1(p, v).is_some_and(|(_, s)| pr1.contains(s)),
        move |p, v| a2(p, v).map_or(f64::NAN, |(a, s)| a * (pr2.phi)(s)),
        Some(Arc::new(tensor)),
        f0.is_translation_invariant() && beta.is_constant(),
        format!("phi[{}]", profile.name),
    )
    .with_domain_diagnostic(move |p, v| {
        a3(p, v)
            .filter(|(_, s)| !pr4.contains(*s))
            .map(|(_, s)| Error::OutsideProfile { s })
    });
    ensure_nonempty(metric)
}

/// `2g = φ₁h⁰ + ½ψ⁻¹φ₂ (β(v) g⁰(v,·)/F₀² − β)² + ½ψ⁻¹ (φ₁ g⁰(v,·)/F₀ + ψ̇β)²`.
fn phi_tensor(g0: &SymBilinearForm, f: f64, b: &[f64], v: &[f64], pv: &ProfileValues) -> SymBilinearForm {
    let u = g0.lower(v);
    let beta_v = numkernel::dot(b, v);
    let h0 = angular_from(g0, v, f);
    let c1: Vec<f64> = u.iter().zip(b).map(|(ui, bi)| beta_v * ui / (f * f) - bi).collect();
    let c2: Vec<f64> = u
        .iter()
        .zip(b)
        .map(|(ui, bi)| pv.phi1 * ui / f + pv.psi_dot * bi)
        .collect();
    h0.scaled(0.5 * pv.phi1)
        + numkernel::outer(&c1, 0.25 * pv.phi2 / pv.psi)
        + numkernel::outer(&c2, 0.25 / pv.psi)
}

/// The named `(F₀, β)` families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedFamily {
    /// `F₀^{q+1}/|β|^q`
    Kropina(f64),
    /// `F₀^{q+1}/|F₀ − β|^q`
    Matsumoto(f64),
    /// `F₀ + β`
    Randers,
    /// `(F₀ + β)²/F₀`
    SquareOverF0,
}

impl NamedFamily {
    pub fn profile(&self) -> Result<PhiProfile> {
        match *self {
            NamedFamily::Kropina(q) => PhiProfile::kropina(q),
            NamedFamily::Matsumoto(q) => PhiProfile::matsumoto(q),
            NamedFamily::Randers => Ok(PhiProfile::randers()),
            NamedFamily::SquareOverF0 => Ok(PhiProfile::square_over_f0()),
        }
    }

    /// The set `A*` where the family is strongly convex, in terms of
    /// `a = F₀(v)` and `b = β(v)`.
    fn strongly_convex(&self, a: f64, b: f64) -> bool {
        match *self {
            NamedFamily::Kropina(_) => b != 0.0,
            NamedFamily::Matsumoto(q) => (a - (q + 1.0) * b) * (a - b) > 0.0,
            NamedFamily::Randers => a + b > 0.0,
            NamedFamily::SquareOverF0 => a * a > b * b,
        }
    }
}

/// Builds a named family together with its strong-convexity domain `A*`.
pub fn named_family(
    family: NamedFamily,
    f0: &ConicMetric,
    beta: &OneFormAtom,
) -> Result<(ConicMetric, FiberPredicate)> {
    let metric = phi_combine(f0, beta, &family.profile()?)?.with_label(format!("{family:?}"));
    let (m, f0, beta) = (metric.clone(), f0.clone(), beta.clone());
    let strong: FiberPredicate = Arc::new(move |p, v| {
        m.in_domain(p, v)
            && match f0.eval(p, v) {
                Ok(a) => family.strongly_convex(a, beta.apply(p, v)),
                Err(_) => false,
            }
    });
    Ok((metric, strong))
}

/// `F = F₁ φ(F₂/F₁)` on `{v ∈ A₁ ∩ A₂ : F₂(v)/F₁(v) ∈ I}`.
pub fn f1f2_combine(f1: &ConicMetric, f2: &ConicMetric, profile: &PhiProfile) -> Result<ConicMetric> {
    let chart = shared_chart(&[f1.clone(), f2.clone()])?;
    let arg = {
        let (f1, f2) = (f1.clone(), f2.clone());
        Arc::new(move |p: &[f64], v: &[f64]| -> Option<(f64, f64)> {
            let a = f1.eval(p, v).ok().filter(|a| *a > 0.0)?;
            let b = f2.eval(p, v).ok().filter(|b| *b > 0.0)?;
            Some((a, b / a))
        })
    };
    let (a1, a2, a3) = (arg.clone(), arg.clone(), arg);
    let (pr1, pr2, pr3, pr4) = (profile.clone(), profile.clone(), profile.clone(), profile.clone());
    let (m1, m2) = (f1.clone(), f2.clone());
    let tensor = move |p: &[f64], v: &[f64]| -> Result<SymBilinearForm> {
        let (a, b) = (m1.eval(p, v)?, m2.eval(p, v)?);
        let (g1, g2) = (m1.tensor(p, v)?, m2.tensor(p, v)?);
        let pv = pr3.values(b / a)?;
        let (u1, u2) = (g1.lower(v), g2.lower(v));
        let h1 = angular_from(&g1, v, a);
        let h2 = angular_from(&g2, v, b);
        let c1: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| b * x / (a * a) - y / b).collect();
        let c2: Vec<f64> = u1
            .iter()
            .zip(&u2)
            .map(|(x, y)| pv.phi1 * x / a + pv.psi_dot * y / b)
            .collect();
        Ok(h1.scaled(0.5 * pv.phi1)
            + h2.scaled(0.5 * a / b * pv.psi_dot)
            + numkernel::outer(&c1, 0.25 * pv.phi2 / pv.psi)
            + numkernel::outer(&c2, 0.25 / pv.psi))
    };
    let metric = ConicMetric::from_parts(
        chart,
        move |p, v| a1(p, v).is_some_and(|(_, s)| pr1.contains(s)),
        move |p, v| a2(p, v).map_or(f64::NAN, |(a, s)| a * (pr2.phi)(s)),
        Some(Arc::new(tensor)),
        f1.is_translation_invariant() && f2.is_translation_invariant(),
        format!("f1f2[{}]", profile.name),
    )
    .with_domain_diagnostic(move |p, v| {
        a3(p, v)
            .filter(|(_, s)| !pr4.contains(*s))
            .map(|(_, s)| Error::OutsideProfile { s })
    });
    ensure_nonempty(metric)
}

/// `F₁^{q+1}/|F₁ − F₂|^q` with its domain `A* = {F₁ − (q+1)F₂ > 0, F₁ − F₂ > 0}`.
pub fn gen_matsumoto2(
    f1: &ConicMetric,
    f2: &ConicMetric,
    q: f64,
) -> Result<(ConicMetric, FiberPredicate)> {
    if q == 0.0 || !q.is_finite() {
        return Err(Error::BadExponent {
            family: "matsumoto".into(),
            q,
        });
    }
    let profile = PhiProfile::new(
        format!("matsumoto({q})"),
        move |s: f64| (1.0 - s).abs().powf(-q),
        move |s: f64| q * (1.0 - s).abs().powf(-q) / (1.0 - s),
        move |s: f64| q * (q + 1.0) * (1.0 - s).abs().powf(-q) / ((1.0 - s) * (1.0 - s)),
        |s: f64| s != 1.0,
    );
    let metric = f1f2_combine(f1, f2, &profile)?;
    let (m, a, b) = (metric.clone(), f1.clone(), f2.clone());
    let strong: FiberPredicate = Arc::new(move |p, v| {
        m.in_domain(p, v)
            && match (a.eval(p, v), b.eval(p, v)) {
                (Ok(x), Ok(y)) => x - (q + 1.0) * y > 0.0 && x - y > 0.0,
                _ => false,
            }
    });
    Ok((metric, strong))
}

/// Closed-form tensor of [`gen_matsumoto2`], written directly in terms of
/// `F₁`, `F₂`, their tensors and angular metrics.
pub fn gen_matsumoto2_tensor(
    f1: &ConicMetric,
    f2: &ConicMetric,
    q: f64,
    base: &[f64],
    v: &[f64],
) -> Result<SymBilinearForm> {
    let (a, b) = (f1.eval(base, v)?, f2.eval(base, v)?);
    let (g1, g2) = (f1.tensor(base, v)?, f2.tensor(base, v)?);
    let (u1, u2) = (g1.lower(v), g2.lower(v));
    let h1 = angular_from(&g1, v, a);
    let h2 = angular_from(&g2, v, b);
    let c1: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| b * x / (a * a) - y / b).collect();
    let c2: Vec<f64> = u1
        .iter()
        .zip(&u2)
        .map(|(x, y)| (a - (q + 1.0) * b) * x / (a * a) + q * y / b)
        .collect();
    let rhs = h1.scaled((a - b) * (a - (q + 1.0) * b) / (a * a))
        + h2.scaled(q * (a - b) / b)
        + numkernel::outer(&c1, q * (q + 1.0))
        + numkernel::outer(&c2, 1.0);
    Ok(rhs.scaled(((a - b) / a).abs().powf(-(2.0 * q + 2.0))))
}

/// Profile value, `s` and `‖β‖²_{g⁰_v}` at a tangent vector.
fn beta_data(
    f0: &ConicMetric,
    beta: &OneFormAtom,
    profile: &PhiProfile,
    base: &[f64],
    v: &[f64],
) -> Result<(ProfileValues, f64, SymBilinearForm)> {
    let f = f0.eval(base, v)?;
    let g0 = f0.tensor(base, v)?;
    let b = beta.coefficients(base);
    check_dim(v.len(), b.len())?;
    let pv = profile.values(numkernel::dot(&b, v) / f)?;
    let z = g0.solve(&b).ok_or(Error::DegenerateTensor { parameter: 0.0 })?;
    Ok((pv, numkernel::dot(&b, &z), g0))
}

/// `det g = (φ − sφ̇)^{N−2} ((‖β‖² − s²)φ̈ + φ − sφ̇) φ^{N+1} det g⁰`.
pub fn det_tensor_formula(
    f0: &ConicMetric,
    beta: &OneFormAtom,
    profile: &PhiProfile,
    base: &[f64],
    v: &[f64],
) -> Result<f64> {
    let (pv, nb2, g0) = beta_data(f0, beta, profile, base, v)?;
    let n = v.len() as i32;
    let first = pv.phi - pv.s * pv.phi_dot;
    let second = (nb2 - pv.s * pv.s) * pv.phi_ddot + first;
    Ok(first.powi(n - 2) * second * pv.phi.powi(n + 1) * g0.determinant())
}

/// Strong-convexity test at `v` from the profile alone: for `N > 2`,
/// `φ − sφ̇ > 0` and `φ̈(‖β‖² − s²) + φ − sφ̇ > 0`; for `N = 2`, the second
/// inequality only.
pub fn characterization_nd(
    f0: &ConicMetric,
    beta: &OneFormAtom,
    profile: &PhiProfile,
    base: &[f64],
    v: &[f64],
) -> Result<bool> {
    let (pv, nb2, _) = beta_data(f0, beta, profile, base, v)?;
    let first = pv.phi - pv.s * pv.phi_dot;
    let second = pv.phi_ddot * (nb2 - pv.s * pv.s) + first;
    Ok(if v.len() > 2 { first > 0.0 && second > 0.0 } else { second > 0.0 })
}

/// `(φ(s) − sφ̇(s)) + (b² − s²)φ̈(s) > 0` on a grid of `|s| ≤ b < b0`.
pub fn chern_shen_check(profile: &PhiProfile, b0: f64, grid: usize) -> bool {
    let grid = grid.max(2);
    (0..grid).all(|i| {
        let b = b0 * i as f64 / grid as f64;
        (0..=grid).all(|j| {
            let s = -b + 2.0 * b * j as f64 / grid as f64;
            match profile.values(s) {
                Ok(pv) => (pv.phi - s * pv.phi_dot) + (b * b - s * s) * pv.phi_ddot > 0.0,
                Err(_) => false,
            }
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversibleMode {
    /// `F(v) + F(−v)`
    Sum,
    /// `√(F(v)² + F(−v)²)`
    Quadratic,
}

/// `v ↦ F(−v)`, on `−A`.
pub fn reflected(f: &ConicMetric) -> ConicMetric {
    let (d, e, t) = (f.clone(), f.clone(), f.clone());
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
    ConicMetric::from_parts(
        f.manifold().clone(),
        move |p, v| d.in_domain(p, &neg(v)),
        move |p, v| e.eval_or_nan(p, &neg(v)),
        Some(Arc::new(move |p: &[f64], v: &[f64]| t.tensor(p, &neg(v)))),
        f.is_translation_invariant(),
        format!("reflected[{}]", f.label()),
    )
}

/// The reversible metrics `F̃ = F(v) + F(−v)` and `F̂ = √(F(v)² + F(−v)²)`.
pub fn reversibilize(f: &ConicMetric, mode: ReversibleMode) -> Result<ConicMetric> {
    let pair = [f.clone(), reflected(f)];
    let out = match mode {
        ReversibleMode::Sum => combine(&LCombiner::sum(2, 0), &pair, &[])?,
        ReversibleMode::Quadratic => power_q_combine(&pair, &[], 2.0)?,
    };
    Ok(out.with_label(format!("reversibilize[{mode:?}]")))
}

/// Recovers `F(v)` from `F̃(v)`, `F̂(v)` and whether `F(v) ≥ F(−v)`:
/// `F = ½(F̃ ± √(2F̂² − F̃²))`.
pub fn recover_from_reversibilizations(f_sum: f64, f_quadratic: f64, forward_larger: bool) -> f64 {
    let root = (2.0 * f_quadratic * f_quadratic - f_sum * f_sum).max(0.0).sqrt();
    if forward_larger {
        0.5 * (f_sum + root)
    } else {
        0.5 * (f_sum - root)
    }
}

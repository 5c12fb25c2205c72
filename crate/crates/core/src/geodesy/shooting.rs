use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::metrics::ConicMetric;
use crate::numkernel::{self, eigen_classify, norm, DEFAULT_EIGEN_TOLERANCE};

use super::curves::{curve_length, Curve};

/// Relative determinant threshold below which the tensor counts as degenerate.
const DEGENERATE_DET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub parameter: f64,
}

/// Acceleration from the Euler–Lagrange equations of `G = F²/2`:
/// `g a = ∂ₓG − (∂ₓ(g v))·v`.
fn acceleration(m: &ConicMetric, x: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !m.in_domain(x, v) || v.iter().all(|&c| c == 0.0) {
        return Err(Error::LeftDomain { parameter: t });
    }
    let g = m.tensor(x, v)?;
    let scale_n = g.spectral_norm().powi(x.len() as i32);
    if !(g.determinant().abs() > DEGENERATE_DET * scale_n) {
        return Err(Error::DegenerateTensor { parameter: t });
    }
    if m.is_translation_invariant() {
        return Ok(vec![0.0; x.len()]);
    }
    let n = x.len();
    let h = f64::EPSILON.cbrt() * norm(x).max(1.0);
    let energy_at = |p: &[f64]| -> Result<f64> {
        let f = m.eval(p, v).map_err(|_| Error::LeftDomain { parameter: t })?;
        Ok(0.5 * f * f)
    };
    let mut rhs = vec![0.0; n];
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h;
        let up = energy_at(&p)?;
        p[i] = x[i] - h;
        let down = energy_at(&p)?;
        p[i] = x[i];
        rhs[i] = (up - down) / (2.0 * h);
    }
    let vn = norm(v);
    let hv = h / vn;
    let lowered_at = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(m.tensor(p, v).map_err(|_| Error::LeftDomain { parameter: t })?.lower(v))
    };
    let up = lowered_at(&numkernel::axpy(hv, v, x))?;
    let down = lowered_at(&numkernel::axpy(-hv, v, x))?;
    for i in 0..n {
        rhs[i] -= (up[i] - down[i]) / (2.0 * hv);
    }
    g.solve(&rhs).ok_or(Error::DegenerateTensor { parameter: t })
}

/// RK4 integration of the geodesic equations from `start` up to `t_end`,
/// sampled every `step` (the last step is shortened to land on `t_end`).
pub fn geodesic_shoot(
    m: &ConicMetric,
    start: &GeodesicState,
    t_end: f64,
    step: f64,
) -> Result<Vec<GeodesicState>> {
    check_dim(m.dimension(), start.position.len())?;
    check_dim(m.dimension(), start.velocity.len())?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if !(t_end >= start.parameter) {
        return Err(Error::InvalidArgument("t_end must not precede the start parameter".into()));
    }
    let n = m.dimension();
    let mut out = vec![start.clone()];
    let (mut x, mut v, mut t) = (start.position.clone(), start.velocity.clone(), start.parameter);
    acceleration(m, &x, &v, t)?;
    while t < t_end - 1e-12 * t_end.abs().max(1.0) {
        let dt = step.min(t_end - t);
        let shift = |base: &[f64], k: &[f64], c: f64| -> Vec<f64> { numkernel::axpy(c, k, base) };
        let a1 = acceleration(m, &x, &v, t)?;
        let (x2, v2) = (shift(&x, &v, 0.5 * dt), shift(&v, &a1, 0.5 * dt));
        let a2 = acceleration(m, &x2, &v2, t + 0.5 * dt)?;
        let (x3, v3) = (shift(&x, &v2, 0.5 * dt), shift(&v, &a2, 0.5 * dt));
        let a3 = acceleration(m, &x3, &v3, t + 0.5 * dt)?;
        let (x4, v4) = (shift(&x, &v3, dt), shift(&v, &a3, dt));
        let a4 = acceleration(m, &x4, &v4, t + dt)?;
        for i in 0..n {
            x[i] += dt / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            v[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        t = if t_end - t <= step { t_end } else { t + dt };
        if !m.in_domain(&x, &v) {
            return Err(Error::LeftDomain { parameter: t });
        }
        out.push(GeodesicState {
            position: x.clone(),
            velocity: v.clone(),
            parameter: t,
        });
    }
    Ok(out)
}

/// `exp_base(v)`: the geodesic with initial velocity `v` at parameter 1.
pub fn exp_map(m: &ConicMetric, base: &[f64], v: &[f64], step: f64) -> Result<Vec<f64>> {
    Ok(exp_state(m, base, v, step)?.position)
}

fn exp_state(m: &ConicMetric, base: &[f64], v: &[f64], step: f64) -> Result<GeodesicState> {
    check_dim(m.dimension(), v.len())?;
    if v.iter().all(|&c| c == 0.0) {
        return Ok(GeodesicState {
            position: base.to_vec(),
            velocity: v.to_vec(),
            parameter: 1.0,
        });
    }
    if !m.in_domain(base, v) {
        return Err(Error::OutsideDomain {
            base: base.to_vec(),
            v: v.to_vec(),
        });
    }
    let start = GeodesicState {
        position: base.to_vec(),
        velocity: v.to_vec(),
        parameter: 0.0,
    };
    let path = geodesic_shoot(m, &start, 1.0, step)?;
    Ok(path.into_iter().last().expect("non-empty orbit"))
}

/// `g_T(d exp_base[w], T)` at parameter 1, after projecting `w` onto the
/// `g_v`-orthogonal complement of `v`. The differential is a central
/// difference of [`exp_map`] in its vector argument.
pub fn gauss_lemma_residual(m: &ConicMetric, base: &[f64], v: &[f64], w: &[f64], step: f64) -> Result<f64> {
    check_dim(m.dimension(), w.len())?;
    let gv = m.tensor(base, v)?;
    let coef = gv.apply(v, w) / gv.apply(v, v);
    let w_perp = numkernel::axpy(-coef, v, w);
    let eps = 1e-5 * norm(v).max(1.0) / norm(&w_perp).max(f64::MIN_POSITIVE);
    let plus = exp_map(m, base, &numkernel::axpy(eps, &w_perp, v), step)?;
    let minus = exp_map(m, base, &numkernel::axpy(-eps, &w_perp, v), step)?;
    let dexp = numkernel::scale(0.5 / eps, &numkernel::sub(&plus, &minus));
    let end = exp_state(m, base, v, step)?;
    let gt = m.tensor(&end.position, &end.velocity)?;
    Ok(gt.apply(&dexp, &end.velocity))
}

/// Outcome of [`radial_minimality_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialReport {
    /// Minimum of `ℓ_F(perturbed) / ℓ_F(radial geodesic)` over evaluated trials.
    pub min_ratio: f64,
    pub all_pass: bool,
    pub evaluated: usize,
    /// Trials whose perturbed curve left the geodesic ball (not counted).
    pub skipped_outside_ball: usize,
    /// Trials whose perturbed curve was not admissible (not counted).
    pub skipped_inadmissible: usize,
}

/// Cubic Hermite interpolation of a sampled geodesic: position and velocity.
fn hermite(path: &[GeodesicState], t: f64) -> (Vec<f64>, Vec<f64>) {
    let last = path.len() - 1;
    let k = path
        .windows(2)
        .position(|w| t <= w[1].parameter)
        .unwrap_or(last.saturating_sub(1));
    let (s0, s1) = (&path[k], &path[(k + 1).min(last)]);
    let h = s1.parameter - s0.parameter;
    if h <= 0.0 {
        return (s0.position.clone(), s0.velocity.clone());
    }
    let u = (t - s0.parameter) / h;
    let (h00, h10, h01, h11) = (
        2.0 * u.powi(3) - 3.0 * u * u + 1.0,
        u.powi(3) - 2.0 * u * u + u,
        -2.0 * u.powi(3) + 3.0 * u * u,
        u.powi(3) - u * u,
    );
    let (d00, d10, d01, d11) = (
        (6.0 * u * u - 6.0 * u) / h,
        3.0 * u * u - 4.0 * u + 1.0,
        (-6.0 * u * u + 6.0 * u) / h,
        3.0 * u * u - 2.0 * u,
    );
    let n = s0.position.len();
    let pos = (0..n)
        .map(|i| {
            h00 * s0.position[i] + h10 * h * s0.velocity[i] + h01 * s1.position[i] + h11 * h * s1.velocity[i]
        })
        .collect();
    let vel = (0..n)
        .map(|i| {
            d00 * s0.position[i] + d10 * s0.velocity[i] + d01 * s1.position[i] + d11 * s1.velocity[i]
        })
        .collect();
    (pos, vel)
}

/// Inverts the exponential map by Newton iteration with a finite-difference
/// Jacobian, starting from `guess`.
fn inverse_exp(m: &ConicMetric, base: &[f64], target: &[f64], guess: &[f64], step: f64) -> Result<Vec<f64>> {
    if m.is_translation_invariant() {
        return Ok(numkernel::sub(target, base));
    }
    let n = base.len();
    let mut u = guess.to_vec();
    for _ in 0..20 {
        let r = numkernel::sub(&exp_map(m, base, &u, step)?, target);
        if norm(&r) < 1e-11 * norm(target).max(1.0) {
            return Ok(u);
        }
        let h = 1e-6 * norm(&u).max(1e-3);
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = u.clone();
            up[j] += h;
            let mut dn = u.clone();
            dn[j] -= h;
            let d = numkernel::sub(&exp_map(m, base, &up, step)?, &exp_map(m, base, &dn, step)?);
            for i in 0..n {
                jac[(i, j)] = d[i] / (2.0 * h);
            }
        }
        let delta = jac
            .lu()
            .solve(&nalgebra::DVector::from_vec(r))
            .ok_or(Error::DegenerateTensor { parameter: 1.0 })?;
        for j in 0..n {
            u[j] -= delta[j];
        }
    }
    Err(Error::NoBracket { hint: norm(&u) })
}

/// Compares radial geodesics from `base` against randomly perturbed
/// admissible curves with the same endpoints inside the forward geodesic
/// ball of `radius`.
///
/// Perturbed curves are `γ(t) + Σ_{k=1}^{3} a_k sin(kπt) η_k`, with `γ` the
/// Hermite-interpolated geodesic on `[0, 1]`. Ball membership is checked at
/// 17 points per curve through the inverse exponential map.
pub fn radial_minimality_test(
    m: &ConicMetric,
    base: &[f64],
    radius: f64,
    trials: usize,
    seed: u64,
    step: f64,
) -> Result<RadialReport> {
    check_dim(m.dimension(), base.len())?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let n = m.dimension();
    for d in numkernel::unit_directions(n, 32) {
        if m.in_domain(base, &d) {
            let Ok(g) = m.tensor(base, &d) else { continue };
            let report = eigen_classify(&g, DEFAULT_EIGEN_TOLERANCE)?;
            if !report.is_positive_definite() {
                return Err(Error::NotConicFinsler {
                    base: base.to_vec(),
                    reason: format!(
                        "fundamental tensor at direction {d:?} is {}",
                        report.classification.as_str()
                    ),
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect()
    };
    let mut report = RadialReport {
        min_ratio: f64::INFINITY,
        all_pass: true,
        evaluated: 0,
        skipped_outside_ball: 0,
        skipped_inadmissible: 0,
    };
    let mut attempts = 0;
    while report.evaluated + report.skipped_outside_ball + report.skipped_inadmissible < trials {
        attempts += 1;
        if attempts > 100 * trials.max(1) {
            break;
        }
        let d = gaussian(&mut rng);
        if !m.in_domain(base, &d) {
            continue;
        }
        let rho = radius * rng.random_range(0.2..0.9);
        let u = numkernel::scale(rho / m.eval(base, &d)?, &d);
        let start = GeodesicState {
            position: base.to_vec(),
            velocity: u.clone(),
            parameter: 0.0,
        };
        let path = geodesic_shoot(m, &start, 1.0, step)?;
        let radial_len = rho;
        let etas: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let e = gaussian(&mut rng);
                numkernel::scale(1.0 / norm(&e), &e)
            })
            .collect();
        let amps: Vec<f64> = (1..=3)
            .map(|k| norm(&u) * rng.random_range(-0.3..0.3) / k as f64)
            .collect();
        let (p1, p2) = (path.clone(), path);
        let (e1, e2, a1, a2) = (etas.clone(), etas, amps.clone(), amps);
        let curve = Curve::smooth(
            0.0,
            1.0,
            move |t| {
                let mut x = hermite(&p1, t).0;
                for (k, (e, a)) in e1.iter().zip(&a1).enumerate() {
                    let c = a * ((k + 1) as f64 * std::f64::consts::PI * t).sin();
                    x = numkernel::axpy(c, e, &x);
                }
                x
            },
            move |t| {
                let mut v = hermite(&p2, t).1;
                for (k, (e, a)) in e2.iter().zip(&a2).enumerate() {
                    let w = (k + 1) as f64 * std::f64::consts::PI;
                    v = numkernel::axpy(a * w * (w * t).cos(), e, &v);
                }
                v
            },
        )?;
        let mut inside = true;
        let mut guess = numkernel::scale(1.0 / 16.0, &u);
        for i in 1..16 {
            let x = curve.position(i as f64 / 16.0);
            match inverse_exp(m, base, &x, &guess, step) {
                Ok(w) if m.in_domain(base, &w) && m.eval(base, &w)? < radius => guess = w,
                _ => {
                    inside = false;
                    break;
                }
            }
        }
        if !inside {
            report.skipped_outside_ball += 1;
            continue;
        }
        match curve_length(m, &curve, Some(129)) {
            Ok(len) => {
                report.evaluated += 1;
                report.min_ratio = report.min_ratio.min(len / radial_len);
            }
            Err(Error::NotAdmissible { .. }) => report.skipped_inadmissible += 1,
            Err(e) => return Err(e),
        }
    }
    report.all_pass = report.evaluated > 0 && report.min_ratio >= 1.0 - 1e-6;
    Ok(report)
}

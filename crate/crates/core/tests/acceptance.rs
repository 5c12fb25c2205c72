//! One line per acceptance criterion. Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::panic::catch_unwind;
use std::time::Instant;

use common::*;
use finslerkit::combinators::{self, NamedFamily, PhiProfile, ReversibleMode};
use finslerkit::geodesy::{self, GeodesicState, GridBox};
use finslerkit::metrics::{ChartManifold, ConicMetric};
use finslerkit::minkowski::{self, catalog, TriangleReport};
use finslerkit::numkernel::{eigen_classify, DEFAULT_EIGEN_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Max relative tensor error over `samples` interior draws, and how many draws the
/// oracle could resolve (its own discrepancy estimate below 1e-7).
fn oracle_error(m: &ConicMetric, n: usize, samples: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(samples);
    while draws.len() < samples {
        let p = uniform(&mut rng, n, -1.0, 1.0);
        let v = uniform(&mut rng, n, -1.0, 1.0);
        draws.push((p, v));
    }
    let errs: Vec<Option<f64>> = draws
        .par_iter()
        .map(|(p, v)| {
            let (fd, estimate) = fd_oracle_with_estimate(m, p, v)?;
            if estimate > 1e-7 {
                return None;
            }
            let g = m.tensor(p, v).ok()?;
            Some(g.relative_difference(&fd))
        })
        .collect();
    let used = errs.iter().flatten().count();
    (errs.iter().flatten().fold(0.0, |a, &b| a.max(b)), used)
}

fn c1_oracle() -> Outcome {
    let mut fams: Vec<(String, Box<dyn Fn(usize) -> ConicMetric>)> = Vec::new();
    for b in [0.1, 0.5, 0.9] {
        fams.push((format!("randers b={b}"), Box::new(move |n| position_randers(n, b))));
    }
    for q in [0.5, 1.0, 2.0] {
        fams.push((
            format!("kropina q={q}"),
            Box::new(move |n| named(NamedFamily::Kropina(q), &warped(n), &rotating_form(n, 0.7))),
        ));
    }
    for q in [1.0, 2.0, -2.0] {
        fams.push((
            format!("matsumoto q={q}"),
            Box::new(move |n| named(NamedFamily::Matsumoto(q), &warped(n), &rotating_form(n, 0.3))),
        ));
    }
    fams.push(("sum".into(), Box::new(sum_metric)));
    for q in [1.0, 2.0, 3.0] {
        fams.push((
            format!("power_q q={q}"),
            Box::new(move |n| {
                combinators::power_q_combine(&[warped(n), euclid(n)], &[rotating_form(n, 0.5)], q).unwrap()
            }),
        ));
    }
    fams.push((
        "f1f2 matsumoto".into(),
        Box::new(|n| {
            let f2 = combinators::phi_combine(&warped(n), &constant_form(n, 0.1), &PhiProfile::unit()).unwrap();
            let shrunk = combinators::power_q_combine(&[f2], &[], 2.0).unwrap();
            let small = combinators::combine(
                &finslerkit::combinators::LCombiner::power_q(1, 0, 2.0).unwrap(),
                &[shrunk],
                &[],
            )
            .unwrap();
            let (m, _) = combinators::gen_matsumoto2(&euclid(n), &scaled(&small, 0.3), 1.0).unwrap();
            m
        }),
    ));
    let mut worst = (0.0_f64, String::new());
    let mut min_used = usize::MAX;
    for (name, make) in &fams {
        for n in [2, 3] {
            let m = make(n);
            if !m.has_analytic_tensor() {
                return Err(format!("{name} N={n} has no analytic tensor"));
            }
            let (err, used) = oracle_error(&m, n, 1000, 11 + n as u64);
            min_used = min_used.min(used);
            if err > worst.0 {
                worst = (err, format!("{name} N={n}"));
            }
        }
    }
    check(
        worst.0 < 1e-6 && min_used >= 990,
        format!(
            "{} families x N in {{2,3}}, max rel err {:.2e} ({}), min oracle-resolved samples {min_used}/1000",
            fams.len(),
            worst.0,
            worst.1
        ),
    )
}

/// `c F` as a metric (same domain, tensor `c² g`).
fn scaled(m: &ConicMetric, c: f64) -> ConicMetric {
    combinators::combine(
        &finslerkit::combinators::LCombiner::new(1, 0, move |x| c * c * x[0] * x[0], |x| x[0] > 0.0, "scale")
            .with_derivatives(
                move |x| vec![2.0 * c * c * x[0]],
                move |_| finslerkit::numkernel::SymBilinearForm::from_diagonal(&[2.0 * c * c]),
            ),
        &[m.clone()],
        &[],
    )
    .unwrap()
}

/// Eigen tolerance for analytic tensors, whose noise sits near 1e-14 relative.
const ANALYTIC_TOLERANCE: f64 = 1e-13;

fn c2_domains() -> Outcome {
    let tol = ANALYTIC_TOLERANCE;
    let base = [0.0, 0.0];
    // Matsumoto q=1, b=0.5: (α − 2β)(α − β) = (1 − cos θ)(1 − cos θ / 2) vanishes at θ = 0 only.
    let mats = named(NamedFamily::Matsumoto(1.0), &euclid(2), &constant_form(2, 0.5));
    let zeros = [0.0_f64];
    let pd_at = |t: f64| {
        mats.tensor(&base, &[t.cos(), t.sin()])
            .and_then(|g| eigen_classify(&g, tol))
            .map(|r| r.is_positive_definite())
            .unwrap_or(false)
    };
    let dist_to_zero = |t: f64| zeros.iter().map(|z| (t - z).rem_euclid(TAU).min((z - t).rem_euclid(TAU))).fold(f64::INFINITY, f64::min);
    let k = 36_000;
    let mut far_misses = 0;
    let mut boundary_err = 0.0_f64;
    for i in 0..k {
        let t = TAU * i as f64 / k as f64;
        if !pd_at(t) {
            let d = dist_to_zero(t);
            boundary_err = boundary_err.max(d);
            far_misses += (d > 1e-3) as usize;
        }
    }
    let brackets = zeros.iter().all(|&z| !pd_at(z) && pd_at(z + 1e-3) && pd_at(z - 1e-3));
    let mats_ok = far_misses == 0 && brackets;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut kropina_bad = 0;
    let mut kropina_n = 0;
    for q in [0.5, 1.0, 2.0] {
        for n in [2, 3] {
            let m = named(NamedFamily::Kropina(q), &warped(n), &rotating_form(n, 0.8));
            for _ in 0..500 {
                let p = uniform(&mut rng, n, -1.0, 1.0);
                let v = uniform(&mut rng, n, -1.0, 1.0);
                if rotating_form(n, 0.8).apply(&p, &v).abs() <= 1e-6 {
                    continue;
                }
                kropina_n += 1;
                let pd = m.tensor(&p, &v).and_then(|g| eigen_classify(&g, tol)).map(|r| r.is_positive_definite());
                kropina_bad += !matches!(pd, Ok(true)) as usize;
            }
        }
    }
    let mut randers_bad = 0;
    let mut randers_n = 0;
    for b in [0.1, 0.5, 0.9] {
        for n in [2, 3] {
            let m = position_randers(n, b);
            for _ in 0..500 {
                let p = uniform(&mut rng, n, -1.0, 1.0);
                let v = uniform(&mut rng, n, -1.0, 1.0);
                let f0 = warped(n).eval(&p, &v).unwrap();
                if f0 + rotating_form(n, b).apply(&p, &v) <= 0.0 {
                    continue;
                }
                randers_n += 1;
                let pd = m.tensor(&p, &v).and_then(|g| eigen_classify(&g, tol)).map(|r| r.is_positive_definite());
                randers_bad += !matches!(pd, Ok(true)) as usize;
            }
        }
    }
    check(
        mats_ok && kropina_bad == 0 && randers_bad == 0,
        format!(
            "matsumoto non-PD directions within {boundary_err:.1e} rad of analytic zeros, bracketed at 1e-3: {brackets}; \
             kropina non-PD {kropina_bad}/{kropina_n}; randers non-PD {randers_bad}/{randers_n}"
        ),
    )
}

fn family_sample(rng: &mut ChaCha8Rng, n: usize) -> (ConicMetric, finslerkit::metrics::OneFormAtom, PhiProfile) {
    let b = rng.random_range(0.05..1.6);
    let beta = rotating_form(n, b);
    let f0 = warped(n);
    let profile = match rng.random_range(0..5) {
        0 => PhiProfile::randers(),
        1 => PhiProfile::kropina(rng.random_range(0.3..2.5)).unwrap(),
        2 => PhiProfile::matsumoto(rng.random_range(0.3..2.5)).unwrap(),
        3 => PhiProfile::matsumoto(-rng.random_range(1.0..3.0)).unwrap(),
        _ => PhiProfile::square_over_f0(),
    };
    (f0, beta, profile)
}

fn c3_characterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut agree, mut tested, mut pd, mut excluded) = (0, 0, 0, 0);
    for n in [2, 3] {
        let mut got = 0;
        while got < 1000 {
            let (f0, beta, profile) = family_sample(&mut rng, n);
            let m = combinators::phi_combine(&f0, &beta, &profile).unwrap();
            let p = uniform(&mut rng, n, -1.0, 1.0);
            let v = uniform(&mut rng, n, -1.0, 1.0);
            let Ok(g) = m.tensor(&p, &v) else { continue };
            let Ok(rep) = eigen_classify(&g, DEFAULT_EIGEN_TOLERANCE) else { continue };
            got += 1;
            if rep.min_eigenvalue.abs() < 1e-7 * g.spectral_norm() {
                excluded += 1;
                continue;
            }
            let ch = combinators::characterization_nd(&f0, &beta, &profile, &p, &v).unwrap();
            tested += 1;
            pd += rep.is_positive_definite() as usize;
            agree += (ch == rep.is_positive_definite()) as usize;
        }
    }
    check(
        agree == tested && pd > 0 && pd < tested,
        format!("agree {agree}/{tested} ({pd} PD, {excluded} excluded near the degenerate shell)"),
    )
}

fn c4_determinant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    let mut count = 0;
    while count < 1000 {
        let n = 2 + count % 2;
        let (f0, beta, profile) = family_sample(&mut rng, n);
        let m = combinators::phi_combine(&f0, &beta, &profile).unwrap();
        let p = uniform(&mut rng, n, -1.0, 1.0);
        let v = uniform(&mut rng, n, -1.0, 1.0);
        let Ok(g) = m.tensor(&p, &v) else { continue };
        let direct = g.determinant();
        let formula = combinators::det_tensor_formula(&f0, &beta, &profile, &p, &v).unwrap();
        count += 1;
        worst = worst.max((direct - formula).abs() / direct.abs().max(formula.abs()));
    }
    let randers = named(NamedFamily::Randers, &euclid(2), &constant_form(2, 0.5));
    let spot_direct = randers.tensor(&[0.0, 0.0], &[1.0, 0.0]).unwrap().determinant();
    let spot_formula = combinators::det_tensor_formula(
        &euclid(2),
        &constant_form(2, 0.5),
        &PhiProfile::randers(),
        &[0.0, 0.0],
        &[1.0, 0.0],
    )
    .unwrap();
    check(
        worst < 1e-8 && (spot_direct - 3.375).abs() < 1e-12 && (spot_formula - 3.375).abs() < 1e-12,
        format!("max rel diff {worst:.2e} on 1000 samples; spot {spot_direct} / {spot_formula}"),
    )
}

fn c5_examples() -> Outcome {
    let spiral = minkowski::gauge_from_curve(&catalog::spiral(0.1).unwrap());
    let value = spiral.value(&[0.0, 2.0 * 0.2_f64.sin()]).unwrap();
    let expected = 4.0 * 0.2_f64.sin() / PI;
    let eps: f64 = 0.02;
    let s2 = minkowski::gauge_from_curve(&catalog::spiral(eps).unwrap());
    let violated = minkowski::triangle_report(
        &s2,
        &[0.0, 2.0 * (2.0 * eps).sin()],
        &[(2.0 * eps).cos(), -(2.0 * eps).sin()],
    ) == TriangleReport::Violated;
    let lorentz = catalog::lorentz_gauge();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut reverse_ok = 0;
    let mut pairs = 0;
    while pairs < 1000 {
        let draw = |rng: &mut ChaCha8Rng| {
            let y: f64 = rng.random_range(0.01..3.0);
            vec![rng.random_range(-0.999..0.999) * y, y]
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        pairs += 1;
        let sum = [a[0] + b[0], a[1] + b[1]];
        let (fa, fb, fs) = (lorentz.value(&a).unwrap(), lorentz.value(&b).unwrap(), lorentz.value(&sum).unwrap());
        reverse_ok += (fs >= (fa + fb) * (1.0 - 1e-12)) as usize;
    }
    check(
        (value - expected).abs() < 1e-10 && violated && reverse_ok == pairs,
        format!(
            "spiral gauge {value:.15} vs {expected:.15}; triangle violated at eps=0.02: {violated}; \
             reverse triangle {reverse_ok}/{pairs}"
        ),
    )
}

fn c6_separation() -> Outcome {
    let start = Instant::now();
    let e = euclid(2);
    let grid = GridBox::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap();
    let g = geodesy::build_separation_graph(&e, &grid, 41, 3).unwrap();
    let d = geodesy::separation(&g, g.nearest_node(&[0.0, 0.0]).unwrap(), g.nearest_node(&[3.0, 4.0]).unwrap())
        .unwrap()
        .value;
    let euclid_ok = (d - 5.0).abs() / 5.0 < 0.02;

    let lorentz = ConicMetric::minkowski(ChartManifold::euclidean(2), catalog::lorentz_gauge()).unwrap();
    let lbox = GridBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
    let mut values = Vec::new();
    let mut unreachable = Vec::new();
    for res in [21, 41, 81] {
        let g = geodesy::build_separation_graph(&lorentz, &lbox, res, (res - 1) / 2).unwrap();
        let o = g.nearest_node(&[0.0, 0.0]).unwrap();
        values.push(geodesy::separation(&g, o, g.nearest_node(&[0.0, 2.0]).unwrap()).unwrap().value);
        unreachable.push(geodesy::separation(&g, o, g.nearest_node(&[1.0, 0.5]).unwrap()).unwrap().value);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let below = values[2] < 0.2;
    let inf = unreachable.iter().all(|v| *v == f64::INFINITY);
    let secs = start.elapsed().as_secs_f64();
    check(
        euclid_ok && decreasing && below && inf && secs < 60.0,
        format!(
            "euclidean {d:.4} (within 2%: {euclid_ok}); lorentz 21/41/81 = {:.4}/{:.4}/{:.4} \
             (strictly decreasing: {decreasing}, < 0.2 at 81: {below}); unreachable = inf: {inf}; {secs:.1}s",
            values[0], values[1], values[2]
        ),
    )
}

fn c7_geodesics() -> Outcome {
    let step = 1e-2;
    let mut worst_dev = 0.0_f64;
    let mut worst_speed = 0.0_f64;
    let mut worst_exp = 0.0_f64;
    let flat: Vec<ConicMetric> = vec![
        euclid(2),
        named(NamedFamily::Randers, &euclid(2), &constant_form(2, 0.6)),
        ConicMetric::minkowski(
            ChartManifold::euclidean(2),
            minkowski::gauge_from_curve(&catalog::cosine_circle(0.1, 3.0).unwrap()),
        )
        .unwrap(),
        ConicMetric::minkowski(ChartManifold::euclidean(2), catalog::lorentz_gauge()).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in &flat {
        for _ in 0..20 {
            let p = uniform(&mut rng, 2, -1.0, 1.0);
            let mut v = uniform(&mut rng, 2, -1.0, 1.0);
            if m.label() == "minkowski" && !m.in_domain(&p, &v) {
                v = vec![0.3 * v[0], 1.0];
            }
            let start = GeodesicState { position: p.clone(), velocity: v.clone(), parameter: 0.0 };
            let path = geodesy::geodesic_shoot(m, &start, 1.0, step).map_err(|e| e.to_string())?;
            let f0 = m.eval(&p, &v).unwrap();
            for s in &path {
                let line: Vec<f64> = p.iter().zip(&v).map(|(a, b)| a + s.parameter * b).collect();
                let dev = line.iter().zip(&s.position).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst_dev = worst_dev.max(dev);
                let speed = m.eval(&s.position, &s.velocity).unwrap();
                worst_speed = worst_speed.max((speed - f0).abs() / f0);
            }
            let e = geodesy::exp_map(m, &p, &v, step).map_err(|e| e.to_string())?;
            worst_exp = worst_exp.max(e.iter().zip(p.iter().zip(&v)).map(|(x, (a, b))| (x - a - b).abs()).fold(0.0, f64::max));
        }
    }
    let curved = position_randers(2, 0.5);
    let mut curved_speed = 0.0_f64;
    for _ in 0..20 {
        let p = uniform(&mut rng, 2, -1.0, 1.0);
        let v = uniform(&mut rng, 2, -1.0, 1.0);
        let start = GeodesicState { position: p.clone(), velocity: v.clone(), parameter: 0.0 };
        let path = geodesy::geodesic_shoot(&curved, &start, 1.0, step).map_err(|e| e.to_string())?;
        let f0 = curved.eval(&p, &v).unwrap();
        for s in &path {
            let speed = curved.eval(&s.position, &s.velocity).unwrap();
            curved_speed = curved_speed.max((speed - f0).abs() / f0);
        }
    }
    check(
        worst_dev < 1e-8 && worst_speed < 1e-6 && worst_exp < 1e-6 && curved_speed < 1e-6,
        format!(
            "straightness {worst_dev:.1e}, speed drift {worst_speed:.1e} (flat) / {curved_speed:.1e} \
             (position-dependent randers), |exp - (p+v)| {worst_exp:.1e}"
        ),
    )
}

fn c8_gauss() -> Outcome {
    let m = position_randers(2, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pairs: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..100)
        .map(|_| {
            (
                uniform(&mut rng, 2, -0.5, 0.5),
                uniform(&mut rng, 2, -0.5, 0.5),
                uniform(&mut rng, 2, -0.5, 0.5),
            )
        })
        .collect();
    let res: Vec<Result<f64, String>> = pairs
        .par_iter()
        .map(|(p, v, w)| geodesy::gauss_lemma_residual(&m, p, v, w, 1e-2).map_err(|e| e.to_string()))
        .collect();
    let errors = res.iter().filter(|r| r.is_err()).count();
    let worst = res.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs()));
    check(errors == 0 && worst < 1e-4, format!("max |residual| {worst:.2e} on 100 pairs, {errors} errors"))
}

fn c9_radial() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, m) in [
        ("euclidean", euclid(2)),
        ("randers b=0.5", named(NamedFamily::Randers, &euclid(2), &constant_form(2, 0.5))),
    ] {
        let r = geodesy::radial_minimality_test(&m, &[0.0, 0.0], 0.5, 200, 9, 1e-2).map_err(|e| e.to_string())?;
        ok &= r.min_ratio >= 1.0 - 1e-6 && r.evaluated > 0;
        lines.push(format!("{name}: min_ratio {:.9} over {} trials", r.min_ratio, r.evaluated));
    }
    check(ok, lines.join("; "))
}

fn c10_reversibilization() -> Outcome {
    let f = position_randers(2, 0.6);
    let tilde = combinators::reversibilize(&f, ReversibleMode::Sum).unwrap();
    let hat = combinators::reversibilize(&f, ReversibleMode::Quadratic).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0_f64;
    let mut symmetric = true;
    for _ in 0..1000 {
        let p = uniform(&mut rng, 2, -1.0, 1.0);
        let v = uniform(&mut rng, 2, -1.0, 1.0);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let (fw, bw) = (f.eval(&p, &v).unwrap(), f.eval(&p, &neg).unwrap());
        let (t, h) = (tilde.eval(&p, &v).unwrap(), hat.eval(&p, &v).unwrap());
        symmetric &= t == tilde.eval(&p, &neg).unwrap() && h == hat.eval(&p, &neg).unwrap();
        let rec = combinators::recover_from_reversibilizations(t, h, fw >= bw);
        worst = worst.max((rec - fw).abs() / fw);
    }
    check(worst < 1e-10 && symmetric, format!("max rel recovery error {worst:.1e}; exact symmetry: {symmetric}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", c1_oracle),
        ("convexity domains", c2_domains),
        ("characterization iff", c3_characterization),
        ("determinant formula", c4_determinant),
        ("example values", c5_examples),
        ("separation", c6_separation),
        ("geodesics", c7_geodesics),
        ("gauss lemma", c8_gauss),
        ("radial minimality", c9_radial),
        ("reversibilization", c10_reversibilization),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {id:>2} {name} ({secs:.1}s): {detail}");
    }
    println!("acceptance: {failed} failed, {:.1}s total", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! End-to-end acceptance checks. Each check prints one PASS/FAIL line with
//! its measurements and wall time; the test fails if any check fails.

use std::time::{Duration, Instant};

use pdelta::constitutive::{equivalence_suite, PDeltaParams, StressModel};
use pdelta::diagnostics::{boundary_split, refinement_study, RegularityReport};
use pdelta::geometry::{
    boundary_charts, build_mesh, cutoff_eval, summation_by_parts_check, tangential_deriv, tangential_diff, Chart,
    DomainSpec,
};
use pdelta::solver::{
    assemble_residual, continuation_solve, energy, f_error, h1_error, manufactured_rhs, newton_solve,
    ContinuationSchedule, DiscreteField, ExactField, NamedSource, NewtonOptions,
};
use pdelta::tensor::SymTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn random_sym(rng: &mut ChaCha8Rng, dim: usize, magnitude: f64) -> SymTensor {
    let n = dim * (dim + 1) / 2;
    let mut t = SymTensor::zeros(dim).unwrap();
    for (k, v) in t.packed_mut().iter_mut().enumerate().take(n) {
        *v = rng.random::<f64>() * 2.0 - 1.0 + if k == 0 { 1e-3 } else { 0.0 };
    }
    let s = magnitude / t.norm();
    t.scale(s)
}

fn slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn sci(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", "))
}

fn pair_orders(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn equivalence() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut worst_drift: f64 = 0.0;
    let mut notes = Vec::new();
    for p in [1.2, 1.5, 1.8, 2.0] {
        let params = PDeltaParams::new(p, 0.0, 1.0).map_err(|e| e.to_string())?;
        let reports = equivalence_suite(&params, 10_000, 42).map_err(|e| e.to_string())?;
        for r in &reports {
            let bounded = r.min > 0.0 && r.max.is_finite() && r.min <= r.max;
            let pass = bounded
                && match r.within_exact(1e-12) {
                    Some(inside) => inside,
                    None => r.drift < 0.05,
                };
            if r.exact_window.is_none() {
                worst_drift = worst_drift.max(r.drift);
            }
            if !pass {
                notes.push(format!("p={p} {} [{:e}, {:e}] drift {:.4}", r.quantity, r.min, r.max, r.drift));
            }
            ok &= pass;
        }
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(30);
    Ok((ok, format!("worst drift {worst_drift:.4}; failures {notes:?}; {:.1} s", t.as_secs_f64())))
}

fn oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_jac: f64 = 0.0;
    for _ in 0..1000 {
        let p = 1.05 + 0.95 * rng.random::<f64>();
        let delta = if rng.random::<bool>() { 0.0 } else { log_uniform(&mut rng, 1e-3, 1.0) };
        let eps = if rng.random::<bool>() { 0.0 } else { 1e-2 };
        let model = StressModel::regularized(PDeltaParams::new(p, delta, 1.0).unwrap(), eps, None).unwrap();
        let m_pm = log_uniform(&mut rng, 1e-3, 1e3);
        let pm = random_sym(&mut rng, 3, m_pm);
        let q = random_sym(&mut rng, 3, 1.0);
        let an = model.stress_jacobian(&pm).map_err(|e| e.to_string())?.apply(&q).unwrap();
        let h = 1e-5 * pm.norm();
        let fd = model.stress(&pm.axpby(1.0, &q, h)).sub(&model.stress(&pm.axpby(1.0, &q, -h))).scale(0.5 / h);
        worst_jac = worst_jac.max(fd.sub(&an).norm() / an.norm());
    }

    let mesh = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
    let f = NamedSource::SmoothMixed { amplitude: 1.0 };
    let n = 2 * mesh.n_nodes();
    let mut worst_grad: f64 = 0.0;
    for _ in 0..1000 {
        let p = 1.05 + 0.95 * rng.random::<f64>();
        let delta = if rng.random::<bool>() { 0.0 } else { log_uniform(&mut rng, 1e-3, 1.0) };
        let model = StressModel::regularized(PDeltaParams::new(p, delta, 1.0).unwrap(), 1e-2, None).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let uf = DiscreteField::from_dofs(&mesh, &u);
        let r = assemble_residual(&mesh, &model, &f, &uf).map_err(|e| e.to_string())?;
        let an: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
        let h = 1e-5;
        let at = |s: f64| {
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + s * b).collect();
            energy(&mesh, &model, &f, &DiscreteField::from_dofs(&mesh, &w))
        };
        let fd = (at(h).map_err(|e| e.to_string())? - at(-h).map_err(|e| e.to_string())?) / (2.0 * h);
        worst_grad = worst_grad.max((fd - an).abs() / an.abs());
    }
    let t = start.elapsed();
    let ok = worst_jac < 1e-6 && worst_grad < 1e-6 && t < Duration::from_secs(30);
    Ok((ok, format!("jacobian rel err {worst_jac:.2e}, energy gradient rel err {worst_grad:.2e}; {:.1} s", t.as_secs_f64())))
}

fn coercivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lower_violations, mut upper_violations) = (0, 0);
    let mut calibrated: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..10_000 {
        let p = 1.05 + 0.95 * rng.random::<f64>();
        let delta = if rng.random::<f64>() < 0.2 { 0.0 } else { log_uniform(&mut rng, 1e-3, 10.0) };
        let mu = log_uniform(&mut rng, 0.1, 10.0);
        let model = StressModel::canonical(PDeltaParams::new(p, delta, mu).unwrap());
        let m_pm = log_uniform(&mut rng, 1e-6, 1e6);
        let pm = random_sym(&mut rng, 3, m_pm);
        let m_q = log_uniform(&mut rng, 1e-3, 1e3);
        let q = random_sym(&mut rng, 3, m_q);
        let a = model.stress_jacobian(&pm).map_err(|e| e.to_string())?;
        let phi2 = model.nfunction().phi_second(pm.norm()).map_err(|e| e.to_string())?;
        let form = a.quadratic_form(&q).unwrap();
        let lower = model.kappa0() * phi2 * q.norm_sq();
        // floating-point slack only; at p = 2 the bound is an identity
        if form < lower * (1.0 - 1e-12) {
            lower_violations += 1;
        }
        min_margin = min_margin.min(form / lower);
        calibrated = calibrated.max(a.max_abs() / (model.kappa1_bound() * phi2));
        if a.max_abs() > model.kappa1_bound() * phi2 * (1.0 + 1e-12) {
            upper_violations += 1;
        }
    }
    let ok = lower_violations == 0 && upper_violations == 0;
    Ok((
        ok,
        format!(
            "lower violations {lower_violations}, min form/bound {min_margin:.6}; component violations {upper_violations}, max |dS|/(k1 phi'') {calibrated:.4}"
        ),
    ))
}

fn linear_exactness() -> Outcome {
    let start = Instant::now();
    let model = StressModel::canonical(PDeltaParams::new(2.0, 0.0, 1.0).unwrap());
    let exact = ExactField::by_name("sine_bubble", 1.0).unwrap();
    let f = manufactured_rhs(&model, &exact);
    let (mut hs, mut errs, mut iters) = (Vec::new(), Vec::new(), Vec::new());
    for level in 2..=6 {
        let mesh = build_mesh(&DomainSpec::UnitSquare, level).unwrap();
        let (u, rep) = newton_solve(&mesh, &model, &f, &DiscreteField::zeros(&mesh), &NewtonOptions::default())
            .map_err(|e| e.to_string())?;
        hs.push(mesh.h_max);
        errs.push(h1_error(&u, &exact));
        iters.push(rep.iterations);
    }
    let order = slope(&hs, &errs);
    let pairs = pair_orders(&errs);
    let t = start.elapsed();
    let ok = iters.iter().all(|&i| i == 1)
        && order >= 0.9
        && pairs.iter().all(|&o| o >= 0.9)
        && t < Duration::from_secs(120);
    Ok((ok, format!("iterations {iters:?}, H1 errors {}, fitted order {order:.3}, pair orders {pairs:.3?}; {:.1} s", sci(&errs), t.as_secs_f64())))
}

fn nonlinear_convergence() -> Outcome {
    let start = Instant::now();
    let model = StressModel::canonical(PDeltaParams::new(1.5, 0.1, 1.0).unwrap());
    let exact = ExactField::by_name("sine_bubble", 1.0).unwrap();
    let f = manufactured_rhs(&model, &exact);
    let meshes: Vec<_> = (2..=6).map(|l| build_mesh(&DomainSpec::UnitSquare, l).unwrap()).collect();
    let (mut hs, mut errs, mut iters) = (Vec::new(), Vec::new(), Vec::new());
    let mut prev: Option<DiscreteField> = None;
    for mesh in &meshes {
        let u0 = prev.as_ref().map_or_else(|| DiscreteField::zeros(mesh), |u| u.prolong(mesh));
        let (u, rep) = newton_solve(mesh, &model, &f, &u0, &NewtonOptions::default()).map_err(|e| e.to_string())?;
        hs.push(mesh.h_max);
        errs.push(f_error(&model, &u, &exact));
        iters.push(rep.iterations);
        prev = Some(u);
    }
    let order = slope(&hs, &errs);
    let pairs = pair_orders(&errs);
    let t = start.elapsed();
    let ok = iters.iter().all(|&i| i <= 15)
        && errs.windows(2).all(|w| w[1] < w[0])
        && order >= 0.8
        && pairs.iter().all(|&o| o >= 0.8)
        && t < Duration::from_secs(300);
    Ok((ok, format!("iterations {iters:?}, F errors {}, fitted order {order:.3}, pair orders {pairs:.3?}; {:.1} s", sci(&errs), t.as_secs_f64())))
}

struct Studies {
    reports: Vec<(f64, f64, RegularityReport)>,
    elapsed: Duration,
}

fn run_studies() -> Result<Studies, String> {
    let start = Instant::now();
    let f = NamedSource::SmoothMixed { amplitude: 1.0 };
    let mut reports = Vec::new();
    for p in [1.5, 1.8] {
        for delta in [0.0, 0.1] {
            let params = PDeltaParams::new(p, delta, 1.0).unwrap();
            let r = refinement_study(&DomainSpec::UnitDisk, &params, &f, &[3, 4, 5], &ContinuationSchedule::default())
                .map_err(|e| format!("p={p} delta={delta}: {e}"))?;
            reports.push((p, delta, r));
        }
    }
    Ok(Studies { reports, elapsed: start.elapsed() })
}

fn last_change(r: &RegularityReport, get: fn(&pdelta::diagnostics::LevelRow) -> f64) -> f64 {
    let n = r.rows.len();
    pdelta::diagnostics::relative_change(get(&r.rows[n - 2]), get(&r.rows[n - 1]))
}

fn regularity_signature(s: &Studies) -> Outcome {
    let mut ok = s.elapsed < Duration::from_secs(600);
    let mut parts = Vec::new();
    for (p, delta, r) in &s.reports {
        let (g, w) = (last_change(r, |x| x.grad_f_norm), last_change(r, |x| x.w2q));
        ok &= g < 0.1 && w < 0.1;
        if *delta == 0.0 {
            ok &= r.rows.last().unwrap().kappa_final == Some(1e-5);
        }
        parts.push(format!("(p={p}, delta={delta}) grad_F {g:.4} w2q {w:.4}"));
    }
    Ok((ok, format!("level 4->5 changes: {}; {:.1} s", parts.join(", "), s.elapsed.as_secs_f64())))
}

fn boundary_structure(s: &Studies) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, delta, r) in &s.reports {
        let top = r.rows.last().unwrap();
        let finite = top.interior.is_finite() && top.tangential.is_finite() && top.normal.is_finite();
        let (i, t, n) = (
            last_change(r, |x| x.interior),
            last_change(r, |x| x.tangential),
            last_change(r, |x| x.normal),
        );
        ok &= finite && i < 0.1 && t < 0.1 && n < 0.1;
        parts.push(format!("(p={p}, delta={delta}) {i:.3}/{t:.3}/{n:.3}"));
    }

    let spec = DomainSpec::UnitDisk;
    let model = StressModel::canonical(PDeltaParams::new(1.5, 0.1, 1.0).unwrap());
    let exact = ExactField::by_name("radial_swirl", 0.25).unwrap();
    let f = manufactured_rhs(&model, &exact);
    let charts = boundary_charts(&spec, 0.5).map_err(|e| e.to_string())?;
    let mesh = build_mesh(&spec, 5).unwrap();
    let (u, _) = newton_solve(&mesh, &model, &f, &DiscreteField::zeros(&mesh), &NewtonOptions::default())
        .map_err(|e| e.to_string())?;
    let split = boundary_split(&mesh, &charts, &model, &u).map_err(|e| e.to_string())?;
    let ratio = split.tangential / split.normal;
    ok &= ratio < 0.05;
    Ok((ok, format!("interior/tangential/normal changes {}; radial tangential/normal {ratio:.4}", parts.join(", "))))
}

fn continuation_consistency() -> Outcome {
    let f = NamedSource::SmoothMixed { amplitude: 1.0 };
    let mesh = build_mesh(&DomainSpec::UnitDisk, 4).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, delta) in [(1.5, 0.1), (1.8, 0.1), (1.5, 1.0)] {
        let params = PDeltaParams::new(p, delta, 1.0).unwrap();
        let (uc, rep) = continuation_solve(&mesh, &params, &f, &ContinuationSchedule::default()).map_err(|e| e.to_string())?;
        let (ud, _) = newton_solve(&mesh, &StressModel::canonical(params), &f, &DiscreteField::zeros(&mesh), &NewtonOptions::default())
            .map_err(|e| e.to_string())?;
        let diff = uc.max_abs_diff(&ud);
        let mono = rep.flags.apriori_monotone == Some(true);
        ok &= diff < 1e-8 && mono;
        let apriori: Vec<f64> = rep.stages.iter().map(|s| s.apriori).collect();
        parts.push(format!("(p={p}, delta={delta}) max diff {diff:.2e}, a priori {apriori:.5?}"));
    }
    Ok((ok, parts.join("; ")))
}

fn difference_quotients() -> Outcome {
    let mut worst_sbp: f64 = 0.0;
    let hat = |s: f64, a: f64, b: f64| {
        let m = 0.5 * (a + b);
        if s <= a || s >= b {
            0.0
        } else if s < m {
            (s - a) / (m - a)
        } else {
            (b - s) / (b - m)
        }
    };
    for (k, normal) in [[0.0, 1.0], [1.0, 0.0], [-0.6, 0.8]].into_iter().enumerate() {
        let chart = Chart::flat([0.1 * k as f64, -0.2], normal, 1.0, 1.0).unwrap();
        for (n, h) in [(16, 1.0 / 32.0), (32, 1.0 / 64.0)] {
            let nf = n as f64;
            let c = chart.clone();
            let f = move |x: [f64; 2]| {
                let (s, y) = c.to_local(x);
                hat(s, -0.25 * nf * h, 0.2 * nf * h) * y * (0.3 - y).max(0.0)
            };
            let c = chart.clone();
            let g = move |x: [f64; 2]| {
                let (s, y) = c.to_local(x);
                hat(s, -0.125 * nf * h, 0.375 * nf * h) * (1.0 + y) * (0.3 - y).max(0.0)
            };
            let r = summation_by_parts_check(&chart, f, g, h).map_err(|e| e.to_string())?;
            worst_sbp = worst_sbp.max(r.relative());
        }
    }

    let cover = boundary_charts(&DomainSpec::UnitDisk, 0.5).map_err(|e| e.to_string())?;
    let mut worst_order = f64::INFINITY;
    for c in cover.charts.iter().step_by(3) {
        for g_kind in 0..2 {
            let g = move |x: [f64; 2]| match g_kind {
                0 => (1.3 * x[0]).sin() * (0.7 * x[1]).cos() + x[0] * x[1] * x[1],
                _ => (x[0] - 0.2 * x[1]).exp() * cutoff_eval(c, x).value,
            };
            let grad = move |x: [f64; 2]| match g_kind {
                0 => [
                    1.3 * (1.3 * x[0]).cos() * (0.7 * x[1]).cos() + x[1] * x[1],
                    -0.7 * (1.3 * x[0]).sin() * (0.7 * x[1]).sin() + 2.0 * x[0] * x[1],
                ],
                _ => {
                    let e = (x[0] - 0.2 * x[1]).exp();
                    let cv = cutoff_eval(c, x);
                    [e * cv.value + e * cv.grad[0], -0.2 * e * cv.value + e * cv.grad[1]]
                }
            };
            let mut errs = Vec::new();
            for k in 0..5 {
                let h = c.r_p / 32.0 / 2f64.powi(k);
                let d = tangential_diff(c, h, 1).map_err(|e| e.to_string())?;
                let mut e2 = 0.0;
                for i in 0..40 {
                    for j in 0..10 {
                        let x = c.from_adapted(c.r_p * (i as f64 / 40.0 * 1.4 - 0.7), c.r_prime * (j as f64 + 0.5) / 14.0);
                        let diff = d.forward(g, x).map_err(|e| e.to_string())? - tangential_deriv(c, grad(x), x, 1).unwrap();
                        e2 += diff * diff;
                    }
                }
                errs.push(e2.sqrt());
            }
            for o in pair_orders(&errs) {
                worst_order = worst_order.min(o);
            }
        }
    }
    let ok = worst_sbp < 1e-10 && worst_order >= 0.9;
    Ok((ok, format!("worst scaled SBP residual {worst_sbp:.2e}, worst d+ order {worst_order:.3}")))
}

fn field_ratios(s: &Studies) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, delta, r) in &s.reports {
        match &r.containment {
            Some(c) => {
                ok &= c.fraction <= 1e-3;
                parts.push(format!("(p={p}, delta={delta}) {}/{}", c.outliers, c.total));
            }
            None => {
                ok = false;
                parts.push(format!("(p={p}, delta={delta}) missing"));
            }
        }
    }
    Ok((ok, format!("outliers {}", parts.join(", "))))
}

fn report(name: &str, outcome: Outcome, failures: &mut Vec<String>) {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    if !pass {
        failures.push(name.to_string());
    }
}

#[test]
fn acceptance() {
    println!();
    let mut failures = Vec::new();
    report("constitutive equivalence windows", equivalence(), &mut failures);
    report("jacobian and energy gradient oracles", oracles(), &mut failures);
    report("coercivity and component bound", coercivity(), &mut failures);
    report("linear exactness and H1 rate", linear_exactness(), &mut failures);
    report("nonlinear F-error rate", nonlinear_convergence(), &mut failures);
    let studies = run_studies();
    let with = |f: fn(&Studies) -> Outcome| studies.as_ref().map_err(Clone::clone).and_then(f);
    report("disk refinement signature", with(regularity_signature), &mut failures);
    report("boundary split stabilization", with(boundary_structure), &mut failures);
    report("continuation consistency", continuation_consistency(), &mut failures);
    report("difference quotients", difference_quotients(), &mut failures);
    report("field ratio containment", with(field_ratios), &mut failures);
    assert!(failures.is_empty(), "failed: {failures:?}");
}

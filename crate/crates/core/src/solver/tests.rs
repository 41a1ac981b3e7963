use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::constitutive::PDeltaParams;
use crate::geometry::{build_mesh, DomainSpec};

fn model(p: f64, delta: f64) -> crate::constitutive::StressModel {
    crate::constitutive::StressModel::canonical(PDeltaParams::new(p, delta, 1.0).unwrap())
}

fn random_field<'m>(mesh: &'m Mesh, rng: &mut ChaCha8Rng, scale: f64) -> DiscreteField<'m> {
    let vals: Vec<[f64; 2]> = (0..mesh.n_nodes()).map(|_| [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5]).collect();
    DiscreteField::interpolate_nodes(mesh, |i| [scale * vals[i][0], scale * vals[i][1]])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn zero_field_and_zero_source_give_zero_residual() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 2).unwrap();
    let u = DiscreteField::zeros(&mesh);
    let r = assemble_residual(&mesh, &model(1.5, 0.1), &NamedSource::Zero, &u).unwrap();
    assert!(r.iter().all(|&v| v == 0.0));
    assert_eq!(energy(&mesh, &model(1.5, 0.1), &NamedSource::Zero, &u).unwrap(), 0.0);
}

#[test]
fn linear_law_residual_is_stiffness_times_u_minus_load() {
    let mesh = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
    let m = model(2.0, 0.0);
    let f = NamedSource::SmoothMixed { amplitude: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = random_field(&mesh, &mut rng, 1.0);
    let sys = FemSystem::new(&mesh);
    let k = sys.jacobian(&m, &vec![0.0; sys.n_dofs()]).unwrap();
    let k2 = assemble_jacobian(&mesh, &m, &u).unwrap();
    assert_eq!(k, k2, "p = 2 Jacobian is independent of u");
    let load = sys.load(&f);
    let ku = k.matvec(&u.to_dofs());
    let r = assemble_residual(&mesh, &m, &f, &u).unwrap();
    for i in 0..r.len() {
        let expected = if mesh.is_boundary(i / 2) { 0.0 } else { ku[i] - load[i] };
        assert!((r[i] - expected).abs() < 1e-12, "{i}");
    }
    // ½∫|Du|² − ∫f·u
    let e = energy(&mesh, &m, &f, &u).unwrap();
    let half: f64 = (0..mesh.n_elements()).map(|k| 0.5 * mesh.area(k) * u.element_sym_grad(k).norm_sq()).sum();
    assert!((e - (half - dot(&load, &u.to_dofs()))).abs() < 1e-12);
}

#[test]
fn jacobian_is_exactly_symmetric_and_matches_directional_differences() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 3).unwrap();
    let sys = FemSystem::new(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (p, delta) in [(1.5, 0.1), (1.2, 0.01), (1.8, 1.0)] {
        let m = model(p, delta);
        let u = random_field(&mesh, &mut rng, 1.0).to_dofs();
        let v = random_field(&mesh, &mut rng, 1.0).to_dofs();
        let j = sys.jacobian(&m, &u).unwrap();
        assert_eq!(j.symmetry_defect(), 0.0);
        let h = 1e-6;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let fd: Vec<f64> = sys
            .internal_force(&m, &up)
            .iter()
            .zip(sys.internal_force(&m, &um))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let jv = j.matvec(&v);
        let err: f64 = fd.iter().zip(&jv).enumerate().filter(|(i, _)| !mesh.is_boundary(i / 2)).map(|(_, (a, b))| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = dot(&jv, &jv).sqrt();
        assert!(err < 1e-6 * scale, "p={p}: {err} vs {scale}");
    }
}

#[test]
fn energy_gradient_is_the_residual() {
    let mesh = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
    let sys = FemSystem::new(&mesh);
    let f = NamedSource::SmoothMixed { amplitude: 2.0 };
    let load = sys.load(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = crate::constitutive::StressModel::regularized(PDeltaParams::new(1.5, 0.1, 1.0).unwrap(), 1e-2, None).unwrap();
    for _ in 0..5 {
        let u = random_field(&mesh, &mut rng, 1.0).to_dofs();
        let v = random_field(&mesh, &mut rng, 1.0).to_dofs();
        let h = 1e-5;
        let shift = |s: f64| u.iter().zip(&v).map(|(a, b)| a + s * b).collect::<Vec<_>>();
        let fd = (sys.energy(&m, &load, &shift(h)) - sys.energy(&m, &load, &shift(-h))) / (2.0 * h);
        let an = dot(&sys.residual(&m, &load, &u), &v);
        assert!((fd - an).abs() < 1e-8 * an.abs().max(1.0), "{fd} vs {an}");
    }
}

#[test]
fn degenerate_jacobian_is_reported() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 1).unwrap();
    let u = DiscreteField::zeros(&mesh);
    assert!(matches!(assemble_jacobian(&mesh, &model(1.5, 0.0), &u), Err(Error::Degenerate(_))));
    assert!(assemble_jacobian(&mesh, &model(2.0, 0.0), &u).is_ok());
}

#[test]
fn linear_problem_converges_in_one_step() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 3).unwrap();
    let u0 = DiscreteField::zeros(&mesh);
    let f = NamedSource::Constant { amplitude: 1.0 };
    let (_, rep) = newton_solve(&mesh, &model(2.0, 0.0), &f, &u0, &NewtonOptions::default()).unwrap();
    assert_eq!(rep.iterations, 1);
    assert!(rep.flags.converged);
    assert!(rep.source_norm > 0.0);
}

#[test]
fn zero_source_returns_zero_from_any_start() {
    let mesh = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u0 = random_field(&mesh, &mut rng, 0.3);
    let (u, _) = newton_solve(&mesh, &model(1.5, 0.1), &NamedSource::Zero, &u0, &NewtonOptions::default()).unwrap();
    assert!(u.max_abs() < 1e-9, "{}", u.max_abs());
}

#[test]
fn solution_is_independent_of_the_initial_guess() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 3).unwrap();
    let m = model(1.5, 0.1);
    let f = NamedSource::SmoothMixed { amplitude: 1.0 };
    let opts = NewtonOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, ra) = newton_solve(&mesh, &m, &f, &random_field(&mesh, &mut rng, 1.0), &opts).unwrap();
    let (b, _) = newton_solve(&mesh, &m, &f, &random_field(&mesh, &mut rng, 1.0), &opts).unwrap();
    assert!(a.max_abs_diff(&b) <= 10.0 * opts.tol, "{}", a.max_abs_diff(&b));
    for w in ra.energy_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
    }
}

#[test]
fn iteration_limit_is_enforced() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 2).unwrap();
    let opts = NewtonOptions { max_iter: 1, ..Default::default() };
    let f = NamedSource::Constant { amplitude: 5.0 };
    let r = newton_solve(&mesh, &model(1.2, 0.01), &f, &DiscreteField::zeros(&mesh), &opts);
    assert!(matches!(r, Err(Error::MaxIterExceeded { iterations: 1, .. })));
}

#[test]
fn continuation_matches_direct_solve() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 3).unwrap();
    let params = PDeltaParams::new(1.5, 0.1, 1.0).unwrap();
    let f = NamedSource::SmoothMixed { amplitude: 1.0 };
    let (uc, rep) = continuation_solve(&mesh, &params, &f, &ContinuationSchedule::default()).unwrap();
    assert_eq!(rep.stages.len(), 3);
    assert_eq!(rep.flags.apriori_monotone, Some(true));
    let (ud, _) = newton_solve(&mesh, &model(1.5, 0.1), &f, &DiscreteField::zeros(&mesh), &NewtonOptions::default()).unwrap();
    assert!(uc.max_abs_diff(&ud) < 1e-8);
}

#[test]
fn kappa_cascade_runs_to_the_smallest_kappa() {
    let mesh = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
    let params = PDeltaParams::new(1.5, 0.0, 1.0).unwrap();
    let f = NamedSource::Constant { amplitude: 1.0 };
    let (_, rep) = continuation_solve(&mesh, &params, &f, &ContinuationSchedule::default()).unwrap();
    let last = rep.stages.last().unwrap();
    assert_eq!((last.eps, last.kappa), (0.0, Some(1e-5)));
    assert_eq!(rep.stages.len(), 3 + 4);
    assert_eq!(rep.flags.kappa_stabilized, Some(true));
    let empty = ContinuationSchedule { kappa: vec![], ..Default::default() };
    assert!(continuation_solve(&mesh, &params, &f, &empty).is_err());
}

#[test]
fn schedule_validation() {
    let ok = ContinuationSchedule::default();
    assert!(ok.validate().is_ok());
    for bad in [
        ContinuationSchedule { eps: vec![], ..ok.clone() },
        ContinuationSchedule { eps: vec![1e-2, 0.0, 1e-4], ..ok.clone() },
        ContinuationSchedule { eps: vec![1e-4, 1e-2], ..ok.clone() },
        ContinuationSchedule { kappa: vec![1.0], ..ok.clone() },
        ContinuationSchedule { kappa: vec![1e-3, 1e-2], ..ok.clone() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn monotone_operator_on_random_fields() {
    let mesh = build_mesh(&DomainSpec::UnitDisk, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = model(1.5, 0.1);
    for _ in 0..10 {
        let u = random_field(&mesh, &mut rng, 2.0);
        let v = random_field(&mesh, &mut rng, 0.5);
        let (mono, fdist) = monotonicity_pair(&m, &u, &v).unwrap();
        assert!(mono >= 0.0 && mono >= 0.25 * fdist, "{mono} {fdist}");
    }
}

#[test]
fn field_construction_and_csv() {
    let mesh = build_mesh(&DomainSpec::UnitSquare, 1).unwrap();
    let mut vals = vec![[0.0; 2]; mesh.n_nodes()];
    vals[mesh.boundary_nodes[0]] = [1.0, 0.0];
    assert!(DiscreteField::from_values(&mesh, vals).is_err());
    let u = DiscreteField::interpolate(&mesh, |x| [x[0], 1.0]);
    assert!(mesh.boundary_nodes.iter().all(|&b| u.values()[b] == [0.0, 0.0]));
    let mut buf = Vec::new();
    u.write_csv(&mut buf, Some("# hash")).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# hash");
    assert_eq!(lines[1], "x,y,u1,u2");
    assert_eq!(lines.len(), 2 + mesh.n_nodes());
}

#[test]
fn prolongation_reproduces_linear_fields() {
    let spec = DomainSpec::UnitSquare;
    let coarse = build_mesh(&spec, 2).unwrap();
    let fine = build_mesh(&spec, 3).unwrap();
    let g = |_: [f64; 2]| [0.3, 0.2];
    let u = DiscreteField::interpolate(&coarse, g);
    let v = u.prolong(&fine);
    // interior fine nodes away from the boundary layer see only interior coarse values
    for i in 0..fine.n_nodes() {
        let x = fine.nodes[i];
        if x.iter().all(|&c| c > 0.26 && c < 0.74) {
            assert!((v.values()[i][0] - 0.3).abs() < 1e-14);
        }
    }
}

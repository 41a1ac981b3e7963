use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, SourceKind};
use crate::constitutive::{equivalence_suite, write_reports_csv, StressModel};
use crate::diagnostics::{refinement_study_with, StudyOptions};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, write_mesh};
use crate::solver::{
    continuation_solve_from, f_error, h1_error, manufactured_rhs, DiscreteField, FemSystem, NewtonOptions, Source,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_ACCEPTANCE: i32 = 5;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        Error::NotSmoothBoundary
        | Error::LevelOverflow(_)
        | Error::DegenerateElement(_)
        | Error::StepOutOfRange { .. }
        | Error::SupportViolation(_)
        | Error::DimensionMismatch(..)
        | Error::UnsupportedDimension(_)
        | Error::NegativeArgument { .. }
        | Error::MeshFormat { .. } => EXIT_PRECONDITION,
        Error::Degenerate(_)
        | Error::Quadrature { .. }
        | Error::DefinitenessLost(_)
        | Error::MaxIterExceeded { .. }
        | Error::LineSearchStalled { .. }
        | Error::Stage { .. } => EXIT_SOLVER,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::DimensionMismatch(..) => "DimensionMismatch",
        Error::UnsupportedDimension(_) => "UnsupportedDimension",
        Error::NegativeArgument { .. } => "NegativeArgument",
        Error::InvalidParameter(_) => "InvalidParameter",
        Error::Degenerate(_) => "Degenerate",
        Error::Quadrature { .. } => "Quadrature",
        Error::LevelOverflow(_) => "LevelOverflow",
        Error::DegenerateElement(_) => "DegenerateElement",
        Error::NotSmoothBoundary => "NotSmoothBoundary",
        Error::StepOutOfRange { .. } => "StepOutOfRange",
        Error::SupportViolation(_) => "SupportViolation",
        Error::DefinitenessLost(_) => "DefinitenessLost",
        Error::MaxIterExceeded { .. } => "MaxIterExceeded",
        Error::LineSearchStalled { .. } => "LineSearchStalled",
        Error::Stage { source, .. } => error_kind(source),
        Error::Config(_) => "Config",
        Error::MeshFormat { .. } => "MeshFormat",
        Error::Io(_) => "Io",
        Error::Json(_) => "Json",
        Error::Csv(_) => "Csv",
    }
}

/// Machine-readable failure description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
}

impl ErrorReport {
    pub fn from_error(err: &Error) -> Self {
        Self { exit_code: exit_code(err), kind: error_kind(err).into(), message: err.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

/// A pass/fail check made by an experiment on its own results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
struct Manifest<'a> {
    kind: &'static str,
    config: &'a ExperimentConfig,
    config_hash: String,
    version: &'static str,
    seed: u64,
    wall_time_seconds: f64,
    outputs: Vec<String>,
    checks: &'a [Check],
    exit_code: i32,
    error: Option<ErrorReport>,
}

/// What an experiment produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub error: Option<ErrorReport>,
    pub manifest: PathBuf,
}

/// Runs the experiment, writing its artifacts, a manifest and, on failure,
/// `error.json` into `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let dir = &config.output;
    std::fs::create_dir_all(dir)?;
    let start = Instant::now();
    let hash = config.hash();
    let mut outputs = Vec::new();
    let mut checks = Vec::new();
    let result = config
        .validate()
        .and_then(|()| execute(config, dir, &hash, &mut outputs, &mut checks));
    let error = result.err().map(|e| ErrorReport::from_error(&e));
    let exit_code = match &error {
        Some(e) => e.exit_code,
        None if checks.iter().any(|c| !c.passed) => EXIT_ACCEPTANCE,
        None => EXIT_OK,
    };
    if let Some(e) = &error {
        let path = dir.join("error.json");
        let doc = serde_json::json!({ "config_hash": hash, "error": e });
        std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        outputs.push(path);
    }
    let manifest = Manifest {
        kind: config.kind.name(),
        config,
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        checks: &checks,
        exit_code,
        error: error.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { exit_code, outputs, checks, error, manifest: manifest_path })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, hash: &str, report: &T, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let doc = serde_json::json!({ "config_hash": hash, "report": report });
    write_file(dir, name, (serde_json::to_string_pretty(&doc)? + "\n").as_bytes(), outputs)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], outputs: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    outputs.push(path);
    Ok(())
}

fn execute(
    cfg: &ExperimentConfig,
    dir: &Path,
    hash: &str,
    outputs: &mut Vec<PathBuf>,
    checks: &mut Vec<Check>,
) -> Result<()> {
    let preamble = &format!("# config_hash={hash}");
    let params = cfg.params()?;
    let newton = NewtonOptions { tol: cfg.tol, max_iter: cfg.max_iter, ..Default::default() };
    let stages = cfg.schedule.stages(cfg.delta)?;
    let (eps, kappa) = *stages.last().expect("validated schedule");
    let model = StressModel::regularized(params, eps, kappa)?;
    let source = cfg.source.resolve()?;
    let manufactured;
    let named;
    let f: &dyn Source = match &source {
        SourceKind::Named(n) => {
            named = *n;
            &named
        }
        SourceKind::Manufactured(ex) => {
            manufactured = manufactured_rhs(&model, ex);
            &manufactured
        }
    };

    match cfg.kind {
        ExperimentKind::CheckConstitutive => {
            let reports = equivalence_suite(&params, cfg.samples, cfg.seed)?;
            let mut csv = Vec::new();
            write_reports_csv(&mut csv, preamble, &reports)?;
            write_file(dir, "ratios.csv", &csv, outputs)?;
            write_json(dir, "ratios.json", hash, &reports, outputs)?;
            for r in &reports {
                if let Some(ok) = r.within_exact(1e-12) {
                    let (lo, hi) = r.exact_window.expect("exact window");
                    checks.push(Check::new(
                        &format!("{}_exact", r.quantity),
                        ok,
                        format!("[{:e}, {:e}] within [{lo}, {hi}]", r.min, r.max),
                    ));
                } else {
                    checks.push(Check::new(&format!("{}_drift", r.quantity), r.drift < 0.05, format!("drift {:.4}", r.drift)));
                }
            }
        }
        ExperimentKind::Solve => {
            let level = *cfg.levels.last().expect("validated levels");
            let mesh = build_mesh(&cfg.domain, level)?;
            let sys = FemSystem::new(&mesh);
            let (dofs, report) = continuation_solve_from(&sys, &params, f, &cfg.schedule, vec![0.0; sys.n_dofs()], &newton)?;
            let u = DiscreteField::from_dofs(&mesh, &dofs);
            let mut csv = Vec::new();
            u.write_csv(&mut csv, Some(preamble))?;
            write_file(dir, "solution.csv", &csv, outputs)?;
            let mut mesh_txt = format!("{preamble}\n").into_bytes();
            write_mesh(&mesh, &mut mesh_txt)?;
            write_file(dir, "mesh.txt", &mesh_txt, outputs)?;
            write_json(dir, "solve_report.json", hash, &report, outputs)?;
            checks.push(Check::new("converged", report.flags.converged, format!("residual {:e}", report.residual)));
            if let Some(ok) = report.flags.apriori_monotone {
                checks.push(Check::new("apriori_monotone", ok, String::new()));
            }
        }
        ExperimentKind::Converge => {
            let SourceKind::Manufactured(exact) = source else {
                return Err(Error::Config("source: converge needs a manufactured solution".into()));
            };
            let mut csv = format!("{preamble}\nlevel,h_max,dofs,iterations,h1_error,F_error\n");
            let mut errors: Vec<(f64, f64)> = Vec::new();
            let mut prev: Option<DiscreteField> = None;
            let meshes = cfg.levels.iter().map(|&l| build_mesh(&cfg.domain, l)).collect::<Result<Vec<_>>>()?;
            for mesh in &meshes {
                let sys = FemSystem::new(mesh);
                let u0 = prev.as_ref().map_or_else(|| vec![0.0; sys.n_dofs()], |u| u.prolong(mesh).to_dofs());
                let (dofs, report) = continuation_solve_from(&sys, &params, f, &cfg.schedule, u0, &newton)?;
                let u = DiscreteField::from_dofs(mesh, &dofs);
                let (e1, ef) = (h1_error(&u, &exact), f_error(&model, &u, &exact));
                csv += &format!(
                    "{},{:?},{},{},{:?},{:?}\n",
                    mesh.level,
                    mesh.h_max,
                    2 * (mesh.n_nodes() - mesh.boundary_nodes.len()),
                    report.iterations,
                    e1,
                    ef
                );
                errors.push((e1, ef));
                prev = Some(u);
            }
            write_file(dir, "convergence.csv", csv.as_bytes(), outputs)?;
            let decreasing = |sel: fn(&(f64, f64)) -> f64| errors.windows(2).all(|w| sel(&w[1]) < sel(&w[0]));
            checks.push(Check::new("h1_error_decreasing", decreasing(|e| e.0), format!("{:?}", errors.iter().map(|e| e.0).collect::<Vec<_>>())));
            checks.push(Check::new("F_error_decreasing", decreasing(|e| e.1), format!("{:?}", errors.iter().map(|e| e.1).collect::<Vec<_>>())));
        }
        ExperimentKind::Regularity => {
            let opts = StudyOptions { newton, suite_samples: cfg.samples, suite_seed: cfg.seed, ..Default::default() };
            let report = refinement_study_with(&cfg.domain, &params, f, &cfg.levels, &cfg.schedule, &opts)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv, Some(preamble))?;
            write_file(dir, "regularity.csv", &csv, outputs)?;
            write_json(dir, "regularity.json", hash, &report, outputs)?;
            let fl = &report.flags;
            for (name, flag) in [
                ("grad_F_stable", fl.grad_f_stable),
                ("w2q_stable", fl.w2q_stable),
                ("interior_stable", fl.interior_stable),
                ("tangential_stable", fl.tangential_stable),
                ("normal_stable", fl.normal_stable),
                ("f_sweep_monotone", fl.f_sweep_monotone),
                ("kappa_stable", fl.kappa_stable),
                ("field_ratios_contained", fl.field_ratios_contained),
            ] {
                if let Some(ok) = flag {
                    checks.push(Check::new(name, ok, String::new()));
                }
            }
        }
    }
    Ok(())
}

use std::io::Write;

use serde::Serialize;

use super::{boundary_split, grad_F_norm, field_ratio_check, w2q_exponent, w2q_indicator, Containment, F_norm};
use crate::constitutive::{equivalence_suite, PDeltaParams, RatioReport, StressModel};
use crate::error::Result;
use crate::geometry::{boundary_charts, build_mesh, DomainSpec};
use crate::solver::{continuation_solve_from, ContinuationSchedule, DiscreteField, FemSystem, NewtonOptions, Source};

/// Knobs of [`refinement_study`] beyond the problem data.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyOptions {
    pub newton: NewtonOptions,
    /// Slope bound of the boundary charts.
    pub chart_slope: f64,
    /// Source multiples solved at the top level.
    pub f_sweep: Vec<f64>,
    /// Shifts solved at the top level (recorded only).
    pub delta_sweep: Vec<f64>,
    /// Samples and seed of the constitutive windows used for the field
    /// ratio check at the top level; zero samples skips the check.
    pub suite_samples: usize,
    pub suite_seed: u64,
    /// Relative change between the last two levels counted as stable.
    pub stability_tol: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            chart_slope: 0.5,
            f_sweep: vec![1.0, 2.0, 4.0],
            delta_sweep: vec![0.01, 0.1, 1.0],
            suite_samples: 10_000,
            suite_seed: 42,
            stability_tol: 0.1,
        }
    }
}

/// One refinement level of a study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub h_max: f64,
    #[serde(rename = "F_norm")]
    pub f_norm: f64,
    #[serde(rename = "grad_F_norm")]
    pub grad_f_norm: f64,
    pub w2q: f64,
    pub interior: f64,
    pub tangential: f64,
    pub normal: f64,
    pub source_norm: f64,
    pub delta: f64,
    pub kappa_final: Option<f64>,
    pub newton_iterations: usize,
    pub kappa_stabilized: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub source_norm: f64,
    #[serde(rename = "grad_F_norm")]
    pub grad_f_norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegularityFlags {
    pub grad_f_stable: Option<bool>,
    pub w2q_stable: Option<bool>,
    pub interior_stable: Option<bool>,
    pub tangential_stable: Option<bool>,
    pub normal_stable: Option<bool>,
    /// `grad_F_norm` non-decreasing along the source sweep (1% slack).
    pub f_sweep_monotone: Option<bool>,
    /// Every level's κ cascade stabilized.
    pub kappa_stable: Option<bool>,
    /// Field ratios inside the sampled windows up to 0.1% outliers.
    pub field_ratios_contained: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub domain: DomainSpec,
    pub p: f64,
    pub delta: f64,
    pub mu: f64,
    pub q: f64,
    pub rows: Vec<LevelRow>,
    pub f_sweep: Vec<SweepPoint>,
    pub delta_sweep: Vec<SweepPoint>,
    pub field_ratios: Option<Vec<RatioReport>>,
    pub containment: Option<Containment>,
    pub flags: RegularityFlags,
}

/// `|b − a| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_change(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (b - a).abs() / m
    }
}

struct Scaled<'a>(f64, &'a dyn Source);

impl Source for Scaled<'_> {
    fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let v = self.1.eval(x);
        [self.0 * v[0], self.0 * v[1]]
    }
}

/// Solves on every level with continuation and records the regularity
/// indicators, then runs the source and shift sweeps at the top level.
pub fn refinement_study(
    spec: &DomainSpec,
    params: &PDeltaParams,
    f: &dyn Source,
    levels: &[usize],
    schedule: &ContinuationSchedule,
) -> Result<RegularityReport> {
    refinement_study_with(spec, params, f, levels, schedule, &StudyOptions::default())
}

pub fn refinement_study_with(
    spec: &DomainSpec,
    params: &PDeltaParams,
    f: &dyn Source,
    levels: &[usize],
    schedule: &ContinuationSchedule,
    opts: &StudyOptions,
) -> Result<RegularityReport> {
    params.validate()?;
    let charts = boundary_charts(spec, opts.chart_slope)?;
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::error::Error::InvalidParameter("levels must be non-empty and increasing".into()));
    }
    let stages = schedule.stages(params.delta)?;
    let (eps, kappa) = *stages.last().expect("non-empty schedule");
    let model = StressModel::regularized(*params, eps, kappa)?;
    let q = w2q_exponent(params.p);

    let meshes = levels.iter().map(|&l| build_mesh(spec, l)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(levels.len());
    let mut solutions: Vec<DiscreteField> = Vec::with_capacity(levels.len());
    let mut top_sys = None;
    for mesh in &meshes {
        let sys = FemSystem::new(mesh);
        let u0 = solutions.last().map_or_else(|| DiscreteField::zeros(mesh), |u| u.prolong(mesh));
        let (dofs, rep) = continuation_solve_from(&sys, params, f, schedule, u0.to_dofs(), &opts.newton)?;
        let u = DiscreteField::from_dofs(mesh, &dofs);
        let split = boundary_split(mesh, &charts, &model, &u)?;
        rows.push(LevelRow {
            level: mesh.level,
            h_max: mesh.h_max,
            f_norm: F_norm(mesh, &model, &u),
            grad_f_norm: grad_F_norm(mesh, &model, &u),
            w2q: w2q_indicator(mesh, &u, q)?,
            interior: split.interior,
            tangential: split.tangential,
            normal: split.normal,
            source_norm: rep.source_norm,
            delta: params.delta,
            kappa_final: kappa,
            newton_iterations: rep.iterations,
            kappa_stabilized: rep.flags.kappa_stabilized,
        });
        solutions.push(u);
        top_sys = Some(sys);
    }
    let top_sys = top_sys.expect("levels non-empty");
    let top = solutions.last().expect("levels non-empty");
    let top_mesh = top.mesh();
    let top_row = rows.last().expect("levels non-empty").clone();

    let mut f_sweep = Vec::new();
    for &s in &opts.f_sweep {
        let point = if s == 1.0 {
            SweepPoint { value: s, source_norm: top_row.source_norm, grad_f_norm: top_row.grad_f_norm }
        } else {
            let scaled = Scaled(s, f);
            let (dofs, rep) = continuation_solve_from(&top_sys, params, &scaled, schedule, top.to_dofs(), &opts.newton)?;
            let u = DiscreteField::from_dofs(top_mesh, &dofs);
            SweepPoint { value: s, source_norm: rep.source_norm, grad_f_norm: grad_F_norm(top_mesh, &model, &u) }
        };
        f_sweep.push(point);
    }
    let mut delta_sweep = Vec::new();
    for &d in &opts.delta_sweep {
        let p2 = PDeltaParams { delta: d, ..*params };
        p2.validate()?;
        let (dofs, rep) = continuation_solve_from(&top_sys, &p2, f, schedule, top.to_dofs(), &opts.newton)?;
        let u = DiscreteField::from_dofs(top_mesh, &dofs);
        let (e2, k2) = *schedule.stages(d)?.last().expect("non-empty");
        let m2 = StressModel::regularized(p2, e2, k2)?;
        delta_sweep.push(SweepPoint { value: d, source_norm: rep.source_norm, grad_f_norm: grad_F_norm(top_mesh, &m2, &u) });
    }

    let (field_ratios, containment) = if opts.suite_samples > 0 {
        let check = field_ratio_check(top_mesh, &model, top)?;
        let suite = equivalence_suite(params, opts.suite_samples, opts.suite_seed)?;
        let c = check.containment(&suite, 1e-9)?;
        (Some(check.reports), Some(c))
    } else {
        (None, None)
    };

    let stable = |get: fn(&LevelRow) -> f64| {
        (rows.len() >= 2).then(|| {
            let n = rows.len();
            relative_change(get(&rows[n - 2]), get(&rows[n - 1])) < opts.stability_tol
        })
    };
    let flags = RegularityFlags {
        grad_f_stable: stable(|r| r.grad_f_norm),
        w2q_stable: stable(|r| r.w2q),
        interior_stable: stable(|r| r.interior),
        tangential_stable: stable(|r| r.tangential),
        normal_stable: stable(|r| r.normal),
        f_sweep_monotone: (f_sweep.len() >= 2)
            .then(|| f_sweep.windows(2).all(|w| w[1].grad_f_norm >= w[0].grad_f_norm * 0.99)),
        kappa_stable: (params.delta == 0.0).then(|| rows.iter().all(|r| r.kappa_stabilized == Some(true))),
        field_ratios_contained: containment.map(|c| c.fraction <= 1e-3),
    };
    Ok(RegularityReport {
        domain: *spec,
        p: params.p,
        delta: params.delta,
        mu: params.mu,
        q,
        rows,
        f_sweep,
        delta_sweep,
        field_ratios,
        containment,
        flags,
    })
}

pub const ROW_HEADER: [&str; 13] = [
    "level",
    "h_max",
    "F_norm",
    "grad_F_norm",
    "w2q",
    "interior",
    "tangential",
    "normal",
    "source_norm",
    "delta",
    "kappa_final",
    "newton_iterations",
    "kappa_stabilized",
];

impl RegularityReport {
    /// One row per level after an optional preamble line.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: Option<&str>) -> Result<()> {
        if let Some(line) = preamble {
            writeln!(out, "{line}")?;
        }
        writeln!(out, "{}", ROW_HEADER.join(","))?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
        for r in &self.rows {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{}",
                r.level,
                r.h_max,
                r.f_norm,
                r.grad_f_norm,
                r.w2q,
                r.interior,
                r.tangential,
                r.normal,
                r.source_norm,
                r.delta,
                opt(r.kappa_final),
                r.newton_iterations,
                r.kappa_stabilized.map_or(String::new(), |b| b.to_string()),
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

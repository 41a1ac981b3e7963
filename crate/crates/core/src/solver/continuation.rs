use serde::{Deserialize, Serialize};

use super::fem::{source_norm, FemSystem};
use super::fields::Source;
use super::newton::{newton_solve_system, NewtonOptions};
use super::{DiscreteField, SolveReport};
use crate::constitutive::{PDeltaParams, StressModel};
use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Decreasing ε and κ sequences; every stage is warm-started from the
/// previous one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSchedule {
    /// Positive and strictly decreasing; the last entry may be 0.
    pub eps: Vec<f64>,
    /// Strictly decreasing in `(0, 1)`; used only when `δ = 0`.
    pub kappa: Vec<f64>,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self { eps: vec![1e-2, 1e-4, 0.0], kappa: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5] }
    }
}

impl ContinuationSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.eps.is_empty() {
            return bad("eps schedule is empty".into());
        }
        let n = self.eps.len();
        for (i, &e) in self.eps.iter().enumerate() {
            let ok = e.is_finite() && (e > 0.0 || (e == 0.0 && i + 1 == n));
            if !ok {
                return bad(format!("eps[{i}] = {e} must be positive (only the last entry may be 0)"));
            }
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps schedule must be strictly decreasing".into());
        }
        if let Some(k) = self.kappa.iter().find(|k| !(**k > 0.0 && **k < 1.0)) {
            return bad(format!("kappa = {k} must lie in (0,1)"));
        }
        if self.kappa.windows(2).any(|w| w[1] >= w[0]) {
            return bad("kappa schedule must be strictly decreasing".into());
        }
        Ok(())
    }

    /// The `(ε, κ)` stages solved for a law with shift `δ`.
    pub fn stages(&self, delta: f64) -> Result<Vec<(f64, Option<f64>)>> {
        self.validate()?;
        if delta > 0.0 {
            return Ok(self.eps.iter().map(|&e| (e, None)).collect());
        }
        let (first, rest) = self
            .kappa
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("delta = 0 requires a non-empty kappa schedule".into()))?;
        let last_eps = *self.eps.last().expect("non-empty");
        let mut out: Vec<_> = self.eps.iter().map(|&e| (e, Some(*first))).collect();
        out.extend(rest.iter().map(|&k| (last_eps, Some(k))));
        Ok(out)
    }
}

/// Per-stage record of a continuation solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub eps: f64,
    pub kappa: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    /// `ε‖∇u‖₂² + ∫φ_{p,δ'}(|Du|)`.
    pub apriori: f64,
    /// `∫φ_{p,δ'}(|Du|)`.
    pub phi_integral: f64,
}

/// Continuation from `u = 0` with default Newton options.
pub fn continuation_solve<'m>(
    mesh: &'m Mesh,
    params: &PDeltaParams,
    f: &dyn Source,
    schedule: &ContinuationSchedule,
) -> Result<(DiscreteField<'m>, SolveReport)> {
    let sys = FemSystem::new(mesh);
    let zero = vec![0.0; sys.n_dofs()];
    let (u, report) = continuation_solve_from(&sys, params, f, schedule, zero, &NewtonOptions::default())?;
    Ok((DiscreteField::from_dofs(mesh, &u), report))
}

/// Continuation on a prepared system from the initial dofs `u0`.
pub fn continuation_solve_from(
    sys: &FemSystem,
    params: &PDeltaParams,
    f: &dyn Source,
    schedule: &ContinuationSchedule,
    u0: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    params.validate()?;
    let stages = schedule.stages(params.delta)?;
    let load = sys.load(f);
    let mut u = u0;
    let mut report = SolveReport { source_norm: source_norm(sys.mesh(), f, params.p), ..Default::default() };
    for (i, &(eps, kappa)) in stages.iter().enumerate() {
        let wrap = |e: Error| Error::Stage { stage: i, eps, kappa, source: Box::new(e) };
        let model = StressModel::regularized(*params, eps, kappa).map_err(wrap)?;
        let (next, stage) = newton_solve_system(sys, &model, &load, u, opts).map_err(wrap)?;
        u = next;
        let phi_integral = sys.phi_integral(&model, &u);
        report.stages.push(StageRecord {
            eps,
            kappa,
            iterations: stage.iterations,
            residual: stage.residual,
            energy: *stage.energy_history.last().expect("initial energy"),
            apriori: eps * sys.grad_norm_sq(&u) + phi_integral,
            phi_integral,
        });
        report.iterations += stage.iterations;
        report.residual = stage.residual;
        report.residual_history.extend(&stage.residual_history);
        report.energy_history = stage.energy_history;
        report.flags.roundoff_steps += stage.flags.roundoff_steps;
    }
    report.flags.converged = true;
    let eps_stages = schedule.eps.len();
    let apriori: Vec<f64> = report.stages[..eps_stages].iter().map(|s| s.apriori).collect();
    report.flags.apriori_monotone = Some(apriori.windows(2).all(|w| w[1] <= 1.01 * w[0]));
    if params.delta == 0.0 && report.stages.len() >= 2 {
        let n = report.stages.len();
        let (a, b) = (report.stages[n - 2].phi_integral, report.stages[n - 1].phi_integral);
        report.flags.kappa_stabilized = Some((b - a).abs() <= 0.02 * a.abs().max(b.abs()));
    }
    Ok((u, report))
}

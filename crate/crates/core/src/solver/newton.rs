use serde::{Deserialize, Serialize};

use super::fem::{source_norm, FemSystem};
use super::fields::Source;
use super::{DiscreteField, SolveReport};
use crate::constitutive::StressModel;
use crate::error::{Error, Result};
use crate::geometry::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    /// Stop when `‖r‖₂ ≤ tol·‖load‖₂` (or `≤ tol` for a zero load).
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, armijo: 1e-4 }
    }
}

const MIN_STEP: f64 = 1e-14;
const ROUNDOFF: f64 = 1e-13;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration on the energy, starting from `u0`.
pub fn newton_solve<'m>(
    mesh: &'m Mesh,
    model: &StressModel,
    f: &dyn Source,
    u0: &DiscreteField,
    opts: &NewtonOptions,
) -> Result<(DiscreteField<'m>, SolveReport)> {
    let sys = FemSystem::new(mesh);
    let load = sys.load(f);
    let (u, mut report) = newton_solve_system(&sys, model, &load, u0.to_dofs(), opts)?;
    report.source_norm = source_norm(mesh, f, model.p());
    Ok((DiscreteField::from_dofs(mesh, &u), report))
}

/// Newton iteration on dof vectors with a prepared system and load.
pub fn newton_solve_system(
    sys: &FemSystem,
    model: &StressModel,
    load: &[f64],
    mut u: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    if !(opts.tol > 0.0) || !(opts.armijo > 0.0 && opts.armijo < 0.5) {
        return Err(Error::InvalidParameter(format!("invalid Newton options {opts:?}")));
    }
    for &b in &sys.mesh().boundary_nodes {
        u[2 * b] = 0.0;
        u[2 * b + 1] = 0.0;
    }
    let load_norm = norm(load);
    let target = if load_norm > 0.0 { opts.tol * load_norm } else { opts.tol };
    let mut report = SolveReport::default();
    let mut r = sys.residual(model, load, &u);
    let mut rn = norm(&r);
    let (mut w, mut work) = sys.energy_parts(model, load, &u);
    report.residual_history.push(rn);
    report.energy_history.push(w - work);
    let mut it = 0;
    while rn > target {
        if it == opts.max_iter {
            report.iterations = it;
            return Err(Error::MaxIterExceeded { iterations: it, residual: rn });
        }
        it += 1;
        let jac = sys.jacobian(model, &u)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = sys.solve_linear(&jac, &neg)?;
        let slope: f64 = r.iter().zip(&d).map(|(a, b)| a * b).sum();
        let e0 = w - work;
        let scale = w.abs() + work.abs();
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(u, d)| u + alpha * d).collect();
            let (tw, twork) = sys.energy_parts(model, load, &trial);
            let e = tw - twork;
            let mut accept = e <= e0 + opts.armijo * alpha * slope;
            let mut trial_r = None;
            if !accept && (e - e0).abs() <= ROUNDOFF * scale.max(tw.abs() + twork.abs()) {
                let tr = sys.residual(model, load, &trial);
                if norm(&tr) < rn {
                    accept = true;
                    report.flags.roundoff_steps += 1;
                    trial_r = Some(tr);
                }
            }
            if accept {
                u = trial;
                r = trial_r.unwrap_or_else(|| sys.residual(model, load, &u));
                rn = norm(&r);
                (w, work) = (tw, twork);
                break;
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                return Err(Error::LineSearchStalled { iteration: it });
            }
        }
        report.residual_history.push(rn);
        report.energy_history.push(w - work);
    }
    report.iterations = it;
    report.residual = rn;
    report.flags.converged = true;
    Ok((u, report))
}

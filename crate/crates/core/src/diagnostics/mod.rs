//! Discrete regularity indicators of solved fields: `F(Du_h)`, its lifted
//! gradient, a `W^{2,q}` surrogate, the boundary-chart split and the
//! pointwise equivalences of the `P_i` quantities.

mod study;

pub use study::{
    refinement_study, refinement_study_with, relative_change, LevelRow, RegularityFlags, RegularityReport, StudyOptions,
    SweepPoint, ROW_HEADER,
};

use serde::Serialize;

use crate::constitutive::{RatioReport, RatioWindow, StressModel};
use crate::error::{Error, Result};
use crate::geometry::{cutoff_eval, normal_deriv, tangential_deriv, ChartCover, Mesh};
use crate::quadrature::TRI_DEGREE2;
use crate::solver::DiscreteField;
use crate::tensor::SymTensor;

/// Area-weighted nodal averages of a piecewise-constant field.
pub fn lift<const N: usize>(mesh: &Mesh, elem: &[[f64; N]]) -> Vec<[f64; N]> {
    let mut sum = vec![[0.0; N]; mesh.n_nodes()];
    let mut weight = vec![0.0; mesh.n_nodes()];
    for (k, e) in mesh.elements.iter().enumerate() {
        let a = mesh.area(k);
        for &i in e {
            weight[i] += a;
            for c in 0..N {
                sum[i][c] += a * elem[k][c];
            }
        }
    }
    for (s, w) in sum.iter_mut().zip(weight) {
        if w > 0.0 {
            s.iter_mut().for_each(|v| *v /= w);
        }
    }
    sum
}

/// Element gradients `[j][c] = ∂_j v_c` of a continuous piecewise-linear
/// field given by nodal values.
pub fn element_gradients<const N: usize>(mesh: &Mesh, nodal: &[[f64; N]]) -> Vec<[[f64; N]; 2]> {
    (0..mesh.n_elements())
        .map(|k| {
            let g = mesh.basis_gradients(k);
            let e = mesh.elements[k];
            let mut out = [[0.0; N]; 2];
            for a in 0..3 {
                for j in 0..2 {
                    for c in 0..N {
                        out[j][c] += nodal[e[a]][c] * g[a][j];
                    }
                }
            }
            out
        })
        .collect()
}

fn packed(t: &SymTensor) -> [f64; 3] {
    [t.get(0, 0), t.get(1, 1), t.get(0, 1)]
}

fn unpack(v: [f64; 3]) -> SymTensor {
    SymTensor::from_packed(&v).expect("2D")
}

/// `F(Du_h)` on every element.
pub fn f_field(mesh: &Mesh, model: &StressModel, u: &DiscreteField) -> Vec<SymTensor> {
    debug_assert!(std::ptr::eq(mesh, u.mesh()) || mesh == u.mesh());
    (0..mesh.n_elements()).map(|k| model.f_map(&u.element_sym_grad(k))).collect()
}

/// Lifts a piecewise-constant symmetric field to nodes and returns the
/// nodal field with its element gradients `[∂_1, ∂_2]`.
pub fn lift_and_grad(mesh: &Mesh, field: &[SymTensor]) -> Result<(Vec<SymTensor>, Vec<[SymTensor; 2]>)> {
    if field.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch(field.len(), mesh.n_elements()));
    }
    if let Some(t) = field.iter().find(|t| t.dim() != 2) {
        return Err(Error::DimensionMismatch(t.dim(), 2));
    }
    let elem: Vec<[f64; 3]> = field.iter().map(packed).collect();
    let nodal = lift(mesh, &elem);
    let grads = element_gradients(mesh, &nodal).into_iter().map(|g| [unpack(g[0]), unpack(g[1])]).collect();
    Ok((nodal.into_iter().map(unpack).collect(), grads))
}

/// `‖∇F(Du_h)‖₂` of the lifted field.
#[allow(non_snake_case)]
pub fn grad_F_norm(mesh: &Mesh, model: &StressModel, u: &DiscreteField) -> f64 {
    let (_, grads) = lift_and_grad(mesh, &f_field(mesh, model, u)).expect("2D field on its own mesh");
    grads
        .iter()
        .enumerate()
        .map(|(k, g)| mesh.area(k) * (g[0].norm_sq() + g[1].norm_sq()))
        .sum::<f64>()
        .sqrt()
}

/// `‖F(Du_h)‖₂`.
#[allow(non_snake_case)]
pub fn F_norm(mesh: &Mesh, model: &StressModel, u: &DiscreteField) -> f64 {
    f_field(mesh, model, u)
        .iter()
        .enumerate()
        .map(|(k, f)| mesh.area(k) * f.norm_sq())
        .sum::<f64>()
        .sqrt()
}

/// Integrability exponent `q = 3p/(p+1)` of the second derivatives.
pub fn w2q_exponent(p: f64) -> f64 {
    3.0 * p / (p + 1.0)
}

/// `L^q` norm of the lifted second derivatives of `u_h`.
pub fn w2q_indicator(mesh: &Mesh, u: &DiscreteField, q: f64) -> Result<f64> {
    if !(q > 1.0 && q <= 2.0) {
        return Err(Error::InvalidParameter(format!("q = {q} outside (1,2]")));
    }
    let elem: Vec<[f64; 4]> = (0..mesh.n_elements())
        .map(|k| {
            let g = u.element_gradient(k);
            [g[0][0], g[0][1], g[1][0], g[1][1]]
        })
        .collect();
    let hess = element_gradients(mesh, &lift(mesh, &elem));
    Ok(hess
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let n2: f64 = h.iter().flatten().map(|v| v * v).sum();
            mesh.area(k) * n2.powf(0.5 * q)
        })
        .sum::<f64>()
        .powf(1.0 / q))
}

/// Localized squared gradient norms of the lifted `F(Du_h)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundarySplit {
    /// `∫ ξ₀₀² |∇F|²`.
    pub interior: f64,
    /// `Σ_P ∫ ξ_P² |∂_τ F|²`.
    pub tangential: f64,
    /// `Σ_P ∫ ξ_P² |∂_n F|²`.
    pub normal: f64,
    /// `∫ w |∇F|²` with `w = ξ₀₀² + Σ_P ξ_P²`.
    pub weighted_total: f64,
    /// Range of `w` over the quadrature points.
    pub overlap_min: f64,
    pub overlap_max: f64,
}

/// Splits `‖∇F(Du_h)‖²` into the interior part and the tangential and
/// normal parts on the boundary charts.
pub fn boundary_split(mesh: &Mesh, charts: &ChartCover, model: &StressModel, u: &DiscreteField) -> Result<BoundarySplit> {
    if !charts.interior.spec.is_smooth() || charts.charts.is_empty() {
        return Err(Error::NotSmoothBoundary);
    }
    let (_, grads) = lift_and_grad(mesh, &f_field(mesh, model, u))?;
    let mut out = BoundarySplit { overlap_min: f64::INFINITY, ..Default::default() };
    for (k, g) in grads.iter().enumerate() {
        let gp = [packed(&g[0]), packed(&g[1])];
        let full = g[0].norm_sq() + g[1].norm_sq();
        let area = mesh.area(k);
        for (x, _, w) in TRI_DEGREE2.map(mesh.vertices(k)) {
            let dx = area * w;
            let xi0 = charts.interior.eval(x).value;
            let mut weight = xi0 * xi0;
            out.interior += dx * xi0 * xi0 * full;
            for chart in &charts.charts {
                let xi = cutoff_eval(chart, x).value;
                if xi == 0.0 {
                    continue;
                }
                weight += xi * xi;
                let mut dt = [0.0; 3];
                let mut dn = [0.0; 3];
                for c in 0..3 {
                    let grad = [gp[0][c], gp[1][c]];
                    dt[c] = tangential_deriv(chart, grad, x, 1)?;
                    dn[c] = normal_deriv(chart, grad);
                }
                out.tangential += dx * xi * xi * unpack(dt).norm_sq();
                out.normal += dx * xi * xi * unpack(dn).norm_sq();
            }
            out.weighted_total += dx * weight * full;
            out.overlap_min = out.overlap_min.min(weight);
            out.overlap_max = out.overlap_max.max(weight);
        }
    }
    Ok(out)
}

/// The four `P_i` ratios checked on solved fields, as named by the
/// constitutive suite.
pub const FIELD_QUANTITIES: [&str; 4] = ["P_vs_phi_second_grad", "P_vs_grad_F", "phi_second_grad_vs_grad_F", "P_vs_grad_S"];

/// Pointwise ratios of a solved field.
#[derive(Clone, Debug, Serialize)]
pub struct FieldRatioCheck {
    pub reports: Vec<RatioReport>,
    /// Ratios per evaluated (element, direction), in `FIELD_QUANTITIES` order.
    #[serde(skip)]
    pub values: Vec<[f64; 4]>,
    /// Elements skipped because `Q` vanishes with zero shift.
    pub skipped_degenerate: usize,
    /// Directions skipped because `∂_i Q = 0`.
    pub skipped_flat: usize,
}

/// Outcome of comparing field ratios with sampled windows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Containment {
    pub outliers: usize,
    pub total: usize,
    pub fraction: f64,
}

impl FieldRatioCheck {
    /// Counts evaluations with any ratio outside the matching window of
    /// `suite` (relative slack `rel`).
    pub fn containment(&self, suite: &[RatioReport], rel: f64) -> Result<Containment> {
        let windows: Vec<&RatioReport> = FIELD_QUANTITIES
            .iter()
            .map(|name| {
                suite
                    .iter()
                    .find(|r| r.quantity == *name)
                    .ok_or_else(|| Error::InvalidParameter(format!("suite lacks {name}")))
            })
            .collect::<Result<_>>()?;
        let outliers = self
            .values
            .iter()
            .filter(|v| v.iter().zip(&windows).any(|(x, w)| !w.contains(*x, rel)))
            .count();
        let total = self.values.len();
        Ok(Containment { outliers, total, fraction: if total == 0 { 0.0 } else { outliers as f64 / total as f64 } })
    }
}

/// Evaluates the `P_i` equivalences with `Q` the lifted `Du_h` at element
/// centroids and `∂_i Q` its element gradient.
pub fn field_ratio_check(mesh: &Mesh, model: &StressModel, u: &DiscreteField) -> Result<FieldRatioCheck> {
    let du: Vec<SymTensor> = (0..mesh.n_elements()).map(|k| u.element_sym_grad(k)).collect();
    let (nodal, grads) = lift_and_grad(mesh, &du)?;
    let phi = model.nfunction();
    let mu = model.mu();
    let mut values = Vec::with_capacity(2 * mesh.n_elements());
    let (mut skipped_degenerate, mut skipped_flat) = (0, 0);
    for (k, e) in mesh.elements.iter().enumerate() {
        let q = unpack([0, 1, 2].map(|c| e.iter().map(|&i| packed(&nodal[i])[c]).sum::<f64>() / 3.0));
        let tq = q.norm();
        if model.shift() == 0.0 && tq < 1e-12 {
            skipped_degenerate += 1;
            continue;
        }
        let phi2 = phi.phi_second(tq)?;
        for dq in &grads[k] {
            if dq.norm_sq() == 0.0 {
                skipped_flat += 1;
                continue;
            }
            let pi = model.p_quantity(&q, dq)?;
            let grad_f = model.f_map_derivative(&q, dq)?.norm_sq();
            let grad_s = model.stress_derivative(&q, dq)?.norm_sq();
            let phi2_grad = mu * phi2 * dq.norm_sq();
            values.push([pi / phi2_grad, pi / grad_f, phi2_grad / grad_f, pi * mu * phi2 / grad_s]);
        }
    }
    let reports = FIELD_QUANTITIES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[j]), hi.max(v[j])));
            RatioReport {
                quantity: name.to_string(),
                p: model.p(),
                mu,
                dim: 2,
                seed: 0,
                samples: values.len(),
                min,
                max,
                per_delta: vec![RatioWindow { delta: model.shift(), min, max, count: values.len() }],
                drift: 0.0,
                exact_window: None,
            }
        })
        .collect();
    Ok(FieldRatioCheck { reports, values, skipped_degenerate, skipped_flat })
}

use super::chart::Chart;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Forward and backward tangential difference quotients on one chart.
///
/// The translation `τ_h x` moves `x` by `h` in `s` while keeping the offset
/// `η = y − a(s)` above the boundary graph, so it maps `Ω_P ∩ Ω` into `Ω`
/// and preserves area.
#[derive(Clone, Debug)]
pub struct TangentialDiff<'c> {
    pub chart: &'c Chart,
    pub h: f64,
}

/// Builds the difference quotient for direction `alpha` (the only
/// tangential direction in 2D is `alpha = 1`) and step `h ∈ (0, R_P/16)`.
pub fn tangential_diff(chart: &Chart, h: f64, alpha: usize) -> Result<TangentialDiff<'_>> {
    if alpha != 1 {
        return Err(Error::InvalidParameter(format!("tangential direction {alpha} does not exist in 2D")));
    }
    let max = chart.r_p / 16.0;
    if !(h > 0.0 && h < max) {
        return Err(Error::StepOutOfRange { h, max });
    }
    Ok(TangentialDiff { chart, h })
}

impl TangentialDiff<'_> {
    fn adapted(&self, x: [f64; 2]) -> Result<(f64, f64)> {
        let c = self.chart;
        match c.to_adapted(x) {
            Some((s, eta)) if eta >= 0.0 && eta < c.r_prime => Ok((s, eta)),
            _ => Err(Error::SupportViolation(format!("point {x:?} outside the chart region"))),
        }
    }

    /// `τ_{±h} x`.
    pub fn translate(&self, x: [f64; 2], sign: f64) -> Result<[f64; 2]> {
        let (s, eta) = self.adapted(x)?;
        let t = s + sign * self.h;
        if t.abs() >= self.chart.r_p {
            return Err(Error::SupportViolation(format!("translate of {x:?} leaves the chart ball")));
        }
        Ok(self.chart.from_adapted(t, eta))
    }

    /// `d⁺g(x) = (g(τ_h x) − g(x))/h`.
    pub fn forward<G: Fn([f64; 2]) -> f64>(&self, g: G, x: [f64; 2]) -> Result<f64> {
        let xp = self.translate(x, 1.0)?;
        Ok((g(xp) - g(x)) / self.h)
    }

    /// `d⁻f(x) = (f(x) − f(τ_{−h} x))/h`, the adjoint of `−d⁺`.
    pub fn backward<F: Fn([f64; 2]) -> f64>(&self, f: F, x: [f64; 2]) -> Result<f64> {
        let xm = self.translate(x, -1.0)?;
        Ok((f(x) - f(xm)) / self.h)
    }
}

/// `∂_τ g = ∂_s g + a'(s) ∂_y g` from the Cartesian gradient of `g` at `x`.
pub fn tangential_deriv(chart: &Chart, grad: [f64; 2], x: [f64; 2], alpha: usize) -> Result<f64> {
    if alpha != 1 {
        return Err(Error::InvalidParameter(format!("tangential direction {alpha} does not exist in 2D")));
    }
    let (s, _) = chart.to_local(x);
    let ds = grad[0] * chart.tangent[0] + grad[1] * chart.tangent[1];
    let dy = grad[0] * chart.normal[0] + grad[1] * chart.normal[1];
    Ok(ds + chart.graph.a_prime(s) * dy)
}

/// Derivative along the chart's inward normal axis.
pub fn normal_deriv(chart: &Chart, grad: [f64; 2]) -> f64 {
    grad[0] * chart.normal[0] + grad[1] * chart.normal[1]
}

/// Outcome of a summation-by-parts check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbpResult {
    /// `|∫ f d⁺g + ∫ (d⁻f) g|`.
    pub residual: f64,
    /// `‖f‖₂‖d⁺g‖₂ + ‖d⁻f‖₂‖g‖₂`.
    pub scale: f64,
}

impl SbpResult {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Checks `∫ f d⁺g = −∫ (d⁻f) g` for `f, g` supported in `spt ξ_P`.
///
/// Integrals are taken in `(s, η)` coordinates (unit Jacobian) by
/// Gauss–Legendre panels whose breaks in `s` sit at multiples of `h`, so
/// the translation maps panels onto panels.
pub fn summation_by_parts_check<F, G>(chart: &Chart, f: F, g: G, h: f64) -> Result<SbpResult>
where
    F: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> f64,
{
    summation_by_parts_check_refined(chart, f, g, h, 1)
}

/// As [`summation_by_parts_check`] with each panel split `refine` times.
pub fn summation_by_parts_check_refined<F, G>(chart: &Chart, f: F, g: G, h: f64, refine: usize) -> Result<SbpResult>
where
    F: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> f64,
{
    let dq = tangential_diff(chart, h, 1)?;
    let refine = refine.max(1);
    let n = (0.75 * chart.r_p / h).ceil() as i64;
    let eta_max = 0.75 * chart.r_prime;
    let eta_panels = 8 * refine;
    let gl = gauss_legendre(5);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let (mut ff, mut dg, mut df, mut gg) = (0.0, 0.0, 0.0, 0.0);
    let hs = h / refine as f64;
    let he = eta_max / eta_panels as f64;
    for i in -n * refine as i64..n * refine as i64 {
        let s0 = i as f64 * hs;
        for j in 0..eta_panels {
            let e0 = j as f64 * he;
            for &(xs, ws) in gl {
                let s = s0 + 0.5 * hs * (xs + 1.0);
                for &(xe, we) in gl {
                    let eta = e0 + 0.5 * he * (xe + 1.0);
                    let w = 0.25 * hs * he * ws * we;
                    let x = chart.from_adapted(s, eta);
                    let (fx, gx) = (f(x), g(x));
                    let dpg = dq.forward(&g, x)?;
                    let dmf = dq.backward(&f, x)?;
                    lhs += w * fx * dpg;
                    rhs += w * dmf * gx;
                    ff += w * fx * fx;
                    dg += w * dpg * dpg;
                    df += w * dmf * dmf;
                    gg += w * gx * gx;
                }
            }
        }
    }
    Ok(SbpResult { residual: (lhs + rhs).abs(), scale: (ff * dg).sqrt() + (df * gg).sqrt() })
}

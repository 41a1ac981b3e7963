use serde::Serialize;

use super::DomainSpec;
use crate::error::{Error, Result};

const BOUNDARY_TOL: f64 = 1e-12;

/// Graph function `a` of a boundary chart in local coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    /// `a ≡ 0`.
    Flat,
    /// Domain inside a circle of radius `rho`: `a(s) = ρ − √(ρ² − s²)`.
    Convex { rho: f64 },
    /// Domain outside a circle of radius `rho`: `a(s) = −(ρ − √(ρ² − s²))`.
    Concave { rho: f64 },
}

impl GraphKind {
    fn sign_rho(&self) -> Option<(f64, f64)> {
        match *self {
            GraphKind::Flat => None,
            GraphKind::Convex { rho } => Some((1.0, rho)),
            GraphKind::Concave { rho } => Some((-1.0, rho)),
        }
    }

    pub fn a(&self, s: f64) -> f64 {
        self.sign_rho().map_or(0.0, |(sg, rho)| {
            let r = (rho * rho - s * s).sqrt();
            // ρ − √(ρ² − s²) = s²/(ρ + √(ρ² − s²))
            sg * s * s / (rho + r)
        })
    }

    pub fn a_prime(&self, s: f64) -> f64 {
        self.sign_rho().map_or(0.0, |(sg, rho)| sg * s / (rho * rho - s * s).sqrt())
    }

    pub fn a_second(&self, s: f64) -> f64 {
        self.sign_rho().map_or(0.0, |(sg, rho)| {
            let q = rho * rho - s * s;
            sg * rho * rho / (q * q.sqrt())
        })
    }
}

/// A boundary chart: `x = P + s e_τ + y e_n` with inward normal `e_n`; the
/// boundary is `y = a(s)` for `|s| < R_P` and the chart region is
/// `Ω_P = {|s| < R_P, a(s) < y < a(s) + R'_P}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chart {
    pub center: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub graph: GraphKind,
    pub r_p: f64,
    pub r_prime: f64,
    /// Slope bound `r_P`: `|a'| < r_P` on `|s| < R_P`.
    pub slope: f64,
}

/// Value, gradient and Hessian of a cut-off function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffValue {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl CutoffValue {
    const ZERO: CutoffValue = CutoffValue { value: 0.0, grad: [0.0; 2], hess: [[0.0; 2]; 2] };
}

// Quintic smoothstep S(z) = 6z⁵ − 15z⁴ + 10z³ and its derivatives.
fn smoothstep(z: f64) -> (f64, f64, f64) {
    if z <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if z >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let z2 = z * z;
        (
            z2 * z * (10.0 + z * (-15.0 + 6.0 * z)),
            30.0 * z2 * (1.0 - z) * (1.0 - z),
            60.0 * z * (1.0 - z) * (1.0 - 2.0 * z),
        )
    }
}

/// 1 on `[0, ½]`, 0 on `[¾, ∞)`, C² in between.
fn bump(z: f64) -> (f64, f64, f64) {
    let (s, ds, dds) = smoothstep(4.0 * (z - 0.5));
    (1.0 - s, -4.0 * ds, -16.0 * dds)
}

impl Chart {
    /// A chart of a flat boundary piece through `center` with inward normal
    /// `normal`.
    pub fn flat(center: [f64; 2], normal: [f64; 2], r_p: f64, r_prime: f64) -> Result<Self> {
        let n = normal[0].hypot(normal[1]);
        if !(n > 0.0 && r_p > 0.0 && r_prime > 0.0) {
            return Err(Error::InvalidParameter("flat chart needs a nonzero normal and positive radii".into()));
        }
        let normal = [normal[0] / n, normal[1] / n];
        Ok(Self {
            center,
            tangent: [normal[1], -normal[0]],
            normal,
            graph: GraphKind::Flat,
            r_p,
            r_prime,
            slope: 0.0,
        })
    }

    /// Local coordinates `(s, y)` of `x`.
    pub fn to_local(&self, x: [f64; 2]) -> (f64, f64) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        (d[0] * self.tangent[0] + d[1] * self.tangent[1], d[0] * self.normal[0] + d[1] * self.normal[1])
    }

    pub fn to_global(&self, s: f64, y: f64) -> [f64; 2] {
        [
            self.center[0] + s * self.tangent[0] + y * self.normal[0],
            self.center[1] + s * self.tangent[1] + y * self.normal[1],
        ]
    }

    /// Boundary-adapted coordinates `(s, η)` with `η = y − a(s)`; `None` when
    /// `|s| ≥ R_P`, where the graph is not part of the chart.
    pub fn to_adapted(&self, x: [f64; 2]) -> Option<(f64, f64)> {
        let (s, y) = self.to_local(x);
        (s.abs() < self.r_p).then(|| {
            let eta = y - self.graph.a(s);
            // points on the boundary graph up to roundoff
            (s, if eta < 0.0 && eta > -BOUNDARY_TOL { 0.0 } else { eta })
        })
    }

    pub fn from_adapted(&self, s: f64, eta: f64) -> [f64; 2] {
        self.to_global(s, eta + self.graph.a(s))
    }

    /// Membership in `λΩ_P = {|s| < λR_P, 0 < η < λR'_P}`; points on the
    /// boundary graph itself count as members.
    pub fn contains_scaled(&self, x: [f64; 2], lambda: f64) -> bool {
        self.to_adapted(x)
            .is_some_and(|(s, eta)| s.abs() < lambda * self.r_p && eta >= 0.0 && eta < lambda * self.r_prime)
    }

    /// `sup |a'|` over the chart ball.
    pub fn max_slope(&self) -> f64 {
        self.graph.a_prime(self.r_p).abs()
    }
}

/// Interior cut-off `ξ₀₀`: 1 at depth `≥ full`, 0 at depth `≤ zero`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteriorCutoff {
    pub spec: DomainSpec,
    pub zero: f64,
    pub full: f64,
}

impl InteriorCutoff {
    /// Depth below `∂Ω` with its gradient and Hessian.
    fn depth(&self, x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let r = x[0].hypot(x[1]);
        let radial = |sg: f64, d: f64| {
            let u = [x[0] / r, x[1] / r];
            let h = [
                [sg * (1.0 - u[0] * u[0]) / r, -sg * u[0] * u[1] / r],
                [-sg * u[0] * u[1] / r, sg * (1.0 - u[1] * u[1]) / r],
            ];
            (d, [sg * u[0], sg * u[1]], h)
        };
        match self.spec {
            DomainSpec::UnitDisk => radial(-1.0, 1.0 - r),
            DomainSpec::Annulus { r_in, r_out } => {
                if r - r_in < r_out - r {
                    radial(1.0, r - r_in)
                } else {
                    radial(-1.0, r_out - r)
                }
            }
            DomainSpec::UnitSquare => (self.spec.signed_depth(x), [0.0; 2], [[0.0; 2]; 2]),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> CutoffValue {
        let (d, g, h) = self.depth(x);
        if d >= self.full {
            return CutoffValue { value: 1.0, ..CutoffValue::ZERO };
        }
        if d <= self.zero {
            return CutoffValue::ZERO;
        }
        let w = self.full - self.zero;
        let (s, ds, dds) = smoothstep((d - self.zero) / w);
        let (c1, c2) = (ds / w, dds / (w * w));
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in i..2 {
                hess[i][j] = c2 * g[i] * g[j] + c1 * h[i][j];
                hess[j][i] = hess[i][j];
            }
        }
        CutoffValue { value: s, grad: [c1 * g[0], c1 * g[1]], hess }
    }
}

/// Boundary charts together with the interior cut-off.
#[derive(Clone, Debug, Serialize)]
pub struct ChartCover {
    pub charts: Vec<Chart>,
    pub interior: InteriorCutoff,
}

impl ChartCover {
    /// Whether `x` lies in some `½Ω_P` or where `ξ₀₀ = 1`.
    pub fn half_covered(&self, x: [f64; 2]) -> bool {
        self.interior.eval(x).value == 1.0 || self.charts.iter().any(|c| c.contains_scaled(x, 0.5))
    }
}

fn circle_charts(rho: f64, convex: bool, r_p: f64, r_prime: f64, slope: f64) -> Vec<Chart> {
    // the half-chart must cover the boundary arc and, for the concave side,
    // points up to depth R'/2 where the arc length per unit s shrinks
    let reach = if convex { rho } else { rho + 0.5 * r_prime };
    let half_angle = (0.5 * r_p / reach).asin();
    let ratio = std::f64::consts::PI / half_angle;
    let n = ratio.floor() as usize + 1;
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            let radial = [t.cos(), t.sin()];
            let normal = if convex { [-radial[0], -radial[1]] } else { radial };
            Chart {
                center: [rho * radial[0], rho * radial[1]],
                tangent: [normal[1], -normal[0]],
                normal,
                graph: if convex { GraphKind::Convex { rho } } else { GraphKind::Concave { rho } },
                r_p,
                r_prime,
                slope,
            }
        })
        .collect()
}

/// Finite chart covering of `∂Ω` with `sup |a'| < r_max` on every chart.
pub fn boundary_charts(spec: &DomainSpec, r_max: f64) -> Result<ChartCover> {
    spec.validate()?;
    if !(r_max > 0.0 && r_max < 1.0) {
        return Err(Error::InvalidParameter(format!("r_max = {r_max} must lie in (0,1)")));
    }
    // |a'(s)| = |s|/√(ρ² − s²) < r  ⇔  |s| < rρ/√(1 + r²)
    let radius = |rho: f64| r_max * rho / (1.0 + r_max * r_max).sqrt() * (1.0 - 1e-6);
    match *spec {
        DomainSpec::UnitSquare => Err(Error::NotSmoothBoundary),
        DomainSpec::UnitDisk => {
            let r_p = radius(1.0);
            let r_prime = r_p;
            Ok(ChartCover {
                charts: circle_charts(1.0, true, r_p, r_prime, r_max),
                interior: InteriorCutoff { spec: *spec, zero: r_prime / 8.0, full: r_prime / 4.0 },
            })
        }
        DomainSpec::Annulus { r_in, r_out } => {
            let r_prime = radius(r_in).min(0.45 * (r_out - r_in));
            let mut charts = circle_charts(r_out, true, radius(r_out), r_prime, r_max);
            charts.extend(circle_charts(r_in, false, radius(r_in), r_prime, r_max));
            Ok(ChartCover {
                charts,
                interior: InteriorCutoff { spec: *spec, zero: r_prime / 8.0, full: r_prime / 4.0 },
            })
        }
    }
}

/// `ξ_P(x) = B(|s|/R_P)·B(η/R'_P)`, zero outside `Ω` and off the chart.
pub fn cutoff_eval(chart: &Chart, x: [f64; 2]) -> CutoffValue {
    let Some((s, eta)) = chart.to_adapted(x) else {
        return CutoffValue::ZERO;
    };
    if eta < 0.0 {
        return CutoffValue::ZERO;
    }
    let (r, rp) = (chart.r_p, chart.r_prime);
    let (b1, d1, dd1) = bump(s.abs() / r);
    let (b2, d2, dd2) = bump(eta / rp);
    if b1 == 0.0 || b2 == 0.0 {
        return CutoffValue::ZERO;
    }
    let sg = if s < 0.0 { -1.0 } else { 1.0 };
    let (e_t, e_n) = (chart.tangent, chart.normal);
    let ap = chart.graph.a_prime(s);
    let app = chart.graph.a_second(s);
    let grad_eta = [e_n[0] - ap * e_t[0], e_n[1] - ap * e_t[1]];
    let (f1, f1p, f1pp) = (b1, d1 * sg / r, dd1 / (r * r));
    let (f2, f2p, f2pp) = (b2, d2 / rp, dd2 / (rp * rp));
    let mut grad = [0.0; 2];
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        grad[i] = f1p * f2 * e_t[i] + f1 * f2p * grad_eta[i];
        for j in i..2 {
            hess[i][j] = f1pp * f2 * e_t[i] * e_t[j]
                + f1p * f2p * (e_t[i] * grad_eta[j] + grad_eta[i] * e_t[j])
                + f1 * f2pp * grad_eta[i] * grad_eta[j]
                - f1 * f2p * app * e_t[i] * e_t[j];
            hess[j][i] = hess[i][j];
        }
    }
    CutoffValue { value: f1 * f2, grad, hess }
}

//! Analytic vector fields, source terms and manufactured right-hand sides.

use std::f64::consts::PI;

use super::jet::Jet;
use crate::constitutive::StressModel;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::tensor::SymTensor;

/// A twice differentiable vector field `u: ℝ² → ℝ²`.
pub trait VectorField: Sync {
    /// Components as jets: value, gradient and Hessian of `u_1` and `u_2`.
    fn jets(&self, x: [f64; 2]) -> [Jet; 2];

    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        let j = self.jets(x);
        [j[0].v, j[1].v]
    }

    /// `grad[i][j] = ∂_j u_i`.
    fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let j = self.jets(x);
        [j[0].d, j[1].d]
    }

    /// `hess[i][j][k] = ∂_j ∂_k u_i`.
    fn hessian(&self, x: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let j = self.jets(x);
        [j[0].dd, j[1].dd]
    }

    /// Symmetric gradient `Du`.
    fn sym_grad(&self, x: [f64; 2]) -> SymTensor {
        let g = self.gradient(x);
        SymTensor::from_packed(&[g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0])]).expect("2D")
    }
}

/// A named closed-form exact solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactField {
    /// `A (sin πx sin πy, 0)`; vanishes on the unit square boundary.
    SineBubble { amplitude: f64 },
    /// `A (sin πx sin πy, sin 2πx sin πy)`; vanishes on the unit square boundary.
    SinePair { amplitude: f64 },
    /// `A (1 − r²)(1 + y/2, x/2 − 3/10)`; vanishes on the unit circle.
    DiskBubble { amplitude: f64 },
    /// `A (1 − r^{2n})(−y, x)`: a rotation profile vanishing on the unit
    /// circle, steep near the boundary.
    RadialSwirl { amplitude: f64, n: i32 },
}

pub const EXACT_FIELDS: [&str; 4] = ["sine_bubble", "sine_pair", "disk_bubble", "radial_swirl"];

impl ExactField {
    pub fn by_name(name: &str, amplitude: f64) -> Result<Self> {
        match name {
            "sine_bubble" => Ok(Self::SineBubble { amplitude }),
            "sine_pair" => Ok(Self::SinePair { amplitude }),
            "disk_bubble" => Ok(Self::DiskBubble { amplitude }),
            "radial_swirl" => Ok(Self::RadialSwirl { amplitude, n: 10 }),
            other => Err(Error::Config(format!("unknown exact solution '{other}'"))),
        }
    }

    /// Whether the field vanishes on `∂Ω` of `spec`.
    pub fn fits(&self, spec: &DomainSpec) -> bool {
        match self {
            Self::SineBubble { .. } | Self::SinePair { .. } => *spec == DomainSpec::UnitSquare,
            Self::DiskBubble { .. } | Self::RadialSwirl { .. } => *spec == DomainSpec::UnitDisk,
        }
    }
}

impl VectorField for ExactField {
    fn jets(&self, p: [f64; 2]) -> [Jet; 2] {
        let (x, y) = Jet::coords(p);
        match *self {
            Self::SineBubble { amplitude } => {
                [(x * PI).sin() * (y * PI).sin() * amplitude, Jet::constant(0.0)]
            }
            Self::SinePair { amplitude } => {
                let sy = (y * PI).sin();
                [(x * PI).sin() * sy * amplitude, (x * (2.0 * PI)).sin() * sy * amplitude]
            }
            Self::DiskBubble { amplitude } => {
                let w = (-(x * x) - y * y + 1.0) * amplitude;
                [w * (y * 0.5 + 1.0), w * (x * 0.5 + (-0.3))]
            }
            Self::RadialSwirl { amplitude, n } => {
                let r2 = x * x + y * y;
                let w = (-r2.powi(n) + 1.0) * amplitude;
                [-(w * y), w * x]
            }
        }
    }
}

/// A body force `f: Ω → ℝ²`.
pub trait Source: Sync {
    fn eval(&self, x: [f64; 2]) -> [f64; 2];
}

/// Named smooth body forces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NamedSource {
    /// `A (1, 0)`.
    Constant { amplitude: f64 },
    /// `A (1 + x/2 − 3y/10, 1/2 − 2x/5 + y²/5)`.
    SmoothMixed { amplitude: f64 },
    Zero,
}

pub const SOURCES: [&str; 3] = ["constant", "smooth_mixed", "zero"];

impl NamedSource {
    pub fn by_name(name: &str, amplitude: f64) -> Result<Self> {
        match name {
            "constant" => Ok(Self::Constant { amplitude }),
            "smooth_mixed" => Ok(Self::SmoothMixed { amplitude }),
            "zero" => Ok(Self::Zero),
            other => Err(Error::Config(format!("unknown source field '{other}'"))),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Self::Constant { amplitude } => Self::Constant { amplitude: factor * amplitude },
            Self::SmoothMixed { amplitude } => Self::SmoothMixed { amplitude: factor * amplitude },
            Self::Zero => Self::Zero,
        }
    }
}

impl Source for NamedSource {
    fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        match *self {
            Self::Constant { amplitude } => [amplitude, 0.0],
            Self::SmoothMixed { amplitude } => {
                [amplitude * (1.0 + 0.5 * x - 0.3 * y), amplitude * (0.5 - 0.4 * x + 0.2 * y * y)]
            }
            Self::Zero => [0.0, 0.0],
        }
    }
}

/// `f = −div S(Du)` for an exact field, evaluated through the chain rule.
pub struct ManufacturedSource<'a> {
    pub model: StressModel,
    pub exact: &'a dyn VectorField,
}

/// `−div S(Du)(x)`, with `∂_j S(Du) = ∂S(Du)[∂_j Du]`.
pub fn manufactured_rhs_at(model: &StressModel, exact: &dyn VectorField, x: [f64; 2]) -> Result<[f64; 2]> {
    let du = exact.sym_grad(x);
    let hess = exact.hessian(x);
    let mut f = [0.0; 2];
    for j in 0..2 {
        // ∂_j (Du)_kl = ½(∂_j∂_l u_k + ∂_j∂_k u_l)
        let d = |k: usize, l: usize| 0.5 * (hess[k][j][l] + hess[l][j][k]);
        let dq = SymTensor::from_packed(&[d(0, 0), d(1, 1), d(0, 1)])?;
        let t = model.stress_derivative(&du, &dq)?;
        for (i, fi) in f.iter_mut().enumerate() {
            *fi -= t.get(i, j);
        }
    }
    Ok(f)
}

/// The manufactured body force of `exact` for `model`.
pub fn manufactured_rhs<'a>(model: &StressModel, exact: &'a dyn VectorField) -> ManufacturedSource<'a> {
    ManufacturedSource { model: *model, exact }
}

impl Source for ManufacturedSource<'_> {
    fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        // points with a degenerate Du contribute nothing: S is C¹ away from
        // them and the set has measure zero for the catalogue fields
        manufactured_rhs_at(&self.model, self.exact, x).unwrap_or([0.0, 0.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::PDeltaParams;

    struct Rigid;
    impl VectorField for Rigid {
        fn jets(&self, p: [f64; 2]) -> [Jet; 2] {
            let (x, y) = Jet::coords(p);
            [-y + 0.3, x + (-1.0)]
        }
    }

    #[test]
    fn linear_law_gives_closed_form() {
        // p = 2, μ = 1: f = −div Du; for u = (sin πx sin πy, 0):
        // f₁ = π² sin πx sin πy·(1 + ½) − ... computed symbolically:
        // div Du = (∂₁₁u₁ + ½∂₂₂u₁ + ½∂₁₂u₂, ½∂₁₂u₁ + ½∂₁₁u₂ + ∂₂₂u₂)
        let model = crate::constitutive::StressModel::canonical(PDeltaParams::new(2.0, 0.0, 1.0).unwrap());
        let u = ExactField::SineBubble { amplitude: 1.0 };
        for &x in &[[0.3, 0.4], [0.71, 0.12]] {
            let f = manufactured_rhs_at(&model, &u, x).unwrap();
            let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
            let f1 = 1.5 * PI * PI * sx * sy;
            let f2 = -0.5 * PI * PI * cx * cy;
            assert!((f[0] - f1).abs() < 1e-12 && (f[1] - f2).abs() < 1e-12, "{f:?} vs {f1} {f2}");
        }
    }

    #[test]
    fn rigid_motion_has_no_force() {
        let model = StressModel::canonical(PDeltaParams::new(1.5, 0.1, 1.0).unwrap());
        let f = manufactured_rhs_at(&model, &Rigid, [0.2, 0.9]).unwrap();
        assert_eq!(f, [0.0, 0.0]);
    }

    #[test]
    fn chain_rule_matches_finite_difference_divergence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let model = StressModel::canonical(PDeltaParams::new(1.5, 0.1, 1.0).unwrap());
        let fields = [
            (ExactField::SinePair { amplitude: 1.0 }, DomainSpec::UnitSquare),
            (ExactField::DiskBubble { amplitude: 1.0 }, DomainSpec::UnitDisk),
            (ExactField::RadialSwirl { amplitude: 0.25, n: 8 }, DomainSpec::UnitDisk),
        ];
        for (u, spec) in fields {
            for _ in 0..100 {
                let x = match spec {
                    DomainSpec::UnitSquare => [0.05 + 0.9 * rng.random::<f64>(), 0.05 + 0.9 * rng.random::<f64>()],
                    _ => {
                        let (r, t) = (0.95 * rng.random::<f64>().sqrt(), 6.3 * rng.random::<f64>());
                        [r * t.cos(), r * t.sin()]
                    }
                };
                let f = manufactured_rhs_at(&model, &u, x).unwrap();
                let h = 1e-4;
                let mut div = [0.0; 2];
                for j in 0..2 {
                    let mut a = x;
                    let mut b = x;
                    a[j] += h;
                    b[j] -= h;
                    let (sa, sb) = (model.stress(&u.sym_grad(a)), model.stress(&u.sym_grad(b)));
                    for i in 0..2 {
                        div[i] += (sa.get(i, j) - sb.get(i, j)) / (2.0 * h);
                    }
                }
                let scale = f[0].hypot(f[1]).max(1.0);
                for i in 0..2 {
                    assert!((f[i] + div[i]).abs() < 1e-5 * scale, "{u:?} at {x:?}: {f:?} vs {div:?}");
                }
            }
        }
    }

    #[test]
    fn catalogue_fields_vanish_on_their_boundary() {
        for name in EXACT_FIELDS {
            let u = ExactField::by_name(name, 1.0).unwrap();
            for k in 0..64 {
                let t = k as f64 / 64.0;
                let pts = if u.fits(&DomainSpec::UnitSquare) {
                    vec![[t, 0.0], [t, 1.0], [0.0, t], [1.0, t]]
                } else {
                    let a = std::f64::consts::TAU * t;
                    vec![[a.cos(), a.sin()]]
                };
                for x in pts {
                    let v = u.value(x);
                    assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12, "{name} at {x:?}");
                }
            }
        }
        assert!(ExactField::by_name("nope", 1.0).is_err());
    }
}

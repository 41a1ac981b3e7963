//! Domains, triangular meshes, boundary charts with cut-offs, and tangential
//! difference quotients.

mod chart;
mod diffquot;
mod locate;
mod mesh;

pub use chart::{boundary_charts, cutoff_eval, Chart, ChartCover, CutoffValue, GraphKind, InteriorCutoff};
pub use diffquot::{
    normal_deriv, summation_by_parts_check, summation_by_parts_check_refined, tangential_deriv, tangential_diff,
    SbpResult, TangentialDiff,
};
pub use locate::{Location, PointLocator};
pub use mesh::{build_mesh, read_mesh, write_mesh, Mesh};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The computational domain `Ω ⊂ ℝ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawDomain")]
pub enum DomainSpec {
    UnitSquare,
    UnitDisk,
    Annulus { r_in: f64, r_out: f64 },
}

// Flat form used for strict parsing: unknown keys and radii on the wrong
// kind are rejected.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    kind: String,
    r_in: Option<f64>,
    r_out: Option<f64>,
}

impl TryFrom<RawDomain> for DomainSpec {
    type Error = String;

    fn try_from(raw: RawDomain) -> std::result::Result<Self, String> {
        let spec = match (raw.kind.as_str(), raw.r_in, raw.r_out) {
            ("unit_square", None, None) => DomainSpec::UnitSquare,
            ("unit_disk", None, None) => DomainSpec::UnitDisk,
            ("annulus", Some(r_in), Some(r_out)) => DomainSpec::Annulus { r_in, r_out },
            ("annulus", _, _) => return Err("annulus requires r_in and r_out".into()),
            ("unit_square" | "unit_disk", _, _) => {
                return Err(format!("domain kind '{}' takes no radii", raw.kind))
            }
            (other, _, _) => return Err(format!("unknown domain kind '{other}'")),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if let DomainSpec::Annulus { r_in, r_out } = *self {
            if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "annulus radii must satisfy 0 < r_in < r_out, got ({r_in}, {r_out})"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2
    }

    /// Whether the boundary is smooth enough to carry charts.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, DomainSpec::UnitSquare)
    }

    /// Distance to `∂Ω`, positive inside.
    pub fn signed_depth(&self, x: [f64; 2]) -> f64 {
        match *self {
            DomainSpec::UnitSquare => x[0].min(1.0 - x[0]).min(x[1]).min(1.0 - x[1]),
            DomainSpec::UnitDisk => 1.0 - x[0].hypot(x[1]),
            DomainSpec::Annulus { r_in, r_out } => {
                let r = x[0].hypot(x[1]);
                (r - r_in).min(r_out - r)
            }
        }
    }

    /// Nearest point of `∂Ω` for points near a curved boundary; the
    /// square's boundary is straight and needs no projection.
    pub fn project_to_boundary(&self, x: [f64; 2]) -> [f64; 2] {
        let radial = |rho: f64| {
            let r = x[0].hypot(x[1]);
            [x[0] * rho / r, x[1] * rho / r]
        };
        match *self {
            DomainSpec::UnitSquare => x,
            DomainSpec::UnitDisk => radial(1.0),
            DomainSpec::Annulus { r_in, r_out } => {
                let r = x[0].hypot(x[1]);
                if (r - r_in).abs() < (r_out - r).abs() {
                    radial(r_in)
                } else {
                    radial(r_out)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_validation() {
        assert!(DomainSpec::Annulus { r_in: 0.5, r_out: 1.0 }.validate().is_ok());
        assert!(DomainSpec::Annulus { r_in: 1.0, r_out: 0.5 }.validate().is_err());
        assert!(DomainSpec::Annulus { r_in: 0.0, r_out: 0.5 }.validate().is_err());
    }

    #[test]
    fn depth_and_projection() {
        let d = DomainSpec::UnitDisk;
        assert!((d.signed_depth([0.6, 0.0]) - 0.4).abs() < 1e-15);
        let p = d.project_to_boundary([0.3, 0.4]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let a = DomainSpec::Annulus { r_in: 0.5, r_out: 1.0 };
        assert!((a.signed_depth([0.0, 0.6]) - 0.1).abs() < 1e-15);
        let q = a.project_to_boundary([0.0, 0.55]);
        assert!((q[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn serde_shape() {
        let d: DomainSpec = serde_json::from_str(r#"{"kind":"annulus","r_in":0.3,"r_out":1.0}"#).unwrap();
        assert_eq!(d, DomainSpec::Annulus { r_in: 0.3, r_out: 1.0 });
        let s: DomainSpec = serde_json::from_str(r#"{"kind":"unit_square"}"#).unwrap();
        assert_eq!(s, DomainSpec::UnitSquare);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"unit_disk","r":2}"#).is_err());
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"unit_disk","r_in":0.2}"#).is_err());
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"annulus","r_in":2,"r_out":1}"#).is_err());
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}

//! Galerkin discretization of `−div S(Du) = f` with homogeneous Dirichlet
//! data, solved by damped Newton iteration and (ε, κ) continuation.

mod continuation;
mod fem;
mod fields;
mod jet;
mod newton;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use continuation::{continuation_solve, continuation_solve_from, ContinuationSchedule, StageRecord};
pub use fem::{
    assemble_jacobian, assemble_residual, energy, f_error, h1_error, monotonicity_pair, source_norm, FemSystem,
};
pub use fields::{
    manufactured_rhs, manufactured_rhs_at, ExactField, ManufacturedSource, NamedSource, Source, VectorField,
    EXACT_FIELDS, SOURCES,
};
pub use jet::Jet;
pub use newton::{newton_solve, newton_solve_system, NewtonOptions};

pub(crate) use fem::{element_gradient, sym2};

use crate::error::{Error, Result};
use crate::geometry::{Mesh, PointLocator};
use crate::tensor::SymTensor;

/// Piecewise-linear vector field on a mesh with zero boundary values.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteField<'m> {
    mesh: &'m Mesh,
    values: Vec<[f64; 2]>,
}

impl<'m> DiscreteField<'m> {
    pub fn zeros(mesh: &'m Mesh) -> Self {
        Self { mesh, values: vec![[0.0; 2]; mesh.n_nodes()] }
    }

    /// Nodal values; fails if a boundary value is nonzero.
    pub fn from_values(mesh: &'m Mesh, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::DimensionMismatch(values.len(), mesh.n_nodes()));
        }
        if let Some(&b) = mesh.boundary_nodes.iter().find(|&&b| values[b] != [0.0, 0.0]) {
            return Err(Error::InvalidParameter(format!("boundary node {b} carries a nonzero value")));
        }
        Ok(Self { mesh, values })
    }

    /// Nodal interpolant of `g`, with boundary values set to zero.
    pub fn interpolate<G: Fn([f64; 2]) -> [f64; 2]>(mesh: &'m Mesh, g: G) -> Self {
        let values = (0..mesh.n_nodes())
            .map(|i| if mesh.is_boundary(i) { [0.0; 2] } else { g(mesh.nodes[i]) })
            .collect();
        Self { mesh, values }
    }

    /// Field from a node-major dof vector; boundary entries are ignored.
    pub fn from_dofs(mesh: &'m Mesh, dofs: &[f64]) -> Self {
        Self::interpolate_nodes(mesh, |i| [dofs[2 * i], dofs[2 * i + 1]])
    }

    fn interpolate_nodes<G: Fn(usize) -> [f64; 2]>(mesh: &'m Mesh, g: G) -> Self {
        let values = (0..mesh.n_nodes()).map(|i| if mesh.is_boundary(i) { [0.0; 2] } else { g(i) }).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// `∇u_h` on element `k`, `[c][j] = ∂_j u_c`.
    pub fn element_gradient(&self, k: usize) -> [[f64; 2]; 2] {
        let e = self.mesh.elements[k];
        element_gradient(&self.mesh.basis_gradients(k), e.map(|a| self.values[a]))
    }

    /// `Du_h` on element `k`.
    pub fn element_sym_grad(&self, k: usize) -> SymTensor {
        sym2(self.element_gradient(k))
    }

    /// `max_i |u_i − v_i|` over nodes and components.
    pub fn max_abs_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Interpolates this field at the nodes of `fine`.
    pub fn prolong<'f>(&self, fine: &'f Mesh) -> DiscreteField<'f> {
        let loc = PointLocator::new(self.mesh);
        let u1: Vec<f64> = self.values.iter().map(|v| v[0]).collect();
        let u2: Vec<f64> = self.values.iter().map(|v| v[1]).collect();
        DiscreteField::interpolate_nodes(fine, |i| {
            let x = fine.nodes[i];
            [loc.interpolate(&u1, x), loc.interpolate(&u2, x)]
        })
    }

    /// One row `x,y,u1,u2` per node after an optional preamble line.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: Option<&str>) -> Result<()> {
        if let Some(line) = preamble {
            writeln!(out, "{line}")?;
        }
        writeln!(out, "x,y,u1,u2")?;
        for (x, u) in self.mesh.nodes.iter().zip(&self.values) {
            writeln!(out, "{:?},{:?},{:?},{:?}", x[0], x[1], u[0], u[1])?;
        }
        Ok(())
    }
}

/// Status flags of a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveFlags {
    pub converged: bool,
    /// Steps accepted on the residual test because the energy change was
    /// below rounding level.
    pub roundoff_steps: usize,
    /// A priori quantity non-increasing along the ε stages (1% slack).
    pub apriori_monotone: Option<bool>,
    /// `∫φ_{p,κ}` changes by less than 2% over the last two κ stages.
    pub kappa_stabilized: Option<bool>,
}

/// Outcome of a Newton or continuation solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// Energy after every accepted step, starting from the initial guess.
    pub energy_history: Vec<f64>,
    pub stages: Vec<StageRecord>,
    pub flags: SolveFlags,
    /// `‖f‖_{L^{p'}}`.
    pub source_norm: f64,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests;

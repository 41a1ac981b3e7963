//! Degree-1 Galerkin assembly on triangle meshes.
//!
//! Unknowns are indexed `2·node + component` over all nodes; Dirichlet rows
//! of the residual are zero and the corresponding Jacobian rows and columns
//! are replaced by the identity.

use std::cell::OnceCell;

use super::fields::{Source, VectorField};
use super::DiscreteField;
use crate::constitutive::StressModel;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{nested_dissection, CsrMatrix, LinearSolver};
use crate::quadrature::{TRI_DEGREE2, TRI_DEGREE5};
use crate::tensor::SymTensor;

const SKIP: usize = usize::MAX;

/// Per-mesh assembly data: basis gradients, areas, the Jacobian sparsity
/// pattern and, once needed, the symbolic factorization.
pub struct FemSystem<'m> {
    mesh: &'m Mesh,
    grads: Vec<[[f64; 2]; 3]>,
    areas: Vec<f64>,
    pattern: CsrMatrix,
    /// Positions in `pattern.values` of the local 6×6 block, row-major,
    /// `SKIP` where a row or column is constrained.
    positions: Vec<[usize; 36]>,
    diag_positions: Vec<usize>,
    solver: OnceCell<LinearSolver>,
}

/// `(∇u_h)_{cj}` on an element from the nodal values and basis gradients.
pub(crate) fn element_gradient(g: &[[f64; 2]; 3], u: [[f64; 2]; 3]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for a in 0..3 {
        for c in 0..2 {
            for j in 0..2 {
                out[c][j] += u[a][c] * g[a][j];
            }
        }
    }
    out
}

pub(crate) fn sym2(m: [[f64; 2]; 2]) -> SymTensor {
    SymTensor::from_packed(&[m[0][0], m[1][1], 0.5 * (m[0][1] + m[1][0])]).expect("2D")
}

impl<'m> FemSystem<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let ne = mesh.n_elements();
        let grads: Vec<_> = (0..ne).map(|k| mesh.basis_gradients(k)).collect();
        let areas: Vec<_> = (0..ne).map(|k| mesh.area(k)).collect();
        let n = 2 * mesh.n_nodes();
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for e in &mesh.elements {
            for &a in e {
                if mesh.is_boundary(a) {
                    continue;
                }
                for &b in e {
                    if mesh.is_boundary(b) {
                        continue;
                    }
                    for c in 0..2 {
                        rows[2 * a + c].extend([2 * b, 2 * b + 1]);
                    }
                }
            }
        }
        let pattern = CsrMatrix::from_rows(rows);
        let positions = mesh
            .elements
            .iter()
            .map(|e| {
                let mut pos = [SKIP; 36];
                for l in 0..6 {
                    for m in 0..6 {
                        let (a, b) = (e[l / 2], e[m / 2]);
                        if !mesh.is_boundary(a) && !mesh.is_boundary(b) {
                            pos[6 * l + m] = pattern.position(2 * a + l % 2, 2 * b + m % 2).expect("pattern");
                        }
                    }
                }
                pos
            })
            .collect();
        let diag_positions = (0..n).map(|i| pattern.position(i, i).expect("diagonal")).collect();
        Self { mesh, grads, areas, pattern, positions, diag_positions, solver: OnceCell::new() }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.mesh.n_nodes()
    }

    fn local_values(&self, k: usize, u: &[f64]) -> [[f64; 2]; 3] {
        let e = self.mesh.elements[k];
        [0, 1, 2].map(|a| [u[2 * e[a]], u[2 * e[a] + 1]])
    }

    /// Element symmetric gradient `Du_h|_K` from a dof vector.
    pub fn element_sym_grad(&self, k: usize, u: &[f64]) -> SymTensor {
        sym2(element_gradient(&self.grads[k], self.local_values(k, u)))
    }

    /// `∫ f·φ_{a,c}` by the 3-point rule, Dirichlet rows zero.
    pub fn load(&self, f: &dyn Source) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (k, e) in self.mesh.elements.iter().enumerate() {
            let area = self.areas[k];
            for (x, bary, w) in TRI_DEGREE2.map(self.mesh.vertices(k)) {
                let fx = f.eval(x);
                for a in 0..3 {
                    for c in 0..2 {
                        out[2 * e[a] + c] += area * w * bary[a] * fx[c];
                    }
                }
            }
        }
        self.zero_dirichlet(&mut out);
        out
    }

    fn zero_dirichlet(&self, r: &mut [f64]) {
        for &b in &self.mesh.boundary_nodes {
            r[2 * b] = 0.0;
            r[2 * b + 1] = 0.0;
        }
    }

    /// `∫ S(Du_h)·Dφ_{a,c}`, Dirichlet rows zero.
    pub fn internal_force(&self, model: &StressModel, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (k, e) in self.mesh.elements.iter().enumerate() {
            let g = &self.grads[k];
            let s = model.stress(&self.element_sym_grad(k, u));
            let area = self.areas[k];
            for a in 0..3 {
                for c in 0..2 {
                    out[2 * e[a] + c] += area * (s.get(c, 0) * g[a][0] + s.get(c, 1) * g[a][1]);
                }
            }
        }
        self.zero_dirichlet(&mut out);
        out
    }

    pub fn residual(&self, model: &StressModel, load: &[f64], u: &[f64]) -> Vec<f64> {
        let mut r = self.internal_force(model, u);
        r.iter_mut().zip(load).for_each(|(r, l)| *r -= l);
        r
    }

    /// Galerkin matrix of `∂S(Du_h)`, exactly symmetric.
    pub fn jacobian(&self, model: &StressModel, u: &[f64]) -> Result<CsrMatrix> {
        let mut j = self.pattern.clone();
        self.jacobian_into(model, u, &mut j)?;
        Ok(j)
    }

    fn jacobian_into(&self, model: &StressModel, u: &[f64], jac: &mut CsrMatrix) -> Result<()> {
        jac.clear();
        for (k, pos) in self.positions.iter().enumerate() {
            let g = &self.grads[k];
            let du = self.element_sym_grad(k, u);
            let t = du.norm();
            model.check_nondegenerate(t)?;
            let (alpha, beta) = model.jacobian_coefficients(t);
            // P̂:B_{ac} = (P̂ ∇φ_a)_c
            let mut pb = [0.0; 6];
            if beta != 0.0 {
                for a in 0..3 {
                    for c in 0..2 {
                        pb[2 * a + c] = (du.get(c, 0) * g[a][0] + du.get(c, 1) * g[a][1]) / t;
                    }
                }
            }
            let area = self.areas[k];
            for l in 0..6 {
                let (a, c) = (l / 2, l % 2);
                for m in l..6 {
                    let (b, e) = (m / 2, m % 2);
                    if pos[6 * l + m] == SKIP {
                        continue;
                    }
                    // B_{ac}:B_{be} = ½(δ_ce ∇φ_a·∇φ_b + ∂_eφ_a ∂_cφ_b)
                    let dot = if c == e { g[a][0] * g[b][0] + g[a][1] * g[b][1] } else { 0.0 };
                    let bb = 0.5 * (dot + g[a][e] * g[b][c]);
                    let v = area * (alpha * bb + beta * pb[l] * pb[m]);
                    jac.values[pos[6 * l + m]] += v;
                    if m != l {
                        jac.values[pos[6 * m + l]] += v;
                    }
                }
            }
        }
        for &b in &self.mesh.boundary_nodes {
            jac.values[self.diag_positions[2 * b]] = 1.0;
            jac.values[self.diag_positions[2 * b + 1]] = 1.0;
        }
        Ok(())
    }

    /// Solves `J x = b` with the cached symbolic factorization.
    pub fn solve_linear(&self, jac: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let solver = self.solver.get_or_init(|| {
            let coords: Vec<[f64; 2]> = (0..self.n_dofs()).map(|i| self.mesh.nodes[i / 2]).collect();
            let adjacency: Vec<Vec<usize>> = (0..self.n_dofs()).map(|i| self.pattern.row(i).0.to_vec()).collect();
            LinearSolver::new(&self.pattern, nested_dissection(&coords, &adjacency, 64))
        });
        solver.solve(jac, b)
    }

    /// `(∫ W(Du_h), ∫ f·u_h)` with `W` the stress potential.
    pub fn energy_parts(&self, model: &StressModel, load: &[f64], u: &[f64]) -> (f64, f64) {
        let w: f64 = (0..self.mesh.n_elements())
            .map(|k| self.areas[k] * model.energy_density(&self.element_sym_grad(k, u)))
            .sum();
        let work: f64 = load.iter().zip(u).map(|(l, u)| l * u).sum();
        (w, work)
    }

    pub fn energy(&self, model: &StressModel, load: &[f64], u: &[f64]) -> f64 {
        let (w, work) = self.energy_parts(model, load, u);
        w - work
    }

    /// `∫ φ_{p,δ'}(|Du_h|)` without `μ` or `ε`.
    pub fn phi_integral(&self, model: &StressModel, u: &[f64]) -> f64 {
        let phi = model.nfunction();
        (0..self.mesh.n_elements())
            .map(|k| self.areas[k] * phi.phi_unchecked(self.element_sym_grad(k, u).norm()))
            .sum()
    }

    /// `‖∇u_h‖₂²`.
    pub fn grad_norm_sq(&self, u: &[f64]) -> f64 {
        (0..self.mesh.n_elements())
            .map(|k| {
                let g = element_gradient(&self.grads[k], self.local_values(k, u));
                self.areas[k] * g.iter().flatten().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    pub fn area(&self, k: usize) -> f64 {
        self.areas[k]
    }

    pub fn basis_gradients(&self, k: usize) -> &[[f64; 2]; 3] {
        &self.grads[k]
    }
}

/// `‖f‖_{L^{p'}}` with `p' = p/(p−1)`, by the degree-5 rule.
pub fn source_norm(mesh: &Mesh, f: &dyn Source, p: f64) -> f64 {
    let q = p / (p - 1.0);
    let mut s = 0.0;
    for k in 0..mesh.n_elements() {
        let area = mesh.area(k);
        for (x, _, w) in TRI_DEGREE5.map(mesh.vertices(k)) {
            let fx = f.eval(x);
            s += area * w * fx[0].hypot(fx[1]).powf(q);
        }
    }
    s.powf(1.0 / q)
}

/// `‖u_h − u*‖_{H¹}` (value and gradient parts) by the degree-5 rule.
pub fn h1_error(u: &DiscreteField, exact: &dyn VectorField) -> f64 {
    let mesh = u.mesh();
    let mut s = 0.0;
    for k in 0..mesh.n_elements() {
        let e = mesh.elements[k];
        let gh = u.element_gradient(k);
        let area = mesh.area(k);
        for (x, bary, w) in TRI_DEGREE5.map(mesh.vertices(k)) {
            let j = exact.jets(x);
            for c in 0..2 {
                let uh: f64 = (0..3).map(|a| bary[a] * u.values()[e[a]][c]).sum();
                let mut v = (uh - j[c].v).powi(2);
                for d in 0..2 {
                    v += (gh[c][d] - j[c].d[d]).powi(2);
                }
                s += area * w * v;
            }
        }
    }
    s.sqrt()
}

/// `‖F(Du_h) − F(Du*)‖₂` by the degree-5 rule.
pub fn f_error(model: &StressModel, u: &DiscreteField, exact: &dyn VectorField) -> f64 {
    let mesh = u.mesh();
    let mut s = 0.0;
    for k in 0..mesh.n_elements() {
        let fh = model.f_map(&u.element_sym_grad(k));
        let area = mesh.area(k);
        for (x, _, w) in TRI_DEGREE5.map(mesh.vertices(k)) {
            s += area * w * fh.sub(&model.f_map(&exact.sym_grad(x))).norm_sq();
        }
    }
    s.sqrt()
}

/// `∫ S(Du)·Dv` and related element integrals are exact for P1 fields; this
/// returns `∫ (S(Du) − S(Dv)):(Du − Dv)` and `‖F(Du) − F(Dv)‖₂²`.
pub fn monotonicity_pair(model: &StressModel, u: &DiscreteField, v: &DiscreteField) -> Result<(f64, f64)> {
    if !std::ptr::eq(u.mesh(), v.mesh()) {
        return Err(Error::InvalidParameter("fields live on different meshes".into()));
    }
    let mesh = u.mesh();
    let (mut mono, mut fdist) = (0.0, 0.0);
    for k in 0..mesh.n_elements() {
        let (du, dv) = (u.element_sym_grad(k), v.element_sym_grad(k));
        let diff = du.sub(&dv);
        let ds = model.stress(&du).sub(&model.stress(&dv));
        let area = mesh.area(k);
        mono += area * crate::tensor::frob_inner(&ds, &diff)?;
        fdist += area * model.f_map(&du).sub(&model.f_map(&dv)).norm_sq();
    }
    Ok((mono, fdist))
}

/// `∫ S(Du_h)·Dv_h − ∫ f·v_h` for every basis function, in node-major
/// order with Dirichlet rows zeroed.
pub fn assemble_residual(mesh: &Mesh, model: &StressModel, f: &dyn Source, u: &DiscreteField) -> Result<Vec<f64>> {
    check_mesh(mesh, u)?;
    let sys = FemSystem::new(mesh);
    Ok(sys.residual(model, &sys.load(f), &u.to_dofs()))
}

/// Galerkin Jacobian of the residual at `u`; Dirichlet rows and columns
/// carry the identity.
pub fn assemble_jacobian(mesh: &Mesh, model: &StressModel, u: &DiscreteField) -> Result<CsrMatrix> {
    check_mesh(mesh, u)?;
    FemSystem::new(mesh).jacobian(model, &u.to_dofs())
}

/// `∫ μφ_{p,δ'}(|Du_h|) + (ε/2)|Du_h|² − f·u_h`.
pub fn energy(mesh: &Mesh, model: &StressModel, f: &dyn Source, u: &DiscreteField) -> Result<f64> {
    check_mesh(mesh, u)?;
    let sys = FemSystem::new(mesh);
    Ok(sys.energy(model, &sys.load(f), &u.to_dofs()))
}

fn check_mesh(mesh: &Mesh, u: &DiscreteField) -> Result<()> {
    if std::ptr::eq(mesh, u.mesh()) || mesh == u.mesh() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("field does not live on the given mesh".into()))
    }
}

//! Residual and Jacobian of the fully coupled time-step system, plus the
//! discrete energy and structural diagnostics.
//!
//! Unknowns are stored in one flat vector ordered `[mu | phi | u_x | u_y | p | r]`.
//! On each triangle the 21 local unknowns are ordered
//! `[mu0..2, phi0..2, ux0..5, uy0..5, p0..2]`; `r` is handled separately.

mod kernel;
mod state;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::materials::{mobility, shear_rate, MaterialModel};
use crate::mesh::Mesh;
use crate::solver::lu::{LuFactorization, LuSolver};
use crate::solver::sparse::{Pattern, SparseMatrix};
use crate::spaces::basis::BARY_GRAD;
use crate::spaces::{
    build_scalar_space, build_velocity_space, coupling_pattern, line_rule, mass_and_stiffness,
    quadrature_rule, AffineMap, DofMap, ElementKind, LineRule, Tabulation,
};

pub use state::{Layout, SystemState};

pub(crate) const LOCAL: usize = 21;
pub(crate) const MU: usize = 0;
pub(crate) const PHI: usize = 3;
pub(crate) const UX: usize = 6;
pub(crate) const UY: usize = 12;
pub(crate) const P: usize = 18;
const NONE: u32 = u32::MAX;

pub const VOLUME_DEGREE: usize = 6;
pub const BOUNDARY_DEGREE: usize = 4;

/// How element contributions are computed. Both modes scatter in triangle
/// order, so they produce bitwise identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssemblyMode {
    #[default]
    Sequential,
    Parallel,
}

impl std::str::FromStr for AssemblyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(AssemblyMode::Sequential),
            "parallel" => Ok(AssemblyMode::Parallel),
            _ => Err(Error::config("assembly", format!("expected sequential|parallel, got '{s}'"))),
        }
    }
}

impl std::fmt::Display for AssemblyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AssemblyMode::Sequential => "sequential",
            AssemblyMode::Parallel => "parallel",
        })
    }
}

/// Mesh, spaces, quadrature and all sparsity bookkeeping for one mesh.
pub struct Discretization {
    pub mesh: Mesh,
    pub q: DofMap,
    pub v: DofMap,
    pub layout: Layout,
    pub(crate) maps: Vec<AffineMap>,
    pub(crate) p1: Tabulation,
    pub(crate) p2: Tabulation,
    pub(crate) line: LineRule,
    pattern: Arc<Pattern>,
    /// Global unknown of every local slot (NONE for wall-constrained nodes).
    elem_dofs: Vec<[u32; LOCAL]>,
    /// Value-array position of every local (row, col) pair.
    elem_pos: Vec<u32>,
    /// Positions of `(p_i, r)` and `(r, p_i)` per triangle.
    r_pos: Vec<[[u32; 3]; 2]>,
    /// Positions of `(mu_i, phi_j)` per wall edge.
    trace_pos: Vec<[[u32; 2]; 2]>,
    pub mass_q: SparseMatrix,
    pub stiff_q: SparseMatrix,
    pub mass_v: SparseMatrix,
    pub stiff_v: SparseMatrix,
    /// `b_i = (d_x N_j, psi_i)` and `(d_y N_j, psi_i)`.
    div_x: SparseMatrix,
    div_y: SparseMatrix,
    /// `int psi_i` over the domain.
    pub q_integrals: Vec<f64>,
    mass_q_lu: LuFactorization,
}

/// Physical and time-step parameters of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub dt: f64,
    pub gamma: f64,
    pub s: f64,
    pub force: [f64; 2],
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "time step must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "interface coefficient must be positive"));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::config("s", "boundary coefficient must be positive"));
        }
        if !self.force.iter().all(|f| f.is_finite()) {
            return Err(Error::config("F", "body force must be finite"));
        }
        Ok(())
    }
}

/// Structural quantities of a state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub mass: f64,
    pub mean_div: f64,
    pub proj_div: f64,
    pub pressure_mean: f64,
    pub r: f64,
}

fn pos(x: usize) -> u32 {
    u32::try_from(x).expect("index exceeds 32-bit range")
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let q = build_scalar_space(&mesh)?;
        let v = build_velocity_space(&mesh)?;
        let layout = Layout {
            nq: q.n_dofs,
            nv: v.n_dofs,
        };
        let maps: Vec<AffineMap> = (0..mesh.n_triangles())
            .map(|t| AffineMap::new(mesh.triangle_coords(t)))
            .collect();
        let rule = quadrature_rule(VOLUME_DEGREE)?;
        let p1 = Tabulation::new(ElementKind::P1, &rule);
        let p2 = Tabulation::new(ElementKind::P2, &rule);
        let line = line_rule(BOUNDARY_DEGREE)?;

        let elem_dofs: Vec<[u32; LOCAL]> = (0..mesh.n_triangles())
            .map(|t| {
                let mut d = [NONE; LOCAL];
                for (k, g) in q.cell(t).iter().enumerate() {
                    let g = g.expect("scalar dofs are never constrained");
                    d[MU + k] = pos(layout.mu() + g);
                    d[PHI + k] = pos(layout.phi() + g);
                    d[P + k] = pos(layout.p() + g);
                }
                for (k, g) in v.cell(t).iter().enumerate() {
                    if let Some(g) = g {
                        d[UX + k] = pos(layout.ux() + g);
                        d[UY + k] = pos(layout.uy() + g);
                    }
                }
                d
            })
            .collect();

        let n = layout.len();
        let r = layout.r();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for d in &elem_dofs {
            let live: Vec<usize> = d.iter().filter(|&&g| g != NONE).map(|&g| g as usize).collect();
            for &a in &live {
                rows[a].extend_from_slice(&live);
            }
            for &g in &d[P..P + 3] {
                rows[g as usize].push(r);
                rows[r].push(g as usize);
            }
        }
        let pattern = Arc::new(Pattern::from_rows(n, rows));

        let mut elem_pos = Vec::with_capacity(LOCAL * LOCAL * elem_dofs.len());
        let mut r_pos = Vec::with_capacity(elem_dofs.len());
        for d in &elem_dofs {
            for &a in d {
                for &b in d {
                    elem_pos.push(if a == NONE || b == NONE {
                        NONE
                    } else {
                        pos(pattern.position(a as usize, b as usize).expect("in pattern"))
                    });
                }
            }
            let mut rp = [[0u32; 3]; 2];
            for k in 0..3 {
                let g = d[P + k] as usize;
                rp[0][k] = pos(pattern.position(g, r).expect("in pattern"));
                rp[1][k] = pos(pattern.position(r, g).expect("in pattern"));
            }
            r_pos.push(rp);
        }
        let trace_pos = q
            .trace_edges
            .iter()
            .map(|e| {
                let mut tp = [[0u32; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let row = layout.mu() + e.dofs[i];
                        let col = layout.phi() + e.dofs[j];
                        tp[i][j] = pos(pattern.position(row, col).expect("trace in pattern"));
                    }
                }
                tp
            })
            .collect();

        let (mass_q, stiff_q) = mass_and_stiffness(&mesh, &q)?;
        let (mass_v, stiff_v) = mass_and_stiffness(&mesh, &v)?;
        let q_integrals = mass_q.matvec(&vec![1.0; q.n_dofs]);
        let (div_x, div_y) = divergence_operators(&mesh, &q, &v, &maps)?;
        let mass_q_lu = LuSolver::new().factorize(&mass_q)?;

        Ok(Discretization {
            mesh,
            q,
            v,
            layout,
            maps,
            p1,
            p2,
            line,
            pattern,
            elem_dofs,
            elem_pos,
            r_pos,
            trace_pos,
            mass_q,
            stiff_q,
            mass_v,
            stiff_v,
            div_x,
            div_y,
            q_integrals,
            mass_q_lu,
        })
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn n_unknowns(&self) -> usize {
        self.layout.len()
    }

    fn gather(&self, t: usize, x: &[f64]) -> [f64; LOCAL] {
        let mut out = [0.0; LOCAL];
        for (o, &g) in out.iter_mut().zip(&self.elem_dofs[t]) {
            if g != NONE {
                *o = x[g as usize];
            }
        }
        out
    }

    /// L² norm of the `(mu, phi, u)` components of a flat vector.
    pub fn increment_norm(&self, x: &[f64]) -> f64 {
        let l = &self.layout;
        let mu = &x[l.mu()..l.mu() + l.nq];
        let phi = &x[l.phi()..l.phi() + l.nq];
        let ux = &x[l.ux()..l.ux() + l.nv];
        let uy = &x[l.uy()..l.uy() + l.nv];
        let s = self.mass_q.bilinear(mu, mu)
            + self.mass_q.bilinear(phi, phi)
            + self.mass_v.bilinear(ux, ux)
            + self.mass_v.bilinear(uy, uy);
        s.max(0.0).sqrt()
    }

    /// Discrete energy of the `(phi, u)` part of a state, evaluated with the
    /// same quadrature as the residual.
    pub fn energy(&self, state: &SystemState, materials: &MaterialModel, gamma: f64, s: f64) -> Result<f64> {
        state.validate(&self.layout)?;
        let x = state.to_vector();
        let mut e = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let loc = self.gather(t, &x);
            let map = &self.maps[t];
            let jw = map.det.abs();
            let g1: [[f64; 2]; 3] = std::array::from_fn(|i| map.grad(BARY_GRAD[i]));
            let grad_phi = (0..3).fold([0.0; 2], |acc, i| {
                [acc[0] + g1[i][0] * loc[PHI + i], acc[1] + g1[i][1] * loc[PHI + i]]
            });
            for ((e1, e2), w) in self.p1.evals.iter().zip(&self.p2.evals).zip(&self.p1.rule.weights) {
                let phi: f64 = (0..3).map(|i| e1.values[i] * loc[PHI + i]).sum();
                let ux: f64 = (0..6).map(|i| e2.values[i] * loc[UX + i]).sum();
                let uy: f64 = (0..6).map(|i| e2.values[i] * loc[UY + i]).sum();
                let density = 0.5 * (ux * ux + uy * uy)
                    + materials.bulk.energy(phi)
                    + 0.5 * gamma * (grad_phi[0] * grad_phi[0] + grad_phi[1] * grad_phi[1]);
                e += w * jw * density;
            }
        }
        for edge in &self.q.trace_edges {
            let (a, b) = (state.phi[edge.dofs[0]], state.phi[edge.dofs[1]]);
            let slope = (b - a) / edge.length;
            for (&sp, &w) in self.line.points.iter().zip(&self.line.weights) {
                let phi = (1.0 - sp) * a + sp * b;
                e += edge.length * w * (materials.wall.energy(phi) + 0.5 * s * slope * slope);
            }
        }
        Ok(e)
    }

    pub fn diagnostics(&self, state: &SystemState) -> Result<Diagnostics> {
        state.validate(&self.layout)?;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mass = dot(&self.q_integrals, &state.phi);
        let bx = self.div_x.matvec(&state.ux);
        let b: Vec<f64> = self
            .div_y
            .matvec(&state.uy)
            .iter()
            .zip(&bx)
            .map(|(y, x)| x + y)
            .collect();
        let total_div: f64 = b.iter().sum();
        let proj = self.mass_q_lu.solve(&b)?;
        Ok(Diagnostics {
            mass,
            mean_div: total_div.abs() / self.mesh.domain_area(),
            proj_div: dot(&proj, &b).max(0.0).sqrt(),
            pressure_mean: dot(&self.q_integrals, &state.p),
            r: state.r,
        })
    }

    /// Coefficients of the L² projection of `div u` onto the scalar space.
    pub fn projected_divergence(&self, state: &SystemState) -> Result<Vec<f64>> {
        let bx = self.div_x.matvec(&state.ux);
        let b: Vec<f64> = self.div_y.matvec(&state.uy).iter().zip(&bx).map(|(y, x)| x + y).collect();
        self.mass_q_lu.solve(&b)
    }
}

fn divergence_operators(
    mesh: &Mesh,
    q: &DofMap,
    v: &DofMap,
    maps: &[AffineMap],
) -> Result<(SparseMatrix, SparseMatrix)> {
    let rule = quadrature_rule(2)?;
    let t1 = Tabulation::new(ElementKind::P1, &rule);
    let t2 = Tabulation::new(ElementKind::P2, &rule);
    let pattern = Arc::new(coupling_pattern(q, v));
    let mut dx = SparseMatrix::zeros(pattern.clone());
    let mut dy = SparseMatrix::zeros(pattern);
    for t in 0..mesh.n_triangles() {
        let map = &maps[t];
        let jw = map.det.abs();
        for ((e1, e2), w) in t1.evals.iter().zip(&t2.evals).zip(&rule.weights) {
            for (i, qi) in q.cell(t).iter().enumerate() {
                let qi = qi.expect("scalar dof");
                for (j, vj) in v.cell(t).iter().enumerate() {
                    let Some(vj) = vj else { continue };
                    let g = map.grad(e2.grads[j]);
                    dx.add(qi, *vj, w * jw * g[0] * e1.values[i]);
                    dy.add(qi, *vj, w * jw * g[1] * e1.values[i]);
                }
            }
        }
    }
    Ok((dx, dy))
}

/// Everything needed to evaluate the step residual for given previous state.
/// Viscosity and mobility are frozen at the previous state and tabulated at
/// every quadrature point once.
pub struct StepContext<'a> {
    pub disc: &'a Discretization,
    pub materials: &'a MaterialModel,
    pub params: StepParams,
    pub mode: AssemblyMode,
    prev: Vec<f64>,
    eta: Vec<f64>,
    mob: Vec<f64>,
}

impl<'a> StepContext<'a> {
    pub fn new(
        disc: &'a Discretization,
        materials: &'a MaterialModel,
        params: StepParams,
        prev: &SystemState,
        mode: AssemblyMode,
    ) -> Result<Self> {
        params.validate()?;
        prev.validate(&disc.layout)?;
        let prev = prev.to_vector();
        let nqp = disc.p1.evals.len();
        let ntri = disc.mesh.n_triangles();
        let mut eta = vec![0.0; ntri * nqp];
        let mut mob = vec![0.0; ntri * nqp];
        for t in 0..ntri {
            let loc = disc.gather(t, &prev);
            let map = &disc.maps[t];
            for (k, (e1, e2)) in disc.p1.evals.iter().zip(&disc.p2.evals).enumerate() {
                let phi: f64 = (0..3).map(|i| e1.values[i] * loc[PHI + i]).sum();
                let mut grad = [[0.0; 2]; 2];
                for i in 0..6 {
                    let g = map.grad(e2.grads[i]);
                    for b in 0..2 {
                        grad[0][b] += g[b] * loc[UX + i];
                        grad[1][b] += g[b] * loc[UY + i];
                    }
                }
                eta[t * nqp + k] = materials.viscosity.eval(shear_rate(grad), phi);
                mob[t * nqp + k] = mobility(phi);
            }
        }
        Ok(StepContext {
            disc,
            materials,
            params,
            mode,
            prev,
            eta,
            mob,
        })
    }

    pub fn prev_vector(&self) -> &[f64] {
        &self.prev
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.disc.layout.len() {
            return Err(Error::Contract(format!(
                "iterate has {} entries, expected {}",
                x.len(),
                self.disc.layout.len()
            )));
        }
        Ok(())
    }

    fn element(&self, t: usize, x: &[f64], jac: Option<&mut kernel::LocalMatrix>) -> ([f64; LOCAL], f64) {
        let nqp = self.disc.p1.evals.len();
        let xo = self.disc.gather(t, &self.prev);
        let xn = self.disc.gather(t, x);
        kernel::element(
            self,
            t,
            &xo,
            &xn,
            x[self.disc.layout.r()],
            &self.eta[t * nqp..(t + 1) * nqp],
            &self.mob[t * nqp..(t + 1) * nqp],
            jac,
        )
    }

    /// Residual of the step equations at the flat iterate `x`.
    pub fn residual_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let d = self.disc;
        let ntri = d.mesh.n_triangles();
        let mut res = vec![0.0; d.layout.len()];
        let r_idx = d.layout.r();
        let scatter = |t: usize, loc: &[f64; LOCAL], rr: f64, res: &mut [f64]| {
            for (k, &g) in d.elem_dofs[t].iter().enumerate() {
                if g != NONE {
                    res[g as usize] += loc[k];
                }
            }
            res[r_idx] += rr;
        };
        match self.mode {
            AssemblyMode::Sequential => {
                for t in 0..ntri {
                    let (loc, rr) = self.element(t, x, None);
                    scatter(t, &loc, rr, &mut res);
                }
            }
            AssemblyMode::Parallel => {
                let parts: Vec<_> = (0..ntri).into_par_iter().map(|t| self.element(t, x, None)).collect();
                for (t, (loc, rr)) in parts.iter().enumerate() {
                    scatter(t, loc, *rr, &mut res);
                }
            }
        }
        kernel::boundary_residual(self, x, &mut res);
        Ok(res)
    }

    /// Analytic Jacobian of [`Self::residual_vec`] at `x`.
    pub fn jacobian_vec(&self, x: &[f64]) -> Result<SparseMatrix> {
        self.check_len(x)?;
        let d = self.disc;
        let ntri = d.mesh.n_triangles();
        let mut mat = SparseMatrix::zeros(d.pattern.clone());
        let scatter = |t: usize, loc: &kernel::LocalMatrix, vals: &mut [f64]| {
            let base = t * LOCAL * LOCAL;
            for (k, &p) in d.elem_pos[base..base + LOCAL * LOCAL].iter().enumerate() {
                if p != NONE {
                    vals[p as usize] += loc[k / LOCAL][k % LOCAL];
                }
            }
            let area = d.maps[t].area() / 3.0;
            for k in 0..3 {
                vals[d.r_pos[t][0][k] as usize] += area;
                vals[d.r_pos[t][1][k] as usize] += area;
            }
        };
        match self.mode {
            AssemblyMode::Sequential => {
                let mut loc = kernel::LocalMatrix::default();
                for t in 0..ntri {
                    loc.iter_mut().for_each(|r| r.fill(0.0));
                    self.element(t, x, Some(&mut loc));
                    scatter(t, &loc, &mut mat.values);
                }
            }
            AssemblyMode::Parallel => {
                let chunk = 256;
                let starts: Vec<usize> = (0..ntri).step_by(chunk).collect();
                for group in starts.chunks(rayon::current_num_threads().max(1) * 4) {
                    let mats: Vec<Vec<kernel::LocalMatrix>> = group
                        .par_iter()
                        .map(|&s| {
                            (s..(s + chunk).min(ntri))
                                .map(|t| {
                                    let mut loc = kernel::LocalMatrix::default();
                                    self.element(t, x, Some(&mut loc));
                                    loc
                                })
                                .collect()
                        })
                        .collect();
                    for (&s, block) in group.iter().zip(&mats) {
                        for (k, loc) in block.iter().enumerate() {
                            scatter(s + k, loc, &mut mat.values);
                        }
                    }
                }
            }
        }
        kernel::boundary_jacobian(self, x, &mut mat.values, &d.trace_pos);
        Ok(mat)
    }

    pub fn residual(&self, iterate: &SystemState) -> Result<Vec<f64>> {
        iterate.validate(&self.disc.layout)?;
        self.residual_vec(&iterate.to_vector())
    }

    pub fn jacobian(&self, iterate: &SystemState) -> Result<SparseMatrix> {
        iterate.validate(&self.disc.layout)?;
        self.jacobian_vec(&iterate.to_vector())
    }
}

impl crate::solver::NewtonProblem for StepContext<'_> {
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.residual_vec(x)
    }
    fn jacobian(&mut self, x: &[f64]) -> Result<SparseMatrix> {
        self.jacobian_vec(x)
    }
    fn increment_norm(&self, dx: &[f64]) -> f64 {
        self.disc.increment_norm(dx)
    }
}

#[cfg(test)]
mod tests;

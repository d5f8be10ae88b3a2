//! Finite element spaces: reference bases, quadrature, dof numbering and the
//! scalar mass and stiffness operators used for norms and projections.

pub mod basis;
pub mod dofmap;
pub mod quadrature;

use std::sync::Arc;

use crate::error::Result;
use crate::mesh::Mesh;
use crate::solver::sparse::{Pattern, SparseMatrix};

pub use basis::{eval_reference_basis, AffineMap, BasisEval, ElementKind};
pub use dofmap::{build_scalar_space, build_velocity_space, interpolate_nodal, DofMap, TraceEdge};
pub use quadrature::{line_rule, quadrature_rule, LineRule, QuadratureRule};

/// Reference basis values and gradients at every point of a rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub kind: ElementKind,
    pub rule: QuadratureRule,
    pub evals: Vec<BasisEval>,
}

impl Tabulation {
    pub fn new(kind: ElementKind, rule: &QuadratureRule) -> Self {
        Tabulation {
            kind,
            rule: rule.clone(),
            evals: rule.points.iter().map(|&b| eval_reference_basis(kind, b)).collect(),
        }
    }
}

/// Sparsity pattern coupling rows of `rows` with columns of `cols` through
/// shared cells.
pub fn coupling_pattern(rows: &DofMap, cols: &DofMap) -> Pattern {
    let mut lists = vec![Vec::new(); rows.n_dofs];
    for t in 0..rows.n_cells() {
        for r in rows.cell(t).iter().flatten() {
            lists[*r].extend(cols.cell(t).iter().flatten());
        }
    }
    Pattern::from_rows(cols.n_dofs, lists)
}

/// Mass matrix `(N_j, N_i)` and stiffness matrix `(grad N_j, grad N_i)` of a
/// scalar space, integrated exactly.
pub fn mass_and_stiffness(mesh: &Mesh, space: &DofMap) -> Result<(SparseMatrix, SparseMatrix)> {
    let degree = match space.kind {
        ElementKind::P1 => 2,
        ElementKind::P2 => 4,
    };
    let tab = Tabulation::new(space.kind, &quadrature_rule(degree)?);
    let pattern = Arc::new(coupling_pattern(space, space));
    let mut mass = SparseMatrix::zeros(pattern.clone());
    let mut stiff = SparseMatrix::zeros(pattern);
    let n = space.nodes_per_cell();
    for t in 0..mesh.n_triangles() {
        let map = AffineMap::new(mesh.triangle_coords(t));
        let dofs = space.cell(t);
        let jw = map.det.abs();
        for (ev, w) in tab.evals.iter().zip(&tab.rule.weights) {
            let g: Vec<[f64; 2]> = (0..n).map(|i| map.grad(ev.grads[i])).collect();
            for i in 0..n {
                let Some(di) = dofs[i] else { continue };
                for j in 0..n {
                    let Some(dj) = dofs[j] else { continue };
                    mass.add(di, dj, w * jw * ev.values[i] * ev.values[j]);
                    stiff.add(di, dj, w * jw * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
                }
            }
        }
    }
    Ok((mass, stiff))
}

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Wall};
use crate::spaces::basis::{eval_reference_basis, ElementKind};

/// Trace of a P1 space on one wall edge. `dofs` are ordered by increasing x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEdge {
    pub dofs: [usize; 2],
    pub length: f64,
    pub wall: Wall,
    pub triangle: usize,
}

/// Global numbering of a continuous Lagrange space on a channel mesh.
///
/// P1 scalar spaces are periodic in x. P2 velocity-component spaces are
/// periodic in x and carry no degrees of freedom on the walls, so that every
/// function in the space vanishes there.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: ElementKind,
    pub n_dofs: usize,
    cell_dofs: Vec<Option<usize>>,
    /// Representative coordinates of each dof (x in `[0, lx)`).
    pub dof_coords: Vec<[f64; 2]>,
    /// Dofs located on the walls. Empty for velocity spaces.
    pub boundary_dofs: Vec<usize>,
    /// Per wall edge, the trace dofs. Empty for velocity spaces.
    pub trace_edges: Vec<TraceEdge>,
}

fn check_structured(mesh: &Mesh) -> Result<()> {
    let c = mesh.config;
    if mesh.n_vertices() != (c.nx + 1) * (c.ny + 1) || mesh.n_triangles() != 2 * c.nx * c.ny {
        return Err(Error::Contract(
            "finite element spaces require a structured channel mesh".into(),
        ));
    }
    Ok(())
}

/// Continuous P1 space, periodic in x.
pub fn build_scalar_space(mesh: &Mesh) -> Result<DofMap> {
    check_structured(mesh)?;
    let c = mesh.config;
    let (nx, ny) = (c.nx, c.ny);
    let vertex_dof = |v: usize| {
        let (i, j) = (v % (nx + 1), v / (nx + 1));
        (i % nx) + j * nx
    };
    let n_dofs = nx * (ny + 1);
    let mut cell_dofs = Vec::with_capacity(3 * mesh.n_triangles());
    for tri in &mesh.triangles {
        for &v in tri {
            cell_dofs.push(Some(vertex_dof(v)));
        }
    }
    let mut dof_coords = vec![[0.0; 2]; n_dofs];
    for j in 0..=ny {
        for i in 0..nx {
            dof_coords[i + j * nx] = mesh.vertices[j * (nx + 1) + i];
        }
    }
    let boundary_dofs = (0..nx).chain(ny * nx..(ny + 1) * nx).collect();
    let trace_edges = mesh
        .boundary_edges
        .iter()
        .map(|e| {
            let (a, b) = mesh.boundary_edge_vertices(e);
            TraceEdge {
                dofs: [vertex_dof(a), vertex_dof(b)],
                length: mesh.vertices[b][0] - mesh.vertices[a][0],
                wall: e.wall,
                triangle: e.triangle,
            }
        })
        .collect();
    Ok(DofMap {
        kind: ElementKind::P1,
        n_dofs,
        cell_dofs,
        dof_coords,
        boundary_dofs,
        trace_edges,
    })
}

/// Continuous P2 space for one velocity component: periodic in x, zero on
/// the walls.
pub fn build_velocity_space(mesh: &Mesh) -> Result<DofMap> {
    check_structured(mesh)?;
    let c = mesh.config;
    let (nx, ny) = (c.nx, c.ny);
    // P2 nodes of the structured mesh are exactly the half-lattice points.
    let half = |v: usize| (2 * (v % (nx + 1)), 2 * (v / (nx + 1)));
    let node_dof = |ii: usize, jj: usize| {
        if jj == 0 || jj == 2 * ny {
            None
        } else {
            Some((ii % (2 * nx)) + (jj - 1) * 2 * nx)
        }
    };
    let n_dofs = 2 * nx * (2 * ny - 1);
    let mut cell_dofs = Vec::with_capacity(6 * mesh.n_triangles());
    for tri in &mesh.triangles {
        let h: Vec<(usize, usize)> = tri.iter().map(|&v| half(v)).collect();
        for k in 0..3 {
            cell_dofs.push(node_dof(h[k].0, h[k].1));
        }
        for e in 0..3 {
            let (a, b) = crate::mesh::edge_vertices(e);
            cell_dofs.push(node_dof((h[a].0 + h[b].0) / 2, (h[a].1 + h[b].1) / 2));
        }
    }
    let (hx, hy) = (0.5 * c.dx(), 0.5 * c.dy());
    let mut dof_coords = vec![[0.0; 2]; n_dofs];
    for jj in 1..2 * ny {
        for ii in 0..2 * nx {
            dof_coords[ii + (jj - 1) * 2 * nx] = [ii as f64 * hx, jj as f64 * hy];
        }
    }
    Ok(DofMap {
        kind: ElementKind::P2,
        n_dofs,
        cell_dofs,
        dof_coords,
        boundary_dofs: Vec::new(),
        trace_edges: Vec::new(),
    })
}

impl DofMap {
    pub fn nodes_per_cell(&self) -> usize {
        self.kind.n_nodes()
    }

    /// Global dofs of triangle `t` in local node order; `None` marks a node
    /// constrained to zero.
    pub fn cell(&self, t: usize) -> &[Option<usize>] {
        let n = self.nodes_per_cell();
        &self.cell_dofs[n * t..n * (t + 1)]
    }

    pub fn n_cells(&self) -> usize {
        self.cell_dofs.len() / self.nodes_per_cell()
    }

    /// Local coefficients of `coeffs` on triangle `t` (zero for constrained nodes).
    pub fn local_values(&self, t: usize, coeffs: &[f64]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (o, d) in out.iter_mut().zip(self.cell(t)) {
            if let Some(d) = d {
                *o = coeffs[*d];
            }
        }
        out
    }

    /// Evaluates the finite element function `coeffs` at `point`.
    pub fn eval(&self, mesh: &Mesh, coeffs: &[f64], point: [f64; 2]) -> Option<f64> {
        let (t, bary) = mesh.locate(point)?;
        let basis = eval_reference_basis(self.kind, bary);
        let local = self.local_values(t, coeffs);
        Some(
            (0..self.nodes_per_cell())
                .map(|i| basis.values[i] * local[i])
                .sum(),
        )
    }
}

/// Nodal interpolation: the coefficient vector reproducing `field` at every dof.
pub fn interpolate_nodal(field: impl Fn([f64; 2]) -> f64, space: &DofMap) -> Vec<f64> {
    space.dof_coords.iter().map(|&x| field(x)).collect()
}

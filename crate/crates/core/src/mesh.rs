//! Structured triangulations of the periodic channel `[0, lx] x [0, ly]`.
//!
//! Vertices are stored in row-major lattice order, `v(i, j) = j * (nx + 1) + i`.
//! Every lattice cell `(l, m)` is split along its rising diagonal into an
//! upper-left triangle `(l,m) (l+1,m+1) (l,m+1)` and a lower-right triangle
//! `(l,m) (l+1,m) (l+1,m+1)`, both counterclockwise. The column `x = lx`
//! keeps its geometric vertices, but they are paired with the column `x = 0`
//! and carry no independent degrees of freedom.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Lattice dimensions of a channel mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    /// Periodic channel length (x direction).
    pub lx: f64,
    /// Distance between the walls (y direction).
    pub ly: f64,
}

impl MeshConfig {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        MeshConfig { nx, ny, lx, ly }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 {
            return Err(Error::config("nx", "must be at least 1"));
        }
        if self.ny == 0 {
            return Err(Error::config("ny", "must be at least 1"));
        }
        if !(self.lx > 0.0 && self.lx.is_finite()) {
            return Err(Error::config("L1", format!("must be positive, got {}", self.lx)));
        }
        if !(self.ly > 0.0 && self.ly.is_finite()) {
            return Err(Error::config("L2", format!("must be positive, got {}", self.ly)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }
}

/// Which wall a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wall {
    Bottom,
    Top,
}

/// Edge `local_edge` of `triangle`, lying on a wall. Local edge `e` joins the
/// local vertices `(e + 1) % 3` and `(e + 2) % 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub triangle: usize,
    pub local_edge: usize,
    pub wall: Wall,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub config: MeshConfig,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// `(right, left)`: vertex on `x = lx` and its partner on `x = 0`.
    pub periodic_pairs: Vec<(usize, usize)>,
    /// Mesh parameter, the diagonal of one lattice cell.
    pub h: f64,
}

/// Local vertex indices of edge `e`.
pub fn edge_vertices(e: usize) -> (usize, usize) {
    ((e + 1) % 3, (e + 2) % 3)
}

/// Structured channel mesh with `2 * nx * ny` triangles.
pub fn build_channel_mesh(cfg: MeshConfig) -> Result<Mesh> {
    cfg.validate()?;
    let MeshConfig { nx, ny, .. } = cfg;
    let (dx, dy) = (cfg.dx(), cfg.dy());
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Pin the last column and row to the exact extents.
            let x = if i == nx { cfg.lx } else { i as f64 * dx };
            let y = if j == ny { cfg.ly } else { j as f64 * dy };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut boundary_edges = Vec::with_capacity(2 * nx);
    for m in 0..ny {
        for l in 0..nx {
            let upper = triangles.len();
            triangles.push([vid(l, m), vid(l + 1, m + 1), vid(l, m + 1)]);
            let lower = triangles.len();
            triangles.push([vid(l, m), vid(l + 1, m), vid(l + 1, m + 1)]);
            if m == 0 {
                boundary_edges.push(BoundaryEdge {
                    triangle: lower,
                    local_edge: 2,
                    wall: Wall::Bottom,
                });
            }
            if m + 1 == ny {
                boundary_edges.push(BoundaryEdge {
                    triangle: upper,
                    local_edge: 0,
                    wall: Wall::Top,
                });
            }
        }
    }

    let periodic_pairs = (0..=ny).map(|j| (vid(nx, j), vid(0, j))).collect();

    Ok(Mesh {
        config: cfg,
        vertices,
        triangles,
        boundary_edges,
        periodic_pairs,
        h: dx.hypot(dy),
    })
}

/// Level `k` of the nested unit-square family: `2^(k+3)` cells per side.
pub fn build_convergence_mesh(k: usize, side: f64) -> Result<Mesh> {
    if k > 20 {
        return Err(Error::config("k", format!("level {k} is out of range")));
    }
    let n = 1usize << (k + 3);
    build_channel_mesh(MeshConfig::new(n, n, side, side))
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn domain_area(&self) -> f64 {
        self.config.lx * self.config.ly
    }

    /// Total length of both walls.
    pub fn wall_length(&self) -> f64 {
        2.0 * self.config.lx
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice the signed area of triangle `t`.
    pub fn signed_area2(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }

    /// Vertex indices of a boundary edge, ordered by increasing x.
    pub fn boundary_edge_vertices(&self, edge: &BoundaryEdge) -> (usize, usize) {
        let tri = self.triangles[edge.triangle];
        let (a, b) = edge_vertices(edge.local_edge);
        let (va, vb) = (tri[a], tri[b]);
        if self.vertices[va][0] <= self.vertices[vb][0] {
            (va, vb)
        } else {
            (vb, va)
        }
    }

    /// Finds a triangle containing `p` and its barycentric coordinates with
    /// respect to that triangle's vertex order. Works for meshes produced by
    /// [`build_channel_mesh`]; the x coordinate is wrapped periodically.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let cfg = &self.config;
        let (dx, dy) = (cfg.dx(), cfg.dy());
        let x = p[0].rem_euclid(cfg.lx);
        let y = p[1];
        let tol = 1e-12 * cfg.ly.max(1.0);
        if y < -tol || y > cfg.ly + tol {
            return None;
        }
        let l = ((x / dx).floor() as isize).clamp(0, cfg.nx as isize - 1) as usize;
        let m = ((y / dy).floor() as isize).clamp(0, cfg.ny as isize - 1) as usize;
        let cell = m * cfg.nx + l;
        let xl = (x - l as f64 * dx) / dx;
        let yl = (y - m as f64 * dy) / dy;
        if yl >= xl {
            // Upper-left: (0,0) (1,1) (0,1) in cell-local coordinates.
            Some((2 * cell, [1.0 - yl, xl, yl - xl]))
        } else {
            // Lower-right: (0,0) (1,0) (1,1).
            Some((2 * cell + 1, [1.0 - xl, xl - yl, yl]))
        }
    }

    /// Plain-text dump: a header line `nx ny L1 L2`, then
    /// `vertices <count>` followed by `index x y` rows, then
    /// `triangles <count>` followed by `index a b c` rows.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(w, "{} {} {} {}", c.nx, c.ny, c.lx, c.ly)?;
        writeln!(w, "vertices {}", self.vertices.len())?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(w, "{} {} {}", i, v[0], v[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(w, "{} {} {} {}", i, t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Outcome of [`validate_admissibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Every triangle has positive (counterclockwise) area.
    pub positive_orientation: bool,
    /// Triangle areas sum to the domain area.
    pub area_partition: bool,
    /// Triangles meet only in common vertices or whole common edges,
    /// including across the periodic seam.
    pub conforming: bool,
    /// No triangle has more than one edge on the walls.
    pub single_wall_edge: bool,
    /// Every right-column vertex is paired with a left-column vertex at
    /// offset `(lx, 0)`.
    pub periodic_consistent: bool,
    pub boundary_edge_count: usize,
    pub h: f64,
    pub max_diameter: f64,
    /// Smallest interior angle, in degrees.
    pub min_angle_deg: f64,
    pub total_area: f64,
    /// `min_K r_K / h`, with `r_K` the inradius.
    pub uniformity: f64,
    pub failures: Vec<String>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1.0)
}

/// Checks the admissibility conditions of a triangulation of the channel.
pub fn validate_admissibility(mesh: &Mesh) -> AdmissibilityReport {
    let cfg = mesh.config;
    let scale = cfg.lx.max(cfg.ly);
    let mut failures = Vec::new();

    let mut positive = true;
    let mut total_area = 0.0;
    let mut max_diameter = 0.0f64;
    let mut min_angle = f64::INFINITY;
    let mut uniformity = f64::INFINITY;
    let mut inradii = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area2 = mesh.signed_area2(t);
        if !(area2 > 0.0) {
            positive = false;
        }
        total_area += 0.5 * area2;
        let p = mesh.triangle_coords(t);
        let len = |a: usize, b: usize| (p[a][0] - p[b][0]).hypot(p[a][1] - p[b][1]);
        let sides = [len(1, 2), len(2, 0), len(0, 1)];
        let diameter = sides.iter().cloned().fold(0.0, f64::max);
        max_diameter = max_diameter.max(diameter);
        let perimeter: f64 = sides.iter().sum();
        inradii.push(area2.abs() / perimeter);
        for i in 0..3 {
            let (a, b, c) = (sides[i], sides[(i + 1) % 3], sides[(i + 2) % 3]);
            let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
            min_angle = min_angle.min(cos.acos().to_degrees());
        }
    }
    for r in inradii {
        uniformity = uniformity.min(r / mesh.h);
    }
    if !positive {
        failures.push("triangle with non-positive orientation".to_string());
    }
    let area_partition = (total_area - mesh.domain_area()).abs() <= 1e-12 * mesh.domain_area();
    if !area_partition {
        failures.push(format!(
            "areas sum to {total_area}, domain area is {}",
            mesh.domain_area()
        ));
    }

    let mut periodic_consistent = true;
    for &(right, left) in &mesh.periodic_pairs {
        let (r, l) = (mesh.vertices[right], mesh.vertices[left]);
        if !(close(r[0] - l[0], cfg.lx, scale) && r[1] == l[1]) {
            periodic_consistent = false;
        }
    }
    let on_right = |v: usize| close(mesh.vertices[v][0], cfg.lx, scale);
    let on_left = |v: usize| close(mesh.vertices[v][0], 0.0, scale);
    let right_count = (0..mesh.n_vertices()).filter(|&v| on_right(v)).count();
    let left_count = (0..mesh.n_vertices()).filter(|&v| on_left(v)).count();
    if right_count != mesh.periodic_pairs.len() || left_count != right_count {
        periodic_consistent = false;
    }
    if !periodic_consistent {
        failures.push("periodic pairing inconsistent".to_string());
    }

    // Conformity: every edge away from the walls is shared by exactly two
    // triangles once the periodic seam is glued. Edges are keyed by their
    // midpoint with x taken modulo lx; a hanging node leaves an unmatched
    // edge in the interior.
    let quantum = 1e-9 * scale;
    let edge_key = |va: usize, vb: usize| {
        let (a, b) = (mesh.vertices[va], mesh.vertices[vb]);
        let mut xm = (0.5 * (a[0] + b[0])).rem_euclid(cfg.lx);
        if close(xm, cfg.lx, scale) {
            xm = 0.0;
        }
        let ym = 0.5 * (a[1] + b[1]);
        ((xm / quantum).round() as i64, (ym / quantum).round() as i64)
    };
    let mut edge_count: HashMap<(i64, i64), (usize, usize, usize)> = HashMap::new();
    for tri in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = edge_vertices(e);
            let entry = edge_count
                .entry(edge_key(tri[a], tri[b]))
                .or_insert((tri[a], tri[b], 0));
            entry.2 += 1;
        }
    }
    let on_wall = |v: usize| {
        let y = mesh.vertices[v][1];
        if close(y, 0.0, scale) {
            Some(Wall::Bottom)
        } else if close(y, cfg.ly, scale) {
            Some(Wall::Top)
        } else {
            None
        }
    };
    let mut conforming = true;
    let mut wall_edges = 0;
    for &(a, b, count) in edge_count.values() {
        let wall = match (on_wall(a), on_wall(b)) {
            (Some(wa), Some(wb)) if wa == wb => Some(wa),
            _ => None,
        };
        match (wall, count) {
            (Some(_), 1) => wall_edges += 1,
            (None, 2) => {}
            _ => conforming = false,
        }
    }
    if !conforming {
        failures.push("non-conforming edge (hanging node or overlap)".to_string());
    }

    let mut single_wall_edge = true;
    for tri in &mesh.triangles {
        let n = (0..3)
            .filter(|&e| {
                let (a, b) = edge_vertices(e);
                matches!((on_wall(tri[a]), on_wall(tri[b])), (Some(x), Some(y)) if x == y)
            })
            .count();
        if n > 1 {
            single_wall_edge = false;
        }
    }
    if !single_wall_edge {
        failures.push("triangle with more than one wall edge".to_string());
    }
    if mesh.boundary_edges.len() != wall_edges {
        failures.push(format!(
            "{} tagged wall edges but {} wall edges found",
            mesh.boundary_edges.len(),
            wall_edges
        ));
    }

    AdmissibilityReport {
        positive_orientation: positive,
        area_partition,
        conforming,
        single_wall_edge,
        periodic_consistent,
        boundary_edge_count: mesh.boundary_edges.len(),
        h: mesh.h,
        max_diameter,
        min_angle_deg: min_angle,
        total_area,
        uniformity,
        failures,
    }
}

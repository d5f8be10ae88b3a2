//! Legacy ASCII VTK (version 3.0) snapshots on the mesh vertices, including
//! the duplicated periodic column.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::spaces::DofMap;
use crate::timeloop::Snapshot;

const VTK_TRIANGLE: u8 = 5;

/// Value of `coeffs` at every mesh vertex; zero where the node is constrained.
fn vertex_values(disc: &Discretization, space: &DofMap, coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; disc.mesh.n_vertices()];
    for (t, tri) in disc.mesh.triangles.iter().enumerate() {
        for (i, &v) in tri.iter().enumerate() {
            if let Some(d) = space.cell(t)[i] {
                out[v] = coeffs[d];
            }
        }
    }
    out
}

/// Point data: `phi`, `mu`, `p` and the vector `u`. `mu` and `p` are left
/// out when the snapshot has no dual fields (step 0).
pub fn write_snapshot<W: Write>(mut w: W, disc: &Discretization, snap: &Snapshot) -> std::io::Result<()> {
    let mesh = &disc.mesh;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "chns step {} t {:?}", snap.step, snap.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{:?} {:?} 0", v[0], v[1])?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    let s = &snap.state;
    let mut scalars = vec![("phi", vertex_values(disc, &disc.q, &s.phi))];
    if snap.dual_defined {
        scalars.push(("mu", vertex_values(disc, &disc.q, &s.mu)));
        scalars.push(("p", vertex_values(disc, &disc.q, &s.p)));
    }
    for (name, vals) in scalars {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in vals {
            writeln!(w, "{v:?}")?;
        }
    }
    let ux = vertex_values(disc, &disc.v, &s.ux);
    let uy = vertex_values(disc, &disc.v, &s.uy);
    writeln!(w, "VECTORS u double")?;
    for (a, b) in ux.iter().zip(&uy) {
        writeln!(w, "{a:?} {b:?} 0")?;
    }
    Ok(())
}

pub fn snapshot_name(step: usize) -> String {
    format!("snapshot_{step:07}.vtk")
}

pub fn save_snapshot(dir: &Path, disc: &Discretization, snap: &Snapshot) -> Result<PathBuf> {
    let path = dir.join(snapshot_name(snap.step));
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_snapshot(&mut w, disc, snap).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::SystemState;
    use crate::mesh::{build_channel_mesh, MeshConfig};

    #[test]
    fn structure_and_counts() {
        let mesh = build_channel_mesh(MeshConfig::new(4, 2, 3.0, 1.0)).unwrap();
        let disc = Discretization::new(mesh).unwrap();
        let mut state = SystemState::zeros(&disc.layout);
        state.phi = disc.q.dof_coords.iter().map(|p| p[1]).collect();
        state.ux = disc.v.dof_coords.iter().map(|p| p[1] * (1.0 - p[1])).collect();
        let snap = Snapshot {
            step: 3,
            t: 0.03,
            state,
            dual_defined: true,
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &disc, &snap).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        // 5 x 3 vertices: the periodic column x = 3 is written too.
        assert!(lines.contains(&"POINTS 15 double"));
        assert!(lines.contains(&"CELLS 16 64"));
        assert!(lines.contains(&"CELL_TYPES 16"));
        assert!(lines.contains(&"POINT_DATA 15"));
        for name in ["SCALARS phi double 1", "SCALARS mu double 1", "SCALARS p double 1", "VECTORS u double"] {
            assert!(lines.contains(&name), "{name}");
        }
        // phi = y at the vertices, the periodic partner included.
        let start = lines.iter().position(|l| *l == "SCALARS phi double 1").unwrap() + 2;
        let phi: Vec<f64> = lines[start..start + 15].iter().map(|l| l.parse().unwrap()).collect();
        for (v, p) in disc.mesh.vertices.iter().zip(&phi) {
            assert!((v[1] - p).abs() < 1e-15);
        }

        let initial = Snapshot {
            dual_defined: false,
            ..snap
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &disc, &initial).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("SCALARS mu"));
    }
}

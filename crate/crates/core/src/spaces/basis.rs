//! Lagrange bases on the reference triangle.
//!
//! Barycentric coordinates `(l0, l1, l2)` correspond to the reference point
//! `(x, y) = (l1, l2)`. P2 nodes are the three vertices followed by the
//! midpoints of the edges opposite vertices 0, 1 and 2.

use crate::mesh::edge_vertices;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1,
    P2,
}

impl ElementKind {
    pub fn n_nodes(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
        }
    }
}

/// Gradients of the barycentric coordinates in reference coordinates.
pub const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Basis values and reference gradients at one point. Only the first
/// `kind.n_nodes()` entries are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    pub values: [f64; 6],
    pub grads: [[f64; 2]; 6],
}

pub fn eval_reference_basis(kind: ElementKind, bary: [f64; 3]) -> BasisEval {
    let mut values = [0.0; 6];
    let mut grads = [[0.0; 2]; 6];
    match kind {
        ElementKind::P1 => {
            values[..3].copy_from_slice(&bary);
            grads[..3].copy_from_slice(&BARY_GRAD);
        }
        ElementKind::P2 => {
            for i in 0..3 {
                let l = bary[i];
                values[i] = l * (2.0 * l - 1.0);
                let s = 4.0 * l - 1.0;
                grads[i] = [s * BARY_GRAD[i][0], s * BARY_GRAD[i][1]];
            }
            for e in 0..3 {
                let (a, b) = edge_vertices(e);
                values[3 + e] = 4.0 * bary[a] * bary[b];
                grads[3 + e] = [
                    4.0 * (bary[b] * BARY_GRAD[a][0] + bary[a] * BARY_GRAD[b][0]),
                    4.0 * (bary[b] * BARY_GRAD[a][1] + bary[a] * BARY_GRAD[b][1]),
                ];
            }
        }
    }
    BasisEval { values, grads }
}

/// Barycentric coordinates of the P2 nodes.
pub fn p2_nodes() -> [[f64; 3]; 6] {
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
    ]
}

/// Affine map from the reference triangle onto a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: [f64; 2],
    /// Columns are `p1 - p0` and `p2 - p0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// Inverse transpose of `jac`, mapping reference to physical gradients.
    pub inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let jac = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        AffineMap {
            origin: p[0],
            jac,
            det,
            inv_t,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * bary[1] + self.jac[0][1] * bary[2],
            self.origin[1] + self.jac[1][0] * bary[1] + self.jac[1][1] * bary[2],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bary(rng: &mut ChaCha8Rng) -> [f64; 3] {
        let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
        if a + b > 1.0 {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        [1.0 - a - b, a, b]
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let bary = random_bary(&mut rng);
            for kind in [ElementKind::P1, ElementKind::P2] {
                let ev = eval_reference_basis(kind, bary);
                let n = kind.n_nodes();
                let s: f64 = ev.values[..n].iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
                let gx: f64 = ev.grads[..n].iter().map(|g| g[0]).sum();
                let gy: f64 = ev.grads[..n].iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-14 && gy.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn centroid_values() {
        let t = 1.0 / 3.0;
        let p1 = eval_reference_basis(ElementKind::P1, [t, t, t]);
        assert_eq!(&p1.values[..3], &[t, t, t]);
        let p2 = eval_reference_basis(ElementKind::P2, [t, t, t]);
        for e in 3..6 {
            assert!((p2.values[e] - 4.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn p2_lagrange_property() {
        let nodes = p2_nodes();
        for (j, node) in nodes.iter().enumerate() {
            let ev = eval_reference_basis(ElementKind::P2, *node);
            for i in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ev.values[i] - expected).abs() < 1e-15, "N{i} at node {j}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eps = 1e-6;
        for _ in 0..20 {
            let b = random_bary(&mut rng);
            let ev = eval_reference_basis(ElementKind::P2, b);
            let (x, y) = (b[1], b[2]);
            let at = |x: f64, y: f64| eval_reference_basis(ElementKind::P2, [1.0 - x - y, x, y]).values;
            let (xp, xm) = (at(x + eps, y), at(x - eps, y));
            let (yp, ym) = (at(x, y + eps), at(x, y - eps));
            for i in 0..6 {
                assert!(((xp[i] - xm[i]) / (2.0 * eps) - ev.grads[i][0]).abs() < 1e-8);
                assert!(((yp[i] - ym[i]) / (2.0 * eps) - ev.grads[i][1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn affine_map_roundtrip() {
        let map = AffineMap::new([[1.0, 1.0], [3.0, 1.5], [1.5, 4.0]]);
        assert!(map.det > 0.0);
        let p = map.point([0.2, 0.3, 0.5]);
        assert!((p[0] - (0.2 * 1.0 + 0.3 * 3.0 + 0.5 * 1.5)).abs() < 1e-14);
        // Gradient of the physical linear function x is (1, 0).
        let g = map.grad([map.jac[0][0], map.jac[0][1]]);
        assert!((g[0] - 1.0).abs() < 1e-14 && g[1].abs() < 1e-14);
    }
}

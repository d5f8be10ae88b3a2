//! Constitutive functions: bulk and wall potentials, mobility, shear rate
//! and viscosity. Everything here is immutable after construction.

pub mod potential;
pub mod viscosity;

use crate::error::Result;

pub use potential::{fh_minima, BulkPotential, FloryHugginsParams, PotentialValues, WallPotential};
pub use viscosity::{carreau_yasuda, CarreauYasudaFit, ViscosityModel};

/// `M(phi) = phi^2 (1 - phi)^2 / 16`.
pub fn mobility(phi: f64) -> f64 {
    let q = phi * (1.0 - phi);
    q * q / 16.0
}

/// `sqrt(2 D:D)` with `D` the symmetric part of `grad_u` (`grad_u[i][j] = d u_i / d x_j`).
pub fn shear_rate(grad_u: [[f64; 2]; 2]) -> f64 {
    let d01 = 0.5 * (grad_u[0][1] + grad_u[1][0]);
    let dd = grad_u[0][0].powi(2) + grad_u[1][1].powi(2) + 2.0 * d01 * d01;
    (2.0 * dd).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub bulk: BulkPotential,
    pub wall: WallPotential,
    pub viscosity: ViscosityModel,
}

impl MaterialModel {
    pub fn new(params: FloryHugginsParams, viscosity: ViscosityModel) -> Result<Self> {
        let bulk = BulkPotential::new(params)?;
        let wall = WallPotential::from_bulk(&bulk);
        Ok(MaterialModel {
            bulk,
            wall,
            viscosity,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mobility_examples() {
        assert_eq!(mobility(0.0), 0.0);
        assert_eq!(mobility(1.0), 0.0);
        assert_eq!(mobility(0.5), 1.0 / 256.0);
    }

    #[test]
    fn shear_rate_examples() {
        assert!((shear_rate([[0.0, 1.0], [0.0, 0.0]]) - 1.0).abs() < 1e-15);
        assert_eq!(shear_rate([[0.0; 2]; 2]), 0.0);
        assert!((shear_rate([[2.0, 0.0], [0.0, -2.0]]) - 4.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mobility_symmetric_nonnegative(phi in -2.0f64..3.0) {
            prop_assert!(mobility(phi) >= 0.0);
            prop_assert!((mobility(phi) - mobility(1.0 - phi)).abs() < 1e-15 * (1.0 + mobility(phi)));
        }

        #[test]
        fn shear_rate_invariances(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0,
                                  d in -5.0f64..5.0, theta in 0.0f64..6.3) {
            let g = [[a, b], [c, d]];
            let gt = [[a, c], [b, d]];
            let s = shear_rate(g);
            prop_assert!(s >= 0.0);
            prop_assert!((s - shear_rate(gt)).abs() < 1e-12);
            let (cs, sn) = (theta.cos(), theta.sin());
            let q = [[cs, -sn], [sn, cs]];
            // Q G Q^T
            let mut rot = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            rot[i][j] += q[i][k] * g[k][l] * q[j][l];
                        }
                    }
                }
            }
            prop_assert!((s - shear_rate(rot)).abs() < 1e-12 * (1.0 + s));
        }
    }
}

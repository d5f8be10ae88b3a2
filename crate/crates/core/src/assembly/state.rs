use crate::error::{Error, Result};

/// Block offsets of the flat unknown vector `[mu | phi | u_x | u_y | p | r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    /// Scalar (P1) dofs.
    pub nq: usize,
    /// Dofs of one velocity component (P2).
    pub nv: usize,
}

impl Layout {
    pub fn mu(&self) -> usize {
        0
    }
    pub fn phi(&self) -> usize {
        self.nq
    }
    pub fn ux(&self) -> usize {
        2 * self.nq
    }
    pub fn uy(&self) -> usize {
        2 * self.nq + self.nv
    }
    pub fn p(&self) -> usize {
        2 * self.nq + 2 * self.nv
    }
    pub fn r(&self) -> usize {
        3 * self.nq + 2 * self.nv
    }
    pub fn len(&self) -> usize {
        self.r() + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Coefficients of all fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub p: Vec<f64>,
    pub r: f64,
}

impl SystemState {
    pub fn zeros(layout: &Layout) -> Self {
        SystemState {
            phi: vec![0.0; layout.nq],
            mu: vec![0.0; layout.nq],
            ux: vec![0.0; layout.nv],
            uy: vec![0.0; layout.nv],
            p: vec![0.0; layout.nq],
            r: 0.0,
        }
    }

    pub fn validate(&self, layout: &Layout) -> Result<()> {
        let lens = [
            ("phi", self.phi.len(), layout.nq),
            ("mu", self.mu.len(), layout.nq),
            ("ux", self.ux.len(), layout.nv),
            ("uy", self.uy.len(), layout.nv),
            ("p", self.p.len(), layout.nq),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::Contract(format!("field {name} has {got} coefficients, expected {want}")));
            }
        }
        let finite = [&self.phi, &self.mu, &self.ux, &self.uy, &self.p]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
            && self.r.is_finite();
        if !finite {
            return Err(Error::Contract("state contains non-finite coefficients".into()));
        }
        Ok(())
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(3 * self.phi.len() + 2 * self.ux.len() + 1);
        x.extend_from_slice(&self.mu);
        x.extend_from_slice(&self.phi);
        x.extend_from_slice(&self.ux);
        x.extend_from_slice(&self.uy);
        x.extend_from_slice(&self.p);
        x.push(self.r);
        x
    }

    pub fn from_vector(layout: &Layout, x: &[f64]) -> Result<Self> {
        if x.len() != layout.len() {
            return Err(Error::Contract(format!(
                "vector has {} entries, expected {}",
                x.len(),
                layout.len()
            )));
        }
        let (nq, nv) = (layout.nq, layout.nv);
        Ok(SystemState {
            mu: x[layout.mu()..layout.mu() + nq].to_vec(),
            phi: x[layout.phi()..layout.phi() + nq].to_vec(),
            ux: x[layout.ux()..layout.ux() + nv].to_vec(),
            uy: x[layout.uy()..layout.uy() + nv].to_vec(),
            p: x[layout.p()..layout.p() + nq].to_vec(),
            r: x[layout.r()],
        })
    }
}

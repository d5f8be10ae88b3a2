use std::path::PathBuf;

use crate::assembly::{AssemblyMode, StepParams};
use crate::error::{Error, Result};
use crate::materials::{FloryHugginsParams, MaterialModel, ViscosityModel};
use crate::mesh::MeshConfig;
use crate::solver::NewtonSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Periodic channel started from a noisy mixed state.
    Channel,
    /// Unit square at refinement level `k` started from a smooth perturbation.
    Convergence { level: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub mesh: MeshConfig,
    pub t_final: f64,
    pub dt: f64,
    pub gamma: f64,
    pub s: f64,
    pub force: [f64; 2],
    pub chi: f64,
    pub alpha: Option<f64>,
    pub n1: f64,
    pub n2: f64,
    pub noise_amplitude: f64,
    pub rng_seed: u64,
    pub output_every: usize,
    pub experiment: Experiment,
    pub newton: NewtonSettings,
    pub assembly: AssemblyMode,
    /// On Newton failure, retry the step with up to this many dt halvings.
    pub retry_halvings: u32,
    /// Viscosity parameter file; the bundled fits are used when unset.
    pub viscosity_file: Option<PathBuf>,
}

impl SimulationConfig {
    /// Channel defaults: 180 x 60 cells on a 3 x 1 periodic channel,
    /// `T = 1000`, `dt = 0.01`.
    pub fn channel() -> Self {
        SimulationConfig {
            mesh: MeshConfig::new(180, 60, 3.0, 1.0),
            t_final: 1000.0,
            dt: 0.01,
            gamma: 0.001,
            s: 0.1,
            force: [0.01, 0.0],
            chi: 3f64.ln() / 6.0,
            alpha: None,
            n1: 15.0,
            n2: 15.0,
            noise_amplitude: 0.001,
            rng_seed: 0,
            output_every: 100,
            experiment: Experiment::Channel,
            newton: NewtonSettings::default(),
            assembly: AssemblyMode::Sequential,
            retry_halvings: 0,
            viscosity_file: None,
        }
    }

    /// Convergence-study defaults at level `k`: `2^(k+3)` cells per side of
    /// the unit square, `dt_k = h_k / (40 sqrt 2) = 2^-(k+3) / 40`, `T = 2`.
    pub fn convergence(k: u32) -> Self {
        let n = 1usize << (k + 3);
        SimulationConfig {
            mesh: MeshConfig::new(n, n, 1.0, 1.0),
            t_final: 2.0,
            dt: convergence_dt(k),
            noise_amplitude: 0.0,
            output_every: 1,
            experiment: Experiment::Convergence { level: k },
            ..SimulationConfig::channel()
        }
    }

    /// Number of time steps; `T / dt` must be a positive integer.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "time step must be positive"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::config("T", "final time must be positive"));
        }
        let ratio = self.t_final / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(
                "dt",
                format!("T / dt = {ratio} is not a positive integer"),
            ));
        }
        Ok(n as usize)
    }

    /// Time of step `n`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.n_steps()?;
        self.step_params().validate()?;
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::config("noise_amplitude", "must be finite and nonnegative"));
        }
        if self.output_every == 0 {
            return Err(Error::config("output_every", "must be at least 1"));
        }
        self.newton.validate()?;
        if let Experiment::Convergence { level } = self.experiment {
            let n = 1usize << (level + 3);
            if self.mesh != MeshConfig::new(n, n, 1.0, 1.0) {
                return Err(Error::config(
                    "level",
                    format!("convergence level {level} requires a {n} x {n} unit-square mesh"),
                ));
            }
        }
        crate::materials::BulkPotential::new(self.flory_huggins()).map(|_| ())
    }

    pub fn step_params(&self) -> StepParams {
        StepParams {
            dt: self.dt,
            gamma: self.gamma,
            s: self.s,
            force: self.force,
        }
    }

    pub fn flory_huggins(&self) -> FloryHugginsParams {
        FloryHugginsParams {
            chi: self.chi,
            n1: self.n1,
            n2: self.n2,
            alpha: self.alpha,
        }
    }

    pub fn materials(&self) -> Result<MaterialModel> {
        let viscosity = match &self.viscosity_file {
            Some(path) => ViscosityModel::load(path)?,
            None => ViscosityModel::default(),
        };
        MaterialModel::new(self.flory_huggins(), viscosity)
    }
}

/// `h_k / (40 sqrt 2)` with `h_k = sqrt 2 * 2^-(k+3)`.
pub fn convergence_dt(k: u32) -> f64 {
    1.0 / (40.0 * (1u64 << (k + 3)) as f64)
}

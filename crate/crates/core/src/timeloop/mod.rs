//! Time marching, initial states and trajectory recording.
//!
//! Time semantics: `phi` and `u` are continuous and piecewise linear in time,
//! `mu`, `p` and `r` are piecewise constant on `(t_{n-1}, t_n]` and therefore
//! have no value at `t = 0`.

mod config;
pub mod restart;

pub use config::{convergence_dt, Experiment, SimulationConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{Diagnostics, Discretization, StepContext, StepParams, SystemState};
use crate::error::{Error, Result};
use crate::materials::MaterialModel;
use crate::mesh::{build_channel_mesh, build_convergence_mesh, Mesh};
use crate::solver::{newton_solve, LuSolver};
use crate::spaces::interpolate_nodal;

/// Builds the mesh selected by the experiment.
pub fn build_mesh(cfg: &SimulationConfig) -> Result<Mesh> {
    match cfg.experiment {
        Experiment::Channel => build_channel_mesh(cfg.mesh),
        Experiment::Convergence { level } => build_convergence_mesh(level as usize, 1.0),
    }
}

/// `phi = 0.5 + xi` at every scalar dof, `xi` uniform in
/// `[-noise_amplitude, noise_amplitude]`, drawn with ChaCha8 seeded by
/// `rng_seed` in dof order; `u = 0`; `mu`, `p`, `r` zero.
pub fn init_channel(cfg: &SimulationConfig, disc: &Discretization) -> Result<SystemState> {
    if cfg.experiment != Experiment::Channel {
        return Err(Error::Contract("init_channel needs a channel configuration".into()));
    }
    let mut state = SystemState::zeros(&disc.layout);
    let a = cfg.noise_amplitude;
    if a > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        for v in state.phi.iter_mut() {
            *v = 0.5 + rng.gen_range(-a..=a);
        }
    } else {
        state.phi.fill(0.5);
    }
    Ok(state)
}

/// Smooth initial datum of the convergence study.
pub fn convergence_phi0(x: [f64; 2]) -> f64 {
    use std::f64::consts::PI;
    0.5 + 0.001 * (6.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()
}

/// Nodal interpolant of [`convergence_phi0`], `u = 0`.
pub fn init_convergence(cfg: &SimulationConfig, disc: &Discretization) -> Result<SystemState> {
    if !matches!(cfg.experiment, Experiment::Convergence { .. }) {
        return Err(Error::Contract("init_convergence needs a convergence configuration".into()));
    }
    let mut state = SystemState::zeros(&disc.layout);
    state.phi = interpolate_nodal(convergence_phi0, &disc.q);
    Ok(state)
}

pub fn initial_state(cfg: &SimulationConfig, disc: &Discretization) -> Result<SystemState> {
    match cfg.experiment {
        Experiment::Channel => init_channel(cfg, disc),
        Experiment::Convergence { .. } => init_convergence(cfg, disc),
    }
}

/// Per-step record. `newton_iters` sums over substeps when a step was retried.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub diagnostics: Diagnostics,
    pub energy: f64,
    pub newton_iters: usize,
    pub newton_final_increment: f64,
    /// Number of dt halvings needed; 0 unless the retry switch is on.
    pub halvings: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub state: SystemState,
    /// False at `t = 0`, where `mu`, `p` and `r` are undefined.
    pub dual_defined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_mass: f64,
    pub initial_energy: f64,
    /// States at step 0 and every `output_every` steps.
    pub snapshots: Vec<Snapshot>,
    /// One record per completed step.
    pub records: Vec<StepRecord>,
    pub final_state: SystemState,
}

/// A run that stopped early; `trajectory` holds everything up to the failure.
#[derive(Debug)]
pub struct PartialRun {
    pub trajectory: Trajectory,
    pub error: Error,
}

impl std::fmt::Display for PartialRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run stopped after {} steps: {}",
            self.trajectory.records.len(),
            self.error
        )
    }
}

impl std::error::Error for PartialRun {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub struct Simulation {
    pub config: SimulationConfig,
    pub disc: Discretization,
    pub materials: MaterialModel,
    state: SystemState,
    step: usize,
    lu: LuSolver,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::new(build_mesh(&config)?)?;
        let state = initial_state(&config, &disc)?;
        Self::assemble(config, disc, state, 0)
    }

    /// Resumes from `state` at step `step`, for example after a restart.
    pub fn from_state(config: SimulationConfig, state: SystemState, step: usize) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::new(build_mesh(&config)?)?;
        Self::assemble(config, disc, state, step)
    }

    fn assemble(config: SimulationConfig, disc: Discretization, state: SystemState, step: usize) -> Result<Self> {
        state.validate(&disc.layout)?;
        if step > config.n_steps()? {
            return Err(Error::Contract(format!("step {step} lies beyond the final time")));
        }
        let materials = config.materials()?;
        Ok(Simulation {
            config,
            disc,
            materials,
            state,
            step,
            lu: LuSolver::new(),
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.config.time(self.step)
    }

    pub fn energy(&self) -> Result<f64> {
        self.disc
            .energy(&self.state, &self.materials, self.config.gamma, self.config.s)
    }

    pub fn is_finished(&self) -> Result<bool> {
        Ok(self.step >= self.config.n_steps()?)
    }

    /// One Newton solve from `prev` with step `dt`; returns the new state,
    /// iteration count and final increment.
    fn solve(&mut self, prev: &SystemState, dt: f64) -> Result<(SystemState, usize, f64)> {
        let params = StepParams {
            dt,
            ..self.config.step_params()
        };
        let mut ctx = StepContext::new(&self.disc, &self.materials, params, prev, self.config.assembly)?;
        let (x, report) = newton_solve(&mut ctx, &prev.to_vector(), &self.config.newton, &mut self.lu)?;
        let next = SystemState::from_vector(&self.disc.layout, &x)?;
        Ok((next, report.iterations, report.final_increment()))
    }

    /// Advances `prev` by `dt`, splitting into two half steps on failure
    /// while `halvings_left > 0`.
    fn advance(&mut self, prev: &SystemState, dt: f64, halvings_left: u32) -> Result<(SystemState, usize, f64, u32)> {
        match self.solve(prev, dt) {
            Ok((s, it, inc)) => Ok((s, it, inc, 0)),
            Err(Error::NewtonDivergence { .. } | Error::Singular { .. } | Error::Numerical(_)) if halvings_left > 0 => {
                self.lu.clear_retained();
                let (mid, it1, _, h1) = self.advance(prev, 0.5 * dt, halvings_left - 1)?;
                let (end, it2, inc, h2) = self.advance(&mid, 0.5 * dt, halvings_left - 1)?;
                Ok((end, it1 + it2, inc, 1 + h1.max(h2)))
            }
            Err(e) => Err(e),
        }
    }

    /// Performs one time step and returns its record.
    pub fn step_once(&mut self) -> Result<StepRecord> {
        if self.is_finished()? {
            return Err(Error::Contract("the run has already reached the final time".into()));
        }
        let prev = self.state.clone();
        let (next, newton_iters, newton_final_increment, halvings) =
            self.advance(&prev, self.config.dt, self.config.retry_halvings)?;
        self.state = next;
        self.step += 1;
        Ok(StepRecord {
            step: self.step,
            t: self.time(),
            diagnostics: self.disc.diagnostics(&self.state)?,
            energy: self.energy()?,
            newton_iters,
            newton_final_increment,
            halvings,
        })
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            t: self.time(),
            state: self.state.clone(),
            dual_defined: self.step > 0,
        }
    }

    /// Runs to the final time without an observer.
    pub fn run(&mut self) -> std::result::Result<Trajectory, Box<PartialRun>> {
        self.run_with(|_, _| Ok(()))
    }

    /// Runs to the final time. `observer` sees every step; an error from it
    /// stops the run like a solver failure.
    pub fn run_with<F>(&mut self, observer: F) -> std::result::Result<Trajectory, Box<PartialRun>>
    where
        F: FnMut(&StepRecord, &SystemState) -> Result<()>,
    {
        self.drive(observer, None)
    }

    /// Like [`Simulation::run_with`], but snapshots are handed to
    /// `on_snapshot` instead of being kept in the trajectory.
    pub fn run_streaming<F, G>(&mut self, observer: F, mut on_snapshot: G) -> std::result::Result<Trajectory, Box<PartialRun>>
    where
        F: FnMut(&StepRecord, &SystemState) -> Result<()>,
        G: FnMut(&Discretization, &Snapshot) -> Result<()>,
    {
        self.drive(observer, Some(&mut on_snapshot))
    }

    fn drive<F>(
        &mut self,
        mut observer: F,
        mut on_snapshot: Option<&mut dyn FnMut(&Discretization, &Snapshot) -> Result<()>>,
    ) -> std::result::Result<Trajectory, Box<PartialRun>>
    where
        F: FnMut(&StepRecord, &SystemState) -> Result<()>,
    {
        let mut traj = Trajectory {
            initial_mass: f64::NAN,
            initial_energy: f64::NAN,
            snapshots: Vec::new(),
            records: Vec::new(),
            final_state: self.state.clone(),
        };
        let result = (|| -> Result<()> {
            traj.initial_mass = self.disc.diagnostics(&self.state)?.mass;
            traj.initial_energy = self.energy()?;
            let mut take_snapshot = |sim: &Self, traj: &mut Trajectory| -> Result<()> {
                if sim.step % sim.config.output_every != 0 {
                    return Ok(());
                }
                match on_snapshot.as_mut() {
                    Some(f) => f(&sim.disc, &sim.snapshot()),
                    None => {
                        traj.snapshots.push(sim.snapshot());
                        Ok(())
                    }
                }
            };
            take_snapshot(self, &mut traj)?;
            while !self.is_finished()? {
                let rec = self.step_once()?;
                observer(&rec, &self.state)?;
                traj.records.push(rec);
                take_snapshot(self, &mut traj)?;
            }
            Ok(())
        })();
        traj.final_state = self.state.clone();
        match result {
            Ok(()) => Ok(traj),
            Err(error) => Err(Box::new(PartialRun { trajectory: traj, error })),
        }
    }
}

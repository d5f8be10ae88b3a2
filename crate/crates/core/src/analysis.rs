//! Self-convergence errors against a reference level and experimental
//! orders of convergence.
//!
//! Coarse fields are injected exactly into the reference mesh. Errors are
//! integrated exactly in time on the reference time grid: `phi` and `u` are
//! piecewise linear in time, `mu` and `p` piecewise constant on
//! `(t_{n-1}, t_n]`. Because every coarse time node is a reference node,
//! the L-infinity norms are maxima over reference nodes.

use std::fmt::Write as _;

use crate::assembly::{Discretization, SystemState};
use crate::error::{Error, Result};
use crate::solver::SparseMatrix;
use crate::spaces::{eval_reference_basis, DofMap};
use crate::timeloop::{Experiment, Simulation, SimulationConfig};

/// `log2(coarse / fine)`.
pub fn eoc(coarse: f64, fine: f64) -> Result<f64> {
    if !(coarse > 0.0 && fine > 0.0) || !coarse.is_finite() || !fine.is_finite() {
        return Err(Error::Domain(format!(
            "EOC needs positive finite errors, got {coarse} and {fine}"
        )));
    }
    Ok((coarse / fine).log2())
}

/// Column heads, in the order of [`LevelErrors::norms`].
pub const NORM_NAMES: [&str; 5] = [
    "phi_Linf_H1",
    "u_Linf_L2",
    "mu_L2_H1",
    "p_L2_L2",
    "u_L2_H1",
];

fn barycentric(tri: [[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = tri;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Exact re-representation of coarse finite element functions on a nested
/// fine mesh.
#[derive(Debug, Clone)]
pub struct InjectionOperator {
    q: SparseMatrix,
    v: SparseMatrix,
}

impl InjectionOperator {
    pub fn new(coarse: &Discretization, fine: &Discretization) -> Result<Self> {
        let (cm, fm) = (&coarse.mesh, &fine.mesh);
        let (cc, fc) = (&cm.config, &fm.config);
        if cc.lx != fc.lx || cc.ly != fc.ly {
            return Err(Error::Contract("meshes cover different domains".into()));
        }
        let tol = 1e-10;
        let mut parent = Vec::with_capacity(fm.n_triangles());
        for t in 0..fm.n_triangles() {
            let tri = fm.triangle_coords(t);
            let centroid = [
                (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
                (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
            ];
            let (ct, _) = cm
                .locate(centroid)
                .ok_or_else(|| Error::Contract(format!("fine triangle {t} lies outside the coarse mesh")))?;
            let ctri = cm.triangle_coords(ct);
            for v in tri {
                if barycentric(ctri, v).iter().any(|&l| l < -tol) {
                    return Err(Error::Contract(format!(
                        "fine triangle {t} is not contained in a coarse triangle; meshes are not nested"
                    )));
                }
            }
            parent.push(ct);
        }
        Ok(InjectionOperator {
            q: Self::matrix(&coarse.q, &fine.q, cm, fm, &parent),
            v: Self::matrix(&coarse.v, &fine.v, cm, fm, &parent),
        })
    }

    fn matrix(
        cs: &DofMap,
        fs: &DofMap,
        cm: &crate::mesh::Mesh,
        fm: &crate::mesh::Mesh,
        parent: &[usize],
    ) -> SparseMatrix {
        let nodes = crate::spaces::basis::p2_nodes();
        let mut done = vec![false; fs.n_dofs];
        let mut triplets = Vec::new();
        for (t, &ct) in parent.iter().enumerate() {
            let map = crate::spaces::AffineMap::new(fm.triangle_coords(t));
            let ctri = cm.triangle_coords(ct);
            for (i, dof) in fs.cell(t).iter().enumerate() {
                let Some(d) = *dof else { continue };
                if std::mem::replace(&mut done[d], true) {
                    continue;
                }
                let bary = barycentric(ctri, map.point(nodes[i]));
                let basis = eval_reference_basis(cs.kind, bary);
                for (j, cdof) in cs.cell(ct).iter().enumerate() {
                    if let Some(c) = cdof {
                        let w = basis.values[j];
                        if w != 0.0 {
                            triplets.push((d, *c, w));
                        }
                    }
                }
            }
        }
        SparseMatrix::from_triplets(fs.n_dofs, cs.n_dofs, &triplets)
    }

    pub fn scalar(&self, coarse: &[f64]) -> Vec<f64> {
        self.q.matvec(coarse)
    }

    pub fn velocity(&self, coarse: &[f64]) -> Vec<f64> {
        self.v.matvec(coarse)
    }

    pub fn state(&self, coarse: &SystemState) -> SystemState {
        SystemState {
            phi: self.scalar(&coarse.phi),
            mu: self.scalar(&coarse.mu),
            ux: self.velocity(&coarse.ux),
            uy: self.velocity(&coarse.uy),
            p: self.scalar(&coarse.p),
            r: coarse.r,
        }
    }
}

/// Inner products of the error fields on the reference mesh.
#[derive(Debug, Clone)]
pub struct Norms {
    mass_q: SparseMatrix,
    stiff_q: SparseMatrix,
    mass_v: SparseMatrix,
    stiff_v: SparseMatrix,
}

impl Norms {
    pub fn new(disc: &Discretization) -> Self {
        Norms {
            mass_q: disc.mass_q.clone(),
            stiff_q: disc.stiff_q.clone(),
            mass_v: disc.mass_v.clone(),
            stiff_v: disc.stiff_v.clone(),
        }
    }

    pub fn l2_q(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass_q.bilinear(a, b)
    }

    pub fn h1_q(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass_q.bilinear(a, b) + self.stiff_q.bilinear(a, b)
    }

    pub fn l2_u(&self, a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
        self.mass_v.bilinear(a.0, b.0) + self.mass_v.bilinear(a.1, b.1)
    }

    pub fn h1_u(&self, a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
        self.l2_u(a, b) + self.stiff_v.bilinear(a.0, b.0) + self.stiff_v.bilinear(a.1, b.1)
    }
}

/// Running space-time norms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpaceTimeAccumulator {
    linf_phi: f64,
    linf_u: f64,
    sq_mu: f64,
    sq_p: f64,
    sq_u_h1: f64,
}

impl SpaceTimeAccumulator {
    /// Squared spatial norm of a function sampled at a time node.
    pub fn node(&mut self, phi_h1_sq: f64, u_l2_sq: f64) {
        self.linf_phi = self.linf_phi.max(phi_h1_sq.max(0.0).sqrt());
        self.linf_u = self.linf_u.max(u_l2_sq.max(0.0).sqrt());
    }

    /// Contributions of one interval of length `dt`: squared norms of the
    /// piecewise-constant `mu` and `p` errors, and the Gram entries
    /// `(a, a)`, `(a, b)`, `(b, b)` of the `u` error at its two ends.
    pub fn interval(&mut self, dt: f64, mu_h1_sq: f64, p_l2_sq: f64, u_gram: [f64; 3]) {
        self.sq_mu += dt * mu_h1_sq;
        self.sq_p += dt * p_l2_sq;
        let [aa, ab, bb] = u_gram;
        self.sq_u_h1 += dt / 3.0 * (aa + ab + bb);
    }

    pub fn norms(&self) -> [f64; 5] {
        [
            self.linf_phi,
            self.linf_u,
            self.sq_mu.max(0.0).sqrt(),
            self.sq_p.max(0.0).sqrt(),
            self.sq_u_h1.max(0.0).sqrt(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub level: u32,
    /// Ordered as [`NORM_NAMES`].
    pub norms: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub reference_level: u32,
    pub t_final: f64,
    pub rows: Vec<LevelErrors>,
}

const TIME_NOTE: &str = "errors integrated exactly on the reference time grid; phi, u linear and mu, p constant per step";

impl ErrorReport {
    /// EOC of every row against the previous level; `None` for the first row
    /// or when the previous row is not the next coarser level.
    pub fn eoc_rows(&self) -> Result<Vec<Option<[f64; 5]>>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            if w[1].level != w[0].level + 1 {
                out.push(None);
                continue;
            }
            let mut e = [0.0; 5];
            for (i, v) in e.iter_mut().enumerate() {
                *v = eoc(w[0].norms[i], w[1].norms[i])?;
            }
            out.push(Some(e));
        }
        out.truncate(self.rows.len());
        Ok(out)
    }

    /// EOC between `level - 1` and `level`.
    pub fn eoc_at(&self, level: u32) -> Result<[f64; 5]> {
        let i = self
            .rows
            .iter()
            .position(|r| r.level == level)
            .ok_or_else(|| Error::Contract(format!("no errors for level {level}")))?;
        self.eoc_rows()?[i].ok_or_else(|| Error::Contract(format!("no EOC for level {level}")))
    }

    pub fn to_csv(&self) -> Result<String> {
        let eocs = self.eoc_rows()?;
        let mut s = String::new();
        let _ = writeln!(s, "# chns eoc v1");
        let _ = writeln!(s, "# reference_level = {}, T = {}", self.reference_level, self.t_final);
        let _ = writeln!(s, "# {TIME_NOTE}");
        let _ = write!(s, "level");
        for n in NORM_NAMES {
            let _ = write!(s, ",{n},{n}_eoc");
        }
        let _ = writeln!(s);
        for (row, e) in self.rows.iter().zip(&eocs) {
            let _ = write!(s, "{}", row.level);
            for i in 0..5 {
                let eoc = e.map(|e| format!("{:?}", e[i])).unwrap_or_default();
                let _ = write!(s, ",{:?},{eoc}", row.norms[i]);
            }
            let _ = writeln!(s);
        }
        Ok(s)
    }

    /// Aligned table with one line per level, errors in scientific notation
    /// and EOC to three decimals.
    pub fn to_text(&self) -> Result<String> {
        let eocs = self.eoc_rows()?;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "reference level {}, T = {}; {TIME_NOTE}",
            self.reference_level, self.t_final
        );
        let _ = write!(s, "{:>3}", "k");
        for n in NORM_NAMES {
            let _ = write!(s, " | {n:>11} {:>6}", "eoc");
        }
        let _ = writeln!(s);
        for (row, e) in self.rows.iter().zip(&eocs) {
            let _ = write!(s, "{:>3}", row.level);
            for i in 0..5 {
                let eoc = e.map(|e| format!("{:.3}", e[i])).unwrap_or_else(|| "-".into());
                let _ = write!(s, " | {:>11.3e} {eoc:>6}", row.norms[i]);
            }
            let _ = writeln!(s);
        }
        Ok(s)
    }
}

/// Levels to compare, the reference level and the shared settings. The mesh,
/// time step and experiment of `base` are replaced per level.
#[derive(Debug, Clone)]
pub struct StudySettings {
    pub levels: Vec<u32>,
    pub reference: u32,
    pub base: SimulationConfig,
}

impl StudySettings {
    pub fn new(levels: Vec<u32>, reference: u32, t_final: f64) -> Self {
        StudySettings {
            levels,
            reference,
            base: SimulationConfig {
                t_final,
                ..SimulationConfig::convergence(0)
            },
        }
    }

    pub fn level_config(&self, k: u32) -> SimulationConfig {
        let c = SimulationConfig::convergence(k);
        SimulationConfig {
            mesh: c.mesh,
            dt: c.dt,
            experiment: Experiment::Convergence { level: k },
            output_every: 1,
            ..self.base.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::config("levels", "at least one level is needed"));
        }
        if self.levels.iter().any(|&k| k >= self.reference) {
            return Err(Error::config("levels", "every level must be below the reference level"));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("levels", "levels must be strictly increasing"));
        }
        if self.reference > 8 {
            return Err(Error::config("reference", "reference level above 8 is not supported"));
        }
        self.level_config(self.reference).validate()
    }
}

struct CoarseRun {
    level: u32,
    ratio: usize,
    states: Vec<SystemState>,
    injection: InjectionOperator,
    acc: SpaceTimeAccumulator,
    /// Injected coarse states at the ends of the current coarse interval.
    window: Option<(usize, SystemState, SystemState)>,
    prev_u_err: (Vec<f64>, Vec<f64>),
}

impl CoarseRun {
    fn ends(&mut self, j: usize) -> (&SystemState, &SystemState) {
        if self.window.as_ref().map(|w| w.0) != Some(j) {
            let a = self.injection.state(&self.states[j - 1]);
            let b = self.injection.state(&self.states[j]);
            self.window = Some((j, a, b));
        }
        let w = self.window.as_ref().expect("window set");
        (&w.1, &w.2)
    }
}

fn lerp(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Runs every level and the reference, streaming the reference trajectory.
/// `log` receives one line per finished run.
pub fn run_study(settings: &StudySettings, mut log: impl FnMut(&str)) -> Result<ErrorReport> {
    settings.validate()?;
    let mut ref_cfg = settings.level_config(settings.reference);
    let n_ref = ref_cfg.n_steps()?;
    // The reference run is streamed; keep only its end points.
    ref_cfg.output_every = n_ref;
    let mut reference = Simulation::new(ref_cfg.clone())?;

    let mut runs = Vec::with_capacity(settings.levels.len());
    for &k in &settings.levels {
        let cfg = settings.level_config(k);
        let n = cfg.n_steps()?;
        let ratio = 1usize << (settings.reference - k);
        if n * ratio != n_ref {
            return Err(Error::Contract(format!("level {k} time grid does not nest into the reference grid")));
        }
        let mut sim = Simulation::new(cfg)?;
        let traj = sim.run().map_err(|p| p.error)?;
        let mut states: Vec<SystemState> = traj.snapshots.into_iter().map(|s| s.state).collect();
        if states.len() != n + 1 {
            states.push(traj.final_state);
        }
        log(&format!("level {k}: {n} steps done"));
        let injection = InjectionOperator::new(&sim.disc, &reference.disc)?;
        runs.push(CoarseRun {
            level: k,
            ratio,
            states,
            injection,
            acc: SpaceTimeAccumulator::default(),
            window: None,
            prev_u_err: (Vec::new(), Vec::new()),
        });
    }

    let dt = ref_cfg.dt;
    let norms = Norms::new(&reference.disc);
    let s0 = reference.state().clone();
    for run in runs.iter_mut() {
        let c0 = run.injection.state(&run.states[0]);
        let ephi = sub(&s0.phi, &c0.phi);
        let eu = (sub(&s0.ux, &c0.ux), sub(&s0.uy, &c0.uy));
        run.acc.node(norms.h1_q(&ephi, &ephi), norms.l2_u((&eu.0, &eu.1), (&eu.0, &eu.1)));
        run.prev_u_err = eu;
    }

    reference
        .run_with(|rec, s| {
            let i = rec.step;
            for run in runs.iter_mut() {
                let j = i.div_ceil(run.ratio);
                let theta = (i - (j - 1) * run.ratio) as f64 / run.ratio as f64;
                let (a, b) = run.ends(j);
                let ephi = sub(&s.phi, &lerp(&a.phi, &b.phi, theta));
                let eu = (
                    sub(&s.ux, &lerp(&a.ux, &b.ux, theta)),
                    sub(&s.uy, &lerp(&a.uy, &b.uy, theta)),
                );
                let emu = sub(&s.mu, &b.mu);
                let ep = sub(&s.p, &b.p);
                let ea = (&run.prev_u_err.0[..], &run.prev_u_err.1[..]);
                let eb = (&eu.0[..], &eu.1[..]);
                let gram = [norms.h1_u(ea, ea), norms.h1_u(ea, eb), norms.h1_u(eb, eb)];
                run.acc.interval(dt, norms.h1_q(&emu, &emu), norms.l2_q(&ep, &ep), gram);
                run.acc.node(norms.h1_q(&ephi, &ephi), norms.l2_u(eb, eb));
                run.prev_u_err = eu;
            }
            Ok(())
        })
        .map_err(|p| p.error)?;
    log(&format!("reference level {}: {n_ref} steps done", settings.reference));

    Ok(ErrorReport {
        reference_level: settings.reference,
        t_final: ref_cfg.t_final,
        rows: runs
            .iter()
            .map(|r| LevelErrors {
                level: r.level,
                norms: r.acc.norms(),
            })
            .collect(),
    })
}

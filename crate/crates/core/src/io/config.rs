//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. `experiment` selects
//! the defaults (`channel` or `convergence`, the latter with `level`); every
//! other key overrides one field. Unknown and repeated keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::assembly::AssemblyMode;
use crate::error::{Error, Result};
use crate::timeloop::{Experiment, SimulationConfig};

/// Every accepted key with its meaning, in file order.
pub const KEYS: [(&str, &str); 26] = [
    ("experiment", "channel | convergence"),
    ("level", "convergence level k (mesh 2^(k+3) per side, dt = 2^-(k+3) / 40)"),
    ("nx", "cells along x"),
    ("ny", "cells along y"),
    ("L1", "domain length along x, the periodic direction"),
    ("L2", "domain height, the wall distance"),
    ("T", "final time"),
    ("dt", "time step, T / dt must be an integer"),
    ("gamma", "interface parameter"),
    ("s", "surface diffusion on the walls"),
    ("F_x", "body force, x component"),
    ("F_y", "body force, y component"),
    ("chi", "Flory-Huggins interaction parameter"),
    ("alpha", "cutoff of the logarithmic potential, or `auto` for the lower well"),
    ("N1", "chain length of component 1"),
    ("N2", "chain length of component 2"),
    ("noise_amplitude", "amplitude of the uniform initial noise"),
    ("rng_seed", "seed of the initial noise"),
    ("output_every", "steps between snapshots"),
    ("newton_abs_tol", "absolute increment tolerance"),
    ("newton_rel_tol", "relative increment tolerance"),
    ("newton_max_iterations", "Newton iteration limit"),
    ("newton_reuse_jacobian", "chord iteration, true | false"),
    ("assembly", "sequential | parallel"),
    ("retry_halvings", "dt halvings tried after a Newton failure, 0 disables"),
    ("viscosity_file", "viscosity fit file, `bundled` for the built-in table"),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

/// Sets one field of `cfg`. `experiment` and `level` are not accepted here
/// because they select the defaults.
pub fn apply(cfg: &mut SimulationConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key {
        "nx" => cfg.mesh.nx = parse_num(key, v)?,
        "ny" => cfg.mesh.ny = parse_num(key, v)?,
        "L1" => cfg.mesh.lx = parse_num(key, v)?,
        "L2" => cfg.mesh.ly = parse_num(key, v)?,
        "T" => cfg.t_final = parse_num(key, v)?,
        "dt" => cfg.dt = parse_num(key, v)?,
        "gamma" => cfg.gamma = parse_num(key, v)?,
        "s" => cfg.s = parse_num(key, v)?,
        "F_x" => cfg.force[0] = parse_num(key, v)?,
        "F_y" => cfg.force[1] = parse_num(key, v)?,
        "chi" => cfg.chi = parse_num(key, v)?,
        "alpha" => cfg.alpha = if v == "auto" { None } else { Some(parse_num(key, v)?) },
        "N1" => cfg.n1 = parse_num(key, v)?,
        "N2" => cfg.n2 = parse_num(key, v)?,
        "noise_amplitude" => cfg.noise_amplitude = parse_num(key, v)?,
        "rng_seed" => cfg.rng_seed = parse_num(key, v)?,
        "output_every" => cfg.output_every = parse_num(key, v)?,
        "newton_abs_tol" => cfg.newton.abs_tol = parse_num(key, v)?,
        "newton_rel_tol" => cfg.newton.rel_tol = parse_num(key, v)?,
        "newton_max_iterations" => cfg.newton.max_iterations = parse_num(key, v)?,
        "newton_reuse_jacobian" => cfg.newton.reuse_jacobian = parse_num(key, v)?,
        "assembly" => cfg.assembly = v.parse::<AssemblyMode>().map_err(|e| Error::config(key, e.to_string()))?,
        "retry_halvings" => cfg.retry_halvings = parse_num(key, v)?,
        "viscosity_file" => cfg.viscosity_file = if v == "bundled" { None } else { Some(PathBuf::from(v)) },
        "experiment" | "level" => {
            return Err(Error::config(key, "selects the defaults and cannot be overridden"));
        }
        _ => return Err(Error::config(key, "unknown key")),
    }
    Ok(())
}

/// Defaults for an experiment name and optional level.
pub fn defaults(experiment: &str, level: Option<&str>) -> Result<SimulationConfig> {
    match (experiment, level) {
        ("channel", None) => Ok(SimulationConfig::channel()),
        ("channel", Some(_)) => Err(Error::config("level", "only valid for the convergence experiment")),
        ("convergence", Some(k)) => {
            let k: u32 = parse_num("level", k)?;
            if k > 12 {
                return Err(Error::config("level", format!("level {k} is out of range")));
            }
            Ok(SimulationConfig::convergence(k))
        }
        ("convergence", None) => Err(Error::config("level", "required for the convergence experiment")),
        (other, _) => Err(Error::config("experiment", format!("unknown experiment `{other}`"))),
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    let mut order = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
        let k = k.trim().to_string();
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(Error::config(k, "unknown key"));
        }
        if entries.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::config(k, "given more than once"));
        }
        order.push(k);
    }
    let experiment = entries.get("experiment").map(String::as_str).unwrap_or("channel");
    let mut cfg = defaults(experiment, entries.get("level").map(String::as_str))?;
    for k in order {
        if k != "experiment" && k != "level" {
            apply(&mut cfg, &k, &entries[&k])?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Key/value pairs of `cfg`, in [`KEYS`] order. Floats use the shortest
/// exact representation.
pub fn config_entries(cfg: &SimulationConfig) -> Vec<(&'static str, String)> {
    let mut out = Vec::with_capacity(KEYS.len());
    match cfg.experiment {
        Experiment::Channel => out.push(("experiment", "channel".to_string())),
        Experiment::Convergence { level } => {
            out.push(("experiment", "convergence".to_string()));
            out.push(("level", level.to_string()));
        }
    }
    let f = |x: f64| format!("{x:?}");
    out.extend([
        ("nx", cfg.mesh.nx.to_string()),
        ("ny", cfg.mesh.ny.to_string()),
        ("L1", f(cfg.mesh.lx)),
        ("L2", f(cfg.mesh.ly)),
        ("T", f(cfg.t_final)),
        ("dt", f(cfg.dt)),
        ("gamma", f(cfg.gamma)),
        ("s", f(cfg.s)),
        ("F_x", f(cfg.force[0])),
        ("F_y", f(cfg.force[1])),
        ("chi", f(cfg.chi)),
        ("alpha", cfg.alpha.map(f).unwrap_or_else(|| "auto".into())),
        ("N1", f(cfg.n1)),
        ("N2", f(cfg.n2)),
        ("noise_amplitude", f(cfg.noise_amplitude)),
        ("rng_seed", cfg.rng_seed.to_string()),
        ("output_every", cfg.output_every.to_string()),
        ("newton_abs_tol", f(cfg.newton.abs_tol)),
        ("newton_rel_tol", f(cfg.newton.rel_tol)),
        ("newton_max_iterations", cfg.newton.max_iterations.to_string()),
        ("newton_reuse_jacobian", cfg.newton.reuse_jacobian.to_string()),
        ("assembly", cfg.assembly.to_string()),
        ("retry_halvings", cfg.retry_halvings.to_string()),
        (
            "viscosity_file",
            cfg.viscosity_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "bundled".into()),
        ),
    ]);
    out
}

pub fn format_config(cfg: &SimulationConfig) -> String {
    let mut s = String::from("# chns configuration\n");
    for (k, v) in config_entries(cfg) {
        s.push_str(&format!("{k} = {v}\n"));
    }
    s
}

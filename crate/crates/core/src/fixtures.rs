//! Golden diagnostics for regression checks.
//!
//! A fixture is a plain-text table preceded by `# key = value` header lines:
//! the format version, the fixture name, a SHA-256 hash of the inputs that
//! produced it, the comparison tolerance and the generating command. Only
//! diagnostics are stored, never full fields. Fixtures are rewritten solely by
//! [`regenerate`], which the CLI exposes as `chns fixtures regenerate`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::assembly::{AssemblyMode, SystemState};
use crate::error::{Error, Result};
use crate::io::format_config;
use crate::materials::ViscosityModel;
use crate::mesh::MeshConfig;
use crate::timeloop::{Simulation, SimulationConfig, Trajectory};

pub const FIXTURE_VERSION: u32 = 1;
pub const REGENERATE_COMMAND: &str = "chns fixtures regenerate";

/// Largest admissible `|mass_n - mass_0|` in the seeded channel fixture.
pub const CHANNEL_MASS_DRIFT: f64 = 1e-9;

const RUN_COLUMNS: [&str; 8] = ["step", "t", "mass", "energy", "mean_div", "proj_div", "pressure_mean", "r"];
const TABLE_COLUMNS: [&str; 3] = ["gdot", "phi", "eta"];
const TABLE_SHEAR_RATES: [f64; 7] = [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    /// Uniform phase at the well minimum, no flow, no forcing.
    Stationary,
    /// Ten seeded steps of the forced channel on a coarse mesh.
    Channel10,
    /// The blended viscosity on a (shear rate, phase) grid.
    ViscosityTable,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 3] = [FixtureKind::Stationary, FixtureKind::Channel10, FixtureKind::ViscosityTable];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Stationary => "stationary",
            FixtureKind::Channel10 => "channel10",
            FixtureKind::ViscosityTable => "viscosity_table",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.txt", self.name())
    }

    /// Relative tolerance `|a - b| <= tol * max(1, |b|)` used by
    /// [`verify_fixtures`]. The stationary fixture must match exactly.
    pub fn tolerance(self) -> f64 {
        match self {
            FixtureKind::Stationary => 0.0,
            FixtureKind::Channel10 => 1e-11,
            FixtureKind::ViscosityTable => 1e-14,
        }
    }

    /// Simulation inputs of the run-based fixtures.
    pub fn config(self) -> Option<SimulationConfig> {
        let base = SimulationConfig {
            mesh: MeshConfig::new(12, 4, 3.0, 1.0),
            dt: 0.01,
            t_final: 0.1,
            output_every: 10,
            assembly: AssemblyMode::Sequential,
            ..SimulationConfig::channel()
        };
        match self {
            FixtureKind::Stationary => Some(SimulationConfig {
                force: [0.0, 0.0],
                t_final: 0.03,
                noise_amplitude: 0.0,
                ..base
            }),
            FixtureKind::Channel10 => Some(base),
            FixtureKind::ViscosityTable => None,
        }
    }
}

/// A parsed fixture file.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub input_hash: String,
    pub tolerance: f64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Fixture {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# chns fixture v{FIXTURE_VERSION}").unwrap();
        writeln!(s, "# name = {}", self.name).unwrap();
        writeln!(s, "# input_sha256 = {}", self.input_hash).unwrap();
        writeln!(s, "# tolerance = {:?}", self.tolerance).unwrap();
        writeln!(s, "# generated_by = {REGENERATE_COMMAND}").unwrap();
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        s
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let fail = |message: String| Error::Fixture {
            name: name.to_string(),
            message,
        };
        let mut lines = text.lines();
        let magic = format!("# chns fixture v{FIXTURE_VERSION}");
        if lines.next() != Some(magic.as_str()) {
            return Err(fail(format!("missing `{magic}` header")));
        }
        let mut header = std::collections::BTreeMap::new();
        let mut columns = None;
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once(" = ")
                    .ok_or_else(|| fail(format!("malformed header line `{line}`")))?;
                header.insert(k.to_string(), v.to_string());
            } else {
                columns = Some(line.split(',').map(str::to_string).collect::<Vec<_>>());
                break;
            }
        }
        let columns = columns.ok_or_else(|| fail("missing column row".into()))?;
        let mut get = |k: &str| header.remove(k).ok_or_else(|| fail(format!("missing header `{k}`")));
        let file_name = get("name")?;
        let input_hash = get("input_sha256")?;
        let tolerance = get("tolerance")?
            .parse()
            .map_err(|e| fail(format!("bad tolerance: {e}")))?;
        let rows = lines
            .map(|l| {
                let row = l
                    .split(',')
                    .map(|c| c.parse::<f64>().map_err(|e| fail(format!("bad value `{c}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != columns.len() {
                    return Err(fail(format!("row `{l}` has {} cells, expected {}", row.len(), columns.len())));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Fixture {
            name: file_name,
            input_hash,
            tolerance,
            columns,
            rows,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The fixture directory shipped with the crate.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0, 0.0, traj.initial_mass, traj.initial_energy, 0.0, 0.0, 0.0, 0.0]];
    rows.extend(traj.records.iter().map(|r| {
        let d = &r.diagnostics;
        vec![r.step as f64, r.t, d.mass, r.energy, d.mean_div, d.proj_div, d.pressure_mean, d.r]
    }));
    rows
}

fn run_fixture(kind: FixtureKind, cfg: SimulationConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(cfg.clone())?;
    if kind == FixtureKind::Stationary {
        let mut s = SystemState::zeros(&sim.disc.layout);
        s.phi.fill(sim.materials.bulk.minima.0);
        sim = Simulation::from_state(cfg, s, 0)?;
    }
    sim.run().map_err(|partial| partial.error)
}

/// Viscosity on the fixed grid, one row per (shear rate, phase) pair.
pub fn viscosity_table(model: &ViscosityModel) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for &g in &TABLE_SHEAR_RATES {
        for i in -2..=12 {
            let phi = f64::from(i) / 10.0;
            rows.push(vec![g, phi, model.viscosity(g, phi)?]);
        }
    }
    Ok(rows)
}

/// Computes a fixture from scratch.
pub fn generate(kind: FixtureKind) -> Result<Fixture> {
    let (input_hash, columns, rows) = match kind.config() {
        Some(cfg) => {
            let text = format!("{}initial = {}\n", format_config(&cfg), kind.name());
            let traj = run_fixture(kind, cfg)?;
            (sha256_hex(text.as_bytes()), &RUN_COLUMNS[..], run_rows(&traj))
        }
        None => {
            let model = ViscosityModel::default();
            (sha256_hex(model.to_text().as_bytes()), &TABLE_COLUMNS[..], viscosity_table(&model)?)
        }
    };
    Ok(Fixture {
        name: kind.name().to_string(),
        input_hash,
        tolerance: kind.tolerance(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

/// Rewrites every fixture in `dir`, logging each file through `log`.
pub fn regenerate(dir: &Path, mut log: impl FnMut(&str)) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for kind in FixtureKind::ALL {
        let fixture = generate(kind)?;
        let path = dir.join(kind.file_name());
        crate::io::write_atomic(&path, fixture.render().as_bytes())?;
        log(&format!("regenerated {} ({} rows)", path.display(), fixture.rows.len()));
        written.push(path);
    }
    Ok(written)
}

/// Outcome of one fixture comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCheck {
    pub name: String,
    /// Largest scaled deviation `|a - b| / max(1, |b|)`.
    pub max_deviation: f64,
}

fn compare(kind: FixtureKind, stored: &Fixture, fresh: &Fixture) -> Result<FixtureCheck> {
    let fail = |message: String| Error::Fixture {
        name: kind.name().to_string(),
        message,
    };
    if stored.name != kind.name() {
        return Err(fail(format!("file is named `{}`", stored.name)));
    }
    if stored.input_hash != fresh.input_hash {
        return Err(fail("inputs changed since the fixture was generated".into()));
    }
    if stored.columns != fresh.columns || stored.rows.len() != fresh.rows.len() {
        return Err(fail(format!(
            "shape mismatch: {} rows of {:?}, expected {} rows of {:?}",
            stored.rows.len(),
            stored.columns,
            fresh.rows.len(),
            fresh.columns
        )));
    }
    let mut max_deviation = 0.0f64;
    for (i, (a_row, b_row)) in fresh.rows.iter().zip(&stored.rows).enumerate() {
        for (j, (a, b)) in a_row.iter().zip(b_row).enumerate() {
            let dev = (a - b).abs() / b.abs().max(1.0);
            if !(dev <= stored.tolerance) {
                return Err(fail(format!(
                    "row {i} column `{}`: computed {a:?}, stored {b:?}",
                    stored.columns[j]
                )));
            }
            max_deviation = max_deviation.max(dev);
        }
    }
    Ok(FixtureCheck {
        name: kind.name().to_string(),
        max_deviation,
    })
}

/// Fixture-specific physical checks on the stored values.
fn check_content(kind: FixtureKind, stored: &Fixture) -> Result<()> {
    let fail = |message: String| Error::Fixture {
        name: kind.name().to_string(),
        message,
    };
    match kind {
        FixtureKind::Stationary => {
            let energy = stored.column("energy").ok_or_else(|| fail("no energy column".into()))?;
            if energy.iter().any(|e| (e - energy[0]).abs() > 1e-12) {
                return Err(fail("energy is not constant".into()));
            }
        }
        FixtureKind::Channel10 => {
            let mass = stored.column("mass").ok_or_else(|| fail("no mass column".into()))?;
            let drift = mass.iter().fold(0.0f64, |m, v| m.max((v - mass[0]).abs()));
            if !(drift <= CHANNEL_MASS_DRIFT) || mass.len() != 11 {
                return Err(fail(format!("mass drift {drift:e} over {} rows", mass.len())));
            }
        }
        FixtureKind::ViscosityTable => {
            let row = stored
                .rows
                .iter()
                .find(|r| r[0] == 0.0 && r[1] == 0.5)
                .ok_or_else(|| fail("no row at gdot = 0, phi = 0.5".into()))?;
            // Breakpoint phi = 0.5 is blend index 3, the fourth listed fit.
            let expected = ViscosityModel::default().fits[3].eta0 / 3375.0;
            if (row[2] - expected).abs() > 1e-15 {
                return Err(fail(format!("eta(0, 0.5) = {:?}, expected {expected:?}", row[2])));
            }
        }
    }
    Ok(())
}

/// Regenerates every fixture in memory and compares it with the stored file.
pub fn verify_fixtures(dir: &Path) -> Result<Vec<FixtureCheck>> {
    FixtureKind::ALL
        .iter()
        .map(|&kind| {
            let path = dir.join(kind.file_name());
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let stored = Fixture::parse(kind.name(), &text)?;
            check_content(kind, &stored)?;
            compare(kind, &stored, &generate(kind)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let f = Fixture {
            name: "x".into(),
            input_hash: sha256_hex(b"abc"),
            tolerance: 1e-12,
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec![0.1, -3.0], vec![1e-300, 2.5]],
        };
        assert_eq!(
            f.input_hash,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(Fixture::parse("x", &f.render()).unwrap(), f);
        assert!(Fixture::parse("x", "a,b\n1,2\n").is_err());
        let truncated = f.render().replace("-3.0", "");
        assert!(Fixture::parse("x", &truncated).is_err());
    }

    #[test]
    fn generation_is_bitwise_deterministic() {
        let a = generate(FixtureKind::Channel10).unwrap();
        let b = generate(FixtureKind::Channel10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 11);
    }

    #[test]
    fn perturbed_fixture_is_named_in_the_error() {
        let fresh = generate(FixtureKind::Stationary).unwrap();
        let mut stored = fresh.clone();
        stored.rows[2][3] += 1e-9;
        match compare(FixtureKind::Stationary, &stored, &fresh) {
            Err(Error::Fixture { name, message }) => {
                assert_eq!(name, "stationary");
                assert!(message.contains("energy"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let mut rehashed = fresh.clone();
        rehashed.input_hash = sha256_hex(b"other");
        assert!(compare(FixtureKind::Stationary, &rehashed, &fresh).is_err());
    }

    #[test]
    fn shipped_fixtures_verify() {
        let checks = verify_fixtures(&fixture_dir()).unwrap();
        assert_eq!(checks.len(), 3);
        assert_eq!(checks[0].max_deviation, 0.0);
    }
}

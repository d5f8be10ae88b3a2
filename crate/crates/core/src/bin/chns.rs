//! Command-line driver: channel runs, the convergence study, viscosity
//! tables, property suites and fixture maintenance.
//!
//! Exit codes: 0 success, 2 configuration error, 3 Newton failure (partial
//! outputs are written), 4 I/O error, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chns::analysis::{run_study, StudySettings};
use chns::error::Error;
use chns::fixtures;
use chns::io::{self, config, vtk, RunManifest};
use chns::materials::ViscosityModel;
use chns::timeloop::{Experiment, Simulation, SimulationConfig};
use chns::validation;

#[derive(Parser)]
#[command(name = "chns", version, about = "Cahn-Hilliard-Navier-Stokes channel solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, for example `--set dt=0.005`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Viscosity fit file replacing the bundled table.
    #[arg(long)]
    viscosity_file: Option<PathBuf>,
    /// Output directory; the CHNS_OUTPUT_DIR environment variable wins.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Forced channel flow with seeded initial noise.
    Channel(ConfigArgs),
    /// A single convergence level with `--k`, otherwise the self-convergence
    /// study with orders of convergence.
    Convergence {
        #[command(flatten)]
        args: ConfigArgs,
        /// Run only this level.
        #[arg(long)]
        k: Option<u32>,
        /// Comma-separated levels compared with the reference.
        #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 2])]
        levels: Vec<u32>,
        /// Reference level.
        #[arg(long, default_value_t = 3)]
        reference: u32,
        /// Final time of the study.
        #[arg(long, default_value_t = 0.5)]
        t_final: f64,
    },
    /// Tabulate the blended viscosity on a shear rate and phase grid.
    ViscosityTable {
        #[arg(long)]
        viscosity_file: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the mesh, space and material property suites.
    Validate,
    /// Golden fixture maintenance.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
    /// List every configuration key with its meaning.
    Keys,
}

#[derive(Subcommand)]
enum FixtureAction {
    /// Recompute and overwrite every fixture.
    Regenerate {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Recompute every fixture and compare with the stored files.
    Verify {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::NewtonDivergence { .. } => 3,
        Error::Io { .. } => 4,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn resolve_config(name: &str, level: Option<u32>, args: &ConfigArgs) -> CliResult<SimulationConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = config::load_config(path)?;
            let matches = match (name, cfg.experiment) {
                ("channel", Experiment::Channel) => true,
                ("convergence", Experiment::Convergence { level: l }) => level.is_none_or(|k| k == l),
                _ => false,
            };
            if !matches {
                return Err(Error::config("experiment", format!("{} does not describe this `{name}` run", path.display())).into());
            }
            cfg
        }
        None => {
            let level = (name == "convergence").then(|| level.unwrap_or(0).to_string());
            config::defaults(name, level.as_deref())?
        }
    };
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::config(item.clone(), "expected KEY=VALUE"))?;
        let k = k.trim();
        if !config::KEYS.iter().any(|(name, _)| *name == k) {
            return Err(Error::config(k, "unknown key").into());
        }
        if k == "experiment" || k == "level" {
            return Err(Error::config(k, "selected by the subcommand and --k").into());
        }
        config::apply(&mut cfg, k, v)?;
    }
    if let Some(path) = &args.viscosity_file {
        cfg.viscosity_file = Some(path.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_dir(fallback: &Path) -> CliResult<PathBuf> {
    let dir = io::output_dir(fallback);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Runs one simulation, streaming snapshots to disk. On a solver failure
/// the time series up to the failure is still written.
fn run_simulation(command: &str, cfg: SimulationConfig, dir: &Path, manifest: &mut RunManifest) -> CliResult<()> {
    manifest.files.push(io::write_file(dir, "config.txt", config::format_config(&cfg).as_bytes())?);
    let mut sim = Simulation::new(cfg)?;
    let n_steps = sim.config.n_steps()?;
    let mut snapshots = Vec::new();
    let result = sim.run_streaming(
        |rec, _| {
            if rec.step % 100 == 0 || rec.step == n_steps {
                eprintln!(
                    "{command}: step {}/{n_steps} t = {:.4} mass = {:.12e} energy = {:.12e} newton = {}",
                    rec.step, rec.t, rec.diagnostics.mass, rec.energy, rec.newton_iters
                );
            }
            Ok(())
        },
        |disc, snap| {
            snapshots.push(vtk::save_snapshot(dir, disc, snap)?);
            Ok(())
        },
    );
    manifest.files.extend(snapshots);
    match result {
        Ok(traj) => {
            manifest.files.push(io::save_timeseries(dir, &traj)?);
            Ok(())
        }
        Err(partial) => {
            manifest.files.push(io::save_timeseries(dir, &partial.trajectory)?);
            // A singular Jacobian or failed solve inside a step is a Newton failure too.
            let code = match partial.error {
                Error::Singular { .. } | Error::Numerical(_) => 3,
                ref e => exit_code(e),
            };
            Err(Failure {
                code,
                message: format!("{partial}"),
            })
        }
    }
}

/// Wraps a run with manifest bookkeeping; the manifest is written even
/// when the run fails.
fn with_manifest(
    command: &str,
    cfg: &SimulationConfig,
    dir: &Path,
    body: impl FnOnce(&mut RunManifest) -> CliResult<()>,
) -> CliResult<()> {
    let mut manifest = RunManifest::start(command, cfg);
    let result = body(&mut manifest);
    match &result {
        Ok(()) => manifest.finish(0, "ok"),
        Err(f) => manifest.finish(i32::from(f.code), f.message.clone()),
    }
    let path = manifest.save(dir)?;
    eprintln!("{command}: wrote {}", path.display());
    result
}

fn channel(args: ConfigArgs) -> CliResult<()> {
    let cfg = resolve_config("channel", None, &args)?;
    if args.print_config {
        print!("{}", config::format_config(&cfg));
        return Ok(());
    }
    let dir = prepare_dir(args.output.as_deref().unwrap_or(Path::new("output/channel")))?;
    with_manifest("channel", &cfg, &dir, |m| run_simulation("channel", cfg.clone(), &dir, m))
}

fn convergence(args: ConfigArgs, k: Option<u32>, levels: Vec<u32>, reference: u32, t_final: f64) -> CliResult<()> {
    let base = resolve_config("convergence", k, &args)?;
    if let Some(k) = k {
        if args.print_config {
            print!("{}", config::format_config(&base));
            return Ok(());
        }
        let dir = prepare_dir(&args.output.clone().unwrap_or_else(|| PathBuf::from(format!("output/convergence_k{k}"))))?;
        return with_manifest("convergence", &base, &dir, |m| run_simulation("convergence", base.clone(), &dir, m));
    }
    let mut settings = StudySettings::new(levels, reference, t_final);
    settings.base = SimulationConfig { t_final, ..base };
    settings.validate()?;
    if args.print_config {
        print!("{}", config::format_config(&settings.level_config(settings.reference)));
        return Ok(());
    }
    let dir = prepare_dir(args.output.as_deref().unwrap_or(Path::new("output/convergence")))?;
    let cfg = settings.level_config(settings.reference);
    with_manifest("convergence", &cfg, &dir, |m| {
        let report = run_study(&settings, |line| eprintln!("convergence: {line}"))?;
        print!("{}", report.to_text()?);
        m.files.extend(io::save_eoc(&dir, &report)?);
        Ok(())
    })
}

fn viscosity_table(file: Option<PathBuf>, output: Option<PathBuf>) -> CliResult<()> {
    let model = match file {
        Some(path) => ViscosityModel::load(&path)?,
        None => ViscosityModel::default(),
    };
    let mut text = String::from("# chns viscosity table v1\ngdot,phi,eta\n");
    let rates = std::iter::once(0.0).chain((0..=50).map(|i| 10f64.powf(-3.0 + f64::from(i) / 10.0)));
    for g in rates {
        for i in 0..=20 {
            let phi = f64::from(i) / 20.0;
            text.push_str(&format!("{g:?},{phi:?},{:?}\n", model.viscosity(g, phi)?));
        }
    }
    let dir = prepare_dir(output.as_deref().unwrap_or(Path::new("output")))?;
    let path = io::write_file(&dir, "viscosity_table.csv", text.as_bytes())?;
    eprintln!("viscosity-table: wrote {}", path.display());
    Ok(())
}

fn validate() -> CliResult<()> {
    let mut checks = validation::material_suite()?;
    checks.extend(validation::discretization_suite()?);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if validation::all_passed(&checks) {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "property checks failed".into(),
        })
    }
}

fn fixture_command(action: FixtureAction) -> CliResult<()> {
    match action {
        FixtureAction::Regenerate { dir } => {
            let dir = dir.unwrap_or_else(fixtures::fixture_dir);
            fixtures::regenerate(&dir, |line| eprintln!("fixtures: {line}"))?;
        }
        FixtureAction::Verify { dir } => {
            for check in fixtures::verify_fixtures(&dir.unwrap_or_else(fixtures::fixture_dir))? {
                println!("PASS {} (max deviation {:.3e})", check.name, check.max_deviation);
            }
        }
    }
    Ok(())
}

fn keys() {
    let channel = config::config_entries(&SimulationConfig::channel());
    for (key, doc) in config::KEYS {
        let default = channel
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or("-");
        println!("{key:<24} {doc} (channel default: {default})");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Channel(args) => channel(args),
        Command::Convergence {
            args,
            k,
            levels,
            reference,
            t_final,
        } => convergence(args, k, levels, reference, t_final),
        Command::ViscosityTable { viscosity_file, output } => viscosity_table(viscosity_file, output),
        Command::Validate => validate(),
        Command::Fixtures { action } => fixture_command(action),
        Command::Keys => {
            keys();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

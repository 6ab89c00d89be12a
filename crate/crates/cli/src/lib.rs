//! Command-line driver: layered configuration, worker pool, CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use revival_core::RevivalError;

use crate::config::{parse_override, ConfigLayers, RunConfig, DEFAULT_OUT};
use crate::output::{Manifest, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical invariant violated: {0}")]
    Numerical(RevivalError),
}

impl From<RevivalError> for CliError {
    fn from(e: RevivalError) -> Self {
        match e {
            RevivalError::InvalidBasis(_)
            | RevivalError::InvalidParameter { .. }
            | RevivalError::InvalidAngularMomentum(_)
            | RevivalError::TruncationLeakage { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Qubit observables over time (optionally with the oscillator reference).
    Dynamics,
    /// Cat fidelity over (N, |zeta|^2/N) and along time.
    FidelityScan,
    /// Spin Wigner functions of the big spin at the attractor time.
    Wigner,
    /// N/F over (N, |zeta|^2/N) and the fixed-ratio cross section.
    Metrology,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::FidelityScan => "fidelity-scan",
            Command::Wigner => "wigner",
            Command::Metrology => "metrology",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "revival", version, about = "Collapse, revival and spin-cat sweeps for a qubit coupled to N spins")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "REVIVAL_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Cross-check against dense diagonalization.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Also run the oscillator (Jaynes-Cummings) reference.
    #[arg(long, global = true)]
    pub jc: bool,
    /// Fock cutoff of the oscillator reference.
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    /// Override any config key, e.g. `--set model.n_spins=40`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,

    #[arg(long, global = true)]
    pub n_spins: Option<usize>,
    /// |zeta| of the initial state |N, zeta/sqrt(N)>.
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    #[arg(long, global = true)]
    pub zeta_sq_over_n: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub n_theta: Option<usize>,
    #[arg(long, global = true)]
    pub n_phi: Option<usize>,

    #[arg(long, global = true)]
    pub fig1: bool,
    #[arg(long, global = true)]
    pub fig2: bool,
    #[arg(long, global = true)]
    pub fig3: bool,
    #[arg(long, global = true)]
    pub fig4: bool,
    #[arg(long, global = true)]
    pub fig5: bool,
    #[arg(long, global = true)]
    pub fig6: bool,
}

/// What a subcommand should produce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub command: Command,
    pub modes: Vec<&'static str>,
}

impl Cli {
    fn figure(&self) -> Result<Option<u8>, CliError> {
        let set: Vec<u8> = [self.fig1, self.fig2, self.fig3, self.fig4, self.fig5, self.fig6]
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| i as u8 + 1)
            .collect();
        match set.as_slice() {
            [] => Ok(None),
            [f] => Ok(Some(*f)),
            _ => Err(CliError::Config("at most one figure preset may be given".into())),
        }
    }

    pub fn plan(&self) -> Result<Plan, CliError> {
        let fig = self.figure()?;
        let from_fig = fig.map(|f| match f {
            1 => Command::Dynamics,
            2 | 3 => Command::FidelityScan,
            4 => Command::Wigner,
            _ => Command::Metrology,
        });
        let command = match (self.command, from_fig) {
            (Some(c), Some(f)) if c != f => {
                return Err(CliError::Config(format!("--fig{} belongs to `{}`, not `{}`", fig.unwrap(), f.name(), c.name())))
            }
            (Some(c), _) | (None, Some(c)) => c,
            (None, None) => return Err(CliError::Config("no subcommand or figure preset given".into())),
        };
        let modes = match (command, fig) {
            (Command::Dynamics, _) => vec!["spin"],
            (Command::FidelityScan, Some(2)) => vec!["surface"],
            (Command::FidelityScan, Some(3)) => vec!["series"],
            (Command::FidelityScan, _) => vec!["surface", "series"],
            (Command::Wigner, _) => vec!["panels"],
            (Command::Metrology, Some(5)) => vec!["surface"],
            (Command::Metrology, Some(6)) => vec!["cross_section"],
            (Command::Metrology, _) => vec!["surface", "cross_section"],
        };
        Ok(Plan { command, modes })
    }

    /// Defaults, then the config file, then `--set`, then flags.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut layers = ConfigLayers::new(&RunConfig::default());
        if self.fig1 {
            layers.set("jc", "enabled", true);
        }
        if let Some(path) = &self.config {
            layers.file(path)?;
        }
        for o in &self.overrides {
            layers.layer(parse_override(o)?);
        }
        if let Some(n) = self.n_spins {
            layers.set("model", "n_spins", n as i64);
        }
        if let Some(z) = self.zeta {
            layers.set("model", "zeta", z);
        }
        if let Some(x) = self.zeta_sq_over_n {
            layers.set("model", "zeta_sq_over_n", x);
        }
        if let Some(l) = self.lambda {
            layers.set("model", "lambda", l);
        }
        if let Some(s) = self.samples {
            layers.set("time", "samples", s as i64);
        }
        if let Some(n) = self.n_theta {
            layers.set("sphere", "n_theta", n as i64);
        }
        if let Some(n) = self.n_phi {
            layers.set("sphere", "n_phi", n as i64);
        }
        if self.jc {
            layers.set("jc", "enabled", true);
        }
        if let Some(c) = self.cutoff {
            layers.set("jc", "cutoff", c as i64);
        }
        if self.oracle {
            layers.set("run", "oracle", true);
        }
        if let Some(w) = self.workers {
            layers.set("run", "workers", w as i64);
        }
        if let Some(out) = &self.out {
            layers.set("run", "out", out.display().to_string());
        }
        layers.build()
    }
}

/// Outcome of a completed run (possibly with failed sweep cells).
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.cells.failed > 0 {
            EXIT_PARTIAL
        } else {
            EXIT_OK
        }
    }
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let plan = cli.plan()?;
    let cfg = cli.resolve_config()?;
    execute(&plan, &cfg)
}

/// Runs a validated plan; on error every file written so far is removed.
pub fn execute(plan: &Plan, cfg: &RunConfig) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.run.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    let out_dir = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut out = OutputDir::create(&out_dir)?;
    let hash = cfg.hash(plan.command.name(), &plan.modes);

    let result = pool.install(|| commands::dispatch(plan, cfg, &hash, &mut out));
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            out.discard();
            return Err(e);
        }
    };
    let mut canonical = cfg.clone();
    canonical.run.out = None;
    canonical.run.workers = None;
    let manifest = Manifest {
        command: plan.command.name().into(),
        modes: plan.modes.iter().map(|m| m.to_string()).collect(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        config: serde_json::to_value(&canonical).map_err(|e| CliError::Io(e.to_string()))?,
        workers: pool.current_num_threads(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: out.files().to_vec(),
        cells: outcome.cells,
        oracle: outcome.oracle,
    };
    if let Err(e) = out.write_manifest(&manifest) {
        out.discard();
        return Err(e);
    }
    Ok(RunReport { out_dir, manifest })
}

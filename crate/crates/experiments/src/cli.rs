use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ehcr_core::{HarvestModel, ScenarioParams};

use crate::grid::{parse_f64_grid, parse_u64_list, parse_usize_list};
use crate::run::{run_experiment, spec_from_manifest};
use crate::spec::{ExperimentKind, ExperimentSpec, OutputFormat, SolverChoice};

#[derive(Debug, Parser)]
#[command(name = "ehcr", version, about = "Run resource-allocation experiments and write CSV/JSON results")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-user rate, EE, SE and objective over an eta grid.
    EtaSweep(RunArgs),
    /// Total EE over (K, N) sizes and seeds.
    KnScaling(RunArgs),
    /// Objective over (min-rate coefficient, eta).
    MinrateEtaSurface(RunArgs),
    /// Heuristic and exhaustive objectives with their gap.
    InstantVsOracle(RunArgs),
    /// Wall-clock per solver and size.
    Timing(RunArgs),
    /// Multi-slot energy simulation, one row per device per slot.
    Simulate(RunArgs),
    /// Write a generated scenario as JSON.
    Generate(RunArgs),
    /// Rerun the spec stored in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write somewhere other than the recorded output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HarvestChoice {
    Deterministic,
    Uniform,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Seeds: `7`, `1..20` or `1,4,9`.
    #[arg(long)]
    seed: Option<String>,
    /// Device counts, same syntax as seeds.
    #[arg(long)]
    k: Option<String>,
    /// Allocatable channel counts.
    #[arg(long)]
    n: Option<String>,
    /// Primary users.
    #[arg(long)]
    m: Option<usize>,
    /// `start:step:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    min_rate_coeff: Option<String>,
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long, value_enum)]
    harvest: Option<HarvestChoice>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of --out, else csv.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    /// Joint grid search in the oracle (K <= 3).
    #[arg(long)]
    strict_oracle: bool,
    /// Harvesting-ratio grid points for the oracle.
    #[arg(long)]
    grid_points: Option<usize>,
    /// JSON object of scenario-generation overrides, or @file.
    #[arg(long)]
    params: Option<String>,
}

impl RunArgs {
    pub fn into_spec(self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(kind);
        if let Some(text) = &self.params {
            let json = match text.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
                None => text.clone(),
            };
            spec.params = serde_json::from_str::<ScenarioParams>(&json).context("parsing --params")?;
            spec.eta = vec![spec.params.eta];
            spec.min_rate_coeff = vec![spec.params.min_rate_coeff];
            if kind == ExperimentKind::EtaSweep {
                spec.eta = ExperimentSpec::new(kind).eta;
            }
            if kind == ExperimentKind::MinrateEtaSurface {
                let d = ExperimentSpec::new(kind);
                spec.eta = d.eta;
                spec.min_rate_coeff = d.min_rate_coeff;
            }
        }
        if let Some(path) = &self.scenario_file {
            spec.load_scenario_file(path)?;
            let s = spec.scenario.as_ref().expect("just loaded");
            spec.k = vec![s.num_devices()];
            spec.n = vec![s.num_channels()];
            spec.m = s.num_pus();
        }
        if let Some(v) = &self.seed {
            spec.seeds = parse_u64_list(v).context("--seed")?;
        }
        if let Some(v) = &self.k {
            spec.k = parse_usize_list(v).context("--k")?;
        }
        if let Some(v) = &self.n {
            spec.n = parse_usize_list(v).context("--n")?;
        }
        if let Some(m) = self.m {
            spec.m = m;
        }
        if let Some(v) = &self.eta {
            spec.eta = parse_f64_grid(v).context("--eta")?;
        }
        if let Some(v) = &self.min_rate_coeff {
            spec.min_rate_coeff = parse_f64_grid(v).context("--min-rate-coeff")?;
        }
        if let Some(s) = self.solver {
            spec.solver = s;
        }
        if let Some(s) = self.slots {
            spec.slots = s;
        }
        if let Some(h) = self.harvest {
            spec.harvest_model = match h {
                HarvestChoice::Deterministic => HarvestModel::DeterministicMean,
                HarvestChoice::Uniform => HarvestModel::IidUniform { low: 0.5, high: 1.5 },
            };
        }
        if let Some(p) = self.grid_points {
            spec.oracle.mu_grid_points = p;
        }
        spec.oracle.strict = self.strict_oracle;
        spec.out = self.out;
        spec.format = self.format;
        Ok(spec)
    }
}

/// Parses arguments and runs; returns the path written.
pub fn run_cli<I, T>(args: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let spec = match cli.command {
        Command::EtaSweep(a) => a.into_spec(ExperimentKind::EtaSweep)?,
        Command::KnScaling(a) => a.into_spec(ExperimentKind::KnScaling)?,
        Command::MinrateEtaSurface(a) => a.into_spec(ExperimentKind::MinrateEtaSurface)?,
        Command::InstantVsOracle(a) => a.into_spec(ExperimentKind::InstantVsOracle)?,
        Command::Timing(a) => a.into_spec(ExperimentKind::Timing)?,
        Command::Simulate(a) => a.into_spec(ExperimentKind::Simulate)?,
        Command::Generate(a) => a.into_spec(ExperimentKind::Generate)?,
        Command::Replay { manifest, out } => {
            let mut spec = spec_from_manifest(&manifest)?;
            if out.is_some() {
                spec.out = out;
            }
            spec
        }
    };
    run_experiment(&spec)
}

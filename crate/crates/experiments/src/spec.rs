use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ehcr_core::{HarvestModel, OracleConfig, Scenario, ScenarioParams};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "EHCR_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EtaSweep,
    KnScaling,
    MinrateEtaSurface,
    InstantVsOracle,
    Timing,
    Simulate,
    /// Writes the scenario itself as JSON.
    Generate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::EtaSweep => "eta-sweep",
            Self::KnScaling => "kn-scaling",
            Self::MinrateEtaSurface => "minrate-eta-surface",
            Self::InstantVsOracle => "instant-vs-oracle",
            Self::Timing => "timing",
            Self::Simulate => "simulate",
            Self::Generate => "generate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }

    fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Instant,
    Oracle,
}

/// Everything needed to rerun an experiment. Serialized verbatim into the
/// manifest, including an embedded copy of any scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    pub k: Vec<usize>,
    pub n: Vec<usize>,
    pub m: usize,
    pub eta: Vec<f64>,
    pub min_rate_coeff: Vec<f64>,
    pub solver: SolverChoice,
    pub slots: usize,
    pub harvest_model: HarvestModel,
    pub oracle: OracleConfig,
    pub params: ScenarioParams,
    pub scenario_file: Option<PathBuf>,
    /// Loaded from `scenario_file`; replaces generation when present.
    pub scenario: Option<Scenario>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ExperimentSpec {
    /// Defaults for one experiment kind.
    pub fn new(kind: ExperimentKind) -> Self {
        let params = ScenarioParams::default();
        let mut spec = Self {
            kind,
            seeds: vec![7],
            k: vec![2],
            n: vec![4],
            m: 1,
            eta: vec![params.eta],
            min_rate_coeff: vec![params.min_rate_coeff],
            solver: SolverChoice::Instant,
            slots: 100,
            harvest_model: HarvestModel::IidUniform { low: 0.5, high: 1.5 },
            oracle: OracleConfig::default(),
            params,
            scenario_file: None,
            scenario: None,
            out: None,
            format: None,
        };
        match kind {
            ExperimentKind::EtaSweep => {
                spec.eta = vec![0.0, 1e7, 1e8, 1e9, 3e9, 1e10, 3e10, 1e11];
            }
            ExperimentKind::KnScaling => {
                spec.seeds = (1..=20).collect();
                spec.k = vec![2, 4, 6];
                spec.n = vec![8, 16];
            }
            ExperimentKind::MinrateEtaSurface => {
                spec.min_rate_coeff = (1..=10).map(|i| i as f64 / 10.0).collect();
                spec.eta = vec![0.0, 1e8, 1e9, 1e10];
            }
            ExperimentKind::InstantVsOracle => {
                spec.seeds = (1..=20).collect();
                spec.k = vec![4];
                spec.n = vec![8];
            }
            ExperimentKind::Timing => {
                spec.k = vec![2, 4, 8];
                spec.n = vec![8, 16];
            }
            ExperimentKind::Simulate | ExperimentKind::Generate => {}
        }
        spec
    }

    pub fn load_scenario_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.scenario = Some(Scenario::from_json(&text)?);
        self.scenario_file = Some(path.to_path_buf());
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let single = |name: &str, len: usize| -> Result<()> {
            if len != 1 {
                bail!("{} takes exactly one {name}", self.kind.name());
            }
            Ok(())
        };
        if self.seeds.is_empty() || self.k.is_empty() || self.n.is_empty() {
            bail!("seed, K and N grids must be non-empty");
        }
        if self.eta.is_empty() || self.min_rate_coeff.is_empty() {
            bail!("eta and min-rate grids must be non-empty");
        }
        if self.k.contains(&0) || self.n.contains(&0) {
            bail!("K and N must be positive");
        }
        if self.eta.iter().chain(&self.min_rate_coeff).any(|v| !(*v >= 0.0)) {
            bail!("eta and min-rate coefficients must be non-negative");
        }
        if self.slots == 0 {
            bail!("slots must be at least 1");
        }
        if self.oracle.strict && self.scenario_k().into_iter().any(|k| k > 3) {
            bail!("the strict oracle is limited to K <= 3");
        }
        match self.kind {
            ExperimentKind::EtaSweep => {
                single("K", self.k.len())?;
                single("N", self.n.len())?;
                single("min-rate coefficient", self.min_rate_coeff.len())?;
            }
            ExperimentKind::Simulate | ExperimentKind::Generate => {
                single("seed", self.seeds.len())?;
                single("K", self.k.len())?;
                single("N", self.n.len())?;
                single("min-rate coefficient", self.min_rate_coeff.len())?;
                single("eta", self.eta.len())?;
            }
            ExperimentKind::InstantVsOracle => {
                if self.scenario.is_none() {
                    for &k in &self.k {
                        for &n in &self.n {
                            self.check_oracle_size(k, n)?;
                        }
                    }
                }
            }
            _ => {}
        }
        if let Some(out) = &self.out {
            if self.format.is_some_and(|f| OutputFormat::from_path(out).is_some_and(|g| g != f)) {
                bail!("--format disagrees with the extension of {}", out.display());
            }
        }
        if self.kind == ExperimentKind::Generate && self.output_format() != OutputFormat::Json {
            bail!("generate writes JSON only");
        }
        Ok(())
    }

    fn scenario_k(&self) -> Vec<usize> {
        match &self.scenario {
            Some(s) => vec![s.num_devices()],
            None => self.k.clone(),
        }
    }

    pub fn oracle_fits(&self, k: usize, n: usize) -> bool {
        (k as f64).powi(n as i32) <= self.oracle.max_assignments as f64
    }

    fn check_oracle_size(&self, k: usize, n: usize) -> Result<()> {
        if !self.oracle_fits(k, n) {
            bail!("oracle request K={k}, N={n} exceeds the cap of {} assignments", self.oracle.max_assignments);
        }
        Ok(())
    }

    pub fn output_format(&self) -> OutputFormat {
        self.format
            .or_else(|| self.out.as_deref().and_then(OutputFormat::from_path))
            .unwrap_or(if self.kind == ExperimentKind::Generate { OutputFormat::Json } else { OutputFormat::Csv })
    }

    /// `--out`, or `<dir>/<kind>.<ext>` under the output directory variable
    /// (default `results`).
    pub fn output_path(&self) -> PathBuf {
        if let Some(out) = &self.out {
            return out.clone();
        }
        let dir = std::env::var_os(OUT_DIR_VAR).map_or_else(|| PathBuf::from("results"), PathBuf::from);
        dir.join(format!("{}.{}", self.kind.name(), self.output_format().extension()))
    }
}

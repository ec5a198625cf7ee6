//! Run configuration: JSON file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trotterlab::freefermion::shipped_tiling;
use trotterlab::hamiltonian::PppParams;
use trotterlab::lattice::Molecule;
use trotterlab::norms::DEFAULT_SAMPLES;
use trotterlab::pauli::SpinOrdering;
use trotterlab::resources::{DEFAULT_EPSILON, DEFAULT_GAP_TIME_STEP, DEFAULT_X};
use trotterlab::sector::SectorSpec;
use trotterlab::spectral::{FilterSpec, StateLabel};

/// A configuration problem tied to one field of [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[value(name = "so")]
    SplitOperator,
    Tile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    /// Sampled normalized Frobenius norms.
    Frobenius,
    /// Frobenius norms summed over the whole sector.
    FrobeniusExact,
    /// Abs-matrix spectral bound.
    Spectral,
    /// Dense spectral norm, small sectors only.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CostChoice {
    FixedTimestep,
    FixedError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawConfig {
    pub prefactor: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorConfig {
    /// Defaults to half filling.
    pub electrons: Option<usize>,
    /// Defaults to the lowest `|2 S_z|`.
    pub sz_twice: Option<i32>,
    pub ordering: SpinOrdering,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self { electrons: None, sz_twice: None, ordering: SpinOrdering::Interleaved }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeChoice,
    /// Tiling file; the shipped tiling of the molecule when absent.
    pub tiling: Option<PathBuf>,
    /// Trotter time steps, 1/eV, increasing.
    pub time_steps: Vec<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { kind: SchemeChoice::SplitOperator, tiling: None, time_steps: vec![0.01] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub norms: Vec<NormChoice>,
    pub samples: usize,
    pub states: Vec<String>,
    pub filter_width: f64,
    /// eV.
    pub epsilon: f64,
    /// Phase-estimation share of the error budget.
    pub x: f64,
    pub cost_mode: CostChoice,
    /// Error constant for the fixed-error mode, eV^3.
    pub g: Option<f64>,
    /// Size extrapolation `g = prefactor * N^exponent` when `g` is absent.
    pub power_law: Option<PowerLawConfig>,
    /// Time step of the fixed-timestep mode, 1/eV.
    pub gap_time_step: f64,
    /// Cost two runs, one per energy of a gap.
    pub gap: bool,
    pub hwp: bool,
    /// Time grid of the kinetic cubic fits, 1/eV.
    pub t_grid: Vec<f64>,
    /// Exhaustive kinetic average instead of sampling.
    pub exact_kinetic: bool,
    /// Dense correlation study of all sector eigenstates.
    pub correlation: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            norms: vec![NormChoice::Frobenius],
            samples: DEFAULT_SAMPLES,
            states: vec!["S0".into(), "T1".into()],
            filter_width: FilterSpec::DEFAULT_WIDTH,
            epsilon: DEFAULT_EPSILON,
            x: DEFAULT_X,
            cost_mode: CostChoice::FixedTimestep,
            g: None,
            power_law: None,
            gap_time_step: DEFAULT_GAP_TIME_STEP,
            gap: false,
            hwp: false,
            t_grid: trotterlab::freefermion::DEFAULT_T_GRID.to_vec(),
            exact_kinetic: false,
            correlation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub norms: u64,
    pub kinetic: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { norms: 2024, kinetic: 7 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// JSON report path; stdout when absent.
    pub json: Option<PathBuf>,
    /// Directory for CSV exports.
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub molecule: String,
    pub params: PppParams,
    pub sector: SectorConfig,
    pub scheme: SchemeConfig,
    pub analysis: AnalysisConfig,
    pub seeds: Seeds,
    pub output: OutputConfig,
    /// Allow runs that take hours or tens of GB.
    pub slow: bool,
    /// Worker threads; all cores when absent.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            molecule: "acene1".into(),
            params: PppParams::default(),
            sector: SectorConfig::default(),
            scheme: SchemeConfig::default(),
            analysis: AnalysisConfig::default(),
            seeds: Seeds::default(),
            output: OutputConfig::default(),
            slow: false,
            jobs: None,
        }
    }
}

/// Field named in a serde error message such as "unknown field `x`".
fn field_of(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            ConfigError::new(field_of(&msg).unwrap_or_else(|| "config".into()), msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn molecule(&self) -> Result<Molecule, ConfigError> {
        self.molecule
            .parse()
            .map_err(|e| ConfigError::new("molecule", format!("`{}`: {e}", self.molecule)))
    }

    pub fn sector_spec(&self, n_sites: usize) -> SectorSpec {
        let half = SectorSpec::half_filling(n_sites);
        let electrons = self.sector.electrons.unwrap_or(half.electrons);
        let sz = self.sector.sz_twice.unwrap_or((electrons % 2) as i32);
        SectorSpec { n_sites, electrons, sz_twice: sz, ordering: self.sector.ordering }
    }

    pub fn states(&self) -> Result<Vec<StateLabel>, ConfigError> {
        self.analysis
            .states
            .iter()
            .map(|s| s.parse().map_err(|e| ConfigError::new("analysis.states", format!("{e}"))))
            .collect()
    }

    /// Checks every field and that file references resolve.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mol = self.molecule()?;
        self.params.validate().map_err(|e| {
            let msg = e.to_string();
            ConfigError::new(format!("params.{}", field_of(&msg).unwrap_or_default()), msg)
        })?;
        let n = mol.family.site_count(mol.n);
        let spec = self.sector_spec(n);
        if spec.electrons > 2 * n {
            return Err(ConfigError::new("sector.electrons", format!("{} electrons on {n} sites", spec.electrons)));
        }
        spec.spin_counts().map_err(|e| ConfigError::new("sector.sz_twice", e.to_string()))?;
        if let Some(path) = &self.scheme.tiling {
            if !path.is_file() {
                return Err(ConfigError::new("scheme.tiling", format!("no such file: {}", path.display())));
            }
        } else if self.scheme.kind == SchemeChoice::Tile && shipped_tiling(&mol).is_none() {
            return Err(ConfigError::new("scheme.tiling", format!("no shipped tiling for {mol}; give a tiling file")));
        }
        let steps = &self.scheme.time_steps;
        if steps.is_empty() || steps.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ConfigError::new("scheme.time_steps", "need one or more positive time steps"));
        }
        if steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("scheme.time_steps", "time steps must increase"));
        }
        let a = &self.analysis;
        if a.samples < 2 {
            return Err(ConfigError::new("analysis.samples", "at least 2 samples are required"));
        }
        self.states()?;
        if a.states.is_empty() {
            return Err(ConfigError::new("analysis.states", "at least one state is required"));
        }
        if !(a.filter_width.is_finite() && a.filter_width > 0.0) {
            return Err(ConfigError::new("analysis.filter_width", "must be positive"));
        }
        if !(a.epsilon.is_finite() && a.epsilon > 0.0) {
            return Err(ConfigError::new("analysis.epsilon", "must be positive"));
        }
        if !(a.x > 0.0 && a.x < 1.0) {
            return Err(ConfigError::new("analysis.x", "must lie in (0, 1)"));
        }
        if !(a.gap_time_step.is_finite() && a.gap_time_step > 0.0) {
            return Err(ConfigError::new("analysis.gap_time_step", "must be positive"));
        }
        if let Some(g) = a.g {
            if !(g.is_finite() && g > 0.0) {
                return Err(ConfigError::new("analysis.g", "must be positive"));
            }
        }
        if let Some(p) = a.power_law {
            if !(p.prefactor > 0.0 && p.exponent.is_finite()) {
                return Err(ConfigError::new("analysis.power_law", "prefactor must be positive"));
            }
        }
        if a.cost_mode == CostChoice::FixedError && a.g.is_none() && a.power_law.is_none() {
            return Err(ConfigError::new("analysis.g", "fixed-error costing needs g or a power law"));
        }
        if a.t_grid.len() < 2 || a.t_grid.iter().any(|t| !(*t > 0.0)) {
            return Err(ConfigError::new("analysis.t_grid", "need two or more positive time steps"));
        }
        if a.norms.is_empty() {
            return Err(ConfigError::new("analysis.norms", "select at least one norm"));
        }
        if self.jobs == Some(0) {
            return Err(ConfigError::new("jobs", "must be at least 1"));
        }
        Ok(())
    }
}

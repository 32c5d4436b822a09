//! Run configuration grammar. The file format deliberately mirrors the core
//! types but owns its own structs so the on-disk grammar stays stable,
//! lowercase and strict (`deny_unknown_fields`) independently of internal
//! refactors.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use hartree_lab::{
    EvolveConfig, GridSpec, GroundStateConfig, GroundStateInit, Model, ModelParams,
    PerturbationMode, PerturbationSpec, PotentialKind, PotentialSpec,
};

/// Marker for problems in the run configuration itself, as opposed to
/// runtime failures; drives the exit-code contract.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! config_bail {
    ($($arg:tt)*) => {
        return Err(ConfigError(format!($($arg)*)).into())
    };
}

/// Everything raised while interpreting a config is a configuration error,
/// including validation failures from the core constructors.
fn as_config_error<T>(result: Result<T>) -> Result<T> {
    result.map_err(|e| ConfigError(format!("{e:#}")).into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed for every randomized choice in the run.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the --out flag overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub grid: GridSection,
    pub model: ModelSection,
    #[serde(default)]
    pub ground_state: GroundStateSection,
    #[serde(default)]
    pub evolve: Option<EvolveSection>,
    #[serde(default)]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub perturbation: Option<PerturbationSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub s: f64,
    pub m: f64,
    pub gamma: f64,
    pub mass: f64,
    #[serde(default = "one")]
    pub coupling: f64,
    pub potential: PotentialSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// "zero", "harmonic", "anisotropic" or "polynomial".
    pub kind: String,
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub floor: f64,
    /// Per-axis weights, "anisotropic" only.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Coefficients of |x|^2, |x|^4, ..., "polynomial" only.
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateSection {
    #[serde(default = "default_step")]
    pub step_size: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub residual_tol: f64,
    #[serde(default = "yes")]
    pub semi_implicit: bool,
    /// "gaussian", "random" or "file".
    #[serde(default = "default_init")]
    pub init: String,
    /// Seed for init = "random"; falls back to the top-level seed.
    #[serde(default)]
    pub init_seed: Option<u64>,
    /// Snapshot path for init = "file".
    #[serde(default)]
    pub init_path: Option<PathBuf>,
}

impl Default for GroundStateSection {
    fn default() -> Self {
        Self {
            step_size: default_step(),
            max_iters: default_iters(),
            residual_tol: default_tol(),
            semi_implicit: true,
            init: default_init(),
            init_seed: None,
            init_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub monitor_stride: usize,
    /// Integrate to t_final, then back to t = 0, and record the round-trip
    /// defect. Used by the reversibility checks.
    #[serde(default)]
    pub reverse: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// "ground-state", "gaussian", "zero" or "snapshot".
    pub kind: String,
    #[serde(default = "one")]
    pub width: f64,
    /// Mass of the gaussian; falls back to the model mass.
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub delta: f64,
    /// "random", "single-mode" or "width-dilation".
    pub mode: String,
    /// Seed for mode = "random"; falls back to the top-level seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Signed mode indices, one per axis, for "single-mode".
    #[serde(default)]
    pub indices: Option<Vec<i64>>,
    /// Dilation factor for "width-dilation".
    #[serde(default)]
    pub factor: Option<f64>,
    #[serde(default)]
    pub renormalize_mass: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_step() -> f64 {
    0.5
}

fn default_iters() -> usize {
    20_000
}

fn default_tol() -> f64 {
    1e-9
}

fn default_init() -> String {
    "gaussian".into()
}

fn default_stride() -> usize {
    100
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        as_config_error(Self::load_inner(path))
    }

    fn load_inner(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(config)
    }

    /// A config exercising the default verification grid, used when the
    /// verify subcommand is run without --config.
    pub fn verify_default() -> Self {
        Self {
            seed: 0,
            output_dir: None,
            grid: GridSection {
                dim: 1,
                half_width: 8.0,
                points: 64,
            },
            model: ModelSection {
                s: 0.7,
                m: 0.0,
                gamma: 0.5,
                mass: 1.0,
                coupling: 1.0,
                potential: PotentialSection {
                    kind: "harmonic".into(),
                    shift: 0.0,
                    floor: 0.0,
                    weights: None,
                    coefficients: None,
                },
            },
            ground_state: GroundStateSection::default(),
            evolve: None,
            initial: None,
            perturbation: None,
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        as_config_error(
            GridSpec::new(self.grid.dim, self.grid.half_width, self.grid.points)
                .map_err(Into::into),
        )
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let potential = m.potential.to_spec()?;
        Ok(ModelParams::new(m.s, m.m, m.gamma, potential, m.mass).with_coupling(m.coupling))
    }

    pub fn build_model(&self) -> Result<Model> {
        let grid = self.grid_spec()?;
        let params = self.model_params()?;
        as_config_error(Model::new(grid, params).map_err(Into::into))
    }

    pub fn ground_state_config(&self) -> Result<GroundStateConfig> {
        let g = &self.ground_state;
        let init = match g.init.as_str() {
            "gaussian" => GroundStateInit::Gaussian,
            "random" => GroundStateInit::RandomSeeded(g.init_seed.unwrap_or(self.seed)),
            "file" => match &g.init_path {
                Some(path) => GroundStateInit::FromFile(path.clone()),
                None => config_bail!("init = \"file\" needs init_path"),
            },
            other => {
                config_bail!("unknown ground state init {other:?} (expected gaussian, random or file)")
            }
        };
        Ok(GroundStateConfig {
            step_size: g.step_size,
            max_iters: g.max_iters,
            residual_tol: g.residual_tol,
            semi_implicit: g.semi_implicit,
            init,
        })
    }

    pub fn evolve_config(&self) -> Result<(EvolveConfig, bool)> {
        let Some(e) = &self.evolve else {
            config_bail!("this command needs an [evolve] section");
        };
        let config = as_config_error(
            EvolveConfig::new(e.dt, e.t_final, e.monitor_stride).map_err(Into::into),
        )?;
        Ok((config, e.reverse))
    }

    pub fn perturbation_spec(&self, dim: usize) -> Result<Option<PerturbationSpec>> {
        let Some(p) = &self.perturbation else {
            return Ok(None);
        };
        let mode = match p.mode.as_str() {
            "random" => PerturbationMode::RandomSeeded(p.seed.unwrap_or(self.seed)),
            "single-mode" => match &p.indices {
                Some(indices) => PerturbationMode::SingleMode(indices.clone()),
                None => config_bail!("mode = \"single-mode\" needs indices"),
            },
            "width-dilation" => match p.factor {
                Some(factor) => PerturbationMode::WidthDilation(factor),
                None => config_bail!("mode = \"width-dilation\" needs factor"),
            },
            other => config_bail!(
                "unknown perturbation mode {other:?} (expected random, single-mode or width-dilation)"
            ),
        };
        let mut spec = PerturbationSpec::new(p.delta, mode);
        spec.renormalize_mass = p.renormalize_mass;
        as_config_error(spec.validate(dim).map_err(Into::into))?;
        Ok(Some(spec))
    }
}

impl PotentialSection {
    pub fn to_spec(&self) -> Result<PotentialSpec> {
        let kind = match self.kind.as_str() {
            "zero" => PotentialKind::Zero,
            "harmonic" => PotentialKind::Harmonic,
            "anisotropic" => match &self.weights {
                Some(weights) => PotentialKind::AnisotropicQuadratic {
                    weights: weights.clone(),
                },
                None => config_bail!("kind = \"anisotropic\" needs weights"),
            },
            "polynomial" => match &self.coefficients {
                Some(coefficients) => PotentialKind::EvenPolynomial {
                    coefficients: coefficients.clone(),
                },
                None => config_bail!("kind = \"polynomial\" needs coefficients"),
            },
            other => config_bail!(
                "unknown potential kind {other:?} (expected zero, harmonic, anisotropic or polynomial)"
            ),
        };
        Ok(PotentialSpec::new(kind, self.shift).with_floor(self.floor))
    }
}

/// Serialize the resolved configuration back out so every output directory
/// records exactly what produced it.
pub fn echo_config(config: &RunConfig, dir: &Path) -> Result<()> {
    let text = toml::to_string_pretty(config).context("cannot serialize config echo")?;
    let path = dir.join("config.echo.toml");
    std::fs::write(&path, text)
        .with_context(|| format!("cannot write config echo {}", path.display()))?;
    Ok(())
}

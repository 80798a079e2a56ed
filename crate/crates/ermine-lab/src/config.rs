//! Experiment configuration: a TOML file describing which problem to run,
//! at which sample sizes, how many replications, and under which seed,
//! together with the tolerances that decide pass/fail.
//!
//! Unknown keys are rejected everywhere — a typo in a tolerance name must
//! fail loudly instead of silently running with the default. Every report
//! artifact embeds the SHA-256 of the canonical serialized form, so two
//! result files can be traced back to whether they came from the same
//! configuration.
//!
//! ```toml
//! [problem.euclidean]
//! sampler = "gaussian"
//! mean = [0.5, -1.0]
//! spread = [1.0, 0.5]
//!
//! n_grid = [25, 100, 400, 1600]
//! reps = 2000
//! base_seed = 7
//! delta_grid = [0.2, 0.1, 0.05, 0.01]
//!
//! [tolerances]
//! slope_min = -0.6
//! slope_max = -0.4
//! ```

use ermine_core::bounds::{ConcentrationParams, RateFn};
use ermine_core::problems::eigenvector::EigenvectorProblem;
use ermine_core::problems::entropic::EntropicBarycenterProblem;
use ermine_core::problems::euclidean::{EuclideanBarycenterProblem, EuclideanSampler};
use ermine_core::problems::lasso::LassoProblem;
use ermine_core::problems::spider::SpiderTreeBarycenterProblem;
use ermine_core::space::EstimationProblem;
use ermine_core::transport::Grid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    /// The file parsed but describes an impossible object (bad dimensions,
    /// nonpositive scales, …).
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(message) => write!(f, "config io error: {message}"),
            ConfigError::Parse(message) => write!(f, "config parse error: {message}"),
            ConfigError::Invalid(message) => write!(f, "invalid config: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Which member of the location-family the Euclidean problem samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Gaussian,
    BoundedUniform,
    Laplace,
}

/// Euclidean barycenter: iid vectors around `mean` with per-coordinate
/// `spread` (standard deviations, half-widths, or Laplace scales depending
/// on the sampler kind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EuclideanConfig {
    pub sampler: SamplerKind,
    pub mean: Vec<f64>,
    pub spread: Vec<f64>,
}

/// Barycenter on a spider tree: leg-pick probabilities and a common leg
/// length; samples sit at the far ends of the legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpiderConfig {
    pub leg_probabilities: Vec<f64>,
    pub leg_length: f64,
}

/// Leading eigenvector of a covariance with the given spectrum (decreasing,
/// gap between the first two entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenvectorConfig {
    pub eigenvalues: Vec<f64>,
}

/// Sparse linear regression: true signal, Gaussian noise level, and the
/// ℓ₁ penalty weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoConfig {
    pub phi0: Vec<f64>,
    pub noise_sigma: f64,
    pub lambda: f64,
}

/// Entropy-regularized Wasserstein barycenter over a one-dimensional grid,
/// drawing measures from a finite pool of random bump mixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropicConfig {
    pub grid_nodes: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub pool_size: usize,
    pub n_bumps: usize,
    pub lambda: f64,
    pub solver_tol: f64,
    pub pool_seed: u64,
}

/// The problem block of a configuration. Externally tagged, so the TOML
/// form is a section header: `[problem.euclidean]`, `[problem.lasso]`, …
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemConfig {
    Euclidean(EuclideanConfig),
    Spider(SpiderConfig),
    Eigenvector(EigenvectorConfig),
    Lasso(LassoConfig),
    Entropic(EntropicConfig),
}

impl EuclideanConfig {
    pub fn build(&self) -> Result<EuclideanBarycenterProblem, ConfigError> {
        let sampler = match self.sampler {
            SamplerKind::Gaussian => EuclideanSampler::Gaussian {
                mean: self.mean.clone(),
                std_devs: self.spread.clone(),
            },
            SamplerKind::BoundedUniform => EuclideanSampler::BoundedUniform {
                mean: self.mean.clone(),
                half_widths: self.spread.clone(),
            },
            SamplerKind::Laplace => EuclideanSampler::Laplace {
                mean: self.mean.clone(),
                scales: self.spread.clone(),
            },
        };
        EuclideanBarycenterProblem::new(sampler).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl SpiderConfig {
    pub fn build(&self) -> Result<SpiderTreeBarycenterProblem, ConfigError> {
        SpiderTreeBarycenterProblem::new(self.leg_probabilities.clone(), self.leg_length)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl EigenvectorConfig {
    pub fn build(&self) -> Result<EigenvectorProblem, ConfigError> {
        EigenvectorProblem::new(self.eigenvalues.clone())
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl LassoConfig {
    pub fn build(&self) -> Result<LassoProblem, ConfigError> {
        LassoProblem::new(self.phi0.clone(), self.noise_sigma, self.lambda)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl EntropicConfig {
    pub fn build(&self) -> Result<EntropicBarycenterProblem, ConfigError> {
        let grid = Grid::line(self.grid_nodes, self.grid_min, self.grid_max)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        EntropicBarycenterProblem::new(
            grid,
            self.pool_size,
            self.n_bumps,
            self.lambda,
            self.solver_tol,
            self.pool_seed,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl ProblemConfig {
    /// Stable identifier used in record files and report headers.
    pub fn id(&self) -> &'static str {
        match self {
            ProblemConfig::Euclidean(_) => "euclidean",
            ProblemConfig::Spider(_) => "spider",
            ProblemConfig::Eigenvector(_) => "eigenvector",
            ProblemConfig::Lasso(_) => "lasso",
            ProblemConfig::Entropic(_) => "entropic",
        }
    }

    /// Builds the problem just to read off its concentration parameters.
    pub fn concentration_params(&self) -> Result<ConcentrationParams, ConfigError> {
        Ok(match self {
            ProblemConfig::Euclidean(c) => c.build()?.params(),
            ProblemConfig::Spider(c) => c.build()?.params(),
            ProblemConfig::Eigenvector(c) => c.build()?.params(),
            ProblemConfig::Lasso(c) => c.build()?.params(),
            ProblemConfig::Entropic(c) => c.build()?.params(),
        })
    }
}

/// Concentration parameters given directly instead of through a problem:
/// lets the bound command print tables for regimes no bundled problem
/// occupies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub beta: f64,
    pub alpha: f64,
    pub tau: f64,
    pub psi1_a: f64,
    #[serde(default)]
    pub diam_s: f64,
    /// Localization level; omitted means the curvature bounds hold globally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0: Option<f64>,
    /// Constant deterioration probability (0 = the assumptions never fail).
    #[serde(default)]
    pub p_n: f64,
}

impl ExplicitParams {
    pub fn to_concentration_params(&self) -> ConcentrationParams {
        let eta = if self.p_n > 0.0 {
            RateFn::Table(vec![(1, self.p_n)])
        } else {
            RateFn::Zero
        };
        ConcentrationParams {
            beta: self.beta,
            alpha: self.alpha,
            tau: self.tau,
            j0: self.j0.unwrap_or(f64::INFINITY),
            psi1_a: self.psi1_a,
            diam_s: self.diam_s,
            eta,
            kappa: RateFn::Zero,
            iota: RateFn::Zero,
        }
    }
}

/// Pass/fail thresholds. All have defaults; a config file only lists the
/// ones it wants to move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Fitted log-log slope must land in [slope_min, slope_max].
    pub slope_min: f64,
    pub slope_max: f64,
    /// Relative tolerance of the closed-form expectation identity.
    pub expectation_rel: f64,
    /// Confidence level δ the report's bound curve is drawn at.
    pub bound_delta: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            slope_min: -0.6,
            slope_max: -0.4,
            expectation_rel: 0.05,
            bound_delta: 0.05,
        }
    }
}

fn default_n_grid() -> Vec<usize> {
    vec![25, 100, 400, 1600]
}

fn default_reps() -> usize {
    2000
}

fn default_delta_grid() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.01]
}

/// A full run configuration. Everything but the problem has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ExplicitParams>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: None,
            params: None,
            n_grid: default_n_grid(),
            reps: default_reps(),
            base_seed: 0,
            delta_grid: default_delta_grid(),
            out_dir: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    /// Canonical serialized form — the input to [`RunConfig::config_hash`].
    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        toml::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical form, hex-encoded. Configurations that
    /// parse to the same value hash identically however their files were
    /// formatted.
    pub fn config_hash(&self) -> Result<String, ConfigError> {
        let canonical = self.to_toml_string()?;
        Ok(format!("{:x}", Sha256::digest(canonical.as_bytes())))
    }

    /// Command-line flags take precedence over file contents.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out_dir: Option<&str>) {
        if let Some(seed) = seed {
            self.base_seed = seed;
        }
        if let Some(dir) = out_dir {
            self.out_dir = Some(dir.to_owned());
        }
    }

    /// Parameters for the bound calculus: an explicit `[params]` block wins
    /// over the problem's own declaration; `None` when the config carries
    /// neither.
    pub fn concentration_params(&self) -> Result<Option<ConcentrationParams>, ConfigError> {
        if let Some(explicit) = &self.params {
            return Ok(Some(explicit.to_concentration_params()));
        }
        match &self.problem {
            Some(problem) => Ok(Some(problem.concentration_params()?)),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> RunConfig {
        RunConfig {
            problem: Some(ProblemConfig::Euclidean(EuclideanConfig {
                sampler: SamplerKind::Gaussian,
                mean: vec![0.5, -1.0],
                spread: vec![1.0, 0.5],
            })),
            params: None,
            n_grid: vec![25, 100, 400, 1600],
            reps: 2000,
            base_seed: 7,
            delta_grid: vec![0.2, 0.1, 0.05, 0.01],
            out_dir: Some("out".into()),
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn toml_round_trip_preserves_every_field() {
        let configs = [
            sample_config(),
            RunConfig {
                problem: Some(ProblemConfig::Spider(SpiderConfig {
                    leg_probabilities: vec![0.55, 0.25, 0.2],
                    leg_length: 1.0,
                })),
                ..RunConfig::default()
            },
            RunConfig {
                problem: Some(ProblemConfig::Eigenvector(EigenvectorConfig {
                    eigenvalues: vec![2.0, 1.0, 0.5],
                })),
                ..RunConfig::default()
            },
            RunConfig {
                problem: Some(ProblemConfig::Lasso(LassoConfig {
                    phi0: vec![1.0, -0.5, 0.25],
                    noise_sigma: 0.2,
                    lambda: 0.1,
                })),
                ..RunConfig::default()
            },
            RunConfig {
                problem: Some(ProblemConfig::Entropic(EntropicConfig {
                    grid_nodes: 24,
                    grid_min: 0.0,
                    grid_max: 1.0,
                    pool_size: 6,
                    n_bumps: 3,
                    lambda: 0.5,
                    solver_tol: 1e-9,
                    pool_seed: 2024,
                })),
                ..RunConfig::default()
            },
            RunConfig {
                params: Some(ExplicitParams {
                    beta: 2.0,
                    alpha: 1.0,
                    tau: 1.0,
                    psi1_a: 2.0,
                    diam_s: 0.5,
                    j0: None,
                    p_n: 0.001,
                }),
                ..RunConfig::default()
            },
        ];
        for config in configs {
            let text = config.to_toml_string().unwrap();
            let back: RunConfig = text.parse().unwrap();
            assert_eq!(back, config, "round trip changed:\n{text}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        let top = "typo_key = 3\n";
        assert!(matches!(
            top.parse::<RunConfig>(),
            Err(ConfigError::Parse(_))
        ));

        let inner = "[problem.euclidean]\nsampler = \"gaussian\"\nmean = [0.0]\nspread = [1.0]\nextra = 1\n";
        assert!(inner.parse::<RunConfig>().is_err());

        let tolerances = "[tolerances]\nslope_mni = -0.6\n";
        assert!(tolerances.parse::<RunConfig>().is_err());

        let params = "[params]\nbeta = 2.0\nalpha = 1.0\ntau = 1.0\npsi1_a = 1.0\ngamma = 3.0\n";
        assert!(params.parse::<RunConfig>().is_err());
    }

    #[test]
    fn missing_fields_take_documented_defaults() {
        let text = "[problem.spider]\nleg_probabilities = [0.6, 0.4]\nleg_length = 2.0\n";
        let config: RunConfig = text.parse().unwrap();
        assert_eq!(config.n_grid, vec![25, 100, 400, 1600]);
        assert_eq!(config.reps, 2000);
        assert_eq!(config.base_seed, 0);
        assert_eq!(config.delta_grid, vec![0.2, 0.1, 0.05, 0.01]);
        assert_eq!(config.out_dir, None);
        assert_eq!(config.tolerances, Tolerances::default());
        assert_eq!(config.problem.as_ref().unwrap().id(), "spider");
    }

    #[test]
    fn every_problem_variant_builds_and_reports_its_parameters() {
        let variants: Vec<ProblemConfig> = vec![
            ProblemConfig::Euclidean(EuclideanConfig {
                sampler: SamplerKind::BoundedUniform,
                mean: vec![0.0, 0.0],
                spread: vec![1.0, 1.0],
            }),
            ProblemConfig::Spider(SpiderConfig {
                leg_probabilities: vec![0.55, 0.25, 0.2],
                leg_length: 1.0,
            }),
            ProblemConfig::Eigenvector(EigenvectorConfig {
                eigenvalues: vec![2.0, 1.0, 0.5],
            }),
            ProblemConfig::Lasso(LassoConfig {
                phi0: vec![1.0, -0.5, 0.25],
                noise_sigma: 0.2,
                lambda: 0.1,
            }),
            ProblemConfig::Entropic(EntropicConfig {
                grid_nodes: 12,
                grid_min: 0.0,
                grid_max: 1.0,
                pool_size: 4,
                n_bumps: 2,
                lambda: 0.5,
                solver_tol: 1e-8,
                pool_seed: 5,
            }),
        ];
        for variant in variants {
            let params = variant.concentration_params().unwrap();
            assert!(params.beta > params.alpha, "{} regressed", variant.id());
            assert!(params.tau > 0.0);
        }
    }

    #[test]
    fn bad_dimensions_surface_as_invalid_config() {
        let config = EuclideanConfig {
            sampler: SamplerKind::Gaussian,
            mean: vec![0.0, 0.0],
            spread: vec![1.0],
        };
        assert!(matches!(config.build(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn hash_is_stable_under_reformatting_and_sensitive_to_content() {
        let config = sample_config();
        let hash = config.config_hash().unwrap();
        assert_eq!(hash.len(), 64);
        assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));

        // A differently formatted file with the same content hashes the same.
        let noisy = format!("# comment\n\n{}", config.to_toml_string().unwrap());
        let reparsed: RunConfig = noisy.parse().unwrap();
        assert_eq!(reparsed.config_hash().unwrap(), hash);

        let mut reseeded = config.clone();
        reseeded.base_seed = 8;
        assert_ne!(reseeded.config_hash().unwrap(), hash);
    }

    #[test]
    fn explicit_params_translate_to_the_bound_calculus_types() {
        let explicit = ExplicitParams {
            beta: 2.0,
            alpha: 1.0,
            tau: 0.5,
            psi1_a: 3.0,
            diam_s: 1.0,
            j0: None,
            p_n: 0.01,
        };
        let params = explicit.to_concentration_params();
        assert_eq!(params.j0, f64::INFINITY);
        assert_eq!(params.p_n(1), 0.01);
        assert_eq!(params.p_n(10_000), 0.01);

        let clean = ExplicitParams { p_n: 0.0, j0: Some(2.5), ..explicit };
        let params = clean.to_concentration_params();
        assert_eq!(params.p_n(100), 0.0);
        assert_eq!(params.j0, 2.5);
    }

    #[test]
    fn overrides_beat_file_contents() {
        let mut config = sample_config();
        config.apply_overrides(Some(99), Some("elsewhere"));
        assert_eq!(config.base_seed, 99);
        assert_eq!(config.out_dir.as_deref(), Some("elsewhere"));

        let mut untouched = sample_config();
        untouched.apply_overrides(None, None);
        assert_eq!(untouched, sample_config());
    }
}

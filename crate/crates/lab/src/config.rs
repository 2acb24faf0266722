//! Experiment configuration: a TOML file, validated on load.

use std::collections::HashSet;
use std::path::Path;

use clt_core::trunc::TruncError;
use clt_core::{Functional, HModel, NormKind, TailModelSpec, TruncationScheme};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_REPS: usize = 200;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {msg}")]
    Invalid { field: &'static str, msg: String },
}

fn invalid(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        msg: msg.into(),
    }
}

fn default_grid() -> Vec<usize> {
    vec![1_000, 3_000, 10_000, 30_000]
}

fn default_reps() -> usize {
    2000
}

/// A linear functional given by its non-zero weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub id: String,
    pub weights: Vec<(usize, f64)>,
}

/// Where the pilot spectral estimate comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSettings {
    /// Quantile of `‖H‖` used as the conditioning threshold.
    pub quantile: f64,
    pub pilot_reps: usize,
    pub reps: usize,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self {
            quantile: 0.99,
            pilot_reps: 100_000,
            reps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub dir: String,
    pub report: String,
    pub samples: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            report: "report.json".into(),
            samples: "samples.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: TailModelSpec,
    pub scheme: TruncationScheme,
    /// Must agree with the model when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_kind: Option<NormKind>,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Sizes used to classify the regime; defaults to `n_grid` when it has two
    /// or more entries, otherwise to the standard grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub functionals: Vec<FunctionalSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub spectral: SpectralSettings,
    /// Scalar draws behind each Monte-Carlo `P(‖H‖ > M_n)`.
    #[serde(default = "default_tail_reps")]
    pub tail_reps: usize,
    /// Largest accepted relative 99% half-width of `B_n`.
    #[serde(default = "default_bn_rel_ci")]
    pub max_bn_rel_ci: f64,
    /// Run the CLT experiment even when the scheme classifies as soft.
    #[serde(default)]
    pub allow_soft: bool,
    /// Reference draws for the soft-regime comparison (defaults to `reps`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_reps: Option<usize>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_tail_reps() -> usize {
    10_000_000
}

fn default_bn_rel_ci() -> f64 {
    0.02
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn build_model(&self) -> Result<HModel, ConfigError> {
        self.model
            .build()
            .map_err(|e| invalid("model", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let model = self.build_model()?;
        self.scheme
            .validate()
            .map_err(|e: TruncError| invalid("scheme", e.to_string()))?;
        if let Some(k) = self.norm_kind {
            if k != model.norm_kind() {
                return Err(invalid(
                    "norm_kind",
                    format!("{k:?} disagrees with the model's {:?}", model.norm_kind()),
                ));
            }
        }
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "must not be empty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "n_grid",
                "must be strictly increasing positive sizes",
            ));
        }
        if let Some(g) = &self.regime_grid {
            if g.len() < 2 || g[0] == 0 || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(
                    "regime_grid",
                    "needs at least two strictly increasing positive sizes",
                ));
            }
        }
        if self.reps < MIN_REPS {
            return Err(invalid(
                "reps",
                format!("need at least {MIN_REPS}, got {}", self.reps),
            ));
        }
        let mut ids = HashSet::new();
        for f in &self.functionals {
            if !ids.insert(f.id.as_str()) {
                return Err(invalid("functionals", format!("duplicate id {:?}", f.id)));
            }
            if f.id.contains(',') || f.id.contains('\n') {
                return Err(invalid(
                    "functionals",
                    format!("id {:?} must not contain commas or newlines", f.id),
                ));
            }
            if f.weights.is_empty() || f.weights.iter().all(|w| w.1 == 0.0) {
                return Err(invalid(
                    "functionals",
                    format!("{:?} is the zero functional", f.id),
                ));
            }
            if let Some(&(i, _)) = f.weights.iter().find(|w| w.0 == 0 || w.0 > model.cap()) {
                return Err(invalid(
                    "functionals",
                    format!("{:?} uses coordinate {i} outside 1..={}", f.id, model.cap()),
                ));
            }
            self.functional(f, model.norm_kind())?;
        }
        if let Some(e) = self
            .epsilon_grid
            .iter()
            .find(|e| !(**e >= 0.0 && e.is_finite()))
        {
            return Err(invalid(
                "epsilon_grid",
                format!("radii must be finite and non-negative, got {e}"),
            ));
        }
        let sp = &self.spectral;
        if !(sp.quantile > 0.0 && sp.quantile < 1.0) {
            return Err(invalid(
                "spectral",
                format!("quantile must lie in (0, 1), got {}", sp.quantile),
            ));
        }
        if sp.pilot_reps < 1000 || sp.reps < 1000 {
            return Err(invalid(
                "spectral",
                "pilot_reps and reps must be at least 1000",
            ));
        }
        if self.tail_reps < clt_core::trunc::MIN_TAIL_REPS {
            return Err(invalid(
                "tail_reps",
                format!("need at least {}", clt_core::trunc::MIN_TAIL_REPS),
            ));
        }
        if !(self.max_bn_rel_ci > 0.0) {
            return Err(invalid("max_bn_rel_ci", "must be positive"));
        }
        if let Some(r) = self.reference_reps {
            if r < MIN_REPS {
                return Err(invalid(
                    "reference_reps",
                    format!("need at least {MIN_REPS}, got {r}"),
                ));
            }
        }
        Ok(())
    }

    pub fn regime_grid(&self) -> Vec<usize> {
        match &self.regime_grid {
            Some(g) => g.clone(),
            None if self.n_grid.len() >= 2 => self.n_grid.clone(),
            None => default_grid(),
        }
    }

    pub fn functional(
        &self,
        f: &FunctionalSpec,
        kind: NormKind,
    ) -> Result<Functional, ConfigError> {
        let mut w = f.weights.clone();
        w.sort_by_key(|p| p.0);
        Functional::new(w, kind).map_err(|e| invalid("functionals", format!("{:?}: {e}", f.id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 7
        [model]
        kind = "scalar_pareto"
        alpha = 1.0
        x_m = 1.0
        [scheme]
        m_coeff = 1.0
        m_exponent = 0.5
        [[functionals]]
        id = "coord1"
        weights = [[1, 1.0]]
    "#;

    #[test]
    fn minimal_round_trip() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.n_grid, default_grid());
        assert_eq!(cfg.reps, 2000);
        let echoed = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&echoed).unwrap(), cfg);
    }

    #[test]
    fn summability_is_enforced() {
        let text = r#"
            [model]
            kind = "stable_series"
            alpha = 1.5
            coeff_c = 1.0
            coeff_r = 1.0
            cap = 10
            [scheme]
            m_coeff = 1.0
            m_exponent = 0.4
        "#;
        let err = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("summability"), "{err}");
    }

    #[test]
    fn unknown_field_is_named() {
        let text = MINIMAL.replace("seed = 7", "seed = 7\nsede = 8");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("sede"), "{err}");
        let nested = MINIMAL.replace("x_m = 1.0", "x_m = 1.0\nbeta = 2.0");
        let err = ExperimentConfig::from_toml(&nested)
            .unwrap_err()
            .to_string();
        assert!(err.contains("beta"), "{err}");
    }

    #[test]
    fn floors_and_grids() {
        let few = MINIMAL.replace("seed = 7", "seed = 7\nreps = 100");
        assert!(matches!(
            ExperimentConfig::from_toml(&few),
            Err(ConfigError::Invalid { field: "reps", .. })
        ));
        let grid = MINIMAL.replace("seed = 7", "seed = 7\nn_grid = [10, 10]");
        assert!(matches!(
            ExperimentConfig::from_toml(&grid),
            Err(ConfigError::Invalid {
                field: "n_grid",
                ..
            })
        ));
        let off = MINIMAL.replace("[[1, 1.0]]", "[[2, 1.0]]");
        assert!(matches!(
            ExperimentConfig::from_toml(&off),
            Err(ConfigError::Invalid {
                field: "functionals",
                ..
            })
        ));
        let zero = MINIMAL.replace("[[1, 1.0]]", "[[1, 0.0]]");
        assert!(matches!(
            ExperimentConfig::from_toml(&zero),
            Err(ConfigError::Invalid {
                field: "functionals",
                ..
            })
        ));
    }

    #[test]
    fn mixture_defaults() {
        let text = r#"
            [model]
            kind = "rademacher_cauchy_mix"
            p = 1.5
            cap = 64
            [scheme]
            m_coeff = 1.0
            m_exponent = 0.15
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        match &cfg.model {
            TailModelSpec::RademacherCauchyMix {
                k_const,
                direction,
                exact_tail,
                ..
            } => {
                assert_eq!(*k_const, 1.0);
                assert_eq!(direction, &vec![(1, 1.0)]);
                assert!(*exact_tail);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

//! Configuration-driven experiments on truncated heavy-tailed row sums.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, FunctionalSpec};
pub use experiment::{
    probe_example2_divergence, probe_small_ball, probe_stabilization, probe_uniform_moment,
    regime_trace, run_clt_experiment, soft_regime_check, spectral_dump, Lab, LabError,
};
pub use report::{write_report, ExperimentReport, ProbeKind, ProbeSeries, SampleTable};

/// Parses and validates a TOML configuration.
pub fn load_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::from_toml(text)
}

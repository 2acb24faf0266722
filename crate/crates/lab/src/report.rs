//! Report types and their on-disk form: `report.json`, `samples.csv` and a
//! `timing.json` sidecar that keeps wall-clock time out of the reproducible report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clt_core::generators::CapBudget;
use clt_core::stats::Proportion;
use clt_core::trunc::EstimateMethod;
use clt_core::{KsResult, RegimeReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ExperimentConfig;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Resolved threshold and scaling at one grid size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub n: usize,
    pub m_n: f64,
    pub p_exceed: f64,
    pub p_ci_halfwidth: f64,
    pub b_n: f64,
    /// Relative 99% half-width of `B_n`.
    pub b_n_rel_ci: f64,
    pub method: EstimateMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub threshold: f64,
    pub quantile: f64,
    pub n_exceed: usize,
    pub pilot_reps: usize,
    pub reps: usize,
    /// `(k, mass of atoms whose largest coordinate is k)` for the leading coordinates
    pub axis_masses: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalAtN {
    pub n: usize,
    pub variance: f64,
    pub variance_ci: f64,
    pub ks: KsResult,
    /// Empirical and target variance differ by more than three half-widths.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub id: String,
    pub target_variance: f64,
    /// Closed-form target, where one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_variance: Option<f64>,
    pub per_n: Vec<FunctionalAtN>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeKind {
    SmallBall {
        epsilon: f64,
    },
    UniformMoment,
    Divergence {
        p: f64,
    },
    RegimeTrace,
    /// KS p-values of `B_n^{-1}‖S_n‖` between consecutive grid sizes.
    Stabilization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSeries {
    pub probe_kind: ProbeKind,
    pub n_grid: Vec<usize>,
    pub values: Vec<f64>,
    pub ci_halfwidths: Vec<f64>,
    /// Wilson bounds for proportion-valued probes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lower: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ks: Vec<KsResult>,
}

impl ProbeSeries {
    pub fn new(probe_kind: ProbeKind) -> Self {
        Self {
            probe_kind,
            n_grid: Vec::new(),
            values: Vec::new(),
            ci_halfwidths: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            ks: Vec::new(),
        }
    }

    pub fn push(&mut self, n: usize, value: f64, ci: f64) {
        self.n_grid.push(n);
        self.values.push(value);
        self.ci_halfwidths.push(ci);
    }

    pub fn push_proportion(&mut self, n: usize, p: Proportion) {
        self.push(n, p.estimate, p.halfwidth());
        self.lower.push(p.lower);
        self.upper.push(p.upper);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftAtN {
    pub n: usize,
    pub functional: String,
    pub b_n: f64,
    pub reference: String,
    pub ks: KsResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub artifact_version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub centering: String,
    pub reduction_order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub normalization: Vec<Normalization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functionals: Vec<FunctionalReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub soft: Vec<SoftAtN>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_budget: Option<CapBudget>,
    pub warnings: Vec<String>,
    /// Kept out of `report.json`, see [`write_report`].
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION.into(),
            command: command.into(),
            config: config.clone(),
            centering: "symmetry_zero".into(),
            reduction_order: "ascending_replicate_index".into(),
            samples_csv: None,
            regime: None,
            normalization: Vec::new(),
            spectral: None,
            functionals: Vec::new(),
            probes: Vec::new(),
            soft: Vec::new(),
            cap_budget: None,
            warnings: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

/// Per-replicate normalized values, in `(n, functional, replicate)` order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleTable {
    pub rows: Vec<(usize, String, usize, f64)>,
}

impl SampleTable {
    pub fn extend(&mut self, n: usize, id: &str, values: &[f64]) {
        self.rows.extend(
            values
                .iter()
                .enumerate()
                .map(|(r, &v)| (n, id.to_string(), r, v)),
        );
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,functional_id,replicate,value\n");
        for (n, id, r, v) in &self.rows {
            // `{:?}` is the shortest round-tripping form of an f64
            writeln!(out, "{n},{id},{r},{v:?}").unwrap();
        }
        out
    }
}

pub fn report_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `report.json`, `samples.csv` (when there are samples) and `timing.json` into `dir`.
pub fn write_report(
    report: &ExperimentReport,
    samples: &SampleTable,
    dir: &Path,
) -> Result<PathBuf, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let cfg = &report.config.output;
    if let Some(name) = &report.samples_csv {
        write(&dir.join(name), &samples.to_csv())?;
    }
    let path = dir.join(&cfg.report);
    write(&path, &report_json(report))?;
    let timing =
        serde_json::json!({ "command": report.command, "wall_clock_secs": report.wall_clock_secs });
    write(&dir.join("timing.json"), &format!("{timing}\n"))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let mut t = SampleTable::default();
        t.extend(10, "f", &[0.5, -1.0]);
        assert_eq!(
            t.to_csv(),
            "n,functional_id,replicate,value\n10,f,0,0.5\n10,f,1,-1.0\n"
        );
    }

    #[test]
    fn report_round_trips_without_timing() {
        let cfg = crate::config::ExperimentConfig::from_toml(
            "[model]\nkind = \"scalar_pareto\"\nalpha = 1.0\nx_m = 1.0\n[scheme]\nm_coeff = 1.0\nm_exponent = 0.5\n",
        )
        .unwrap();
        let mut r = ExperimentReport::new("run", &cfg);
        r.wall_clock_secs = 3.5;
        let text = report_json(&r);
        assert!(!text.contains("wall_clock"));
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(report_json(&back), text);
    }
}

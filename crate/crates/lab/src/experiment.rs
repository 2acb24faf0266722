//! Experiment drivers: the CLT run, the soft-regime comparison, the regime
//! trace, the spectral dump and the probes.
//!
//! Streams hang off `RandomStream::new(seed)` by purpose, so that every
//! quantity is reproducible on its own and independent of thread count:
//! child 0 pilot norms, 1 spectral draws, 2 Monte-Carlo tails, 3 regime trace,
//! 4 row sums (then grid index, then replicate), 5 reference draws.

use std::time::Instant;

use clt_core::generators::{cap_error_budget, ModelError, RowSampler};
use clt_core::rng::sample_sas;
use clt_core::spectral::{estimate_spectral, limit_variance, SpectralError};
use clt_core::stats::{
    gaussian_cdf, ks_one_sample, ks_two_sample, mean_with_ci, median_iqr_standardize, quantile,
    variance_with_ci, Proportion, StatsError,
};
use clt_core::trunc::{classify_regime, exceed_prob, scaling_bn, stable_normalization, TruncError};
use clt_core::{
    Functional, HModel, RandomStream, Regime, RegimeReport, StableParams, TailModelSpec,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{
    ExperimentReport, FunctionalAtN, FunctionalReport, Normalization, ProbeKind, ProbeSeries,
    SampleTable, SoftAtN, SpectralSummary,
};

const PILOT: u64 = 0;
const SPECTRAL: u64 = 1;
const TAIL: u64 = 2;
const REGIME: u64 = 3;
const ROWS: u64 = 4;
const REFERENCE: u64 = 5;

/// Coordinates listed in the spectral axis-mass summary.
const AXIS_SUMMARY: usize = 5;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trunc(#[from] TruncError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("the CLT run needs at least one functional")]
    NoFunctionals,
    #[error("the scheme classifies as soft truncation; set allow_soft = true to run anyway")]
    SoftRegime,
    #[error("soft-regime check needs a soft scheme, classified {0:?}")]
    NotSoft(Regime),
    #[error(
        "B_n at n = {n} has relative half-width {rel:.4} above the limit {max}; raise tail_reps"
    )]
    BnTooWide { n: usize, rel: f64, max: f64 },
    #[error("limit variance of functional {0:?} is zero under the estimated spectral measure")]
    DegenerateTarget(String),
    #[error("divergence probe: {0}")]
    Divergence(String),
}

/// One row sum reduced to what the drivers need.
#[derive(Clone, Debug, PartialEq)]
pub struct RowOut {
    pub values: Vec<f64>,
    pub norm: f64,
}

/// A validated configuration with its model and root stream.
pub struct Lab<'a> {
    cfg: &'a ExperimentConfig,
    model: HModel,
    root: RandomStream,
}

impl<'a> Lab<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self, LabError> {
        cfg.validate()?;
        Ok(Self {
            model: cfg.build_model()?,
            root: RandomStream::new(cfg.seed),
            cfg,
        })
    }

    pub fn model(&self) -> &HModel {
        &self.model
    }

    pub fn functionals(&self) -> Result<Vec<Functional>, LabError> {
        let kind = self.model.norm_kind();
        Ok(self
            .cfg
            .functionals
            .iter()
            .map(|f| self.cfg.functional(f, kind))
            .collect::<Result<_, _>>()?)
    }

    pub fn regime(&self) -> Result<RegimeReport, LabError> {
        Ok(classify_regime(
            &self.model,
            &self.cfg.scheme,
            &self.cfg.regime_grid(),
            &self.root.split(REGIME),
            self.cfg.tail_reps,
        )?)
    }

    /// `M_n`, `P(‖H‖ > M_n)` and `B_n` for grid entry `i`; fails when `B_n` is too uncertain.
    pub fn normalization(&self, i: usize, n: usize) -> Result<Normalization, LabError> {
        let m_n = self.cfg.scheme.m_n(n);
        let est = exceed_prob(
            &self.model,
            m_n,
            &self.root.split(TAIL).split(i as u64),
            self.cfg.tail_reps,
        )?;
        let rel_p = est.relative_halfwidth();
        // B_n ∝ √p, so the lower end of the p interval moves B_n the most
        let b_n_rel_ci = if rel_p < 1.0 {
            1.0 - (1.0 - rel_p).sqrt()
        } else {
            f64::INFINITY
        };
        if b_n_rel_ci > self.cfg.max_bn_rel_ci {
            return Err(LabError::BnTooWide {
                n,
                rel: b_n_rel_ci,
                max: self.cfg.max_bn_rel_ci,
            });
        }
        Ok(Normalization {
            n,
            m_n,
            p_exceed: est.estimate,
            p_ci_halfwidth: est.ci_halfwidth,
            b_n: scaling_bn(n, m_n, est.estimate),
            b_n_rel_ci,
            method: est.method,
        })
    }

    /// `reps` row sums of size `n` (grid entry `i`), truncated at `threshold` when given.
    pub fn rows(
        &self,
        i: usize,
        n: usize,
        threshold: Option<f64>,
        fs: &[Functional],
    ) -> Result<Vec<RowOut>, LabError> {
        let sampler = match threshold {
            Some(m) => RowSampler::truncated(&self.model, m, self.cfg.scheme.overshoot)?,
            None => RowSampler::untruncated(&self.model),
        };
        let base = self.root.split(ROWS).split(i as u64);
        let cap = self.model.cap();
        let kind = self.model.norm_kind();
        Ok((0..self.cfg.reps)
            .into_par_iter()
            .map_init(
                || (vec![0.0; cap], vec![0.0; cap]),
                |(scratch, acc), r| {
                    let stats = sampler.sum_into(n, &base.split(r as u64), scratch, acc);
                    RowOut {
                        values: fs.iter().map(|f| f.apply_dense(acc)).collect(),
                        norm: stats.norm(acc, kind),
                    }
                },
            )
            .collect())
    }

    /// Truncated row-sum norms at every grid size with their normalizations.
    pub fn norms(&self) -> Result<Vec<(Normalization, Vec<f64>)>, LabError> {
        self.cfg
            .n_grid
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let norm = self.normalization(i, n)?;
                let rows = self.rows(i, n, Some(norm.m_n), &[])?;
                Ok((norm, rows.into_iter().map(|r| r.norm).collect()))
            })
            .collect()
    }

    fn pilot_norms(&self) -> Vec<f64> {
        self.model
            .sample_norms(&self.root.split(PILOT), self.cfg.spectral.pilot_reps)
    }

    fn spectral(
        &self,
        report: &mut ExperimentReport,
    ) -> Result<clt_core::SpectralEstimate, LabError> {
        let norms = self.pilot_norms();
        let settings = &self.cfg.spectral;
        let t = quantile(&norms, settings.quantile);
        let sp = estimate_spectral(&self.model, t, settings.reps, &self.root.split(SPECTRAL))?;
        report.spectral = Some(SpectralSummary {
            threshold: t,
            quantile: settings.quantile,
            n_exceed: sp.n_exceed,
            pilot_reps: settings.pilot_reps,
            reps: settings.reps,
            axis_masses: (1..=self.model.cap().min(AXIS_SUMMARY))
                .map(|k| (k, sp.axis_mass(k)))
                .collect(),
        });
        report.cap_budget = Some(cap_error_budget(&self.model, quantile(&norms, 0.5)));
        Ok(sp)
    }

    /// Closed-form `(2/(2-α)) ∫ f² dσ` for the symmetrized scalar model, where `σ = ½δ₊ + ½δ₋`.
    fn analytic_variance(&self, f: &Functional) -> Option<f64> {
        match self.model.spec() {
            TailModelSpec::ScalarPareto { alpha, .. } => {
                let w = f.weights().iter().find(|w| w.0 == 1).map_or(0.0, |w| w.1);
                Some(2.0 / (2.0 - alpha) * w * w)
            }
            _ => None,
        }
    }
}

fn finish(mut report: ExperimentReport, start: Instant) -> ExperimentReport {
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    report
}

/// `B_n^{-1} f(S_n)` against `N(0, (2/(2-α)) ∫ f² dσ̂)` at every grid size.
pub fn run_clt_experiment(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentReport, SampleTable), LabError> {
    let start = Instant::now();
    let lab = Lab::new(cfg)?;
    let fs = lab.functionals()?;
    if fs.is_empty() {
        return Err(LabError::NoFunctionals);
    }
    let mut report = ExperimentReport::new("run", cfg);
    let regime = lab.regime()?;
    match regime.label {
        Regime::Soft if !cfg.allow_soft => return Err(LabError::SoftRegime),
        Regime::Soft => {
            report.warn("scheme classifies as soft; Gaussian limit not expected".into())
        }
        Regime::Indeterminate => report.warn("regime indeterminate along the grid".into()),
        Regime::Hard => {}
    }
    report.regime = Some(regime);

    let sp = lab.spectral(&mut report)?;
    let alpha = lab.model.alpha();
    let mut freports = Vec::with_capacity(fs.len());
    for (spec, f) in cfg.functionals.iter().zip(&fs) {
        let target = limit_variance(f, &sp, alpha)?.variance;
        if !(target > 0.0) {
            return Err(LabError::DegenerateTarget(spec.id.clone()));
        }
        freports.push(FunctionalReport {
            id: spec.id.clone(),
            target_variance: target,
            analytic_variance: lab.analytic_variance(f),
            per_n: Vec::new(),
        });
    }

    let mut samples = SampleTable::default();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let norm = lab.normalization(i, n)?;
        log::info!("n = {n}: M_n = {:.4}, B_n = {:.4}", norm.m_n, norm.b_n);
        let rows = lab.rows(i, n, Some(norm.m_n), &fs)?;
        for (k, fr) in freports.iter_mut().enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r.values[k] / norm.b_n).collect();
            let (variance, variance_ci) = variance_with_ci(&xs);
            let target = fr.target_variance;
            let ks = ks_one_sample(&xs, |x| gaussian_cdf(x, target))?;
            let flagged = (variance - target).abs() > 3.0 * variance_ci;
            if flagged {
                report.warn(format!(
                    "{} at n = {n}: variance {variance:.4} ± {variance_ci:.4} misses target {target:.4}",
                    fr.id
                ));
            }
            samples.extend(n, &fr.id, &xs);
            fr.per_n.push(FunctionalAtN {
                n,
                variance,
                variance_ci,
                ks,
                flagged,
            });
        }
        report.normalization.push(norm);
    }
    report.functionals = freports;
    report.samples_csv = Some(cfg.output.samples.clone());
    Ok((finish(report, start), samples))
}

/// Two-sample KS of truncated row sums against stable reference draws, both
/// median/IQR standardized.
pub fn soft_regime_check(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentReport, SampleTable), LabError> {
    let start = Instant::now();
    let lab = Lab::new(cfg)?;
    let fs = lab.functionals()?;
    if fs.is_empty() {
        return Err(LabError::NoFunctionals);
    }
    let regime = lab.regime()?;
    if regime.label != Regime::Soft {
        return Err(LabError::NotSoft(regime.label));
    }
    let mut report = ExperimentReport::new("soft-check", cfg);
    report.regime = Some(regime);
    let alpha = lab.model.alpha();
    let stable = StableParams::new(alpha).map_err(ModelError::from)?;
    let ref_reps = cfg.reference_reps.unwrap_or(cfg.reps);
    let mut samples = SampleTable::default();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let m_n = cfg.scheme.m_n(n);
        let b_n = match stable_normalization(&lab.model, n) {
            Ok((_, b)) => b,
            Err(_) => (n as f64).powf(1.0 / alpha),
        };
        let rows = lab.rows(i, n, Some(m_n), &fs)?;
        let ref_root = lab.root.split(REFERENCE).split(i as u64);
        for (k, (spec, f)) in cfg.functionals.iter().zip(&fs).enumerate() {
            let xs: Vec<f64> = rows.iter().map(|r| r.values[k] / b_n).collect();
            let (refs, source): (Vec<f64>, &str) = match lab.model.spec() {
                TailModelSpec::ScalarPareto { .. } => {
                    let w = f.apply_dense(&[1.0]);
                    let draws = (0..ref_reps)
                        .into_par_iter()
                        .map(|r| w * sample_sas(&stable, &mut ref_root.split(r as u64)))
                        .collect();
                    (draws, "sas")
                }
                // n^{-1/α} Σ H_j has the law of H₁
                TailModelSpec::StableSeries { .. } => {
                    let draws = (0..ref_reps)
                        .into_par_iter()
                        .map(|r| f.apply(&lab.model.sample_h(&mut ref_root.split(r as u64))))
                        .collect();
                    (draws, "single_draw")
                }
                TailModelSpec::RademacherCauchyMix { .. } => {
                    let sampler = RowSampler::untruncated(&lab.model);
                    let draws = (0..ref_reps)
                        .into_par_iter()
                        .map(|r| f.apply(&sampler.sample(n, &ref_root.split(r as u64))) / b_n)
                        .collect();
                    (draws, "untruncated_row")
                }
            };
            let ks = ks_two_sample(&median_iqr_standardize(&xs), &median_iqr_standardize(&refs))?;
            samples.extend(n, &spec.id, &xs);
            samples.extend(n, &format!("{}:reference", spec.id), &refs);
            report.soft.push(SoftAtN {
                n,
                functional: spec.id.clone(),
                b_n,
                reference: source.into(),
                ks,
            });
        }
    }
    report.samples_csv = Some(cfg.output.samples.clone());
    Ok((finish(report, start), samples))
}

/// `n · P(‖H‖ > M_n)` along the grid with its label.
pub fn regime_trace(cfg: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    let start = Instant::now();
    let lab = Lab::new(cfg)?;
    let mut report = ExperimentReport::new("regime", cfg);
    let regime = lab.regime()?;
    let mut series = ProbeSeries::new(ProbeKind::RegimeTrace);
    for (k, &n) in regime.n_grid.iter().enumerate() {
        series.push(n, regime.np_exceed[k], regime.ci_halfwidths[k]);
    }
    report.probes.push(series);
    report.regime = Some(regime);
    Ok(finish(report, start))
}

/// The pilot spectral estimate and the limit variances it implies.
pub fn spectral_dump(cfg: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    let start = Instant::now();
    let lab = Lab::new(cfg)?;
    let mut report = ExperimentReport::new("spectral", cfg);
    let sp = lab.spectral(&mut report)?;
    for (spec, f) in cfg.functionals.iter().zip(lab.functionals()?) {
        report.functionals.push(FunctionalReport {
            id: spec.id.clone(),
            target_variance: limit_variance(&f, &sp, lab.model.alpha())?.variance,
            analytic_variance: lab.analytic_variance(&f),
            per_n: Vec::new(),
        });
    }
    Ok(finish(report, start))
}

/// `P̂(B_n^{-1}‖S_n‖ < ε)` per grid size, from precomputed norms.
pub fn small_ball_series(norms: &[(Normalization, Vec<f64>)], eps: f64) -> ProbeSeries {
    let mut series = ProbeSeries::new(ProbeKind::SmallBall { epsilon: eps });
    for (norm, xs) in norms {
        let hits = xs.iter().filter(|&&x| x / norm.b_n < eps).count();
        series.push_proportion(norm.n, Proportion::new(hits, xs.len()));
    }
    series
}

/// `B_n^{-1} E‖S_n‖` per grid size with a 99% half-width.
pub fn moment_series(norms: &[(Normalization, Vec<f64>)]) -> ProbeSeries {
    let mut series = ProbeSeries::new(ProbeKind::UniformMoment);
    for (norm, xs) in norms {
        let scaled: Vec<f64> = xs.iter().map(|x| x / norm.b_n).collect();
        let (m, ci) = mean_with_ci(&scaled);
        series.push(norm.n, m, ci);
    }
    series
}

/// KS p-values of `B_n^{-1}‖S_n‖` between consecutive grid sizes.
pub fn stabilization_series(norms: &[(Normalization, Vec<f64>)]) -> Result<ProbeSeries, LabError> {
    let mut series = ProbeSeries::new(ProbeKind::Stabilization);
    let scaled: Vec<Vec<f64>> = norms
        .iter()
        .map(|(nm, xs)| xs.iter().map(|x| x / nm.b_n).collect())
        .collect();
    for k in 1..norms.len() {
        let ks = ks_two_sample(&scaled[k - 1], &scaled[k])?;
        series.push(norms[k].0.n, ks.p_value, 0.0);
        series.ks.push(ks);
    }
    Ok(series)
}

fn with_norm_samples(
    cfg: &ExperimentConfig,
    command: &str,
    build: impl FnOnce(&[(Normalization, Vec<f64>)]) -> Result<Vec<ProbeSeries>, LabError>,
) -> Result<(ExperimentReport, SampleTable), LabError> {
    let start = Instant::now();
    let lab = Lab::new(cfg)?;
    let mut report = ExperimentReport::new(command, cfg);
    let norms = lab.norms()?;
    report.probes = build(&norms)?;
    let mut samples = SampleTable::default();
    for (nm, xs) in &norms {
        let scaled: Vec<f64> = xs.iter().map(|x| x / nm.b_n).collect();
        samples.extend(nm.n, "norm", &scaled);
    }
    report.normalization = norms.into_iter().map(|(nm, _)| nm).collect();
    report.samples_csv = Some(cfg.output.samples.clone());
    Ok((finish(report, start), samples))
}

/// Small-ball probe for each radius; an empty list uses the 0.3-quantile of
/// `B_n^{-1}‖S_n‖` at the smallest grid size.
pub fn probe_small_ball(
    cfg: &ExperimentConfig,
    eps: &[f64],
) -> Result<(ExperimentReport, SampleTable), LabError> {
    with_norm_samples(cfg, "probe small-ball", |norms| {
        let radii = if eps.is_empty() {
            let (nm, xs) = &norms[0];
            vec![quantile(
                &xs.iter().map(|x| x / nm.b_n).collect::<Vec<_>>(),
                0.3,
            )]
        } else {
            eps.to_vec()
        };
        Ok(radii.iter().map(|&e| small_ball_series(norms, e)).collect())
    })
}

pub fn probe_uniform_moment(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentReport, SampleTable), LabError> {
    with_norm_samples(cfg, "probe moment", |norms| Ok(vec![moment_series(norms)]))
}

pub fn probe_stabilization(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentReport, SampleTable), LabError> {
    with_norm_samples(cfg, "probe stabilization", |norms| {
        Ok(vec![stabilization_series(norms)?])
    })
}

/// `P̂(n^{-1/p}‖S_n‖ > 1)` for the mixture model, with `M_n` inside `1 ≪ M_n ≪ n^{2/p-1}`.
pub fn probe_example2_divergence(
    cfg: &ExperimentConfig,
    p: f64,
) -> Result<(ExperimentReport, SampleTable), LabError> {
    let start = Instant::now();
    let model_p = match cfg.model {
        TailModelSpec::RademacherCauchyMix { p, .. } => p,
        _ => {
            return Err(LabError::Divergence(
                "model must be rademacher_cauchy_mix".into(),
            ))
        }
    };
    if model_p != p {
        return Err(LabError::Divergence(format!(
            "p = {p} does not match the model's p = {model_p}"
        )));
    }
    let beta = cfg.scheme.m_exponent;
    let upper = 2.0 / p - 1.0;
    if !(beta > 0.0 && beta < upper) {
        return Err(LabError::Divergence(format!(
            "M_n exponent {beta} must lie in (0, {upper})"
        )));
    }
    let lab = Lab::new(cfg)?;
    let mut report = ExperimentReport::new("probe divergence", cfg);
    let mut series = ProbeSeries::new(ProbeKind::Divergence { p });
    let mut samples = SampleTable::default();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let norm = lab.normalization(i, n)?;
        let scale = (n as f64).powf(-1.0 / p);
        let xs: Vec<f64> = lab
            .rows(i, n, Some(norm.m_n), &[])?
            .iter()
            .map(|r| r.norm * scale)
            .collect();
        let hits = xs.iter().filter(|&&x| x > 1.0).count();
        series.push_proportion(n, Proportion::new(hits, xs.len()));
        samples.extend(n, "norm", &xs);
        report.normalization.push(norm);
    }
    report.probes.push(series);
    report.cap_budget = Some(cap_error_budget(
        &lab.model,
        quantile(&lab.pilot_norms(), 0.5),
    ));
    report.samples_csv = Some(cfg.output.samples.clone());
    Ok((finish(report, start), samples))
}

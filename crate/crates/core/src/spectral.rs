//! Empirical spectral measure of `H` and the Gaussian limit variance it induces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banach::{Functional, NormKind};
use crate::generators::HModel;
use crate::rng::RandomStream;
use crate::stats::quantile;
use crate::SeqVec;

/// Fewest exceedances accepted by [`estimate_spectral`].
pub const MIN_EXCEEDANCES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("only {got} draws exceeded the threshold, need {min}")]
    TooFewExceedances { got: usize, min: usize },
    #[error("threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("limit variance needs 0 < α < 2, got {0}")]
    BadAlpha(f64),
}

/// Law of `H/‖H‖` given `‖H‖ > t`, one atom per observed exceedance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub atoms: Vec<(SeqVec, f64)>,
    pub threshold: f64,
    pub n_exceed: usize,
    pub norm_kind: NormKind,
}

impl SpectralEstimate {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn integrate<F: Fn(&SeqVec) -> f64>(&self, g: F) -> f64 {
        self.atoms.iter().map(|(s, w)| w * g(s)).sum()
    }

    /// Mass of atoms whose largest coordinate (in absolute value) sits at index `k`.
    pub fn axis_mass(&self, k: usize) -> f64 {
        self.atoms
            .iter()
            .filter(|(s, _)| {
                s.coords()
                    .iter()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .is_some_and(|&(i, _)| i == k)
            })
            .map(|a| a.1)
            .sum()
    }

    /// Mass at the atoms equal to `v` (exact comparison).
    pub fn mass_at(&self, v: &SeqVec) -> f64 {
        self.atoms.iter().filter(|(s, _)| s == v).map(|a| a.1).sum()
    }
}

/// Spectral estimate from given draws: the directions of those with norm above `t`.
pub fn spectral_from_draws<'a, I>(
    draws: I,
    t: f64,
    kind: NormKind,
) -> Result<SpectralEstimate, SpectralError>
where
    I: IntoIterator<Item = &'a SeqVec>,
{
    if !(t > 0.0) {
        return Err(SpectralError::BadThreshold(t));
    }
    let dirs: Vec<SeqVec> = draws
        .into_iter()
        .filter(|h| h.norm(kind) > t)
        .map(|h| h.direction(kind).expect("norm above a positive threshold"))
        .collect();
    if dirs.is_empty() {
        return Err(SpectralError::TooFewExceedances { got: 0, min: 1 });
    }
    let n = dirs.len();
    let w = 1.0 / n as f64;
    Ok(SpectralEstimate {
        atoms: dirs.into_iter().map(|d| (d, w)).collect(),
        threshold: t,
        n_exceed: n,
        norm_kind: kind,
    })
}

/// Draws `reps` copies of `H` (draw `i` from `s.split(i)`) and keeps the
/// directions of those with `‖H‖ > t`.
pub fn estimate_spectral(
    model: &HModel,
    t: f64,
    reps: usize,
    s: &RandomStream,
) -> Result<SpectralEstimate, SpectralError> {
    if !(t > 0.0) {
        return Err(SpectralError::BadThreshold(t));
    }
    let kind = model.norm_kind();
    let cap = model.cap();
    let mut scratch = vec![0.0; cap];
    let mut dirs = Vec::new();
    for i in 0..reps {
        let mut hs = s.split(i as u64);
        let draw = model.draw(&mut hs, &mut scratch);
        let norm = draw.norm();
        if norm > t {
            let mut dense = vec![0.0; cap];
            model.accumulate(draw, 1.0, &scratch, &mut dense);
            dense.iter_mut().for_each(|x| *x /= norm);
            dirs.push(SeqVec::from_dense(&dense).expect("finite direction"));
        }
    }
    if dirs.len() < MIN_EXCEEDANCES {
        return Err(SpectralError::TooFewExceedances {
            got: dirs.len(),
            min: MIN_EXCEEDANCES,
        });
    }
    let n = dirs.len();
    let w = 1.0 / n as f64;
    Ok(SpectralEstimate {
        atoms: dirs.into_iter().map(|d| (d, w)).collect(),
        threshold: t,
        n_exceed: n,
        norm_kind: kind,
    })
}

/// Empirical `q`-quantile of `‖H‖` from `reps` pilot draws.
pub fn pilot_threshold(model: &HModel, q: f64, reps: usize, s: &RandomStream) -> f64 {
    quantile(&model.sample_norms(s, reps), q)
}

/// Variance of the Gaussian limit of `B_n^{-1} f(S_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussLimitSpec {
    pub variance: f64,
    pub alpha: f64,
}

/// `(2 / (2 - α)) ∫ f² dσ̂`.
pub fn limit_variance(
    f: &Functional<f64>,
    sp: &SpectralEstimate,
    alpha: f64,
) -> Result<GaussLimitSpec, SpectralError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(SpectralError::BadAlpha(alpha));
    }
    let second = sp.integrate(|s| f.apply(s).powi(2));
    Ok(GaussLimitSpec {
        variance: 2.0 / (2.0 - alpha) * second,
        alpha,
    })
}

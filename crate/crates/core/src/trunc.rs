//! The radial truncation map, threshold schedules, overshoot laws, regime
//! classification and the scalings `B_n` and `(a_n, b_n)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banach::{NormKind, SparseSeq};
use crate::generators::{HModel, ModelError};
use crate::rng::RandomStream;
use crate::scalar::Real;

/// z-score of a two-sided 99% normal interval.
pub const Z99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TruncError {
    #[error("threshold must be positive and finite, got {0}")]
    BadThreshold(f64),
    #[error("{reps} replicates requested, at least {min} needed for a usable confidence interval")]
    TooFewReplicates { reps: usize, min: usize },
    #[error("n grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("Monte-Carlo intervals overlap between n = {0} and n = {1}; cannot order the exceedance series")]
    RegimeUnresolved(usize, usize),
    #[error("model has no tail constant; estimate one first")]
    MissingTailConstant,
    #[error("invalid truncation scheme: {0}")]
    BadScheme(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Law of the overshoot `L` past the threshold. Every variant is non-negative
/// with a finite second moment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OvershootLaw {
    #[default]
    Zero,
    Exponential {
        mean: f64,
    },
    HalfGaussian {
        sigma: f64,
    },
}

impl OvershootLaw {
    pub fn validate(&self) -> Result<(), TruncError> {
        match *self {
            OvershootLaw::Zero => Ok(()),
            OvershootLaw::Exponential { mean: x } | OvershootLaw::HalfGaussian { sigma: x } => {
                if x > 0.0 && x.is_finite() {
                    Ok(())
                } else {
                    Err(TruncError::BadScheme(format!(
                        "overshoot scale must be positive, got {x}"
                    )))
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, OvershootLaw::Zero)
    }

    #[inline]
    pub fn sample(&self, s: &mut RandomStream) -> f64 {
        match *self {
            OvershootLaw::Zero => 0.0,
            OvershootLaw::Exponential { mean } => mean * s.exponential(),
            OvershootLaw::HalfGaussian { sigma } => sigma * s.standard_normal().abs(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            OvershootLaw::Zero => 0.0,
            OvershootLaw::Exponential { mean } => 2.0 * mean * mean,
            OvershootLaw::HalfGaussian { sigma } => sigma * sigma,
        }
    }
}

pub fn sample_overshoot(o: &OvershootLaw, s: &mut RandomStream) -> f64 {
    o.sample(s)
}

/// Power-law threshold schedule `M_n = c · n^β` plus the overshoot law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationScheme {
    pub m_coeff: f64,
    pub m_exponent: f64,
    #[serde(default)]
    pub overshoot: OvershootLaw,
}

impl TruncationScheme {
    pub fn new(m_coeff: f64, m_exponent: f64, overshoot: OvershootLaw) -> Result<Self, TruncError> {
        let s = Self {
            m_coeff,
            m_exponent,
            overshoot,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), TruncError> {
        if !(self.m_coeff > 0.0 && self.m_coeff.is_finite()) {
            return Err(TruncError::BadScheme(format!(
                "m_coeff must be positive, got {}",
                self.m_coeff
            )));
        }
        if !(self.m_exponent >= 0.0 && self.m_exponent.is_finite()) {
            return Err(TruncError::BadScheme(format!(
                "m_exponent must be non-negative, got {}",
                self.m_exponent
            )));
        }
        self.overshoot.validate()
    }

    pub fn m_n(&self, n: usize) -> f64 {
        self.m_coeff * (n as f64).powf(self.m_exponent)
    }
}

pub fn m_schedule_eval(t: &TruncationScheme, n: usize) -> f64 {
    t.m_n(n)
}

/// Multiplier the truncation map applies to a vector of norm `norm`.
#[inline]
pub fn truncation_factor<T: Real>(norm: T, m: T, l: T) -> T {
    if norm <= m {
        T::one()
    } else {
        (m + l) / norm
    }
}

/// `h` if `‖h‖ ≤ M`, otherwise `(M + l) · h / ‖h‖`.
pub fn truncate<T: Real>(h: &SparseSeq<T>, m: T, l: T, kind: NormKind) -> SparseSeq<T> {
    let norm = h.norm(kind);
    if norm <= m {
        return h.clone();
    }
    h.scaled(truncation_factor(norm, m, l))
}

/// `[n M² p]^{1/2}`.
pub fn scaling_bn<T: Real>(n: usize, m: T, p_exceed: T) -> T {
    (T::lit(n as f64) * m * m * p_exceed).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateMethod {
    Analytic,
    MonteCarlo { reps: usize },
}

/// Estimate of `P(‖H‖ > M)` with a 99% half-width (zero when analytic).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub estimate: f64,
    pub ci_halfwidth: f64,
    pub method: EstimateMethod,
}

impl TailEstimate {
    pub fn relative_halfwidth(&self) -> f64 {
        if self.estimate > 0.0 {
            self.ci_halfwidth / self.estimate
        } else {
            f64::INFINITY
        }
    }
}

pub const MIN_TAIL_REPS: usize = 1000;

/// `P(‖H‖ > M)`: exact where the model admits it, Monte-Carlo with a 99% interval otherwise.
pub fn exceed_prob(
    model: &HModel,
    m: f64,
    s: &RandomStream,
    reps: usize,
) -> Result<TailEstimate, TruncError> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(TruncError::BadThreshold(m));
    }
    if let Some(p) = model.analytic_exceed(m) {
        return Ok(TailEstimate {
            estimate: p,
            ci_halfwidth: 0.0,
            method: EstimateMethod::Analytic,
        });
    }
    if reps < MIN_TAIL_REPS {
        return Err(TruncError::TooFewReplicates {
            reps,
            min: MIN_TAIL_REPS,
        });
    }
    Ok(model.mc_exceed(m, s, reps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Soft,
    Hard,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n_grid: Vec<usize>,
    pub m_n: Vec<f64>,
    pub np_exceed: Vec<f64>,
    pub ci_halfwidths: Vec<f64>,
    pub label: Regime,
    pub method: EstimateMethod,
}

/// Ratio the exceedance series must grow (Hard) or shrink (Soft) by across the grid.
pub const REGIME_RATIO: f64 = 10.0;

fn label_series(np: &[f64]) -> Regime {
    let (first, last) = (np[0], np[np.len() - 1]);
    let increasing = np.windows(2).all(|w| w[1] > w[0]);
    let decreasing = np.windows(2).all(|w| w[1] < w[0]);
    if np.len() >= 2 && increasing && last > REGIME_RATIO * first {
        Regime::Hard
    } else if np.len() >= 2 && decreasing && last < first / REGIME_RATIO {
        Regime::Soft
    } else {
        Regime::Indeterminate
    }
}

/// Labels the truncation regime from `n · P(‖H‖ > M_n)` along `n_grid`.
/// `mc_reps` is only used for models without an exact tail.
pub fn classify_regime(
    model: &HModel,
    scheme: &TruncationScheme,
    n_grid: &[usize],
    s: &RandomStream,
    mc_reps: usize,
) -> Result<RegimeReport, TruncError> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] == 0 {
        return Err(TruncError::BadGrid);
    }
    let mut m_n = Vec::with_capacity(n_grid.len());
    let mut np = Vec::with_capacity(n_grid.len());
    let mut ci = Vec::with_capacity(n_grid.len());
    let mut method = EstimateMethod::Analytic;
    for (i, &n) in n_grid.iter().enumerate() {
        let m = scheme.m_n(n);
        let est = exceed_prob(model, m, &s.split(i as u64), mc_reps)?;
        if let EstimateMethod::MonteCarlo { .. } = est.method {
            method = est.method;
        }
        m_n.push(m);
        np.push(n as f64 * est.estimate);
        ci.push(n as f64 * est.ci_halfwidth);
    }
    let label = label_series(&np);
    if label != Regime::Indeterminate {
        for i in 1..np.len() {
            let disjoint = (np[i] - np[i - 1]).abs() > ci[i] + ci[i - 1];
            if !disjoint {
                return Err(TruncError::RegimeUnresolved(n_grid[i - 1], n_grid[i]));
            }
        }
    }
    Ok(RegimeReport {
        n_grid: n_grid.to_vec(),
        m_n,
        np_exceed: np,
        ci_halfwidths: ci,
        label,
        method,
    })
}

/// `(a_n, b_n)` with `b_n^{-1}(Σ H_j - a_n)` converging to a stable law.
/// Every implemented model is symmetric, so `a_n = 0` and `b_n = (C n)^{1/α}`.
pub fn stable_normalization(model: &HModel, n: usize) -> Result<(f64, f64), TruncError> {
    let c = model
        .tail_constant()
        .ok_or(TruncError::MissingTailConstant)?;
    Ok((0.0, (c * n as f64).powf(1.0 / model.alpha())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::TailModelSpec;

    fn pareto(alpha: f64) -> HModel {
        TailModelSpec::ScalarPareto { alpha, x_m: 1.0 }
            .build()
            .unwrap()
    }

    #[test]
    fn truncate_examples() {
        let e1 = |x: f64| SparseSeq::<f64>::from_pairs(3, vec![(1, x)]).unwrap();
        assert_eq!(truncate(&e1(1.5), 2.0, 0.0, NormKind::Sup), e1(1.5));
        assert_eq!(truncate(&e1(5.0), 2.0, 0.0, NormKind::Sup), e1(2.0));
        let h = SparseSeq::<f64>::from_pairs(3, vec![(1, 3.0), (2, 4.0)]).unwrap();
        let out = truncate(&h, 2.5, 0.5, NormKind::L2);
        assert!((out.get(1) - 1.8).abs() < 1e-14);
        assert!((out.get(2) - 2.4).abs() < 1e-14);
        assert!((out.norm(NormKind::L2) - 3.0).abs() < 1e-14);
        assert!(truncate(&SparseSeq::<f64>::zero(3), 1.0, 1.0, NormKind::L2).is_zero());
    }

    #[test]
    fn schedule_examples() {
        let t = TruncationScheme::new(1.0, 0.5, OvershootLaw::Zero).unwrap();
        assert_eq!(t.m_n(100), 10.0);
        let flat = TruncationScheme::new(3.0, 0.0, OvershootLaw::Zero).unwrap();
        assert_eq!(flat.m_n(1), 3.0);
        assert_eq!(flat.m_n(12345), 3.0);
        let mut prev = 0.0;
        for n in 1..=10_000 {
            let m = t.m_n(n);
            assert!(m >= prev);
            prev = m;
        }
        assert!(TruncationScheme::new(0.0, 0.5, OvershootLaw::Zero).is_err());
        assert!(TruncationScheme::new(1.0, -0.1, OvershootLaw::Zero).is_err());
        assert!(TruncationScheme::new(1.0, 0.1, OvershootLaw::Exponential { mean: -1.0 }).is_err());
    }

    #[test]
    fn overshoot_moments() {
        let mut s = RandomStream::new(21);
        assert!((0..1000).all(|_| OvershootLaw::Zero.sample(&mut s) == 0.0));
        let law = OvershootLaw::Exponential { mean: 2.0 };
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut s)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let m1 = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((m1 - 2.0).abs() < 0.01, "{m1}");
        assert!((m2 - law.second_moment()).abs() < 0.1, "{m2}");
        let hg = OvershootLaw::HalfGaussian { sigma: 1.5 };
        assert!((0..10_000).all(|_| hg.sample(&mut s) >= 0.0));
    }

    #[test]
    fn exceed_prob_exact_for_pareto() {
        let s = RandomStream::new(1);
        let est = exceed_prob(&pareto(1.0), 10.0, &s, 0).unwrap();
        assert_eq!(est.estimate, 0.1);
        assert_eq!(est.ci_halfwidth, 0.0);
        assert!(exceed_prob(&pareto(1.0), 1e-300, &s, 0).unwrap().estimate >= 1.0);
        assert!(exceed_prob(&pareto(1.0), 0.0, &s, 0).is_err());
    }

    #[test]
    fn scaling_bn_examples() {
        assert!((scaling_bn(100, 10.0, 0.1) - 1000f64.sqrt()).abs() < 1e-12);
        assert_eq!(scaling_bn(100, 10.0, 0.0), 0.0);
        assert!(scaling_bn(101, 10.0, 0.1) > scaling_bn(100, 10.0, 0.1));
        assert!(scaling_bn(100, 10.5, 0.1) > scaling_bn(100, 10.0, 0.1));
        assert!(scaling_bn(100, 10.0, 0.11) > scaling_bn(100, 10.0, 0.1));
        // with p = C M^{-α}: B_n = √C n^{1/2} M^{1-α/2}
        let (c, alpha, m, n) = (0.7f64, 1.2f64, 50.0f64, 400usize);
        let closed = c.sqrt() * (n as f64).sqrt() * m.powf(1.0 - alpha / 2.0);
        assert!((scaling_bn(n, m, c * m.powf(-alpha)) / closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_examples_scalar_pareto() {
        let s = RandomStream::new(0);
        let grid = [100, 1_000, 10_000, 100_000];
        let hard = TruncationScheme::new(1.0, 0.5, OvershootLaw::Zero).unwrap();
        let r = classify_regime(&pareto(1.0), &hard, &grid, &s, 0).unwrap();
        assert_eq!(r.label, Regime::Hard);
        for (&n, &np) in grid.iter().zip(&r.np_exceed) {
            assert!((np / (n as f64).sqrt() - 1.0).abs() < 1e-12);
        }
        let soft = TruncationScheme::new(1.0, 2.0, OvershootLaw::Zero).unwrap();
        let r = classify_regime(&pareto(1.0), &soft, &grid, &s, 0).unwrap();
        assert_eq!(r.label, Regime::Soft);
        for (&n, &np) in grid.iter().zip(&r.np_exceed) {
            assert!((np * n as f64 - 1.0).abs() < 1e-12);
        }
        // αβ = 1: n P(‖H‖ > M_n) is constant
        let boundary = TruncationScheme::new(1.0, 1.0, OvershootLaw::Zero).unwrap();
        let r = classify_regime(&pareto(1.0), &boundary, &grid, &s, 0).unwrap();
        assert_eq!(r.label, Regime::Indeterminate);
        assert!(classify_regime(&pareto(1.0), &hard, &[10, 10], &s, 0).is_err());
    }

    #[test]
    fn stable_normalization_pareto() {
        let (a, b) = stable_normalization(&pareto(1.0), 1234).unwrap();
        assert_eq!(a, 0.0);
        assert!((b - 1234.0).abs() < 1e-9);
        let series = TailModelSpec::StableSeries {
            alpha: 1.2,
            coeff_c: 1.0,
            coeff_r: 2.0,
            cap: 5,
            norm: NormKind::Sup,
            tail_constant: None,
        }
        .build()
        .unwrap();
        assert_eq!(
            stable_normalization(&series, 10),
            Err(TruncError::MissingTailConstant)
        );
    }
}

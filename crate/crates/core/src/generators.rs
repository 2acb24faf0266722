//! The three models for `H` and the row-sum samplers built on them.
//!
//! * `ScalarPareto`: `ε·X·e₁` with `X` Pareto and `ε` a random sign.
//! * `StableSeries`: `Σ_{k≤K} a_k T_k e_k`, `a_k = c k^{-r}`, `T_k` i.i.d. SαS.
//! * `RademacherCauchyMix`: with probability ½ the bounded series
//!   `Σ_{j≤K} a_j ε_j e_j`, `a_j = K₀ (log(j ∨ 2))^{(1-p)/2}`; otherwise `x·S`
//!   with `S` standard Cauchy. With `exact_tail` the row sums also carry the
//!   exact supremum of the coordinates past the cap (see [`crate::beyond`]).
//!
//! Stream discipline for a row driven by stream `s`: draw `j` (0-based) takes
//! its `H` from `s.split(j).split(0)`, consuming coordinates in index order,
//! and its overshoot from `s.split(j).split(1)`. Truncated and untruncated
//! rows therefore see identical `H` draws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banach::{BanachError, NormKind, SparseSeq};
use crate::beyond::sample_beyond_cap_sup;
use crate::rng::{sample_cauchy, sample_pareto, sample_sas, RandomStream, RngError, StableParams};
use crate::stats::{tail_flatness, TailFit};
use crate::trunc::{
    exceed_prob, scaling_bn, truncation_factor, EstimateMethod, OvershootLaw, TailEstimate,
    TruncError, TruncationScheme, Z99,
};
use crate::SeqVec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("tail index must lie in (0, 2), got {0}")]
    BadAlpha(f64),
    #[error("Pareto scale x_m must be positive, got {0}")]
    BadScale(f64),
    #[error("coefficients a_k = c k^-r violate the summability condition Σ a_k^(α/2) < ∞: r·α/2 = {0} ≤ 1")]
    NotSummable(f64),
    #[error("coefficient scale must be positive, got {0}")]
    BadCoefficient(f64),
    #[error("exponent p must lie in (1, 2), got {0}")]
    BadP(f64),
    #[error("mixture constant K must be positive, got {0}")]
    BadKConst(f64),
    #[error("coordinate cap must be at least 1")]
    ZeroCap,
    #[error("mixture direction must be non-zero")]
    ZeroDirection,
    #[error("tail constant must be positive, got {0}")]
    BadTailConstant(f64),
    #[error("the exact tail past the cap needs one common truncation factor; use a zero overshoot or M_n ≥ {0}")]
    VaryingTailFactor(f64),
    #[error(transparent)]
    Vector(#[from] BanachError),
    #[error(transparent)]
    Stable(#[from] RngError),
}

fn default_sup() -> NormKind {
    NormKind::Sup
}

fn default_k_const() -> f64 {
    1.0
}

fn default_direction() -> Vec<(usize, f64)> {
    vec![(1, 1.0)]
}

fn default_true() -> bool {
    true
}

/// Description of the law of `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailModelSpec {
    ScalarPareto {
        alpha: f64,
        x_m: f64,
    },
    StableSeries {
        alpha: f64,
        coeff_c: f64,
        coeff_r: f64,
        cap: usize,
        #[serde(default = "default_sup")]
        norm: NormKind,
        /// `C` in `P(‖H‖ > x) ~ C x^{-α}`, when known from a prior fit.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_constant: Option<f64>,
    },
    RademacherCauchyMix {
        p: f64,
        #[serde(default = "default_k_const")]
        k_const: f64,
        #[serde(default = "default_direction")]
        direction: Vec<(usize, f64)>,
        cap: usize,
        /// Sample the supremum over coordinates beyond `cap` exactly instead of dropping them.
        #[serde(default = "default_true")]
        exact_tail: bool,
    },
}

impl TailModelSpec {
    pub fn build(&self) -> Result<HModel, ModelError> {
        let kind = match *self {
            TailModelSpec::ScalarPareto { alpha, x_m } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(ModelError::BadAlpha(alpha));
                }
                if !(x_m > 0.0 && x_m.is_finite()) {
                    return Err(ModelError::BadScale(x_m));
                }
                Kind::Pareto { alpha, x_m }
            }
            TailModelSpec::StableSeries {
                alpha,
                coeff_c,
                coeff_r,
                cap,
                norm,
                tail_constant,
            } => {
                if !(alpha > 0.0 && alpha < 2.0) {
                    return Err(ModelError::BadAlpha(alpha));
                }
                if let Some(c) = tail_constant {
                    if !(c > 0.0 && c.is_finite()) {
                        return Err(ModelError::BadTailConstant(c));
                    }
                }
                Kind::Series {
                    stable: StableParams::new(alpha)?,
                    coeffs: coefficients_example1(coeff_c, coeff_r, alpha, cap)?,
                    norm,
                }
            }
            TailModelSpec::RademacherCauchyMix {
                p,
                k_const,
                ref direction,
                cap,
                exact_tail,
            } => {
                let coeffs = coefficients_example2(p, k_const, cap)?;
                let direction = SparseSeq::from_pairs(cap, direction.clone())?;
                if direction.is_zero() {
                    return Err(ModelError::ZeroDirection);
                }
                let dir_norm = direction.norm(NormKind::Sup);
                Kind::Mix {
                    bounded_norm: coeffs[0],
                    coeffs,
                    direction,
                    dir_norm,
                    tail: exact_tail.then_some((k_const, p)),
                }
            }
        };
        Ok(HModel {
            spec: self.clone(),
            kind,
        })
    }
}

/// `a_k = c k^{-r}` for `k = 1..=cap`, rejected unless `r α / 2 > 1`.
pub fn coefficients_example1(
    c: f64,
    r: f64,
    alpha: f64,
    cap: usize,
) -> Result<Vec<f64>, ModelError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(ModelError::BadCoefficient(c));
    }
    if cap == 0 {
        return Err(ModelError::ZeroCap);
    }
    let index = r * alpha / 2.0;
    if !(index > 1.0) {
        return Err(ModelError::NotSummable(index));
    }
    Ok((1..=cap).map(|k| c * (k as f64).powf(-r)).collect())
}

/// `a_j = K (log(j ∨ 2))^{(1-p)/2}` for `j = 1..=cap`.
pub fn coefficients_example2(p: f64, k_const: f64, cap: usize) -> Result<Vec<f64>, ModelError> {
    if !(p > 1.0 && p < 2.0) {
        return Err(ModelError::BadP(p));
    }
    if !(k_const > 0.0 && k_const.is_finite()) {
        return Err(ModelError::BadKConst(k_const));
    }
    if cap == 0 {
        return Err(ModelError::ZeroCap);
    }
    let e = (1.0 - p) / 2.0;
    Ok((1..=cap)
        .map(|j| k_const * (j.max(2) as f64).ln().powf(e))
        .collect())
}

#[derive(Clone, Debug)]
enum Kind {
    Pareto {
        alpha: f64,
        x_m: f64,
    },
    Series {
        stable: StableParams,
        coeffs: Vec<f64>,
        norm: NormKind,
    },
    Mix {
        coeffs: Vec<f64>,
        bounded_norm: f64,
        direction: SeqVec,
        dir_norm: f64,
        /// `(K, p)` when the coordinates past the cap are kept
        tail: Option<(f64, f64)>,
    },
}

/// Result of one draw into a scratch buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    /// The whole scratch buffer holds the draw.
    Dense { norm: f64 },
    /// The draw is `coef · x` for the model's fixed direction `x`; scratch is untouched.
    OnDirection { coef: f64, norm: f64 },
}

impl Draw {
    pub fn norm(&self) -> f64 {
        match *self {
            Draw::Dense { norm } | Draw::OnDirection { norm, .. } => norm,
        }
    }
}

/// A validated model ready for sampling.
#[derive(Clone, Debug)]
pub struct HModel {
    spec: TailModelSpec,
    kind: Kind,
}

impl HModel {
    pub fn spec(&self) -> &TailModelSpec {
        &self.spec
    }

    pub fn cap(&self) -> usize {
        match &self.kind {
            Kind::Pareto { .. } => 1,
            Kind::Series { coeffs, .. } | Kind::Mix { coeffs, .. } => coeffs.len(),
        }
    }

    pub fn norm_kind(&self) -> NormKind {
        match &self.kind {
            Kind::Series { norm, .. } => *norm,
            _ => NormKind::Sup,
        }
    }

    /// Tail index of `‖H‖`.
    pub fn alpha(&self) -> f64 {
        match &self.kind {
            Kind::Pareto { alpha, .. } => *alpha,
            Kind::Series { stable, .. } => stable.alpha(),
            Kind::Mix { .. } => 1.0,
        }
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Pareto { .. } => None,
            Kind::Series { coeffs, .. } | Kind::Mix { coeffs, .. } => Some(coeffs),
        }
    }

    /// `C` with `P(‖H‖ > x) ~ C x^{-α}`: exact for the Pareto and mixture models,
    /// the configured value for stable series.
    pub fn tail_constant(&self) -> Option<f64> {
        match (&self.kind, &self.spec) {
            (Kind::Pareto { alpha, x_m }, _) => Some(x_m.powf(*alpha)),
            (Kind::Mix { dir_norm, .. }, _) => Some(dir_norm / PI),
            (Kind::Series { .. }, TailModelSpec::StableSeries { tail_constant, .. }) => {
                *tail_constant
            }
            _ => None,
        }
    }

    /// Exact `P(‖H‖ > m)` where a closed form exists.
    pub fn analytic_exceed(&self, m: f64) -> Option<f64> {
        match &self.kind {
            Kind::Pareto { alpha, x_m } => Some(if m < *x_m {
                1.0
            } else {
                (x_m / m).powf(*alpha)
            }),
            Kind::Mix {
                bounded_norm,
                dir_norm,
                ..
            } => {
                // ‖X‖ = a₁ deterministically; P(|S| > y) = (2/π) atan(1/y)
                let bounded = if *bounded_norm > m { 0.5 } else { 0.0 };
                Some(bounded + 0.5 * (2.0 / PI) * (dir_norm / m).atan())
            }
            Kind::Series { .. } => None,
        }
    }

    /// Monte-Carlo `P(‖H‖ > m)` with a 99% half-width.
    ///
    /// Sup-norm stable series use the coordinate product
    /// `1 - Π_k P(|T| ≤ m / a_k)` with the scalar law estimated from `reps`
    /// SαS draws; the half-width is the delta-method interval of that
    /// plug-in. Other models count exceedances over `reps` draws of `H`.
    pub fn mc_exceed(&self, m: f64, s: &RandomStream, reps: usize) -> TailEstimate {
        const CHUNK: usize = 1 << 16;
        let method = EstimateMethod::MonteCarlo { reps };
        if let Kind::Series {
            stable,
            coeffs,
            norm: NormKind::Sup,
        } = &self.kind
        {
            let a_max = coeffs.iter().cloned().fold(0.0, f64::max);
            let lowest = m / a_max;
            let mut big = Vec::new();
            for chunk in 0..reps.div_ceil(CHUNK) {
                let mut cs = s.split(chunk as u64);
                for _ in 0..CHUNK.min(reps - chunk * CHUNK) {
                    let t = sample_sas(stable, &mut cs).abs();
                    if t > lowest {
                        big.push(t);
                    }
                }
            }
            big.sort_by(f64::total_cmp);
            let nf = reps as f64;
            let q: Vec<f64> = coeffs
                .iter()
                .map(|&a| {
                    let tau = m / a;
                    (big.len() - big.partition_point(|&t| t <= tau)) as f64 / nf
                })
                .collect();
            let keep: f64 = q.iter().map(|qk| 1.0 - qk).product();
            let estimate = 1.0 - keep;
            // gradient of 1 - Π(1 - q_k) is Π_{i≠k}(1 - q_i); the plug-in is a mean of
            // Y_i = Σ_k g_k 1(|T_i| > m / a_k), so its variance is Var(Y) / N
            let grads: Vec<f64> = q
                .iter()
                .map(|qk| if *qk < 1.0 { keep / (1.0 - qk) } else { 0.0 })
                .collect();
            let (mut sum_y, mut sum_y2) = (0.0, 0.0);
            for &t in &big {
                let y: f64 = coeffs
                    .iter()
                    .zip(&grads)
                    .filter(|(&a, _)| t > m / a)
                    .map(|(_, g)| g)
                    .sum();
                sum_y += y;
                sum_y2 += y * y;
            }
            let var_y = (sum_y2 / nf - (sum_y / nf).powi(2)).max(0.0);
            let ci = if big.is_empty() {
                Z99 * Z99 / nf
            } else {
                Z99 * (var_y / nf).sqrt()
            };
            return TailEstimate {
                estimate,
                ci_halfwidth: ci,
                method,
            };
        }
        let mut scratch = vec![0.0; self.cap()];
        let mut hits = 0usize;
        for i in 0..reps {
            let mut hs = s.split(i as u64);
            if self.draw(&mut hs, &mut scratch).norm() > m {
                hits += 1;
            }
        }
        let p = hits as f64 / reps as f64;
        let ci = if hits == 0 || hits == reps {
            Z99 * Z99 / reps as f64
        } else {
            Z99 * (p * (1.0 - p) / reps as f64).sqrt()
        };
        TailEstimate {
            estimate: p,
            ci_halfwidth: ci,
            method,
        }
    }

    /// Draws one `H` into `scratch` (length `cap`).
    #[inline]
    pub fn draw(&self, s: &mut RandomStream, scratch: &mut [f64]) -> Draw {
        match &self.kind {
            Kind::Pareto { alpha, x_m } => {
                let x = sample_pareto(*alpha, *x_m, s);
                scratch[0] = if s.next_u64() >> 63 == 0 { x } else { -x };
                Draw::Dense { norm: x }
            }
            Kind::Series {
                stable,
                coeffs,
                norm,
            } => {
                let mut acc = 0.0f64;
                for (out, &a) in scratch.iter_mut().zip(coeffs) {
                    let v = a * sample_sas(stable, s);
                    *out = v;
                    acc = match norm {
                        NormKind::Sup => acc.max(v.abs()),
                        NormKind::L2 => acc + v * v,
                    };
                }
                let norm = match norm {
                    NormKind::Sup => acc,
                    NormKind::L2 => acc.sqrt(),
                };
                Draw::Dense { norm }
            }
            Kind::Mix {
                coeffs,
                bounded_norm,
                dir_norm,
                ..
            } => {
                if s.next_u64() >> 63 == 0 {
                    for (block, outs) in coeffs.chunks(64).zip(scratch.chunks_mut(64)) {
                        let mut bits = s.next_u64();
                        for (out, &a) in outs.iter_mut().zip(block) {
                            *out = if bits & 1 == 0 { a } else { -a };
                            bits >>= 1;
                        }
                    }
                    Draw::Dense {
                        norm: *bounded_norm,
                    }
                } else {
                    let c = sample_cauchy(s);
                    Draw::OnDirection {
                        coef: c,
                        norm: c.abs() * dir_norm,
                    }
                }
            }
        }
    }

    fn direction(&self) -> Option<&SeqVec> {
        match &self.kind {
            Kind::Mix { direction, .. } => Some(direction),
            _ => None,
        }
    }

    /// Adds `factor · draw` into the dense accumulator.
    #[inline]
    pub fn accumulate(&self, draw: Draw, factor: f64, scratch: &[f64], acc: &mut [f64]) {
        match draw {
            Draw::Dense { .. } => {
                for (a, x) in acc.iter_mut().zip(scratch) {
                    *a += factor * x;
                }
            }
            Draw::OnDirection { coef, .. } => {
                if let Some(dir) = self.direction() {
                    dir.add_into_dense(factor * coef, acc);
                }
            }
        }
    }

    pub fn sample_h(&self, s: &mut RandomStream) -> SeqVec {
        let mut scratch = vec![0.0; self.cap()];
        let draw = self.draw(s, &mut scratch);
        let mut out = vec![0.0; self.cap()];
        self.accumulate(draw, 1.0, &scratch, &mut out);
        SparseSeq::from_dense(&out).expect("finite draw")
    }

    /// Draws `reps` norms `‖H‖`, draw `i` from `s.split(i)`.
    pub fn sample_norms(&self, s: &RandomStream, reps: usize) -> Vec<f64> {
        let mut scratch = vec![0.0; self.cap()];
        (0..reps)
            .map(|i| self.draw(&mut s.split(i as u64), &mut scratch).norm())
            .collect()
    }
}

pub fn sample_h(model: &HModel, s: &mut RandomStream) -> SeqVec {
    model.sample_h(s)
}

/// What a row sum looks like beyond its stored coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RowStats {
    /// Number of draws the truncation map changed.
    pub truncated: usize,
    /// `sup_{j>cap} |S_n(j)|`; zero unless the model keeps its tail.
    pub beyond_cap_sup: f64,
}

impl RowStats {
    /// Norm of the full row sum given its first `cap` coordinates.
    pub fn norm(&self, acc: &[f64], kind: NormKind) -> f64 {
        match kind {
            NormKind::Sup => acc.iter().fold(self.beyond_cap_sup, |m, x| m.max(x.abs())),
            NormKind::L2 => {
                let sq: Vec<f64> = acc.iter().map(|x| x * x).collect();
                (crate::scalar::pairwise_sum(&sq) + self.beyond_cap_sup.powi(2)).sqrt()
            }
        }
    }
}

const BEYOND_CAP_CHILD: u64 = u64::MAX - 1;

/// Sums rows of `n` draws, truncated at a fixed level or not at all.
#[derive(Clone, Debug)]
pub struct RowSampler<'a> {
    model: &'a HModel,
    threshold: Option<f64>,
    overshoot: OvershootLaw,
}

impl<'a> RowSampler<'a> {
    pub fn truncated(
        model: &'a HModel,
        m_n: f64,
        overshoot: OvershootLaw,
    ) -> Result<Self, ModelError> {
        if let Kind::Mix {
            bounded_norm,
            tail: Some(_),
            ..
        } = &model.kind
        {
            if *bounded_norm > m_n && !overshoot.is_zero() {
                return Err(ModelError::VaryingTailFactor(*bounded_norm));
            }
        }
        Ok(Self {
            model,
            threshold: Some(m_n),
            overshoot,
        })
    }

    pub fn untruncated(model: &'a HModel) -> Self {
        Self {
            model,
            threshold: None,
            overshoot: OvershootLaw::Zero,
        }
    }

    pub fn model(&self) -> &HModel {
        self.model
    }

    /// Writes the first `cap` coordinates of the row sum into `acc` (overwritten).
    pub fn sum_into(
        &self,
        n: usize,
        s: &RandomStream,
        scratch: &mut [f64],
        acc: &mut [f64],
    ) -> RowStats {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut stats = RowStats::default();
        let (mut bounded_draws, mut bounded_factor) = (0usize, 1.0);
        for j in 0..n {
            let draw_stream = s.split(j as u64);
            let draw = self.model.draw(&mut draw_stream.split(0), scratch);
            let factor = match self.threshold {
                Some(m) if draw.norm() > m => {
                    stats.truncated += 1;
                    let l = self.overshoot.sample(&mut draw_stream.split(1));
                    truncation_factor(draw.norm(), m, l)
                }
                _ => 1.0,
            };
            if let Draw::Dense { .. } = draw {
                bounded_draws += 1;
                bounded_factor = factor;
            }
            self.model.accumulate(draw, factor, scratch, acc);
        }
        if let Kind::Mix {
            tail: Some((k_const, p)),
            coeffs,
            ..
        } = &self.model.kind
        {
            stats.beyond_cap_sup = sample_beyond_cap_sup(
                *k_const,
                (p - 1.0) / 2.0,
                coeffs.len(),
                bounded_draws,
                bounded_factor,
                &mut s.split(BEYOND_CAP_CHILD),
            );
        }
        stats
    }

    pub fn sample(&self, n: usize, s: &RandomStream) -> SeqVec {
        self.sample_with_stats(n, s).0
    }

    pub fn sample_with_stats(&self, n: usize, s: &RandomStream) -> (SeqVec, RowStats) {
        let cap = self.model.cap();
        let (mut scratch, mut acc) = (vec![0.0; cap], vec![0.0; cap]);
        let stats = self.sum_into(n, s, &mut scratch, &mut acc);
        (SparseSeq::from_dense(&acc).expect("finite row sum"), stats)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowSumSample {
    pub s_n: SeqVec,
    pub n: usize,
    pub m_n: f64,
    pub b_n_scale: f64,
}

/// Tail draws used to resolve `B_n` when the model has no exact tail.
pub const ROW_TAIL_REPS: usize = 1_000_000;
const ROW_TAIL_CHILD: u64 = u64::MAX;

/// One row sum `S_n` of truncated draws together with the `B_n` that normalizes it.
pub fn sample_truncated_row(
    model: &HModel,
    scheme: &TruncationScheme,
    n: usize,
    s: &RandomStream,
) -> Result<RowSumSample, TruncError> {
    let m_n = scheme.m_n(n);
    let p = exceed_prob(model, m_n, &s.split(ROW_TAIL_CHILD), ROW_TAIL_REPS)?;
    let s_n = RowSampler::truncated(model, m_n, scheme.overshoot)?.sample(n, s);
    Ok(RowSumSample {
        s_n,
        n,
        m_n,
        b_n_scale: scaling_bn(n, m_n, p.estimate),
    })
}

pub fn sample_row_untruncated(model: &HModel, n: usize, s: &RandomStream) -> SeqVec {
    RowSampler::untruncated(model).sample(n, s)
}

/// Size of what the coordinate cap leaves out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapBudget {
    pub cap: usize,
    /// `δ`: 1% of the median norm.
    pub delta: f64,
    /// Bound on `Σ_{k>cap} P(a_k |T_k| > δ)` (stable series).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neglected_tail_prob: Option<f64>,
    /// Sup norm of the omitted part of the bounded series (mixture).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neglected_sup: Option<f64>,
    /// Whether the stable-series bound is under the 1e-4 target.
    pub within_target: bool,
}

pub const CAP_BUDGET_TARGET: f64 = 1e-4;
// safety factor over the asymptotic stable tail constant
const TAIL_BOUND_SLACK: f64 = 2.0;

/// Error budget for the coordinate cap given the median of `‖H‖`.
pub fn cap_error_budget(model: &HModel, median_norm: f64) -> CapBudget {
    let delta = 0.01 * median_norm;
    match (&model.kind, &model.spec) {
        (
            Kind::Series { stable, coeffs, .. },
            TailModelSpec::StableSeries {
                coeff_c, coeff_r, ..
            },
        ) => {
            let alpha = stable.alpha();
            let cap = coeffs.len() as f64;
            let bound_c = TAIL_BOUND_SLACK * stable.two_sided_tail_constant();
            // Σ_{k>K} (c k^{-r})^α ≤ c^α ∫_K^∞ x^{-rα} dx
            let ra = coeff_r * alpha;
            let tail_sum = coeff_c.powf(alpha) * cap.powf(1.0 - ra) / (ra - 1.0);
            let prob = bound_c * tail_sum * delta.powf(-alpha);
            CapBudget {
                cap: coeffs.len(),
                delta,
                neglected_tail_prob: Some(prob),
                neglected_sup: None,
                within_target: prob < CAP_BUDGET_TARGET,
            }
        }
        (Kind::Mix { coeffs, tail, .. }, TailModelSpec::RademacherCauchyMix { p, k_const, .. }) => {
            // nothing is neglected when the tail is sampled exactly
            let next = match tail {
                Some(_) => 0.0,
                None => {
                    k_const
                        * ((coeffs.len() + 1).max(2) as f64)
                            .ln()
                            .powf((1.0 - p) / 2.0)
                }
            };
            CapBudget {
                cap: coeffs.len(),
                delta,
                neglected_tail_prob: None,
                neglected_sup: Some(next),
                within_target: tail.is_some(),
            }
        }
        _ => CapBudget {
            cap: 1,
            delta,
            neglected_tail_prob: Some(0.0),
            neglected_sup: None,
            within_target: true,
        },
    }
}

/// Fits `C` in `P(‖H‖ > x) ~ C x^{-α}` from `reps` norms at the 0.99–0.999 quantiles.
pub fn fit_tail_constant(
    model: &HModel,
    s: &RandomStream,
    reps: usize,
) -> Result<TailFit, TruncError> {
    if reps < 10 * crate::trunc::MIN_TAIL_REPS {
        return Err(TruncError::TooFewReplicates {
            reps,
            min: 10 * crate::trunc::MIN_TAIL_REPS,
        });
    }
    let mut norms = model.sample_norms(s, reps);
    Ok(tail_flatness(&mut norms, model.alpha(), 0.99, 0.999, 3))
}

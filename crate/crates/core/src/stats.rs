//! Test statistics: Gaussian CDF, Kolmogorov–Smirnov tests, moments and
//! tail diagnostics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{pairwise_sum, Real};
use crate::trunc::Z99;

/// Smallest sample for which the asymptotic Kolmogorov distribution is used.
pub const KS_MIN_SAMPLES: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("{n} samples given, at least {min} required")]
    TooFewSamples { n: usize, min: usize },
    #[error("reference CDF is not monotone or leaves [0, 1] at x = {0}")]
    NonMonotoneCdf(f64),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_eff: f64,
}

/// `Φ(x / √variance)`.
pub fn gaussian_cdf(x: f64, variance: f64) -> f64 {
    debug_assert!(variance > 0.0);
    0.5 * libm::erfc(-x / (2.0 * variance).sqrt())
}

const SERIES_EPS: f64 = 1e-10;

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi form, fast for small λ: P(K ≤ λ) = √(2π)/λ Σ exp(-(2k-1)²π²/(8λ²))
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..100 {
            let odd = (2 * k - 1) as f64;
            let term = (c * odd * odd).exp();
            sum += term;
            if term < SERIES_EPS {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < SERIES_EPS {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>, StatsError> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// `sup_x |F_n(x) - F(x)|` without any sample-size floor.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, StatsError> {
    let xs = sorted_finite(samples)?;
    let n = xs.len() as f64;
    let mut prev = 0.0f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) || f < prev {
            return Err(StatsError::NonMonotoneCdf(x));
        }
        prev = f;
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(hi - f).max(f - lo);
    }
    Ok(d)
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult, StatsError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            n: samples.len(),
            min: KS_MIN_SAMPLES,
        });
    }
    let d = ks_statistic(samples, cdf)?;
    let n = samples.len() as f64;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
        n_eff: n,
    })
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLES {
            return Err(StatsError::TooFewSamples {
                n: s.len(),
                min: KS_MIN_SAMPLES,
            });
        }
    }
    let (xs, ys) = (sorted_finite(a)?, sorted_finite(b)?);
    let (m, n) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        // step past every tie at x in both samples before comparing
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / m - j as f64 / n).abs());
    }
    let n_eff = m * n / (m + n);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n_eff.sqrt() * d),
        n_eff,
    })
}

/// `(1/N) Σ |x_i|^q`, pairwise summed.
pub fn empirical_moment<T: Real>(samples: &[T], q: T) -> T {
    debug_assert!(q > T::zero());
    let powers: Vec<T> = samples.iter().map(|x| x.abs().powf(q)).collect();
    pairwise_sum(&powers) / T::lit(samples.len() as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// z-score of a two-sided 95% normal interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Sample variance and the 95% half-width from its asymptotic variance `(m₄ - s⁴)/N`.
pub fn variance_with_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = sample_variance(xs);
    let q4: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let m4 = pairwise_sum(&q4) / n;
    (var, Z95 * ((m4 - var * var).max(0.0) / n).sqrt())
}

/// Mean with a 99% half-width.
pub fn mean_with_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    (mean(xs), Z99 * (sample_variance(xs) / n).sqrt())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

/// `(x - median) / IQR`, which removes location and scale before comparing shapes.
pub fn median_iqr_standardize(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let med = quantile_sorted(&s, 0.5);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let iqr = if iqr > 0.0 { iqr } else { 1.0 };
    xs.iter().map(|x| (x - med) / iqr).collect()
}

/// Binomial proportion with a 99% Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z99 * Z99;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z99 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Self {
            estimate: p,
            lower: (centre - half).max(0.0),
            upper: (centre + half).min(1.0),
        }
    }

    pub fn halfwidth(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }
}

/// `x^α · P̂(X > x)` evaluated along upper quantiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// `(x, x^α P̂(X > x))` pairs
    pub points: Vec<(f64, f64)>,
    /// Mean of the scaled tail values: the fitted constant.
    pub c_hat: f64,
    /// `max / min - 1` over the scaled tail values.
    pub flatness: f64,
}

/// Scaled empirical tail at `points` quantiles, log-spaced in exceedance
/// probability between `q_lo` and `q_hi`. Sorts `samples` in place.
pub fn tail_flatness(
    samples: &mut [f64],
    alpha: f64,
    q_lo: f64,
    q_hi: f64,
    points: usize,
) -> TailFit {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let (lp, hp) = ((1.0 - q_lo).ln(), (1.0 - q_hi).ln());
    let pts: Vec<(f64, f64)> = (0..points.max(2))
        .map(|i| {
            let t = i as f64 / (points.max(2) - 1) as f64;
            let q = 1.0 - (lp + t * (hp - lp)).exp();
            let x = quantile_sorted(samples, q);
            let above = samples.len() - samples.partition_point(|&v| v <= x);
            (x, x.powf(alpha) * above as f64 / n)
        })
        .collect();
    let vals: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    TailFit {
        c_hat: mean(&vals),
        flatness: hi / lo - 1.0,
        points: pts,
    }
}

/// Least-squares slope of `log P̂(X > x)` against `log x` over the top `top_frac` of the sample.
pub fn loglog_tail_slope(samples: &[f64], top_frac: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let n = s.len() as f64;
    let k = ((top_frac * n) as usize).min(s.len());
    let pts: Vec<(f64, f64)> = s[..k]
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| (x.ln(), ((i as f64 + 0.5) / n).ln()))
        .collect();
    let m = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / m,
        pts.iter().map(|p| p.1).sum::<f64>() / m,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn gaussian_cdf_reference_values() {
        assert_eq!(gaussian_cdf(0.0, 1.0), 0.5);
        assert!((gaussian_cdf(1.96, 1.0) - 0.975_002_1).abs() < 1e-6);
        assert!((gaussian_cdf(2.0, 4.0) - gaussian_cdf(1.0, 1.0)).abs() < 1e-15);
        let mut prev = 0.0;
        for i in -400..=400 {
            let v = gaussian_cdf(i as f64 / 50.0, 2.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn gaussian_cdf_against_quadrature() {
        // composite Simpson on the density from 0 to x, independent of erf
        let simpson = |x: f64| {
            let n = 20_000;
            let h = x / n as f64;
            let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mut s = pdf(0.0) + pdf(x);
            for i in 1..n {
                s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            0.5 + s * h / 3.0
        };
        for x in [0.3, 1.0, 1.96, 3.5, 6.0] {
            assert!((gaussian_cdf(x, 1.0) - simpson(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn kolmogorov_branches_agree() {
        // both series are valid everywhere; compare them across the switch point
        for lambda in [0.9, 1.0, 1.1, 1.18, 1.25, 1.4] {
            let mut alt = 0.0;
            for k in 1..100 {
                let kf = k as f64;
                alt +=
                    if k % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * kf * kf * lambda * lambda).exp();
            }
            assert!((kolmogorov_survival(lambda) - 2.0 * alt).abs() < 1e-9);
        }
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
        assert!(kolmogorov_survival(0.2) > 0.999_999);
    }

    #[test]
    fn ks_hand_cases() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        assert_eq!(ks_statistic(&[0.5], uniform).unwrap(), 0.5);
        let n = 999;
        let exact: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        assert!(ks_statistic(&exact, uniform).unwrap() <= 1.0 / (n + 1) as f64 + 1e-15);
        assert!(matches!(
            ks_one_sample(&[0.5; 10], uniform),
            Err(StatsError::TooFewSamples { .. })
        ));
        let bad = |x: f64| 1.0 - x.clamp(0.0, 1.0);
        assert!(matches!(
            ks_statistic(&[0.1, 0.2, 0.3], bad),
            Err(StatsError::NonMonotoneCdf(_))
        ));
        assert!(matches!(
            ks_statistic(&[f64::NAN], uniform),
            Err(StatsError::NonFinite)
        ));
    }

    #[test]
    fn ks_two_sample_extremes() {
        let a: Vec<f64> = (0..100).map(f64::from).collect();
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        assert_eq!(same.n_eff, 50.0);
        let b: Vec<f64> = (0..80).map(|i| 1000.0 + f64::from(i)).collect();
        assert_eq!(ks_two_sample(&a, &b).unwrap().statistic, 1.0);
        // heavy ties
        let t1 = vec![1.0; 60];
        let mut t2 = vec![1.0; 30];
        t2.extend(vec![2.0; 30]);
        assert!((ks_two_sample(&t1, &t2).unwrap().statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_one_sample_calibration() {
        let mut passes = 0;
        for seed in 0..100 {
            let mut s = RandomStream::new(1000 + seed);
            let xs: Vec<f64> = (0..10_000).map(|_| s.standard_normal()).collect();
            if ks_one_sample(&xs, |x| gaussian_cdf(x, 1.0))
                .unwrap()
                .p_value
                > 0.01
            {
                passes += 1;
            }
        }
        assert!(passes >= 98, "{passes}");
    }

    #[test]
    fn moments() {
        assert_eq!(empirical_moment(&[1.0, -1.0], 2.0), 1.0);
        assert_eq!(empirical_moment(&[0.0f64; 7], 1.5), 0.0);
        let mut s = RandomStream::new(31);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.standard_normal()).collect();
        let m1 = empirical_moment(&xs, 1.0);
        assert!(
            (m1 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.003,
            "{m1}"
        );
        let (v, ci) = variance_with_ci(&xs);
        assert!((v - 1.0).abs() < 2.0 * ci);
    }

    #[test]
    fn proportion_interval() {
        let p = Proportion::new(0, 2000);
        assert_eq!(p.estimate, 0.0);
        assert_eq!(p.lower, 0.0);
        assert!(p.upper > 0.0 && p.upper < 0.01);
        let q = Proportion::new(100, 2000);
        assert!(q.lower > 0.0 && q.lower < 0.05 && q.upper > 0.05);
    }

    #[test]
    fn quantiles_and_standardize() {
        let xs = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        let z = median_iqr_standardize(&xs);
        assert_eq!(z, vec![0.5, -1.0, 0.0, -0.5, 1.0]);
    }

    #[test]
    fn tail_flatness_on_exact_pareto() {
        let mut s = RandomStream::new(5);
        let mut xs: Vec<f64> = (0..1_000_000)
            .map(|_| crate::rng::sample_pareto(1.5, 2.0, &mut s))
            .collect();
        let fit = tail_flatness(&mut xs, 1.5, 0.99, 0.999, 5);
        // C = x_m^α
        assert!((fit.c_hat / 2f64.powf(1.5) - 1.0).abs() < 0.05, "{fit:?}");
        assert!(fit.flatness < 0.15);
        let slope = loglog_tail_slope(&xs, 0.1);
        assert!((slope + 1.5).abs() < 0.05, "{slope}");
    }
}

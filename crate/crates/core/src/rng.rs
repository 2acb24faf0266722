//! Seedable, splittable random streams and the scalar samplers built on them.
//!
//! A [`RandomStream`] is identified by a seed and a split path. The generator
//! state is a pure function of `(seed, path)`: the path is folded into a
//! 128-bit key with a SplitMix-style mixer and the key seeds a
//! xoshiro256++ generator. Splitting never touches the parent, so replicate
//! `j` of an experiment can be regenerated in isolation and on any thread.

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// second lane uses the Stafford variant-13 constants so the lanes decorrelate
#[inline]
fn mix64_alt(mut z: u64) -> u64 {
    z = (z ^ (z >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    z = (z ^ (z >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    z ^ (z >> 33)
}

type Path = SmallVec<[u64; 6]>;

/// Deterministic random stream addressed by `(seed, path)`.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    path: Path,
    key: [u64; 2],
    rng: Xoshiro256PlusPlus,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        let key = [
            mix64(seed ^ 0x6A09_E667_F3BC_C908),
            mix64_alt(seed.wrapping_add(0xBB67_AE85_84CA_A73B)),
        ];
        Self::with_key(seed, Path::new(), key)
    }

    /// Rebuilds the stream reached from `seed` by splitting along `path`.
    pub fn from_path(seed: u64, path: &[u64]) -> Self {
        path.iter()
            .fold(Self::new(seed), |s, &child| s.split(child))
    }

    fn with_key(seed: u64, path: Path, key: [u64; 2]) -> Self {
        let mut bytes = [0u8; 32];
        for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
            let i = i as u64;
            let word = mix64(key[0].wrapping_add(i.wrapping_mul(GOLDEN)))
                ^ mix64_alt(key[1] ^ i.wrapping_mul(0x3C6E_F372_FE94_F82B));
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            seed,
            path,
            key,
            rng: Xoshiro256PlusPlus::from_seed(bytes),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Child stream with `child_id` appended to the path. The parent is unaffected,
    /// and the child does not depend on how many draws the parent has made.
    pub fn split(&self, child_id: u64) -> RandomStream {
        let mut path = self.path.clone();
        path.push(child_id);
        let key = [
            mix64(self.key[0] ^ mix64(child_id ^ 0xA54F_F53A_5F1D_36F1)),
            mix64_alt(
                self.key[1].wrapping_add(mix64_alt(child_id.wrapping_add(0x510E_527F_ADE6_82D1))),
            ),
        ];
        Self::with_key(self.seed, path, key)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw strictly inside (0, 1). Exact zero (probability 2^-53) is rejected.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        loop {
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RngError {
    #[error("stable index alpha must lie in (0, 2], got {0}")]
    InvalidAlpha(f64),
}

/// Symmetric alpha-stable law with characteristic function `exp(-|θ|^α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StableParams {
    alpha: f64,
    inv_alpha: f64,
    // (1 - α) / α, the exponent on cos((1-α)θ) / W
    tail_exp: f64,
}

impl StableParams {
    pub fn new(alpha: f64) -> Result<Self, RngError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(RngError::InvalidAlpha(alpha));
        }
        Ok(Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            tail_exp: (1.0 - alpha) / alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Constant `C` with `P(|T| > x) ~ C x^{-α}`, i.e. `2 Γ(α) sin(πα/2) / π`.
    /// Zero at α = 2 where the tail is Gaussian.
    pub fn two_sided_tail_constant(&self) -> f64 {
        if self.alpha >= 2.0 {
            return 0.0;
        }
        2.0 * libm::tgamma(self.alpha) * (PI * self.alpha / 2.0).sin() / PI
    }
}

impl TryFrom<f64> for StableParams {
    type Error = RngError;
    fn try_from(alpha: f64) -> Result<Self, RngError> {
        Self::new(alpha)
    }
}

impl From<StableParams> for f64 {
    fn from(p: StableParams) -> f64 {
        p.alpha
    }
}

#[inline]
pub fn next_uniform(s: &mut RandomStream) -> f64 {
    s.next_uniform()
}

pub fn split_stream(s: &RandomStream, child_id: u64) -> RandomStream {
    s.split(child_id)
}

#[inline]
pub fn sample_rademacher(s: &mut RandomStream) -> f64 {
    if s.next_u64() >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One SαS draw by the Chambers–Mallows–Stuck transform in its symmetric form.
#[inline]
pub fn sample_sas(p: &StableParams, s: &mut RandomStream) -> f64 {
    let theta = PI * (s.next_uniform() - 0.5);
    if p.alpha == 1.0 {
        return theta.tan();
    }
    let w = s.exponential();
    let (sin_at, _) = (p.alpha * theta).sin_cos();
    let cos_t = theta.cos();
    let cos_rest = ((1.0 - p.alpha) * theta).cos();
    // sin(αθ) / cos(θ)^{1/α} * (cos((1-α)θ) / W)^{(1-α)/α}, evaluated in log space
    let log_mag = p.tail_exp * (cos_rest / w).ln() - p.inv_alpha * cos_t.ln();
    sin_at * log_mag.exp()
}

#[inline]
pub fn sample_cauchy(s: &mut RandomStream) -> f64 {
    (PI * (s.next_uniform() - 0.5)).tan()
}

/// Inverse-CDF map for `P(X > x) = (x_m / x)^α`.
#[inline]
pub fn pareto_from_uniform(u: f64, alpha: f64, x_m: f64) -> f64 {
    x_m * u.powf(-1.0 / alpha)
}

#[inline]
pub fn sample_pareto(alpha: f64, x_m: f64, s: &mut RandomStream) -> f64 {
    debug_assert!(alpha > 0.0 && x_m > 0.0);
    pareto_from_uniform(s.next_uniform(), alpha, x_m)
}

//! Truncated heavy-tailed random vectors in sequence spaces.
//!
//! Row sums of radially truncated draws, their normalizations, the empirical
//! spectral measure and the statistics used to compare row sums with their
//! Gaussian or stable limits.

pub mod banach;
pub mod beyond;
pub mod generators;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod trunc;

pub use banach::{NormKind, SparseSeq};
pub use generators::{HModel, RowSampler, RowStats, RowSumSample, TailModelSpec};
pub use rng::{RandomStream, StableParams};
pub use scalar::Real;
pub use spectral::{GaussLimitSpec, SpectralEstimate};
pub use stats::KsResult;
pub use trunc::{OvershootLaw, Regime, RegimeReport, TruncationScheme};

/// Double-precision sequence vector, the working type of every sampler.
pub type SeqVec = banach::SparseSeq<f64>;
/// Single-precision sequence vector.
pub type SeqVec32 = banach::SparseSeq<f32>;
pub type Functional = banach::Functional<f64>;
pub type Functional32 = banach::Functional<f32>;

//! Finite-support vectors in the sequence spaces c₀ (sup norm) and ℓ² (Euclidean norm).
//!
//! Coordinates are 1-based. A vector carries a `cap`, the largest index it may
//! hold; everything past the last stored coordinate is zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanachError {
    #[error("coordinate index {index} outside 1..={cap}")]
    IndexOutOfRange { index: usize, cap: usize },
    #[error("coordinate indices must be strictly increasing (saw {prev} then {next})")]
    NotIncreasing { prev: usize, next: usize },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("direction of the zero vector is undefined")]
    ZeroVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// sup norm, the c₀ models
    Sup,
    /// Euclidean norm, the type-2 (Hilbert) models
    L2,
}

/// Sparse sequence-space vector: strictly increasing `(index, value)` pairs, no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSeq<T> {
    coords: Vec<(usize, T)>,
    cap: usize,
}

impl<T: Real> SparseSeq<T> {
    pub fn zero(cap: usize) -> Self {
        Self {
            coords: Vec::new(),
            cap,
        }
    }

    /// The basis vector `e_k`.
    pub fn basis(k: usize, cap: usize) -> Result<Self, BanachError> {
        Self::from_pairs(cap, vec![(k, T::one())])
    }

    pub fn from_pairs(cap: usize, pairs: Vec<(usize, T)>) -> Result<Self, BanachError> {
        let mut prev = 0usize;
        for &(index, value) in &pairs {
            if index == 0 || index > cap {
                return Err(BanachError::IndexOutOfRange { index, cap });
            }
            if index <= prev {
                return Err(BanachError::NotIncreasing { prev, next: index });
            }
            if !value.is_finite() {
                return Err(BanachError::NonFinite { index });
            }
            prev = index;
        }
        let coords = pairs.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(Self { coords, cap })
    }

    /// Coordinate `i + 1` takes `dense[i]`; the cap is `dense.len()`.
    pub fn from_dense(dense: &[T]) -> Result<Self, BanachError> {
        let pairs = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, &v)| (i + 1, v))
            .collect();
        Self::from_pairs(dense.len(), pairs)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn coords(&self) -> &[(usize, T)] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, index: usize) -> T {
        self.coords
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.coords[pos].1)
            .unwrap_or_else(|_| T::zero())
    }

    /// Largest stored index, 0 for the zero vector.
    pub fn max_index(&self) -> usize {
        self.coords.last().map_or(0, |&(i, _)| i)
    }

    pub fn norm(&self, kind: NormKind) -> T {
        self.tail_norm(0, kind)
    }

    /// Norm of the coordinates past `k`: the quotient norm modulo `span(e_1, ..., e_k)`.
    pub fn tail_norm(&self, k: usize, kind: NormKind) -> T {
        let start = self.coords.partition_point(|&(i, _)| i <= k);
        let tail = &self.coords[start..];
        match kind {
            NormKind::Sup => tail.iter().fold(T::zero(), |m, &(_, v)| m.max(v.abs())),
            NormKind::L2 => {
                // scale by the largest entry so squares cannot overflow
                let big = tail.iter().fold(T::zero(), |m, &(_, v)| m.max(v.abs()));
                if big.is_zero() {
                    return T::zero();
                }
                let ss: T = tail.iter().map(|&(_, v)| (v / big) * (v / big)).sum();
                big * ss.sqrt()
            }
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        if a.is_zero() {
            return Self::zero(self.cap);
        }
        Self {
            coords: self
                .coords
                .iter()
                .map(|&(i, v)| (i, a * v))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
            cap: self.cap,
        }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-T::one())
    }

    /// `v / ‖v‖` under `kind`.
    pub fn direction(&self, kind: NormKind) -> Result<Self, BanachError> {
        let n = self.norm(kind);
        if n.is_zero() {
            return Err(BanachError::ZeroVector);
        }
        Ok(Self {
            coords: self.coords.iter().map(|&(i, v)| (i, v / n)).collect(),
            cap: self.cap,
        })
    }

    /// Writes coordinates into `out[index - 1]`; `out` must have length ≥ the largest index.
    pub fn add_into_dense(&self, a: T, out: &mut [T]) {
        for &(i, v) in &self.coords {
            out[i - 1] = out[i - 1] + a * v;
        }
    }
}

/// `a·v + w`, pruning coordinates that cancel. The result keeps `w`'s cap.
pub fn scale_add<T: Real>(
    a: T,
    v: &SparseSeq<T>,
    w: &SparseSeq<T>,
) -> Result<SparseSeq<T>, BanachError> {
    if v.max_index() > w.cap && !a.is_zero() {
        return Err(BanachError::IndexOutOfRange {
            index: v.max_index(),
            cap: w.cap,
        });
    }
    let mut out = Vec::with_capacity(v.coords.len() + w.coords.len());
    let (mut p, mut q) = (0, 0);
    let (vs, ws) = (&v.coords, &w.coords);
    while p < vs.len() || q < ws.len() {
        let next = match (vs.get(p), ws.get(q)) {
            (Some(&(i, x)), Some(&(j, y))) if i == j => {
                p += 1;
                q += 1;
                (i, a * x + y)
            }
            (Some(&(i, x)), Some(&(j, _))) if i < j => {
                p += 1;
                (i, a * x)
            }
            (Some(&(i, x)), None) => {
                p += 1;
                (i, a * x)
            }
            (_, Some(&(j, y))) => {
                q += 1;
                (j, y)
            }
            (None, None) => unreachable!(),
        };
        if !next.1.is_zero() {
            out.push(next);
        }
    }
    let out = SparseSeq {
        coords: out,
        cap: w.cap,
    };
    if let Some(&(index, _)) = out.coords.iter().find(|(_, v)| !v.is_finite()) {
        return Err(BanachError::NonFinite { index });
    }
    Ok(out)
}

/// Finite-support linear functional `f(v) = Σ w_i v_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional<T> {
    weights: SparseSeq<T>,
    kind: NormKind,
}

impl<T: Real> Functional<T> {
    pub fn new(weights: Vec<(usize, T)>, kind: NormKind) -> Result<Self, BanachError> {
        let cap = weights.iter().map(|&(i, _)| i).max().unwrap_or(0);
        Ok(Self {
            weights: SparseSeq::from_pairs(cap, weights)?,
            kind,
        })
    }

    /// Projection onto coordinate `k`.
    pub fn coordinate(k: usize, kind: NormKind) -> Self {
        Self::new(vec![(k, T::one())], kind).expect("k ≥ 1")
    }

    pub fn zero(kind: NormKind) -> Self {
        Self {
            weights: SparseSeq::zero(0),
            kind,
        }
    }

    pub fn weights(&self) -> &[(usize, T)] {
        self.weights.coords()
    }

    pub fn norm_kind(&self) -> NormKind {
        self.kind
    }

    /// Operator norm: ℓ¹ of the weights against the sup norm, ℓ² against the Euclidean norm.
    pub fn dual_norm(&self) -> T {
        match self.kind {
            NormKind::Sup => self.weights.coords().iter().map(|&(_, w)| w.abs()).sum(),
            NormKind::L2 => self.weights.norm(NormKind::L2),
        }
    }

    pub fn apply(&self, v: &SparseSeq<T>) -> T {
        let (ws, vs) = (self.weights.coords(), v.coords());
        let (mut p, mut q) = (0, 0);
        let mut acc = T::zero();
        while p < ws.len() && q < vs.len() {
            match ws[p].0.cmp(&vs[q].0) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc = acc + ws[p].1 * vs[q].1;
                    p += 1;
                    q += 1;
                }
            }
        }
        acc
    }

    /// Evaluates against a dense buffer where `dense[i]` is coordinate `i + 1`.
    pub fn apply_dense(&self, dense: &[T]) -> T {
        self.weights
            .coords()
            .iter()
            .filter(|&&(i, _)| i <= dense.len())
            .fold(T::zero(), |acc, &(i, w)| acc + w * dense[i - 1])
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            weights: self.weights.scaled(c),
            kind: self.kind,
        }
    }
}

pub fn norm<T: Real>(v: &SparseSeq<T>, kind: NormKind) -> T {
    v.norm(kind)
}

pub fn tail_norm<T: Real>(v: &SparseSeq<T>, k: usize, kind: NormKind) -> T {
    v.tail_norm(k, kind)
}

pub fn apply_functional<T: Real>(f: &Functional<T>, v: &SparseSeq<T>) -> T {
    f.apply(v)
}

pub fn direction<T: Real>(v: &SparseSeq<T>, kind: NormKind) -> Result<SparseSeq<T>, BanachError> {
    v.direction(kind)
}

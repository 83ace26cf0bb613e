//! Block l1/l2 interpolation norm, the K-interpolation norm and the
//! rearrangements they are built on.
//!
//! Index sets are 0-based. Rearrangements sort by magnitude, descending, and
//! break ties by ascending original index, so every partition is
//! deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{l2, linf};

/// Magnitudes of `x` in non-increasing order together with the permutation
/// that produces them: `magnitudes[i] == x[perm[i]].abs()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    pub magnitudes: Vec<f64>,
    pub permutation: Vec<usize>,
}

pub fn decreasing_rearrangement(x: &[f64]) -> Rearrangement {
    let mut permutation: Vec<usize> = (0..x.len()).collect();
    // stable: equal magnitudes keep ascending index order
    permutation.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    let magnitudes = permutation.iter().map(|&i| x[i].abs()).collect();
    Rearrangement { magnitudes, permutation }
}

/// The s-block decreasing rearrangement: consecutive groups of `s` indices
/// taken in decreasing-magnitude order. The last block holds the remainder
/// `n mod s` when `s` does not divide `n`; empty blocks are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub s: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// l1 norm of `x` restricted to each block.
    pub fn block_l1(&self, x: &[f64]) -> Vec<f64> {
        self.blocks.iter().map(|b| b.iter().map(|&i| x[i].abs()).sum()).collect()
    }
}

fn check_block_size(n: usize, s: usize) -> Result<()> {
    if s < 1 || s > n {
        return Err(Error::InvalidBlockSize { s, n });
    }
    Ok(())
}

pub fn block_partition(x: &[f64], s: usize) -> Result<BlockPartition> {
    check_block_size(x.len(), s)?;
    let r = decreasing_rearrangement(x);
    let blocks = r.permutation.chunks(s).map(<[usize]>::to_vec).collect();
    Ok(BlockPartition { s, blocks })
}

/// Per-block l1 norms of the s-block decreasing rearrangement, summed in
/// decreasing-magnitude order.
pub fn block_l1_norms(x: &[f64], s: usize) -> Result<Vec<f64>> {
    check_block_size(x.len(), s)?;
    let r = decreasing_rearrangement(x);
    Ok(r.magnitudes.chunks(s).map(|c| c.iter().sum()).collect())
}

/// `‖x‖_{1,2,s}`: the Euclidean norm of the vector of per-block l1 norms.
pub fn block_norm(x: &[f64], s: usize) -> Result<f64> {
    Ok(l2(&block_l1_norms(x, s)?))
}

/// Number of head entries used by `K(x, t)`: `⌊t²⌋`, where `t²` within a
/// few ulps of an integer counts as that integer (so `t = √s` gives `s`).
pub fn k_head_len(t: f64) -> usize {
    let t2 = t * t;
    let r = t2.round();
    if (t2 - r).abs() <= 8.0 * f64::EPSILON * r.max(1.0) {
        r as usize
    } else {
        t2.floor() as usize
    }
}

/// `K(x, t)`: sum of the `⌊t²⌋` largest magnitudes plus `t` times the
/// Euclidean norm of the rest.
pub fn k_interp_norm(x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("K-norm parameter t must be positive, got {t}")));
    }
    let r = decreasing_rearrangement(x);
    let head = k_head_len(t).min(x.len());
    let head_sum: f64 = r.magnitudes[..head].iter().sum();
    let tail = l2(&r.magnitudes[head..]);
    Ok(head_sum + t * tail)
}

/// `‖v‖₁/√k + (√k/4)(max|vᵢ| − min|vᵢ|) − ‖v‖₂`, which is never negative.
pub fn norm_inequality_slack(v: &[f64]) -> f64 {
    let k = v.len() as f64;
    let min = v.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let max = linf(v);
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    l1 / k.sqrt() + k.sqrt() / 4.0 * (max - min) - l2(v)
}

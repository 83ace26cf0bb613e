//! Balls into bins.
//!
//! `m = d·s` balls go into `m` bins, `d` per round for `s` rounds. Without
//! replacement a round is exactly one column of a [`SparseBinaryMask`]
//! (same seed, same substreams), so a trace describes how the first `s`
//! columns of that mask overlap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{rowsum_on, BoundReport};
use crate::error::{Error, Result};
use crate::rng::StreamFamily;
use crate::sketch::{mask_apply_l1, sample_subset, SparseBinaryMask};

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Per-round occupancy statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsTrace {
    pub m: usize,
    pub d: usize,
    pub s: usize,
    pub replacement: bool,
    /// `q[k-1]`: fraction of bins still empty after `k` rounds.
    pub q: Vec<f64>,
    /// `f[k-1]`: fraction (over `m`) of the first `dk` balls that landed in
    /// an occupied bin, i.e. `q_k − (1 − k/s)`.
    pub f: Vec<f64>,
}

pub fn simulate_bins(m: usize, d: usize, s: usize, replacement: bool, seed: u64) -> Result<BinsTrace> {
    if d == 0 || s == 0 || m != d * s {
        return Err(Error::invalid(format!("need m = d*s, got m = {m}, d = {d}, s = {s}")));
    }
    let family = StreamFamily::new(seed, if replacement { "bins-replace" } else { "mask" });
    let mut occupied = vec![false; m];
    let mut filled = 0usize;
    let mut round = vec![0u32; d];
    let mut q = Vec::with_capacity(s);
    let mut f = Vec::with_capacity(s);
    for k in 0..s {
        let mut rng = family.stream(k as u64);
        if replacement {
            for slot in round.iter_mut() {
                *slot = rng.random_range(0..m) as u32;
            }
        } else {
            sample_subset(&mut rng, m, d, &mut round);
        }
        for &b in &round {
            let b = b as usize;
            if !occupied[b] {
                occupied[b] = true;
                filled += 1;
            }
        }
        let balls = d * (k + 1);
        q.push((m - filled) as f64 / m as f64);
        f.push((balls - filled) as f64 / m as f64);
    }
    Ok(BinsTrace { m, d, s, replacement, q, f })
}

/// `E q_k = (1 − 1/m)^{dk}` for the with-replacement process.
pub fn q_expectation(m: usize, d: usize, k: usize) -> f64 {
    (1.0 - 1.0 / m as f64).powf((d * k) as f64)
}

/// `exp(−k/s) + ε√(k/s)`.
pub fn q_bound(k: usize, s: usize, eps: f64) -> f64 {
    let u = k as f64 / s as f64;
    (-u).exp() + eps * u.sqrt()
}

/// `(k/s)e⁻¹ + ε√(k/s)`.
pub fn f_bound(k: usize, s: usize, eps: f64) -> f64 {
    let u = k as f64 / s as f64;
    u * INV_E + eps * u.sqrt()
}

/// `2s·exp(−ε²m/2)`, clamped to 1.
pub fn bins_failure_bound(s: usize, m: usize, eps: f64) -> f64 {
    (2.0 * s as f64 * (-eps * eps * m as f64 / 2.0).exp()).min(1.0)
}

/// Whether any round of `trace` exceeds `q_bound`.
pub fn violates_q_bound(trace: &BinsTrace, eps: f64) -> bool {
    trace.q.iter().enumerate().any(|(i, &q)| q > q_bound(i + 1, trace.s, eps))
}

fn check_support(mask: &SparseBinaryMask, support: &[usize]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(support.len());
    for &k in support {
        if k >= mask.n() {
            return Err(Error::Precondition(format!("support index {k} outside 0..{}", mask.n())));
        }
        if !seen.insert(k) {
            return Err(Error::Precondition(format!("support index {k} repeated")));
        }
    }
    Ok(())
}

/// Collision flags for the nonzeros of the columns in `support`, processed
/// in the given order: a nonzero collides if an earlier column of the
/// support has a nonzero in the same row.
fn collision_counts(mask: &SparseBinaryMask, support: &[usize]) -> Vec<usize> {
    let mut occupied = vec![false; mask.m()];
    let mut counts = Vec::with_capacity(support.len());
    for &k in support {
        let col = mask.column(k);
        counts.push(col.iter().filter(|&&r| occupied[r as usize]).count());
        for &r in col {
            occupied[r as usize] = true;
        }
    }
    counts
}

/// `|C_s|`: number of colliding nonzeros when the columns of `support` are
/// processed in order.
pub fn count_collisions(mask: &SparseBinaryMask, support: &[usize]) -> Result<usize> {
    check_support(mask, support)?;
    Ok(collision_counts(mask, support).iter().sum())
}

/// `Σ_{(j,k) ∈ C_s} |z_k|`.
pub fn collision_mass(mask: &SparseBinaryMask, z: &[f64], support: &[usize]) -> Result<f64> {
    check_support(mask, support)?;
    Ok(collision_counts(mask, support).iter().zip(support).map(|(&c, &k)| c as f64 * z[k].abs()).sum())
}

/// Both lower-bound checks for an s-sparse `z` with ordered support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseLowerReport {
    /// `d(1 − 2e⁻¹ − 2ε)‖z‖₁ ≤ ‖Az‖₁`.
    pub mask_l1: BoundReport,
    /// `d(1 − e⁻¹ − ε)‖z‖₁ ≤ Σ_j (Σ_k a_{j,k} z_k²)^{1/2}`.
    pub rowsum: BoundReport,
}

/// Evaluates the high-probability lower bounds for `z` supported on
/// `support`, given in non-increasing magnitude order. A violated bound is
/// reported, not raised.
pub fn sparse_lower_certificate(
    mask: &SparseBinaryMask,
    z: &[f64],
    support: &[usize],
    eps: f64,
) -> Result<SparseLowerReport> {
    crate::signal::check_len(z, mask.n())?;
    check_support(mask, support)?;
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be nonnegative, got {eps}")));
    }
    let mut in_support = vec![false; z.len()];
    for &k in support {
        in_support[k] = true;
    }
    if let Some(k) = (0..z.len()).find(|&k| !in_support[k] && z[k] != 0.0) {
        return Err(Error::Precondition(format!("z has a nonzero at {k} outside the support")));
    }
    if support.windows(2).any(|w| z[w[0]].abs() < z[w[1]].abs()) {
        return Err(Error::Precondition("support is not in non-increasing magnitude order".into()));
    }
    let d = mask.d() as f64;
    let z1: f64 = support.iter().map(|&k| z[k].abs()).sum();
    Ok(SparseLowerReport {
        mask_l1: BoundReport::new(d * (1.0 - 2.0 * INV_E - 2.0 * eps) * z1, mask_apply_l1(mask, z)?),
        rowsum: BoundReport::new(d * (1.0 - INV_E - eps) * z1, rowsum_on(mask, z, support)?),
    })
}

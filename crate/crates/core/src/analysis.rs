//! Closed-form expectations, deterministic bound certificates and tail
//! bounds for the composite embedding.
//!
//! The central quantity is the row sum `Σ_j (Σ_k a_{j,k} x_k²)^{1/2}`: the
//! conditional expectation of `‖(A ∘ G) x‖₁` over the Gaussian fill is
//! `β₀` times it, and every certificate here bounds it from one side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{block_norm, block_partition, k_interp_norm};
use crate::signal::{check_len, l1};
use crate::sketch::{SparseBinaryMask, BETA0};

/// `√2.625`; documented decimal cap is 1.63.
pub const UPPER_CONSTANT: f64 = 1.620_185_174_601_965;

/// Outcome of checking `quantity ≤ bound`.
///
/// Every certificate is phrased as "left side ≤ right side"; `quantity` is
/// the left side, `bound` the right side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub quantity: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(quantity: f64, bound: f64) -> Self {
        let slack = bound - quantity;
        let satisfied = slack >= -1e-9 * bound.abs().max(1.0);
        BoundReport { quantity, bound, slack, satisfied }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Sum of squares of `x` over each row's support.
fn row_energies(mask: &SparseBinaryMask, x: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; mask.m()];
    for (col, &xk) in mask.columns().zip(x) {
        let sq = xk * xk;
        for &r in col {
            acc[r as usize] += sq;
        }
    }
    acc
}

/// `Σ_j (Σ_k a_{j,k} x_k²)^{1/2}`.
pub fn rowsum(mask: &SparseBinaryMask, x: &[f64]) -> Result<f64> {
    check_len(x, mask.n())?;
    Ok(row_energies(mask, x).iter().map(|e| e.sqrt()).sum())
}

/// Row sum restricted to the columns in `support`.
pub fn rowsum_on(mask: &SparseBinaryMask, x: &[f64], support: &[usize]) -> Result<f64> {
    check_len(x, mask.n())?;
    let mut acc = vec![0.0; mask.m()];
    for &k in support {
        if k >= mask.n() {
            return Err(Error::Precondition(format!("support index {k} out of range")));
        }
        let sq = x[k] * x[k];
        for &r in mask.column(k) {
            acc[r as usize] += sq;
        }
    }
    Ok(acc.iter().map(|e| e.sqrt()).sum())
}

/// `E_G ‖(A ∘ G) x‖₁ = β₀ · rowsum(A, x)`: each row of `(A ∘ G) x` is a
/// centred Gaussian and its absolute value is half-normal.
pub fn conditional_expectation(mask: &SparseBinaryMask, x: &[f64]) -> Result<f64> {
    Ok(BETA0 * rowsum(mask, x)?)
}

fn check_ones_per_column(mask: &SparseBinaryMask, s: usize) -> Result<()> {
    let m = mask.m();
    if s == 0 || !m.is_multiple_of(s) {
        return Err(Error::invalid(format!("m = {m} is not a multiple of s = {s}")));
    }
    if mask.d() != m / s {
        return Err(Error::invalid(format!("mask has d = {} ones per column, need m/s = {}", mask.d(), m / s)));
    }
    Ok(())
}

/// `rowsum(A, x) ≤ √2.625 · d · ‖x‖_{1,2,s}` for any mask with `d = m/s`
/// ones per column. Holds deterministically.
pub fn upper_certificate(mask: &SparseBinaryMask, x: &[f64], s: usize) -> Result<BoundReport> {
    check_ones_per_column(mask, s)?;
    let q = rowsum(mask, x)?;
    let bound = UPPER_CONSTANT * mask.d() as f64 * block_norm(x, s)?;
    Ok(BoundReport::new(q, bound))
}

/// `rowsum(A, x)/d ≤ K(x, √s)`. Holds deterministically.
pub fn k_bound_certificate(mask: &SparseBinaryMask, x: &[f64], s: usize) -> Result<BoundReport> {
    check_ones_per_column(mask, s)?;
    let q = rowsum(mask, x)? / mask.d() as f64;
    let bound = k_interp_norm(x, (s as f64).sqrt())?;
    Ok(BoundReport::new(q, bound))
}

/// Aggregation step from per-block lower bounds to a block-norm lower
/// bound.
///
/// `per_block` holds the row sums over each block `S_ℓ` of the s-block
/// decreasing rearrangement. The report checks
/// `d(1−γ)·‖x‖_{1,2,s} ≤ ‖per_block‖₂`; the Euclidean norm of the per-block
/// row sums is itself at most the full row sum by the triangle inequality.
pub fn blockwise_lower_combine(per_block: &[f64], gamma: f64, d: usize, block_norm_value: f64) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let lower = d as f64 * (1.0 - gamma) * block_norm_value;
    Ok(BoundReport::new(lower, crate::signal::l2(per_block)))
}

/// Full evaluation of the block-aggregation argument for a given mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjacencyCertificate {
    pub gamma: f64,
    /// `d(1−γ)‖x_{S_ℓ}‖₁ ≤ rowsum over S_ℓ`, one per block.
    pub per_block: Vec<BoundReport>,
    /// `‖(rowsum over S_ℓ)_ℓ‖₂ ≤ rowsum(A, x)`.
    pub aggregation: BoundReport,
    /// `d(1−γ)‖x‖_{1,2,s} ≤ rowsum(A, x)`.
    pub combined: BoundReport,
}

/// Smallest `γ ∈ [0,1]` for which every per-block hypothesis holds.
pub fn measured_gamma(mask: &SparseBinaryMask, x: &[f64], s: usize) -> Result<f64> {
    let p = block_partition(x, s)?;
    let d = mask.d() as f64;
    let mut gamma: f64 = 0.0;
    for b in &p.blocks {
        let norm: f64 = b.iter().map(|&i| x[i].abs()).sum();
        if norm == 0.0 {
            continue;
        }
        let rs = rowsum_on(mask, x, b)?;
        gamma = gamma.max(1.0 - rs / (d * norm));
    }
    Ok(gamma.clamp(0.0, 1.0))
}

pub fn adjacency_certificate(mask: &SparseBinaryMask, x: &[f64], s: usize, gamma: f64) -> Result<AdjacencyCertificate> {
    check_len(x, mask.n())?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let p = block_partition(x, s)?;
    let d = mask.d();
    let mut per_block_sums = Vec::with_capacity(p.len());
    let mut per_block = Vec::with_capacity(p.len());
    for b in &p.blocks {
        let rs = rowsum_on(mask, x, b)?;
        let xl1: f64 = b.iter().map(|&i| x[i].abs()).sum();
        per_block.push(BoundReport::new(d as f64 * (1.0 - gamma) * xl1, rs));
        per_block_sums.push(rs);
    }
    let total = rowsum(mask, x)?;
    let aggregated = blockwise_lower_combine(&per_block_sums, gamma, d, block_norm(x, s)?)?;
    Ok(AdjacencyCertificate {
        gamma,
        per_block,
        aggregation: BoundReport::new(aggregated.bound, total),
        combined: BoundReport::new(aggregated.quantity, total),
    })
}

/// `min(1, 2·exp(−λ² d / (2‖x‖₂²)))`: tail bound for
/// `|‖Φx‖₁ − E_G‖Φx‖₁| / d ≥ λ`.
pub fn halfnormal_tail_bound(lambda: f64, d: usize, l2norm: f64) -> Result<f64> {
    if !(l2norm > 0.0) {
        return Err(Error::invalid(format!("l2 norm must be positive, got {l2norm}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    if d < 1 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let raw = 2.0 * (-lambda * lambda * d as f64 / (2.0 * l2norm * l2norm)).exp();
    Ok(raw.min(1.0))
}

/// Failure probability of the distortion window for one fixed signal:
/// `4n·exp(−ε²m/8) + 2·exp(−ε²β₀²(m/(8s))·ratio²)`, clamped to 1, where
/// `ratio = ‖x‖_{1,2,s}/‖x‖₂`.
pub fn theorem_failure_bound(n: usize, m: usize, s: usize, eps: f64, ratio: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(ratio >= 1.0) {
        return Err(Error::invalid(format!("norm ratio must be >= 1, got {ratio}")));
    }
    if n == 0 || s == 0 || m == 0 || !m.is_multiple_of(s) {
        return Err(Error::invalid(format!("need n, m, s >= 1 and s | m (n = {n}, m = {m}, s = {s})")));
    }
    let (mf, sf) = (m as f64, s as f64);
    let first = 4.0 * n as f64 * (-eps * eps * mf / 8.0).exp();
    let second = 2.0 * (-eps * eps * BETA0 * BETA0 * (mf / (8.0 * sf)) * ratio * ratio).exp();
    Ok((first + second).min(1.0))
}

/// `‖x‖_{1,2,s} / ‖x‖₂`.
pub fn norm_ratio(x: &[f64], s: usize) -> Result<f64> {
    let l2 = crate::signal::l2(x);
    if l2 == 0.0 {
        return Err(Error::invalid("norm ratio undefined for the zero vector"));
    }
    Ok((block_norm(x, s)? / l2).max(1.0))
}

/// Largest single-coordinate contribution `max_k d|x_k|`, a lower bound on
/// the row sum.
pub fn rowsum_floor(mask: &SparseBinaryMask, x: &[f64]) -> Result<f64> {
    check_len(x, mask.n())?;
    let m = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(mask.d() as f64 * m)
}

/// `d·‖x‖₁`, the row sum of a mask with one nonzero per row on `supp x`.
pub fn ideal_rowsum(d: usize, x: &[f64]) -> f64 {
    d as f64 * l1(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sketch::{CompositeEmbedding, FillKind};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::sync::Arc;

    fn mask_from_1based(m: usize, cols: &[&[usize]]) -> SparseBinaryMask {
        let cols: Vec<Vec<usize>> = cols.iter().map(|c| c.iter().map(|r| r - 1).collect()).collect();
        SparseBinaryMask::from_columns(m, &cols).unwrap()
    }

    const _: () = assert!(UPPER_CONSTANT <= 1.63);

    #[test]
    fn constant_is_sqrt_2_625() {
        assert_eq!(UPPER_CONSTANT, 2.625f64.sqrt());
    }

    #[test]
    fn report_orientation() {
        let r = BoundReport::new(1.0, 2.0);
        assert!(r.satisfied);
        assert_eq!(r.slack, 1.0);
        assert!(!BoundReport::new(2.0, 1.0).satisfied);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["quantity", "bound", "slack", "satisfied"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn rowsum_examples() {
        let mask = SparseBinaryMask::sample(12, 6, 4, 1).unwrap();
        let mut x = vec![0.0; 6];
        x[2] = -2.5;
        assert_eq!(rowsum(&mask, &x).unwrap(), 4.0 * 2.5);

        let mask = mask_from_1based(2, &[&[1], &[1]]);
        assert_eq!(rowsum(&mask, &[3.0, 4.0]).unwrap(), 5.0);
        let ce = conditional_expectation(&mask, &[3.0, 4.0]).unwrap();
        assert_relative_eq!(ce, 3.989_422_8, max_relative = 1e-7);

        // one nonzero per row over the support: rowsum = d‖x‖₁
        let mask = mask_from_1based(4, &[&[1, 2], &[3, 4], &[1, 3]]);
        let x = [1.5, -0.5, 0.0];
        assert_eq!(rowsum(&mask, &x).unwrap(), ideal_rowsum(2, &x));
        assert!(rowsum(&mask, &[1.0]).is_err());
    }

    #[test]
    fn upper_certificate_examples() {
        let mask = SparseBinaryMask::sample(20, 30, 4, 9).unwrap();
        let mut e1 = vec![0.0; 30];
        e1[0] = 1.0;
        let r = upper_certificate(&mask, &e1, 5).unwrap();
        assert_eq!(r.quantity, 4.0);
        assert_relative_eq!(r.bound, UPPER_CONSTANT * 4.0, max_relative = 1e-15);
        assert!(r.satisfied);

        // s = 2, d = 2, m = 4; the support {0, 1} hits each row once
        let mask = mask_from_1based(4, &[&[1, 2], &[3, 4], &[1, 3], &[2, 4]]);
        let x = [2.0, 1.0, 0.0, 0.0];
        let r = upper_certificate(&mask, &x, 2).unwrap();
        assert_eq!(r.quantity, 6.0);
        assert_relative_eq!(r.slack, (UPPER_CONSTANT - 1.0) * 6.0, max_relative = 1e-12);

        assert!(upper_certificate(&mask, &x, 3).is_err());
        assert!(upper_certificate(&mask, &x, 4).is_err());
    }

    #[test]
    fn k_certificate_examples() {
        let mask = SparseBinaryMask::sample(20, 30, 4, 9).unwrap();
        let mut e1 = vec![0.0; 30];
        e1[3] = 1.0;
        let r = k_bound_certificate(&mask, &e1, 5).unwrap();
        assert_eq!((r.quantity, r.bound), (1.0, 1.0));
        assert!(r.satisfied);

        let mut x = vec![0.0; 30];
        x[..5].copy_from_slice(&[1.0, -2.0, 3.0, 0.5, 4.0]);
        let r = k_bound_certificate(&mask, &x, 5).unwrap();
        assert_eq!(r.bound, l1(&x));
        assert!(r.quantity <= l1(&x));
    }

    #[test]
    fn certificates_hold_on_random_instances() {
        let mut rng = rng::stream(31, "cert", 0);
        for _ in 0..2_000 {
            let s = rng.random_range(1..=8usize);
            let n = rng.random_range(s..=40usize);
            let d = rng.random_range(1..=6usize);
            let mask = SparseBinaryMask::sample(d * s, n, d, rng.random()).unwrap();
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    if rng.random_bool(0.3) {
                        0.0
                    } else {
                        g * 10f64.powf(rng.random_range(-2.0..2.0))
                    }
                })
                .collect();
            assert!(upper_certificate(&mask, &x, s).unwrap().satisfied);
            assert!(k_bound_certificate(&mask, &x, s).unwrap().satisfied);
        }
    }

    #[test]
    fn blockwise_combine_examples() {
        // single block: the per-block inequality itself
        let r = blockwise_lower_combine(&[7.0], 0.25, 4, 2.0).unwrap();
        assert_eq!((r.quantity, r.bound), (6.0, 7.0));
        let r = blockwise_lower_combine(&[0.5, 0.25], 1.0, 9, 100.0).unwrap();
        assert_eq!(r.quantity, 0.0);
        assert!(r.satisfied);
        assert!(blockwise_lower_combine(&[1.0], 1.5, 1, 1.0).is_err());
        assert!(blockwise_lower_combine(&[1.0], -0.1, 1, 1.0).is_err());
    }

    #[test]
    fn adjacency_with_measured_gamma() {
        let mut rng = rng::stream(4, "adj", 0);
        for t in 0..200 {
            let (n, s, d) = (60, 6, 5);
            let mask = SparseBinaryMask::sample(d * s, n, d, t).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let gamma = measured_gamma(&mask, &x, s).unwrap();
            let cert = adjacency_certificate(&mask, &x, s, gamma).unwrap();
            assert!(cert.per_block.iter().all(|r| r.satisfied));
            assert!(cert.aggregation.satisfied);
            assert!(cert.combined.satisfied);
        }
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(halfnormal_tail_bound(0.0, 5, 1.0).unwrap(), 1.0);
        let v = halfnormal_tail_bound(3.0, 2, 3.0).unwrap();
        assert_relative_eq!(v, 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.735_758_88, max_relative = 1e-8);
        assert!(halfnormal_tail_bound(1.0, 2, 0.0).is_err());
        let mut prev = 1.0;
        for i in 1..50 {
            let b = halfnormal_tail_bound(i as f64 * 0.2, 3, 1.0).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        assert!(halfnormal_tail_bound(1.0, 20, 1.0).unwrap() < halfnormal_tail_bound(1.0, 10, 1.0).unwrap());
    }

    #[test]
    fn theorem_bound_examples() {
        assert_eq!(theorem_failure_bound(1000, 200, 10, 1e-6, 3.0).unwrap(), 1.0);
        let b = theorem_failure_bound(1000, 200, 10, 1.0, 10f64.sqrt()).unwrap();
        let first = 4000.0 * (-25.0f64).exp();
        let second = 2.0 * (-(2.0 / std::f64::consts::PI) * (200.0 / 80.0) * 10.0).exp();
        assert_relative_eq!(first, 5.555_6e-8, max_relative = 1e-4);
        assert_relative_eq!(b, first + second, max_relative = 1e-12);
        let mut prev = 1.0;
        for m in (10..2000).step_by(10) {
            let v = theorem_failure_bound(1000, m, 10, 0.5, 2.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(theorem_failure_bound(10, 25, 10, 1.0, 2.0).is_err());
        assert!(theorem_failure_bound(10, 20, 10, 1.0, 0.5).is_err());
        assert!(theorem_failure_bound(10, 20, 10, 0.0, 2.0).is_err());
    }

    #[test]
    fn conditional_expectation_matches_monte_carlo() {
        let mask = Arc::new(SparseBinaryMask::sample(40, 80, 4, 21).unwrap());
        let mut rng = rng::stream(2, "x", 0);
        let x: Vec<f64> = (0..80).map(|_| rng.sample(StandardNormal)).collect();
        let samples: Vec<f64> = (0..10_000u64)
            .map(|t| CompositeEmbedding::fill(mask.clone(), FillKind::Gaussian, t).image_l1(&x).unwrap())
            .collect();
        let ms = crate::stats::mean_se(&samples);
        let ce = conditional_expectation(&mask, &x).unwrap();
        assert!((ms.mean - ce).abs() <= 4.0 * ms.se, "mean {} vs {ce} (se {})", ms.mean, ms.se);
        assert_eq!(ce, BETA0 * rowsum(&mask, &x).unwrap());
    }

    #[test]
    fn rowsum_is_monotone_in_magnitudes() {
        let mask = SparseBinaryMask::sample(30, 20, 3, 8).unwrap();
        let mut rng = rng::stream(8, "mono", 0);
        for _ in 0..200 {
            let x: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
            let y: Vec<f64> = x.iter().map(|v| v * (1.0 + rng.random::<f64>())).collect();
            let rx = rowsum(&mask, &x).unwrap();
            assert!(rowsum(&mask, &y).unwrap() >= rx);
            assert!(rx >= rowsum_floor(&mask, &x).unwrap() * (1.0 - 1e-12));
        }
    }
}

//! Random embedding matrices.
//!
//! A [`SparseBinaryMask`] stores, for each of its `n` columns, the `d`
//! distinct rows holding a one. A [`CompositeEmbedding`] gates one random
//! value per mask nonzero (Gaussian or ±1) and carries a scalar `scale`;
//! after [`CompositeEmbedding::normalize`] the scale is `1/(d·β₀)` with
//! `β₀ = √(2/π)`, the mean of a standard half-normal.
//!
//! Row indices are 0-based in memory and 1-based in JSON.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamFamily, StreamRng};
use crate::signal::check_len;

/// `√(2/π)`.
pub const BETA0: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMask {
    m: usize,
    n: usize,
    d: usize,
    /// Column-major, `d` sorted distinct rows per column.
    rows: Vec<u32>,
}

/// Draws `d` distinct values from `0..m`, uniformly over d-subsets, sorted.
///
/// Floyd's algorithm: each step inserts either a fresh value or the current
/// upper end `j`, which exceeds everything drawn so far.
pub(crate) fn sample_subset(rng: &mut StreamRng, m: usize, d: usize, out: &mut [u32]) {
    debug_assert!(d <= m && out.len() == d);
    let mut chosen: Vec<u32> = Vec::with_capacity(d);
    for j in (m - d)..m {
        let t = rng.random_range(0..=j) as u32;
        match chosen.binary_search(&t) {
            Ok(_) => chosen.push(j as u32),
            Err(pos) => chosen.insert(pos, t),
        }
    }
    out.copy_from_slice(&chosen);
}

impl SparseBinaryMask {
    /// Samples an `m × n` mask with `d` ones per column. Column `k` is drawn
    /// from its own substream of `seed`, so the result does not depend on
    /// how columns are scheduled across threads.
    pub fn sample(m: usize, n: usize, d: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("mask needs at least one column"));
        }
        if d < 1 || d > m {
            return Err(Error::invalid(format!("need 1 <= d <= m, got d = {d}, m = {m}")));
        }
        if m > u32::MAX as usize {
            return Err(Error::invalid("row count exceeds u32 range"));
        }
        let family = StreamFamily::new(seed, "mask");
        let mut rows = vec![0u32; n * d];
        rows.par_chunks_mut(d).enumerate().for_each(|(k, col)| {
            let mut rng = family.stream(k as u64);
            sample_subset(&mut rng, m, d, col);
        });
        Ok(SparseBinaryMask { m, n, d, rows })
    }

    /// Visits the columns [`Self::sample`] would produce for the same
    /// arguments, in order, without storing the mask.
    pub fn for_each_sampled_column<F>(m: usize, n: usize, d: usize, seed: u64, mut f: F) -> Result<()>
    where
        F: FnMut(usize, &[u32]),
    {
        if d < 1 || d > m {
            return Err(Error::invalid(format!("need 1 <= d <= m, got d = {d}, m = {m}")));
        }
        let family = StreamFamily::new(seed, "mask");
        let mut col = vec![0u32; d];
        for k in 0..n {
            let mut rng = family.stream(k as u64);
            sample_subset(&mut rng, m, d, &mut col);
            f(k, &col);
        }
        Ok(())
    }

    /// Builds a mask from explicit 0-based row lists, validating them.
    pub fn from_columns(m: usize, columns: &[Vec<usize>]) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::invalid("mask needs at least one column"));
        }
        let d = columns[0].len();
        if d < 1 || d > m {
            return Err(Error::invalid(format!("need 1 <= d <= m, got d = {d}, m = {m}")));
        }
        let mut rows = Vec::with_capacity(n * d);
        for (k, col) in columns.iter().enumerate() {
            if col.len() != d {
                return Err(Error::invalid(format!("column {k} has {} ones, expected {d}", col.len())));
            }
            let mut sorted = col.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != d {
                return Err(Error::invalid(format!("column {k} repeats a row index")));
            }
            if let Some(&r) = sorted.last().filter(|&&r| r >= m) {
                return Err(Error::invalid(format!("column {k} has row {r} >= m = {m}")));
            }
            rows.extend(sorted.iter().map(|&r| r as u32));
        }
        Ok(SparseBinaryMask { m, n, d, rows })
    }

    /// `n × n` identity pattern, column `k` → row `k`.
    pub fn identity(n: usize) -> Result<Self> {
        let cols: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
        Self::from_columns(n, &cols)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn column(&self, k: usize) -> &[u32] {
        &self.rows[k * self.d..(k + 1) * self.d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[u32]> {
        self.rows.chunks(self.d)
    }

    /// Nonzero count of every row.
    pub fn row_loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.m];
        for &r in &self.rows {
            loads[r as usize] += 1;
        }
        loads
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MaskJson::from(self)).expect("mask serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MaskJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// On-disk mask format; rows are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskJson {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub columns: Vec<Vec<usize>>,
}

impl From<&SparseBinaryMask> for MaskJson {
    fn from(mask: &SparseBinaryMask) -> Self {
        MaskJson {
            m: mask.m,
            n: mask.n,
            d: mask.d,
            columns: mask.columns().map(|c| c.iter().map(|&r| r as usize + 1).collect()).collect(),
        }
    }
}

impl TryFrom<MaskJson> for SparseBinaryMask {
    type Error = Error;

    fn try_from(raw: MaskJson) -> Result<Self> {
        if raw.columns.len() != raw.n {
            return Err(Error::invalid(format!("mask declares n = {} but lists {} columns", raw.n, raw.columns.len())));
        }
        let mut cols = Vec::with_capacity(raw.n);
        for (k, c) in raw.columns.iter().enumerate() {
            if c.len() != raw.d {
                return Err(Error::invalid(format!(
                    "column {} has {} ones, mask declares d = {}",
                    k + 1,
                    c.len(),
                    raw.d
                )));
            }
            if c.contains(&0) {
                return Err(Error::invalid("row indices are 1-based; found 0"));
            }
            cols.push(c.iter().map(|&r| r - 1).collect::<Vec<_>>());
        }
        SparseBinaryMask::from_columns(raw.m, &cols)
    }
}

/// `‖A x‖₁` for the binary matrix `A` of `mask`.
pub fn mask_apply_l1(mask: &SparseBinaryMask, x: &[f64]) -> Result<f64> {
    check_len(x, mask.n)?;
    let mut y = vec![0.0; mask.m];
    for (col, &xk) in mask.columns().zip(x) {
        for &r in col {
            y[r as usize] += xk;
        }
    }
    Ok(y.iter().map(|v| v.abs()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillKind {
    Gaussian,
    Bernoulli,
}

impl FillKind {
    pub fn name(self) -> &'static str {
        match self {
            FillKind::Gaussian => "gaussian",
            FillKind::Bernoulli => "bernoulli",
        }
    }
}

impl std::str::FromStr for FillKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(FillKind::Gaussian),
            "bernoulli" => Ok(FillKind::Bernoulli),
            other => Err(Error::invalid(format!("unknown fill kind `{other}`"))),
        }
    }
}

/// Where the nonzero values of an embedding came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSource {
    Seeded { kind: FillKind, seed: u64 },
    Explicit,
}

/// `scale · (A ∘ G)` with `G` stored only at the nonzeros of `A`.
#[derive(Debug, Clone)]
pub struct CompositeEmbedding {
    mask: Arc<SparseBinaryMask>,
    source: ValueSource,
    /// Aligned with the mask's column-major nonzeros.
    values: Vec<f64>,
    scale: f64,
    normalized: bool,
}

impl CompositeEmbedding {
    /// Draws one i.i.d. value per mask nonzero; the scale starts at 1.
    pub fn fill(mask: Arc<SparseBinaryMask>, kind: FillKind, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "fill", 0);
        let count = mask.n * mask.d;
        let values: Vec<f64> = match kind {
            FillKind::Gaussian => (0..count).map(|_| rng.sample(StandardNormal)).collect(),
            FillKind::Bernoulli => (0..count).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        };
        CompositeEmbedding { mask, source: ValueSource::Seeded { kind, seed }, values, scale: 1.0, normalized: false }
    }

    /// Explicit values in column-major nonzero order.
    pub fn from_values(mask: Arc<SparseBinaryMask>, values: Vec<f64>, scale: f64) -> Result<Self> {
        check_len(&values, mask.n * mask.d)?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        Ok(CompositeEmbedding { mask, source: ValueSource::Explicit, values, scale, normalized: false })
    }

    pub fn mask(&self) -> &SparseBinaryMask {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn source(&self) -> ValueSource {
        self.source
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Sets the scale to `1/(d·β₀)`. Requires `s | m` and `d = m/s`; a
    /// second call is rejected (see [`Self::renormalize`]).
    pub fn normalize(self, s: usize) -> Result<Self> {
        if self.normalized {
            return Err(Error::AlreadyNormalized);
        }
        self.renormalize(s)
    }

    /// Like [`Self::normalize`] but idempotent.
    pub fn renormalize(mut self, s: usize) -> Result<Self> {
        let (m, d) = (self.mask.m, self.mask.d);
        if s == 0 || !m.is_multiple_of(s) {
            return Err(Error::invalid(format!("m = {m} is not a multiple of s = {s}")));
        }
        if d != m / s {
            return Err(Error::invalid(format!("mask has d = {d} ones per column, need m/s = {}", m / s)));
        }
        self.scale = normalized_scale(d);
        self.normalized = true;
        Ok(self)
    }

    /// `scale · Σ_k a_{j,k} g_{j,k} x_k` for every row `j`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.mask.n)?;
        let d = self.mask.d;
        let mut y = vec![0.0; self.mask.m];
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let rows = self.mask.column(k);
            let vals = &self.values[k * d..(k + 1) * d];
            for (&r, &g) in rows.iter().zip(vals) {
                y[r as usize] += g * xk;
            }
        }
        if self.scale != 1.0 {
            y.iter_mut().for_each(|v| *v *= self.scale);
        }
        Ok(y)
    }

    /// `‖apply(x)‖₁`.
    pub fn image_l1(&self, x: &[f64]) -> Result<f64> {
        Ok(self.apply(x)?.iter().map(|v| v.abs()).sum())
    }

    /// Serializes the mask plus fill kind, seed and scale. Values are not
    /// stored; they are regenerated from the seed on load.
    pub fn to_json(&self) -> Result<String> {
        let ValueSource::Seeded { kind, seed } = self.source else {
            return Err(Error::invalid("embeddings with explicit values cannot be serialized"));
        };
        let MaskJson { m, n, d, columns } = MaskJson::from(self.mask.as_ref());
        let raw = EmbeddingJson { m, n, d, columns, fill: kind, seed, scale: self.scale };
        Ok(serde_json::to_string(&raw)?)
    }

    /// Loads an embedding; a scale other than 1 marks it as normalized.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: EmbeddingJson = serde_json::from_str(text)?;
        if !(raw.scale > 0.0) || !raw.scale.is_finite() {
            return Err(Error::invalid(format!("scale must be positive, got {}", raw.scale)));
        }
        let mask = SparseBinaryMask::try_from(MaskJson { m: raw.m, n: raw.n, d: raw.d, columns: raw.columns })?;
        let mut e = CompositeEmbedding::fill(Arc::new(mask), raw.fill, raw.seed);
        e.scale = raw.scale;
        e.normalized = raw.scale != 1.0;
        Ok(e)
    }
}

/// `1/(d·β₀)`.
pub fn normalized_scale(d: usize) -> f64 {
    1.0 / (d as f64 * BETA0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingJson {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub columns: Vec<Vec<usize>>,
    pub fill: FillKind,
    pub seed: u64,
    pub scale: f64,
}

/// Dense `m × n` matrix of i.i.d. standard Cauchy entries, sampled as
/// `tan(π(U − ½))`.
#[derive(Debug, Clone)]
pub struct CauchySketch {
    m: usize,
    n: usize,
    /// Row-major.
    values: Vec<f64>,
}

impl CauchySketch {
    pub fn sample(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("Cauchy sketch needs m, n >= 1"));
        }
        let cauchy = Cauchy::new(0.0, 1.0).expect("unit scale is valid");
        let family = StreamFamily::new(seed, "cauchy");
        let mut values = vec![0.0; m * n];
        values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let mut rng = family.stream(j as u64);
            for v in row.iter_mut() {
                // tan(±π/2) in floating point is large but finite; resample
                // on the off chance it is not
                *v = loop {
                    let c: f64 = cauchy.sample(&mut rng);
                    if c.is_finite() {
                        break c;
                    }
                };
            }
        });
        Ok(CauchySketch { m, n, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.n)?;
        Ok(self.values.chunks(self.n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
    }

    /// `median_j |(S x)_j|`, an estimate of `‖x‖₁`.
    pub fn median_estimate(&self, x: &[f64]) -> Result<f64> {
        let y: Vec<f64> = self.apply(x)?.into_iter().map(f64::abs).collect();
        Ok(crate::stats::median(&y))
    }
}

pub fn cauchy_median_estimate(sk: &CauchySketch, x: &[f64]) -> Result<f64> {
    sk.median_estimate(x)
}

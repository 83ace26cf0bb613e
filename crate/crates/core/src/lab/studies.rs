use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::csv::{Cell, Table};
use super::{config_hash, distortion, gen_signal, NormKind, Runner, SignalClass};
use crate::analysis::{conditional_expectation, norm_ratio, theorem_failure_bound, UPPER_CONSTANT};
use crate::binsim::{bins_failure_bound, f_bound, q_bound, q_expectation, simulate_bins, violates_q_bound, BinsTrace};
use crate::error::{Error, Result};
use crate::norms::block_norm;
use crate::rng::{self, derive_seed};
use crate::signal::{l1, l2};
use crate::sketch::{
    mask_apply_l1, sample_subset, CauchySketch, CompositeEmbedding, FillKind, SparseBinaryMask, BETA0,
};
use crate::stats::{self, mean_se, proportion_se};

/// Largest `m = d·s` accepted by the studies.
pub const MAX_ROWS: usize = 10_000_000;

const INV_E: f64 = 0.367_879_441_171_442_33;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn psi(m: usize, n: usize, d: usize, s: usize, seed: u64) -> Result<CompositeEmbedding> {
    let mask = Arc::new(SparseBinaryMask::sample(m, n, d, derive_seed(seed, "mask", 0))?);
    CompositeEmbedding::fill(mask, FillKind::Gaussian, derive_seed(seed, "fill", 0)).normalize(s)
}

// ---------------------------------------------------------------------------
// Distortion across signal classes

/// Configuration of the distortion study over signal classes and `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub s: usize,
    pub d_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub classes: Vec<SignalClass>,
    pub norms: Vec<NormKind>,
    /// Slack of the distortion window `[0.63 − ε, 1.63 + ε]`.
    pub eps: f64,
    /// Scale every signal to unit block norm before embedding.
    pub normalize_signals: bool,
}

impl ExperimentConfig {
    pub fn fig1(seed: u64) -> Self {
        ExperimentConfig {
            n: 1000,
            s: 10,
            d_grid: (1..=20).map(|i| 2 * i).collect(),
            trials: 64,
            seed,
            classes: SignalClass::FIG1.to_vec(),
            norms: vec![NormKind::Block, NormKind::Kfunc],
            eps: 0.1,
            normalize_signals: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= 1 && self.s >= 1 && self.s <= self.n, || {
            format!("need 1 <= s <= n, got s = {}, n = {}", self.s, self.n)
        })?;
        ensure(!self.d_grid.is_empty(), || "d grid is empty".into())?;
        for &d in &self.d_grid {
            ensure(d >= 1 && d * self.s <= MAX_ROWS, || format!("d = {d} out of range"))?;
        }
        ensure(self.trials >= 1, || "trials must be >= 1".into())?;
        ensure(!self.classes.is_empty() && !self.norms.is_empty(), || "no classes or norms".into())?;
        ensure(self.eps >= 0.0, || "eps must be nonnegative".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub class: SignalClass,
    pub norm: NormKind,
    pub d: usize,
    pub m: usize,
    pub trial: usize,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSummary {
    pub class: SignalClass,
    pub norm: NormKind,
    pub d: usize,
    pub m: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct Fig1Result {
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Sorted by class, norm, d, trial (in config order).
    pub records: Vec<DistortionRecord>,
    pub summary: Vec<DistortionSummary>,
}

impl Fig1Result {
    pub fn distortions(&self, class: SignalClass, norm: NormKind, d: usize) -> Vec<f64> {
        self.records.iter().filter(|r| r.class == class && r.norm == norm && r.d == d).map(|r| r.distortion).collect()
    }

    pub fn summary_row(&self, class: SignalClass, norm: NormKind, d: usize) -> Option<&DistortionSummary> {
        self.summary.iter().find(|r| r.class == class && r.norm == norm && r.d == d)
    }

    pub fn records_table(&self) -> Table {
        let mut t = Table::new(&["class", "norm", "d", "m", "trial", "distortion"]);
        for r in &self.records {
            t.push(&[
                Cell::S(r.class.name()),
                Cell::S(r.norm.name()),
                Cell::U(r.d as u64),
                Cell::U(r.m as u64),
                Cell::U(r.trial as u64),
                Cell::F(r.distortion),
            ]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["class", "norm", "d", "m", "min", "median", "max", "seed", "config_hash"]);
        for r in &self.summary {
            t.push(&[
                Cell::S(r.class.name()),
                Cell::S(r.norm.name()),
                Cell::U(r.d as u64),
                Cell::U(r.m as u64),
                Cell::F(r.min),
                Cell::F(r.median),
                Cell::F(r.max),
                Cell::U(self.config.seed),
                Cell::S(&self.config_hash),
            ]);
        }
        t
    }

    /// Writes `fig1_records.csv`, `fig1_summary.csv` and `fig1_meta.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.records_table().write(&dir.join("fig1_records.csv"))?;
        self.summary_table().write(&dir.join("fig1_summary.csv"))?;
        let meta = serde_json::json!({
            "config": self.config,
            "config_hash": self.config_hash,
            "x_axis": "m = d*s",
            "d_grid_is_default": self.config.d_grid == ExperimentConfig::fig1(0).d_grid,
            "signals_normalized_to_unit_block_norm": self.config.normalize_signals,
        });
        std::fs::write(dir.join("fig1_meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

/// Distortion of every class under every norm, `trials` embeddings per `d`.
///
/// Trial `t` at a given `d` uses the same embedding for all classes and
/// norms; the signal of class `c` in trial `t` is the same for every `d`.
pub fn run_fig1(config: &ExperimentConfig, runner: &Runner) -> Result<Fig1Result> {
    config.validate()?;
    let (n, s) = (config.n, config.s);
    let (nd, nt) = (config.d_grid.len(), config.trials);
    let jobs = config.classes.len() * nd * nt;
    let per_job = runner.try_map(jobs, |idx| {
        let (ci, rest) = (idx / (nd * nt), idx % (nd * nt));
        let (di, t) = (rest / nt, rest % nt);
        let (class, d) = (config.classes[ci], config.d_grid[di]);
        let mut x = gen_signal(class, n, s, derive_seed(config.seed, &format!("fig1/signal/{class}"), t as u64))?;
        if config.normalize_signals {
            let b = block_norm(&x, s)?;
            x = x.scaled(1.0 / b)?;
        }
        let e = psi(d * s, x.len(), d, s, derive_seed(config.seed, &format!("fig1/psi/{d}"), t as u64))?;
        config.norms.iter().map(|&norm| distortion(&x, &e, norm, s)).collect::<Result<Vec<f64>>>()
    })?;

    let mut records = Vec::with_capacity(jobs * config.norms.len());
    let mut summary = Vec::new();
    for (ci, &class) in config.classes.iter().enumerate() {
        for (ni, &norm) in config.norms.iter().enumerate() {
            for (di, &d) in config.d_grid.iter().enumerate() {
                let base = (ci * nd + di) * nt;
                let vals: Vec<f64> = (0..nt).map(|t| per_job[base + t][ni]).collect();
                for (t, &v) in vals.iter().enumerate() {
                    records.push(DistortionRecord { class, norm, d, m: d * s, trial: t, distortion: v });
                }
                summary.push(DistortionSummary {
                    class,
                    norm,
                    d,
                    m: d * s,
                    min: stats::min(&vals),
                    median: stats::median(&vals),
                    max: stats::max(&vals),
                });
            }
        }
    }
    Ok(Fig1Result { config: config.clone(), config_hash: config_hash(config), records, summary })
}

// ---------------------------------------------------------------------------
// Counterexample

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
}

impl CounterexampleConfig {
    pub fn desk(seed: u64) -> Self {
        CounterexampleConfig { n: 1_000_000, s: 100, d: 10, trials: 16, seed }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.s >= 1 && self.d >= 1 && self.trials >= 1, || "need s, d, trials >= 1".into())?;
        ensure(self.s <= self.n + 1, || format!("s = {} exceeds the signal length", self.s))?;
        // the two-level construction assumes m <= n
        ensure(self.d * self.s <= self.n, || format!("need m = d*s <= n, got m = {}", self.d * self.s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub vector: SignalClass,
    pub trial: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSummary {
    pub vector: SignalClass,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Mean-field prediction of the ratio.
    pub predicted: f64,
    /// Trials whose ratio exceeded `√2.625`.
    pub upper_violations: usize,
}

#[derive(Debug, Clone)]
pub struct CounterexampleResult {
    pub config: CounterexampleConfig,
    pub config_hash: String,
    pub records: Vec<CounterexampleRecord>,
    pub summary: Vec<CounterexampleSummary>,
}

impl CounterexampleResult {
    pub fn summary_for(&self, vector: SignalClass) -> &CounterexampleSummary {
        self.summary.iter().find(|r| r.vector == vector).expect("both vectors summarized")
    }

    pub fn ratios(&self, vector: SignalClass) -> Vec<f64> {
        self.records.iter().filter(|r| r.vector == vector).map(|r| r.ratio).collect()
    }

    pub fn records_table(&self) -> Table {
        let mut t = Table::new(&["vector", "trial", "ratio"]);
        for r in &self.records {
            let name = if r.vector == SignalClass::CounterexampleX { "x" } else { "y" };
            t.push(&[Cell::S(name), Cell::U(r.trial as u64), Cell::F(r.ratio)]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t =
            Table::new(&["vector", "mean", "min", "max", "predicted", "upper_violations", "seed", "config_hash"]);
        for r in &self.summary {
            let name = if r.vector == SignalClass::CounterexampleX { "x" } else { "y" };
            t.push(&[
                Cell::S(name),
                Cell::F(r.mean),
                Cell::F(r.min),
                Cell::F(r.max),
                Cell::F(r.predicted),
                Cell::U(r.upper_violations as u64),
                Cell::U(self.config.seed),
                Cell::S(&self.config_hash),
            ]);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.records_table().write(&dir.join("counterexample.csv"))?;
        self.summary_table().write(&dir.join("counterexample_summary.csv"))
    }
}

/// Ratio `rowsum(A, v) / (d‖v‖_{1,2,s})` for the two-level vector `x` and
/// for `e₁`, over independent masks with `n + 1` columns.
pub fn run_counterexample(config: &CounterexampleConfig, runner: &Runner) -> Result<CounterexampleResult> {
    config.validate()?;
    let CounterexampleConfig { n, s, d, trials, seed } = *config;
    let m = d * s;
    let x = gen_signal(SignalClass::CounterexampleX, n, s, seed)?;
    let y = gen_signal(SignalClass::CounterexampleY, n, s, seed)?;
    let (bx, by) = (block_norm(&x, s)?, block_norm(&y, s)?);
    let df = d as f64;

    let per_trial = runner.try_map(trials, |t| {
        let mut ex = vec![0.0; m];
        let mut ey = vec![0.0; m];
        let mask_seed = derive_seed(seed, "counterexample", t as u64);
        SparseBinaryMask::for_each_sampled_column(m, n + 1, d, mask_seed, |k, col| {
            let (sx, sy) = (x[k] * x[k], y[k] * y[k]);
            for &r in col {
                ex[r as usize] += sx;
                ey[r as usize] += sy;
            }
        })?;
        let rx: f64 = ex.iter().map(|e| e.sqrt()).sum();
        let ry: f64 = ey.iter().map(|e| e.sqrt()).sum();
        Ok((rx / (df * bx), ry / (df * by)))
    })?;

    let sf = s as f64;
    let predicted_x = ((1.0 + 1.0 / (sf * sf)).sqrt() + (sf - 1.0) / sf) / bx;
    let mut records = Vec::with_capacity(2 * trials);
    let mut summary = Vec::with_capacity(2);
    for (vector, predicted) in [(SignalClass::CounterexampleX, predicted_x), (SignalClass::CounterexampleY, 1.0)] {
        let ratios: Vec<f64> =
            per_trial.iter().map(|&(rx, ry)| if vector == SignalClass::CounterexampleX { rx } else { ry }).collect();
        records.extend(ratios.iter().enumerate().map(|(trial, &ratio)| CounterexampleRecord { vector, trial, ratio }));
        summary.push(CounterexampleSummary {
            vector,
            mean: stats::mean(&ratios),
            min: stats::min(&ratios),
            max: stats::max(&ratios),
            predicted,
            upper_violations: ratios.iter().filter(|&&r| r > UPPER_CONSTANT * (1.0 + 1e-9)).count(),
        });
    }
    Ok(CounterexampleResult { config: config.clone(), config_hash: config_hash(config), records, summary })
}

// ---------------------------------------------------------------------------
// Concentration tails

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailsConfig {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub trials: usize,
    /// Thresholds `λ`; empty selects `λ_i = (i/2)·‖x‖₂/√d`, `i = 0..10`.
    pub lambdas: Vec<f64>,
    pub seed: u64,
}

impl TailsConfig {
    pub fn standard(seed: u64) -> Self {
        TailsConfig { n: 1000, s: 10, d: 20, trials: 10_000, lambdas: Vec::new(), seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub lambda: f64,
    pub empirical: f64,
    pub bound: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct TailsResult {
    pub config: TailsConfig,
    pub config_hash: String,
    pub l2norm: f64,
    pub expectation: f64,
    pub rows: Vec<TailRow>,
}

impl TailsResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["lambda", "empirical", "bound", "se", "seed", "config_hash"]);
        for r in &self.rows {
            t.push(&[
                Cell::F(r.lambda),
                Cell::F(r.empirical),
                Cell::F(r.bound),
                Cell::F(r.se),
                Cell::U(self.config.seed),
                Cell::S(&self.config_hash),
            ]);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.table().write(&dir.join("tails.csv"))
    }
}

/// Empirical `P[|‖Φx‖₁ − E_G‖Φx‖₁|/d ≥ λ]` over fresh Gaussian fills of one
/// fixed mask, against the half-normal tail bound.
pub fn run_tails(config: &TailsConfig, runner: &Runner) -> Result<TailsResult> {
    let TailsConfig { n, s, d, trials, seed, .. } = *config;
    ensure(n >= 1 && s >= 1 && d >= 1 && trials >= 1, || "need n, s, d, trials >= 1".into())?;
    ensure(d * s <= MAX_ROWS, || "m = d*s too large".into())?;
    ensure(config.lambdas.iter().all(|&l| l >= 0.0), || "lambdas must be nonnegative".into())?;
    let x = gen_signal(SignalClass::DenseGaussian, n, s, derive_seed(seed, "tails/signal", 0))?;
    let mask = Arc::new(SparseBinaryMask::sample(d * s, n, d, derive_seed(seed, "tails/mask", 0))?);
    let expectation = conditional_expectation(&mask, &x)?;
    let l2norm = l2(&x);
    let df = d as f64;
    let deviations = runner.try_map(trials, |t| {
        let e = CompositeEmbedding::fill(mask.clone(), FillKind::Gaussian, derive_seed(seed, "tails/fill", t as u64));
        Ok((e.image_l1(&x)? - expectation).abs() / df)
    })?;
    let lambdas: Vec<f64> = if config.lambdas.is_empty() {
        (0..10).map(|i| 0.5 * i as f64 * l2norm / df.sqrt()).collect()
    } else {
        config.lambdas.clone()
    };
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let hits = deviations.iter().filter(|&&v| v >= lambda).count();
            let empirical = hits as f64 / trials as f64;
            Ok(TailRow {
                lambda,
                empirical,
                bound: crate::analysis::halfnormal_tail_bound(lambda, d, l2norm)?,
                se: proportion_se(empirical, trials),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailsResult { config: config.clone(), config_hash: config_hash(config), l2norm, expectation, rows })
}

// ---------------------------------------------------------------------------
// Balls into bins

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinsConfig {
    pub m: usize,
    pub d: usize,
    pub s: usize,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
}

impl BinsConfig {
    pub fn standard(seed: u64) -> Self {
        BinsConfig { m: 1000, d: 100, s: 10, trials: 1000, eps: 0.3, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinsSummaryRow {
    pub k: usize,
    pub mean_q: f64,
    pub se_q: f64,
    /// `(1 − 1/m)^{dk}`, exact for the with-replacement process.
    pub expected_q: f64,
    pub bound_q: f64,
    pub mean_f: f64,
    pub se_f: f64,
    pub bound_f: f64,
}

#[derive(Debug, Clone)]
pub struct BinsModeResult {
    pub replacement: bool,
    pub traces: Vec<BinsTrace>,
    pub summary: Vec<BinsSummaryRow>,
    /// Fraction of trials where some `q_k` exceeded `q_bound(k, s, ε)`.
    pub violation_frequency: f64,
    pub violation_se: f64,
}

impl BinsModeResult {
    fn label(&self) -> &'static str {
        if self.replacement {
            "with"
        } else {
            "without"
        }
    }
}

#[derive(Debug, Clone)]
pub struct BinsResult {
    pub config: BinsConfig,
    pub config_hash: String,
    /// `2s·exp(−ε²m/2)`, clamped to 1.
    pub failure_bound: f64,
    pub with_replacement: BinsModeResult,
    pub without_replacement: BinsModeResult,
}

impl BinsResult {
    pub fn trace_table(mode: &BinsModeResult) -> Table {
        let mut t = Table::new(&["trial", "k", "q", "f"]);
        for (trial, tr) in mode.traces.iter().enumerate() {
            for (i, (&q, &f)) in tr.q.iter().zip(&tr.f).enumerate() {
                t.push(&[Cell::U(trial as u64), Cell::U(i as u64 + 1), Cell::F(q), Cell::F(f)]);
            }
        }
        t
    }

    pub fn summary_table(&self, mode: &BinsModeResult) -> Table {
        let mut t = Table::new(&["k", "mean_q", "expected_q", "bound_q", "mean_f", "bound_f", "seed", "config_hash"]);
        for r in &mode.summary {
            t.push(&[
                Cell::U(r.k as u64),
                Cell::F(r.mean_q),
                Cell::F(r.expected_q),
                Cell::F(r.bound_q),
                Cell::F(r.mean_f),
                Cell::F(r.bound_f),
                Cell::U(self.config.seed),
                Cell::S(&self.config_hash),
            ]);
        }
        t
    }

    /// Writes `bins_trace_{with,without}.csv` and `bins_summary_{with,without}.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        for mode in [&self.with_replacement, &self.without_replacement] {
            Self::trace_table(mode).write(&dir.join(format!("bins_trace_{}.csv", mode.label())))?;
            self.summary_table(mode).write(&dir.join(format!("bins_summary_{}.csv", mode.label())))?;
        }
        Ok(())
    }
}

pub fn run_bins(config: &BinsConfig, runner: &Runner) -> Result<BinsResult> {
    let BinsConfig { m, d, s, trials, eps, seed } = *config;
    ensure(trials >= 1, || "trials must be >= 1".into())?;
    ensure(eps > 0.0, || "eps must be positive".into())?;
    ensure(m <= MAX_ROWS, || "m too large".into())?;
    let mode = |replacement: bool| -> Result<BinsModeResult> {
        let traces =
            runner.try_map(trials, |t| simulate_bins(m, d, s, replacement, derive_seed(seed, "bins", t as u64)))?;
        let summary = (1..=s)
            .map(|k| {
                let qs: Vec<f64> = traces.iter().map(|tr| tr.q[k - 1]).collect();
                let fs: Vec<f64> = traces.iter().map(|tr| tr.f[k - 1]).collect();
                let (q, f) = (mean_se(&qs), mean_se(&fs));
                BinsSummaryRow {
                    k,
                    mean_q: q.mean,
                    se_q: q.se,
                    expected_q: q_expectation(m, d, k),
                    bound_q: q_bound(k, s, eps),
                    mean_f: f.mean,
                    se_f: f.se,
                    bound_f: f_bound(k, s, eps),
                }
            })
            .collect();
        let violations = traces.iter().filter(|tr| violates_q_bound(tr, eps)).count();
        let freq = violations as f64 / trials as f64;
        Ok(BinsModeResult {
            replacement,
            traces,
            summary,
            violation_frequency: freq,
            violation_se: proportion_se(freq, trials),
        })
    };
    Ok(BinsResult {
        config: config.clone(),
        config_hash: config_hash(config),
        failure_bound: bins_failure_bound(s, m, eps),
        with_replacement: mode(true)?,
        without_replacement: mode(false)?,
    })
}

// ---------------------------------------------------------------------------
// 1-RIP of the binary mask

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipConfig {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
}

impl RipConfig {
    pub fn standard(seed: u64) -> Self {
        RipConfig { n: 1000, s: 10, d: 100, trials: 10_000, eps: 0.5, seed }
    }
}

#[derive(Debug, Clone)]
pub struct RipResult {
    pub config: RipConfig,
    pub config_hash: String,
    /// `1 − 2e⁻¹ − 2ε`.
    pub lower_edge: f64,
    pub upper_edge: f64,
    /// `ξ = n·exp(−dε²/2)`, the failure probability the mask size supports.
    pub xi: f64,
    /// `‖Az‖₁/(d‖z‖₁)` per trial, signed and with all signs made positive.
    pub ratios: Vec<(f64, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max |ratio − 1|` over the nonnegative versions of the test vectors.
    pub max_nonneg_deviation: f64,
    pub violations: usize,
}

impl RipResult {
    pub fn records_table(&self) -> Table {
        let mut t = Table::new(&["trial", "ratio", "ratio_nonneg"]);
        for (i, &(r, p)) in self.ratios.iter().enumerate() {
            t.push(&[Cell::U(i as u64), Cell::F(r), Cell::F(p)]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&[
            "min_ratio",
            "max_ratio",
            "lower_edge",
            "upper_edge",
            "max_nonneg_deviation",
            "violations",
            "xi",
            "seed",
            "config_hash",
        ]);
        t.push(&[
            Cell::F(self.min_ratio),
            Cell::F(self.max_ratio),
            Cell::F(self.lower_edge),
            Cell::F(self.upper_edge),
            Cell::F(self.max_nonneg_deviation),
            Cell::U(self.violations as u64),
            Cell::F(self.xi),
            Cell::U(self.config.seed),
            Cell::S(&self.config_hash),
        ]);
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.records_table().write(&dir.join("rip.csv"))?;
        self.summary_table().write(&dir.join("rip_summary.csv"))
    }
}

/// A random s-sparse vector: uniform support, standard-normal magnitudes in
/// decreasing order along the returned support, random signs.
pub fn random_decreasing_sparse(n: usize, s: usize, rng: &mut rng::StreamRng) -> (Vec<f64>, Vec<usize>) {
    let mut support32 = vec![0u32; s];
    sample_subset(rng, n, s, &mut support32);
    // shuffle so the magnitude order is unrelated to the index order
    for i in (1..s).rev() {
        let j = rng.random_range(0..=i);
        support32.swap(i, j);
    }
    let support: Vec<usize> = support32.into_iter().map(|k| k as usize).collect();
    let mut mags: Vec<f64> = (0..s).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut z = vec![0.0; n];
    for (&k, &v) in support.iter().zip(&mags) {
        z[k] = if rng.random_bool(0.5) { v } else { -v };
    }
    (z, support)
}

pub fn run_rip(config: &RipConfig, runner: &Runner) -> Result<RipResult> {
    let RipConfig { n, s, d, trials, eps, seed } = *config;
    ensure(s >= 1 && s <= n && d >= 1 && trials >= 1, || "need 1 <= s <= n and d, trials >= 1".into())?;
    ensure(eps >= 0.0, || "eps must be nonnegative".into())?;
    ensure(d * s <= MAX_ROWS, || "m = d*s too large".into())?;
    let mask = SparseBinaryMask::sample(d * s, n, d, derive_seed(seed, "rip/mask", 0))?;
    let df = d as f64;
    let ratios = runner.try_map(trials, |t| {
        let mut rng = rng::stream(seed, "rip/z", t as u64);
        let (z, _) = random_decreasing_sparse(n, s, &mut rng);
        let zl1 = l1(&z);
        let signed = mask_apply_l1(&mask, &z)? / (df * zl1);
        let pos: Vec<f64> = z.iter().map(|v| v.abs()).collect();
        let nonneg = mask_apply_l1(&mask, &pos)? / (df * zl1);
        Ok((signed, nonneg))
    })?;
    let lower_edge = 1.0 - 2.0 * INV_E - 2.0 * eps;
    let signed: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let violations = signed.iter().filter(|&&r| r < lower_edge - 1e-12 || r > 1.0 + 1e-12).count();
    Ok(RipResult {
        config: config.clone(),
        config_hash: config_hash(config),
        lower_edge,
        upper_edge: 1.0,
        xi: (n as f64 * (-df * eps * eps / 2.0).exp()).min(1.0),
        min_ratio: stats::min(&signed),
        max_ratio: stats::max(&signed),
        max_nonneg_deviation: ratios.iter().map(|r| (r.1 - 1.0).abs()).fold(0.0, f64::max),
        violations,
        ratios,
    })
}

// ---------------------------------------------------------------------------
// K-point embedding

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsetConfig {
    pub k: usize,
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub eps: f64,
    pub seed: u64,
}

impl PointsetConfig {
    pub fn standard(seed: u64) -> Self {
        PointsetConfig { k: 100, n: 1000, s: 10, d: 20, eps: 0.1, seed }
    }
}

#[derive(Debug, Clone)]
pub struct PointsetResult {
    pub config: PointsetConfig,
    pub config_hash: String,
    /// `‖Ψx‖₁/‖x‖_{1,2,s}` per point.
    pub ratios: Vec<f64>,
    pub window: (f64, f64),
    pub fraction_in_window: f64,
    /// Sum of the per-point failure bounds, clamped to 1.
    pub union_bound: f64,
}

impl PointsetResult {
    pub fn guaranteed_fraction(&self) -> f64 {
        1.0 - self.union_bound
    }

    pub fn records_table(&self) -> Table {
        let mut t = Table::new(&["point", "ratio", "in_window"]);
        for (i, &r) in self.ratios.iter().enumerate() {
            t.push(&[Cell::U(i as u64), Cell::F(r), Cell::B(r >= self.window.0 && r <= self.window.1)]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t =
            Table::new(&["k", "window_low", "window_high", "fraction_in_window", "union_bound", "seed", "config_hash"]);
        t.push(&[
            Cell::U(self.config.k as u64),
            Cell::F(self.window.0),
            Cell::F(self.window.1),
            Cell::F(self.fraction_in_window),
            Cell::F(self.union_bound),
            Cell::U(self.config.seed),
            Cell::S(&self.config_hash),
        ]);
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.records_table().write(&dir.join("pointset.csv"))?;
        self.summary_table().write(&dir.join("pointset_summary.csv"))
    }
}

/// One embedding `Ψ` applied to `k` dense Gaussian points.
pub fn run_pointset(config: &PointsetConfig, runner: &Runner) -> Result<PointsetResult> {
    let PointsetConfig { k, n, s, d, eps, seed } = *config;
    ensure(k >= 1 && s >= 1 && s <= n && d >= 1, || "need k >= 1, 1 <= s <= n, d >= 1".into())?;
    ensure(eps > 0.0, || "eps must be positive".into())?;
    ensure(d * s <= MAX_ROWS, || "m = d*s too large".into())?;
    let e = psi(d * s, n, d, s, derive_seed(seed, "pointset/psi", 0))?;
    let per_point = runner.try_map(k, |i| {
        let x = gen_signal(SignalClass::DenseGaussian, n, s, derive_seed(seed, "pointset/signal", i as u64))?;
        let ratio = e.image_l1(&x)? / block_norm(&x, s)?;
        let fail = theorem_failure_bound(n, d * s, s, eps, norm_ratio(&x, s)?)?;
        Ok((ratio, fail))
    })?;
    let window = (0.63 - eps, 1.63 + eps);
    let ratios: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let inside = ratios.iter().filter(|&&r| r >= window.0 && r <= window.1).count();
    Ok(PointsetResult {
        config: config.clone(),
        config_hash: config_hash(config),
        window,
        fraction_in_window: inside as f64 / k as f64,
        union_bound: per_point.iter().map(|p| p.1).sum::<f64>().min(1.0),
        ratios,
    })
}

// ---------------------------------------------------------------------------
// Bernoulli vs Gaussian fills

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichConfig {
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub instances: usize,
    pub trials: usize,
    pub seed: u64,
}

impl SandwichConfig {
    pub fn standard(seed: u64) -> Self {
        SandwichConfig { n: 200, s: 10, d: 10, instances: 20, trials: 10_000, seed }
    }
}

/// Monte-Carlo means of `‖(A ∘ B)x‖₁` (±1 fill) and `‖(A ∘ G)x‖₁`
/// (Gaussian fill) for one mask and signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub instance: usize,
    pub rowsum: f64,
    pub mean_bernoulli: f64,
    pub se_bernoulli: f64,
    pub mean_gaussian: f64,
    pub se_gaussian: f64,
    pub expected_gaussian: f64,
}

impl SandwichRow {
    /// `rowsum/√2 − k·se ≤ mean ≤ rowsum + k·se`.
    pub fn bernoulli_in_sandwich(&self, k_se: f64) -> bool {
        let slack = k_se * self.se_bernoulli;
        self.mean_bernoulli >= self.rowsum / std::f64::consts::SQRT_2 - slack
            && self.mean_bernoulli <= self.rowsum + slack
    }

    pub fn gaussian_matches(&self, k_se: f64) -> bool {
        (self.mean_gaussian - self.expected_gaussian).abs() <= k_se * self.se_gaussian
    }
}

pub fn sandwich_instance(
    mask: Arc<SparseBinaryMask>,
    x: &[f64],
    trials: usize,
    seed: u64,
    runner: &Runner,
) -> Result<SandwichRow> {
    let rowsum = crate::analysis::rowsum(&mask, x)?;
    let sample = |kind: FillKind| -> Result<Vec<f64>> {
        runner.try_map(trials, |t| {
            CompositeEmbedding::fill(mask.clone(), kind, derive_seed(seed, kind.name(), t as u64)).image_l1(x)
        })
    };
    let b = mean_se(&sample(FillKind::Bernoulli)?);
    let g = mean_se(&sample(FillKind::Gaussian)?);
    Ok(SandwichRow {
        instance: 0,
        rowsum,
        mean_bernoulli: b.mean,
        se_bernoulli: b.se,
        mean_gaussian: g.mean,
        se_gaussian: g.se,
        expected_gaussian: BETA0 * rowsum,
    })
}

#[derive(Debug, Clone)]
pub struct SandwichResult {
    pub config: SandwichConfig,
    pub config_hash: String,
    pub rows: Vec<SandwichRow>,
}

impl SandwichResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "instance",
            "rowsum",
            "mean_bernoulli",
            "se_bernoulli",
            "mean_gaussian",
            "se_gaussian",
            "expected_gaussian",
            "seed",
            "config_hash",
        ]);
        for r in &self.rows {
            t.push(&[
                Cell::U(r.instance as u64),
                Cell::F(r.rowsum),
                Cell::F(r.mean_bernoulli),
                Cell::F(r.se_bernoulli),
                Cell::F(r.mean_gaussian),
                Cell::F(r.se_gaussian),
                Cell::F(r.expected_gaussian),
                Cell::U(self.config.seed),
                Cell::S(&self.config_hash),
            ]);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.table().write(&dir.join("bernoulli.csv"))
    }
}

pub fn run_bernoulli_sandwich(config: &SandwichConfig, runner: &Runner) -> Result<SandwichResult> {
    let SandwichConfig { n, s, d, instances, trials, seed } = *config;
    ensure(n >= 1 && s >= 1 && d >= 1 && instances >= 1 && trials >= 2, || {
        "need n, s, d, instances >= 1 and trials >= 2".into()
    })?;
    ensure(d * s <= MAX_ROWS, || "m = d*s too large".into())?;
    let rows = (0..instances)
        .map(|i| {
            let inst_seed = derive_seed(seed, "bernoulli/instance", i as u64);
            let mask = Arc::new(SparseBinaryMask::sample(d * s, n, d, derive_seed(inst_seed, "mask", 0))?);
            let x = gen_signal(SignalClass::DenseGaussian, n, s, derive_seed(inst_seed, "signal", 0))?;
            let mut row = sandwich_instance(mask, &x, trials, derive_seed(inst_seed, "fills", 0), runner)?;
            row.instance = i;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SandwichResult { config: config.clone(), config_hash: config_hash(config), rows })
}

// ---------------------------------------------------------------------------
// Cauchy median estimator

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyConfig {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
}

impl CauchyConfig {
    pub fn standard(seed: u64) -> Self {
        CauchyConfig { n: 100, m: 400, trials: 1000, eps: 0.2, seed }
    }
}

#[derive(Debug, Clone)]
pub struct CauchyResult {
    pub config: CauchyConfig,
    pub config_hash: String,
    /// `(estimate, ‖x‖₁)` per trial.
    pub estimates: Vec<(f64, f64)>,
    pub success_fraction: f64,
}

impl CauchyResult {
    pub fn records_table(&self) -> Table {
        let mut t = Table::new(&["trial", "estimate", "l1", "success"]);
        let eps = self.config.eps;
        for (i, &(est, norm)) in self.estimates.iter().enumerate() {
            t.push(&[Cell::U(i as u64), Cell::F(est), Cell::F(norm), Cell::B(within(est, norm, eps))]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["m", "eps", "success_fraction", "seed", "config_hash"]);
        t.push(&[
            Cell::U(self.config.m as u64),
            Cell::F(self.config.eps),
            Cell::F(self.success_fraction),
            Cell::U(self.config.seed),
            Cell::S(&self.config_hash),
        ]);
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.records_table().write(&dir.join("cauchy.csv"))?;
        self.summary_table().write(&dir.join("cauchy_summary.csv"))
    }
}

fn within(est: f64, norm: f64, eps: f64) -> bool {
    est >= (1.0 - eps) * norm && est <= (1.0 + eps) * norm
}

/// Fraction of trials where the median estimate lands in `(1 ± ε)‖x‖₁`,
/// with a fresh sketch and a fresh dense Gaussian signal per trial.
pub fn run_cauchy(config: &CauchyConfig, runner: &Runner) -> Result<CauchyResult> {
    let CauchyConfig { n, m, trials, eps, seed } = *config;
    ensure(n >= 1 && m >= 1 && trials >= 1, || "need n, m, trials >= 1".into())?;
    ensure(eps > 0.0, || "eps must be positive".into())?;
    let estimates = runner.try_map(trials, |t| {
        let ts = derive_seed(seed, "cauchy/trial", t as u64);
        let x = gen_signal(SignalClass::DenseGaussian, n, 1, derive_seed(ts, "signal", 0))?;
        let sk = CauchySketch::sample(m, n, derive_seed(ts, "sketch", 0))?;
        Ok((sk.median_estimate(&x)?, l1(&x)))
    })?;
    let ok = estimates.iter().filter(|&&(e, l)| within(e, l, eps)).count();
    Ok(CauchyResult {
        config: config.clone(),
        config_hash: config_hash(config),
        success_fraction: ok as f64 / trials as f64,
        estimates,
    })
}

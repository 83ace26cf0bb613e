//! Experiment harness: signal generators, distortion statistics and the
//! Monte-Carlo studies behind the CLI's `exp` subcommand.
//!
//! Every study is a pure function of its configuration. Trial `t` of a study
//! draws all its randomness from seeds derived from `(master seed, study
//! tag, t)`, and results are collected in trial order, so outputs are
//! byte-identical for any worker count.

pub mod csv;
mod studies;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::norms::{block_norm, k_interp_norm};
use crate::rng;
use crate::signal::Signal;
use crate::sketch::{sample_subset, CompositeEmbedding};

pub use studies::*;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "L1EMBED_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalClass {
    SparseGaussian,
    OneSparse,
    TwoLevel,
    DenseGaussian,
    CounterexampleX,
    CounterexampleY,
}

impl SignalClass {
    pub const FIG1: [SignalClass; 4] =
        [SignalClass::SparseGaussian, SignalClass::OneSparse, SignalClass::TwoLevel, SignalClass::DenseGaussian];

    pub fn name(self) -> &'static str {
        match self {
            SignalClass::SparseGaussian => "sparse-gaussian",
            SignalClass::OneSparse => "one-sparse",
            SignalClass::TwoLevel => "two-level",
            SignalClass::DenseGaussian => "dense-gaussian",
            SignalClass::CounterexampleX => "counterexample-x",
            SignalClass::CounterexampleY => "counterexample-y",
        }
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignalClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SignalClass::SparseGaussian,
            SignalClass::OneSparse,
            SignalClass::TwoLevel,
            SignalClass::DenseGaussian,
            SignalClass::CounterexampleX,
            SignalClass::CounterexampleY,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// Reference norm for distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `‖x‖_{1,2,s}`.
    Block,
    /// `K(x, √s)`.
    Kfunc,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Block => "block",
            NormKind::Kfunc => "kfunc",
        }
    }

    pub fn eval(self, x: &[f64], s: usize) -> Result<f64> {
        match self {
            NormKind::Block => block_norm(x, s),
            NormKind::Kfunc => k_interp_norm(x, (s as f64).sqrt()),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(NormKind::Block),
            "kfunc" => Ok(NormKind::Kfunc),
            other => Err(Error::invalid(format!("unknown norm `{other}`"))),
        }
    }
}

fn gaussian_vec(rng: &mut rng::StreamRng, n: usize, sd: f64) -> Vec<f64> {
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws a signal of the given class.
///
/// * `sparse-gaussian`: `s` standard-normal entries on a uniform random support.
/// * `one-sparse`: `e₁`.
/// * `two-level`: `x₁ = 1`, the rest i.i.d. `N(0, 1/(ns))`.
/// * `dense-gaussian`: i.i.d. standard normal.
/// * `counterexample-x`: `(1, 1/√(ns), …, 1/√(ns))` of length `n + 1`.
/// * `counterexample-y`: `e₁` of length `n + 1`.
pub fn gen_signal(class: SignalClass, n: usize, s: usize, seed: u64) -> Result<Signal> {
    if n == 0 || s == 0 {
        return Err(Error::invalid("need n, s >= 1"));
    }
    let mut rng = rng::stream(seed, class.name(), 0);
    let v = match class {
        SignalClass::SparseGaussian => {
            if s > n {
                return Err(Error::invalid(format!("sparsity s = {s} exceeds n = {n}")));
            }
            let mut support = vec![0u32; s];
            sample_subset(&mut rng, n, s, &mut support);
            let mut v = vec![0.0; n];
            for &k in &support {
                // a zero draw would lower the sparsity
                v[k as usize] = loop {
                    let g: f64 = rng.sample(StandardNormal);
                    if g != 0.0 {
                        break g;
                    }
                };
            }
            v
        }
        SignalClass::OneSparse => Signal::basis(n, 0)?.into_inner(),
        SignalClass::TwoLevel => {
            let mut v = gaussian_vec(&mut rng, n, 1.0 / ((n * s) as f64).sqrt());
            v[0] = 1.0;
            v
        }
        SignalClass::DenseGaussian => gaussian_vec(&mut rng, n, 1.0),
        SignalClass::CounterexampleX => {
            let mut v = vec![1.0 / ((n * s) as f64).sqrt(); n + 1];
            v[0] = 1.0;
            v
        }
        SignalClass::CounterexampleY => Signal::basis(n + 1, 0)?.into_inner(),
    };
    Signal::new(v)
}

/// `(‖Ψx‖₁ − N(x)) / N(x)` for a normalized embedding `Ψ`.
pub fn distortion(x: &[f64], embedding: &CompositeEmbedding, norm: NormKind, s: usize) -> Result<f64> {
    if !embedding.is_normalized() {
        return Err(Error::Precondition("distortion needs a normalized embedding".into()));
    }
    let reference = norm.eval(x, s)?;
    if reference == 0.0 {
        return Err(Error::UndefinedDistortion);
    }
    Ok((embedding.image_l1(x)? - reference) / reference)
}

/// Deterministic parallel map over trial indices.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `threads = None` reads [`THREADS_ENV`], falling back to all cores.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let threads = match threads {
            Some(t) => t,
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
                Err(_) => 0,
            },
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        Ok(Runner { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `(0..count).map(f)`, evaluated in parallel, returned in index order.
    pub fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }

    pub fn try_map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(count, f).into_iter().collect()
    }
}

/// First 16 hex digits of the SHA-256 of the config's JSON encoding.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(&Sha256::digest(&json)[..8])
}

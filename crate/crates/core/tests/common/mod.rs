#![allow(dead_code)]

use std::path::PathBuf;

/// Seed of the acceptance runs; the calibration run uses seeds 1..=200.
pub const ACCEPTANCE_SEED: u64 = 20_240_601;

/// Slack `ε̂` of the distortion window `[0.63 − ε̂, 1.63 + ε̂]`.
pub const WINDOW_EPS: f64 = 0.0;
/// Dense Gaussian signals, d = 20: bound on the median of `|distortion|`.
pub const DENSE_MEDIAN_ABS: f64 = 0.055;
/// Dense Gaussian signals, d = 20: bound on `|median distortion|`.
pub const DENSE_ABS_MEDIAN: f64 = 0.03;
/// Cauchy median estimator, m = 400, ε = 0.2: minimum success fraction.
pub const CAUCHY_SUCCESS: f64 = 0.97;

pub fn fixture(name: &str) -> serde_json::Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

pub fn num(v: &serde_json::Value, path: &str) -> f64 {
    let mut cur = v;
    for key in path.split('.') {
        cur = &cur[key];
    }
    cur.as_f64().unwrap_or_else(|| panic!("missing fixture value {path}"))
}

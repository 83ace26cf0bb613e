//! Calibration run for the Monte-Carlo acceptance thresholds.
//!
//! Every statistic is evaluated on seeds `1..=SEEDS`, disjoint from the seed
//! the acceptance suite uses, and the locked threshold is the worst observed
//! value rounded outward to the grid below.
//!
//!     cargo run --release -p l1embed-core --example calibrate \
//!         > crates/core/tests/fixtures/calibration.json

use l1embed_core::lab::{self, ExperimentConfig, NormKind, Runner, SignalClass};
use l1embed_core::stats;

const SEEDS: u64 = 200;

fn ceil_to(v: f64, step: f64) -> f64 {
    ((v / step).ceil() * step * 1e9).round() / 1e9
}

fn floor_to(v: f64, step: f64) -> f64 {
    ((v / step).floor() * step * 1e9).round() / 1e9
}

fn main() -> l1embed_core::Result<()> {
    let runner = Runner::new(None)?;

    let mut needed_eps = Vec::new();
    let mut abs_median = Vec::new();
    let mut median_abs = Vec::new();
    let mut cauchy = Vec::new();
    for seed in 1..=SEEDS {
        let mut p = lab::PointsetConfig::standard(seed);
        p.k = 64;
        let r = lab::run_pointset(&p, &runner)?;
        let lo = stats::min(&r.ratios);
        let hi = stats::max(&r.ratios);
        needed_eps.push((0.63 - lo).max(hi - 1.63).max(0.0));

        let mut f = ExperimentConfig::fig1(seed);
        f.classes = vec![SignalClass::DenseGaussian];
        f.norms = vec![NormKind::Block];
        f.d_grid = vec![20];
        let r = lab::run_fig1(&f, &runner)?;
        let v = r.distortions(SignalClass::DenseGaussian, NormKind::Block, 20);
        abs_median.push(stats::median(&v).abs());
        let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        median_abs.push(stats::median(&abs));

        cauchy.push(lab::run_cauchy(&lab::CauchyConfig::standard(seed), &runner)?.success_fraction);
    }

    let out = serde_json::json!({
        "seeds": SEEDS,
        "theorem_window": {
            "needed_eps_max": stats::max(&needed_eps),
            "locked_eps": ceil_to(stats::max(&needed_eps), 0.01),
        },
        "dense_median_distortion_d20": {
            "abs_median_max": stats::max(&abs_median),
            "abs_median_mean": stats::mean(&abs_median),
            "locked_abs_median": ceil_to(stats::max(&abs_median), 0.005),
            "median_abs_max": stats::max(&median_abs),
            "median_abs_mean": stats::mean(&median_abs),
            "locked_median_abs": ceil_to(stats::max(&median_abs), 0.005),
        },
        "cauchy_m400_eps0_2": {
            "success_min": stats::min(&cauchy),
            "success_mean": stats::mean(&cauchy),
            "locked_success": floor_to(stats::min(&cauchy), 0.01),
        },
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

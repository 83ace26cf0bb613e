//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs with `cargo test -p l1embed-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use common::*;
use l1embed_core::analysis::{upper_certificate, UPPER_CONSTANT};
use l1embed_core::lab::{self, ExperimentConfig, NormKind, Runner, SignalClass};
use l1embed_core::norms::{block_norm, k_interp_norm};
use l1embed_core::rng::{self, StreamRng};
use l1embed_core::signal::{l1, l2};
use l1embed_core::sketch::SparseBinaryMask;
use l1embed_core::stats;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Signals of mixed shape: dense, sparse, two-level, heavy-tailed and tied.
fn random_signal(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let normal = |rng: &mut StreamRng| rng.sample::<f64, _>(StandardNormal);
    match rng.random_range(0..5) {
        0 => (0..n).map(|_| normal(rng)).collect(),
        1 => {
            let mut x = vec![0.0; n];
            for _ in 0..rng.random_range(1..=n.min(4)) {
                x[rng.random_range(0..n)] = normal(rng);
            }
            x
        }
        2 => {
            let small = 1.0 / (n as f64).sqrt();
            (0..n).map(|k| if k == 0 { 1.0 } else { small * normal(rng) }).collect()
        }
        3 => (0..n).map(|_| normal(rng) / rng.random_range(0.01..1.0)).collect(),
        _ => (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect(),
    }
}

fn rel_le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * b.abs().max(f64::MIN_POSITIVE)
}

fn norm_axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = rng::stream(ACCEPTANCE_SEED, "acceptance/axioms", 0);
    let mut bad = 0;
    for i in 0..10_000 {
        let n = rng.random_range(1..=64);
        let s = rng.random_range(1..=n);
        let x = random_signal(&mut rng, n);
        let y = random_signal(&mut rng, n);
        let a: f64 = rng.random_range(-5.0..5.0);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u + v).collect();
        let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
        let (bx, by) = (block_norm(&x, s).unwrap(), block_norm(&y, s).unwrap());
        let triangle = rel_le(block_norm(&sum, s).unwrap(), bx + by, 1e-12);
        let homog = (block_norm(&ax, s).unwrap() - a.abs() * bx).abs() <= 1e-12 * (a.abs() * bx).max(f64::MIN_POSITIVE);
        let zero = vec![0.0; n];
        let definite = block_norm(&zero, s).unwrap() == 0.0 && ((bx > 0.0) == x.iter().any(|&v| v != 0.0));
        if !(triangle && homog && definite) {
            bad += 1;
            eprintln!("  axioms failed on triple {i}");
        }
    }
    let t = start.elapsed();
    outcome(bad == 0 && t < Duration::from_secs(5), format!("10000 triples, {bad} violations, {t:.2?}"))
}

fn norm_endpoints() -> Outcome {
    let mut rng = rng::stream(ACCEPTANCE_SEED, "acceptance/endpoints", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let x = random_signal(&mut rng, n);
        if l1(&x) == 0.0 {
            continue;
        }
        worst = worst.max((block_norm(&x, 1).unwrap() - l2(&x)).abs() / l2(&x));
        worst = worst.max((block_norm(&x, n).unwrap() - l1(&x)).abs() / l1(&x));
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.2e} over 1000 signals"))
}

fn equivalence_sandwich() -> Outcome {
    let mut rng = rng::stream(ACCEPTANCE_SEED, "acceptance/sandwich", 0);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=200);
        let s = rng.random_range(1..=n);
        let x = random_signal(&mut rng, n);
        let b = block_norm(&x, s).unwrap();
        let k = k_interp_norm(&x, (s as f64).sqrt()).unwrap();
        if b > 0.0 {
            worst = worst.max(k / b);
        }
        if !(rel_le(b, k, 1e-12) && rel_le(k, 1.63 * b, 1e-12)) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("10000 pairs, {bad} violations, max K/block = {worst:.6}"))
}

fn upper_certificate_check() -> Outcome {
    let mut rng = rng::stream(ACCEPTANCE_SEED, "acceptance/upper", 0);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for i in 0..10_000u64 {
        let n = rng.random_range(1..=80);
        let s = rng.random_range(1..=n);
        let d = rng.random_range(1..=8);
        let mask = SparseBinaryMask::sample(d * s, n, d, rng::derive_seed(ACCEPTANCE_SEED, "acceptance/upper/mask", i))
            .unwrap();
        let x = random_signal(&mut rng, n);
        let r = upper_certificate(&mask, &x, s).unwrap();
        if r.bound > 0.0 {
            worst = worst.max(r.quantity / r.bound * UPPER_CONSTANT);
        }
        if !r.satisfied {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("10000 instances, {bad} violations, max rowsum/(d·block) = {worst:.6}"))
}

fn conditional_expectation_check(sandwich: &lab::SandwichResult) -> Outcome {
    let ok = sandwich.rows.iter().filter(|r| r.gaussian_matches(4.0)).count();
    let worst =
        sandwich.rows.iter().map(|r| (r.mean_gaussian - r.expected_gaussian).abs() / r.se_gaussian).fold(0.0, f64::max);
    outcome(
        ok == sandwich.rows.len(),
        format!("{ok}/{} instances within 4 SE, worst {worst:.2} SE", sandwich.rows.len()),
    )
}

fn tail_domination(runner: &Runner) -> Outcome {
    let start = Instant::now();
    let r = lab::run_tails(&lab::TailsConfig::standard(ACCEPTANCE_SEED), runner).unwrap();
    let t = start.elapsed();
    let bad = r.rows.iter().filter(|row| row.empirical > row.bound + 3.0 * row.se).count();
    let worst = r.rows.iter().map(|row| row.empirical - row.bound).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        bad == 0 && r.rows.len() == 10 && t < Duration::from_secs(60),
        format!("{} thresholds, {bad} above bound + 3 SE, max(empirical − bound) = {worst:.4}, {t:.2?}", r.rows.len()),
    )
}

fn balls_into_bins(runner: &Runner) -> Outcome {
    let r = lab::run_bins(&lab::BinsConfig::standard(ACCEPTANCE_SEED), runner).unwrap();
    let mut notes = Vec::new();
    let with = &r.with_replacement;
    let without = &r.without_replacement;
    let mean_ok = with.summary.iter().all(|row| {
        let tol = if row.se_q > 0.0 { 4.0 * row.se_q } else { 1e-12 };
        (row.mean_q - row.expected_q).abs() <= tol
    });
    if !mean_ok {
        notes.push("mean q off expectation".to_string());
    }
    let order_ok = with.summary.iter().zip(&without.summary).all(|(w, o)| {
        let se = (w.se_q * w.se_q + o.se_q * o.se_q).sqrt();
        o.mean_q <= w.mean_q + 3.0 * se
    });
    if !order_ok {
        notes.push("without-replacement mean above with-replacement".to_string());
    }
    let viol_ok = [with, without]
        .iter()
        .all(|m| r.failure_bound >= 1.0 || m.violation_frequency <= r.failure_bound + 3.0 * m.violation_se);
    if !viol_ok {
        notes.push("violation frequency above bound".to_string());
    }
    outcome(
        mean_ok && order_ok && viol_ok,
        format!(
            "q_k vs (1−1/m)^(dk) {}, ordering {}, violations {:.4}/{:.4} vs bound {:.2e}{}",
            if mean_ok { "ok" } else { "off" },
            if order_ok { "ok" } else { "off" },
            with.violation_frequency,
            without.violation_frequency,
            r.failure_bound,
            if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) }
        ),
    )
}

fn rip_window(runner: &Runner) -> Outcome {
    let cfg = lab::RipConfig::standard(ACCEPTANCE_SEED);
    let needed = 2.0 / (cfg.eps * cfg.eps) * (cfg.n as f64 / 0.01).ln();
    let r = lab::run_rip(&cfg, runner).unwrap();
    let in_window = r.ratios.iter().all(|&(v, _)| v >= r.lower_edge - 1e-12 && v <= 1.0 + 1e-12);
    let exact = r.max_nonneg_deviation <= 1e-12;
    outcome(
        in_window && exact && (cfg.d as f64) >= needed && r.ratios.len() == 10_000,
        format!(
            "ratios in [{:.6}, {:.6}] vs [{:.6}, 1], nonnegative deviation {:.1e}, d = {} >= {needed:.1}",
            r.min_ratio, r.max_ratio, r.lower_edge, r.max_nonneg_deviation, cfg.d
        ),
    )
}

fn theorem_window(runner: &Runner, fig1: &lab::Fig1Result) -> Outcome {
    let mut cfg = lab::PointsetConfig::standard(ACCEPTANCE_SEED);
    cfg.k = 64;
    cfg.d = 20;
    cfg.eps = WINDOW_EPS.max(f64::MIN_POSITIVE);
    let r = lab::run_pointset(&cfg, runner).unwrap();
    let (lo, hi) = (0.63 - WINDOW_EPS, 1.63 + WINDOW_EPS);
    let inside = r.ratios.iter().all(|&v| v >= lo && v <= hi);
    let dense = fig1.distortions(SignalClass::DenseGaussian, NormKind::Block, 20);
    let abs: Vec<f64> = dense.iter().map(|v| v.abs()).collect();
    let median_abs = stats::median(&abs);
    let abs_median = stats::median(&dense).abs();
    outcome(
        inside && dense.len() == 64 && median_abs <= DENSE_MEDIAN_ABS && abs_median <= DENSE_ABS_MEDIAN,
        format!(
            "ratios in [{:.4}, {:.4}] vs [{lo}, {hi}]; dense median |distortion| {median_abs:.4} <= {DENSE_MEDIAN_ABS}, |median| {abs_median:.4} <= {DENSE_ABS_MEDIAN}",
            stats::min(&r.ratios),
            stats::max(&r.ratios)
        ),
    )
}

fn counterexample(runner: &Runner) -> Outcome {
    let start = Instant::now();
    let r = lab::run_counterexample(&lab::CounterexampleConfig::desk(ACCEPTANCE_SEED), runner).unwrap();
    let t = start.elapsed();
    let y = r.ratios(SignalClass::CounterexampleY);
    let x = r.summary_for(SignalClass::CounterexampleX);
    let floor = 2f64.sqrt() - 0.05;
    let y_exact = y.len() == 16 && y.iter().all(|&v| v == 1.0);
    outcome(
        y_exact && x.mean >= floor && x.upper_violations == 0 && t < Duration::from_secs(120),
        format!("y ≡ 1: {y_exact}; mean x ratio {:.6} >= {floor:.6}; max {:.6}; {t:.2?}", x.mean, x.max),
    )
}

fn fig1_ordering(fig1: &lab::Fig1Result) -> Outcome {
    let med = |c, n| fig1.summary_row(c, n, 20).unwrap().median;
    let a = med(SignalClass::SparseGaussian, NormKind::Block);
    let b = med(SignalClass::OneSparse, NormKind::Block);
    let c = med(SignalClass::TwoLevel, NormKind::Block);
    let identical = fig1.config.d_grid.iter().all(|&d| {
        fig1.distortions(SignalClass::SparseGaussian, NormKind::Block, d)
            == fig1.distortions(SignalClass::SparseGaussian, NormKind::Kfunc, d)
    });
    outcome(
        a < 0.0 && c > b && identical,
        format!("median (a) {a:.4} < 0; (c) {c:.4} > (b) {b:.4}; (a) identical under both norms: {identical}"),
    )
}

fn bernoulli_sandwich(sandwich: &lab::SandwichResult) -> Outcome {
    let ok = sandwich.rows.iter().filter(|r| r.bernoulli_in_sandwich(4.0)).count();
    outcome(
        ok == sandwich.rows.len(),
        format!("{ok}/{} instances inside [rowsum/√2, rowsum] ± 4 SE", sandwich.rows.len()),
    )
}

fn cauchy(runner: &Runner) -> Outcome {
    let r = lab::run_cauchy(&lab::CauchyConfig::standard(ACCEPTANCE_SEED), runner).unwrap();
    outcome(
        r.success_fraction >= CAUCHY_SUCCESS && r.estimates.len() == 1000,
        format!("success fraction {:.3} >= {CAUCHY_SUCCESS}", r.success_fraction),
    )
}

fn render_all(runner: &Runner) -> Vec<(String, String)> {
    let seed = ACCEPTANCE_SEED;
    let mut out = Vec::new();
    let mut f = ExperimentConfig::fig1(seed);
    f.n = 300;
    f.d_grid = vec![2, 10, 20];
    f.trials = 8;
    let r = lab::run_fig1(&f, runner).unwrap();
    out.push(("fig1_records".into(), r.records_table().render()));
    out.push(("fig1_summary".into(), r.summary_table().render()));
    let c = lab::CounterexampleConfig { n: 50_000, s: 20, d: 10, trials: 6, seed };
    let r = lab::run_counterexample(&c, runner).unwrap();
    out.push(("counterexample".into(), r.records_table().render()));
    let mut t = lab::TailsConfig::standard(seed);
    t.trials = 500;
    out.push(("tails".into(), lab::run_tails(&t, runner).unwrap().table().render()));
    let mut b = lab::BinsConfig::standard(seed);
    b.trials = 50;
    let r = lab::run_bins(&b, runner).unwrap();
    out.push(("bins_trace".into(), lab::BinsResult::trace_table(&r.without_replacement).render()));
    out.push(("bins_summary".into(), r.summary_table(&r.with_replacement).render()));
    let mut p = lab::RipConfig::standard(seed);
    p.trials = 300;
    out.push(("rip".into(), lab::run_rip(&p, runner).unwrap().records_table().render()));
    let mut p = lab::PointsetConfig::standard(seed);
    p.k = 20;
    out.push(("pointset".into(), lab::run_pointset(&p, runner).unwrap().records_table().render()));
    let s = lab::SandwichConfig { n: 100, s: 5, d: 4, instances: 3, trials: 200, seed };
    out.push(("bernoulli".into(), lab::run_bernoulli_sandwich(&s, runner).unwrap().table().render()));
    let mut c = lab::CauchyConfig::standard(seed);
    c.trials = 100;
    out.push(("cauchy".into(), lab::run_cauchy(&c, runner).unwrap().records_table().render()));
    out
}

fn determinism() -> Outcome {
    let reference = render_all(&Runner::new(Some(1)).unwrap());
    let mut differing = Vec::new();
    for threads in [3, 8] {
        let other = render_all(&Runner::new(Some(threads)).unwrap());
        for ((name, a), (_, b)) in reference.iter().zip(&other) {
            if a != b {
                differing.push(format!("{name}@{threads}"));
            }
        }
    }
    let rerun = render_all(&Runner::new(Some(1)).unwrap());
    if rerun != reference {
        differing.push("rerun".into());
    }
    outcome(
        differing.is_empty(),
        format!("{} CSV tables at 1/3/8 threads and a re-run, differing: {:?}", reference.len(), differing),
    )
}

fn main() {
    let runner = Runner::new(None).expect("thread pool");
    let fig1 = lab::run_fig1(&ExperimentConfig::fig1(ACCEPTANCE_SEED), &runner).unwrap();
    let sandwich = lab::run_bernoulli_sandwich(&lab::SandwichConfig::standard(ACCEPTANCE_SEED), &runner).unwrap();
    // sanity on the shared instances before the criteria read them
    for row in &sandwich.rows {
        assert!(row.rowsum > 0.0 && row.se_gaussian > 0.0);
    }

    let criteria: Vec<Criterion> = vec![
        ("norm axioms", Box::new(norm_axioms)),
        ("norm endpoints", Box::new(norm_endpoints)),
        ("equivalence sandwich", Box::new(equivalence_sandwich)),
        ("upper certificate", Box::new(upper_certificate_check)),
        ("conditional expectation", Box::new(|| conditional_expectation_check(&sandwich))),
        ("tail domination", Box::new(|| tail_domination(&runner))),
        ("balls into bins", Box::new(|| balls_into_bins(&runner))),
        ("1-RIP window", Box::new(|| rip_window(&runner))),
        ("distortion window", Box::new(|| theorem_window(&runner, &fig1))),
        ("counterexample separation", Box::new(|| counterexample(&runner))),
        ("signal-class ordering", Box::new(|| fig1_ordering(&fig1))),
        ("bernoulli sandwich", Box::new(|| bernoulli_sandwich(&sandwich))),
        ("cauchy estimator", Box::new(|| cauchy(&runner))),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

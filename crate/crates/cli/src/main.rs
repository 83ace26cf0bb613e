use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l1embed_core::lab::{self, Runner};
use l1embed_core::sketch::{CompositeEmbedding, FillKind, SparseBinaryMask};
use l1embed_core::{Error, Result, Signal};

#[derive(Parser)]
#[command(name = "l1embed", version, about = "Sparse l1 embeddings and their block-norm certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the block norm or the K-interpolation norm of a signal.
    Norm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value_t = Kind::Block)]
        kind: Kind,
    },
    /// Sample a sparse binary mask and write it as JSON.
    GenMask {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a filled mask to a signal.
    Embed {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, value_enum)]
        fill: Fill,
        #[arg(long)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Scale by 1/(d·β₀); requires --s with d = m/s.
        #[arg(long, requires = "s")]
        normalize: bool,
        #[arg(long)]
        s: Option<usize>,
        /// Write the image here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the embedding (mask, fill, seed, scale) as JSON.
        #[arg(long)]
        save_embedding: Option<PathBuf>,
    },
    /// Run an experiment and write its CSV files into --out.
    Exp(ExpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Block,
    Kfunc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fill {
    Gaussian,
    Bernoulli,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Fig1,
    Counterexample,
    Tails,
    Bins,
    Rip,
    Pointset,
    Bernoulli,
    Cauchy,
}

#[derive(Args)]
struct ExpArgs {
    #[arg(value_enum)]
    name: Experiment,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (overrides L1EMBED_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Number of points (pointset).
    #[arg(long)]
    k: Option<usize>,
    /// Number of (mask, signal) instances (bernoulli).
    #[arg(long)]
    instances: Option<usize>,
    /// Comma-separated d values (fig1).
    #[arg(long, value_delimiter = ',')]
    d_grid: Option<Vec<usize>>,
    /// Comma-separated signal classes (fig1).
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Comma-separated thresholds (tails).
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
}

impl ExpArgs {
    fn reject_unused(&self, allowed: &[&str]) -> Result<()> {
        let given = [
            ("n", self.n.is_some()),
            ("s", self.s.is_some()),
            ("d", self.d.is_some()),
            ("m", self.m.is_some()),
            ("trials", self.trials.is_some()),
            ("eps", self.eps.is_some()),
            ("k", self.k.is_some()),
            ("instances", self.instances.is_some()),
            ("d-grid", self.d_grid.is_some()),
            ("classes", self.classes.is_some()),
            ("lambdas", self.lambdas.is_some()),
        ];
        for (flag, set) in given {
            if set && !allowed.contains(&flag) {
                return Err(Error::InvalidParameter(format!("--{flag} does not apply to this experiment")));
            }
        }
        Ok(())
    }
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(fs::write(path, text)?)
}

fn run_exp(a: &ExpArgs) -> Result<String> {
    let runner = Runner::new(a.threads)?;
    let dir = a.out.as_path();
    let seed = a.seed;
    match a.name {
        Experiment::Fig1 => {
            a.reject_unused(&["n", "s", "trials", "eps", "d-grid", "classes"])?;
            let mut c = lab::ExperimentConfig::fig1(seed);
            set(&mut c.n, a.n);
            set(&mut c.s, a.s);
            set(&mut c.trials, a.trials);
            set(&mut c.eps, a.eps);
            if let Some(g) = &a.d_grid {
                c.d_grid = g.clone();
            }
            if let Some(cl) = &a.classes {
                c.classes = cl.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            }
            let r = lab::run_fig1(&c, &runner)?;
            r.write(dir)?;
            Ok(format!("fig1: {} records", r.records.len()))
        }
        Experiment::Counterexample => {
            a.reject_unused(&["n", "s", "d", "trials"])?;
            let mut c = lab::CounterexampleConfig::desk(seed);
            set(&mut c.n, a.n);
            set(&mut c.s, a.s);
            set(&mut c.d, a.d);
            set(&mut c.trials, a.trials);
            let r = lab::run_counterexample(&c, &runner)?;
            r.write(dir)?;
            let x = r.summary_for(lab::SignalClass::CounterexampleX);
            let y = r.summary_for(lab::SignalClass::CounterexampleY);
            Ok(format!("counterexample: mean ratio x = {:.6}, y = {:.6}", x.mean, y.mean))
        }
        Experiment::Tails => {
            a.reject_unused(&["n", "s", "d", "trials", "lambdas"])?;
            let mut c = lab::TailsConfig::standard(seed);
            set(&mut c.n, a.n);
            set(&mut c.s, a.s);
            set(&mut c.d, a.d);
            set(&mut c.trials, a.trials);
            if let Some(l) = &a.lambdas {
                c.lambdas = l.clone();
            }
            let r = lab::run_tails(&c, &runner)?;
            r.write(dir)?;
            Ok(format!("tails: {} thresholds", r.rows.len()))
        }
        Experiment::Bins => {
            a.reject_unused(&["m", "s", "d", "trials", "eps"])?;
            let mut c = lab::BinsConfig::standard(seed);
            set(&mut c.m, a.m);
            set(&mut c.s, a.s);
            set(&mut c.d, a.d);
            set(&mut c.trials, a.trials);
            set(&mut c.eps, a.eps);
            let r = lab::run_bins(&c, &runner)?;
            r.write(dir)?;
            Ok(format!(
                "bins: violation frequency {:.4} (with), {:.4} (without), bound {:.4e}",
                r.with_replacement.violation_frequency, r.without_replacement.violation_frequency, r.failure_bound
            ))
        }
        Experiment::Rip => {
            a.reject_unused(&["n", "s", "d", "trials", "eps"])?;
            let mut c = lab::RipConfig::standard(seed);
            set(&mut c.n, a.n);
            set(&mut c.s, a.s);
            set(&mut c.d, a.d);
            set(&mut c.trials, a.trials);
            set(&mut c.eps, a.eps);
            let r = lab::run_rip(&c, &runner)?;
            r.write(dir)?;
            Ok(format!("rip: ratios in [{:.6}, {:.6}], {} violations", r.min_ratio, r.max_ratio, r.violations))
        }
        Experiment::Pointset => {
            a.reject_unused(&["k", "n", "s", "d", "eps"])?;
            let mut c = lab::PointsetConfig::standard(seed);
            set(&mut c.k, a.k);
            set(&mut c.n, a.n);
            set(&mut c.s, a.s);
            set(&mut c.d, a.d);
            set(&mut c.eps, a.eps);
            let r = lab::run_pointset(&c, &runner)?;
            r.write(dir)?;
            Ok(format!("pointset: {:.4} of points inside the window", r.fraction_in_window))
        }
        Experiment::Bernoulli => {
            a.reject_unused(&["n", "s", "d", "trials", "instances"])?;
            let mut c = lab::SandwichConfig::standard(seed);
            set(&mut c.n, a.n);
            set(&mut c.s, a.s);
            set(&mut c.d, a.d);
            set(&mut c.trials, a.trials);
            set(&mut c.instances, a.instances);
            let r = lab::run_bernoulli_sandwich(&c, &runner)?;
            r.write(dir)?;
            let inside = r.rows.iter().filter(|row| row.bernoulli_in_sandwich(4.0)).count();
            Ok(format!("bernoulli: {inside}/{} instances inside the sandwich", r.rows.len()))
        }
        Experiment::Cauchy => {
            a.reject_unused(&["n", "m", "trials", "eps"])?;
            let mut c = lab::CauchyConfig::standard(seed);
            set(&mut c.n, a.n);
            set(&mut c.m, a.m);
            set(&mut c.trials, a.trials);
            set(&mut c.eps, a.eps);
            let r = lab::run_cauchy(&c, &runner)?;
            r.write(dir)?;
            Ok(format!("cauchy: success fraction {:.4}", r.success_fraction))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Norm { input, s, kind } => {
            let x = Signal::read(&input)?;
            let kind = match kind {
                Kind::Block => lab::NormKind::Block,
                Kind::Kfunc => lab::NormKind::Kfunc,
            };
            println!("{}", lab::csv::fmt_f64(kind.eval(&x, s)?));
        }
        Command::GenMask { m, n, d, seed, out } => {
            let mask = SparseBinaryMask::sample(m, n, d, seed)?;
            write_text(&out, &mask.to_json())?;
        }
        Command::Embed { mask, fill, seed, input, normalize, s, out, save_embedding } => {
            let mask = Arc::new(SparseBinaryMask::from_json(&read_text(&mask)?)?);
            let x = Signal::read(&input)?;
            let kind = match fill {
                Fill::Gaussian => FillKind::Gaussian,
                Fill::Bernoulli => FillKind::Bernoulli,
            };
            let mut e = CompositeEmbedding::fill(mask, kind, seed);
            if normalize {
                e = e.normalize(s.expect("clap enforces --s"))?;
            }
            let image = Signal::new(e.apply(&x)?)?;
            if let Some(path) = save_embedding {
                write_text(&path, &e.to_json()?)?;
            }
            match out {
                Some(path) => write_text(&path, &image.to_text())?,
                None => print!("{}", image.to_text()),
            }
        }
        Command::Exp(args) => {
            let msg = run_exp(&args)?;
            eprintln!("{msg}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("l1embed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

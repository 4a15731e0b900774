use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mertens_core::engine::{default_threshold, CacheContents};
use mertens_core::kernel::{coefficients, parse_rational};
use mertens_core::sieve::{build_mobius_with, build_totient_with, check_sum_identity, SieveConfig};
use mertens_core::sweep::{bench, BenchConfig};
use mertens_core::{build_mertens, run_sweep, Error, Execution, MertensOracle, Rational, Suite, SweepConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "mertens-audit", version, about = "Mertens function tables and exact inequality audits")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Run every data-parallel loop sequentially.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sieve μ, M and φ up to n and check the sum identity at n.
    Sieve {
        #[arg(long)]
        n: u64,
    },
    /// Print M(x).
    Mertens(MertensArgs),
    /// Print the coefficients d_0..d_n.
    Coeffs {
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        threshold: Option<u64>,
    },
    /// Run a verification suite and write a report.
    Verify(VerifyArgs),
    /// Time M(x) across dense-table thresholds.
    Bench {
        /// Repeatable; defaults to 10^6, 10^7, 10^8, 10^9.
        #[arg(long)]
        x: Vec<u64>,
        /// Repeatable; defaults to 10^4, 10^5, 10^6.
        #[arg(long)]
        threshold: Vec<u64>,
    },
    /// Manage the on-disk memo of large M(x) values.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args)]
struct MertensArgs {
    #[arg(long)]
    x: u64,
    #[arg(long)]
    threshold: Option<u64>,
    /// Load the memo from this file if it exists, and save it back afterwards.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CacheAction {
    /// Compute M(x) and write the resulting memo.
    Save {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        threshold: Option<u64>,
    },
    /// Load a memo and answer M(x) from it.
    Load {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        x: u64,
    },
    /// Validate a cache file and print its header.
    Info {
        #[arg(long)]
        cache: PathBuf,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    /// Single n; shorthand for --n-min n --n-max n.
    #[arg(long, conflicts_with_all = ["n_min", "n_max"])]
    n: Option<u64>,
    #[arg(long, default_value_t = 2)]
    n_min: u64,
    #[arg(long, default_value_t = 100)]
    n_max: u64,
    /// λ grid denominator q.
    #[arg(long, default_value_t = 1000)]
    grid: u64,
    /// λ as p/q or a decimal; repeatable.
    #[arg(long, value_parser = lambda_arg)]
    lambda: Vec<Rational>,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    g_samples: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record zero elapsed time per claim, so identical runs give identical
    /// reports apart from the timestamp.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Theorem1,
    Theorem2,
    Proof,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Theorem1 => Suite::Theorem1,
            SuiteArg::Theorem2 => Suite::Theorem2,
            SuiteArg::Proof => Suite::Proof,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn lambda_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.command, execution) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Domain(_) | Error::Parse(_)) => EXIT_USAGE,
        Some(Error::Inconsistent(_)) => EXIT_FAIL,
        _ => EXIT_RUNTIME,
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if threads.is_some_and(|k| k > 1) {
        eprintln!("warning: built without the `parallel` feature; --threads is ignored");
    }
    Ok(())
}

fn run(command: Command, execution: Execution) -> anyhow::Result<Outcome> {
    let sieve = SieveConfig {
        execution,
        ..SieveConfig::default()
    };
    match command {
        Command::Sieve { n } => cmd_sieve(n, &sieve),
        Command::Mertens(args) => cmd_mertens(args, sieve),
        Command::Coeffs { n, format, threshold } => cmd_coeffs(n, format, threshold, sieve),
        Command::Verify(args) => cmd_verify(args, execution, sieve),
        Command::Bench { x, threshold } => cmd_bench(x, threshold, sieve),
        Command::Cache { action } => cmd_cache(action, sieve),
    }
}

fn cmd_sieve(n: u64, sieve: &SieveConfig) -> anyhow::Result<Outcome> {
    let mob = build_mobius_with(n, sieve)?;
    let mert = build_mertens(&mob);
    let tot = build_totient_with(n, sieve)?;
    let identity = check_sum_identity(&mert, n)?;
    println!("n {n}");
    println!("mu {}", mob.get(n));
    println!("M {}", mert.get(n));
    println!("phi {}", tot.phi(n));
    println!("Phi {}", tot.prefix_sum(n));
    println!("identity {}", if identity { "ok" } else { "FAILED" });
    Ok(if identity { Outcome::Pass } else { Outcome::Fail })
}

fn oracle_for(x: u64, threshold: Option<u64>, sieve: SieveConfig) -> anyhow::Result<MertensOracle> {
    Ok(MertensOracle::with_config(threshold.unwrap_or_else(|| default_threshold(x)), sieve)?)
}

fn cmd_mertens(args: MertensArgs, sieve: SieveConfig) -> anyhow::Result<Outcome> {
    let oracle = match &args.cache {
        Some(path) if path.exists() => {
            let mut o = MertensOracle::read_cache(io::BufReader::new(File::open(path)?), sieve)?;
            if let Some(t) = args.threshold {
                o.set_threshold(t)?;
            }
            o
        }
        _ => oracle_for(args.x, args.threshold, sieve)?,
    };
    println!("{}", oracle.mertens(args.x)?);
    if let Some(path) = &args.cache {
        oracle.save_cache(path)?;
    }
    Ok(Outcome::Pass)
}

fn cmd_coeffs(n: u64, format: Format, threshold: Option<u64>, sieve: SieveConfig) -> anyhow::Result<Outcome> {
    if n < 2 {
        return Err(Error::Domain(format!("n must be at least 2, got {n}")).into());
    }
    let oracle = oracle_for(n, threshold.or(Some(default_threshold(n).max(n))), sieve)?;
    let cv = coefficients(&oracle, n)?;
    let mut out = BufWriter::new(io::stdout().lock());
    match format {
        Format::Json => {
            writeln!(out, "{{\"n\":{n},\"d\":{:?}}}", cv.coefficients())?;
        }
        Format::Csv => {
            writeln!(out, "j,d")?;
            for (j, d) in cv.coefficients().iter().enumerate() {
                writeln!(out, "{j},{d}")?;
            }
        }
    }
    out.flush()?;
    Ok(Outcome::Pass)
}

fn cmd_verify(args: VerifyArgs, execution: Execution, sieve: SieveConfig) -> anyhow::Result<Outcome> {
    let (n_min, n_max) = args.n.map_or((args.n_min, args.n_max), |n| (n, n));
    let mut cfg = SweepConfig {
        suite: args.suite.into(),
        n_min,
        n_max,
        grid: args.grid,
        threshold: args.threshold,
        g_samples: args.g_samples,
        timing: !args.no_timing,
        execution,
        sieve,
        ..SweepConfig::default()
    };
    if !args.lambda.is_empty() {
        cfg.lambdas = args.lambda;
    }
    let report = run_sweep(&cfg)?;
    let text = match args.format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => report.to_csv()?,
    };
    write_output(args.out.as_deref(), &text)?;
    let failures: Vec<_> = report.failures().collect();
    for f in failures.iter().take(20) {
        eprintln!(
            "FAIL {} n={} lambda={} margin={}",
            f.claim_id,
            f.n.map_or("-".into(), |n| n.to_string()),
            f.lambda.as_deref().unwrap_or("-"),
            f.margin
        );
    }
    if failures.len() > 20 {
        eprintln!("... {} failures in total", failures.len());
    }
    Ok(if failures.is_empty() { Outcome::Pass } else { Outcome::Fail })
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn cmd_bench(xs: Vec<u64>, thresholds: Vec<u64>, sieve: SieveConfig) -> anyhow::Result<Outcome> {
    let mut cfg = BenchConfig {
        sieve,
        ..BenchConfig::default()
    };
    if !xs.is_empty() {
        cfg.xs = xs;
    }
    if !thresholds.is_empty() {
        cfg.thresholds = thresholds;
    }
    let rows = bench(&cfg)?;
    println!("{:>14} {:>12} {:>10} {:>12} {:>12}", "x", "threshold", "M(x)", "setup_ms", "query_ms");
    for r in rows {
        println!(
            "{:>14} {:>12} {:>10} {:>12.1} {:>12.1}",
            r.x,
            r.threshold,
            r.value,
            r.setup_micros as f64 / 1e3,
            r.query_micros as f64 / 1e3
        );
    }
    Ok(Outcome::Pass)
}

fn cmd_cache(action: CacheAction, sieve: SieveConfig) -> anyhow::Result<Outcome> {
    match action {
        CacheAction::Save { cache, x, threshold } => {
            let oracle = oracle_for(x, threshold, sieve)?;
            let value = oracle.mertens(x)?;
            oracle.save_cache(&cache)?;
            println!("M({x}) = {value}");
            println!("saved {} entries to {}", oracle.stats().memo_len, cache.display());
        }
        CacheAction::Load { cache, x } => {
            let oracle = MertensOracle::read_cache(io::BufReader::new(File::open(&cache)?), sieve)?;
            let value = oracle.mertens(x)?;
            let stats = oracle.stats();
            println!("M({x}) = {value}");
            println!("memo hits {} computed {}", stats.memo_hits, stats.computed);
        }
        CacheAction::Info { cache } => {
            let contents = CacheContents::read(io::BufReader::new(File::open(&cache)?))?;
            println!("threshold {}", contents.threshold);
            println!("entries {}", contents.entries.len());
            if let (Some(first), Some(last)) = (contents.entries.first(), contents.entries.last()) {
                println!("x range {}..={}", first.0, last.0);
            }
        }
    }
    Ok(Outcome::Pass)
}

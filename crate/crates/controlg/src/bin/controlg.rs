//! Command-line front end: deterministic simulations, seed/policy
//! sweeps, CSV summaries, and the property suites.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid config or trace,
//! 3 divergence, 4 verification failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use controlg::config;
use controlg::controller::PolicyKind;
use controlg::sim::engine::run_simulation;
use controlg::trace;
use controlg::{verify, Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "controlg",
    version,
    about = "Closed-loop multi-objective scheduler simulations",
    after_help = "Exit codes: 0 ok, 1 usage, 2 invalid config/trace, 3 divergence, 4 verification failure.\n\
Set CONTROLG_THREADS to cap sweep parallelism."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace as JSONL
    Simulate {
        /// Config file (sectioned key = value text)
        #[arg(long)]
        config: PathBuf,
        /// Override the seed from the config
        #[arg(long)]
        seed: Option<u64>,
        /// Output trace path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seed range under one or more policies
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive seed range, e.g. 0..9
        #[arg(long)]
        seeds: String,
        /// Comma-separated policies, e.g. controlg,iid_from_plan
        #[arg(long)]
        policies: String,
        /// Directory for the per-run traces (created if missing)
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Aggregate a directory of traces into a CSV summary
    Report {
        /// Directory containing *.jsonl traces
        #[arg(long = "in")]
        input: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property suites (all by default)
    Verify {
        /// One suite by name, or "all"
        #[arg(long)]
        suite: Option<String>,
        /// List suite names and exit
        #[arg(long)]
        list: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Command::Simulate { config, seed, out } => simulate(&config, seed, &out),
        Command::Sweep { config, seeds, policies, out_dir } => {
            sweep(&config, &seeds, &policies, &out_dir)
        }
        Command::Report { input, out } => report(&input, &out),
        Command::Verify { suite, list } => run_verify(suite.as_deref(), list),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Diverged { .. } => EXIT_DIVERGED,
                Error::UnknownSuite(_) => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            })
        }
    }
}

fn write_trace_file(path: &Path, cfg_text: &str, records: &[trace::TraceRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    trace::write_header(&mut w, cfg_text)?;
    for rec in records {
        trace::write_record(&mut w, rec)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<u8> {
    let mut cfg = config::parse_file(config)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    let start = Instant::now();
    let output = run_simulation(&cfg)?;
    write_trace_file(out, &config::serialize(&cfg), &output.records)?;
    eprintln!(
        "{}: {} records, final losses {:?}, {:.3}s",
        out.display(),
        output.records.len(),
        output.summary.final_losses,
        start.elapsed().as_secs_f64()
    );
    if output.summary.diverged {
        eprintln!("run diverged; trace is truncated at the last finite block");
        return Ok(EXIT_DIVERGED);
    }
    Ok(0)
}

fn parse_seed_range(text: &str) -> Option<(u64, u64)> {
    let (a, b) = text.split_once("..")?;
    let lo: u64 = a.trim().parse().ok()?;
    let hi: u64 = b.trim().parse().ok()?;
    (lo <= hi).then_some((lo, hi))
}

fn sweep_threads(jobs: usize) -> std::result::Result<usize, String> {
    match std::env::var("CONTROLG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(jobs)),
            _ => Err(format!("CONTROLG_THREADS must be a positive integer, got '{v}'")),
        },
        Err(_) => {
            let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
            Ok(hw.min(jobs))
        }
    }
}

fn sweep(config: &Path, seeds: &str, policies: &str, out_dir: &Path) -> Result<u8> {
    let Some((lo, hi)) = parse_seed_range(seeds) else {
        eprintln!("error: --seeds expects an inclusive range 'a..b' with a <= b, got '{seeds}'");
        return Ok(EXIT_USAGE);
    };
    let mut kinds = Vec::new();
    for name in policies.split(',') {
        match PolicyKind::from_str(name.trim()) {
            Ok(kind) => kinds.push(kind),
            Err(e) => {
                eprintln!("error: --policies: {e}");
                return Ok(EXIT_USAGE);
            }
        }
    }
    if kinds.is_empty() {
        eprintln!("error: --policies must name at least one policy");
        return Ok(EXIT_USAGE);
    }
    let base = config::parse_file(config)?;
    std::fs::create_dir_all(out_dir)?;

    let jobs: Vec<(PolicyKind, u64)> =
        kinds.iter().flat_map(|&p| (lo..=hi).map(move |s| (p, s))).collect();
    let threads = match sweep_threads(jobs.len()) {
        Ok(n) => n,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };

    let start = Instant::now();
    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<(String, Error)>> = Mutex::new(Vec::new());
    let diverged: Mutex<Vec<String>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(policy, seed)) = jobs.get(idx) else { break };
                let name = format!("{policy}_seed{seed}.jsonl");
                let mut cfg = base.clone();
                cfg.run.policy = policy;
                cfg.run.seed = seed;
                let run = run_simulation(&cfg).and_then(|output| {
                    write_trace_file(&out_dir.join(&name), &config::serialize(&cfg), &output.records)?;
                    Ok(output.summary.diverged)
                });
                match run {
                    Ok(false) => {}
                    Ok(true) => diverged.lock().unwrap().push(name),
                    Err(e) => failures.lock().unwrap().push((name, e)),
                }
            });
        }
    });
    let failures = failures.into_inner().unwrap();
    let diverged = diverged.into_inner().unwrap();
    eprintln!(
        "{} runs on {} threads in {:.3}s ({} failed, {} diverged)",
        jobs.len(),
        threads,
        start.elapsed().as_secs_f64(),
        failures.len(),
        diverged.len()
    );
    if let Some((name, e)) = failures.first() {
        eprintln!("error: {name}: {e}");
        return Ok(match e {
            Error::Diverged { .. } => EXIT_DIVERGED,
            _ => EXIT_VALIDATION,
        });
    }
    if !diverged.is_empty() {
        for name in &diverged {
            eprintln!("diverged: {name}");
        }
        return Ok(EXIT_DIVERGED);
    }
    Ok(0)
}

fn report(input: &Path, out: &Path) -> Result<u8> {
    let csv = trace::report_dir(input)?;
    let mut w = BufWriter::new(File::create(out)?);
    w.write_all(csv.as_bytes())?;
    w.flush()?;
    eprintln!("{}: {} rows", out.display(), csv.lines().count().saturating_sub(1));
    Ok(0)
}

fn run_verify(suite: Option<&str>, list: bool) -> Result<u8> {
    if list {
        for name in verify::all_suites() {
            println!("{name}");
        }
        return Ok(0);
    }
    let results = match suite {
        None | Some("all") => {
            let mut out = Vec::new();
            for name in verify::all_suites() {
                let start = Instant::now();
                let res = verify::run_suite(name)?;
                eprintln!("{name}: {:.2}s", start.elapsed().as_secs_f64());
                println!("{}: {} ({})", res.name, if res.passed { "PASS" } else { "FAIL" }, res.details);
                out.push(res);
            }
            out
        }
        Some(name) => {
            let res = verify::run_suite(name)?;
            println!("{}: {} ({})", res.name, if res.passed { "PASS" } else { "FAIL" }, res.details);
            vec![res]
        }
    };
    let failed = results.iter().filter(|r| !r.passed).count();
    let json = serde_json::json!({
        "failed": failed,
        "passed": results.len() - failed,
        "suites": results
            .iter()
            .map(|r| {
                serde_json::json!({
                    "name": r.name,
                    "passed": r.passed,
                    "details": r.details,
                })
            })
            .collect::<Vec<_>>(),
    });
    println!("{json}");
    Ok(if failed == 0 { 0 } else { EXIT_VERIFY_FAILED })
}

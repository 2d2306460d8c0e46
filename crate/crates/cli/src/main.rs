//! `asymflat`: config-driven batch runner for charges, identities and CMC foliations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::RunConfig;
use report::TaskRecord;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "asymflat", version, about = "Charges and CMC foliations of asymptotically flat data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the tasks of a config file and write report.json and CSV outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compute C and J even if the parity check rejects the data.
        #[arg(long)]
        force_rt: bool,
        /// Angular resolution for every task.
        #[arg(long)]
        lmax: Option<usize>,
        /// Worker threads; GRAV_THREADS takes precedence.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config file against the schema without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the data families a config can declare.
    ListFamilies,
}

const FAMILIES: &[(&str, &str, &str)] = &[
    ("flat", "Euclidean space, zero data", ""),
    ("schwarzschild", "isotropic Schwarzschild slice", "mass, center = [0,0,0]"),
    (
        "harmonic",
        "u = 1 + A/r + B.x/r^3 + Q x x/r^5 with optional shift momentum",
        "a, b = [0,0,0], quadrupole, x_monopole, x_dipole, r0",
    ),
    ("kerr", "Kerr t = const slice (metric only)", "mass, spin, center = [0,0,0]"),
    (
        "rt-violating",
        "Schwarzschild plus an odd |x|^-q term",
        "mass, q in (1/2, 1), amp, dir, r0",
    ),
    (
        "perturbed",
        "base + eps * profile (even, odd, quadrupole, gauge)",
        "base = {...}, eps, perturbation = { profile = \"gauge\", q = 0.75 }",
    ),
    (
        "transformed",
        "base family in the chart y = O x + a",
        "base = {...}, rotation | euler, translation = [0,0,0]",
    ),
];

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    match std::env::var("GRAV_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("GRAV_THREADS={v:?} is not a count"))?;
            Ok(Some(n))
        }
        Err(_) => Ok(flag),
    }
}

fn run(config: &Path, out: Option<PathBuf>, force_rt: bool, lmax: Option<usize>, threads: Option<usize>) -> ExitCode {
    let mut cfg: RunConfig = match config::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = cfg.override_with(lmax, force_rt) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let threads = match thread_count(threads) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("asymflat-out"));
    if let Err(e) = report::prepare_dir(&dir) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match execute(&cfg, &dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn execute(cfg: &RunConfig, dir: &Path) -> anyhow::Result<bool> {
    let start = Instant::now();
    // Already built once during validation.
    let family = cfg.family.build().context("family")?;
    let mut records = Vec::new();
    for (i, task) in cfg.tasks.iter().enumerate() {
        let label = task.label(i);
        let t0 = Instant::now();
        let output = tasks::run_task(cfg, &family, task);
        let seconds = t0.elapsed().as_secs_f64();
        let files = report::write_task_files(dir, &label, &output)?;
        let (passed, _) = report::judge(task, &output);
        eprintln!(
            "{label}: {} {:?}{} [{seconds:.2} s]",
            if passed { "PASS" } else { "FAIL" },
            output.status,
            output.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default(),
        );
        records.push(TaskRecord {
            label,
            task: task.clone(),
            output,
            files,
            seconds,
        });
    }
    let threads = rayon::current_num_threads();
    let (rep, passed) = report::build_report(cfg, &records, threads, start.elapsed().as_secs_f64());
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&rep)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    eprintln!("report: {}", path.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            force_rt,
            lmax,
            threads,
        } => run(&config, out, force_rt, lmax, threads),
        Command::Validate { config } => match config::load(&config) {
            Ok(c) => {
                println!("valid: {} ({} tasks)", config.display(), c.tasks.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::ListFamilies => {
            for (kind, what, params) in FAMILIES {
                println!("{kind:<14} {what}");
                if !params.is_empty() {
                    println!("{:<14} parameters: {params}", "");
                }
            }
            ExitCode::SUCCESS
        }
    }
}

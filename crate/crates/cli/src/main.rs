use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fracrd::output::Evaluation;
use fracrd::{run_scenario, run_suite, sweep, write_run, RunStatus, ScenarioConfig, Suite};

const DEFAULT_OUT: &str = "fracrd-out";

/// Fractional reaction-diffusion runs, sweeps and verification suites.
///
/// Exit status: 0 when every check passed, 2 when violations were recorded,
/// 1 on any execution error.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Seed for all stochastic sampling (overrides the config seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root directory.
    #[arg(long, global = true, env = "FRACRD_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its reports and manifest.
    Run { config: PathBuf },
    /// Run one scenario per value of a numeric field.
    Sweep {
        config: PathBuf,
        /// alpha, rho, p0, points or dt.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Run a bundled suite: kernel, inequalities, ladder, bimolecular or all.
    Verify { suite: String },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn report(dir: &Path, ev: &Evaluation) {
    for c in &ev.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", dir.display());
}

fn execute(cli: Cli) -> Result<RunStatus> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let root = cli.out.clone();
    let under_root = |name: String| root.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)).join(name);

    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, cli.seed)?;
            let dir = match (&root, &cfg.output_dir) {
                (None, Some(d)) => PathBuf::from(d),
                _ => under_root(stem(&config)),
            };
            let manifest = run_scenario(&cfg, &dir)?;
            for c in &manifest.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {} artifacts to {}", manifest.artifacts.len(), dir.display());
            Ok(manifest.status)
        }
        Command::Sweep { config, axis, values } => {
            let cfg = load(&config, cli.seed)?;
            let table = sweep(&cfg, &axis, &values)?;
            let mut ev = Evaluation::default();
            ev.add("sweep.csv", table.to_csv());
            if let Some(failed) = table.column("checks_failed") {
                for ((v, _), n) in table.rows.iter().zip(failed) {
                    ev.check(format!("{axis}={v}"), n == 0.0, format!("{n} failed checks"));
                }
            }
            let dir = under_root(format!("{}-sweep-{axis}", stem(&config)));
            let echo = serde_json::to_value(&cfg)?;
            write_run(&dir, "sweep", cfg.seed, &ev, Some(echo))?;
            print!("{}", String::from_utf8_lossy(&ev.artifacts[0].bytes));
            report(&dir, &ev);
            Ok(ev.status())
        }
        Command::Verify { suite } => {
            let suites = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse::<Suite>()?] };
            let seed = cli.seed.unwrap_or(0);
            let mut status = RunStatus::Passed;
            for s in suites {
                let ev = run_suite(s, seed)?;
                let dir = under_root(s.name().to_string());
                write_run(&dir, &format!("verify-{s}"), seed, &ev, None)?;
                report(&dir, &ev);
                if ev.status() == RunStatus::Violations {
                    status = RunStatus::Violations;
                }
            }
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which means "violations" here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

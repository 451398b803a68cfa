use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fas_core::harness::config::{ConfigFile, RunConfig};
use fas_core::harness::experiments::run_all;
use fas_core::harness::output::write_all;
use fas_core::harness::validate::{run_suites, SuiteSize, SUITES};
use fas_core::Error;

#[derive(Parser)]
#[command(name = "fas-sim", version, about = "Energy-efficiency simulator for near-field fluid-antenna MIMO links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments listed in a JSON config and write CSVs.
    Run {
        config: PathBuf,
        /// Overrides master_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads for trials; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run oracle and property suites; exits nonzero if any fails.
    Validate {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the fully resolved configuration.
    ShowConfig {
        /// Resolve this file instead of the built-in defaults.
        config: Option<PathBuf>,
    },
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
    ExitCode::FAILURE
}

fn fail_with(e: Error) -> ExitCode {
    fail(e.kind(), &e.to_string())
}

fn load(path: &Path) -> Result<RunConfig, Error> {
    ConfigFile::load(path)?.resolve()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            return fail("usage", msg.lines().next().unwrap_or("invalid arguments"));
        }
    };

    match cli.command {
        Command::Run { config, seed, out, threads } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return fail_with(e),
            };
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let written = run_all(&cfg, threads).and_then(|res| write_all(&out, &res));
            match written {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail_with(e),
            }
        }
        Command::Validate { suite, seed } => match run_suites(suite.as_deref(), seed, SuiteSize::default()) {
            Ok(None) => fail("unknown_suite", &format!("known suites: {}", SUITES.join(", "))),
            Ok(Some(reports)) => {
                let mut all = true;
                for r in &reports {
                    all &= r.passed;
                    let status = if r.passed { "PASS" } else { "FAIL" };
                    println!("{status} {} cases={} failures={} {}", r.suite, r.cases, r.failures, r.detail);
                }
                if all {
                    ExitCode::SUCCESS
                } else {
                    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.suite.as_str()).collect();
                    fail("validation_failed", &failed.join(","))
                }
            }
            Err(e) => fail_with(e),
        },
        Command::ShowConfig { config } => {
            let cfg = match config {
                Some(p) => match load(&p) {
                    Ok(c) => c,
                    Err(e) => return fail_with(e),
                },
                None => RunConfig::default(),
            };
            println!("{}", cfg.to_json_pretty());
            ExitCode::SUCCESS
        }
    }
}

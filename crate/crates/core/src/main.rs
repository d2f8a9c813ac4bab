use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spillfree::harness::config::{ExperimentConfig, GainMode};
use spillfree::harness::run::{parse_value, run, sweep, ExitStatus, RunOptions, RunOutcome, Stage};

/// Spill-free tank stabilization: simulate, certify gains, verify bounds.
#[derive(Parser)]
#[command(name = "spillfree", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and sampled checks.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certify gains, simulate, and run the requested checks.
    Simulate { config: PathBuf },
    /// Gain certification only.
    Gains {
        #[command(subcommand)]
        action: GainsAction,
    },
    /// Sampled checks; simulates only for trajectory checks.
    Verify { config: PathBuf },
    /// Runs the config once per value of a parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path, e.g. `physical.mu` or `friction.c`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Subcommand)]
enum GainsAction {
    /// Check the explicit gains against the configured theorem.
    Check { config: PathBuf },
    /// Suggest gains for the configured theorem target.
    Suggest { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        exit(ExitStatus::ConfigError)
    })
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn finish(outcome: &RunOutcome) -> ExitCode {
    for m in &outcome.messages {
        eprintln!("{m}");
    }
    for a in &outcome.artifacts {
        eprintln!("wrote {}", a.display());
    }
    for v in &outcome.verifications {
        println!(
            "{:<32} {} (samples {}, worst margin {:e})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.samples,
            v.worst_margin
        );
    }
    exit(outcome.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out: cli.common.out.clone(),
        seed: cli.common.seed,
        strict: cli.common.strict,
    };
    if let Some(j) = cli.common.jobs {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global();
    }
    match cli.command {
        Command::Simulate { config } => match load(&config) {
            Ok(c) => finish(&run(c, Stage::Simulate, &opts)),
            Err(code) => code,
        },
        Command::Verify { config } => match load(&config) {
            Ok(c) => finish(&run(c, Stage::Verify, &opts)),
            Err(code) => code,
        },
        Command::Gains { action } => {
            let (path, suggest) = match action {
                GainsAction::Check { config } => (config, false),
                GainsAction::Suggest { config } => (config, true),
            };
            let mut c = match load(&path) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if suggest {
                c.gains.mode = GainMode::Suggest;
            } else if c.gains.mode == GainMode::Explicit && c.gains.theorem.is_none() {
                eprintln!("error: gains check needs `theorem` in the [gains] section");
                return exit(ExitStatus::ConfigError);
            }
            let o = run(c, Stage::Gains, &opts);
            if let Some(r) = &o.report {
                match serde_json::to_string_pretty(r) {
                    Ok(t) => println!("{t}"),
                    Err(e) => eprintln!("error: {e}"),
                }
            }
            finish(&o)
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let c = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let values: Vec<_> = values.iter().map(|v| parse_value(v)).collect();
            match sweep(&c, &param, &values, cli.common.jobs, &opts) {
                Ok((status, entries)) => {
                    for e in &entries {
                        println!("run {:03} {} -> {:?}", e.run, e.value, e.status);
                    }
                    exit(status)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit(ExitStatus::ConfigError)
                }
            }
        }
    }
}

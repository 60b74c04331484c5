use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hops_core::config::{schema, RunConfig};
use hops_core::driver::{load_config, noise_check, run, scan, NOISE_SIGMA};
use hops_core::{Error, Result};

/// Open-system dynamics in nonstationary Gaussian baths.
#[derive(Debug, Parser)]
#[command(name = "hops", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate a configuration and write `run.csv` plus `run.meta.json`.
    Run(Common),
    /// Sweep one parameter against the configured reference, writing `scan.csv`.
    Scan(Common),
    /// Check sampled noise covariances against the correlation function.
    NoiseCheck(Common),
    /// Print a description of the configuration format.
    PrintSchema,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the seed from the configuration.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output directory (default: `output` from the configuration, else `out`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn setup(&self) -> Result<(RunConfig, PathBuf)> {
        #[cfg(feature = "parallel")]
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::config("--threads", e.to_string()))?;
        }
        #[cfg(not(feature = "parallel"))]
        let _ = self.threads;
        let mut cfg = load_config(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::PrintSchema => {
            let text = serde_json::to_string_pretty(&schema()).expect("json");
            let _ = writeln!(std::io::stdout(), "{text}");
        }
        Command::Run(c) => {
            let (cfg, out) = c.setup()?;
            let s = run(&cfg, &out)?;
            eprintln!("wrote {} and {}", s.csv.display(), s.metadata.display());
            if s.trajectories > 0 {
                eprintln!("trajectories: {} kept, {} discarded", s.trajectories, s.discarded);
            }
            if let Some(cmp) = s.comparison {
                eprint!("reference: r = {:e}, max |Δρ| = {:e}", cmp.r, cmp.max_abs_diff);
                match cmp.within_3se {
                    Some(f) => eprintln!(", within 3 s.e.: {:.2}%", 100.0 * f),
                    None => eprintln!(),
                }
            }
        }
        Command::Scan(c) => {
            let (cfg, out) = c.setup()?;
            let rows = scan(&cfg, &out)?;
            for row in rows {
                eprintln!("{:>12} r = {:e}", row.value, row.r);
            }
        }
        Command::NoiseCheck(c) => {
            let (cfg, out) = c.setup()?;
            let rep = noise_check(&cfg, &out)?;
            for row in &rep.rows {
                let verdict = if row.pass() { "pass" } else { "FAIL" };
                eprintln!("{:<28} {:<9} {:>8.3} σ  {verdict}", row.check, row.sampler, row.max_sigma);
            }
            eprintln!("clipped eigenvalue mass / trace: {:e}", rep.clipped_fraction);
            if !rep.pass() {
                return Err(Error::Validation(format!("noise statistics deviate by more than {NOISE_SIGMA} standard errors")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

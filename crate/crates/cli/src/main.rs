use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use olsid_cli::commands;
use olsid_cli::settings::Overrides;

#[derive(Parser)]
#[command(name = "olsid", version, about = "Least-squares identification experiments for linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Default)]
struct Flags {
    /// Flat key=value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long = "n-list", global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Trajectory length.
    #[arg(long = "N", global = true)]
    len: Option<usize>,
    #[arg(long = "N-list", global = true, value_delimiter = ',')]
    len_list: Option<Vec<usize>>,
    #[arg(long = "lambda-list", global = true, value_delimiter = ',')]
    lambda_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    plot: bool,
    #[arg(long, global = true)]
    suite: Option<String>,
    /// jordan or hermitian.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Lift the N and trial caps.
    #[arg(long = "allow-large", global = true)]
    allow_large: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites and write verify_report.csv.
    Verify {
        /// Check an exported bundle directory instead of running the suites.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Export one simulated trajectory.
    Simulate,
    /// Spectrum table of one trajectory and the moment-oracle table.
    Spectra,
    /// OLS error and bounds per trial.
    Ols,
    /// State to noise energy ratio across dimensions.
    Talagrand,
    /// Reproduce a figure.
    Figure { name: String },
    /// Grid over lambda, n and N.
    Sweep,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            lambda: self.lambda,
            n: self.n,
            n_list: self.n_list.clone(),
            len: self.len,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            plot: self.plot.then_some(true),
            suite: self.suite.clone(),
            family: self.family.clone(),
            threads: self.threads,
            lambda_list: self.lambda_list.clone(),
            len_list: self.len_list.clone(),
            rho: self.rho,
            allow_large: self.allow_large.then_some(true),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let base = match &cli.flags.config {
        Some(p) => Overrides::from_file(p)?,
        None => Overrides::default(),
    };
    let s = cli.flags.overrides().over(base).resolve()?;
    let paths = match &cli.command {
        Command::Verify { bundle } => {
            let o = commands::cmd_verify(&s, bundle.as_deref())?;
            let suites: std::collections::BTreeSet<_> = o.checks.iter().map(|c| c.suite).collect();
            println!("{} checks in {} suites, report {}", o.checks.len(), suites.len(), o.report.display());
            if !o.passed() {
                for f in o.failures() {
                    eprintln!("FAILED {f}");
                }
                return Ok(ExitCode::FAILURE);
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Simulate => commands::cmd_simulate(&s)?,
        Command::Spectra => commands::cmd_spectra(&s)?,
        Command::Ols => commands::cmd_ols(&s)?,
        Command::Talagrand => commands::cmd_talagrand(&s)?,
        Command::Figure { name } => commands::cmd_figure(name, &s)?,
        Command::Sweep => commands::cmd_sweep(&s)?,
    };
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

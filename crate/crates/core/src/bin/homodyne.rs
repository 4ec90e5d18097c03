use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homodyne::config::ExperimentConfig;
use homodyne::pipeline::{run, Command};
use homodyne::Error;

/// Simulation and analysis of an integrated homodyne detector measuring squeezed light.
#[derive(Parser)]
#[command(name = "homodyne", version)]
struct Cli {
    /// Experiment config (TOML). Defaults describe the reference device.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory; overrides the config. Default: runs/<command>.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress MLE progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Clearance spectrum, bandwidth fit, linearity, CMRR table and MZI lock.
    Characterise,
    /// Squeezing/anti-squeezing fit, loss correction and squeezing versus frequency.
    SqueezeScan,
    /// Maximum-likelihood reconstruction and Wigner function from a phase scan.
    Tomography,
    /// Draw phase-tagged quadrature samples.
    SimulateSamples,
    /// Fit efficiency and pump coefficient to variance pairs.
    FitEq1 {
        /// CSV `p_shg_mw,v_max_snu,v_min_snu`.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<PathBuf, Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let command = match cli.command {
        Verb::Characterise => Command::Characterise,
        Verb::SqueezeScan => Command::SqueezeScan,
        Verb::Tomography => Command::Tomography,
        Verb::SimulateSamples => Command::SimulateSamples,
        Verb::FitEq1 { pairs } => {
            if let Some(p) = &pairs {
                if !p.exists() {
                    return Err(Error::MissingInput(format!("--pairs {} does not exist", p.display())));
                }
            }
            Command::FitEq1 { pairs }
        }
    };
    let out_dir = cli
        .out_dir
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(command.name()));
    run(&command, &cfg, &out_dir, !cli.quiet)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{}", summary.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            let body = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": code,
            });
            println!("{body}");
            eprintln!("error: {e}");
            ExitCode::from(code as u8)
        }
    }
}

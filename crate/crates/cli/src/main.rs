#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::{BernsteinArgs, Ctx, KernelArgs, SubordinatorArgs};
use config::RunConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "subfk", version, about = "Feynman-Kac Monte Carlo and quadrature for subordinated magnetic Schrödinger semigroups")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel estimation; results do not depend on it.
    #[arg(long, global = true, env = "SUBFK_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "subfk-out")]
    out_dir: PathBuf,
    /// Record elapsed seconds in the JSON summary (breaks byte-identical reruns).
    #[arg(long, global = true)]
    wallclock: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Divided-difference complete-monotonicity diagnostics for Ψ and e^{−tΨ}.
    BernsteinCheck(BernsteinArgs),
    /// Laplace-identity check of the subordinator sampler.
    SampleSubordinator(SubordinatorArgs),
    /// Monte-Carlo estimate of (f, e^{−t(Ψ(h)+V)} g).
    Estimate,
    /// Radial heat or resolvent kernel table.
    Kernel(KernelArgs),
    /// Kato-class conditions (1) and (3) side by side.
    Kato,
    /// Monte-Carlo estimate next to the grid oracle.
    OracleCompare,
    /// Coupled and operator-level diamagnetic inequalities.
    Diamagnetic,
    /// Hypercontractivity bounds on the grid oracle.
    HyperCheck,
}

fn run(cli: &Cli) -> Result<(output::Artifact, f64), CliError> {
    let start = Instant::now();
    if let Some(k) = cli.global.threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| CliError::Usage(format!("cannot configure {k} threads: {e}")))?;
    }
    let config = cli.global.config.as_deref().map(RunConfig::load).transpose()?;
    let ctx = Ctx { config, seed: cli.global.seed };
    let artifact = match &cli.command {
        Command::BernsteinCheck(a) => commands::bernstein_check(&ctx, a)?,
        Command::SampleSubordinator(a) => commands::sample_subordinator(&ctx, a)?,
        Command::Estimate => commands::estimate(&ctx)?,
        Command::Kernel(a) => commands::kernel(&ctx, a)?,
        Command::Kato => commands::kato(&ctx)?,
        Command::OracleCompare => commands::oracle_compare(&ctx)?,
        Command::Diamagnetic => commands::diamagnetic(&ctx)?,
        Command::HyperCheck => commands::hyper_check(&ctx)?,
    };
    Ok((artifact, start.elapsed().as_secs_f64()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|(artifact, secs)| {
        let path = output::write(&artifact, &cli.global.out_dir, cli.global.wallclock.then_some(secs))?;
        Ok((artifact.passed, path))
    });
    match outcome {
        Ok((passed, path)) => {
            println!("{}", path.display());
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("subfk: a check failed; see {}", path.display());
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("subfk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

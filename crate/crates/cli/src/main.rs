use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::Parser;
use thermolab_cli::{run, CliError, STUDIES};

/// Numerical thermodynamic formalism studies for smooth maps on flat tori.
#[derive(Debug, Parser)]
#[command(name = "thermolab", version)]
struct Args {
    /// Study to run.
    #[arg(value_parser = PossibleValuesParser::new(STUDIES))]
    study: String,

    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,

    /// Worker threads; defaults to the number of available cores. Results do
    /// not depend on it.
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}"))),
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(()),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = set_threads(args.threads).and_then(|()| run(&args.study, &args.config, &args.out));
    match result {
        Ok(record) => {
            for w in &record.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}: results in {}", record.study, args.out.display());
            for (k, v) in &record.values {
                println!("  {k} = {v}");
            }
            if record.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: {} reported failed checks", record.study);
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

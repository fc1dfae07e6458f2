//! Batch driver for thermolab studies.
//!
//! A run reads a flat `key = value` configuration, executes one study and
//! writes `summary.txt` plus one CSV per series into the output directory.
//! Wall time goes to `timing.txt`, so every other file is byte-reproducible
//! for a fixed seed.

pub mod config;
pub mod error;
pub mod output;
pub mod studies;

use std::fs;
use std::path::Path;
use std::time::Instant;

pub use config::RunConfig;
pub use error::CliError;
pub use output::Record;
pub use studies::{run_study, STUDIES};

/// Reads `config_path`, runs `study` and writes all result files to `out`.
pub fn run(study: &str, config_path: &Path, out: &Path) -> Result<Record, CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| output::io_error(config_path, e))?;
    let cfg: RunConfig = text.parse()?;
    let start = Instant::now();
    let record = run_study(study, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    record.write(out)?;
    let timing = out.join("timing.txt");
    fs::write(&timing, format!("wall_time_seconds = {}\n", output::fmt_real(elapsed))).map_err(|e| output::io_error(&timing, e))?;
    Ok(record)
}

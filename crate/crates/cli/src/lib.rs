//! Experiment runner: parses a flat config, runs one verification suite and
//! writes deterministic JSON/CSV reports (plus optional SVG plots).

pub mod config;
pub mod error;
pub mod plot;
pub mod report;
pub mod suites;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, RadiusGrid, Suite};
pub use error::CliError;
pub use report::{format_summary, summarize, Envelope, SummaryRow};

/// Output directory used when neither the config nor `--out` names one.
pub const DEFAULT_OUT: &str = "curvelab-out";

/// Runs the configured suite and writes its files into `out` (or the
/// config's `out`). Files are written one at a time after the suite ends.
pub fn run(cfg: &ExperimentConfig, plots: bool, out: Option<&Path>) -> Result<(Envelope, PathBuf), CliError> {
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let outcome = suites::run_suite(cfg, plots)?;
    fs::create_dir_all(&dir)?;
    for (name, contents) in &outcome.files {
        fs::write(dir.join(name), contents)?;
    }
    Ok((outcome.envelope, dir))
}

/// Exit status for a finished run: 0 when every margin clears the tolerance.
pub fn exit_code(envelope: &Envelope) -> i32 {
    if envelope.pass {
        0
    } else {
        1
    }
}

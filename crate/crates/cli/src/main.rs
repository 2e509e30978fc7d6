use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curvelab::{exit_code, format_summary, run, summarize, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "curvelab", version, about = "Run curvature and growth verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite named in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
        /// Output directory, overriding the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one row per suite report found in a directory.
    Summary { dir: PathBuf },
}

fn set_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CURVELAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("CURVELAB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    set_threads()?;
    match cli.command {
        Command::Run { config, plots, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            let cfg = ExperimentConfig::parse(&text)?;
            let (env, dir) = run(&cfg, plots, out.as_deref())?;
            let margin = env.worst_margin.map_or_else(|| "-inf".into(), |m| format!("{m:e}"));
            println!(
                "{}: {} cases, worst margin {margin}, {} -> {}",
                env.suite,
                env.cases,
                if env.pass { "PASS" } else { "FAIL" },
                dir.display()
            );
            Ok(exit_code(&env))
        }
        Command::Summary { dir } => {
            let rows = summarize(&dir)?;
            print!("{}", format_summary(&rows));
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("curvelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

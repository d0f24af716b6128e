use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use dop_cli::config::{ConfigError, Format};
use dop_cli::{execute, parse_config, preset, RunError};

/// Monte Carlo benchmarks and scene maps for degree-of-polarization estimators.
#[derive(Debug, Parser)]
#[command(name = "speckle-dop", version)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
struct Args {
    /// Configuration document (`key = value` with `[matrix <name>]` sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in protocol: paper-default or paper-sweep.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed; overrides the configuration and SPECKLE_DOP_SEED.
    #[arg(long, env = "SPECKLE_DOP_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads; never changes the output.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run(args: Args) -> Result<Vec<PathBuf>, RunError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                line: None,
                key: None,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            parse_config(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(f) = args.format {
        cfg.format = f.parse::<Format>().expect("clap restricts values");
    }
    execute(&cfg, args.workers)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

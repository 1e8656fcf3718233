use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trackmetrics::calendar::parse_offset;
use trackmetrics::report::{run_dwell, run_flow, run_patterns, RunOptions, RunSummary};
use trackmetrics::synth::generate_synthetic;
use trackmetrics::Error;

/// Behavioral metrics from anonymized detection metadata logs.
#[derive(Parser, Debug)]
#[command(name = "trackmetrics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dwell events and their daily statistics for zones of interest.
    Dwell(Common),
    /// Entry/exit classification through start/finish gates.
    Flow(Common),
    /// Track stitching plus zone and trajectory patterns.
    Patterns(Common),
    /// Generate a synthetic detection log with ground-truth labels.
    Synth {
        /// Synthetic stream spec (JSON).
        #[arg(long, visible_alias = "input")]
        spec: PathBuf,
        /// Output log path; `.jsonl`/`.ndjson` selects one-object-per-line.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Detection log (delimited text or newline-delimited JSON).
    #[arg(long)]
    input: PathBuf,
    /// Zone document for one camera; repeat for several cameras.
    #[arg(long, required = true)]
    zones: Vec<PathBuf>,
    /// Analysis config overriding defaults field by field (JSON or TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report tables.
    #[arg(long)]
    out: PathBuf,
    /// Restrict the analysis to one camera.
    #[arg(long)]
    camera: Option<String>,
    /// Local offset for calendar days, e.g. `-05:00` or `2`.
    #[arg(long, default_value = "+00:00", allow_hyphen_values = true)]
    timezone_offset: String,
}

impl Common {
    fn options(self) -> Result<RunOptions, Error> {
        Ok(RunOptions {
            offset: parse_offset(&self.timezone_offset)?,
            input: self.input,
            zones: self.zones,
            config: self.config,
            out: self.out,
            camera: self.camera,
        })
    }
}

fn report(summary: &RunSummary) {
    for d in &summary.diagnostics {
        eprintln!(
            "trackmetrics: warning: record {} (camera {}, track {}, ts {}) skipped: {}",
            d.index + 1,
            d.camera_id,
            d.track_id,
            d.timestamp,
            d.message
        );
    }
    for p in &summary.written {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Dwell(c) => report(&run_dwell(&c.options()?)?),
        Command::Flow(c) => report(&run_flow(&c.options()?)?),
        Command::Patterns(c) => report(&run_patterns(&c.options()?)?),
        Command::Synth { spec, out } => {
            for p in generate_synthetic(&spec, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trackmetrics: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

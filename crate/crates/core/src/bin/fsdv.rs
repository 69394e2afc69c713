use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fsdv_core::error::{Error, Result};
use fsdv_core::{config, sim, sweep, trace};

/// Seeded VANET simulator with guard-node Sybil detection.
#[derive(Parser)]
#[command(name = "fsdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its report as JSON.
    Run {
        config: PathBuf,
        /// Replay a SUMO FCD trace instead of ring-road mobility.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write the report as a CSV row.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the BEACON/DROP/DETECT/ANNOUNCE event log.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run a sweep from a spec file or a preset name.
    Sweep {
        spec: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Parse a SUMO FCD trace and summarize it.
    ImportCheck { trace: PathBuf },
    /// Sweep presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var("FSDV_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config {
                field: "FSDV_SEED".into(),
                reason: format!("{s:?} is not a 64-bit unsigned integer"),
            }),
        Err(_) => Ok(None),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes to stdout; a reader that hung up early is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            config,
            trace,
            csv,
            events,
        } => {
            let mut cfg = config::load_scenario(&config)?;
            if let Some(seed) = seed_override()? {
                cfg.seed = seed;
            }
            let (report, log) = match trace {
                Some(path) => sim::run_with_trace(&cfg, trace::import_trace(path)?)?,
                None => sim::run_logged(&cfg)?,
            };
            emit(&format!("{}\n", report.to_json()))?;
            if let Some(path) = csv {
                report.write_csv(create(&path)?)?;
            }
            if let Some(path) = events {
                sim::write_event_log(create(&path)?, &log)?;
            }
        }
        Command::Sweep { spec, workers, out } => {
            let spec = if Path::new(&spec).exists() {
                sweep::load_sweep(&spec)?
            } else {
                sweep::preset(&spec).ok_or_else(|| Error::Config {
                    field: "spec".into(),
                    reason: format!("{spec:?} is neither a file nor a preset"),
                })?
            };
            if let Some(note) = &spec.note {
                eprintln!("note: {note}");
            }
            let table = sweep::run_sweep(&spec, workers)?;
            table.write_to_dir(&out)?;
            emit(&table.to_csv())?;
        }
        Command::ImportCheck { trace } => {
            let t = trace::import_trace(&trace)?;
            let samples: usize = t.steps.iter().map(Vec::len).sum();
            emit(&format!(
                "{}: {} timesteps, {} vehicles, {} samples\n",
                trace.display(),
                t.steps.len(),
                t.vehicle_count(),
                samples
            ))?;
        }
        Command::Presets {
            action: PresetAction::List,
        } => {
            let list: String = sweep::PRESETS
                .iter()
                .map(|(name, desc)| format!("{name:8} {desc}\n"))
                .collect();
            emit(&list)?;
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
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

//! Command-line front end. Owns all file I/O and the exit-code contract:
//! 0 success, 1 checklist mismatch (or invalid model), 2 input error,
//! 3 deadlock.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::checklist::{evaluate, render_report, Format, Registry};
use crate::fram::{self, FramModel, VariabilityMap};
use crate::trace::{read_trace, write_trace};
use crate::world::{self, RunOutcome, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEADLOCK: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "hrc",
    version,
    about = "Human-robot collaboration simulator and guideline checklist"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect FRAM models.
    Model {
        #[command(subcommand)]
        action: ModelCommand,
    },
    /// Run a scenario and write its event trace.
    Sim(SimArgs),
    /// Evaluate the guideline metrics on a trace.
    Checklist(ChecklistArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Structural validation; exits 1 when the model has errors.
    Validate { model: PathBuf },
    /// Functions and couplings added or removed between two models.
    Diff { base: PathBuf, improved: PathBuf },
    /// Propagated output variability for a JSON map of seed variabilities.
    Variability { model: PathBuf, seeds: PathBuf },
}

#[derive(Debug, clap::Args)]
pub struct SimArgs {
    /// Scenario file, or the name of a shipped scenario.
    #[arg(long, default_value = "default")]
    pub scenario: String,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub ticks: u64,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace output file; stdout when absent.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Run with every co-evolution mechanism switched off.
    #[arg(long)]
    pub no_coevo: bool,
    /// Print a run summary to stderr.
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Format {
        match f {
            OutputFormat::Text => Format::TextTable,
            OutputFormat::Json => Format::Structured,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct ChecklistArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Initial FRAM model; the shipped one when absent.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Improved FRAM model; the shipped one when absent.
    #[arg(long)]
    pub improved: Option<PathBuf>,
    /// Metric registry as JSON; the built-in table when absent.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Directory receiving report.json and report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format printed to stdout.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

struct Failure(i32, String);

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure(EXIT_INPUT, format!("{context}: {e}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Model { action } => cmd_model(action, out),
        Command::Sim(args) => cmd_sim(&args, out, err),
        Command::Checklist(args) => cmd_checklist(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load_model(path: &Path) -> Result<FramModel, Failure> {
    fram::load_model(path).map_err(input(path.display()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(input("stdout"))
}

fn cmd_model(action: ModelCommand, out: &mut dyn Write) -> Result<i32, Failure> {
    match action {
        ModelCommand::Validate { model } => {
            let report = fram::validate(&load_model(&model)?);
            emit(
                out,
                &serde_json::to_string_pretty(&report).expect("report serializes"),
            )?;
            Ok(if report.is_valid() { EXIT_OK } else { EXIT_MISMATCH })
        }
        ModelCommand::Diff { base, improved } => {
            let d = fram::diff(&load_model(&base)?, &load_model(&improved)?);
            emit(out, &serde_json::to_string_pretty(&d).expect("diff serializes"))?;
            Ok(EXIT_OK)
        }
        ModelCommand::Variability { model, seeds } => {
            let m = load_model(&model)?;
            let text = fs::read_to_string(&seeds).map_err(input(seeds.display()))?;
            let seeds_map: VariabilityMap = serde_json::from_str(&text).map_err(input(seeds.display()))?;
            let map = fram::propagate_variability(&m, &seeds_map).map_err(input(seeds.display()))?;
            // Report every function, including those left at zero.
            let full: VariabilityMap = m
                .functions
                .iter()
                .map(|f| (f.id.clone(), map.get(&f.id).copied().unwrap_or_default()))
                .collect();
            emit(out, &serde_json::to_string_pretty(&full).expect("map serializes"))?;
            Ok(EXIT_OK)
        }
    }
}

/// A scenario file path, or a shipped scenario name when no such file exists.
pub fn resolve_scenario(spec: &str) -> Result<Scenario, world::SimError> {
    let path = Path::new(spec);
    if path.exists() {
        return Scenario::load(path);
    }
    Scenario::builtin(spec).ok_or_else(|| world::SimError::Io {
        path: spec.into(),
        message: "no such file or shipped scenario".into(),
    })
}

fn cmd_sim(args: &SimArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let mut scenario = resolve_scenario(&args.scenario).map_err(input("scenario"))?;
    if args.no_coevo {
        scenario.coevo.enabled = false;
    }
    let result = world::run(&scenario, args.seed, args.ticks).map_err(input("simulation"))?;
    match &args.trace {
        Some(path) => {
            let file = fs::File::create(path).map_err(input(path.display()))?;
            write_trace(std::io::BufWriter::new(file), &result.events).map_err(input(path.display()))?;
        }
        None => write_trace(&mut *out, &result.events).map_err(input("stdout"))?,
    }
    if args.verbose {
        let _ = writeln!(
            err,
            "{:?} after {} ticks, {} events, shipped {:?}",
            result.outcome,
            result.state.tick,
            result.events.len(),
            result.state.shipped
        );
    }
    Ok(match result.outcome {
        RunOutcome::Deadlock => {
            let _ = writeln!(err, "deadlock: no progress at tick {}", result.state.tick);
            EXIT_DEADLOCK
        }
        RunOutcome::Completed | RunOutcome::TickLimit => EXIT_OK,
    })
}

fn cmd_checklist(args: &ChecklistArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let file = fs::File::open(&args.trace).map_err(input(args.trace.display()))?;
    let trace = read_trace(BufReader::new(file)).map_err(input(args.trace.display()))?;
    let initial = match &args.initial {
        Some(p) => load_model(p)?,
        None => fram::shipped_initial(),
    };
    let improved = match &args.improved {
        Some(p) => load_model(p)?,
        None => fram::shipped_improved(),
    };
    let registry = match &args.registry {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(input(p.display()))?;
            serde_json::from_str::<Registry>(&text).map_err(input(p.display()))?
        }
        None => Registry::builtin(),
    };
    let report = evaluate(&initial, &improved, &trace, &registry).map_err(input(args.trace.display()))?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(input(dir.display()))?;
        for (name, format) in [
            ("report.json", Format::Structured),
            ("report.txt", Format::TextTable),
        ] {
            let path = dir.join(name);
            fs::write(&path, render_report(&report, format)).map_err(input(path.display()))?;
        }
    }
    emit(out, render_report(&report, args.format.into()).trim_end())?;
    Ok(if report.all_match(&registry) {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

//! `qrenewal`: command-line front end.
//!
//! Exit codes: 0 ok, 1 invariant failure, 2 bad flags, 3 degenerate
//! parameters, 4 I/O failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qrenewal::classical::{build_machine, DEFAULT_DELTA};
use qrenewal::experiments::{
    equivalence_study, Axis, AxisScale, FamilyGrid, PrecisionGrid, SweepMode, SweepSpec, SweepTable,
};
use qrenewal::metrics::report;
use qrenewal::quantum::QuantumModel;
use qrenewal::stats::{gap_lengths, GapHistogram};
use qrenewal::verify::{all_passed, run_suite, Tolerances};
use qrenewal::{Error, ProcessParams};

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "qrenewal",
    version,
    about = "Classical and quantum causal models of dual Poisson processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Output format.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Truncation fraction for the classical model.
    #[arg(long, global = true, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every memory metric at one parameter point.
    Metrics(PointArgs),
    /// Sweep the timestep (precision) or the (gamma, p) family.
    Sweep(SweepArgs),
    /// Emit a simulated binary sequence.
    Simulate(SimulateArgs),
    /// Run the invariant suite at one parameter point.
    Verify(VerifyArgs),
    /// Export U, E0 and E1 as JSON.
    ExportModel(PointArgs),
    /// Compare classical and quantum simulations against the survival function.
    Equivalence(EquivalenceArgs),
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Rate of the first channel
    #[arg(long)]
    gamma1: f64,
    /// Rate of the second channel
    #[arg(long)]
    gamma2: f64,
    /// Probability of the first channel
    #[arg(long)]
    p: f64,
    /// Timestep
    #[arg(long)]
    dt: f64,
}

impl PointArgs {
    fn params(&self) -> qrenewal::Result<ProcessParams> {
        ProcessParams::new(self.gamma1, self.gamma2, self.p, self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Precision,
    Family,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "precision")]
    mode: SweepKind,

    #[arg(long, default_value_t = 12.0)]
    gamma1: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma2: f64,
    #[arg(long, default_value_t = 0.9)]
    p: f64,

    /// Largest timestep of the precision grid.
    #[arg(long, default_value_t = PrecisionGrid::default().dt_max)]
    dt_max: f64,
    /// Smallest timestep of the precision grid.
    #[arg(long, default_value_t = PrecisionGrid::default().dt_min)]
    dt_min: f64,
    #[arg(long, default_value_t = PrecisionGrid::default().points)]
    dt_points: usize,

    #[arg(long, default_value_t = FamilyGrid::default().gamma.min)]
    gamma_min: f64,
    #[arg(long, default_value_t = FamilyGrid::default().gamma.max)]
    gamma_max: f64,
    #[arg(long, default_value_t = FamilyGrid::default().gamma.points)]
    gamma_points: usize,
    /// Spacing of the gamma axis.
    #[arg(long, value_enum, default_value = "log")]
    gamma_scale: Scale,

    #[arg(long, default_value_t = FamilyGrid::default().p.min)]
    p_min: f64,
    #[arg(long, default_value_t = FamilyGrid::default().p.max)]
    p_max: f64,
    #[arg(long, default_value_t = FamilyGrid::default().p.points)]
    p_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Linear,
    Log,
}

impl From<Scale> for AxisScale {
    fn from(s: Scale) -> Self {
        match s {
            Scale::Linear => AxisScale::Linear,
            Scale::Log => AxisScale::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Classical,
    Quantum,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_enum, default_value = "quantum")]
    model: Engine,
    #[arg(long)]
    steps: usize,
    /// Initial causal state (0s since the last event).
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Symbols per output line.
    #[arg(long, default_value_t = 64)]
    wrap: usize,
    /// Run the quantum engine on the full two-qubit statevector.
    #[arg(long)]
    statevector: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = Tolerances::default().unitarity)]
    unitarity_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().kraus)]
    kraus_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().recurrence)]
    recurrence_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().survival)]
    survival_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().density)]
    density_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().symmetry)]
    symmetry_tol: f64,
    #[arg(long, default_value_t = Tolerances::default().normalization)]
    normalization_tol: f64,
}

#[derive(Debug, Args)]
struct EquivalenceArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = 1_000_000)]
    steps: usize,
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::InvalidState { .. } => EXIT_USAGE,
            Error::Degenerate(_) => EXIT_DEGENERATE,
            Error::Completion(_) => EXIT_INVARIANT,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Decode(_) => EXIT_IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(e: io::Error, what: &str) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{what}: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("qrenewal: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let common = &cli.common;
    if !(common.delta > 0.0 && common.delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {}",
            common.delta
        ))
        .into());
    }
    let (text, code) = match &cli.command {
        Command::Metrics(point) => (cmd_metrics(point, common)?, 0),
        Command::Sweep(args) => (cmd_sweep(args, common)?, 0),
        Command::Simulate(args) => (cmd_simulate(args, common)?, 0),
        Command::Verify(args) => cmd_verify(args, common)?,
        Command::ExportModel(point) => {
            let model = QuantumModel::new(&point.params()?.discretize()?)?;
            (model.export().to_json()? + "\n", 0)
        }
        Command::Equivalence(args) => {
            let r = equivalence_study(&args.point.params()?, args.steps, common.seed)?;
            let code = if r.passed() { 0 } else { EXIT_INVARIANT };
            (
                serde_json::to_string_pretty(&r).map_err(Error::from)? + "\n",
                code,
            )
        }
    };
    emit(&text, common.out.as_ref())?;
    Ok(code)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut file =
                File::create(path).map_err(|e| io_failure(e, &path.display().to_string()))?;
            file.write_all(text.as_bytes())
                .map_err(|e| io_failure(e, &path.display().to_string()))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| io_failure(e, "stdout"))
        }
    }
}

fn cmd_metrics(point: &PointArgs, common: &CommonArgs) -> Result<String, Failure> {
    let r = report(&point.params()?, common.delta)?;
    match common.format.unwrap_or(Format::Json) {
        Format::Json => Ok(serde_json::to_string_pretty(&r).map_err(Error::from)? + "\n"),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.serialize(r).map_err(Error::from)?;
            let bytes = w.into_inner().map_err(|e| Error::Decode(e.to_string()))?;
            Ok(String::from_utf8(bytes).map_err(|e| Error::Decode(e.to_string()))?)
        }
    }
}

fn sweep_spec(args: &SweepArgs, common: &CommonArgs) -> SweepSpec {
    let mode = match args.mode {
        SweepKind::Precision => SweepMode::Precision {
            gamma1: args.gamma1,
            gamma2: args.gamma2,
            p: args.p,
            grid: PrecisionGrid {
                dt_max: args.dt_max,
                dt_min: args.dt_min,
                points: args.dt_points,
            },
        },
        SweepKind::Family => SweepMode::Family {
            grid: FamilyGrid {
                gamma: Axis {
                    min: args.gamma_min,
                    max: args.gamma_max,
                    points: args.gamma_points,
                    scale: args.gamma_scale.into(),
                },
                p: Axis {
                    min: args.p_min,
                    max: args.p_max,
                    points: args.p_points,
                    scale: AxisScale::Linear,
                },
            },
        },
    };
    SweepSpec {
        mode,
        delta: common.delta,
        seed: common.seed,
    }
}

fn cmd_sweep(args: &SweepArgs, common: &CommonArgs) -> Result<String, Failure> {
    let table = sweep_spec(args, common).run()?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(table.to_csv_string()?),
        Format::Json => {
            let value = match &table {
                SweepTable::Precision(rows) => serde_json::to_string_pretty(rows),
                SweepTable::Family(rows) => serde_json::to_string_pretty(rows),
            };
            Ok(value.map_err(Error::from)? + "\n")
        }
    }
}

fn cmd_simulate(args: &SimulateArgs, common: &CommonArgs) -> Result<String, Failure> {
    if args.wrap == 0 {
        return Err(Error::InvalidParameter("--wrap must be positive".into()).into());
    }
    let dp = args.point.params()?.discretize()?;
    let sequence = match args.model {
        Engine::Classical => {
            build_machine(&dp, common.delta)?.simulate(args.start, args.steps, common.seed)?
        }
        Engine::Quantum => {
            let model = QuantumModel::new(&dp)?;
            if args.statevector {
                model.simulate_statevector(args.start, args.steps, common.seed)?
            } else {
                model.simulate(args.start, args.steps, common.seed)?
            }
        }
    };
    let gaps = gap_lengths(&sequence);
    let max_gap = gaps.iter().copied().max().unwrap_or(0);
    let histogram = GapHistogram::from_gaps(&gaps, max_gap);
    let ones = sequence.iter().filter(|&&b| b == 1).count();
    let model = match args.model {
        Engine::Classical => "classical",
        Engine::Quantum => "quantum",
    };
    let stats = serde_json::json!({
        "model": model,
        "steps": args.steps,
        "seed": common.seed,
        "ones": ones,
        "gaps": gaps.len(),
        "gap_histogram": histogram.counts,
    });
    let symbols: String = sequence
        .iter()
        .map(|&b| if b == 1 { '1' } else { '0' })
        .collect();
    match common.format {
        Some(Format::Json) => {
            let mut doc = stats;
            doc["sequence"] = serde_json::Value::String(symbols);
            Ok(serde_json::to_string(&doc).map_err(Error::from)? + "\n")
        }
        _ => {
            let mut text = String::with_capacity(symbols.len() + symbols.len() / args.wrap + 256);
            for chunk in symbols.as_bytes().chunks(args.wrap) {
                text.push_str(std::str::from_utf8(chunk).expect("ascii"));
                text.push('\n');
            }
            text.push_str(&serde_json::to_string(&stats).map_err(Error::from)?);
            text.push('\n');
            Ok(text)
        }
    }
}

fn cmd_verify(args: &VerifyArgs, common: &CommonArgs) -> Result<(String, u8), Failure> {
    let tol = Tolerances {
        unitarity: args.unitarity_tol,
        kraus: args.kraus_tol,
        recurrence: args.recurrence_tol,
        survival: args.survival_tol,
        density: args.density_tol,
        symmetry: args.symmetry_tol,
        normalization: args.normalization_tol,
    };
    let results = run_suite(&args.point.params()?, common.delta, &tol)?;
    let ok = all_passed(&results);
    let text = match common.format {
        Some(Format::Json) => serde_json::to_string_pretty(&results).map_err(Error::from)? + "\n",
        _ => {
            let mut text: String = results.iter().map(|r| format!("{r}\n")).collect();
            text.push_str(if ok {
                "all checks passed\n"
            } else {
                "invariant failure\n"
            });
            text
        }
    };
    Ok((text, if ok { 0 } else { EXIT_INVARIANT }))
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acqsim_core::linkmodel::PCIE_LANE_WIDTHS;
use acqsim_core::{
    budget_table, compare, run, write_exports, DeadlineViolation, Error, ExportFormat, Scenario,
    SimReport,
};
use clap::{Parser, Subcommand, ValueEnum};

/// Link budgets and discrete-event simulation of camera acquisition pipelines.
#[derive(Parser)]
#[command(name = "acqsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print effective link rates for PCIe widths and camera interfaces.
    Budget(BudgetArgs),
    /// Run a scenario file and write its reports.
    Simulate(SimulateArgs),
    /// Print per-metric deltas (b - a) between two structured reports.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Structured,
    Tabular,
}

#[derive(clap::Args)]
struct BudgetArgs {
    /// PCIe generation(s); all of 1-5 when omitted.
    #[arg(long = "gen", value_parser = clap::value_parser!(u8).range(1..=5), num_args = 1..)]
    generations: Vec<u8>,
    /// Lane width(s); all of 1, 2, 4, 8, 16 when omitted.
    #[arg(long, value_parser = parse_lanes, num_args = 1..)]
    lanes: Vec<u8>,
    /// Protocol efficiency applied to the PCIe rows, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    efficiency: f64,
    /// Append camera-interface presets.
    #[arg(long)]
    presets: bool,
    /// Every generation, every width and the presets.
    #[arg(long, conflicts_with_all = ["generations", "lanes"])]
    all: bool,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    format: TableFormat,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Directory for the report files.
    #[arg(long, default_value = ".")]
    output: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write only this export; both are written by default.
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// Baseline structured report.
    a: PathBuf,
    /// Structured report compared against the baseline.
    b: PathBuf,
    /// Also write the table to this file.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    format: TableFormat,
}

fn parse_lanes(s: &str) -> Result<u8, String> {
    let lanes: u8 = s
        .parse()
        .map_err(|_| format!("{s:?} is not a lane count"))?;
    if PCIE_LANE_WIDTHS.contains(&lanes) {
        Ok(lanes)
    } else {
        Err(format!("lane width must be one of {PCIE_LANE_WIDTHS:?}"))
    }
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_VIOLATIONS: u8 = 2;
const EXIT_IO: u8 = 3;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Budget(args) => budget(args),
        Command::Simulate(args) => simulate(args),
        Command::Compare(args) => compare_reports(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn budget(args: BudgetArgs) -> Result<u8, Failure> {
    let all_gens: Vec<u8> = (1..=5).collect();
    let gens = if args.generations.is_empty() || args.all {
        all_gens
    } else {
        args.generations
    };
    let lanes = if args.lanes.is_empty() || args.all {
        PCIE_LANE_WIDTHS.to_vec()
    } else {
        args.lanes
    };
    let table = budget_table(&gens, &lanes, args.presets || args.all, args.efficiency)?;
    match args.format {
        TableFormat::Text => print!("{table}"),
        TableFormat::Csv => print!("{}", table.to_csv()?),
        TableFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(&table).map_err(Error::from)?
        ),
    }
    Ok(0)
}

const LISTED_VIOLATIONS: usize = 10;

fn summary(r: &SimReport) -> String {
    let a = &r.aggregates;
    let mut s = String::new();
    let _ = writeln!(s, "run {}", r.scenario);
    let _ = writeln!(
        s,
        "  frames: {} generated, {} delivered, {} dropped, {} in flight",
        a.generated, a.delivered, a.dropped, a.in_flight
    );
    let _ = writeln!(
        s,
        "  latency ns: min {} p50 {} p99 {} max {}",
        a.latency.min_ns, a.latency.p50_ns, a.latency.p99_ns, a.latency.max_ns
    );
    let _ = writeln!(s, "  throughput: {:.3} Gb/s", a.throughput_gbps);
    let _ = writeln!(s, "  copy count: {}", a.copy_count);
    let _ = writeln!(s, "  timestamp rms: {:.3} ns", a.timestamp_rms_ns);
    let _ = writeln!(s, "  deadline violations: {}", a.deadline_violations.len());
    for v in a.deadline_violations.iter().take(LISTED_VIOLATIONS) {
        let line = match v {
            DeadlineViolation::Safety {
                frame_id,
                latency_ns,
                deadline_ns,
            } => format!("safety: frame {frame_id} latency {latency_ns} ns > {deadline_ns} ns"),
            DeadlineViolation::Control {
                frame_id,
                latency_ns,
                deadline_ns,
            } => format!("control: frame {frame_id} latency {latency_ns} ns > {deadline_ns} ns"),
            DeadlineViolation::TimestampRms { rms_ns, budget_ns } => {
                format!("timestamp: rms {rms_ns:.3} ns > {budget_ns} ns")
            }
        };
        let _ = writeln!(s, "    {line}");
    }
    if let Some(more) = a.deadline_violations.len().checked_sub(LISTED_VIOLATIONS) {
        if more > 0 {
            let _ = writeln!(s, "    ... {more} more in the report");
        }
    }
    s
}

fn simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&args.scenario).map_err(|e| io_failure(&args.scenario, e))?;
    let scenario = Scenario::from_json(&text)?;
    let runs = scenario.resolve(args.seed)?;
    for cam in &scenario.cameras {
        for w in cam.validate()? {
            eprintln!("warning: {w}");
        }
    }
    if runs.len() > 1 {
        println!(
            "aggregate camera demand: {:.3} Gb/s over {} independent pipelines",
            scenario.aggregate_demand_gbps(),
            runs.len()
        );
    }
    let formats = match args.format {
        Some(ReportFormat::Structured) => vec![ExportFormat::Structured],
        Some(ReportFormat::Tabular) => vec![ExportFormat::Tabular],
        None => vec![ExportFormat::Structured, ExportFormat::Tabular],
    };
    let mut violated = false;
    for r in runs {
        let report = run(&r.topology, &r.config)?;
        let paths = write_exports(&report, &formats, &args.output, &r.name)?;
        print!("{}", summary(&report));
        for p in paths {
            println!("  wrote {}", p.display());
        }
        violated |= report.has_violations();
    }
    Ok(if violated { EXIT_VIOLATIONS } else { 0 })
}

fn load_report(path: &Path) -> Result<SimReport, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    SimReport::from_json(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })
}

fn compare_reports(args: CompareArgs) -> Result<u8, Failure> {
    let a = load_report(&args.a)?;
    let b = load_report(&args.b)?;
    let table = compare(&a, &b)?;
    let rendered = match args.format {
        TableFormat::Text => table.to_string(),
        TableFormat::Csv => table.to_csv()?,
        TableFormat::Json => serde_json::to_string_pretty(&table).map_err(Error::from)? + "\n",
    };
    print!("{rendered}");
    if let Some(path) = &args.output {
        fs::write(path, &rendered).map_err(|e| io_failure(path, e))?;
    }
    Ok(0)
}

//! Command-line front end: evaluate prediction files, sweep the floor
//! gamma, generate synthetic fixtures, and re-render reliability diagrams
//! from saved reports.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 input
//! validation failure, 4 I/O failure. All outputs are deterministic
//! functions of argv plus the input bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use probeval::{
    evaluate_path, generator, render_reliability_svg, sweep_path, write_predictions, write_report,
    write_sweep, Error, EvalConfig, Format, GammaSweep, MetricReport, ReportFormat, SynthKind,
    SynthSpec,
};

#[derive(Parser)]
#[command(
    name = "probeval",
    version,
    about = "Generalized-mean quality metrics for probabilistic classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a prediction file and print the metric summary
    Evaluate(EvaluateArgs),
    /// Recompute the metrics across a grid of floor gammas
    Sweep(SweepArgs),
    /// Generate a synthetic prediction file from a seeded model
    Synth(SynthArgs),
    /// Re-render the reliability diagram from a saved JSON report
    Plot(PlotArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Prediction file: CSV (label,p0,p1,...) or JSONL ({"label":..,"probs":[..]})
    #[arg(long)]
    input: PathBuf,
    /// Input format [default: inferred from the extension]
    #[arg(long, value_name = "csv|jsonl")]
    format: Option<String>,
    /// Fail on the first invalid row instead of skipping and counting it
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ConfigArgs {
    /// Floor for probabilities entering the log/negative-power means
    #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
    gamma: f64,
    /// Number of equal-population bins for the measured metrics
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Restrict the reported metrics to correctly classified records
    #[arg(long)]
    correct_decisions_only: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Write the full report as JSON
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the flat metric table as TSV
    #[arg(long)]
    tsv: Option<PathBuf>,
    /// Write the reliability diagram as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated gamma grid, each value in [0, 1)
    #[arg(
        long,
        default_value = "0.05,0.01,0.005,0.001,0",
        allow_hyphen_values = true
    )]
    gammas: String,
    /// Write the sweep table as JSON
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator: calibrated, temperature:T (T > 0), or one-hot:A (A in [0, 1])
    #[arg(long)]
    kind: String,
    /// Number of records
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of classes
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// RNG seed; the same seed always yields the same file
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Beta shape alpha for the top-class confidence
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    alpha: f64,
    /// Beta shape beta for the top-class confidence
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    beta: f64,
    /// Destination prediction file
    #[arg(long)]
    output: PathBuf,
    /// Output format [default: inferred from the extension]
    #[arg(long, value_name = "csv|jsonl")]
    format: Option<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Saved JSON report (the evaluate subcommand's --output)
    #[arg(long)]
    report: PathBuf,
    /// Destination SVG file
    #[arg(long)]
    svg: PathBuf,
}

/// An error already mapped to its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        let code = match err {
            Error::InvalidConfig(_)
            | Error::TooFewBins { .. }
            | Error::ZeroGammaSingularity
            | Error::InvalidSynthSpec(_)
            | Error::EmptyInput(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version displays exit 0; real parse errors are usage
            // errors.
            let code = if err.exit_code() == 0 { 0 } else { 2 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Evaluate(args) => run_evaluate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Synth(args) => run_synth(args),
        Command::Plot(args) => run_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn parse_format(flag: &Option<String>, path: &Path) -> Result<Format, Failure> {
    match flag {
        Some(s) => Format::from_str(s)
            .map_err(|_| Failure::usage(format!("--format must be csv or jsonl, got {s:?}"))),
        None => Format::from_path(path).map_err(|_| {
            Failure::usage(format!(
                "cannot infer a format from {path:?}; pass --format csv or --format jsonl"
            ))
        }),
    }
}

fn build_config(args: &ConfigArgs) -> Result<EvalConfig, Failure> {
    if args.bins == 0 {
        return Err(Failure::usage("--bins must be at least 1"));
    }
    if !args.gamma.is_finite() || !(0.0..1.0).contains(&args.gamma) {
        return Err(Failure::usage(format!(
            "--gamma must lie in [0, 1), got {}",
            args.gamma
        )));
    }
    let config = EvalConfig {
        gamma: args.gamma,
        bins: args.bins,
        correct_decisions_only: args.correct_decisions_only,
        ..EvalConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn parse_gammas(flag: &str) -> Result<Vec<f64>, Failure> {
    let mut gammas = Vec::new();
    for piece in flag.split(',') {
        let piece = piece.trim();
        let gamma: f64 = piece
            .parse()
            .map_err(|_| Failure::usage(format!("--gammas entry {piece:?} is not a number")))?;
        if !gamma.is_finite() || !(0.0..1.0).contains(&gamma) {
            return Err(Failure::usage(format!(
                "--gammas entries must lie in [0, 1), got {gamma}"
            )));
        }
        gammas.push(gamma);
    }
    if gammas.is_empty() {
        return Err(Failure::usage("--gammas must list at least one value"));
    }
    Ok(gammas)
}

fn dataset_name(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    match File::create(path) {
        Ok(file) => Ok(BufWriter::new(file)),
        Err(err) => Err(Failure {
            code: 4,
            message: format!("cannot write {path:?}: {err}"),
        }),
    }
}

/// The standard-output summary: one reported / measured pair per metric,
/// three decimals.
fn summary(report: &MetricReport) -> String {
    let pair = |r: f64, t: f64| format!("{r:.3} / {t:.3}");
    let mut out = String::new();
    if let Some(name) = &report.dataset_name {
        let _ = writeln!(out, "dataset             : {name}");
    }
    let _ = writeln!(
        out,
        "records             : {} accepted, {} rejected",
        report.dataset.n_records, report.dataset.n_rejected
    );
    let _ = writeln!(
        out,
        "prediction accuracy : {:.3}",
        report.prediction_accuracy
    );
    let _ = writeln!(
        out,
        "decisiveness        : {}",
        pair(report.reported.decisiveness, report.truth.decisiveness)
    );
    let _ = writeln!(
        out,
        "geometric accuracy  : {}",
        pair(report.reported.geometric, report.truth.geometric)
    );
    let _ = writeln!(
        out,
        "robustness          : {}",
        pair(report.reported.robustness, report.truth.robustness)
    );
    let _ = writeln!(out, "cross-entropy       : {:.3}", report.cross_entropy);
    let _ = writeln!(
        out,
        "confidence slope    : {:.3} ({})",
        report.slope.slope, report.slope.verdict
    );
    out
}

fn sweep_table(sweep: &GammaSweep) -> String {
    let mut out = String::new();
    let mut push_row = |line: String| {
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(format!(
        "{:<10} {:<17} {:<17} {:<17}",
        "gamma", "decisiveness", "geometric", "robustness"
    ));
    for row in &sweep.rows {
        let pair = |r: f64, t: f64| format!("{r:.3} / {t:.3}");
        push_row(format!(
            "{:<10} {:<17} {:<17} {:<17}",
            row.gamma,
            pair(row.reported.decisiveness, row.truth.decisiveness),
            pair(row.reported.geometric, row.truth.geometric),
            pair(row.reported.robustness, row.truth.robustness)
        ));
    }
    out
}

fn run_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let config = build_config(&args.config)?;
    let format = parse_format(&args.input.format, &args.input.input)?;
    let report = evaluate_path(
        &args.input.input,
        Some(format),
        &config,
        args.input.strict,
        dataset_name(&args.input.input),
    )?;
    if let Some(path) = &args.output {
        write_report(&report, ReportFormat::Json, create(path)?)?;
    }
    if let Some(path) = &args.tsv {
        write_report(&report, ReportFormat::Tsv, create(path)?)?;
    }
    if let Some(path) = &args.svg {
        render_reliability_svg(&report, path)?;
    }
    print!("{}", summary(&report));
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let config = build_config(&args.config)?;
    let gammas = parse_gammas(&args.gammas)?;
    let format = parse_format(&args.input.format, &args.input.input)?;
    let sweep = sweep_path(
        &args.input.input,
        Some(format),
        &config,
        args.input.strict,
        &gammas,
        dataset_name(&args.input.input),
    )?;
    if let Some(path) = &args.output {
        write_sweep(&sweep, create(path)?)?;
    }
    print!("{}", sweep_table(&sweep));
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), Failure> {
    if args.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    if args.classes < 2 {
        return Err(Failure::usage("--classes must be at least 2"));
    }
    for (flag, value) in [("--alpha", args.alpha), ("--beta", args.beta)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Failure::usage(format!(
                "{flag} must be positive and finite, got {value}"
            )));
        }
    }
    let kind =
        SynthKind::from_str(&args.kind).map_err(|err| Failure::usage(format!("--kind: {err}")))?;
    let spec = SynthSpec {
        confidence_shape: (args.alpha, args.beta),
        ..SynthSpec::new(args.n, args.classes, args.seed, kind)
    };
    let format = parse_format(&args.format, &args.output)?;
    let mut sink = create(&args.output)?;
    // Provenance comment: readers skip leading '#' lines, and every value
    // comes from argv, so the file stays byte-reproducible.
    writeln!(
        sink,
        "# probeval synth kind={} n={} classes={} seed={} alpha={} beta={}",
        spec.kind, spec.n_records, spec.n_classes, spec.seed, args.alpha, args.beta
    )
    .map_err(|err| Failure::from(Error::from(err)))?;
    write_predictions(generator(&spec)?, &mut sink, format)?;
    println!(
        "wrote {} records ({} classes, seed {}, {}) to {}",
        spec.n_records,
        spec.n_classes,
        spec.seed,
        spec.kind,
        args.output.display()
    );
    Ok(())
}

fn run_plot(args: PlotArgs) -> Result<(), Failure> {
    let report = probeval::read_report(&args.report)?;
    render_reliability_svg(&report, &args.svg)?;
    println!("wrote reliability diagram to {}", args.svg.display());
    Ok(())
}

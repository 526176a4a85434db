//! The `incube` command line. Every subcommand is a thin wrapper over library
//! calls; stdout carries data only and diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation errors
//! present (with `--strict`), 4 snapshot or codebook version mismatch.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use incube::codebook::CodebookTables;
use incube::cube::{aggregate, write_delimited, CellQuery, Filter, GroupBy, Snapshot, SnapshotError};
use incube::ingest::{
    generate_synthetic, ingest, IngestError, write_incidents, write_report, GeneratorProfile, HeaderAliases, IngestReport,
    Severity,
};
use incube::mining::{self, build_transactions, parse_item_dims, series_from_result, ItemDim, OutlierMethod};
use incube_service::{AppState, DEFAULT_OUTLIER_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Io = 2,
    Validation = 3,
    VersionMismatch = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Version(String),
}

impl CliError {
    fn status(&self) -> ExitStatus {
        match self {
            CliError::Usage(_) => ExitStatus::Usage,
            CliError::Io(_) => ExitStatus::Io,
            CliError::Validation(_) => ExitStatus::Validation,
            CliError::Version(_) => ExitStatus::VersionMismatch,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<SnapshotError> for CliError {
    fn from(e: SnapshotError) -> Self {
        if e.is_version_mismatch() {
            CliError::Version(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "incube", version, about = "OLAP cubes and pattern mining over incident codebook files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a delimited file; write clean incidents and a violation report.
    Ingest(IngestArgs),
    /// Validate a delimited file and print the violation report.
    Validate(ValidateArgs),
    /// Build a cube snapshot from a delimited file.
    Build(BuildArgs),
    /// Aggregate a snapshot and print the grid.
    Query(QueryArgs),
    /// Association rules, sequential patterns or outlier scores.
    #[command(subcommand)]
    Mine(MineCommand),
    /// Serve the HTTP query API over a snapshot.
    Serve(ServeArgs),
    /// Generate a synthetic incident file.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Delimited incident file; `-` reads stdin.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Field delimiter: a single character, or `tab`.
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// CSV of `alias,canonical` header renames.
    #[arg(long, value_name = "FILE")]
    alias_map: Option<PathBuf>,
    /// Exit with status 3 when any record has an Error-severity violation.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Where clean incidents go, in canonical column order.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Where the violation report goes; stdout when absent.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SnapshotArg {
    #[arg(long, env = "INCUBE_SNAPSHOT", value_name = "FILE")]
    snapshot: PathBuf,
}

#[derive(Debug, Args)]
struct QuerySpecArgs {
    /// JSON query spec (group_by, filters, measures).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// `hierarchy[:depth]`, repeatable.
    #[arg(long = "group-by", value_name = "HIERARCHY[:DEPTH]")]
    group_by: Vec<String>,
    /// `dim=member[|member...]`, repeatable.
    #[arg(long = "filter", value_name = "DIM=MEMBERS")]
    filters: Vec<String>,
    /// Measure name, repeatable or comma-separated.
    #[arg(long = "measure", value_name = "NAME", value_delimiter = ',')]
    measures: Vec<String>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[command(flatten)]
    spec: QuerySpecArgs,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MineCommand {
    Rules(RulesArgs),
    Sequences(SequencesArgs),
    Outliers(OutliersArgs),
}

#[derive(Debug, Args)]
struct RulesArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long)]
    min_support: f64,
    #[arg(long)]
    min_confidence: f64,
    /// Item dimensions, comma-separated; default attack,weapon,targtype,region,suicide.
    #[arg(long, value_delimiter = ',')]
    items: Vec<String>,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SequencesArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    /// Minimum number of entities containing a pattern.
    #[arg(long)]
    min_support: u64,
    /// Entity key dimensions; default gname.
    #[arg(long, value_delimiter = ',')]
    key: Vec<String>,
    /// Item dimensions per incident; default attack.
    #[arg(long, value_delimiter = ',')]
    items: Vec<String>,
    /// Cap on items per pattern.
    #[arg(long)]
    max_items: Option<usize>,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OutliersArgs {
    /// Score these comma-separated values instead of a query result.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    series: Vec<f64>,
    #[arg(long, env = "INCUBE_SNAPSHOT", value_name = "FILE")]
    snapshot: Option<PathBuf>,
    #[command(flatten)]
    spec: QuerySpecArgs,
    #[arg(long, default_value_t = DEFAULT_OUTLIER_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    snapshot: SnapshotArg,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// JSON generator profile.
    #[arg(long, value_name = "FILE")]
    profile: Option<PathBuf>,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be one ASCII character or `tab`, got {s:?}")),
    }
}

/// Run with the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Run with explicit output streams.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { ExitStatus::Usage } else { ExitStatus::Success };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return status;
        }
    };
    let tables = CodebookTables::bundled();
    match dispatch(cli.command, tables, stdout, stderr) {
        Ok(()) => ExitStatus::Success,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.status()
        }
    }
}

fn dispatch(
    command: Command,
    tables: &'static CodebookTables,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => cmd_ingest(a, tables, stdout, stderr),
        Command::Validate(a) => cmd_validate(a, tables, stdout, stderr),
        Command::Build(a) => cmd_build(a, tables, stderr),
        Command::Query(a) => cmd_query(a, tables, stdout),
        Command::Mine(MineCommand::Rules(a)) => cmd_rules(a, tables, stdout),
        Command::Mine(MineCommand::Sequences(a)) => cmd_sequences(a, tables, stdout),
        Command::Mine(MineCommand::Outliers(a)) => cmd_outliers(a, tables, stdout),
        Command::Serve(a) => cmd_serve(a, tables),
        Command::Gen(a) => cmd_gen(a, tables, stdout),
    }
}

fn open_input(path: &Path) -> Result<Box<dyn Read>, CliError> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin()));
    }
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(Box::new(BufReader::new(file)))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Run `body` against `--out` when given, else stdout.
fn with_output(
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush().map_err(|e| io_err(path, e))
        }
        None => body(stdout),
    }
}

fn load_and_check(input: &InputArgs, tables: &CodebookTables, stderr: &mut dyn Write) -> Result<IngestReport, CliError> {
    let aliases = match &input.alias_map {
        Some(path) => HeaderAliases::parse(&read_text(path)?).map_err(usage)?,
        None => HeaderAliases::default(),
    };
    let report = ingest(open_input(&input.input)?, input.delimiter, &aliases, tables).map_err(|e| match e {
        IngestError::AliasMap(m) => usage(m),
        other => io_err(&input.input, other),
    })?;
    for d in &report.diagnostics {
        writeln!(stderr, "line {}: {}", d.line, d.message)?;
    }
    let warnings = report.violations().filter(|v| v.severity == Severity::Warning).count();
    writeln!(
        stderr,
        "{} records, {} errors, {} warnings, {} unparseable rows",
        report.records.len(),
        report.error_count(),
        warnings,
        report.diagnostics.len()
    )?;
    Ok(report)
}

fn strict_check(input: &InputArgs, report: &IngestReport) -> Result<(), CliError> {
    if input.strict && report.error_count() > 0 {
        return Err(CliError::Validation(format!("{} Error-severity violations", report.error_count())));
    }
    Ok(())
}

fn report_to(w: &mut dyn Write, report: &IngestReport, delimiter: u8) -> Result<(), CliError> {
    let violations: Vec<_> = report.violations().cloned().collect();
    write_report(w, &violations, delimiter).map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_ingest(a: IngestArgs, tables: &CodebookTables, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let report = load_and_check(&a.input, tables, stderr)?;
    with_output(&a.report, stdout, |w| report_to(w, &report, a.input.delimiter))?;
    let file = File::create(&a.out).map_err(|e| io_err(&a.out, e))?;
    write_incidents(BufWriter::new(file), &report.clean_incidents(), a.input.delimiter).map_err(|e| io_err(&a.out, e))?;
    strict_check(&a.input, &report)
}

fn cmd_validate(a: ValidateArgs, tables: &CodebookTables, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let report = load_and_check(&a.input, tables, stderr)?;
    with_output(&a.out, stdout, |w| report_to(w, &report, a.input.delimiter))?;
    strict_check(&a.input, &report)
}

fn cmd_build(a: BuildArgs, tables: &CodebookTables, stderr: &mut dyn Write) -> Result<(), CliError> {
    let report = load_and_check(&a.input, tables, stderr)?;
    strict_check(&a.input, &report)?;
    let incidents = report.clean_incidents();
    let dropped = report.records.len() - incidents.len();
    if dropped > 0 {
        writeln!(stderr, "left out {dropped} records with Error-severity violations")?;
    }
    let snapshot = Snapshot::build(incidents, tables).map_err(usage)?;
    snapshot.save(&a.out)?;
    writeln!(stderr, "wrote {} facts to {}", snapshot.table.rows(), a.out.display())?;
    Ok(())
}

fn load_snapshot(path: &Path, tables: &CodebookTables) -> Result<Snapshot, CliError> {
    Snapshot::load(path, tables).map_err(|e| match e {
        SnapshotError::Io(io) => io_err(path, io),
        other => other.into(),
    })
}

/// Build the query from a spec file, then append any flag parts.
fn build_query(spec: &QuerySpecArgs) -> Result<CellQuery, CliError> {
    let mut q = match &spec.spec {
        Some(path) => serde_json::from_str(&read_text(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => CellQuery::default(),
    };
    for g in &spec.group_by {
        let (hierarchy, depth) = match g.split_once(':') {
            Some((h, d)) => (h, d.parse().map_err(|_| usage(format!("bad depth in {g:?}")))?),
            None => (g.as_str(), 1),
        };
        q.group_by.push(GroupBy { hierarchy: hierarchy.to_string(), depth });
    }
    for f in &spec.filters {
        let (dim, members) = f.split_once('=').ok_or_else(|| usage(format!("filter {f:?} needs dim=members")))?;
        q.filters.push(Filter::members(dim, members.split('|')));
    }
    q.measures.extend(spec.measures.iter().cloned());
    Ok(q)
}

fn cmd_query(a: QueryArgs, tables: &CodebookTables, stdout: &mut dyn Write) -> Result<(), CliError> {
    let q = build_query(&a.spec)?;
    let snapshot = load_snapshot(&a.snapshot.snapshot, tables)?;
    let result = aggregate(&snapshot.table, &q).map_err(usage)?;
    with_output(&a.out, stdout, |w| write_delimited(w, &q, &result, a.delimiter).map_err(|e| CliError::Io(e.to_string())))
}

fn item_dims(names: &[String], default: &[ItemDim]) -> Result<Vec<ItemDim>, CliError> {
    if names.is_empty() {
        Ok(default.to_vec())
    } else {
        parse_item_dims(names).map_err(usage)
    }
}

fn csv_out(w: &mut dyn Write, delimiter: u8, rows: impl FnOnce(&mut csv::Writer<&mut dyn Write>) -> csv::Result<()>) -> Result<(), CliError> {
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(w);
    rows(&mut writer).and_then(|()| writer.flush().map_err(Into::into)).map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_rules(a: RulesArgs, tables: &CodebookTables, stdout: &mut dyn Write) -> Result<(), CliError> {
    let items = item_dims(&a.items, &ItemDim::DEFAULT)?;
    let snapshot = load_snapshot(&a.snapshot.snapshot, tables)?;
    let txs = build_transactions(&snapshot.incidents, &items, tables);
    let rules = mining::mine_association_rules(&txs, a.min_support, a.min_confidence).map_err(usage)?;
    with_output(&a.out, stdout, |w| {
        csv_out(w, a.delimiter, |out| {
            out.write_record(["antecedent", "consequent", "support", "confidence", "lift"])?;
            for r in &rules {
                out.write_record([
                    r.antecedent.join(";"),
                    r.consequent.join(";"),
                    r.support.to_string(),
                    r.confidence.to_string(),
                    r.lift.to_string(),
                ])?;
            }
            Ok(())
        })
    })
}

fn cmd_sequences(a: SequencesArgs, tables: &CodebookTables, stdout: &mut dyn Write) -> Result<(), CliError> {
    let key = item_dims(&a.key, &[ItemDim::Gname])?;
    let items = item_dims(&a.items, &[ItemDim::Attack])?;
    let snapshot = load_snapshot(&a.snapshot.snapshot, tables)?;
    let mined = mining::mine_sequences(&snapshot.incidents, &key, &items, a.min_support, a.max_items, tables).map_err(usage)?;
    with_output(&a.out, stdout, |w| {
        csv_out(w, a.delimiter, |out| {
            out.write_record(["pattern", "support"])?;
            for p in &mined.patterns {
                let pattern: Vec<String> = p.elements.iter().map(|e| format!("{{{}}}", e.join(";"))).collect();
                out.write_record([pattern.join(" -> "), p.support.to_string()])?;
            }
            Ok(())
        })
    })
}

fn cmd_outliers(a: OutliersArgs, tables: &CodebookTables, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (series, measure) = if !a.series.is_empty() {
        let labelled = a.series.iter().enumerate().map(|(i, &v)| (vec![i.to_string()], v)).collect();
        (labelled, a.spec.measures.first().cloned().unwrap_or_else(|| "value".into()))
    } else {
        let path = a.snapshot.as_ref().ok_or_else(|| usage("give --series or --snapshot"))?;
        let q = build_query(&a.spec)?;
        let measures = q.measure_list().map_err(usage)?;
        if measures.len() != 1 {
            return Err(usage("outlier scoring takes exactly one measure"));
        }
        let snapshot = load_snapshot(path, tables)?;
        let result = aggregate(&snapshot.table, &q).map_err(usage)?;
        (series_from_result(&result, measures[0]), measures[0].name().to_string())
    };
    let reports = mining::score_outliers(&series, &measure, a.threshold, OutlierMethod::RobustZ).map_err(usage)?;
    with_output(&a.out, stdout, |w| {
        csv_out(w, a.delimiter, |out| {
            out.write_record(["path", "measure", "value", "score", "flagged"])?;
            for r in &reports {
                out.write_record([
                    r.path.join("/"),
                    r.measure.clone(),
                    r.value.to_string(),
                    r.score.to_string(),
                    r.flagged.to_string(),
                ])?;
            }
            Ok(())
        })
    })
}

fn cmd_serve(a: ServeArgs, tables: &'static CodebookTables) -> Result<(), CliError> {
    let snapshot = load_snapshot(&a.snapshot.snapshot, tables)?;
    let state = AppState::with_source(tables, Some(snapshot), Some(a.snapshot.snapshot.clone()));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(incube_service::serve(state, a.addr))?;
    Ok(())
}

fn cmd_gen(a: GenArgs, tables: &CodebookTables, stdout: &mut dyn Write) -> Result<(), CliError> {
    let profile: GeneratorProfile = match &a.profile {
        Some(path) => serde_json::from_str(&read_text(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => GeneratorProfile::default(),
    };
    let incidents = generate_synthetic(a.seed, a.n, &profile, tables).map_err(usage)?;
    with_output(&a.out, stdout, |w| write_incidents(w, &incidents, a.delimiter).map_err(|e| CliError::Io(e.to_string())))
}

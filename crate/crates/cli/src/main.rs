//! `caseval` command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caseval_core::asp::export_program_with;
use caseval_core::confidence::{compute_confidence, ConfidenceConfig, QualitativeDefaults};
use caseval_core::diff::{compare, faulty_engine, minimize, reference_engine, run_random, Comparison, Engine};
use caseval_core::dot::render_graphviz;
use caseval_core::fixtures;
use caseval_core::generate::{random_case, GenConfig};
use caseval_core::io::{parse_case, serialize_case, serialize_graph, CaseDocument, ParseMode};
use caseval_core::model::{Node, Thresholds};
use caseval_core::propagate::{assess_with, case_status, commentary_elements, AssessConfig, AssessError};
use caseval_core::validate::{has_errors, validate_structure, Diagnostic, Severity};
use caseval_core::{CaseGraph, NodeId};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const GENERATOR_HELP: &str = "\
Random cases are generated with at most 8 levels of argument, at most 60 nodes, \
defeaters nested at most 3 deep and at least 2 subclaims per disjunctive block. \
The same --seed always yields the same cases.";

#[derive(Parser)]
#[command(name = "caseval", version, about = "Validate, assess and export assurance cases")]
struct Cli {
    /// Confirmation thresholds as `positive,negative` on Good's measure.
    #[arg(long, global = true, env = "CASEVAL_THRESHOLDS", value_parser = parse_thresholds)]
    thresholds: Option<Thresholds>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case for structural errors.
    Validate(ValidateArgs),
    /// Assess every node and report whether the case is closed.
    Assess(AssessArgs),
    /// Compute advisory confidence for TRUE claims.
    Confidence(ConfidenceArgs),
    /// Write the case as a logic program or as Graphviz.
    Export(ExportArgs),
    /// Compare the assessment engine with the logic-program oracle.
    #[command(after_help = GENERATOR_HELP)]
    DiffOracle(DiffArgs),
    /// Print a bundled example case or a random one.
    #[command(after_help = GENERATOR_HELP)]
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct Input {
    /// Case document (JSON).
    path: PathBuf,
    /// Keep unknown fields instead of rejecting them.
    #[arg(long)]
    lenient: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Structured,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: Input,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
    /// Re-check evidence `present` flags against local artifact files.
    #[arg(long)]
    check_artifacts: bool,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct AssessArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Show the rule that decided each node.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct ConfidenceArgs {
    #[command(flatten)]
    input: Input,
    /// JSON object of node id to confidence, applied over the document's own.
    #[arg(long)]
    overrides: Option<PathBuf>,
    /// Posteriors for strongly positive, neutral and strongly negative confirmation.
    #[arg(long, value_parser = clap::builder::ValueParser::new(str::parse::<QualitativeDefaults>))]
    qualitative_defaults: Option<QualitativeDefaults>,
    /// Confidence of assumptions without an override.
    #[arg(long)]
    assumption_default: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Asp,
    Dot,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    to: Target,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the atom table of an `asp` export as JSON.
    #[arg(long)]
    atoms: Option<PathBuf>,
}

#[derive(Args)]
struct DiffArgs {
    /// Case document to check. Omit with --random.
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    path: Option<PathBuf>,
    #[arg(long)]
    lenient: bool,
    /// Number of random cases to check.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for minimized counterexamples.
    #[arg(long, default_value = "counterexamples")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Check a deliberately broken engine instead of the real one.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Lightbulb,
    Eliminative,
    Random,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(value_enum)]
    name: FixtureName,
    /// Seed for `random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_thresholds(s: &str) -> Result<Thresholds, String> {
    let t: Thresholds = s.parse()?;
    Thresholds::new(t.positive, t.negative)
}

/// Reasons to stop early, each with its exit code.
enum Failure {
    /// Bad input: unreadable file, malformed document, invalid option value.
    Usage(String),
    /// A consistency check inside the tool failed.
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

type Outcome = Result<u8, Failure>;

struct Out {
    text: String,
}

impl Out {
    fn new() -> Self {
        Out { text: String::new() }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn json(&mut self, value: &serde_json::Value) {
        self.line(serde_json::to_string_pretty(value).expect("json value serializes"));
    }
}

fn load(input: &Input) -> Result<CaseDocument, Failure> {
    load_path(&input.path, input.lenient)
}

fn load_path(path: &Path, lenient: bool) -> Result<CaseDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mode = if lenient { ParseMode::Lenient } else { ParseMode::Strict };
    parse_case(&text, mode).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn assess_config(cli: &Cli) -> AssessConfig {
    AssessConfig { thresholds: cli.thresholds }
}

fn assess_failure(e: AssessError) -> Failure {
    match e {
        AssessError::Confirmation { .. } => Failure::Usage(e.to_string()),
        _ => Failure::Internal(e.to_string()),
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i + 1 == row.len() {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ", w = widths[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn diagnostics_json(diagnostics: &[Diagnostic]) -> serde_json::Value {
    serde_json::to_value(diagnostics).expect("diagnostics serialize")
}

/// Evidence whose stored `present` flag disagrees with its local artifact.
fn artifact_diagnostics(graph: &CaseGraph, base: &Path) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for node in graph.nodes.values() {
        let Node::Evidence(e) = node else { continue };
        let Some(reference) = e.artifact_ref.as_deref() else { continue };
        let local = match reference.strip_prefix("file://") {
            Some(p) => p,
            None if reference.contains("://") => continue,
            None => reference,
        };
        let path = base.join(local);
        let exists = path.exists();
        let message = match (e.present, exists) {
            (true, false) => format!("evidence marked present but artifact {} is missing", path.display()),
            (false, true) => format!("evidence marked absent but artifact {} exists", path.display()),
            _ => continue,
        };
        out.push(Diagnostic { node: e.id.clone(), severity: Severity::Warn, message });
    }
    out
}

fn cmd_validate(args: &ValidateArgs, out: &mut Out) -> Outcome {
    let doc = load(&args.input)?;
    let mut diagnostics = validate_structure(&doc.graph);
    if args.check_artifacts {
        let base = args.input.path.parent().unwrap_or(Path::new("."));
        diagnostics.extend(artifact_diagnostics(&doc.graph, base));
        diagnostics.sort();
    }
    let failed = has_errors(&diagnostics) || (args.strict && !diagnostics.is_empty());
    match args.format {
        Format::Table => {
            for d in &diagnostics {
                out.line(d.to_string());
            }
            let errors = diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
            let warnings = diagnostics.len() - errors;
            out.line(format!("{errors} error(s), {warnings} warning(s)"));
        }
        Format::Structured => out.json(&json!({
            "valid": !failed,
            "diagnostics": diagnostics_json(&diagnostics),
        })),
    }
    Ok(u8::from(failed))
}

fn cmd_assess(cli: &Cli, args: &AssessArgs, out: &mut Out) -> Outcome {
    let doc = load(&args.input)?;
    let graph = &doc.graph;
    let diagnostics = validate_structure(graph);
    if has_errors(&diagnostics) {
        report_invalid(&diagnostics, args.format, out);
        return Ok(1);
    }
    let (map, trace) = assess_with(graph, &assess_config(cli)).map_err(assess_failure)?;
    let replayed = trace.replay().map_err(|e| Failure::Internal(format!("trace does not replay: {e}")))?;
    if replayed != map {
        return Err(Failure::Internal("trace does not reproduce the assessment".into()));
    }
    let status = case_status(graph, &map);
    let ignored = commentary_elements(graph, &map);

    match args.format {
        Format::Table => {
            let mut header = vec!["NODE".to_string(), "KIND".into(), "VERDICT".into()];
            if args.explain {
                header.extend(["RULE".to_string(), "BASE".into(), "DEFEATERS".into()]);
            }
            header.push("NOTE".into());
            let mut rows = vec![header];
            for (id, verdict) in map.iter() {
                let kind = graph.nodes.get(id).map(Node::kind_name).unwrap_or("?");
                let mut row = vec![id.to_string(), kind.to_string(), verdict.to_string()];
                if args.explain {
                    let t = trace.get(id).expect("every assessed node is traced");
                    let defeaters: Vec<String> = t.defeaters.iter().map(|(d, v)| format!("{d}={v}")).collect();
                    row.push(t.rule.name().into());
                    row.push(t.base.to_string());
                    row.push(if defeaters.is_empty() { "-".into() } else { defeaters.join(",") });
                }
                let mut notes = vec![];
                if *id == graph.top {
                    notes.push("top");
                }
                if ignored.contains(id) {
                    notes.push("commentary");
                }
                row.push(notes.join(","));
                rows.push(row);
            }
            out.text.push_str(&table(&rows));
            for d in &diagnostics {
                out.line(d.to_string());
            }
            let top = map.get(&graph.top).expect("top is assessed");
            out.line(format!("top {}: {top}", graph.top));
            out.line(format!("status: {}", if status.is_closed() { "closed" } else { "open" }));
            for r in &status.reasons {
                out.line(format!("  {r}"));
            }
        }
        Format::Structured => {
            let mut value = json!({
                "case": graph.metadata.name,
                "top": graph.top,
                "assessments": map,
                "status": status,
                "commentary": ignored,
                "diagnostics": diagnostics_json(&diagnostics),
            });
            if args.explain {
                value["trace"] = serde_json::to_value(&trace).expect("trace serializes");
            }
            out.json(&value);
        }
    }
    Ok(if status.is_closed() { 0 } else { 1 })
}

fn report_invalid(diagnostics: &[Diagnostic], format: Format, out: &mut Out) {
    match format {
        Format::Table => {
            for d in diagnostics {
                out.line(d.to_string());
            }
            out.line("case is not well formed");
        }
        Format::Structured => out.json(&json!({ "valid": false, "diagnostics": diagnostics_json(diagnostics) })),
    }
}

fn read_overrides(path: &Path) -> Result<BTreeMap<NodeId, f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: overrides must map node ids to numbers: {e}", path.display())))
}

fn cmd_confidence(cli: &Cli, args: &ConfidenceArgs, out: &mut Out) -> Outcome {
    let doc = load(&args.input)?;
    let graph = &doc.graph;
    let diagnostics = validate_structure(graph);
    if has_errors(&diagnostics) {
        report_invalid(&diagnostics, args.format, out);
        return Ok(1);
    }
    let mut config = ConfidenceConfig { overrides: doc.overrides.clone(), ..ConfidenceConfig::default() };
    if let Some(path) = &args.overrides {
        config.overrides.extend(read_overrides(path)?);
    }
    if let Some(q) = args.qualitative_defaults {
        config.qualitative = q;
    }
    if let Some(a) = args.assumption_default {
        if !(0.0..=1.0).contains(&a) {
            return Err(Failure::Usage(format!("--assumption-default {a} is not within [0, 1]")));
        }
        config.assumption_default = a;
    }

    let (map, _) = assess_with(graph, &assess_config(cli)).map_err(assess_failure)?;
    let status = case_status(graph, &map);
    let report = compute_confidence(graph, &map, &config).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut warnings = report.warnings.clone();
    if !status.is_closed() {
        warnings.insert(0, Diagnostic {
            node: graph.top.clone(),
            severity: Severity::Warn,
            message: "advisory confidence on open case".into(),
        });
    }
    let min = report.entries.values().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let hotspots: Vec<&NodeId> =
        report.entries.iter().filter(|(_, e)| e.value < 1.0 && (e.value - min).abs() < 1e-12).map(|(id, _)| id).collect();

    match args.format {
        Format::Table => {
            let mut rows = vec![vec!["NODE".to_string(), "CONFIDENCE".into(), "DOUBT".into(), "SOURCE".into(), "NOTE".into()]];
            for (id, e) in &report.entries {
                let source = serde_json::to_value(e.source).expect("source serializes");
                let note = if hotspots.contains(&id) { "min" } else { "" };
                rows.push(vec![
                    id.to_string(),
                    format!("{:.6}", e.value),
                    format!("{:.6}", 1.0 - e.value),
                    source.as_str().unwrap_or_default().to_string(),
                    note.to_string(),
                ]);
            }
            out.text.push_str(&table(&rows));
            for id in &report.residual_risks {
                out.line(format!("residual risk {id}: no confidence"));
            }
            if report.partial {
                out.line(format!("top {} has no confidence", graph.top));
            }
            for w in &warnings {
                out.line(w.to_string());
            }
        }
        Format::Structured => out.json(&json!({
            "top": graph.top,
            "status": status.status,
            "entries": report.entries,
            "hotspots": hotspots,
            "residual_risks": report.residual_risks,
            "partial": report.partial,
            "warnings": diagnostics_json(&warnings),
        })),
    }
    Ok(0)
}

fn cmd_export(cli: &Cli, args: &ExportArgs, out: &mut Out) -> Outcome {
    let doc = load(&args.input)?;
    let graph = &doc.graph;
    let diagnostics = validate_structure(graph);
    if has_errors(&diagnostics) {
        report_invalid(&diagnostics, Format::Table, out);
        return Ok(1);
    }
    let config = assess_config(cli);
    match args.to {
        Target::Asp => {
            let exported = export_program_with(graph, &config).map_err(|e| Failure::Usage(e.to_string()))?;
            write_output(args.output.as_deref(), &exported.render())?;
            if let Some(p) = &args.atoms {
                write_output(Some(p), &exported.atoms.to_json())?;
            }
        }
        Target::Dot => {
            if args.atoms.is_some() {
                return Err(Failure::Usage("--atoms applies to --to asp only".into()));
            }
            let (map, _) = assess_with(graph, &config).map_err(assess_failure)?;
            write_output(args.output.as_deref(), &render_graphviz(graph, Some(&map)))?;
        }
    }
    Ok(0)
}

fn describe(comparison: &Comparison) -> String {
    match comparison {
        Comparison::Agree => "agree".into(),
        Comparison::Disagree { nodes } => {
            let parts: Vec<String> = nodes
                .iter()
                .map(|n| {
                    let show = |v: Option<caseval_core::Verdict>| v.map_or("-".to_string(), |v| v.to_string());
                    format!("{} engine={} oracle={}", n.node, show(n.engine), show(n.oracle))
                })
                .collect();
            format!("disagree: {}", parts.join("; "))
        }
        Comparison::EngineFailed { message } => format!("engine failed: {message}"),
        Comparison::OracleFailed { message } => format!("oracle failed: {message}"),
    }
}

fn save_counterexample(dir: &Path, name: &str, graph: &CaseGraph) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    write_output(Some(&path), &serialize_graph(graph))?;
    Ok(path)
}

fn cmd_diff_oracle(cli: &Cli, args: &DiffArgs, out: &mut Out) -> Outcome {
    let engine: Engine<'_> = if args.inject_fault { &faulty_engine } else { &reference_engine };
    let mut failures = Vec::new();
    let mut cases = 1;
    if let Some(path) = &args.path {
        let mut doc = load_path(path, args.lenient)?;
        if cli.thresholds.is_some() {
            doc.graph.metadata.thresholds = cli.thresholds;
        }
        let diagnostics = validate_structure(&doc.graph);
        if has_errors(&diagnostics) {
            report_invalid(&diagnostics, args.format, out);
            return Ok(1);
        }
        let comparison = compare(&doc.graph, engine);
        if !comparison.agrees() {
            let small = minimize(&doc.graph, engine);
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("case");
            let saved = save_counterexample(&args.out_dir, &format!("{stem}.min.json"), &small)?;
            failures.push(json!({
                "case": path.display().to_string(),
                "comparison": comparison,
                "original_nodes": doc.graph.nodes.len(),
                "minimized_nodes": small.nodes.len(),
                "minimized_path": saved.display().to_string(),
            }));
        }
    } else {
        let count = args.random.expect("clap requires a path or --random");
        cases = count;
        let report = run_random(count, args.seed, &GenConfig::default(), engine);
        for cx in &report.counterexamples {
            let small = cx.minimized.as_ref().expect("random counterexamples are minimized");
            let saved = save_counterexample(&args.out_dir, &format!("seed-{}.min.json", cx.seed), small)?;
            failures.push(json!({
                "seed": cx.seed,
                "comparison": cx.comparison,
                "original_nodes": cx.original_nodes,
                "minimized_nodes": small.nodes.len(),
                "minimized_path": saved.display().to_string(),
            }));
        }
    }

    match args.format {
        Format::Table => {
            for f in &failures {
                let comparison: Comparison = serde_json::from_value(f["comparison"].clone()).expect("comparison round-trips");
                let label = f.get("seed").map(|s| format!("seed {s}")).unwrap_or_else(|| f["case"].as_str().unwrap_or_default().to_string());
                out.line(format!("{label}: {}", describe(&comparison)));
                out.line(format!(
                    "  minimized {} -> {} nodes: {}",
                    f["original_nodes"], f["minimized_nodes"], f["minimized_path"].as_str().unwrap_or_default()
                ));
            }
            out.line(format!("{cases} case(s), {} agree, {} disagree", cases - failures.len(), failures.len()));
            out.line(if failures.is_empty() { "PASS" } else { "FAIL" });
        }
        Format::Structured => out.json(&json!({
            "cases": cases,
            "agreed": cases - failures.len(),
            "counterexamples": failures,
            "pass": failures.is_empty(),
        })),
    }
    Ok(u8::from(!failures.is_empty()))
}

fn cmd_fixture(args: &FixtureArgs) -> Outcome {
    let text = match args.name {
        FixtureName::Lightbulb => serialize_case(&fixtures::document(fixtures::LIGHTBULB)),
        FixtureName::Eliminative => serialize_case(&fixtures::document(fixtures::ELIMINATIVE_LIGHT)),
        FixtureName::Random => serialize_graph(&random_case(args.seed, &GenConfig::default())),
    };
    write_output(args.output.as_deref(), &text)?;
    Ok(0)
}

fn run(cli: &Cli, out: &mut Out) -> Outcome {
    match &cli.command {
        Command::Validate(a) => cmd_validate(a, out),
        Command::Assess(a) => cmd_assess(cli, a, out),
        Command::Confidence(a) => cmd_confidence(cli, a, out),
        Command::Export(a) => cmd_export(cli, a, out),
        Command::DiffOracle(a) => cmd_diff_oracle(cli, a, out),
        Command::Fixture(a) => cmd_fixture(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Out::new();
    let result = run(&cli, &mut out);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.text.as_bytes());
    let _ = stdout.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Internal(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

//! Command-line surface: transformation runs, validation, dependency
//! inspection, partial queries and trace lookups.
//!
//! Exit codes: 0 success, 1 I/O or lookup failure, 2 invalid input or
//! usage, 3 execution failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use emt_core::adapters::{effective_registry, interpreter, load_registry, Format};
use emt_core::matching::{Binding, Matcher};
use emt_core::model::{MetatypeRegistry, ModelDocument, ObjectId};
use emt_core::rules::{
    dependency_graph, parse_rule_set, redundant_rules, validate_rule_set, RuleSet, SubTerm,
};
use emt_core::transform::{trace_lookup, Engine, EngineError, ExecutionLedger, TraceError, TransformOutcome};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "emt", version, about = "Rule-based enterprise model transformation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every rule to fixpoint and write the target model.
    Transform(TransformArgs),
    /// Parse and statically check a rule file.
    Validate(ValidateArgs),
    /// Evaluate one source term of one rule against a model.
    Query(QueryArgs),
    /// Execute one rule, plus the rules it references.
    RunRule(RunRuleArgs),
    /// Report rule dependencies, cycles and redundant mappings.
    Deps(DepsArgs),
    /// Show which executions produced a target object.
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long, default_value = "generic")]
    pub source_format: Format,
    /// Metatype registry merged over the built-in one.
    #[arg(long, env = "EMT_REGISTRY")]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: SourceArgs,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value = "generic")]
    pub target_format: Format,
    /// Trace file; CSV when the name ends in `.csv`, JSON otherwise.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Treat duplicate (type, name) creations as errors.
    #[arg(long)]
    pub strict_overlap: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub input: SourceArgs,
    #[arg(long)]
    pub rule: String,
    /// Pre-order index of the source term; 0 is the whole term.
    #[arg(long, default_value_t = 0)]
    pub term: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RunRuleArgs {
    #[command(flatten)]
    pub input: SourceArgs,
    #[arg(long)]
    pub rule: String,
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value = "generic")]
    pub target_format: Format,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DepsArgs {
    #[arg(long)]
    pub rules: PathBuf,
    /// Write the graph in DOT format; `-` prints it.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// JSON trace written by `transform`.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Execution(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::NotFound(_) => 1,
            CliError::Invalid(_) | CliError::Usage(_) => 2,
            CliError::Execution(_) => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Invalid(diags) => {
                CliError::Invalid(diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
            }
            EngineError::UnknownRule(r) => CliError::Usage(format!("unknown rule `{r}`")),
            other => CliError::Execution(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command, returning the exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Transform(a) => cmd_transform(&a, out, err),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::Query(a) => cmd_query(&a, out, err),
        Command::RunRule(a) => cmd_run_rule(&a, out, err),
        Command::Deps(a) => cmd_deps(&a, out),
        Command::Trace(a) => cmd_trace(&a, out),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn emit(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{text}").map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
}

fn load_rules(path: &Path) -> Result<RuleSet> {
    let bytes = read(path)?;
    let text =
        String::from_utf8(bytes).map_err(|_| CliError::Invalid(format!("{}: not UTF-8", path.display())))?;
    parse_rule_set(&text).map_err(|e| CliError::Invalid(format!("{}:{e}", path.display())))
}

struct Input {
    rules: RuleSet,
    model: ModelDocument,
    registry: MetatypeRegistry,
}

fn load_input(a: &SourceArgs, err: &mut dyn Write) -> Result<Input> {
    let rules = load_rules(&a.rules)?;
    let user = match &a.registry {
        Some(p) => {
            Some(load_registry(&read(p)?).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let registry = effective_registry(a.source_format, user.as_ref())
        .map_err(|e| CliError::Invalid(format!("registry: {e}")))?;
    let loaded = interpreter(a.source_format)
        .read(&read(&a.source)?, &registry)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", a.source.display())))?;
    for w in &loaded.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(Input { rules, model: loaded.model, registry })
}

fn write_target(path: &Path, format: Format, model: &ModelDocument) -> Result<()> {
    let interp = interpreter(format);
    if !interp.can_write() {
        return Err(CliError::Usage(format!("{format} is read-only")));
    }
    let bytes = interp.write(model).map_err(|e| CliError::Execution(format!("{}: {e}", path.display())))?;
    write_file(path, &bytes)
}

fn write_trace(path: &Path, ledger: &ExecutionLedger) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        ledger.to_csv()
    } else {
        ledger.to_json()
    };
    write_file(path, text.as_bytes())
}

pub fn cmd_transform(a: &TransformArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let input = load_input(&a.input, err)?;
    let mut engine = Engine::new(&input.rules, &input.model, &input.registry)?;
    engine.run()?;
    let outcome: TransformOutcome = engine.finish();
    if a.strict_overlap && !outcome.warnings.is_empty() {
        let lines: Vec<String> = outcome.warnings.iter().map(ToString::to_string).collect();
        return Err(CliError::Execution(lines.join("\n")));
    }
    for w in &outcome.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    write_target(&a.target, a.target_format, &outcome.target)?;
    if let Some(trace) = &a.trace {
        write_trace(trace, &outcome.ledger)?;
    }
    if a.json {
        emit(
            out,
            json!({
                "summary": outcome.stats.to_string(),
                "stats": outcome.stats,
                "warnings": outcome.warnings.iter().map(ToString::to_string).collect::<Vec<_>>(),
            }),
        )
    } else {
        emit(out, outcome.stats)
    }
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let rules = load_rules(&a.rules)?;
    let diags = validate_rule_set(&rules);
    if a.json {
        emit(out, json!({ "rules": rules.rules.len(), "diagnostics": diags }))?;
    } else {
        for d in &diags {
            emit(out, d)?;
        }
        emit(out, format!("{}, {}", count(rules.rules.len(), "rule"), count(diags.len(), "diagnostic")))?;
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{} diagnostic(s)", diags.len())))
    }
}

fn count(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

fn describe(model: &ModelDocument, id: &ObjectId) -> String {
    match model.object(id) {
        Some(o) if !o.base().name.is_empty() => format!("{id} ({})", o.base().name),
        _ => id.to_string(),
    }
}

fn binding_line(model: &ModelDocument, b: &Binding) -> String {
    b.iter()
        .map(|(p, slot)| {
            let ids: Vec<String> = slot.ids().iter().map(|id| describe(model, id)).collect();
            if slot.is_aggregated() {
                format!("{p} = [{}]", ids.join(", "))
            } else {
                format!("{p} = {}", ids.join(""))
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn cmd_query(a: &QueryArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let input = load_input(&a.input, err)?;
    let rule =
        input.rules.rule(&a.rule).ok_or_else(|| CliError::Usage(format!("unknown rule `{}`", a.rule)))?;
    let terms = rule.source.subterms();
    let term = *terms.get(a.term).ok_or_else(|| {
        CliError::Usage(format!("rule `{}` has source terms 0..={}, not {}", a.rule, terms.len() - 1, a.term))
    })?;
    let text = match term {
        SubTerm::Term(t) => t.to_string(),
        SubTerm::End(e) => e.to_string(),
    };
    let set = Matcher::new(&input.model, &input.registry)
        .eval_subterm(term)
        .map_err(|e| CliError::Invalid(format!("rule `{}`: {e}", a.rule)))?;
    if a.json {
        let bindings: Vec<&Binding> = set.iter().collect();
        return emit(out, json!({ "term": text, "count": set.len(), "bindings": bindings }));
    }
    emit(out, format!("term {}: {text}", a.term))?;
    for b in set.iter() {
        emit(out, format!("  {}", binding_line(&input.model, b)))?;
    }
    emit(out, count(set.len(), "binding"))
}

pub fn cmd_run_rule(a: &RunRuleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let input = load_input(&a.input, err)?;
    let mut engine = Engine::new(&input.rules, &input.model, &input.registry)?;
    engine.run_rule(&a.rule)?;
    let outcome = engine.finish();
    if let Some(target) = &a.target {
        write_target(target, a.target_format, &outcome.target)?;
    }
    let executions = outcome.ledger.records_of(&a.rule).len();
    let mut created = Vec::new();
    for (id, p) in outcome.ledger.provenance_entries() {
        if p.removed {
            continue;
        }
        let Some(obj) = outcome.target.object(id) else { continue };
        let types: Vec<&str> = obj.base().metatypes.iter().map(String::as_str).collect();
        created.push((id.clone(), types.join("/"), obj.base().name.clone(), p.rule.clone()));
    }
    let enriched: Vec<(String, ObjectId)> = outcome
        .ledger
        .rules()
        .iter()
        .flat_map(|t| {
            t.records.iter().flat_map(move |r| r.enriched.iter().map(move |id| (t.name.clone(), id.clone())))
        })
        .collect();
    if a.json {
        let created: Vec<_> = created
            .iter()
            .map(|(id, ty, name, rule)| json!({"id": id, "types": ty, "name": name, "rule": rule}))
            .collect();
        let enriched: Vec<_> = enriched.iter().map(|(rule, id)| json!({"id": id, "rule": rule})).collect();
        return emit(
            out,
            json!({"rule": a.rule, "executions": executions, "created": created, "enriched": enriched}),
        );
    }
    for (id, ty, name, rule) in &created {
        let label = if name.is_empty() { String::new() } else { format!(" `{name}`") };
        emit(out, format!("created {ty}{label} {id} by {rule}"))?;
    }
    for (rule, id) in &enriched {
        emit(out, format!("enriched {} by {rule}", describe(&outcome.target, id)))?;
    }
    emit(out, count(executions, "execution"))
}

pub fn cmd_deps(a: &DepsArgs, out: &mut dyn Write) -> Result<()> {
    let rules = load_rules(&a.rules)?;
    let graph = dependency_graph(&rules);
    let cycles = graph.cycles();
    let redundant = redundant_rules(&rules);
    if let Some(dot) = &a.dot {
        if dot.as_os_str() == "-" {
            write!(out, "{}", graph.to_dot())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;
            return Ok(());
        }
        write_file(dot, graph.to_dot().as_bytes())?;
    }
    if a.json {
        let edges: Vec<_> = graph.edge_names().into_iter().map(|(f, t)| json!([f, t])).collect();
        return emit(
            out,
            json!({"rules": graph.nodes, "edges": edges, "cycles": cycles, "redundant": redundant}),
        );
    }
    for (from, to) in graph.edge_names() {
        emit(out, format!("{from} -> {to}"))?;
    }
    for c in &cycles {
        let mut names = c.clone();
        names.push(c[0].clone());
        emit(out, format!("cycle: {}", names.join(" -> ")))?;
    }
    for (x, y) in &redundant {
        emit(out, format!("redundant: {x} and {y} consume the same content"))?;
    }
    emit(
        out,
        [
            count(graph.nodes.len(), "rule"),
            count(graph.edges.len(), "edge"),
            count(cycles.len(), "cycle"),
            count(redundant.len(), "redundant pair"),
        ]
        .join(", "),
    )
}

pub fn cmd_trace(a: &TraceArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = read(&a.trace)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Invalid(format!("{}: not UTF-8", a.trace.display())))?;
    let ledger = ExecutionLedger::from_json(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", a.trace.display())))?;
    let trace = trace_lookup(&ledger, &ObjectId::from(a.id.as_str())).map_err(|e| match e {
        TraceError::NotFound(_) => CliError::NotFound(e.to_string()),
        TraceError::Format(_) => CliError::Invalid(e.to_string()),
    })?;
    if a.json {
        emit(out, serde_json::to_string(&trace).expect("trace serializes"))
    } else {
        write!(out, "{trace}").map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
    }
}

//! Command-line front end.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::chase::{
    certain_answers, chase, evaluate, evaluate_ucq, fd_check_queries, inequality_predicate, materialize_inequality,
    nc_check_query, nc_witness_query,
};
use crate::emit::{report, report_kv, to_datalog, to_sql, to_ucq_text, OutputFormat, SchemaMapping};
use crate::error::{Error, Result};
use crate::graphs::{affected_positions, CoverGraph, PropagationGraph, DEFAULT_MAX_PATH_LEN, DEFAULT_MAX_SEQUENCES};
use crate::model::{ConjunctiveQuery, Term};
use crate::normalize::{classify, normalize, Normalized};
use crate::parallel::{rewrite_parallel, ParallelOptions};
use crate::parser::{parse_into, Document};
use crate::rewriter::{CacheConfig, Metrics, RewriteOptions, Rewriter};
use crate::subsume::{prune_tail, SubsumptionMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "xrewrite",
    version,
    about = "Rewrite conjunctive queries under existential rules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rewrite a query into a union of conjunctive queries.
    Rewrite(RewriteArgs),
    /// Report the syntactic classes of a rule set and its sticky marking.
    Classify(OntologyArg),
    /// Run the oblivious chase over a database.
    Chase(ChaseArgs),
    /// Print the propagation graph, the cover graph and affected positions.
    Graph(GraphArgs),
    /// Certain answers computed by chasing the database.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct OntologyArg {
    /// Rules, constraints, dependencies and table declarations.
    #[arg(long)]
    pub ontology: PathBuf,
}

#[derive(Debug, Args)]
pub struct RewriteArgs {
    /// Rules, constraints, dependencies and table declarations.
    #[arg(long)]
    pub ontology: PathBuf,
    /// File holding the query; defaults to the single query of the ontology file.
    #[arg(long)]
    pub query: Option<PathBuf>,
    /// Ground facts; when given, constraints are checked and the rewriting evaluated.
    #[arg(long)]
    pub database: Option<PathBuf>,
    /// `table` declarations used for SQL output.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Keep atoms implied by other atoms.
    #[arg(long)]
    pub no_elimination: bool,
    /// Rewrite the whole query instead of its components.
    #[arg(long)]
    pub no_parallel: bool,
    #[arg(long, default_value_t = SubsumptionMode::None)]
    pub subsumption: SubsumptionMode,
    /// Maximum number of explored queries.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Print metrics to stderr as an aligned table.
    #[arg(long)]
    pub stats: bool,
    /// Print metrics to stderr as key=value lines.
    #[arg(long)]
    pub stats_kv: bool,
    #[arg(long, default_value = "ucq")]
    pub output: OutputFormat,
    /// Worker threads for component rewriting.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Refuse rule sets that are neither linear, multi-linear nor sticky.
    #[arg(long)]
    pub guarantee_termination: bool,
    #[arg(long, default_value_t = CacheConfig::default().mgu)]
    pub mgu_cache: usize,
    #[arg(long, default_value_t = CacheConfig::default().rename)]
    pub rename_cache: usize,
    #[arg(long, default_value_t = CacheConfig::default().elimination)]
    pub elimination_cache: usize,
    /// Longest propagation path considered when building the cover graph.
    #[arg(long, default_value_t = DEFAULT_MAX_PATH_LEN)]
    pub max_path_len: usize,
}

#[derive(Debug, Args)]
pub struct ChaseArgs {
    /// Rules, constraints, dependencies and table declarations.
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long)]
    pub database: Option<PathBuf>,
    /// Maximum number of rule applications.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Rules, constraints, dependencies and table declarations.
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_PATH_LEN)]
    pub max_path_len: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Rules, constraints, dependencies and table declarations.
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long)]
    pub query: Option<PathBuf>,
    #[arg(long)]
    pub database: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
}

fn read(doc: &mut Document, path: &Path) -> Result<()> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_into(doc, &text).map_err(|e| Error::Config(format!("{}:{e}", path.display())))
}

struct Inputs {
    doc: Document,
    query: Option<ConjunctiveQuery>,
    normalized: Normalized,
}

/// Parses every input into one document so arities are checked across
/// files. The query comes from `query` when given, else from the ontology.
fn load(ontology: &Path, query: Option<&Path>, extra: &[&Path], need_query: bool) -> Result<Inputs> {
    let mut doc = Document::default();
    read(&mut doc, ontology)?;
    let from = if query.is_some() { doc.queries.len() } else { 0 };
    if let Some(q) = query {
        read(&mut doc, q)?;
    }
    for p in extra {
        read(&mut doc, p)?;
    }
    let queries = &doc.queries[from..];
    let query = match (need_query, queries.len()) {
        (true, 1) | (false, 1) => Some(queries[0].clone()),
        (true, n) => return Err(Error::QueryCount(n)),
        (false, _) => None,
    };
    let normalized = normalize(&doc.tgds, doc.predicates());
    Ok(Inputs { doc, query, normalized })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExhausted(_) => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

fn tuple(t: &[Term]) -> String {
    let parts: Vec<String> = t.iter().map(Term::to_string).collect();
    format!("({})", parts.join(", "))
}

/// Runs a parsed command line, writing results to `out` and diagnostics to
/// `err`; returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Rewrite(a) => cmd_rewrite(&a, out, err),
        Command::Classify(a) => cmd_classify(&a, out),
        Command::Chase(a) => cmd_chase(&a, out),
        Command::Graph(a) => cmd_graph(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

struct Pipeline {
    rewriter: Rewriter,
    affected: Vec<BTreeSet<crate::model::Position>>,
    options: ParallelOptions,
    parallel: bool,
}

struct Output {
    ucq: Vec<ConjunctiveQuery>,
    datalog: Option<String>,
    metrics: Metrics,
}

impl Pipeline {
    fn run(&self, q: &ConjunctiveQuery) -> Result<Output> {
        if self.parallel {
            let r = rewrite_parallel(&self.rewriter, q, &self.affected, &self.options)?;
            let datalog = to_datalog(&r.decomposition, &r.components);
            Ok(Output {
                ucq: r.ucq,
                datalog: Some(datalog),
                metrics: r.metrics,
            })
        } else {
            let mut opts = self.options.rewrite;
            opts.prune = self.options.subsumption == SubsumptionMode::IRew;
            let mut r = self.rewriter.rewrite(q, &opts)?;
            if matches!(self.options.subsumption, SubsumptionMode::Tail | SubsumptionMode::IDec) {
                r.ucq = prune_tail(&r.ucq);
                r.metrics.set_output(&r.ucq);
            }
            Ok(Output {
                ucq: r.ucq,
                datalog: None,
                metrics: r.metrics,
            })
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e)
}

fn cmd_rewrite(a: &RewriteArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let extra: Vec<&Path> = a.database.iter().chain(&a.schema).map(PathBuf::as_path).collect();
    let inputs = load(&a.ontology, a.query.as_deref(), &extra, true)?;
    let q = inputs.query.clone().expect("query required");
    let class = classify(&inputs.doc.tgds, &inputs.normalized.tgds);
    if a.guarantee_termination && !class.guarantees_termination() {
        return Err(Error::NoTerminationGuarantee);
    }
    let mapping = if a.output == OutputFormat::Sql {
        if inputs.doc.tables.is_empty() {
            return Err(Error::Config(
                "sql output requires table declarations (--schema)".into(),
            ));
        }
        Some(SchemaMapping::from_decls(&inputs.doc.tables, &inputs.doc.arities)?)
    } else {
        None
    };

    let config = CacheConfig {
        mgu: a.mgu_cache,
        rename: a.rename_cache,
        elimination: a.elimination_cache,
    };
    let pipeline = Pipeline {
        rewriter: Rewriter::with_caches(
            inputs.normalized.tgds.clone(),
            inputs.normalized.aux_predicates.clone(),
            config,
        )
        .with_max_path_len(a.max_path_len),
        affected: affected_positions(&inputs.normalized.tgds),
        options: ParallelOptions {
            rewrite: RewriteOptions {
                elimination: !a.no_elimination,
                prune: false,
                budget: a.budget,
            },
            subsumption: a.subsumption,
            jobs: a.jobs.unwrap_or_else(|| ParallelOptions::default().jobs),
        },
        parallel: !a.no_parallel,
    };

    if a.database.is_some() {
        let violations = check_constraints(&inputs.doc, &pipeline)?;
        if !violations.is_empty() {
            for v in &violations {
                writeln!(out, "violated: {v}").map_err(io)?;
            }
            writeln!(err, "error: the database violates {} constraint(s)", violations.len()).map_err(io)?;
            return Ok(EXIT_VIOLATION);
        }
    }

    let result = pipeline.run(&q)?;
    let text = match a.output {
        OutputFormat::Ucq => to_ucq_text(&result.ucq),
        OutputFormat::Datalog => result.datalog.clone().unwrap_or_else(|| to_ucq_text(&result.ucq)),
        OutputFormat::Sql => to_sql(&result.ucq, mapping.as_ref().expect("mapping checked"))?,
    };
    out.write_all(text.as_bytes()).map_err(io)?;
    if a.database.is_some() {
        let comment = if a.output == OutputFormat::Sql { "--" } else { "%" };
        let answers = evaluate_ucq(&result.ucq, &inputs.doc.facts);
        writeln!(out, "{comment} answers: {}", answers.len()).map_err(io)?;
        for t in answers {
            writeln!(out, "{comment} {}", tuple(&t)).map_err(io)?;
        }
    }
    if a.stats {
        err.write_all(report(&result.metrics).as_bytes()).map_err(io)?;
    }
    if a.stats_kv {
        err.write_all(report_kv(&result.metrics).as_bytes()).map_err(io)?;
    }
    Ok(EXIT_OK)
}

/// Functional dependencies are checked on the database itself; negative
/// constraints are rewritten first, then evaluated.
fn check_constraints(doc: &Document, pipeline: &Pipeline) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    let neq = inequality_predicate(doc.predicates());
    let checks = fd_check_queries(&doc.fds, &doc.arities, &neq)?;
    if !checks.is_empty() {
        let mut facts = doc.facts.clone();
        facts.extend(materialize_inequality(&doc.facts, &neq));
        let broken: BTreeSet<usize> = checks
            .iter()
            .filter(|(_, q)| !evaluate(q, &facts).is_empty())
            .map(|(k, _)| *k)
            .collect();
        violations.extend(broken.into_iter().map(|k| doc.fds[k].to_string()));
    }
    for nc in &doc.ncs {
        let check = pipeline.run(&nc_check_query(nc))?;
        if evaluate_ucq(&check.ucq, &doc.facts).is_empty() {
            continue;
        }
        let witnesses = evaluate_ucq(&pipeline.run(&nc_witness_query(nc))?.ucq, &doc.facts);
        let listed: Vec<String> = witnesses.iter().map(|t| tuple(t)).collect();
        violations.push(format!("{nc} witnesses: {}", listed.join(" ")));
    }
    Ok(violations)
}

fn cmd_classify(a: &OntologyArg, out: &mut dyn Write) -> Result<i32> {
    let inputs = load(&a.ontology, None, &[], false)?;
    let c = classify(&inputs.doc.tgds, &inputs.normalized.tgds);
    let marking = crate::normalize::smark(&inputs.doc.tgds);
    let text = format!(
        "linear: {}\nmulti-linear: {}\nsticky: {}\nsticky (normal form): {}\nmarking:\n{marking}",
        c.linear, c.multi_linear, c.sticky_input, c.sticky
    );
    out.write_all(text.as_bytes()).map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_chase(a: &ChaseArgs, out: &mut dyn Write) -> Result<i32> {
    let extra: Vec<&Path> = a.database.iter().map(PathBuf::as_path).collect();
    let inputs = load(&a.ontology, None, &extra, false)?;
    let inst = chase(&inputs.doc.facts, &inputs.doc.tgds, a.steps);
    write!(out, "{inst}").map_err(io)?;
    writeln!(out, "% steps: {}\n% saturated: {}", inst.log.len(), inst.saturated).map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_graph(a: &GraphArgs, out: &mut dyn Write) -> Result<i32> {
    let inputs = load(&a.ontology, None, &[], false)?;
    let tgds = &inputs.normalized.tgds;
    writeln!(out, "% rules").map_err(io)?;
    for (k, t) in tgds.iter().enumerate() {
        writeln!(out, "σ{} : {t}", k + 1).map_err(io)?;
    }
    let pg = PropagationGraph::build(tgds);
    write!(out, "% propagation graph\n{pg}").map_err(io)?;
    match CoverGraph::build_bounded(tgds, &pg, a.max_path_len, DEFAULT_MAX_SEQUENCES) {
        Ok(cg) => {
            write!(out, "% cover graph\n{cg}").map_err(io)?;
            if cg.truncated {
                writeln!(out, "% cover graph truncated").map_err(io)?;
            }
        }
        Err(Error::NotLinear) => writeln!(out, "% no cover graph: rules are not linear").map_err(io)?,
        Err(e) => return Err(e),
    }
    writeln!(out, "% affected positions").map_err(io)?;
    for (k, set) in affected_positions(tgds).iter().enumerate() {
        let names: Vec<String> = set.iter().map(|p| p.to_string()).collect();
        writeln!(out, "σ{} : {{{}}}", k + 1, names.join(", ")).map_err(io)?;
    }
    Ok(EXIT_OK)
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let extra: Vec<&Path> = a.database.iter().map(PathBuf::as_path).collect();
    let inputs = load(&a.ontology, a.query.as_deref(), &extra, true)?;
    let q = inputs.query.expect("query required");
    let ans = certain_answers(&q, &inputs.doc.facts, &inputs.doc.tgds, a.steps);
    for t in &ans.answers {
        writeln!(out, "{}", tuple(t)).map_err(io)?;
    }
    writeln!(out, "% saturated: {}", ans.saturated).map_err(io)?;
    Ok(EXIT_OK)
}

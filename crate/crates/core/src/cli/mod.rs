//! The `algebrist` command line.

mod cache;

use std::ffi::OsString;
use std::fmt::Display;
use std::io::{self, BufRead, Write};
use std::num::NonZeroUsize;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::audit;
use crate::axioms::{builtin_system, load_axioms, merge, AxiomError, AxiomSystem, SystemName};
use crate::consequence::{derive, semantic_consequence_with, CandidateSpace, DeriveBudget, Verdict};
use crate::models::{first_failure, Completion, EnumOptions, FiniteAlgebra, ModelError, ModelSearch};
use crate::power::{compare, rank_all, PowerBudget};
use crate::structure::classify_structure;
use crate::terms::{parse_equation, Equation, OpSet, OpSymbol, ParseError};

use cache::{Cache, MAX_CACHED_MODELS};

/// Process exit statuses.
pub mod exit {
    /// Success; for verdicts, the identity holds.
    pub const OK: u8 = 0;
    /// A countermodel or violated axiom was found.
    pub const REFUTED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const RESOURCE_CAP: u8 = 3;
    pub const IO: u8 = 4;
    /// Neither a derivation nor a countermodel within the budgets.
    pub const UNKNOWN: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Axiom(AxiomError::Io { .. }) | CliError::Io { .. } => exit::IO,
            CliError::Model(ModelError::ResourceCap { .. }) => exit::RESOURCE_CAP,
            _ => exit::CONFIG,
        }
    }
}

fn output_error(source: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// One JSON record per line.
    Json,
}

/// Equational axiom systems over product, left and right division.
///
/// Systems are given as built-in names (C0..C3, G0..G3, Mx_neutral, ...),
/// `none` for the empty system, or axiom-file paths; join several with `+`.
#[derive(Debug, Parser)]
#[command(name = "algebrist", version)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Directory for cached enumerations.
    #[arg(long, env = "ALGEBRIST_CACHE_DIR", global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads for model search. Output does not depend on it.
    #[arg(long, default_value_t = 1, value_parser = positive, global = true)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List or count the models of a system of one size.
    Enumerate(EnumerateArgs),
    /// Check algebras (one record per line) against a system.
    Check(CheckArgs),
    /// Look for a derivation, then for a countermodel.
    Prove(ProveArgs),
    /// Look for a countermodel.
    Refute(RefuteArgs),
    /// Compare two systems by their bounded consequence sets.
    Compare(CompareArgs),
    /// Order several systems by their bounded consequence sets.
    Rank(RankArgs),
    /// Structural report for algebras (one record per line, `-` for stdin).
    Classify(ClassifyArgs),
    /// Whether the small models of G1, G2, G3 are abelian groups, per
    /// modulus reading.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long = "system", required = true)]
    pub systems: Vec<String>,
    #[arg(long, value_parser = positive)]
    pub size: usize,
    /// Print only the number of models.
    #[arg(long)]
    pub count: bool,
    /// One model per isomorphism class.
    #[arg(long)]
    pub up_to_iso: bool,
    /// Extra operations to carry, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = op_name)]
    pub ops: Vec<OpSymbol>,
    #[arg(long)]
    pub max_results: Option<NonZeroUsize>,
    /// Lift the resource cap on large enumerations.
    #[arg(long)]
    pub allow_large: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub algebra: PathBuf,
    #[arg(long = "system", required = true)]
    pub systems: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[arg(long = "system", required = true)]
    pub systems: Vec<String>,
    pub equation: String,
    #[arg(long, default_value_t = DeriveBudget::default().max_term_depth, value_parser = positive)]
    pub max_term_depth: usize,
    #[arg(long, default_value_t = DeriveBudget::default().max_steps, value_parser = positive)]
    pub max_steps: usize,
    #[arg(long, default_value_t = DeriveBudget::default().max_terms, value_parser = positive)]
    pub max_terms: usize,
    /// Largest countermodel searched when no derivation is found.
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub max_size: usize,
}

#[derive(Debug, Args)]
pub struct RefuteArgs {
    #[arg(long = "system", required = true)]
    pub systems: Vec<String>,
    pub equation: String,
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub max_size: usize,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 2, value_parser = positive)]
    pub max_vars: usize,
    #[arg(long, default_value_t = 1)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub model_size: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub first: String,
    pub second: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(required = true)]
    pub systems: Vec<String>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub algebra: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub max_size: usize,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".to_string()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn op_name(s: &str) -> Result<OpSymbol, String> {
    OpSymbol::from_name(s).ok_or_else(|| format!("unknown operation {s:?} (expected prod, ldiv or rdiv)"))
}

/// Resolves one selector: an existing file, or `+`-joined builtin names,
/// `none`, and file paths.
pub fn resolve_system(selector: &str) -> Result<AxiomSystem, CliError> {
    if Path::new(selector).is_file() {
        return Ok(load_axioms(Path::new(selector))?);
    }
    let mut parts = Vec::new();
    for part in selector.split('+').map(str::trim) {
        let sys = if part.eq_ignore_ascii_case("none") {
            AxiomSystem::empty("none")
        } else if let Ok(name) = SystemName::from_str(part) {
            builtin_system(name)
        } else if Path::new(part).is_file() {
            load_axioms(Path::new(part))?
        } else {
            return Err(AxiomError::UnknownSystem(part.to_string()).into());
        };
        parts.push(sys);
    }
    Ok(if parts.len() == 1 { parts.pop().expect("one part") } else { merge(&parts) })
}

fn resolve_all(selectors: &[String]) -> Result<AxiomSystem, CliError> {
    let systems = selectors.iter().map(|s| resolve_system(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(if systems.len() == 1 { systems.into_iter().next().expect("one system") } else { merge(&systems) })
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    if path == Path::new("-") {
        let mut text = String::new();
        for line in io::stdin().lock().lines() {
            text.push_str(&line.map_err(io_err)?);
            text.push('\n');
        }
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(io_err)
    }
}

/// Algebra records, one per nonblank line.
fn read_algebras(path: &Path) -> Result<Vec<FiniteAlgebra>, CliError> {
    let text = read_input(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            FiniteAlgebra::from_record_json(l)
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

struct Ctx<'a> {
    format: Format,
    cache: Option<Cache>,
    jobs: usize,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn line(&mut self, s: impl Display) -> Result<(), CliError> {
        writeln!(self.out, "{s}").map_err(output_error)
    }

    fn record(&mut self, v: &impl Serialize) -> Result<(), CliError> {
        let s = serde_json::to_string(v).expect("records serialize");
        self.line(s)
    }

    fn emit(&mut self, text: impl Display, v: &impl Serialize) -> Result<(), CliError> {
        match self.format {
            Format::Text => self.line(text),
            Format::Json => self.record(v),
        }
    }
}

/// Runs the command line `args` (program name first). Returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code as u8;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    let cache = match &cli.cache_dir {
        Some(dir) => Some(Cache::open(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?),
        None => None,
    };
    let mut ctx = Ctx { format: cli.format, cache, jobs: cli.jobs, out };
    let code = match cli.command {
        Command::Enumerate(a) => enumerate(&mut ctx, a)?,
        Command::Check(a) => check(&mut ctx, a)?,
        Command::Prove(a) => prove(&mut ctx, a)?,
        Command::Refute(a) => refute(&mut ctx, a)?,
        Command::Compare(a) => {
            let (x, y) = (resolve_system(&a.first)?, resolve_system(&a.second)?);
            let report = compare(&x, &y, &power_budget(&a.budget, ctx.jobs))?;
            ctx.emit(&report, &report)?;
            exit::OK
        }
        Command::Rank(a) => {
            let systems = a.systems.iter().map(|s| resolve_system(s)).collect::<Result<Vec<_>, _>>()?;
            let summary = rank_all(&systems, &power_budget(&a.budget, ctx.jobs))?;
            ctx.emit(&summary, &summary)?;
            exit::OK
        }
        Command::Classify(a) => {
            for (i, alg) in read_algebras(&a.algebra)?.iter().enumerate() {
                let report = classify_structure(alg);
                if ctx.format == Format::Text && i > 0 {
                    ctx.line("")?;
                }
                ctx.emit(&report, &report)?;
            }
            exit::OK
        }
        Command::Audit(a) => {
            let entries = audit::audit_all(a.max_size)?;
            match ctx.format {
                Format::Text => write!(ctx.out, "{}", audit::render(&entries)).map_err(output_error)?,
                Format::Json => {
                    for e in &entries {
                        ctx.record(e)?;
                    }
                }
            }
            exit::OK
        }
    };
    ctx.out.flush().map_err(output_error)?;
    Ok(code)
}

fn power_budget(b: &BudgetArgs, jobs: usize) -> PowerBudget {
    PowerBudget {
        space: CandidateSpace { max_vars: b.max_vars, max_depth: b.max_depth },
        model_size: b.model_size,
        parallel_width: jobs,
    }
}

fn enumerate(ctx: &mut Ctx, a: EnumerateArgs) -> Result<u8, CliError> {
    let sys = resolve_all(&a.systems)?;
    let opts = EnumOptions {
        up_to_iso: a.up_to_iso,
        max_results: a.max_results,
        parallel_width: ctx.jobs,
        extra_ops: a.ops.iter().copied().collect(),
        allow_large: a.allow_large,
    };
    let search = ModelSearch::new(&sys, a.size, &opts)?;
    let ops: OpSet = sys.ops().union(opts.extra_ops);
    let entry = ctx.cache.as_ref().map(|c| c.entry(&sys, ops, a.size, a.up_to_iso));
    let cache_err = |source| CliError::Io { path: PathBuf::from("<cache>"), source };

    if a.count {
        let (count, complete) = match entry.as_ref().and_then(|e| e.count()) {
            Some(total) => match a.max_results {
                Some(m) if total > m.get() as u64 => (m.get() as u64, false),
                _ => (total, true),
            },
            None => {
                let (c, done) = search.count();
                let complete = done == Completion::Exhausted;
                if let (Some(e), true) = (&entry, complete) {
                    e.store_count(c).map_err(cache_err)?;
                }
                (c, complete)
            }
        };
        let record = json!({
            "system": sys.name,
            "size": a.size,
            "up_to_iso": a.up_to_iso,
            "count": count,
            "complete": complete,
        });
        ctx.emit(count, &record)?;
        return Ok(exit::OK);
    }

    if let Some(text) = entry.as_ref().and_then(|e| e.records()) {
        let limit = a.max_results.map_or(usize::MAX, NonZeroUsize::get);
        for line in text.lines().take(limit) {
            ctx.line(line)?;
        }
        return Ok(exit::OK);
    }
    let mut stored = Some(String::new());
    let mut count = 0u64;
    let mut failure = None;
    let done = search.for_each(|alg| {
        let line = alg.to_record_json();
        count += 1;
        if let Some(buf) = &mut stored {
            if count as usize > MAX_CACHED_MODELS {
                stored = None;
            } else {
                buf.push_str(&line);
                buf.push('\n');
            }
        }
        match ctx.line(line) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if let (Some(e), Completion::Exhausted) = (&entry, done) {
        e.store_count(count).map_err(cache_err)?;
        if let Some(text) = stored {
            e.store_records(&text).map_err(cache_err)?;
        }
    }
    Ok(exit::OK)
}

fn check(ctx: &mut Ctx, a: CheckArgs) -> Result<u8, CliError> {
    let sys = resolve_all(&a.systems)?;
    let mut code = exit::OK;
    for alg in read_algebras(&a.algebra)? {
        match first_failure(&alg, &sys)? {
            None => ctx.emit("satisfies", &json!({ "result": "satisfies" }))?,
            Some((i, witness)) => {
                code = exit::REFUTED;
                let eq = &sys.equations()[i];
                let w: Vec<String> = witness.iter().map(|(v, x)| format!("{v}={x}")).collect();
                let text = format!("violates {eq} at {}", w.join(", "));
                ctx.emit(text, &json!({ "result": "violates", "equation": eq, "witness": witness }))?;
            }
        }
    }
    Ok(code)
}

fn verdict_record(sys: &AxiomSystem, eq: &Equation, v: &Verdict) -> Value {
    let mut record = json!({ "system": sys.name, "equation": eq });
    if let (Value::Object(r), Value::Object(fields)) = (&mut record, serde_json::to_value(v).expect("verdicts serialize")) {
        r.extend(fields);
    }
    record
}

fn prove(ctx: &mut Ctx, a: ProveArgs) -> Result<u8, CliError> {
    let sys = resolve_all(&a.systems)?;
    let eq = parse_equation(&a.equation)?;
    let budget = DeriveBudget { max_term_depth: a.max_term_depth, max_steps: a.max_steps, max_terms: a.max_terms };
    let derived = derive(&sys, &eq, &budget);
    if derived.is_proved() {
        ctx.emit(&derived, &verdict_record(&sys, &eq, &derived))?;
        return Ok(exit::OK);
    }
    let semantic = semantic_consequence_with(&sys, &eq, a.max_size, ctx.jobs)?;
    match semantic {
        Verdict::HoldsUpTo(k) => {
            let mut record = verdict_record(&sys, &eq, &derived);
            record["holds_up_to"] = json!(k);
            ctx.emit(format!("{derived}\n{semantic}"), &record)?;
            Ok(exit::UNKNOWN)
        }
        _ => {
            ctx.emit(&semantic, &verdict_record(&sys, &eq, &semantic))?;
            Ok(exit::REFUTED)
        }
    }
}

fn refute(ctx: &mut Ctx, a: RefuteArgs) -> Result<u8, CliError> {
    let sys = resolve_all(&a.systems)?;
    let eq = parse_equation(&a.equation)?;
    let v = semantic_consequence_with(&sys, &eq, a.max_size, ctx.jobs)?;
    ctx.emit(&v, &verdict_record(&sys, &eq, &v))?;
    Ok(if v.is_refuted() { exit::REFUTED } else { exit::OK })
}

//! Command-line frontend: parse, ground, compile, analyze, generate and validate.
//!
//! Every subcommand prints one JSON document to stdout. Files are written as
//! `<instance>-<variant>.pddl` with the matching domain in
//! `<instance>-<variant>-domain.pddl`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pddlforge::analyze::{measure_ground, normalize_signature, validate_plan, AnalysisOptions, ViolationKind};
use pddlforge::compile_ce::{compile_conditional_effects, CeError, CeMethod, DEFAULT_CE_CAP};
use pddlforge::compile_dp::{compile_fixpoint_mode, compile_rules_to_actions, DP_COMPILED_SUFFIX};
use pddlforge::compile_til::compile_timed_literals;
use pddlforge::fixtures::{self, PhilosophersVariant};
use pddlforge::ground::{ground_task, to_lifted, GroundConfig, GroundError, GroundingReport};
use pddlforge::model::{GroundTask, LiftedTask};
use pddlforge::normalize::DEFAULT_DNF_BUDGET;
use pddlforge::parser::{parse_domain, parse_problem, print_task};

pub mod schema;

/// Environment variable overriding the worker count of `analyze --dir`.
pub const WORKERS_ENV: &str = "PDDLFORGE_WORKERS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Unreadable or malformed input, invalid plans. Exit code 1.
    Input(String),
    /// A resource cap was hit. Exit code 2.
    Cap(String),
    /// Exit code 3.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Cap(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Cap(m) | CliError::Internal(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pddlforge", version, about = "Compile and analyze PDDL planning tasks")]
pub struct Cli {
    /// Output format of the stdout report.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Caps {
    /// Largest number of DNF disjuncts built per formula.
    #[arg(long, default_value_t = DEFAULT_DNF_BUDGET)]
    pub dnf_budget: u128,
    /// Largest number of ground actions.
    #[arg(long, default_value_t = pddlforge::ground::DEFAULT_ACTION_CAP)]
    pub action_cap: usize,
}

impl Caps {
    fn ground(&self) -> GroundConfig {
        GroundConfig { dnf_budget: self.dnf_budget, action_cap: self.action_cap }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground a task and prune it; writes the ground task.
    Ground {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Compile a task to a simpler language.
    #[command(subcommand)]
    Compile(CompileCommand),
    /// Measure a task, or every task in a directory.
    Analyze {
        domain: Option<PathBuf>,
        problem: Option<PathBuf>,
        /// Analyze every problem in this directory; reports go to `--out`.
        #[arg(long, conflicts_with_all = ["domain", "problem"])]
        dir: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Compute exact h⁺ of the initial state.
        #[arg(long)]
        h_plus: bool,
        #[arg(long, default_value_t = 32)]
        h_plus_cap: usize,
        #[arg(long, default_value_t = DEFAULT_CE_CAP)]
        ce_cap: usize,
        /// Worker threads for `--dir`; the environment variable PDDLFORGE_WORKERS overrides it.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        caps: Caps,
    },
    /// Generate fixture instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Replay a plan on a task.
    Validate {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
        /// Drop plan steps whose action name starts with this prefix.
        #[arg(long)]
        erase: Vec<String>,
        #[command(flatten)]
        caps: Caps,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    /// One `path<TAB>value` line per scalar.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CeFlag {
    Enumerate,
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DpScheme {
    Rules,
    Fixpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantFlag {
    Dp,
    Plain,
}

#[derive(Debug, Subcommand)]
pub enum CompileCommand {
    /// Ground, then compile conditional effects and negative conditions away.
    Adl2strips {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = CeFlag::Enumerate)]
        ce: CeFlag,
        /// Per-action cap on distinct conditional effects for enumeration.
        #[arg(long, default_value_t = DEFAULT_CE_CAP)]
        ce_cap: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Ground, then compile derivation rules into actions.
    Dp {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = DpScheme::Rules)]
        scheme: DpScheme,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Replace timed initial literals by a wrapper action.
    Til {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    Philosophers {
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = VariantFlag::Dp)]
        variant: VariantFlag,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    PsrMini {
        #[arg(long)]
        net: String,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
}

/// Parse `argv` (including the program name), run, and write the JSON result to
/// `stdout`. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "error: arguments: {e}");
                return 1;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match execute(&cli.command) {
        Ok(value) => {
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&value).map_err(|e| e.to_string()),
                Format::Table => Ok(render_table(&value)),
            };
            match text {
                Ok(s) => {
                    let _ = writeln!(stdout, "{s}");
                    0
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: output: {e}");
                    3
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Flatten a JSON value into `path\tvalue` lines, in document order.
pub fn render_table(v: &serde_json::Value) -> String {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<String>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            serde_json::Value::Object(m) => m.iter().for_each(|(k, x)| walk(&join(k), x, out)),
            serde_json::Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&join(&i.to_string()), x, out)),
            serde_json::Value::String(s) => out.push(format!("{prefix}\t{s}")),
            other => out.push(format!("{prefix}\t{other}")),
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out.join("\n")
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("read: {}: {e}", path.display())))
}

/// Parse a domain and problem file into a task.
pub fn load_task(domain: &Path, problem: &Path) -> CliResult<LiftedTask> {
    let d = parse_domain(&read(domain)?)
        .map_err(|e| CliError::Input(format!("parse: {}: {e}", domain.display())))?;
    let p = parse_problem(&read(problem)?, &d.task)
        .map_err(|e| CliError::Input(format!("parse: {}: {e}", problem.display())))?;
    Ok(p.task)
}

fn ground_error(e: GroundError, file: &Path) -> CliError {
    let m = format!("ground: {}: {e}", file.display());
    if e.is_cap() {
        CliError::Cap(m)
    } else {
        CliError::Input(m)
    }
}

fn ce_error(e: CeError, file: &Path) -> CliError {
    let m = format!("compile: {}: {e}", file.display());
    match e {
        CeError::TooManyEffects { .. } => CliError::Cap(m),
        CeError::Normalize(n) if GroundError::from(n.clone()).is_cap() => CliError::Cap(m),
        _ => CliError::Input(m),
    }
}

fn ground(domain: &Path, problem: &Path, caps: &Caps) -> CliResult<(GroundTask, GroundingReport)> {
    let t = load_task(domain, problem)?;
    ground_task(&t, &caps.ground()).map_err(|e| ground_error(e, problem))
}

#[derive(Debug, Clone, Serialize)]
pub struct Written {
    pub domain: String,
    pub problem: String,
}

/// Write a task atomically: each file goes to a temporary name first.
pub fn write_task(t: &LiftedTask, dir: &Path, instance: &str, variant: &str) -> CliResult<Written> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("write: {}: {e}", dir.display())))?;
    let printed = print_task(t);
    let domain = format!("{instance}-{variant}-domain.pddl");
    let problem = format!("{instance}-{variant}.pddl");
    write_atomic(&dir.join(&domain), &printed.domain)?;
    write_atomic(&dir.join(&problem), &printed.problem)?;
    Ok(Written { domain, problem })
}

pub fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| CliError::Input(format!("write: {}: {e}", path.display())))
}

fn instance_of(t: &LiftedTask, problem: &Path) -> String {
    match &t.problem_name {
        Some(n) => n.clone(),
        None => problem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    }
}

#[derive(Debug, Serialize)]
struct GroundOutput {
    instance: String,
    report: GroundingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    files: Option<Written>,
}

#[derive(Debug, Serialize)]
struct CompileOutput {
    instance: String,
    variant: String,
    grounding: Option<GroundingReport>,
    actions: usize,
    facts: usize,
    rules: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ce: Option<pddlforge::compile_ce::CeCompilationStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    files: Option<Written>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    generator: &'static str,
    instance: String,
    variant: String,
    params: serde_json::Value,
    /// How the variant was derived, from the source encoding onwards.
    lineage: Vec<String>,
    files: Written,
}

#[derive(Debug, Serialize)]
struct Validation {
    valid: bool,
    steps: usize,
    erased: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<ViolationOut>,
}

#[derive(Debug, Serialize)]
struct ViolationOut {
    step: usize,
    action: String,
    kind: &'static str,
    unsatisfied: Vec<String>,
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(format!("serialize: {e}")))
}

fn maybe_write(t: &LiftedTask, out: &Option<PathBuf>, instance: &str, variant: &str) -> CliResult<Option<Written>> {
    out.as_ref().map(|dir| write_task(t, dir, instance, variant)).transpose()
}

fn execute(cmd: &Command) -> CliResult<serde_json::Value> {
    match cmd {
        Command::Ground { domain, problem, out, caps } => {
            let (g, report) = ground(domain, problem, caps)?;
            let files = maybe_write(&to_lifted(&g), out, &g.name, "ground")?;
            to_value(&GroundOutput { instance: g.name.clone(), report, files })
        }
        Command::Compile(c) => compile(c),
        Command::Analyze { domain, problem, dir, out, h_plus, h_plus_cap, ce_cap, workers, caps } => {
            let opts = AnalysisOptions {
                ground: caps.ground(),
                h_plus_cap: h_plus.then_some(*h_plus_cap),
                ce_cap: *ce_cap,
            };
            match (dir, domain, problem) {
                (Some(d), _, _) => analyze_dir(d, out.as_deref(), &opts, worker_count(*workers)?),
                (None, Some(d), Some(p)) => to_value(&analyze_one(d, p, &opts)?),
                _ => Err(CliError::Input("analyze: give a domain and a problem, or --dir".into())),
            }
        }
        Command::Gen(g) => generate(g),
        Command::Validate { domain, problem, plan, erase, caps } => validate(domain, problem, plan, erase, caps),
    }
}

fn compile(c: &CompileCommand) -> CliResult<serde_json::Value> {
    match c {
        CompileCommand::Adl2strips { domain, problem, ce, ce_cap, out, caps } => {
            let (g, report) = ground(domain, problem, caps)?;
            let method = match ce {
                CeFlag::Enumerate => CeMethod::Enumerate,
                CeFlag::Phase => CeMethod::EvaluationPhase,
            };
            let (s, stats) = compile_conditional_effects(&g, method, *ce_cap).map_err(|e| ce_error(e, problem))?;
            let variant = match ce {
                CeFlag::Enumerate => "strips-enumerate",
                CeFlag::Phase => "strips-phase",
            };
            let files = maybe_write(&to_lifted(&s), out, &g.name, variant)?;
            to_value(&CompileOutput {
                instance: g.name.clone(),
                variant: variant.into(),
                grounding: Some(report),
                actions: s.actions.len(),
                facts: s.facts.len(),
                rules: s.rules.len(),
                ce: Some(stats),
                warnings: Vec::new(),
                files,
            })
        }
        CompileCommand::Dp { domain, problem, scheme, out, caps } => {
            let (g, report) = ground(domain, problem, caps)?;
            let compiled = match scheme {
                DpScheme::Rules => compile_rules_to_actions(&g),
                DpScheme::Fixpoint => compile_fixpoint_mode(&g),
            }
            .map_err(|e| CliError::Input(format!("compile: {}: {e}", problem.display())))?;
            let variant = match scheme {
                DpScheme::Rules => "dp-rules",
                DpScheme::Fixpoint => "dp-fixpoint",
            };
            let mut lifted = to_lifted(&compiled);
            if !lifted.domain_name.ends_with(DP_COMPILED_SUFFIX) {
                lifted.domain_name.push_str(DP_COMPILED_SUFFIX);
            }
            let files = maybe_write(&lifted, out, &g.name, variant)?;
            to_value(&CompileOutput {
                instance: g.name.clone(),
                variant: variant.into(),
                grounding: Some(report),
                actions: compiled.actions.len(),
                facts: compiled.facts.len(),
                rules: compiled.rules.len(),
                ce: None,
                warnings: Vec::new(),
                files,
            })
        }
        CompileCommand::Til { domain, problem, out } => {
            let t = load_task(domain, problem)?;
            let instance = instance_of(&t, problem);
            let c = compile_timed_literals(&t)
                .map_err(|e| CliError::Input(format!("compile: {}: {e}", problem.display())))?;
            let files = maybe_write(&c.task, out, &instance, "til")?;
            to_value(&CompileOutput {
                instance,
                variant: "til".into(),
                grounding: None,
                actions: c.task.operators.len(),
                facts: c.task.predicates.len(),
                rules: c.task.derivation_rules.len(),
                ce: None,
                warnings: c.warnings,
                files,
            })
        }
    }
}

/// Worker count: the environment variable wins over the flag.
pub fn worker_count(flag: usize) -> CliResult<usize> {
    let n = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Input(format!("{WORKERS_ENV}: not a number: {v}")))?,
        Err(_) => flag,
    };
    if n == 0 {
        return Err(CliError::Input("worker count must be positive".into()));
    }
    Ok(n)
}

fn analyze_one(domain: &Path, problem: &Path, opts: &AnalysisOptions) -> CliResult<pddlforge::analyze::AnalysisReport> {
    let (g, report) = ground(domain, problem, &Caps { dnf_budget: opts.ground.dnf_budget, action_cap: opts.ground.action_cap })?;
    measure_ground(&g, report, opts).map_err(|e| {
        let m = format!("analyze: {}: {e}", problem.display());
        match e {
            pddlforge::analyze::AnalyzeError::Ground(g) if g.is_cap() => CliError::Cap(m),
            pddlforge::analyze::AnalyzeError::Ce(CeError::TooManyEffects { .. }) => CliError::Cap(m),
            _ => CliError::Input(m),
        }
    })
}

/// Problem files of a directory with their domains: `X.pddl` pairs with
/// `X-domain.pddl` when present, otherwise with `domain.pddl`.
pub fn discover(dir: &Path) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Input(format!("read: {}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".pddl"))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for n in &names {
        if n == "domain.pddl" || n.ends_with("-domain.pddl") {
            continue;
        }
        let stem = n.trim_end_matches(".pddl");
        let own = dir.join(format!("{stem}-domain.pddl"));
        let shared = dir.join("domain.pddl");
        let domain = if own.exists() {
            own
        } else if shared.exists() {
            shared
        } else {
            return Err(CliError::Input(format!("analyze: {}: no domain file for {n}", dir.display())));
        };
        out.push((domain, dir.join(n)));
    }
    Ok(out)
}

fn analyze_dir(dir: &Path, out: Option<&Path>, opts: &AnalysisOptions, workers: usize) -> CliResult<serde_json::Value> {
    use rayon::prelude::*;
    let jobs = discover(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(format!("threads: {e}")))?;
    let results: Vec<CliResult<(String, serde_json::Value)>> = pool.install(|| {
        jobs.par_iter()
            .map(|(d, p)| {
                let r = analyze_one(d, p, opts)?;
                let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
                let v = to_value(&r)?;
                if let Some(o) = out {
                    fs::create_dir_all(o).map_err(|e| CliError::Input(format!("write: {}: {e}", o.display())))?;
                    let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Internal(e.to_string()))?;
                    write_atomic(&o.join(format!("{stem}.json")), &format!("{text}\n"))?;
                }
                Ok((stem, v))
            })
            .collect()
    });
    let mut reports = Vec::new();
    for r in results {
        reports.push(r?.1);
    }
    Ok(serde_json::Value::Array(reports))
}

fn generate(g: &GenCommand) -> CliResult<serde_json::Value> {
    let input = |e: fixtures::FixtureError| CliError::Input(format!("gen: {e}"));
    let (fixture, generator, params, lineage, variant) = match g {
        GenCommand::Philosophers { n, variant, .. } => {
            let v = match variant {
                VariantFlag::Dp => PhilosophersVariant::DerivedPredicates,
                VariantFlag::Plain => PhilosophersVariant::Plain,
            };
            let lineage = match v {
                PhilosophersVariant::DerivedPredicates => vec!["philosopher automaton".to_string(), "dp".to_string()],
                PhilosophersVariant::Plain => vec![
                    "philosopher automaton".to_string(),
                    "dp".to_string(),
                    "plain: rules as actions".to_string(),
                ],
            };
            (fixtures::philosophers(*n, v).map_err(input)?, "philosophers", serde_json::json!({ "n": n }), lineage, v.tag())
        }
        GenCommand::PsrMini { net, .. } => {
            (fixtures::psr(net).map_err(input)?, "psr-mini", serde_json::json!({ "net": net }), vec!["psr network".to_string()], "dp")
        }
    };
    let out = match g {
        GenCommand::Philosophers { out, .. } | GenCommand::PsrMini { out, .. } => out,
    };
    let task = fixture.task().map_err(|e| CliError::Internal(format!("gen: {e}")))?;
    let instance = task.instance_name().to_string();
    let files = write_task(&task, out, &instance, variant)?;
    let manifest = Manifest { generator, instance: instance.clone(), variant: variant.into(), params, lineage, files };
    let v = to_value(&manifest)?;
    let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Internal(e.to_string()))?;
    write_atomic(&out.join(format!("{instance}-{variant}.manifest.json")), &format!("{text}\n"))?;
    Ok(v)
}

/// Action signatures of a plan file. Accepts `(a b)`, `0: (a b) [1]` and `;` comments.
pub fn read_plan(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split(';').next().unwrap_or(""))
        .filter_map(|l| {
            let start = l.find('(')?;
            let end = l[start..].find(')')? + start;
            Some(normalize_signature(&l[start..=end]))
        })
        .collect()
}

fn validate(domain: &Path, problem: &Path, plan: &Path, erase: &[String], caps: &Caps) -> CliResult<serde_json::Value> {
    let t = load_task(domain, problem)?;
    let statics = pddlforge::normalize::detect_statics(&t);
    let g = pddlforge::ground::instantiate(&t, &statics, &caps.ground()).map_err(|e| ground_error(e, problem))?;
    let all = read_plan(&read(plan)?);
    let steps: Vec<String> = all
        .iter()
        .filter(|s| !erase.iter().any(|p| s.trim_start_matches('(').starts_with(p.as_str())))
        .cloned()
        .collect();
    let erased = all.len() - steps.len();
    match validate_plan(&g, &steps) {
        Ok(()) => to_value(&Validation { valid: true, steps: steps.len(), erased, violation: None }),
        Err(v) => {
            let (kind, unsatisfied) = match v.kind {
                ViolationKind::UnknownAction => ("unknown-action", Vec::new()),
                ViolationKind::Inapplicable(m) => ("inapplicable", m),
                ViolationKind::GoalNotReached(m) => ("goal-not-reached", m),
            };
            let detail = ViolationOut { step: v.step, action: v.action, kind, unsatisfied };
            Err(CliError::Input(format!(
                "validate: {}: {}",
                plan.display(),
                serde_json::to_string(&detail).map_err(|e| CliError::Internal(e.to_string()))?
            )))
        }
    }
}

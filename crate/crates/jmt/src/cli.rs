//! Command-line interface.
//!
//! Exit codes: 0 the assertion holds (or the requested artifact was
//! produced), 1 the assertion fails, 2 the input uses an unsupported
//! feature for the requested backend, 3 the search budget ran out before a
//! verdict, 64 usage errors (bad flags, missing or unparseable inputs),
//! 70 internal errors (solver or herd misbehavior).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::behavior::{judge, Allowed, Behavior, Outcome, Prepared, Verdict};
use crate::causality::{Justification, SearchConfig};
use crate::cat::{load_cat, CatModel};
use crate::expr::{Expr, Reg, Value};
use crate::jcstress::to_jcstress;
use crate::litmus::{parse_litmus, Instruction, LitmusError, LitmusTest, Quantifier};
use crate::smt::encode::enc_justification;
use crate::smt::{render_smtlib, Solver, SolverConfig};
use crate::x86::{check_inclusion, compile_to_x86, HerdConfig, InclusionResult, X86Error};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_UNSUPPORTED: u8 = 2;
pub const EXIT_UNKNOWN: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_INTERNAL: u8 = 70;

#[derive(Parser)]
#[command(
    name = "jmt",
    version,
    about = "Litmus-test checker for multi-execution Java memory models"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct GlobalOpts {
    /// SMT solver: `builtin` or the path of an SMT-LIB v2 solver binary
    #[arg(long, global = true, env = "JMT_SMT_SOLVER", default_value = "builtin")]
    pub smt_solver: String,

    /// Timeout per external solver call, in seconds
    #[arg(long, global = true, default_value_t = 60)]
    pub smt_timeout: u64,

    /// herd binary used by `with-herd-x86`
    #[arg(long, global = true, env = "JMT_HERD", default_value = "herd7")]
    pub herd_path: PathBuf,

    /// Cap on events committed per justification stage (default: unbounded)
    #[arg(long, global = true, value_name = "N")]
    pub commit_bound: Option<usize>,

    /// Maximum number of stages in a justification
    #[arg(long, global = true, default_value_t = SearchConfig::default().max_stages)]
    pub max_stages: usize,

    /// Search nodes explored before giving up with `unknown`
    #[arg(long, global = true, default_value_t = SearchConfig::default().node_budget)]
    pub node_budget: u64,

    /// Print results as JSON
    #[arg(long, global = true)]
    pub json: bool,

    /// Cap the number of worker threads
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Decide the behavior assertion of a litmus test under a .cat model
    Check {
        /// Java litmus test file
        litmus: PathBuf,
        /// Single-execution memory model (.cat)
        cat: PathBuf,
        /// Print the justification behind the verdict, stage by stage
        #[arg(long)]
        show_justification: bool,
        /// Write the solver query validating the justification (SMT-LIB v2)
        #[arg(long, value_name = "FILE")]
        smt_dump: Option<PathBuf>,
    },
    /// Compile a litmus test to an x86 litmus test for herd
    ToHerdX86 {
        /// Java litmus test file
        litmus: PathBuf,
        /// Write here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile to x86, run herd, and check every hardware behavior is
    /// allowed by the source model
    WithHerdX86 {
        /// Java litmus test file
        litmus: PathBuf,
        /// Single-execution memory model (.cat)
        cat: PathBuf,
    },
    /// Emit a jcstress harness for a litmus test
    ToJcstress {
        /// Java litmus test file
        litmus: PathBuf,
        /// Classify each candidate outcome against this .cat model; without
        /// it all outcomes are marked interesting
        #[arg(long, value_name = "CAT")]
        model: Option<PathBuf>,
        /// Write here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// A command failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INTERNAL, message: message.into() }
    }

    fn unsupported(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_UNSUPPORTED, message: message.into() }
    }
}

impl From<crate::behavior::EngineError> for Failure {
    fn from(e: crate::behavior::EngineError) -> Failure {
        Failure::internal(format!("engine error: {e}"))
    }
}

pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.opts.jobs {
        // ignore the error if a pool already exists (e.g. in-process tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("jmt: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    let solver = make_solver(&cli.opts)?;
    let cfg = SearchConfig {
        commit_bound: cli.opts.commit_bound,
        max_stages: cli.opts.max_stages,
        node_budget: cli.opts.node_budget,
    };
    match &cli.command {
        Command::Check { litmus, cat, show_justification, smt_dump } => cmd_check(
            cli,
            litmus,
            cat,
            *show_justification,
            smt_dump.as_deref(),
            &solver,
            &cfg,
        ),
        Command::ToHerdX86 { litmus, output } => cmd_to_herd_x86(litmus, output.as_deref()),
        Command::WithHerdX86 { litmus, cat } => {
            cmd_with_herd_x86(cli, litmus, cat, &solver, &cfg)
        }
        Command::ToJcstress { litmus, model, output } => {
            cmd_to_jcstress(litmus, model.as_deref(), output.as_deref(), &solver, &cfg)
        }
    }
}

fn make_solver(opts: &GlobalOpts) -> Result<Solver, Failure> {
    let config = match opts.smt_solver.as_str() {
        "builtin" => SolverConfig::Builtin,
        path => SolverConfig::External {
            path: PathBuf::from(path),
            timeout: Duration::from_secs(opts.smt_timeout),
        },
    };
    Ok(Solver::new(config))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_test(path: &Path) -> Result<LitmusTest, Failure> {
    let src = read_file(path)?;
    parse_litmus(&src).map_err(|e| match e {
        LitmusError::Unsupported(msg) => Failure::unsupported(format!("{}: {msg}", path.display())),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn load_model(path: &Path) -> Result<CatModel, Failure> {
    load_cat(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Pass => EXIT_PASS,
        Outcome::Fail => EXIT_FAIL,
        Outcome::Unsupported => EXIT_UNSUPPORTED,
        Outcome::Unknown => EXIT_UNKNOWN,
    }
}

#[derive(serde::Serialize)]
struct CheckReport<'a> {
    test: &'a str,
    outcome: Outcome,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<&'a Behavior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence: Option<&'a Behavior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    justification: Option<String>,
}

/// The justification the verdict rests on, if any, together with the
/// behavior formula it was searched for.
fn verdict_justification<'v>(
    verdict: &'v Verdict,
    test: &LitmusTest,
) -> Option<(&'v Justification, Expr)> {
    let phi = test.assertion.formula.to_expr();
    if let Some((_, j)) = &verdict.evidence {
        return Some((j, phi));
    }
    if let Some((_, j)) = &verdict.witness {
        // forall verdicts fail on a counterexample to the formula
        let searched = match test.assertion.quantifier {
            Quantifier::Forall => Expr::not(phi),
            _ => phi,
        };
        return Some((j, searched));
    }
    None
}

fn cmd_check(
    cli: &Cli,
    litmus: &Path,
    cat: &Path,
    show_justification: bool,
    smt_dump: Option<&Path>,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<u8, Failure> {
    let test = load_test(litmus)?;
    let model = load_model(cat)?;
    let prepared = Prepared::new(&test, &model, solver)?;
    let verdict = judge(&prepared, solver, cfg)?;

    let justification = verdict_justification(&verdict, &test);
    if let Some(path) = smt_dump {
        let text = match &justification {
            Some((j, phi)) => {
                let stages: Vec<_> =
                    j.stages.iter().map(|s| (&s.graph.graph, &s.committed)).collect();
                render_smtlib(&enc_justification(&j.target.graph, &stages, phi))
            }
            None => "; no justification behind this verdict\n".to_string(),
        };
        write_output(Some(path), &text)?;
    }

    if cli.opts.json {
        let report = CheckReport {
            test: &test.name,
            outcome: verdict.outcome,
            detail: &verdict.detail,
            witness: verdict.witness.as_ref().map(|(b, _)| b),
            evidence: verdict.evidence.as_ref().map(|(b, _)| b),
            justification: show_justification
                .then(|| justification.as_ref().map(|(j, _)| j.dump()))
                .flatten(),
        };
        println!("{}", serde_json::to_string_pretty(&report).expect("report is serializable"));
    } else {
        println!("{}: {} ({})", test.name, label(verdict.outcome), verdict.detail);
        if show_justification {
            match &justification {
                Some((j, _)) => print!("{}", j.dump()),
                None => println!("no justification behind this verdict"),
            }
        }
    }
    Ok(outcome_code(verdict.outcome))
}

fn label(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Pass => "pass",
        Outcome::Fail => "fail",
        Outcome::Unsupported => "unsupported",
        Outcome::Unknown => "unknown",
    }
}

fn cmd_to_herd_x86(litmus: &Path, output: Option<&Path>) -> Result<u8, Failure> {
    let test = load_test(litmus)?;
    let (program, _) = compile_to_x86(&test).map_err(x86_failure)?;
    write_output(output, &program.render())?;
    Ok(EXIT_PASS)
}

fn x86_failure(e: X86Error) -> Failure {
    match e {
        X86Error::Unsupported { .. } | X86Error::RegisterPressure { .. } => {
            Failure::unsupported(e.to_string())
        }
        other => Failure::internal(other.to_string()),
    }
}

#[derive(serde::Serialize)]
struct InclusionReport<'a> {
    test: &'a str,
    outcome: Outcome,
    detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Behavior>,
}

fn cmd_with_herd_x86(
    cli: &Cli,
    litmus: &Path,
    cat: &Path,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<u8, Failure> {
    let test = load_test(litmus)?;
    let model = load_model(cat)?;
    let prepared = Prepared::new(&test, &model, solver)?;
    let herd = HerdConfig {
        path: cli.opts.herd_path.clone(),
        timeout: Duration::from_secs(cli.opts.smt_timeout.max(60)),
    };
    let result = match check_inclusion(&prepared, solver, cfg, &herd) {
        Ok(r) => r,
        Err(X86Error::Engine(e)) => return Err(Failure::internal(e.to_string())),
        Err(e) => return Err(x86_failure(e)),
    };
    let (outcome, detail, witness) = match result {
        InclusionResult::Pass { checked } => (
            Outcome::Pass,
            format!("all {checked} hardware behaviors are allowed by the model"),
            None,
        ),
        InclusionResult::Fail { witness } => (
            Outcome::Fail,
            format!("hardware behavior not allowed by the model: {witness}"),
            Some(witness),
        ),
        InclusionResult::Unknown { behavior } => (
            Outcome::Unknown,
            format!("search budget exhausted on hardware behavior: {behavior}"),
            None,
        ),
    };
    if cli.opts.json {
        let report = InclusionReport { test: &test.name, outcome, detail, witness };
        println!("{}", serde_json::to_string_pretty(&report).expect("report is serializable"));
    } else {
        println!("{}: {} ({detail})", test.name, label(outcome));
    }
    Ok(outcome_code(outcome))
}

fn cmd_to_jcstress(
    litmus: &Path,
    model: Option<&Path>,
    output: Option<&Path>,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<u8, Failure> {
    let test = load_test(litmus)?;
    let allowed = match model {
        Some(cat) => Some(classify_outcomes(&test, &load_model(cat)?, solver, cfg)?),
        None => None,
    };
    let text = to_jcstress(&test, allowed.as_deref())
        .map_err(|e| Failure::unsupported(e.to_string()))?;
    write_output(output, &text)?;
    Ok(EXIT_PASS)
}

/// Enumerate candidate behaviors over the observed registers and keep the
/// allowed ones. The candidate value domain is the set of constants
/// mentioned anywhere in the program, always including 0.
fn classify_outcomes(
    test: &LitmusTest,
    model: &CatModel,
    solver: &Solver,
    cfg: &SearchConfig,
) -> Result<Vec<Behavior>, Failure> {
    let mut observed: BTreeSet<Reg> = BTreeSet::new();
    test.assertion.formula.to_expr().registers(&mut observed);
    let observed: Vec<Reg> = observed.into_iter().collect();
    let mut domain = program_constants(test);
    domain.insert(0);
    let domain: Vec<Value> = domain.into_iter().collect();

    let prepared = Prepared::new(test, model, solver)?;
    let mut allowed = Vec::new();
    let mut assignment = vec![0usize; observed.len()];
    loop {
        let behavior = Behavior {
            values: observed
                .iter()
                .zip(&assignment)
                .map(|(r, &i)| (r.0.clone(), domain[i]))
                .collect(),
        };
        match prepared.behavior_allowed(&behavior.to_formula(), solver, cfg)? {
            Allowed::Witness(..) => allowed.push(behavior),
            Allowed::Absent => {}
            Allowed::Unknown => {
                return Err(Failure {
                    code: EXIT_UNKNOWN,
                    message: format!(
                        "search budget exhausted while classifying outcome {behavior}"
                    ),
                });
            }
        }
        // odometer over domain^observed; the last register varies fastest
        // so the outcome table reads in lexicographic order
        let mut pos = assignment.len();
        loop {
            if pos == 0 {
                return Ok(allowed);
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < domain.len() {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

/// All constants mentioned in initializers, instructions, and the assertion.
fn program_constants(test: &LitmusTest) -> BTreeSet<Value> {
    fn walk_expr(e: &Expr, out: &mut BTreeSet<Value>) {
        match e {
            Expr::Val(v) => {
                out.insert(*v);
            }
            Expr::Reg(_) => {}
            Expr::Bin(_, a, b) => {
                walk_expr(a, out);
                walk_expr(b, out);
            }
            Expr::Not(a) => walk_expr(a, out),
        }
    }
    fn walk(instrs: &[Instruction], out: &mut BTreeSet<Value>) {
        for i in instrs {
            match i {
                Instruction::Assign { exp, .. } => walk_expr(exp, out),
                Instruction::Store { sxp, .. } => walk_expr(&sxp.to_expr(), out),
                Instruction::Load { .. } | Instruction::Fence { .. } | Instruction::Skip => {}
                Instruction::Cax { expected, desired, .. } => {
                    walk_expr(&expected.to_expr(), out);
                    walk_expr(&desired.to_expr(), out);
                }
                Instruction::IfThenElse { cond, then_branch, else_branch } => {
                    walk_expr(cond, out);
                    walk(then_branch, out);
                    walk(else_branch, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for v in test.init.values() {
        out.insert(*v);
    }
    for t in &test.threads {
        walk(t, &mut out);
    }
    walk_expr(&test.assertion.formula.to_expr(), &mut out);
    out
}

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use x3sat::formula::{evaluate, Instance, Lit};
use x3sat::fuzz::{run_campaign, run_exhaustive, FuzzConfig};
use x3sat::gen::{generate, GenSpec, Widths};
use x3sat::oracle::{inclusive_or_reading, Oracle, Semantics, DEFAULT_MAX_VARS, DEFAULT_MODEL_CAP};
use x3sat::scope::{scope, ConflictSite, Reason, ScopeResult};
use x3sat::solver::{decide_instance, SolveConfig, UnsatCause, Verdict, DEFAULT_BUDGET};
use x3sat::textio::{parse_document, parse_x3, serialize_x3};
use x3sat::trace::emit_trace;

#[derive(Parser)]
#[command(name = "x3sat", version, about = "Exactly-one-in-three SAT solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide an instance. Exit 10 SAT, 20 UNSAT, 30 budget, 40 discrepancy.
    Solve(SolveArgs),
    /// Assert one literal and print what it forces.
    Scope(ScopeArgs),
    /// Count models by enumeration.
    Count(CountArgs),
    /// Compare the decision loop, DPLL and the oracle on many instances.
    Fuzz(FuzzArgs),
    /// Print a random instance.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// x3 file, or `-` for stdin
    #[arg(default_value = "-")]
    input: String,
    /// Never undo a construction commit; report failure instead
    #[arg(long)]
    paper_strict: bool,
    /// Propagation step limit
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Print the trace records before the result
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ScopeArgs {
    input: String,
    /// Signed literal, e.g. 4 or -1
    #[arg(allow_negative_numbers = true)]
    literal: i64,
}

#[derive(Args)]
struct CountArgs {
    #[arg(default_value = "-")]
    input: String,
    #[arg(long, default_value = "exactly-one")]
    semantics: Semantics,
    /// Enumeration guard on the variable count
    #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
    max_vars: usize,
    /// Also print the models, if there are at most --cap of them
    #[arg(long)]
    models: bool,
    #[arg(long, default_value_t = DEFAULT_MODEL_CAP)]
    cap: usize,
}

#[derive(Args)]
struct FuzzArgs {
    /// Number of random instances
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Variables per instance (exhaustive mode: universe size)
    #[arg(long, default_value_t = 8)]
    vars: usize,
    /// Clauses per instance (exhaustive mode: maximum)
    #[arg(long, default_value_t = 6)]
    clauses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fixed3 or mixed:W1,W2,W3
    #[arg(long, default_value = "fixed3")]
    widths: Widths,
    /// Enumerate every formula instead of sampling
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    paper_strict: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
    max_vars: usize,
    /// Directory for summary.txt and counterexample files
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    vars: usize,
    #[arg(long)]
    clauses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "fixed3")]
    widths: Widths,
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn load(path: &str) -> Result<Instance> {
    let text = read_input(path)?;
    parse_x3(&text).with_context(|| format!("parsing {path}"))
}

fn lit_line(lits: impl IntoIterator<Item = Lit>) -> String {
    lits.into_iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_solve(args: &SolveArgs, out: &mut impl Write) -> Result<u8> {
    let inst = load(&args.input)?;
    let config = SolveConfig {
        paper_strict: args.paper_strict,
        budget: args.budget,
    };
    let outcome = decide_instance(&inst, &config);
    if args.trace {
        out.write_all(emit_trace(&outcome.trace).as_bytes())?;
    }
    let mut verdict = outcome.verdict;
    if let Verdict::Sat { model, .. } = &verdict {
        if !evaluate(&inst.formula, model) {
            verdict = Verdict::VerificationFailed {
                model: model.clone(),
            };
        }
    }
    match &verdict {
        Verdict::Sat { model, fixed } => {
            writeln!(out, "c fixed {}", lit_line(fixed.lits()))?;
            writeln!(out, "s SATISFIABLE")?;
            writeln!(out, "v {} 0", lit_line(model.lits()))?;
        }
        Verdict::Unsat(cause) => {
            writeln!(out, "s UNSATISFIABLE")?;
            match cause {
                UnsatCause::Normalization { clause } => {
                    writeln!(out, "c cause {} clause {}", cause.tag(), clause + 1)?
                }
                UnsatCause::EmptiedClause { lit, conflict }
                | UnsatCause::DoubleIncompatible { lit, conflict } => writeln!(
                    out,
                    "c cause {} lit {lit} {}",
                    cause.tag(),
                    site(&conflict.site)
                )?,
                _ => writeln!(out, "c cause {}", cause.tag())?,
            }
        }
        Verdict::BudgetExceeded { limit } => {
            writeln!(out, "s UNKNOWN")?;
            writeln!(out, "c budget of {limit} steps exceeded")?;
        }
        Verdict::ConstructionFailed => {
            writeln!(out, "s UNKNOWN")?;
            writeln!(out, "c construction failed without backtracking")?;
        }
        Verdict::VerificationFailed { model } => {
            writeln!(out, "s UNKNOWN")?;
            writeln!(out, "c discrepancy: model fails verification")?;
            writeln!(out, "v {} 0", lit_line(model.lits()))?;
        }
    }
    Ok(verdict.exit_code() as u8)
}

fn site(s: &ConflictSite) -> String {
    match s {
        ConflictSite::Var(v) => format!("conflict var {v}"),
        ConflictSite::EmptyClause(ci) => format!("conflict clause {}", ci + 1),
    }
}

fn cmd_scope(args: &ScopeArgs, out: &mut impl Write) -> Result<u8> {
    let inst = load(&args.input)?;
    let Some(lit) = Lit::from_dimacs(args.literal) else {
        bail!("literal must be nonzero");
    };
    if lit.var().index() >= inst.formula.nvars() {
        bail!("variable {} is not declared", lit.var());
    }
    match scope(lit, &inst.formula)? {
        ScopeResult::Compatible { psi, residual } => {
            writeln!(out, "s COMPATIBLE")?;
            writeln!(out, "psi {}", lit_line(psi.lits()))?;
            let clauses: Vec<String> = residual.clauses().iter().map(|c| c.to_string()).collect();
            writeln!(out, "residual {}", clauses.join(" "))?;
        }
        ScopeResult::Incompatible(c) => {
            writeln!(out, "s INCOMPATIBLE")?;
            writeln!(out, "{}", site(&c.site))?;
            let steps: Vec<String> = c
                .derivation
                .iter()
                .map(|s| match s.reason {
                    Reason::Asserted => format!("{}@a", s.lit),
                    Reason::Clause(ci) => format!("{}@{ci}", s.lit),
                })
                .collect();
            writeln!(out, "derivation {}", steps.join(" "))?;
        }
    }
    Ok(0)
}

fn cmd_count(args: &CountArgs, out: &mut impl Write) -> Result<u8> {
    let text = read_input(&args.input)?;
    let oracle = Oracle {
        max_vars: args.max_vars,
        model_cap: args.cap,
    };
    let formula = match args.semantics {
        Semantics::ExactlyOne => {
            let inst = parse_x3(&text).with_context(|| format!("parsing {}", args.input))?;
            if inst.contradiction.is_some() {
                writeln!(out, "0")?;
                return Ok(0);
            }
            inst.formula
        }
        Semantics::InclusiveOr => {
            let doc = parse_document(&text).with_context(|| format!("parsing {}", args.input))?;
            let raw: Vec<Vec<Lit>> = doc.clauses.into_iter().map(|(_, c)| c).collect();
            inclusive_or_reading(doc.nvars, &raw)
        }
    };
    let report = oracle.enumerate_models(&formula, args.semantics)?;
    writeln!(out, "{}", report.count)?;
    if args.models {
        match &report.models {
            Some(models) => {
                for m in models {
                    writeln!(out, "v {} 0", lit_line(m.lits()))?;
                }
            }
            None => writeln!(out, "c more than {} models; list suppressed", args.cap)?,
        }
    }
    Ok(0)
}

fn cmd_fuzz(args: &FuzzArgs, out: &mut impl Write) -> Result<u8> {
    let solve = SolveConfig {
        paper_strict: args.paper_strict,
        budget: args.budget,
    };
    let oracle = Oracle {
        max_vars: args.max_vars,
        model_cap: 0,
    };
    let report = if args.exhaustive {
        run_exhaustive(args.vars, args.clauses, &solve, &oracle)
    } else {
        run_campaign(&FuzzConfig {
            n: args.n,
            nvars: args.vars,
            nclauses: args.clauses,
            widths: args.widths,
            seed: args.seed,
            solve,
            oracle,
        })?
    };
    if let Some(dir) = &args.out_dir {
        report
            .write_artifacts(dir)
            .with_context(|| format!("writing {}", dir.display()))?;
    }
    out.write_all(report.render().as_bytes())?;
    Ok(0)
}

fn cmd_gen(args: &GenArgs, out: &mut impl Write) -> Result<u8> {
    let f = generate(&GenSpec {
        nvars: args.vars,
        nclauses: args.clauses,
        widths: args.widths,
        seed: args.seed,
    })?;
    writeln!(out, "c seed {} widths {}", args.seed, args.widths)?;
    out.write_all(serialize_x3(&f).as_bytes())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, &mut out),
        Command::Scope(a) => cmd_scope(a, &mut out),
        Command::Count(a) => cmd_count(a, &mut out),
        Command::Fuzz(a) => cmd_fuzz(a, &mut out),
        Command::Gen(a) => cmd_gen(a, &mut out),
    };
    match result.and_then(|code| out.flush().map(|_| code).map_err(Into::into)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

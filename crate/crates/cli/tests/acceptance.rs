//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use x3sat::formula::{evaluate, Formula, Lit, Minterm, XClause};
use x3sat::fuzz::{all_formulas, instance_seeds};
use x3sat::gen::{generate, GenSpec, Widths};
use x3sat::oracle::{inclusive_or_reading, Oracle, Semantics};
use x3sat::scope::{scope, ConflictSite, ScopeResult};
use x3sat::solver::{decide, decide_instance, SolveConfig, Verdict};
use x3sat::textio::{parse_x3, serialize_x3};
use x3sat::trace::{emit_trace, ScopeSummary, TraceEvent};

const GOLDEN_LIMIT: Duration = Duration::from_secs(1);
const COUNTS_LIMIT: Duration = Duration::from_secs(1);
const SOUNDNESS_LIMIT: Duration = Duration::from_secs(300);
const CAMPAIGN_LIMIT: Duration = Duration::from_secs(600);
const FORMAT_LIMIT: Duration = Duration::from_secs(60);

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Check + 'a>);

fn lits(ds: &[i64]) -> BTreeSet<Lit> {
    ds.iter().map(|&d| Lit::from_dimacs(d).unwrap()).collect()
}

fn clause_set(cs: &[XClause]) -> BTreeSet<BTreeSet<Lit>> {
    cs.iter()
        .map(|c| c.lits().iter().copied().collect())
        .collect()
}

fn clauses(ds: &[&[i64]]) -> BTreeSet<BTreeSet<Lit>> {
    ds.iter().map(|c| lits(c)).collect()
}

fn minterm_set(m: &Minterm) -> BTreeSet<Lit> {
    m.lits().collect()
}

fn example() -> Formula {
    Formula::from_dimacs(5, &[&[1, 2, 3], &[2, 4, 5], &[3, 4, -5]])
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let r = f();
    let took = start.elapsed();
    match r {
        Ok(detail) if took <= limit => Ok(format!("{detail} ({:.2}s)", took.as_secs_f64())),
        Ok(_) => Err(format!(
            "took {:.2}s, limit {}s",
            took.as_secs_f64(),
            limit.as_secs()
        )),
        Err(e) => Err(e),
    }
}

/// Walks the trace of the example with a cursor, matching each expected
/// record as a set.
fn golden_trace() -> Check {
    let out = decide(&example());
    let mut it = out.trace.iter();

    let mut next_scope = |lit: i64| -> Result<ScopeSummary, String> {
        let want = Lit::from_dimacs(lit).unwrap();
        it.by_ref()
            .find_map(|e| match e {
                TraceEvent::ScopeRun { lit, outcome } if *lit == want => Some(outcome.clone()),
                _ => None,
            })
            .ok_or_else(|| format!("no scope record for {lit}"))
    };
    let compatible =
        |s: ScopeSummary, psi: &[i64], residual: &[&[i64]], name: &str| -> Result<(), String> {
            match s {
                ScopeSummary::Compatible {
                    psi: p,
                    residual: r,
                } => {
                    ensure(minterm_set(&p) == lits(psi), || {
                        format!("psi({name}) = {p:?}")
                    })?;
                    ensure(clause_set(&r) == clauses(residual), || {
                        format!("residual({name}) = {r:?}")
                    })
                }
                ScopeSummary::Incompatible(_) => Err(format!("{name} reported incompatible")),
            }
        };

    compatible(next_scope(1)?, &[1, -2, -3], &[&[4, 5], &[4, -5]], "a")?;
    compatible(
        next_scope(-1)?,
        &[-1],
        &[&[2, 3], &[2, 4, 5], &[3, 4, -5]],
        "not a",
    )?;
    match next_scope(4)? {
        ScopeSummary::Incompatible(c) => {
            ensure(
                c.site == ConflictSite::Var(x3sat::formula::Var::new(5)),
                || format!("x conflict at {:?}", c.site),
            )?;
            ensure(c.replays(&example()), || {
                "x derivation does not replay".into()
            })?;
        }
        _ => return Err("x reported compatible".into()),
    }

    let fixes: Vec<(Lit, BTreeSet<BTreeSet<Lit>>)> = out
        .trace
        .windows(2)
        .filter_map(|w| match (&w[0], &w[1]) {
            (TraceEvent::NecessaryFixed { lit, .. }, TraceEvent::FormulaReduced { clauses }) => {
                Some((*lit, clause_set(clauses)))
            }
            _ => None,
        })
        .collect();
    let want_fixes = vec![
        (Lit::neg(4), clauses(&[&[1, 2, 3], &[2, 5], &[3, -5]])),
        (Lit::neg(1), clauses(&[&[2, 3], &[2, 5], &[3, -5]])),
    ];
    ensure(fixes == want_fixes, || format!("fixes {fixes:?}"))?;

    let after_second_fix: Vec<&TraceEvent> = out
        .trace
        .iter()
        .skip_while(|e| !matches!(e, TraceEvent::NecessaryFixed { lit, .. } if *lit == Lit::neg(1)))
        .collect();
    let scoped = |lit: i64| {
        after_second_fix.iter().find_map(|e| match e {
            TraceEvent::ScopeRun { lit: l, outcome } if *l == Lit::from_dimacs(lit).unwrap() => {
                Some(outcome.clone())
            }
            _ => None,
        })
    };
    let b = scoped(2).ok_or("no scope record for b after fixing not a")?;
    compatible(b, &[2, -3, -5], &[], "b")?;
    let nb = scoped(-2).ok_or("no scope record for not b after fixing not a")?;
    compatible(nb, &[-2, 3, 5], &[], "not b")?;

    match &out.verdict {
        Verdict::Sat { model, fixed } => {
            ensure(minterm_set(fixed) == lits(&[-4, -1]), || {
                format!("fixed {fixed:?}")
            })?;
            ensure(evaluate(&example(), model), || "model fails".into())?;
        }
        v => return Err(format!("verdict {v:?}")),
    }
    Ok("every record matches".into())
}

fn model_counts() -> Check {
    let f = example();
    let oracle = Oracle::default();
    let exact = oracle
        .enumerate_models(&f, Semantics::ExactlyOne)
        .map_err(|e| e.to_string())?;
    ensure(exact.count == 2, || {
        format!("exactly-one count {}", exact.count)
    })?;
    let raw: Vec<Vec<Lit>> = f.clauses().iter().map(|c| c.lits().to_vec()).collect();
    let inclusive = oracle
        .enumerate_models(&inclusive_or_reading(5, &raw), Semantics::InclusiveOr)
        .map_err(|e| e.to_string())?;
    ensure(inclusive.count == 22, || {
        format!("inclusive-or count {}", inclusive.count)
    })?;

    let models: BTreeSet<BTreeSet<Lit>> = exact
        .models
        .unwrap()
        .iter()
        .map(|m| m.lits().into_iter().collect())
        .collect();
    let want: BTreeSet<BTreeSet<Lit>> =
        [lits(&[-1, 2, -3, -4, -5]), lits(&[-1, -2, 3, -4, 5])].into();
    ensure(models == want, || format!("models {models:?}"))?;
    ensure(
        models
            .iter()
            .all(|m| m.contains(&Lit::neg(4)) && m.contains(&Lit::neg(1))),
        || "a model lacks not x and not a".into(),
    )?;
    Ok("exactly-one 2, inclusive-or 22, both models contain -4 -1".into())
}

#[derive(Default)]
struct Violations {
    checked_scopes: u64,
    checked_fixes: u64,
    checked_models: u64,
    failures: Vec<String>,
}

impl Violations {
    fn fail(&mut self, what: String) {
        if self.failures.len() < 10 {
            self.failures.push(what);
        }
    }
}

fn audit(f: &Formula, oracle: &Oracle, v: &mut Violations) {
    let total = oracle.count_under(f, &[]).unwrap();
    for var in f.occurring_vars() {
        for pos in [true, false] {
            let l = var.lit(pos);
            v.checked_scopes += 1;
            match scope(l, f).unwrap() {
                ScopeResult::Compatible { psi, .. } => {
                    for m in psi.lits() {
                        if !oracle.entails(f, l, m).unwrap() {
                            v.fail(format!("(a) {m} not entailed by {l} in {f}"));
                        }
                    }
                }
                ScopeResult::Incompatible(_) => {
                    if oracle.count_under(f, &[l]).unwrap() != 0 {
                        v.fail(format!("(b) {l} incompatible but has models in {f}"));
                    }
                }
            }
        }
    }

    let out = decide(f);
    let mut before = f.clone();
    let mut pending: Option<Minterm> = None;
    let mut commits: Vec<Formula> = Vec::new();
    for e in &out.trace {
        match e {
            TraceEvent::NecessaryFixed { psi, .. } => pending = Some(psi.clone()),
            TraceEvent::Constructed { .. } => {
                pending = None;
                commits.push(before.clone());
            }
            TraceEvent::Backtracked { .. } => before = commits.pop().unwrap(),
            TraceEvent::FormulaReduced { clauses } => {
                let after = Formula::new(f.nvars(), clauses.clone()).unwrap();
                if let Some(psi) = pending.take() {
                    v.checked_fixes += 1;
                    let under: Vec<Lit> = psi.lits().collect();
                    let was = oracle.count_under(&before, &[]).unwrap();
                    let now = oracle.count_under(&after, &under).unwrap();
                    if was != now {
                        v.fail(format!(
                            "(c) fix {under:?} changed count {was} -> {now} in {f}"
                        ));
                    }
                }
                before = after;
            }
            _ => {}
        }
    }
    match &out.verdict {
        Verdict::Sat { model, .. } => {
            v.checked_models += 1;
            if !evaluate(f, model) {
                v.fail(format!("(d) model fails in {f}"));
            }
        }
        Verdict::Unsat(cause) if total != 0 => {
            v.fail(format!("UNSAT ({}) but {total} models in {f}", cause.tag()));
        }
        _ => {}
    }
}

fn soundness() -> Check {
    let oracle = Oracle::default();
    let mut v = Violations::default();
    let family = all_formulas(4, 2);
    for f in &family {
        audit(f, &oracle, &mut v);
    }
    let seeds = instance_seeds(7, 10_000);
    for (i, &seed) in seeds.iter().enumerate() {
        let nvars = 3 + i % 8;
        let f = generate(&GenSpec {
            nvars,
            nclauses: 1 + (seed % (2 * nvars as u64)) as usize,
            widths: Widths::Mixed([1, 2, 4]),
            seed,
        })
        .map_err(|e| e.to_string())?;
        audit(&f, &oracle, &mut v);
    }
    if v.failures.is_empty() {
        Ok(format!(
            "{} formulas, {} scopes, {} fixes, {} models, 0 violations",
            family.len() + seeds.len(),
            v.checked_scopes,
            v.checked_fixes,
            v.checked_models
        ))
    } else {
        Err(v.failures.join("; "))
    }
}

fn x3sat(args: &[&str]) -> Result<(i32, String), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_x3sat"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let code = o.status.code().ok_or("killed by signal")?;
    Ok((code, String::from_utf8_lossy(&o.stdout).into_owned()))
}

fn summary_value(summary: &str, key: &str) -> Result<String, String> {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .map(str::to_string)
        .ok_or_else(|| format!("summary has no {key}"))
}

fn campaign(dir: &Path) -> Check {
    let d = dir.to_str().unwrap();
    let (code, summary) = x3sat(&[
        "fuzz",
        "--seed",
        "42",
        "--n",
        "10000",
        "--vars",
        "12",
        "--clauses",
        "8",
        "--out-dir",
        d,
    ])?;
    ensure(code == 0, || format!("fuzz exited {code}"))?;
    let n = |k: &str| -> Result<u64, String> {
        summary_value(&summary, k)?
            .parse()
            .map_err(|e| format!("{k}: {e}"))
    };
    ensure(n("instances")? == 10_000, || "instance count".into())?;
    ensure(n("verification-failed")? == 0, || {
        "a SAT model failed verification".into()
    })?;
    for line in summary
        .lines()
        .filter_map(|l| l.strip_prefix("counterexample "))
    {
        let stem = line.split(' ').next().unwrap();
        for ext in ["x3", "trace"] {
            let p = dir.join(format!("{stem}.{ext}"));
            ensure(p.exists(), || format!("missing {}", p.display()))?;
        }
    }
    // A disagreement on a decided verdict means an UNSAT answer was wrong.
    ensure(n("disagreements")? == 0, || {
        format!("{} disagreements", n("disagreements").unwrap_or(0))
    })?;
    Ok(format!(
        "agreement-rate {}, decide-unknown {}, backtrack-needed {}",
        summary_value(&summary, "agreement-rate")?,
        n("decide-unknown")?,
        n("backtrack-needed")?
    ))
}

fn format_determinism(dir: &Path) -> Check {
    for seed in instance_seeds(99, 1000) {
        let f = generate(&GenSpec {
            nvars: 4 + (seed % 20) as usize,
            nclauses: (seed >> 8) as usize % 25,
            widths: Widths::Mixed([1, 1, 2]),
            seed,
        })
        .map_err(|e| e.to_string())?;
        let text = serialize_x3(&f);
        let back = parse_x3(&text).map_err(|e| e.to_string())?;
        ensure(
            back.formula == f && serialize_x3(&back.formula) == text,
            || format!("round trip failed for seed {seed}"),
        )?;
    }

    let config = SolveConfig::default();
    for seed in 0..50 {
        let text = serialize_x3(
            &generate(&GenSpec {
                nvars: 10,
                nclauses: 7,
                widths: Widths::Fixed3,
                seed,
            })
            .unwrap(),
        );
        let inst = parse_x3(&text).unwrap();
        let a = emit_trace(&decide_instance(&inst, &config).trace);
        let b = emit_trace(&decide_instance(&inst, &config).trace);
        ensure(a == b, || format!("library trace differs for seed {seed}"))?;
    }

    let input = dir.join("example.x3");
    fs::write(&input, serialize_x3(&example())).map_err(|e| e.to_string())?;
    let p = input.to_str().unwrap();
    let t1 = x3sat(&["solve", "--trace", p])?;
    let t2 = x3sat(&["solve", "--trace", p])?;
    ensure(t1 == t2, || "solve traces differ".into())?;

    let fuzz = [
        "fuzz",
        "--seed",
        "42",
        "--n",
        "1000",
        "--vars",
        "8",
        "--clauses",
        "6",
    ];
    let (a, b) = (dir.join("a"), dir.join("b"));
    let run = |out: &Path| -> Result<String, String> {
        let mut args = fuzz.to_vec();
        args.extend(["--out-dir", out.to_str().unwrap()]);
        x3sat(&args)?;
        fs::read_to_string(out.join("summary.txt")).map_err(|e| e.to_string())
    };
    let (sa, sb) = (run(&a)?, run(&b)?);
    ensure(sa == sb, || "fuzz summaries differ".into())?;
    Ok("1000 round trips, traces and summaries byte-identical".into())
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        (
            "1 golden trace",
            Box::new(|| timed(GOLDEN_LIMIT, golden_trace)),
        ),
        (
            "2 model counts",
            Box::new(|| timed(COUNTS_LIMIT, model_counts)),
        ),
        (
            "3 soundness",
            Box::new(|| timed(SOUNDNESS_LIMIT, soundness)),
        ),
        (
            "4 differential campaign",
            Box::new(|| timed(CAMPAIGN_LIMIT, || campaign(&dir.path().join("campaign")))),
        ),
        (
            "5 format and determinism",
            Box::new(|| timed(FORMAT_LIMIT, || format_determinism(dir.path()))),
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

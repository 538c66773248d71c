//! Differential campaigns: the scope-scanning loop against the reference
//! DPLL solver and, within the enumeration guard, the brute-force oracle.
//!
//! Instances are evaluated in parallel but results are aggregated in
//! instance order, so reports are identical to a sequential run.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use crate::formula::{Formula, Lit, Var, XClause};
use crate::gen::{generate, GenError, GenSpec, SplitMix64, Widths};
use crate::oracle::Oracle;
use crate::solver::{decide_with, dpll_solve_with, SolveConfig, Verdict};
use crate::textio::serialize_x3;
use crate::trace::emit_trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

impl From<&Verdict> for Status {
    fn from(v: &Verdict) -> Self {
        match v {
            Verdict::Sat { .. } => Status::Sat,
            Verdict::Unsat(_) => Status::Unsat,
            _ => Status::Unknown,
        }
    }
}

/// Something worth keeping about an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Finding {
    /// Solvers or oracle disagree on SAT/UNSAT.
    Disagreement,
    /// A produced model failed verification.
    VerificationFailed,
    /// Strict construction gave up on a formula with no incompatible literal.
    ConstructionFailed,
    /// The scan found no incompatible literal, yet construction needed to
    /// undo a commit.
    BacktrackNeeded,
    BudgetExceeded,
}

impl Finding {
    pub fn tag(self) -> &'static str {
        match self {
            Finding::Disagreement => "disagreement",
            Finding::VerificationFailed => "verification-failed",
            Finding::ConstructionFailed => "construction-failed",
            Finding::BacktrackNeeded => "backtrack-needed",
            Finding::BudgetExceeded => "budget-exceeded",
        }
    }
}

#[derive(Debug, Clone)]
pub struct InstanceReport {
    pub decide: Status,
    pub dpll: Status,
    pub oracle_count: Option<u64>,
    pub backtracks: usize,
    pub findings: Vec<Finding>,
}

/// Runs all three deciders on one formula.
pub fn check_instance(f: &Formula, solve: &SolveConfig, oracle: &Oracle) -> InstanceReport {
    let d = decide_with(f, solve);
    let r = dpll_solve_with(f, solve.budget);
    let oracle_count = oracle.count_under(f, &[]).ok();
    let decide = Status::from(&d.verdict);
    let dpll = Status::from(&r.verdict);

    let mut findings = Vec::new();
    let truth = oracle_count.map(|c| if c > 0 { Status::Sat } else { Status::Unsat });
    let disagree = |s: Status| {
        s != Status::Unknown
            && ((dpll != Status::Unknown && s != dpll) || truth.is_some_and(|t| t != s))
    };
    if disagree(decide) || disagree(dpll) {
        findings.push(Finding::Disagreement);
    }
    if matches!(d.verdict, Verdict::VerificationFailed { .. })
        || matches!(r.verdict, Verdict::VerificationFailed { .. })
    {
        findings.push(Finding::VerificationFailed);
    }
    if d.verdict == Verdict::ConstructionFailed {
        findings.push(Finding::ConstructionFailed);
    }
    if d.backtracks() > 0 {
        findings.push(Finding::BacktrackNeeded);
    }
    if matches!(d.verdict, Verdict::BudgetExceeded { .. })
        || matches!(r.verdict, Verdict::BudgetExceeded { .. })
    {
        findings.push(Finding::BudgetExceeded);
    }
    InstanceReport {
        decide,
        dpll,
        oracle_count,
        backtracks: d.backtracks(),
        findings,
    }
}

/// Greedy clause deletion keeping `finding` reproducible.
pub fn minimize(f: &Formula, finding: Finding, solve: &SolveConfig, oracle: &Oracle) -> Formula {
    let mut cur = f.clauses().to_vec();
    let mut i = 0;
    while i < cur.len() {
        let mut trial = cur.clone();
        trial.remove(i);
        let g = Formula::new(f.nvars(), trial.clone()).expect("subset of valid clauses");
        if check_instance(&g, solve, oracle)
            .findings
            .contains(&finding)
        {
            cur = trial;
        } else {
            i += 1;
        }
    }
    Formula::new(f.nvars(), cur).expect("subset of valid clauses")
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub index: usize,
    pub finding: Finding,
    pub original: Formula,
    pub minimized: Formula,
    /// Trace of the scope-scanning loop on `minimized`.
    pub trace: String,
}

impl Counterexample {
    pub fn stem(&self) -> String {
        format!("{}-{:06}", self.finding.tag(), self.index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub instances: usize,
    pub decide_sat: usize,
    pub decide_unsat: usize,
    pub decide_unknown: usize,
    pub dpll_sat: usize,
    pub dpll_unsat: usize,
    pub oracle_checked: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub verification_failed: usize,
    pub construction_failed: usize,
    pub backtrack_needed: usize,
    pub budget_exceeded: usize,
}

#[derive(Debug, Clone)]
pub struct FuzzReport {
    /// Leading `key value` lines describing the campaign.
    pub header: Vec<(String, String)>,
    pub tally: Tally,
    pub counterexamples: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn agreement_rate(&self) -> f64 {
        let compared = self.tally.agreements + self.tally.disagreements;
        if compared == 0 {
            1.0
        } else {
            self.tally.agreements as f64 / compared as f64
        }
    }

    pub fn render(&self) -> String {
        let t = &self.tally;
        let mut s = String::new();
        for (k, v) in &self.header {
            writeln!(s, "{k} {v}").unwrap();
        }
        let rows = [
            ("instances", t.instances),
            ("decide-sat", t.decide_sat),
            ("decide-unsat", t.decide_unsat),
            ("decide-unknown", t.decide_unknown),
            ("dpll-sat", t.dpll_sat),
            ("dpll-unsat", t.dpll_unsat),
            ("oracle-checked", t.oracle_checked),
            ("agreements", t.agreements),
            ("disagreements", t.disagreements),
            ("verification-failed", t.verification_failed),
            ("construction-failed", t.construction_failed),
            ("backtrack-needed", t.backtrack_needed),
            ("budget-exceeded", t.budget_exceeded),
        ];
        for (k, v) in rows {
            writeln!(s, "{k} {v}").unwrap();
        }
        writeln!(s, "agreement-rate {:.6}", self.agreement_rate()).unwrap();
        writeln!(s, "counterexamples {}", self.counterexamples.len()).unwrap();
        for c in &self.counterexamples {
            writeln!(
                s,
                "counterexample {} clauses={} minimized={}",
                c.stem(),
                c.original.clauses().len(),
                c.minimized.clauses().len()
            )
            .unwrap();
        }
        s
    }

    /// Writes `<stem>.x3` and `<stem>.trace` per counterexample and a
    /// `summary.txt`.
    pub fn write_artifacts(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for c in &self.counterexamples {
            let mut x3 = format!("c {} instance {}\n", c.finding.tag(), c.index);
            for line in serialize_x3(&c.original).lines().skip(1) {
                writeln!(x3, "c original {line}").unwrap();
            }
            x3.push_str(&serialize_x3(&c.minimized));
            fs::write(dir.join(format!("{}.x3", c.stem())), x3)?;
            fs::write(dir.join(format!("{}.trace", c.stem())), &c.trace)?;
        }
        fs::write(dir.join("summary.txt"), self.render())
    }
}

fn campaign(
    header: Vec<(String, String)>,
    formulas: &[Formula],
    solve: &SolveConfig,
    oracle: &Oracle,
) -> FuzzReport {
    let reports: Vec<InstanceReport> = formulas
        .par_iter()
        .map(|f| check_instance(f, solve, oracle))
        .collect();

    let mut t = Tally {
        instances: formulas.len(),
        ..Tally::default()
    };
    let mut pending = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        match r.decide {
            Status::Sat => t.decide_sat += 1,
            Status::Unsat => t.decide_unsat += 1,
            Status::Unknown => t.decide_unknown += 1,
        }
        match r.dpll {
            Status::Sat => t.dpll_sat += 1,
            Status::Unsat => t.dpll_unsat += 1,
            Status::Unknown => {}
        }
        t.oracle_checked += usize::from(r.oracle_count.is_some());
        if r.findings.contains(&Finding::Disagreement) {
            t.disagreements += 1;
        } else if r.decide != Status::Unknown {
            t.agreements += 1;
        }
        for &finding in &r.findings {
            match finding {
                Finding::Disagreement => {}
                Finding::VerificationFailed => t.verification_failed += 1,
                Finding::ConstructionFailed => t.construction_failed += 1,
                Finding::BacktrackNeeded => t.backtrack_needed += 1,
                Finding::BudgetExceeded => t.budget_exceeded += 1,
            }
            if finding != Finding::BudgetExceeded {
                pending.push((i, finding));
            }
        }
    }

    let counterexamples = pending
        .par_iter()
        .map(|&(index, finding)| {
            let original = formulas[index].clone();
            let minimized = minimize(&original, finding, solve, oracle);
            let trace = emit_trace(&decide_with(&minimized, solve).trace);
            Counterexample {
                index,
                finding,
                original,
                minimized,
                trace,
            }
        })
        .collect();

    FuzzReport {
        header,
        tally: t,
        counterexamples,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub n: usize,
    pub nvars: usize,
    pub nclauses: usize,
    pub widths: Widths,
    pub seed: u64,
    pub solve: SolveConfig,
    pub oracle: Oracle,
}

/// Per-instance generator seeds: successive outputs of SplitMix64(seed).
pub fn instance_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

pub fn run_campaign(cfg: &FuzzConfig) -> Result<FuzzReport, GenError> {
    let formulas = instance_seeds(cfg.seed, cfg.n)
        .into_iter()
        .map(|seed| {
            generate(&GenSpec {
                nvars: cfg.nvars,
                nclauses: cfg.nclauses,
                widths: cfg.widths,
                seed,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let header = vec![
        ("mode".into(), "random".into()),
        ("seed".into(), cfg.seed.to_string()),
        ("vars".into(), cfg.nvars.to_string()),
        ("clauses".into(), cfg.nclauses.to_string()),
        ("widths".into(), cfg.widths.to_string()),
        ("strict".into(), cfg.solve.paper_strict.to_string()),
    ];
    Ok(campaign(header, &formulas, &cfg.solve, &cfg.oracle))
}

/// Every clause over `1..=nvars` with ascending variables, widths 1 to 3.
pub fn all_clauses(nvars: usize) -> Vec<XClause> {
    let mut out = Vec::new();
    let vars: Vec<Var> = (1..=nvars as u32).map(Var::new).collect();
    let mut push = |vs: &[Var]| {
        for mask in 0..1u32 << vs.len() {
            let lits: Vec<Lit> = vs
                .iter()
                .enumerate()
                .map(|(i, v)| v.lit(mask >> i & 1 == 0))
                .collect();
            out.push(XClause::new(lits).expect("distinct variables"));
        }
    };
    for a in 0..vars.len() {
        push(&[vars[a]]);
        for b in a + 1..vars.len() {
            push(&[vars[a], vars[b]]);
            for c in b + 1..vars.len() {
                push(&[vars[a], vars[b], vars[c]]);
            }
        }
    }
    out
}

/// All multisets of at most `max_clauses` clauses from [`all_clauses`],
/// as formulas over `nvars` variables.
pub fn all_formulas(nvars: usize, max_clauses: usize) -> Vec<Formula> {
    let pool = all_clauses(nvars);
    let mut out = vec![Formula::empty(nvars)];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_clauses {
        let mut next = Vec::new();
        for pick in &frontier {
            let start = pick.last().copied().unwrap_or(0);
            for k in start..pool.len() {
                let mut p = pick.clone();
                p.push(k);
                out.push(
                    Formula::new(nvars, p.iter().map(|&i| pool[i].clone()).collect())
                        .expect("clauses in range"),
                );
                next.push(p);
            }
        }
        frontier = next;
    }
    out
}

pub fn run_exhaustive(
    nvars: usize,
    max_clauses: usize,
    solve: &SolveConfig,
    oracle: &Oracle,
) -> FuzzReport {
    let formulas = all_formulas(nvars, max_clauses);
    let header = vec![
        ("mode".into(), "exhaustive".into()),
        ("vars".into(), nvars.to_string()),
        ("max-clauses".into(), max_clauses.to_string()),
        ("strict".into(), solve.paper_strict.to_string()),
    ];
    campaign(header, &formulas, solve, oracle)
}

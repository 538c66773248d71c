//! The scope-scanning decision loop and its model construction.
//!
//! The loop probes every literal of every free variable with [`scope`]. A
//! literal whose propagation conflicts cannot appear in any model, so its
//! complement is necessary: it is fixed, the formula is reduced, and the
//! scan restarts from the first variable. When a full scan finds nothing,
//! a model is built by committing literals one at a time.
//!
//! [`scope`]: crate::scope::scope

use crate::formula::{evaluate, Assignment, Formula, Instance, Lit, Minterm};
use crate::scope::{
    propagate_metered, Budget, BudgetExceeded, ConflictInfo, ConflictSite, ScopeResult,
};
use crate::trace::{ScopeSummary, TraceEvent};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveConfig {
    /// Commit the first literal during construction and never flip it.
    pub paper_strict: bool,
    /// Propagation steps (clause visits) allowed for one solve.
    pub budget: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            paper_strict: false,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UnsatCause {
    /// A raw input clause could not hold by itself.
    Normalization { clause: usize },
    /// A necessary literal emptied a clause.
    EmptiedClause { lit: Lit, conflict: ConflictInfo },
    /// A necessary literal is itself incompatible, so both polarities of
    /// its variable are ruled out.
    DoubleIncompatible { lit: Lit, conflict: ConflictInfo },
    /// Every branch of model construction failed.
    ConstructionExhausted,
    /// The reference search exhausted every branch.
    Refuted,
}

impl UnsatCause {
    pub fn tag(&self) -> &'static str {
        match self {
            UnsatCause::Normalization { .. } => "normalization",
            UnsatCause::EmptiedClause { .. } => "emptied-clause",
            UnsatCause::DoubleIncompatible { .. } => "double-incompatible",
            UnsatCause::ConstructionExhausted => "construction-exhausted",
            UnsatCause::Refuted => "refuted",
        }
    }

    fn from_conflict(lit: Lit, conflict: ConflictInfo) -> Self {
        match conflict.site {
            ConflictSite::EmptyClause(_) => UnsatCause::EmptiedClause { lit, conflict },
            ConflictSite::Var(_) => UnsatCause::DoubleIncompatible { lit, conflict },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `model` satisfies the input; `fixed` holds in every model.
    Sat {
        model: Assignment,
        fixed: Minterm,
    },
    Unsat(UnsatCause),
    BudgetExceeded {
        limit: u64,
    },
    /// Strict construction hit a dead end on a formula with no
    /// incompatible literal.
    ConstructionFailed,
    /// A produced model did not satisfy the input.
    VerificationFailed {
        model: Assignment,
    },
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat(_))
    }

    /// Process exit status: 10 SAT, 20 UNSAT, 30 budget, 40 failed
    /// verification, 0 when strict construction gives up.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Sat { .. } => 10,
            Verdict::Unsat(_) => 20,
            Verdict::BudgetExceeded { .. } => 30,
            Verdict::VerificationFailed { .. } => 40,
            Verdict::ConstructionFailed => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub verdict: Verdict,
    pub trace: Vec<TraceEvent>,
    /// Propagation steps spent.
    pub steps: u64,
}

impl SolveOutcome {
    pub fn backtracks(&self) -> usize {
        self.trace
            .iter()
            .filter(|e| matches!(e, TraceEvent::Backtracked { .. }))
            .count()
    }
}

/// First incompatible literal, scanning variables ascending and the
/// positive literal before the negative one. Only variables occurring in
/// `f` are probed.
pub fn find_incompatible(f: &Formula) -> Option<(Lit, ConflictInfo)> {
    let mut s = Session::new(SolveConfig {
        budget: u64::MAX,
        ..SolveConfig::default()
    });
    s.scan(f).expect("unlimited budget")
}

/// Fixes `lit` (whose complement is incompatible) on top of `psi`.
///
/// Returns the residual formula and the enlarged minterm, or the conflict
/// if `lit` is incompatible as well.
pub fn fix_necessary(
    f: &Formula,
    psi: &Minterm,
    lit: Lit,
) -> Result<(Formula, Minterm), ConflictInfo> {
    let seed = Minterm::from_lits([lit]).expect("single literal");
    match propagate_metered(f, &seed, &mut Budget::unlimited()).expect("unlimited budget") {
        ScopeResult::Incompatible(c) => Err(c),
        ScopeResult::Compatible {
            psi: forced,
            residual,
        } => {
            let mut m = psi.clone();
            m.extend_from(&forced)
                .expect("residual shares no variable with the fixed minterm");
            Ok((residual, m))
        }
    }
}

/// Greedy construction with chronological backtracking from a formula on
/// which no literal is incompatible. `None` means every branch failed.
pub fn construct_assignment(f: &Formula, psi: &Minterm) -> Option<Assignment> {
    let mut s = Session::new(SolveConfig {
        budget: u64::MAX,
        ..SolveConfig::default()
    });
    s.construct(f, psi.clone())
        .expect("unlimited budget")
        .map(|m| Assignment::from_minterm(&m, f.nvars()))
}

/// Runs the decision loop with default settings.
pub fn decide(f: &Formula) -> SolveOutcome {
    decide_with(f, &SolveConfig::default())
}

pub fn decide_with(f: &Formula, config: &SolveConfig) -> SolveOutcome {
    let mut s = Session::new(*config);
    let verdict = match s.run(f) {
        Ok(v) => v,
        Err(e) => Verdict::BudgetExceeded { limit: e.limit },
    };
    s.finish(verdict)
}

/// Decides a parsed instance, reporting normalization first.
pub fn decide_instance(inst: &Instance, config: &SolveConfig) -> SolveOutcome {
    let prologue: Vec<TraceEvent> = inst
        .events
        .iter()
        .map(|e| TraceEvent::Normalized {
            clause: e.clause,
            outcome: e.outcome.clone(),
        })
        .collect();
    let mut out = match inst.contradiction {
        Some(clause) => {
            let verdict = Verdict::Unsat(UnsatCause::Normalization { clause });
            SolveOutcome {
                trace: vec![TraceEvent::Decided(verdict.clone())],
                verdict,
                steps: 0,
            }
        }
        None => decide_with(&inst.formula, config),
    };
    out.trace.splice(0..0, prologue);
    out
}

enum Reduction {
    Stable(Formula, Minterm),
    Unsat(UnsatCause),
}

struct Session {
    config: SolveConfig,
    budget: Budget,
    trace: Vec<TraceEvent>,
}

impl Session {
    fn new(config: SolveConfig) -> Self {
        Session {
            config,
            budget: Budget::new(config.budget),
            trace: Vec::new(),
        }
    }

    fn finish(mut self, verdict: Verdict) -> SolveOutcome {
        self.trace.push(TraceEvent::Decided(verdict.clone()));
        SolveOutcome {
            verdict,
            trace: self.trace,
            steps: self.budget.used(),
        }
    }

    fn probe(&mut self, f: &Formula, lit: Lit) -> Result<ScopeResult, BudgetExceeded> {
        let seed = Minterm::from_lits([lit]).expect("single literal");
        propagate_metered(f, &seed, &mut self.budget)
    }

    fn scan(&mut self, f: &Formula) -> Result<Option<(Lit, ConflictInfo)>, BudgetExceeded> {
        for var in f.occurring_vars() {
            for lit in [var.lit(true), var.lit(false)] {
                let r = self.probe(f, lit)?;
                self.trace.push(TraceEvent::ScopeRun {
                    lit,
                    outcome: ScopeSummary::from(&r),
                });
                if let ScopeResult::Incompatible(c) = r {
                    return Ok(Some((lit, c)));
                }
            }
        }
        Ok(None)
    }

    /// Fix necessary literals until a full scan finds no incompatible one.
    fn reduce(&mut self, mut f: Formula, mut fixed: Minterm) -> Result<Reduction, BudgetExceeded> {
        while let Some((bad, conflict)) = self.scan(&f)? {
            let lit = bad.negate();
            match self.probe(&f, lit)? {
                ScopeResult::Incompatible(c) => {
                    return Ok(Reduction::Unsat(UnsatCause::from_conflict(lit, c)))
                }
                ScopeResult::Compatible { psi, residual } => {
                    self.trace.push(TraceEvent::NecessaryFixed {
                        lit,
                        conflict: conflict.site,
                        psi: psi.clone(),
                    });
                    self.trace.push(TraceEvent::FormulaReduced {
                        clauses: residual.clauses().to_vec(),
                    });
                    self.trace.push(TraceEvent::Restarted);
                    fixed
                        .extend_from(&psi)
                        .expect("residual shares no variable with the fixed minterm");
                    f = residual;
                }
            }
        }
        Ok(Reduction::Stable(f, fixed))
    }

    fn construct(&mut self, f: &Formula, psi: Minterm) -> Result<Option<Minterm>, BudgetExceeded> {
        let Some(&var) = f.occurring_vars().first() else {
            return Ok(Some(psi));
        };
        let choices: &[bool] = if self.config.paper_strict {
            &[true]
        } else {
            &[true, false]
        };
        for &polarity in choices {
            let lit = var.lit(polarity);
            let (forced, residual) = match self.probe(f, lit)? {
                ScopeResult::Compatible { psi, residual } => (psi, residual),
                r @ ScopeResult::Incompatible(_) => {
                    self.trace.push(TraceEvent::ScopeRun {
                        lit,
                        outcome: ScopeSummary::from(&r),
                    });
                    continue;
                }
            };
            self.trace.push(TraceEvent::Constructed {
                lit,
                psi: forced.clone(),
            });
            self.trace.push(TraceEvent::FormulaReduced {
                clauses: residual.clauses().to_vec(),
            });
            let mut m = psi.clone();
            m.extend_from(&forced)
                .expect("residual shares no variable with the fixed minterm");
            if let Reduction::Stable(r, m) = self.reduce(residual, m)? {
                if let Some(model) = self.construct(&r, m)? {
                    return Ok(Some(model));
                }
            }
            if !self.config.paper_strict {
                self.trace.push(TraceEvent::Backtracked { lit });
            }
        }
        Ok(None)
    }

    fn run(&mut self, f: &Formula) -> Result<Verdict, BudgetExceeded> {
        let (residual, fixed) = match self.reduce(f.clone(), Minterm::new())? {
            Reduction::Unsat(cause) => return Ok(Verdict::Unsat(cause)),
            Reduction::Stable(r, m) => (r, m),
        };
        let full = match self.construct(&residual, fixed.clone())? {
            Some(m) => m,
            None if self.config.paper_strict => return Ok(Verdict::ConstructionFailed),
            None => return Ok(Verdict::Unsat(UnsatCause::ConstructionExhausted)),
        };
        let model = Assignment::from_minterm(&full, f.nvars());
        if !evaluate(f, &model) {
            return Ok(Verdict::VerificationFailed { model });
        }
        Ok(Verdict::Sat { model, fixed })
    }
}

/// Complete reference solver: exactly-one unit propagation plus
/// branching on the lowest unassigned variable, false-first after true.
///
/// Shares no propagation code with the scope engine.
pub fn dpll_solve(f: &Formula) -> SolveOutcome {
    dpll_solve_with(f, DEFAULT_BUDGET)
}

pub fn dpll_solve_with(f: &Formula, budget: u64) -> SolveOutcome {
    let mut values: Vec<Option<bool>> = vec![None; f.nvars()];
    let mut budget = Budget::new(budget);
    let verdict = match dpll(f, &mut values, &mut budget) {
        Err(e) => Verdict::BudgetExceeded { limit: e.limit },
        Ok(false) => Verdict::Unsat(UnsatCause::Refuted),
        Ok(true) => {
            let model = Assignment::new(values.iter().map(|v| v.unwrap_or(false)).collect());
            if evaluate(f, &model) {
                Verdict::Sat {
                    model,
                    fixed: Minterm::new(),
                }
            } else {
                Verdict::VerificationFailed { model }
            }
        }
    };
    SolveOutcome {
        trace: vec![TraceEvent::Decided(verdict.clone())],
        verdict,
        steps: budget.used(),
    }
}

fn dpll(
    f: &Formula,
    values: &mut Vec<Option<bool>>,
    budget: &mut Budget,
) -> Result<bool, BudgetExceeded> {
    let lit_value = |values: &[Option<bool>], l: Lit| values[l.var().index()].map(|v| l.eval(v));
    loop {
        let mut changed = false;
        for clause in f.clauses() {
            budget.tick()?;
            let lits = clause.lits();
            let trues = lits
                .iter()
                .filter(|&&l| lit_value(values, l) == Some(true))
                .count();
            let free: Vec<Lit> = lits
                .iter()
                .copied()
                .filter(|&l| lit_value(values, l).is_none())
                .collect();
            match (trues, free.len()) {
                (t, _) if t > 1 => return Ok(false),
                (1, 0) => {}
                (1, _) => {
                    for l in free {
                        values[l.var().index()] = Some(!l.is_positive());
                    }
                    changed = true;
                }
                (_, 0) => return Ok(false),
                (_, 1) => {
                    values[free[0].var().index()] = Some(free[0].is_positive());
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    let branch = f
        .clauses()
        .iter()
        .flat_map(|c| c.lits())
        .map(|l| l.var())
        .filter(|v| values[v.index()].is_none())
        .min();
    let Some(var) = branch else {
        return Ok(true);
    };
    for value in [true, false] {
        let mut trial = values.clone();
        trial[var.index()] = Some(value);
        if dpll(f, &mut trial, budget)? {
            *values = trial;
            return Ok(true);
        }
    }
    Ok(false)
}

//! Solver trace events and their line-oriented text form.
//!
//! One record per line: a tag followed by `key=value` fields. Values that
//! contain spaces are double quoted. Literals are signed DIMACS integers;
//! clause lists use x3 clause syntax (each clause terminated by `0`);
//! clause indices are zero-based positions in the formula being probed.
//!
//! ```text
//! scope lit=1 result=compatible psi="1 -2 -3" residual="4 5 0 4 -5 0"
//! scope lit=4 result=incompatible conflict=var:5 derivation="4@a -2@1 -5@1 -3@2 5@2"
//! fixed lit=-4 cause=complement-incompatible conflict=var:5 psi="-4"
//! reduced clauses="1 2 3 0 2 5 0 3 -5 0"
//! restart
//! commit lit=2 psi="2 -3 -5"
//! backtrack lit=2
//! decided result=SAT fixed="-4 -1" model="-1 2 -3 -4 -5"
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{Assignment, Formula, Lit, Minterm, NormalizeOutcome, XClause};
use crate::scope::{ConflictInfo, ConflictSite, Reason, ScopeResult, Step};
use crate::solver::{UnsatCause, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeSummary {
    Compatible {
        psi: Minterm,
        residual: Vec<XClause>,
    },
    Incompatible(ConflictInfo),
}

impl From<&ScopeResult> for ScopeSummary {
    fn from(r: &ScopeResult) -> Self {
        match r {
            ScopeResult::Compatible { psi, residual } => ScopeSummary::Compatible {
                psi: psi.clone(),
                residual: residual.clauses().to_vec(),
            },
            ScopeResult::Incompatible(c) => ScopeSummary::Incompatible(c.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// A raw input clause was degenerate.
    Normalized {
        clause: usize,
        outcome: NormalizeOutcome,
    },
    ScopeRun {
        lit: Lit,
        outcome: ScopeSummary,
    },
    /// `lit` holds in every model because its complement is incompatible.
    /// `psi` is everything its propagation fixed.
    NecessaryFixed {
        lit: Lit,
        conflict: ConflictSite,
        psi: Minterm,
    },
    /// The current formula after the preceding fix or commit.
    FormulaReduced {
        clauses: Vec<XClause>,
    },
    Restarted,
    /// Construction committed `lit` and its propagation `psi`.
    Constructed {
        lit: Lit,
        psi: Minterm,
    },
    /// The commit of `lit` led nowhere and was undone.
    Backtracked {
        lit: Lit,
    },
    Decided(Verdict),
}

fn join_lits(lits: impl IntoIterator<Item = Lit>) -> String {
    let mut s = String::new();
    for (i, l) in lits.into_iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{l}").unwrap();
    }
    s
}

/// Clauses in x3 body syntax: `4 5 0 4 -5 0`.
pub fn clause_list(clauses: &[XClause]) -> String {
    let mut s = String::new();
    for (i, c) in clauses.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        for l in c.lits() {
            write!(s, "{l} ").unwrap();
        }
        s.push('0');
    }
    s
}

fn site(c: &ConflictSite) -> String {
    match c {
        ConflictSite::Var(v) => format!("var:{v}"),
        ConflictSite::EmptyClause(ci) => format!("clause:{ci}"),
    }
}

fn derivation(steps: &[Step]) -> String {
    let parts: Vec<String> = steps
        .iter()
        .map(|s| match s.reason {
            Reason::Asserted => format!("{}@a", s.lit),
            Reason::Clause(ci) => format!("{}@{ci}", s.lit),
        })
        .collect();
    parts.join(" ")
}

fn conflict_fields(c: &ConflictInfo) -> String {
    format!(
        "conflict={} derivation=\"{}\"",
        site(&c.site),
        derivation(&c.derivation)
    )
}

/// Formats one event as a single line, without the newline.
pub fn format_event(e: &TraceEvent) -> String {
    match e {
        TraceEvent::Normalized { clause, outcome } => match outcome {
            NormalizeOutcome::Forced(lits) => format!(
                "normalized clause={clause} result=forced lits=\"{}\"",
                join_lits(lits.iter().copied())
            ),
            NormalizeOutcome::Contradiction => {
                format!("normalized clause={clause} result=contradiction")
            }
        },
        TraceEvent::ScopeRun { lit, outcome } => match outcome {
            ScopeSummary::Compatible { psi, residual } => format!(
                "scope lit={lit} result=compatible psi=\"{}\" residual=\"{}\"",
                join_lits(psi.lits()),
                clause_list(residual)
            ),
            ScopeSummary::Incompatible(c) => {
                format!("scope lit={lit} result=incompatible {}", conflict_fields(c))
            }
        },
        TraceEvent::NecessaryFixed { lit, conflict, psi } => format!(
            "fixed lit={lit} cause=complement-incompatible conflict={} psi=\"{}\"",
            site(conflict),
            join_lits(psi.lits())
        ),
        TraceEvent::FormulaReduced { clauses } => {
            format!("reduced clauses=\"{}\"", clause_list(clauses))
        }
        TraceEvent::Restarted => "restart".to_string(),
        TraceEvent::Constructed { lit, psi } => {
            format!("commit lit={lit} psi=\"{}\"", join_lits(psi.lits()))
        }
        TraceEvent::Backtracked { lit } => format!("backtrack lit={lit}"),
        TraceEvent::Decided(v) => match v {
            Verdict::Sat { model, fixed } => format!(
                "decided result=SAT fixed=\"{}\" model=\"{}\"",
                join_lits(fixed.lits()),
                join_lits(model.lits())
            ),
            Verdict::Unsat(cause) => match cause {
                UnsatCause::Normalization { clause } => {
                    format!("decided result=UNSAT cause={} clause={clause}", cause.tag())
                }
                UnsatCause::EmptiedClause { lit, conflict }
                | UnsatCause::DoubleIncompatible { lit, conflict } => format!(
                    "decided result=UNSAT cause={} lit={lit} {}",
                    cause.tag(),
                    conflict_fields(conflict)
                ),
                UnsatCause::ConstructionExhausted | UnsatCause::Refuted => {
                    format!("decided result=UNSAT cause={}", cause.tag())
                }
            },
            Verdict::BudgetExceeded { limit } => {
                format!("decided result=UNKNOWN cause=budget limit={limit}")
            }
            Verdict::ConstructionFailed => {
                "decided result=UNKNOWN cause=construction-failed".to_string()
            }
            Verdict::VerificationFailed { model } => format!(
                "decided result=DISCREPANCY model=\"{}\"",
                join_lits(model.lits())
            ),
        },
    }
}

/// One line per event, each terminated by `\n`.
pub fn emit_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&format_event(e));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

struct Record<'a> {
    tag: &'a str,
    fields: Vec<(&'a str, &'a str)>,
}

impl<'a> Record<'a> {
    fn tokenize(line: &'a str) -> Result<Self, String> {
        let line = line.trim();
        let (tag, mut rest) = line.split_once(' ').unwrap_or((line, ""));
        let mut fields = Vec::new();
        loop {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            let (key, after) = rest
                .split_once('=')
                .ok_or_else(|| format!("expected key=value near {rest:?}"))?;
            let (value, tail) = if let Some(quoted) = after.strip_prefix('"') {
                let end = quoted
                    .find('"')
                    .ok_or_else(|| format!("unterminated quote for {key}"))?;
                (&quoted[..end], &quoted[end + 1..])
            } else {
                after.split_once(' ').unwrap_or((after, ""))
            };
            fields.push((key, value));
            rest = tail;
        }
        Ok(Record { tag, fields })
    }

    fn get(&self, key: &str) -> Result<&'a str, String> {
        self.fields
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("{} record lacks {key}", self.tag))
    }
}

fn parse_lit(s: &str) -> Result<Lit, String> {
    s.parse::<i64>()
        .ok()
        .and_then(Lit::from_dimacs)
        .ok_or_else(|| format!("bad literal {s:?}"))
}

fn parse_lits(s: &str) -> Result<Vec<Lit>, String> {
    s.split_whitespace().map(parse_lit).collect()
}

fn parse_minterm(s: &str) -> Result<Minterm, String> {
    Minterm::from_lits(parse_lits(s)?).map_err(|c| format!("minterm clashes on {}", c.var))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("bad index {s:?}"))
}

fn parse_clause_list(s: &str) -> Result<Vec<XClause>, String> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for tok in s.split_whitespace() {
        if tok == "0" {
            out.push(XClause::new(std::mem::take(&mut cur)).map_err(|e| e.to_string())?);
        } else {
            cur.push(parse_lit(tok)?);
        }
    }
    if !cur.is_empty() {
        return Err("clause list does not end with 0".into());
    }
    Ok(out)
}

fn parse_site(s: &str) -> Result<ConflictSite, String> {
    if let Some(v) = s.strip_prefix("var:") {
        return Ok(ConflictSite::Var(parse_lit(v)?.var()));
    }
    if let Some(c) = s.strip_prefix("clause:") {
        return Ok(ConflictSite::EmptyClause(parse_usize(c)?));
    }
    Err(format!("bad conflict site {s:?}"))
}

fn parse_conflict(r: &Record) -> Result<ConflictInfo, String> {
    let derivation = r
        .get("derivation")?
        .split_whitespace()
        .map(|tok| {
            let (lit, reason) = tok
                .split_once('@')
                .ok_or_else(|| format!("bad derivation step {tok:?}"))?;
            let reason = match reason {
                "a" => Reason::Asserted,
                ci => Reason::Clause(parse_usize(ci)?),
            };
            Ok(Step {
                lit: parse_lit(lit)?,
                reason,
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(ConflictInfo {
        site: parse_site(r.get("conflict")?)?,
        derivation,
    })
}

fn parse_assignment(s: &str) -> Result<Assignment, String> {
    let lits = parse_lits(s)?;
    for (i, l) in lits.iter().enumerate() {
        if l.var().index() != i {
            return Err(format!("model lists variable {} out of order", l.var()));
        }
    }
    Ok(Assignment::new(
        lits.iter().map(|l| l.is_positive()).collect(),
    ))
}

fn parse_decided(r: &Record) -> Result<Verdict, String> {
    Ok(match (r.get("result")?, r.get("cause").ok()) {
        ("SAT", _) => Verdict::Sat {
            model: parse_assignment(r.get("model")?)?,
            fixed: parse_minterm(r.get("fixed")?)?,
        },
        ("UNSAT", Some("normalization")) => Verdict::Unsat(UnsatCause::Normalization {
            clause: parse_usize(r.get("clause")?)?,
        }),
        ("UNSAT", Some("emptied-clause")) => Verdict::Unsat(UnsatCause::EmptiedClause {
            lit: parse_lit(r.get("lit")?)?,
            conflict: parse_conflict(r)?,
        }),
        ("UNSAT", Some("double-incompatible")) => Verdict::Unsat(UnsatCause::DoubleIncompatible {
            lit: parse_lit(r.get("lit")?)?,
            conflict: parse_conflict(r)?,
        }),
        ("UNSAT", Some("construction-exhausted")) => {
            Verdict::Unsat(UnsatCause::ConstructionExhausted)
        }
        ("UNSAT", Some("refuted")) => Verdict::Unsat(UnsatCause::Refuted),
        ("UNKNOWN", Some("budget")) => Verdict::BudgetExceeded {
            limit: r
                .get("limit")?
                .parse()
                .map_err(|_| "bad budget limit".to_string())?,
        },
        ("UNKNOWN", Some("construction-failed")) => Verdict::ConstructionFailed,
        ("DISCREPANCY", _) => Verdict::VerificationFailed {
            model: parse_assignment(r.get("model")?)?,
        },
        (res, cause) => return Err(format!("unknown decision {res} {cause:?}")),
    })
}

fn parse_record(r: &Record) -> Result<TraceEvent, String> {
    Ok(match r.tag {
        "normalized" => TraceEvent::Normalized {
            clause: parse_usize(r.get("clause")?)?,
            outcome: match r.get("result")? {
                "forced" => NormalizeOutcome::Forced(parse_lits(r.get("lits")?)?),
                "contradiction" => NormalizeOutcome::Contradiction,
                other => return Err(format!("bad normalization result {other:?}")),
            },
        },
        "scope" => TraceEvent::ScopeRun {
            lit: parse_lit(r.get("lit")?)?,
            outcome: match r.get("result")? {
                "compatible" => ScopeSummary::Compatible {
                    psi: parse_minterm(r.get("psi")?)?,
                    residual: parse_clause_list(r.get("residual")?)?,
                },
                "incompatible" => ScopeSummary::Incompatible(parse_conflict(r)?),
                other => return Err(format!("bad scope result {other:?}")),
            },
        },
        "fixed" => TraceEvent::NecessaryFixed {
            lit: parse_lit(r.get("lit")?)?,
            conflict: parse_site(r.get("conflict")?)?,
            psi: parse_minterm(r.get("psi")?)?,
        },
        "reduced" => TraceEvent::FormulaReduced {
            clauses: parse_clause_list(r.get("clauses")?)?,
        },
        "restart" => TraceEvent::Restarted,
        "commit" => TraceEvent::Constructed {
            lit: parse_lit(r.get("lit")?)?,
            psi: parse_minterm(r.get("psi")?)?,
        },
        "backtrack" => TraceEvent::Backtracked {
            lit: parse_lit(r.get("lit")?)?,
        },
        "decided" => TraceEvent::Decided(parse_decided(r)?),
        other => return Err(format!("unknown record {other:?}")),
    })
}

/// Parses a stream produced by [`emit_trace`]. Blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, TraceParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let wrap = |message| TraceParseError {
            line: i + 1,
            message,
        };
        let rec = Record::tokenize(line).map_err(wrap)?;
        out.push(parse_record(&rec).map_err(wrap)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event {0}: reduced formula without a preceding fix or commit")]
    Unanchored(usize),
    #[error("event {index}: expected {expected:?}, trace has {found:?}")]
    Mismatch {
        index: usize,
        expected: Vec<XClause>,
        found: Vec<XClause>,
    },
    #[error("event {0}: substitution empties a clause")]
    EmptiedClause(usize),
    #[error("event {0}: backtrack without a matching commit")]
    UnmatchedBacktrack(usize),
}

/// Drops clauses with a true literal and deletes false literals.
fn substitute(clauses: &[XClause], psi: &Minterm) -> Option<Vec<XClause>> {
    let mut out = Vec::new();
    for c in clauses {
        if c.lits().iter().any(|&l| psi.contains(l)) {
            continue;
        }
        let rest: Vec<Lit> = c
            .lits()
            .iter()
            .copied()
            .filter(|&l| psi.lit_value(l).is_none())
            .collect();
        if rest.is_empty() {
            return None;
        }
        out.push(XClause::from_lits_unchecked(rest));
    }
    Some(out)
}

/// Rebuilds every intermediate formula of a solve from its trace.
///
/// Each `reduced` record is recomputed by plain substitution of the
/// preceding `fixed` or `commit` minterm into the previous formula and must
/// match what the trace recorded. `backtrack` restores the formula from
/// before the matching commit.
pub fn replay(input: &Formula, events: &[TraceEvent]) -> Result<Vec<Formula>, ReplayError> {
    let mut cur: Vec<XClause> = input.clauses().to_vec();
    let mut pending: Option<Minterm> = None;
    let mut stack: Vec<Vec<XClause>> = Vec::new();
    let mut states = Vec::new();
    for (index, e) in events.iter().enumerate() {
        match e {
            TraceEvent::NecessaryFixed { psi, .. } => pending = Some(psi.clone()),
            TraceEvent::Constructed { psi, .. } => {
                stack.push(cur.clone());
                pending = Some(psi.clone());
            }
            TraceEvent::FormulaReduced { clauses } => {
                let psi = pending.take().ok_or(ReplayError::Unanchored(index))?;
                let expected = substitute(&cur, &psi).ok_or(ReplayError::EmptiedClause(index))?;
                if &expected != clauses {
                    return Err(ReplayError::Mismatch {
                        index,
                        expected,
                        found: clauses.clone(),
                    });
                }
                cur = expected;
                states.push(Formula::from_parts_unchecked(input.nvars(), cur.clone()));
            }
            TraceEvent::Backtracked { .. } => {
                cur = stack.pop().ok_or(ReplayError::UnmatchedBacktrack(index))?;
            }
            _ => {}
        }
    }
    Ok(states)
}

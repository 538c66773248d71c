//! Asserting a literal and closing the formula under exactly-one propagation.
//!
//! `scope(l, φ)` evaluates `l ∧ φ` by fixpoint propagation. The result is
//! either a conflict, or a split `φ(l) = ψ(l) ∧ φ'(l)` where `ψ(l)` is the
//! set of literals the assertion forces (including `l`) and `φ'(l)` is what
//! is left of the formula over the untouched variables.

use thiserror::Error;

use crate::formula::{Formula, Lit, Minterm, Var, XClause};

/// Why a literal entered the derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Asserted,
    /// Forced by the clause at this index of the formula being propagated.
    Clause(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub lit: Lit,
    pub reason: Reason,
}

/// Where propagation broke down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConflictSite {
    /// Both polarities of this variable were derived.
    Var(Var),
    /// Every literal of this clause became false.
    EmptyClause(usize),
}

/// A failed propagation, with every derived literal in order.
///
/// For a [`ConflictSite::Var`] conflict the last step is the literal whose
/// complement was already derived.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConflictInfo {
    pub site: ConflictSite,
    pub derivation: Vec<Step>,
}

impl ConflictInfo {
    pub fn var(&self) -> Option<Var> {
        match self.site {
            ConflictSite::Var(v) => Some(v),
            ConflictSite::EmptyClause(_) => None,
        }
    }

    /// Checks the derivation against `f` step by step: each forced literal
    /// must follow from its clause and the literals derived before it, and
    /// the final state must exhibit the recorded conflict.
    pub fn replays(&self, f: &Formula) -> bool {
        let mut m = Minterm::new();
        let (last, body) = match self.site {
            ConflictSite::Var(_) => match self.derivation.split_last() {
                Some((last, body)) => (Some(last), body),
                None => return false,
            },
            ConflictSite::EmptyClause(_) => (None, self.derivation.as_slice()),
        };
        for step in body {
            if !justified(f, &m, step) || m.insert(step.lit).is_err() {
                return false;
            }
        }
        match (self.site, last) {
            (ConflictSite::Var(v), Some(last)) => {
                last.lit.var() == v && m.contains(last.lit.negate()) && justified(f, &m, last)
            }
            (ConflictSite::EmptyClause(ci), _) => f
                .clauses()
                .get(ci)
                .is_some_and(|c| c.lits().iter().all(|&l| m.lit_value(l) == Some(false))),
            _ => false,
        }
    }
}

fn justified(f: &Formula, m: &Minterm, step: &Step) -> bool {
    let Reason::Clause(ci) = step.reason else {
        return true;
    };
    let Some(clause) = f.clauses().get(ci) else {
        return false;
    };
    let lits = clause.lits();
    // a sibling is already true, so this literal is the negation of another
    let by_sibling = lits
        .iter()
        .any(|&s| s.negate() == step.lit && lits.iter().any(|&t| t != s && m.contains(t)));
    // every other literal is false, so this one must hold
    let by_unit = lits.contains(&step.lit)
        && lits
            .iter()
            .all(|&t| t == step.lit || m.lit_value(t) == Some(false));
    by_sibling || by_unit
}

/// How a clause looks under a partial assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseStatus {
    /// Some literal is true; the listed sibling literals must become false.
    /// A sibling that is itself true shows up here and clashes on insert.
    Satisfied(Vec<Lit>),
    /// Some literals are false and at least two are still free.
    Reduced(XClause),
    /// Exactly one free literal left and the rest false: it must hold.
    Unit(Lit),
    /// All literals false.
    Empty,
    /// No literal is assigned.
    Untouched,
}

pub fn classify(clause: &XClause, m: &Minterm) -> ClauseStatus {
    let lits = clause.lits();
    if let Some(&t) = lits.iter().find(|&&l| m.contains(l)) {
        let forces = lits
            .iter()
            .filter(|&&l| l != t && m.lit_value(l) != Some(false))
            .map(|l| l.negate())
            .collect();
        return ClauseStatus::Satisfied(forces);
    }
    let free: Vec<Lit> = lits
        .iter()
        .copied()
        .filter(|&l| m.lit_value(l).is_none())
        .collect();
    match free.len() {
        0 => ClauseStatus::Empty,
        1 => ClauseStatus::Unit(free[0]),
        n if n == lits.len() => ClauseStatus::Untouched,
        _ => ClauseStatus::Reduced(XClause::from_lits_unchecked(free)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeResult {
    Incompatible(ConflictInfo),
    Compatible { psi: Minterm, residual: Formula },
}

impl ScopeResult {
    pub fn is_compatible(&self) -> bool {
        matches!(self, ScopeResult::Compatible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("variable {0} does not occur in the formula")]
    UnknownVariable(u32),
}

/// Propagation ran past its step allowance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("step budget of {limit} exhausted")]
pub struct BudgetExceeded {
    pub limit: u64,
}

/// Counts clause visits against a limit.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn tick(&mut self) -> Result<(), BudgetExceeded> {
        if self.used >= self.limit {
            return Err(BudgetExceeded { limit: self.limit });
        }
        self.used += 1;
        Ok(())
    }
}

/// Conflict for a clause whose literals are all false.
///
/// If the literal falsified last was derived, the other literals being
/// false force it true, which clashes with the derivation: reported as a
/// conflict on its variable. A clause emptied by asserted literals alone
/// is reported as [`ConflictSite::EmptyClause`].
fn emptied(clause: &XClause, ci: usize, mut trail: Vec<Step>) -> ConflictInfo {
    let (pos, lit) = clause
        .lits()
        .iter()
        .map(|&l| {
            let pos = trail
                .iter()
                .position(|s| s.lit.var() == l.var())
                .expect("false literal is on the trail");
            (pos, l)
        })
        .max_by_key(|&(pos, _)| pos)
        .expect("clauses are nonempty");
    if trail[pos].reason == Reason::Asserted {
        return ConflictInfo {
            site: ConflictSite::EmptyClause(ci),
            derivation: trail,
        };
    }
    trail.push(Step {
        lit,
        reason: Reason::Clause(ci),
    });
    ConflictInfo {
        site: ConflictSite::Var(lit.var()),
        derivation: trail,
    }
}

/// `scope(l, f)`: assert `l` in `f` and propagate to fixpoint.
pub fn scope(lit: Lit, f: &Formula) -> Result<ScopeResult, ScopeError> {
    if !f.occurs(lit.var()) {
        return Err(ScopeError::UnknownVariable(lit.var().id()));
    }
    let seed = Minterm::from_lits([lit]).expect("single literal");
    Ok(propagate(f, &seed))
}

/// Closes `seed` under the clauses of `f`.
pub fn propagate(f: &Formula, seed: &Minterm) -> ScopeResult {
    propagate_metered(f, seed, &mut Budget::unlimited()).expect("unlimited budget")
}

/// [`propagate`] charging one step per clause visit.
///
/// Clauses are swept in formula order until a sweep changes nothing;
/// forced literals take effect as soon as they are derived.
pub fn propagate_metered(
    f: &Formula,
    seed: &Minterm,
    budget: &mut Budget,
) -> Result<ScopeResult, BudgetExceeded> {
    let mut psi = Minterm::new();
    let mut trail: Vec<Step> = Vec::with_capacity(seed.len());
    for lit in seed.lits() {
        psi.insert(lit).expect("seed is consistent");
        trail.push(Step {
            lit,
            reason: Reason::Asserted,
        });
    }

    let clauses = f.clauses();
    let mut discharged = vec![false; clauses.len()];
    loop {
        let mut changed = false;
        for (ci, clause) in clauses.iter().enumerate() {
            if discharged[ci] {
                continue;
            }
            budget.tick()?;
            let forces = match classify(clause, &psi) {
                ClauseStatus::Satisfied(forces) => forces,
                ClauseStatus::Unit(lit) => vec![lit],
                ClauseStatus::Empty => {
                    return Ok(ScopeResult::Incompatible(emptied(clause, ci, trail)))
                }
                ClauseStatus::Reduced(_) | ClauseStatus::Untouched => continue,
            };
            discharged[ci] = true;
            for lit in forces {
                trail.push(Step {
                    lit,
                    reason: Reason::Clause(ci),
                });
                match psi.insert(lit) {
                    Ok(new) => changed |= new,
                    Err(clash) => {
                        return Ok(ScopeResult::Incompatible(ConflictInfo {
                            site: ConflictSite::Var(clash.var),
                            derivation: trail,
                        }))
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let residual = clauses
        .iter()
        .zip(&discharged)
        .filter(|(_, &d)| !d)
        .map(|(c, _)| match classify(c, &psi) {
            ClauseStatus::Reduced(r) => r,
            ClauseStatus::Untouched => c.clone(),
            other => unreachable!("clause {c} left as {other:?} at fixpoint"),
        })
        .collect();
    Ok(ScopeResult::Compatible {
        psi,
        residual: Formula::from_parts_unchecked(f.nvars(), residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(v: &[i64]) -> Vec<Lit> {
        v.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()
    }

    fn minterm(v: &[i64]) -> Minterm {
        Minterm::from_lits(lits(v)).unwrap()
    }

    // a=1 b=2 c=3 x=4 y=5
    fn example() -> Formula {
        Formula::from_dimacs(5, &[&[1, 2, 3], &[2, 4, 5], &[3, 4, -5]])
    }

    fn compatible(r: ScopeResult) -> (Minterm, Formula) {
        match r {
            ScopeResult::Compatible { psi, residual } => (psi, residual),
            ScopeResult::Incompatible(c) => panic!("unexpected conflict {c:?}"),
        }
    }

    #[test]
    fn scope_a_on_example() {
        let (psi, residual) = compatible(scope(Lit::pos(1), &example()).unwrap());
        assert_eq!(psi, minterm(&[1, -2, -3]));
        assert_eq!(residual, Formula::from_dimacs(5, &[&[4, 5], &[4, -5]]));
    }

    #[test]
    fn scope_not_a_on_example() {
        let (psi, residual) = compatible(scope(Lit::neg(1), &example()).unwrap());
        assert_eq!(psi, minterm(&[-1]));
        assert_eq!(
            residual,
            Formula::from_dimacs(5, &[&[2, 3], &[2, 4, 5], &[3, 4, -5]])
        );
    }

    #[test]
    fn scope_x_conflicts_on_y() {
        let f = example();
        let ScopeResult::Incompatible(c) = scope(Lit::pos(4), &f).unwrap() else {
            panic!("x should be incompatible");
        };
        assert_eq!(c.site, ConflictSite::Var(Var::new(5)));
        assert_eq!(c.derivation.first().unwrap().reason, Reason::Asserted);
        assert!(c.replays(&f));
    }

    #[test]
    fn empty_formula_is_a_vacuous_fixpoint() {
        let (psi, residual) = compatible(propagate(&Formula::empty(0), &Minterm::new()));
        assert!(psi.is_empty());
        assert!(residual.is_empty());
    }

    #[test]
    fn reduced_formula_probes() {
        let f = Formula::from_dimacs(5, &[&[2, 3], &[2, 5], &[3, -5]]);
        let (psi, residual) = compatible(scope(Lit::pos(2), &f).unwrap());
        assert_eq!(psi, minterm(&[2, -3, -5]));
        assert!(residual.is_empty());
        let (psi, residual) = compatible(scope(Lit::neg(2), &f).unwrap());
        assert_eq!(psi, minterm(&[-2, 3, 5]));
        assert!(residual.is_empty());

        let g = Formula::from_dimacs(5, &[&[1, 2, 3], &[2, 5], &[3, -5]]);
        let ScopeResult::Incompatible(c) = scope(Lit::pos(1), &g).unwrap() else {
            panic!("a should be incompatible");
        };
        assert_eq!(c.var(), Some(Var::new(5)));
        assert!(c.replays(&g));
    }

    #[test]
    fn unknown_variable_is_a_usage_error() {
        let f = Formula::from_dimacs(5, &[&[2, 3]]);
        assert_eq!(scope(Lit::pos(1), &f), Err(ScopeError::UnknownVariable(1)));
    }

    #[test]
    fn two_true_literals_clash() {
        let f = Formula::from_dimacs(2, &[&[1, 2]]);
        let r = propagate(&f, &minterm(&[1, 2]));
        let ScopeResult::Incompatible(c) = r else {
            panic!()
        };
        assert_eq!(c.site, ConflictSite::Var(Var::new(2)));
        assert!(c.replays(&f));
    }

    #[test]
    fn emptied_clause_is_a_conflict() {
        // (1 2) with 1 and 2 both false
        let f = Formula::from_dimacs(3, &[&[1, 2]]);
        let ScopeResult::Incompatible(c) = propagate(&f, &minterm(&[-1, -2])) else {
            panic!()
        };
        assert_eq!(c.site, ConflictSite::EmptyClause(0));
        assert!(c.replays(&f));
    }

    #[test]
    fn classify_statuses() {
        let c = XClause::new(lits(&[1, 2, 3])).unwrap();
        assert_eq!(classify(&c, &minterm(&[])), ClauseStatus::Untouched);
        assert_eq!(
            classify(&c, &minterm(&[-1])),
            ClauseStatus::Reduced(XClause::new(lits(&[2, 3])).unwrap())
        );
        assert_eq!(
            classify(&c, &minterm(&[-1, -3])),
            ClauseStatus::Unit(Lit::pos(2))
        );
        assert_eq!(classify(&c, &minterm(&[-1, -2, -3])), ClauseStatus::Empty);
        assert_eq!(
            classify(&c, &minterm(&[2, -3])),
            ClauseStatus::Satisfied(lits(&[-1]))
        );
    }

    #[test]
    fn budget_stops_propagation() {
        let mut b = Budget::new(2);
        let r = propagate_metered(&example(), &minterm(&[1]), &mut b);
        assert_eq!(r, Err(BudgetExceeded { limit: 2 }));
    }

    #[test]
    fn tampered_derivation_does_not_replay() {
        let f = example();
        let ScopeResult::Incompatible(mut c) = scope(Lit::pos(4), &f).unwrap() else {
            panic!()
        };
        c.derivation[1].reason = Reason::Clause(0);
        assert!(!c.replays(&f));
    }
}

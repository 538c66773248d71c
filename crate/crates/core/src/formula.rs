//! Variables, literals, exactly-one clauses and the formulas built from them.
//!
//! A clause `(a ⊙ b ⊙ c)` holds when *exactly one* of its literals is true.
//! This is not the inclusive-or clause of CNF: `(a ⊙ b)` rejects `a = b = 1`.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

/// A propositional variable, identified by a 1-based dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// Panics if `id` is zero.
    pub fn new(id: u32) -> Self {
        assert!(id >= 1, "variable ids start at 1");
        Var(id)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    /// Zero-based position, for array-backed storage.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit {
            var: self,
            positive,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A variable together with a polarity.
///
/// Literals order by variable id first, positive before negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit {
    var: Var,
    positive: bool,
}

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        Lit { var, positive }
    }

    pub fn pos(id: u32) -> Self {
        Var::new(id).lit(true)
    }

    pub fn neg(id: u32) -> Self {
        Var::new(id).lit(false)
    }

    /// Builds a literal from its signed DIMACS form. Returns `None` for 0.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 || value.unsigned_abs() > u32::MAX as u64 {
            return None;
        }
        Some(Lit::new(Var::new(value.unsigned_abs() as u32), value > 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let id = i64::from(self.var.id());
        if self.positive {
            id
        } else {
            -id
        }
    }

    pub fn var(self) -> Var {
        self.var
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    #[must_use]
    pub fn negate(self) -> Self {
        Lit {
            var: self.var,
            positive: !self.positive,
        }
    }

    pub fn is_complement_of(self, other: Lit) -> bool {
        self.var == other.var && self.positive != other.positive
    }

    /// Truth value of the literal given the value of its variable.
    pub fn eval(self, value: bool) -> bool {
        value == self.positive
    }
}

impl Ord for Lit {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.var
            .cmp(&other.var)
            .then_with(|| other.positive.cmp(&self.positive))
    }
}

impl PartialOrd for Lit {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("clause width {0} is outside 1..=3")]
    Width(usize),
    #[error("variable {var} exceeds the declared variable count {nvars}")]
    VarOutOfRange { var: u32, nvars: usize },
    #[error("clause repeats variable {0}; normalize it first")]
    RepeatedVar(u32),
    #[error("clause {clause:?} can never have exactly one true literal")]
    UnsatisfiableClause { clause: Vec<Lit> },
}

/// An exactly-one constraint over 1 to 3 literals on distinct variables.
///
/// Literal order is the order the clause was written in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XClause {
    lits: Vec<Lit>,
}

impl XClause {
    pub fn new(lits: Vec<Lit>) -> Result<Self, FormulaError> {
        if lits.is_empty() || lits.len() > 3 {
            return Err(FormulaError::Width(lits.len()));
        }
        for (i, a) in lits.iter().enumerate() {
            if lits[..i].iter().any(|b| b.var() == a.var()) {
                return Err(FormulaError::RepeatedVar(a.var().id()));
            }
        }
        Ok(XClause { lits })
    }

    /// Construction for callers that already uphold the width and
    /// distinct-variable invariants.
    pub(crate) fn from_lits_unchecked(lits: Vec<Lit>) -> Self {
        debug_assert!(XClause::new(lits.clone()).is_ok(), "bad clause {lits:?}");
        XClause { lits }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn width(&self) -> usize {
        self.lits.len()
    }

    pub fn mentions(&self, var: Var) -> bool {
        self.lits.iter().any(|l| l.var() == var)
    }

    /// Number of true literals under a total assignment.
    pub fn true_count(&self, t: &Assignment) -> usize {
        self.lits.iter().filter(|&&l| t.value(l)).count()
    }
}

impl fmt::Display for XClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Outcome of cleaning a raw clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    /// The clause was already well formed.
    Clause(XClause),
    /// The clause was degenerate and is replaced by these forced literals.
    /// An empty list means the clause always holds and is discharged.
    Forced(Vec<Lit>),
}

/// Removes repeated and complementary literals from a raw clause.
///
/// A literal written twice would count twice if true, so it must be false.
/// A complementary pair always contributes exactly one true literal, so
/// every other literal of the clause must be false and the clause is spent.
pub fn normalize_clause(raw: &[Lit]) -> Result<Normalized, FormulaError> {
    if raw.is_empty() || raw.len() > 3 {
        return Err(FormulaError::Width(raw.len()));
    }

    let pair = raw.iter().enumerate().find_map(|(i, a)| {
        raw[i + 1..]
            .iter()
            .position(|b| a.is_complement_of(*b))
            .map(|j| (i, i + 1 + j))
    });
    if let Some((i, j)) = pair {
        let mut forced: Vec<Lit> = Vec::new();
        for (k, l) in raw.iter().enumerate() {
            if k != i && k != j && !forced.contains(&l.negate()) {
                forced.push(l.negate());
            }
        }
        return Ok(Normalized::Forced(forced));
    }

    let mut repeated: Vec<Lit> = Vec::new();
    let mut single: Vec<Lit> = Vec::new();
    for &l in raw {
        let n = raw.iter().filter(|&&m| m == l).count();
        if n > 1 {
            if !repeated.contains(&l) {
                repeated.push(l);
            }
        } else {
            single.push(l);
        }
    }
    if repeated.is_empty() {
        return Ok(Normalized::Clause(XClause::from_lits_unchecked(
            raw.to_vec(),
        )));
    }
    // At most three slots, so a repeat leaves zero or one singleton.
    match single.as_slice() {
        [] => Err(FormulaError::UnsatisfiableClause {
            clause: raw.to_vec(),
        }),
        [only] => {
            let mut forced: Vec<Lit> = repeated.iter().map(|l| l.negate()).collect();
            forced.push(*only);
            Ok(Normalized::Forced(forced))
        }
        _ => unreachable!("a repeated literal leaves at most one other slot"),
    }
}

/// A conjunction of exactly-one clauses over variables `1..=nvars`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Formula {
    nvars: usize,
    clauses: Vec<XClause>,
}

impl Formula {
    pub fn new(nvars: usize, clauses: Vec<XClause>) -> Result<Self, FormulaError> {
        for c in &clauses {
            for l in c.lits() {
                if l.var().index() >= nvars {
                    return Err(FormulaError::VarOutOfRange {
                        var: l.var().id(),
                        nvars,
                    });
                }
            }
        }
        Ok(Formula { nvars, clauses })
    }

    pub fn empty(nvars: usize) -> Self {
        Formula {
            nvars,
            clauses: Vec::new(),
        }
    }

    /// Convenience for tests and fixtures: clauses as signed DIMACS integers.
    ///
    /// Panics on malformed input.
    pub fn from_dimacs(nvars: usize, clauses: &[&[i64]]) -> Self {
        let clauses = clauses
            .iter()
            .map(|c| {
                let lits = c
                    .iter()
                    .map(|&v| Lit::from_dimacs(v).expect("nonzero literal"))
                    .collect();
                XClause::new(lits).expect("well-formed clause")
            })
            .collect();
        Formula::new(nvars, clauses).expect("variables in range")
    }

    pub(crate) fn from_parts_unchecked(nvars: usize, clauses: Vec<XClause>) -> Self {
        Formula { nvars, clauses }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn clauses(&self) -> &[XClause] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn occurs(&self, var: Var) -> bool {
        self.clauses.iter().any(|c| c.mentions(var))
    }

    /// Variables that appear in some clause, ascending.
    pub fn occurring_vars(&self) -> Vec<Var> {
        let mut seen = vec![false; self.nvars];
        for c in &self.clauses {
            for l in c.lits() {
                seen[l.var().index()] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| Var::new(i as u32 + 1))
            .collect()
    }

    /// `l₁ ∧ … ∧ lₖ ∧ self`, with each literal added as a unit clause in front.
    pub fn conjoin(&self, lits: impl IntoIterator<Item = Lit>) -> Formula {
        let mut clauses: Vec<XClause> = lits
            .into_iter()
            .map(|l| XClause::from_lits_unchecked(vec![l]))
            .collect();
        clauses.extend(self.clauses.iter().cloned());
        Formula::new(self.nvars, clauses).expect("literal variable out of range")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "⊤");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Returned when inserting a literal whose complement is already fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clash {
    pub var: Var,
}

/// A consistent set of fixed literals.
///
/// Iteration follows insertion order; equality is set equality.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Minterm {
    fixed: IndexMap<Var, bool>,
}

impl Minterm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a minterm from literals, rejecting complementary pairs.
    pub fn from_lits(lits: impl IntoIterator<Item = Lit>) -> Result<Self, Clash> {
        let mut m = Minterm::new();
        for l in lits {
            m.insert(l)?;
        }
        Ok(m)
    }

    /// Adds a literal. Returns whether it was new.
    pub fn insert(&mut self, lit: Lit) -> Result<bool, Clash> {
        match self.fixed.get(&lit.var()) {
            Some(&v) if v == lit.is_positive() => Ok(false),
            Some(_) => Err(Clash { var: lit.var() }),
            None => {
                self.fixed.insert(lit.var(), lit.is_positive());
                Ok(true)
            }
        }
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.fixed.get(&var).copied()
    }

    /// `Some(true)` if the literal is fixed true, `Some(false)` if its
    /// complement is fixed, `None` if the variable is free.
    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.value(lit.var()).map(|v| lit.eval(v))
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lit_value(lit) == Some(true)
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        self.fixed.iter().map(|(&v, &b)| v.lit(b))
    }

    /// Literals sorted by variable.
    pub fn sorted_lits(&self) -> Vec<Lit> {
        let mut v: Vec<Lit> = self.lits().collect();
        v.sort();
        v
    }

    /// Absorbs another minterm. Fails on the first clash.
    pub fn extend_from(&mut self, other: &Minterm) -> Result<(), Clash> {
        for l in other.lits() {
            self.insert(l)?;
        }
        Ok(())
    }
}

/// A value for every variable `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    /// Extends a minterm to all `nvars` variables; unfixed ones are false.
    pub fn from_minterm(m: &Minterm, nvars: usize) -> Self {
        let mut values = vec![false; nvars];
        for l in m.lits() {
            values[l.var().index()] = l.is_positive();
        }
        Assignment { values }
    }

    pub fn nvars(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// Panics if the variable is outside the assignment.
    pub fn value(&self, lit: Lit) -> bool {
        lit.eval(self.values[lit.var().index()])
    }

    /// The assignment as one literal per variable, ascending.
    pub fn lits(&self) -> Vec<Lit> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| Var::new(i as u32 + 1).lit(v))
            .collect()
    }

    pub fn satisfies_lits(&self, lits: impl IntoIterator<Item = Lit>) -> bool {
        lits.into_iter().all(|l| self.value(l))
    }
}

/// True iff every clause has exactly one true literal under `t`.
///
/// Panics if `t` does not cover the formula's variables.
pub fn evaluate(f: &Formula, t: &Assignment) -> bool {
    assert!(
        t.nvars() >= f.nvars(),
        "assignment covers {} of {} variables",
        t.nvars(),
        f.nvars()
    );
    f.clauses().iter().all(|c| c.true_count(t) == 1)
}

/// What normalization did to one raw input clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizeOutcome {
    Forced(Vec<Lit>),
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationEvent {
    /// Zero-based index of the raw clause in the input.
    pub clause: usize,
    pub raw: Vec<Lit>,
    pub outcome: NormalizeOutcome,
}

/// A formula built from raw, possibly degenerate clauses.
///
/// Forced literals become unit clauses at the position of the clause that
/// produced them, so the model set of `formula` equals that of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub formula: Formula,
    pub events: Vec<NormalizationEvent>,
    /// Index of the first raw clause that cannot be satisfied on its own.
    pub contradiction: Option<usize>,
}

impl Instance {
    pub fn from_raw(nvars: usize, raw: &[Vec<Lit>]) -> Result<Self, FormulaError> {
        let mut clauses = Vec::new();
        let mut events = Vec::new();
        let mut contradiction = None;
        for (idx, lits) in raw.iter().enumerate() {
            if let Some(l) = lits.iter().find(|l| l.var().index() >= nvars) {
                return Err(FormulaError::VarOutOfRange {
                    var: l.var().id(),
                    nvars,
                });
            }
            match normalize_clause(lits) {
                Ok(Normalized::Clause(c)) => clauses.push(c),
                Ok(Normalized::Forced(forced)) => {
                    clauses.extend(
                        forced
                            .iter()
                            .map(|&l| XClause::from_lits_unchecked(vec![l])),
                    );
                    events.push(NormalizationEvent {
                        clause: idx,
                        raw: lits.clone(),
                        outcome: NormalizeOutcome::Forced(forced),
                    });
                }
                Err(FormulaError::UnsatisfiableClause { .. }) => {
                    contradiction.get_or_insert(idx);
                    events.push(NormalizationEvent {
                        clause: idx,
                        raw: lits.clone(),
                        outcome: NormalizeOutcome::Contradiction,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Instance {
            formula: Formula::from_parts_unchecked(nvars, clauses),
            events,
            contradiction,
        })
    }
}

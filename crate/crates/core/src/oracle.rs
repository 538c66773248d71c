//! Brute-force ground truth by enumerating all `2^n` assignments.
//!
//! Clauses are compiled to bit masks and checked with popcounts, so this
//! path shares nothing with [`evaluate`](crate::formula::evaluate) or the
//! propagation code it is used to check.

use rayon::prelude::*;
use thiserror::Error;

use crate::formula::{Assignment, Formula, Lit, XClause};

pub const DEFAULT_MAX_VARS: usize = 24;
pub const DEFAULT_MODEL_CAP: usize = 1024;

/// How a clause is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Semantics {
    /// `⊙`: exactly one literal true.
    ExactlyOne,
    /// `∨`: at least one literal true.
    InclusiveOr,
}

impl Semantics {
    pub fn name(self) -> &'static str {
        match self {
            Semantics::ExactlyOne => "exactly-one",
            Semantics::InclusiveOr => "inclusive-or",
        }
    }
}

impl std::str::FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exactly-one" => Ok(Semantics::ExactlyOne),
            "inclusive-or" => Ok(Semantics::InclusiveOr),
            other => Err(format!(
                "unknown semantics {other:?}; expected exactly-one or inclusive-or"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{nvars} variables exceed the enumeration guard of {max}")]
    TooManyVars { nvars: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelReport {
    pub count: u64,
    /// All models in lexicographic order, present only when `count` is
    /// within the cap.
    pub models: Option<Vec<Assignment>>,
    pub semantics: Semantics,
}

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub max_vars: usize,
    pub model_cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            max_vars: DEFAULT_MAX_VARS,
            model_cap: DEFAULT_MODEL_CAP,
        }
    }
}

/// Masks over the assignment word; variable 1 is the most significant bit,
/// so counting upward visits assignments in lexicographic order.
struct Compiled {
    nvars: usize,
    clauses: Vec<(u64, u64)>,
}

impl Compiled {
    fn new(f: &Formula) -> Self {
        let n = f.nvars();
        let bit = |l: Lit| 1u64 << (n - 1 - l.var().index());
        let clauses = f
            .clauses()
            .iter()
            .map(|c| {
                c.lits().iter().fold((0, 0), |(p, q), &l| {
                    if l.is_positive() {
                        (p | bit(l), q)
                    } else {
                        (p, q | bit(l))
                    }
                })
            })
            .collect();
        Compiled { nvars: n, clauses }
    }

    fn holds(&self, word: u64, sem: Semantics) -> bool {
        self.clauses.iter().all(|&(pos, neg)| {
            let n = (word & pos).count_ones() + (!word & neg).count_ones();
            match sem {
                Semantics::ExactlyOne => n == 1,
                Semantics::InclusiveOr => n >= 1,
            }
        })
    }

    fn assignment(&self, word: u64) -> Assignment {
        Assignment::new(
            (0..self.nvars)
                .map(|i| word >> (self.nvars - 1 - i) & 1 == 1)
                .collect(),
        )
    }

    fn word(&self, lits: &[Lit]) -> (u64, u64) {
        // (mask of constrained bits, required values)
        lits.iter().fold((0, 0), |(mask, val), &l| {
            let b = 1u64 << (self.nvars - 1 - l.var().index());
            (mask | b, if l.is_positive() { val | b } else { val })
        })
    }
}

const CHUNK_BITS: u32 = 16;

impl Oracle {
    fn guard(&self, f: &Formula) -> Result<Compiled, OracleError> {
        if f.nvars() > self.max_vars || f.nvars() > 63 {
            return Err(OracleError::TooManyVars {
                nvars: f.nvars(),
                max: self.max_vars.min(63),
            });
        }
        Ok(Compiled::new(f))
    }

    /// All model words satisfying `under`, in ascending order.
    ///
    /// Large spaces are split into fixed chunks scanned in parallel and
    /// concatenated in chunk order, which equals the sequential order.
    fn models_under(&self, c: &Compiled, sem: Semantics, under: &[Lit]) -> Vec<u64> {
        let (mask, val) = c.word(under);
        let total = 1u64 << c.nvars;
        let scan = |lo: u64, hi: u64| -> Vec<u64> {
            (lo..hi)
                .filter(|&w| w & mask == val && c.holds(w, sem))
                .collect()
        };
        if c.nvars as u32 <= CHUNK_BITS {
            return scan(0, total);
        }
        let chunk = 1u64 << CHUNK_BITS;
        (0..total / chunk)
            .into_par_iter()
            .map(|k| scan(k * chunk, (k + 1) * chunk))
            .collect::<Vec<_>>()
            .concat()
    }

    pub fn enumerate_models(
        &self,
        f: &Formula,
        sem: Semantics,
    ) -> Result<ModelReport, OracleError> {
        let c = self.guard(f)?;
        let words = self.models_under(&c, sem, &[]);
        let count = words.len() as u64;
        let models = (words.len() <= self.model_cap)
            .then(|| words.iter().map(|&w| c.assignment(w)).collect());
        Ok(ModelReport {
            count,
            models,
            semantics: sem,
        })
    }

    /// Number of exactly-one models in which every literal of `under` holds.
    pub fn count_under(&self, f: &Formula, under: &[Lit]) -> Result<u64, OracleError> {
        let c = self.guard(f)?;
        Ok(self.models_under(&c, Semantics::ExactlyOne, under).len() as u64)
    }

    /// Every exactly-one model containing `assumption` also contains
    /// `consequence`. Vacuously true when no model contains `assumption`.
    pub fn entails(
        &self,
        f: &Formula,
        assumption: Lit,
        consequence: Lit,
    ) -> Result<bool, OracleError> {
        let c = self.guard(f)?;
        let (mask, val) = c.word(&[consequence]);
        Ok(self
            .models_under(&c, Semantics::ExactlyOne, &[assumption])
            .iter()
            .all(|&w| w & mask == val))
    }
}

/// Reads raw clauses as inclusive-or clauses: repeated literals collapse
/// and clauses holding a complementary pair are dropped as tautologies.
///
/// Exactly-one normalization must not be applied before an inclusive-or
/// count, since `(x ⊙ x ⊙ y)` and `(x ∨ x ∨ y)` constrain differently.
pub fn inclusive_or_reading(nvars: usize, raw: &[Vec<Lit>]) -> Formula {
    let clauses = raw
        .iter()
        .filter(|c| !c.iter().any(|&l| c.contains(&l.negate())))
        .map(|c| {
            let mut lits: Vec<Lit> = Vec::new();
            for &l in c {
                if !lits.contains(&l) {
                    lits.push(l);
                }
            }
            XClause::new(lits).expect("deduplicated clause of width 1..=3")
        })
        .collect();
    Formula::new(nvars, clauses).expect("variables in range")
}

pub fn enumerate_models(f: &Formula, sem: Semantics) -> Result<ModelReport, OracleError> {
    Oracle::default().enumerate_models(f, sem)
}

pub fn count_models(f: &Formula, sem: Semantics) -> Result<u64, OracleError> {
    enumerate_models(f, sem).map(|r| r.count)
}

pub fn entails(f: &Formula, assumption: Lit, consequence: Lit) -> Result<bool, OracleError> {
    Oracle::default().entails(f, assumption, consequence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::evaluate;

    fn example() -> Formula {
        Formula::from_dimacs(5, &[&[1, 2, 3], &[2, 4, 5], &[3, 4, -5]])
    }

    fn assignment(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn example_counts() {
        let r = enumerate_models(&example(), Semantics::ExactlyOne).unwrap();
        assert_eq!(r.count, 2);
        // lexicographic: 00101 before 01000
        assert_eq!(
            r.models.unwrap(),
            vec![assignment(&[0, 0, 1, 0, 1]), assignment(&[0, 1, 0, 0, 0])]
        );
        assert_eq!(
            count_models(&example(), Semantics::InclusiveOr).unwrap(),
            22
        );
    }

    #[test]
    fn inclusive_or_reading_of_degenerate_clauses() {
        let raw = vec![
            vec![Lit::pos(1), Lit::pos(1), Lit::pos(2)],
            vec![Lit::pos(1), Lit::neg(1), Lit::pos(2)],
        ];
        let f = inclusive_or_reading(2, &raw);
        assert_eq!(f, Formula::from_dimacs(2, &[&[1, 2]]));
        assert_eq!(count_models(&f, Semantics::InclusiveOr).unwrap(), 3);
    }

    #[test]
    fn empty_formula_has_one_model() {
        for sem in [Semantics::ExactlyOne, Semantics::InclusiveOr] {
            let r = enumerate_models(&Formula::empty(0), sem).unwrap();
            assert_eq!(r.count, 1);
            assert_eq!(r.models.unwrap(), vec![Assignment::new(vec![])]);
        }
    }

    #[test]
    fn entailment_examples() {
        let f = example();
        assert!(entails(&f, Lit::pos(1), Lit::neg(2)).unwrap());
        assert!(!entails(&f, Lit::neg(1), Lit::pos(2)).unwrap());
        for c in [Lit::pos(1), Lit::neg(1), Lit::pos(5), Lit::neg(5)] {
            assert!(entails(&f, Lit::pos(4), c).unwrap());
        }
    }

    #[test]
    fn guard_refuses_large_formulas() {
        let f = Formula::empty(25);
        assert_eq!(
            count_models(&f, Semantics::ExactlyOne),
            Err(OracleError::TooManyVars { nvars: 25, max: 24 })
        );
        let wide = Oracle {
            max_vars: 25,
            ..Oracle::default()
        };
        assert!(wide
            .enumerate_models(&Formula::empty(2), Semantics::ExactlyOne)
            .is_ok());
    }

    #[test]
    fn cap_suppresses_model_list() {
        let o = Oracle {
            model_cap: 1,
            ..Oracle::default()
        };
        let r = o
            .enumerate_models(&example(), Semantics::ExactlyOne)
            .unwrap();
        assert_eq!(r.count, 2);
        assert!(r.models.is_none());
    }

    #[test]
    fn parallel_chunks_match_sequential_order() {
        // 18 variables crosses the chunking threshold.
        let f = Formula::from_dimacs(18, &[&[1, 2, 3], &[4, -5, 18], &[17, 9]]);
        let r = Oracle {
            model_cap: usize::MAX,
            ..Oracle::default()
        }
        .enumerate_models(&f, Semantics::ExactlyOne)
        .unwrap();
        let models = r.models.unwrap();
        assert_eq!(models.len() as u64, r.count);
        // (1 2 3): 3 ways, (4 -5 18): 3 ways, (17 9): 2 ways, 10 free vars
        assert_eq!(r.count, 3 * 3 * 2 * (1 << 10));
        assert!(models.windows(2).all(|w| w[0].values() < w[1].values()));
        assert!(models.iter().all(|m| evaluate(&f, m)));
    }
}

//! Seeded random instances for differential testing.
//!
//! The random stream is SplitMix64, reproduced here so that instances can
//! be regenerated bit-for-bit by any implementation:
//!
//! ```text
//! state  = state + 0x9E3779B97F4A7C15            (wrapping)
//! z      = state
//! z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
//! z      = (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! `below(n)` maps one output `x` to `(x * n) >> 64` (128-bit product).
//! For each clause, in order:
//!
//! 1. width: fixed 3, or `below(w1 + w2 + w3)` picks 1, 2 or 3 by
//!    cumulative weight;
//! 2. variables: `1 + below(nvars)`, redrawn while already in the clause;
//! 3. polarity, per literal right after its variable: positive iff the
//!    top bit of the next output is set.

use thiserror::Error;

use crate::formula::{Formula, Lit, Var, XClause};

pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// A value in `0..n`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Widths {
    Fixed3,
    /// Relative weights of widths 1, 2 and 3.
    Mixed([u32; 3]),
}

impl Widths {
    fn max_width(self) -> usize {
        match self {
            Widths::Fixed3 => 3,
            Widths::Mixed(w) => w.iter().rposition(|&x| x > 0).map_or(0, |i| i + 1),
        }
    }
}

impl std::str::FromStr for Widths {
    type Err = String;

    /// `fixed3` or `mixed:W1,W2,W3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "fixed3" {
            return Ok(Widths::Fixed3);
        }
        let weights = s
            .strip_prefix("mixed:")
            .ok_or_else(|| format!("expected fixed3 or mixed:W1,W2,W3, got {s:?}"))?;
        let w: Vec<u32> = weights
            .split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad weight in {s:?}: {e}"))?;
        let w: [u32; 3] = w
            .try_into()
            .map_err(|_| format!("expected three weights in {s:?}"))?;
        Ok(Widths::Mixed(w))
    }
}

impl std::fmt::Display for Widths {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Widths::Fixed3 => write!(f, "fixed3"),
            Widths::Mixed([a, b, c]) => write!(f, "mixed:{a},{b},{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub nvars: usize,
    pub nclauses: usize,
    pub widths: Widths,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("at least one variable is required")]
    NoVariables,
    #[error("width weights are all zero")]
    ZeroWeights,
    #[error("clauses of width {width} need {width} distinct variables, only {nvars} declared")]
    TooFewVariables { width: usize, nvars: usize },
    #[error("more than {max} variables requested", max = u32::MAX)]
    TooManyVariables,
}

pub fn generate(spec: &GenSpec) -> Result<Formula, GenError> {
    if spec.nvars == 0 {
        return Err(GenError::NoVariables);
    }
    if spec.nvars > u32::MAX as usize {
        return Err(GenError::TooManyVariables);
    }
    if let Widths::Mixed(w) = spec.widths {
        if w.iter().all(|&x| x == 0) {
            return Err(GenError::ZeroWeights);
        }
    }
    let max = spec.widths.max_width();
    if spec.nclauses > 0 && max > spec.nvars {
        return Err(GenError::TooFewVariables {
            width: max,
            nvars: spec.nvars,
        });
    }

    let mut rng = SplitMix64::new(spec.seed);
    let n = spec.nvars as u64;
    let mut clauses = Vec::with_capacity(spec.nclauses);
    for _ in 0..spec.nclauses {
        let width = match spec.widths {
            Widths::Fixed3 => 3,
            Widths::Mixed(w) => {
                let total: u64 = w.iter().map(|&x| u64::from(x)).sum();
                let mut r = rng.below(total);
                let mut width = 3;
                for (i, &x) in w.iter().enumerate() {
                    if r < u64::from(x) {
                        width = i + 1;
                        break;
                    }
                    r -= u64::from(x);
                }
                width
            }
        };
        let mut lits: Vec<Lit> = Vec::with_capacity(width);
        while lits.len() < width {
            let var = Var::new(1 + rng.below(n) as u32);
            if lits.iter().any(|l| l.var() == var) {
                continue;
            }
            lits.push(var.lit(rng.next_u64() >> 63 == 1));
        }
        clauses.push(XClause::from_lits_unchecked(lits));
    }
    Ok(Formula::new(spec.nvars, clauses).expect("variables drawn in range"))
}

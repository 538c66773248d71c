//! The `x3` instance format.
//!
//! DIMACS-flavoured, but with its own header so it is never mistaken for an
//! inclusive-or CNF file:
//!
//! ```text
//! c a=1 b=2 c=3 x=4 y=5
//! p x3 5 3
//! 1 2 3 0
//! 2 4 5 0
//! 3 4 -5 0
//! ```
//!
//! One clause per line: 1 to 3 nonzero signed integers followed by `0`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{Formula, FormulaError, Instance, Lit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("no `p x3 <nvars> <nclauses>` header")]
    MissingHeader,
    #[error("second header line")]
    DuplicateHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("clause before the header")]
    ClauseBeforeHeader,
    #[error("not an integer: {0:?}")]
    BadToken(String),
    #[error("variable id 0 inside a clause")]
    ZeroVariable,
    #[error("clause is not terminated by 0")]
    MissingTerminator,
    #[error("variable {var} exceeds declared count {nvars}")]
    VarOutOfRange { var: u64, nvars: usize },
    #[error("clause width {0} is outside 1..=3")]
    Width(usize),
    #[error("header declares {declared} clauses, found {found}")]
    CountMismatch { declared: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based; for a missing header or a count mismatch, the last line.
    pub line: usize,
    pub kind: ParseErrorKind,
}

/// A syntactically valid x3 file, before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct X3Document {
    pub nvars: usize,
    pub nclauses: usize,
    /// Raw clauses with their 1-based line numbers.
    pub clauses: Vec<(usize, Vec<Lit>)>,
    pub comments: Vec<String>,
}

pub fn parse_document(text: &str) -> Result<X3Document, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut comments = Vec::new();
    let mut last = 0;
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        last = line;
        let err = |kind| ParseError { line, kind };
        let trimmed = raw_line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "c" || trimmed.starts_with("c ") || trimmed.starts_with("c\t") {
            comments.push(trimmed[1..].trim().to_string());
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(err(ParseErrorKind::DuplicateHeader));
            }
            header = Some(parse_header(trimmed).map_err(err)?);
            continue;
        }
        let Some((nvars, _)) = header else {
            return Err(err(ParseErrorKind::ClauseBeforeHeader));
        };
        let values: Vec<i64> = trimmed
            .split_whitespace()
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| err(ParseErrorKind::BadToken(t.to_string())))
            })
            .collect::<Result<_, _>>()?;
        let Some((&0, body)) = values.split_last() else {
            return Err(err(ParseErrorKind::MissingTerminator));
        };
        if body.contains(&0) {
            return Err(err(ParseErrorKind::ZeroVariable));
        }
        if body.is_empty() || body.len() > 3 {
            return Err(err(ParseErrorKind::Width(body.len())));
        }
        if let Some(&v) = body.iter().find(|v| v.unsigned_abs() > nvars as u64) {
            return Err(err(ParseErrorKind::VarOutOfRange {
                var: v.unsigned_abs(),
                nvars,
            }));
        }
        let lits = body
            .iter()
            .map(|&v| Lit::from_dimacs(v).expect("nonzero and in range"))
            .collect();
        clauses.push((line, lits));
    }
    let Some((nvars, nclauses)) = header else {
        return Err(ParseError {
            line: last,
            kind: ParseErrorKind::MissingHeader,
        });
    };
    if clauses.len() != nclauses {
        return Err(ParseError {
            line: last,
            kind: ParseErrorKind::CountMismatch {
                declared: nclauses,
                found: clauses.len(),
            },
        });
    }
    Ok(X3Document {
        nvars,
        nclauses,
        clauses,
        comments,
    })
}

fn parse_header(line: &str) -> Result<(usize, usize), ParseErrorKind> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["p", "x3", n, m] => {
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| ParseErrorKind::BadHeader(format!("bad count {s:?}")))
            };
            let n = parse(n)?;
            if n > u32::MAX as usize {
                return Err(ParseErrorKind::BadHeader(format!("{n} variables")));
            }
            Ok((n, parse(m)?))
        }
        ["p", "cnf", ..] => Err(ParseErrorKind::BadHeader(
            "`p cnf` is inclusive-or CNF, not exactly-one; expected `p x3`".into(),
        )),
        _ => Err(ParseErrorKind::BadHeader(line.to_string())),
    }
}

/// Parses and normalizes an x3 file.
pub fn parse_x3(text: &str) -> Result<Instance, ParseError> {
    let doc = parse_document(text)?;
    let raw: Vec<Vec<Lit>> = doc.clauses.iter().map(|(_, c)| c.clone()).collect();
    Instance::from_raw(doc.nvars, &raw).map_err(|e| {
        // ranges and widths were checked above
        let kind = match e {
            FormulaError::Width(w) => ParseErrorKind::Width(w),
            FormulaError::VarOutOfRange { var, nvars } => ParseErrorKind::VarOutOfRange {
                var: var.into(),
                nvars,
            },
            other => unreachable!("{other}"),
        };
        ParseError { line: 0, kind }
    })
}

pub fn serialize_x3(f: &Formula) -> String {
    let mut out = format!("p x3 {} {}\n", f.nvars(), f.clauses().len());
    for c in f.clauses() {
        for l in c.lits() {
            write!(out, "{l} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{NormalizeOutcome, XClause};

    const EXAMPLE: &str = "c a=1 b=2 c=3 x=4 y=5\np x3 5 3\n1 2 3 0\n2 4 5 0\n3 4 -5 0\n";

    fn example() -> Formula {
        Formula::from_dimacs(5, &[&[1, 2, 3], &[2, 4, 5], &[3, 4, -5]])
    }

    fn kind(text: &str) -> (usize, ParseErrorKind) {
        let e = parse_x3(text).unwrap_err();
        (e.line, e.kind)
    }

    #[test]
    fn parses_example() {
        let inst = parse_x3(EXAMPLE).unwrap();
        assert_eq!(inst.formula, example());
        assert!(inst.events.is_empty());
        let doc = parse_document(EXAMPLE).unwrap();
        assert_eq!(doc.comments, vec!["a=1 b=2 c=3 x=4 y=5"]);
        assert_eq!(doc.clauses[0].0, 3);
    }

    #[test]
    fn serializes_example() {
        assert_eq!(
            serialize_x3(&example()),
            "p x3 5 3\n1 2 3 0\n2 4 5 0\n3 4 -5 0\n"
        );
        assert_eq!(serialize_x3(&Formula::empty(0)), "p x3 0 0\n");
    }

    #[test]
    fn empty_formula() {
        let inst = parse_x3("p x3 1 0\n").unwrap();
        assert_eq!(inst.formula, Formula::empty(1));
    }

    #[test]
    fn degenerate_clause_is_normalized() {
        let inst = parse_x3("p x3 2 1\n1 1 2 0\n").unwrap();
        let units = vec![
            XClause::new(vec![Lit::neg(1)]).unwrap(),
            XClause::new(vec![Lit::pos(2)]).unwrap(),
        ];
        assert_eq!(inst.formula, Formula::new(2, units).unwrap());
        assert_eq!(inst.events.len(), 1);
        assert_eq!(
            inst.events[0].outcome,
            NormalizeOutcome::Forced(vec![Lit::neg(1), Lit::pos(2)])
        );
    }

    #[test]
    fn contradiction_is_not_a_parse_error() {
        let inst = parse_x3("p x3 1 1\n1 1 1 0\n").unwrap();
        assert_eq!(inst.contradiction, Some(0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(kind("c nothing\n"), (1, ParseErrorKind::MissingHeader));
        assert_eq!(
            kind("p x3 2 0\np x3 2 0\n"),
            (2, ParseErrorKind::DuplicateHeader)
        );
        assert_eq!(
            kind("1 2 0\np x3 2 1\n"),
            (1, ParseErrorKind::ClauseBeforeHeader)
        );
        assert_eq!(
            kind("p x3 2 1\n1 0 2 0\n"),
            (2, ParseErrorKind::ZeroVariable)
        );
        assert_eq!(kind("p x3 2 1\n0\n"), (2, ParseErrorKind::Width(0)));
        assert_eq!(kind("p x3 4 1\n1 2 3 4 0\n"), (2, ParseErrorKind::Width(4)));
        assert_eq!(
            kind("p x3 2 1\n1 3 0\n"),
            (2, ParseErrorKind::VarOutOfRange { var: 3, nvars: 2 })
        );
        assert_eq!(
            kind("p x3 2 1\n1 2\n"),
            (2, ParseErrorKind::MissingTerminator)
        );
        assert_eq!(
            kind("p x3 2 2\n1 2 0\n"),
            (
                2,
                ParseErrorKind::CountMismatch {
                    declared: 2,
                    found: 1
                }
            )
        );
        assert_eq!(
            kind("p x3 2 1\n1 two 0\n"),
            (2, ParseErrorKind::BadToken("two".into()))
        );
        assert!(matches!(
            kind("p cnf 2 1\n1 2 0\n"),
            (1, ParseErrorKind::BadHeader(_))
        ));
        assert!(matches!(
            kind("p x3 -1 0\n"),
            (1, ParseErrorKind::BadHeader(_))
        ));
    }
}

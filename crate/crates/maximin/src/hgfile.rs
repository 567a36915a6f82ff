//! Text format for weighted hypergraphs.
//!
//! ```text
//! # comment
//! n 5
//! 1.0 0 1 2
//! 2.5 3 4     # trailing comments are allowed
//! ```
//!
//! The first non-comment line declares the vertex count. Every further line
//! is one edge: its weight followed by 0-based vertex ids. Repeated vertex
//! sets are merged by summing their weights.

use std::fmt::Write as _;
use std::path::Path;

use maximin_core::{Coalition, Hypergraph};

#[derive(Debug, thiserror::Error)]
pub enum HgError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no `n <count>` line found")]
    MissingHeader,
}

fn parse_err(line: usize, message: impl Into<String>) -> HgError {
    HgError::Parse { line, message: message.into() }
}

pub fn parse(text: &str) -> Result<Hypergraph, HgError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        let Some(count) = n else {
            if first != "n" {
                return Err(parse_err(line, format!("expected `n <count>`, found `{body}`")));
            }
            let value = tokens.next().ok_or_else(|| parse_err(line, "missing vertex count"))?;
            let count = value.parse::<usize>().map_err(|_| parse_err(line, format!("bad vertex count `{value}`")))?;
            if count > maximin_core::coalition::MAX_PLAYERS {
                return Err(parse_err(line, format!("{count} vertices exceed the limit of {}", maximin_core::coalition::MAX_PLAYERS)));
            }
            if let Some(extra) = tokens.next() {
                return Err(parse_err(line, format!("unexpected `{extra}` after the vertex count")));
            }
            n = Some(count);
            continue;
        };
        if first == "n" {
            return Err(parse_err(line, "vertex count declared twice"));
        }
        let weight = first.parse::<f64>().map_err(|_| parse_err(line, format!("bad weight `{first}`")))?;
        if !weight.is_finite() || weight < 0.0 {
            return Err(parse_err(line, format!("weight {weight} must be a finite non-negative real")));
        }
        let mut members = Coalition::empty();
        for tok in tokens {
            let v = tok.parse::<usize>().map_err(|_| parse_err(line, format!("bad vertex id `{tok}`")))?;
            if v >= count {
                return Err(parse_err(line, format!("vertex {v} out of range 0..{count}")));
            }
            members.insert(v);
        }
        if members.is_empty() {
            return Err(parse_err(line, "edge has no vertices"));
        }
        edges.push((members, weight));
    }
    let n = n.ok_or(HgError::MissingHeader)?;
    Hypergraph::new(n, edges).map_err(|e| parse_err(0, e.to_string()))
}

pub fn load(path: &Path) -> Result<Hypergraph, HgError> {
    let text = std::fs::read_to_string(path).map_err(|source| HgError::Io { path: path.display().to_string(), source })?;
    parse(&text)
}

/// Inverse of [`parse`]; weights round-trip exactly.
pub fn write(graph: &Hypergraph) -> String {
    let mut out = format!("n {}\n", graph.vertices());
    for e in graph.edges() {
        write!(out, "{:?}", e.weight).unwrap();
        for v in e.members.iter() {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let g = parse("# triangle\n\nn 3\n1 0 1\n1 1 2 # x\n1 0 2\n0.5 1 0\n").unwrap();
        assert_eq!(g.vertices(), 3);
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.edges()[0].weight, 1.5);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let cases = [
            ("1 0 1\n", 1),
            ("n 3\n1 0 3\n", 2),
            ("n 3\n\n-1 0\n", 3),
            ("n 3\nx 0\n", 2),
            ("n 3\n2\n", 2),
            ("n 3\nn 4\n", 2),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(HgError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(parse("# only\n"), Err(HgError::MissingHeader)));
    }

    #[test]
    fn empty_graph() {
        let g = parse("n 4\n").unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn round_trip() {
        let g = parse("n 6\n0.1 0 1 2\n3 4 5\n7.25 2\n").unwrap();
        assert_eq!(parse(&write(&g)).unwrap(), g);
    }
}

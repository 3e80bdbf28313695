//! System, partition and embedding files.
//!
//! Text systems: a header line `r m`, then `r` rows of `m` integers for `A`,
//! then optionally one row of `r` integers for `b` (zero when absent). Lines
//! whose first non-blank character is `#` are comments. JSON systems are
//! objects `{"A": [[..], ..], "b": [..]}` with `b` optional.

use std::fmt;

use num_bigint::BigInt;
use randsys::compounded::Embedding;
use randsys::{IntMatrix, Partition, PartitionFamily, SystemSpec};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        ParseError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ParseError {}

pub fn parse_system(src: &str) -> Result<SystemSpec, ParseError> {
    if src.trim_start().starts_with('{') {
        parse_json_system(src)
    } else {
        parse_text_system(src)
    }
}

fn parse_ints(line: &str, lineno: usize) -> Result<Vec<BigInt>, ParseError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<BigInt>()
                .map_err(|_| ParseError::at(lineno, format!("{tok:?} is not an integer")))
        })
        .collect()
}

fn parse_text_system(src: &str) -> Result<SystemSpec, ParseError> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines
        .next()
        .ok_or_else(|| ParseError::general("empty system file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| ParseError::at(hl, format!("{t:?} is not a count")))
        })
        .collect::<Result<_, _>>()?;
    let [r, m] = dims[..] else {
        return Err(ParseError::at(hl, "header must be \"r m\""));
    };
    if r == 0 || m == 0 {
        return Err(ParseError::at(hl, "r and m must be positive"));
    }
    let mut rows = Vec::with_capacity(r);
    for k in 0..r {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| ParseError::general(format!("expected {r} matrix rows, found {k}")))?;
        let row = parse_ints(line, ln)?;
        if row.len() != m {
            return Err(ParseError::at(
                ln,
                format!("expected {m} entries, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    let b = match lines.next() {
        Some((ln, line)) => {
            let b = parse_ints(line, ln)?;
            if b.len() != r {
                return Err(ParseError::at(
                    ln,
                    format!("b needs {r} entries, found {}", b.len()),
                ));
            }
            b
        }
        None => vec![BigInt::from(0); r],
    };
    if let Some((ln, _)) = lines.next() {
        return Err(ParseError::at(ln, "unexpected trailing line"));
    }
    build(rows, b)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSystem {
    #[serde(rename = "A")]
    a: Vec<Vec<Value>>,
    b: Option<Vec<Value>>,
}

fn json_int(v: &Value) -> Result<BigInt, ParseError> {
    match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string().parse().expect("integer")),
        Value::String(s) => s
            .parse()
            .map_err(|_| ParseError::general(format!("{s:?} is not an integer"))),
        other => Err(ParseError::general(format!("{other} is not an integer"))),
    }
}

fn parse_json_system(src: &str) -> Result<SystemSpec, ParseError> {
    let sys: JsonSystem =
        serde_json::from_str(src).map_err(|e| ParseError::general(e.to_string()))?;
    let rows: Vec<Vec<BigInt>> = sys
        .a
        .iter()
        .map(|row| row.iter().map(json_int).collect())
        .collect::<Result<_, _>>()?;
    let b = match sys.b {
        Some(b) => b.iter().map(json_int).collect::<Result<_, _>>()?,
        None => vec![BigInt::from(0); rows.len()],
    };
    build(rows, b)
}

fn build(rows: Vec<Vec<BigInt>>, b: Vec<BigInt>) -> Result<SystemSpec, ParseError> {
    let a = IntMatrix::from_big_rows(rows).map_err(|e| ParseError::general(e.to_string()))?;
    SystemSpec::new(a, b).map_err(|e| ParseError::general(e.to_string()))
}

/// The text form read by [`parse_system`]; `b` is always written.
pub fn format_system(spec: &SystemSpec) -> String {
    format_matrix(spec.matrix(), Some(spec.rhs()))
}

pub fn format_matrix(a: &IntMatrix, b: Option<&[BigInt]>) -> String {
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        out.push_str(&join(a.row(i)));
        out.push('\n');
    }
    if let Some(b) = b {
        out.push_str(&join(b));
        out.push('\n');
    }
    out
}

fn join(v: &[BigInt]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// JSON echo of a system; entries outside `i64` become strings.
pub fn system_json(spec: &SystemSpec) -> Value {
    let num = |v: &BigInt| match i64::try_from(v) {
        Ok(x) => Value::from(x),
        Err(_) => Value::from(v.to_string()),
    };
    let a = spec.matrix();
    serde_json::json!({
        "A": (0..a.rows()).map(|i| a.row(i).iter().map(num).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "b": spec.rhs().iter().map(num).collect::<Vec<_>>(),
    })
}

/// A JSON array of partitions, each an array of 1-based classes.
pub fn parse_partitions(src: &str, m: usize) -> Result<PartitionFamily, ParseError> {
    let parts: Vec<Partition> = serde_json::from_str(src)
        .map_err(|e| ParseError::general(format!("partition file: {e}")))?;
    PartitionFamily::new(parts, m).map_err(|e| ParseError::general(e.to_string()))
}

/// A JSON array of 1-based `[p, q]` pairs.
pub fn parse_embedding(src: &str, m_a: usize, m_b: usize) -> Result<Embedding, EmbeddingError> {
    let pairs: Vec<[usize; 2]> = serde_json::from_str(src)
        .map_err(|e| EmbeddingError::Parse(ParseError::general(e.to_string())))?;
    let zero_based = pairs
        .iter()
        .map(|&[p, q]| match (p.checked_sub(1), q.checked_sub(1)) {
            (Some(p), Some(q)) => Ok((p, q)),
            _ => Err(EmbeddingError::Parse(ParseError::general(
                "indices are 1-based",
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Embedding::new(zero_based, m_a, m_b).map_err(EmbeddingError::Invalid)
}

#[derive(Debug)]
pub enum EmbeddingError {
    Parse(ParseError),
    Invalid(randsys::Error),
}

/// A comma-separated list of positive integers; empty input gives an empty list.
pub fn parse_index_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(format!("{t:?} is not a positive index")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_agree() {
        let text = "# 3-AP\n1 3\n1 -2 1\n";
        let json = r#"{"A": [[1, -2, 1]]}"#;
        let a = parse_system(text).unwrap();
        assert_eq!(a, parse_system(json).unwrap());
        assert!(a.is_homogeneous());
        let with_b = parse_system("2 4\n1 1 1 1\n0 1 0 -1\n# rhs\n6 0\n").unwrap();
        assert_eq!(with_b.rhs(), &[BigInt::from(6), BigInt::from(0)]);
    }

    #[test]
    fn malformed_files() {
        for bad in [
            "",
            "1\n1 2\n",
            "1 3\n1 -2\n",
            "1 3\n1 x 1\n",
            "1 3\n1 -2 1\n0 0\n",
            "1 3\n1 -2 1\n0\n5\n",
            "2 2\n1 0\n0 1\n",
            r#"{"A": [[1, 2], [3]]}"#,
            r#"{"A": [[1, 2, 3]], "c": 1}"#,
        ] {
            assert!(parse_system(bad).is_err(), "{bad:?}");
        }
        let e = parse_system("1 3\n1 -2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn partitions_and_indices() {
        let fam = parse_partitions("[[[1],[2],[3]], [[3,1],[2]]]", 3).unwrap();
        assert_eq!(fam.len(), 2);
        assert!(parse_partitions("[[[1,2]]]", 3).is_err());
        assert!(parse_partitions("[[[0],[1,2]]]", 3).is_err());
        assert_eq!(parse_index_list("1, 3").unwrap(), vec![1, 3]);
        assert!(parse_index_list("").unwrap().is_empty());
        assert!(parse_index_list("0").is_err());
    }

    #[test]
    fn embeddings() {
        let e = parse_embedding("[[1,3],[2,1]]", 3, 3).unwrap();
        assert_eq!(e.pairs(), &[(0, 2), (1, 0)]);
        assert!(matches!(
            parse_embedding("[[1,3],[2,3]]", 3, 3),
            Err(EmbeddingError::Invalid(_))
        ));
        assert!(matches!(
            parse_embedding("[[0,1]]", 3, 3),
            Err(EmbeddingError::Parse(_))
        ));
    }
}

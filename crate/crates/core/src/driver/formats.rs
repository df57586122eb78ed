//! Matrix interchange formats: alist and dense 0/1 text.
//!
//! Alist layout (1-based indices on disk):
//!
//! ```text
//! n m                          columns, rows
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: row indices of each column, zero-padded to max_col_degree>
//! <m lines: column indices of each row, zero-padded to max_row_degree>
//! ```
//!
//! Dense text is one line of '0'/'1' characters per row. Detection: a first
//! line with a single 0/1 token is dense, anything else is treated as alist.
//! Write-then-read is the identity for both formats.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Alist,
    Dense,
}

impl std::fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatrixFormat::Alist => "alist",
            MatrixFormat::Dense => "dense",
        })
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "alist" => Ok(MatrixFormat::Alist),
            "dense" => Ok(MatrixFormat::Dense),
            other => Err(format!("unknown format {other:?} (expected alist or dense)")),
        }
    }
}

pub fn write_matrix(m: &BitMatrix, format: MatrixFormat) -> String {
    match format {
        MatrixFormat::Alist => write_alist(m),
        MatrixFormat::Dense => write_dense(m),
    }
}

pub fn write_alist(m: &BitMatrix) -> String {
    let (row_deg, col_deg) = m.row_col_weights();
    let max_col = col_deg.iter().copied().max().unwrap_or(0);
    let max_row = row_deg.iter().copied().max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.cols(), m.rows());
    let _ = writeln!(out, "{max_col} {max_row}");
    out.push_str(&join(col_deg.iter()));
    out.push('\n');
    out.push_str(&join(row_deg.iter()));
    out.push('\n');
    for j in 0..m.cols() {
        let mut entries: Vec<usize> = (0..m.rows()).filter(|&i| m.get(i, j)).map(|i| i + 1).collect();
        entries.resize(max_col, 0);
        out.push_str(&join(entries.iter()));
        out.push('\n');
    }
    for i in 0..m.rows() {
        let mut entries: Vec<usize> = (0..m.cols()).filter(|&j| m.get(i, j)).map(|j| j + 1).collect();
        entries.resize(max_row, 0);
        out.push_str(&join(entries.iter()));
        out.push('\n');
    }
    out
}

fn join<'a>(it: impl Iterator<Item = &'a usize>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn parse_alist(text: &str) -> Result<BitMatrix> {
    let mut tokens = text.split_whitespace().map(|t| {
        t.parse::<usize>()
            .map_err(|_| Error::Parse(format!("expected an integer, found {t:?}")))
    });
    let mut next = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of alist data, wanted {what}")))?
    };

    let cols = next("column count")?;
    let rows = next("row count")?;
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("alist dimensions must be positive".into()));
    }
    let max_col = next("max column degree")?;
    let max_row = next("max row degree")?;
    let col_deg: Vec<usize> = (0..cols)
        .map(|_| next("column degree"))
        .collect::<Result<_>>()?;
    let row_deg: Vec<usize> = (0..rows)
        .map(|_| next("row degree"))
        .collect::<Result<_>>()?;
    if col_deg.iter().any(|&d| d > max_col) || row_deg.iter().any(|&d| d > max_row) {
        return Err(Error::Parse("degree exceeds the declared maximum".into()));
    }

    let mut m = BitMatrix::zeros(rows, cols);
    for (j, &deg) in col_deg.iter().enumerate() {
        let mut seen = 0usize;
        for _ in 0..max_col {
            let v = next("column entry")?;
            if v == 0 {
                continue;
            }
            if v > rows {
                return Err(Error::Parse(format!(
                    "row index {v} out of range in column {j}"
                )));
            }
            m.set(v - 1, j, true);
            seen += 1;
        }
        if seen != deg {
            return Err(Error::Parse(format!(
                "column {j} declares degree {deg} but lists {seen} entries"
            )));
        }
    }
    // The per-row lists are redundant with the per-column lists; read and
    // cross-check them.
    for (i, &deg) in row_deg.iter().enumerate() {
        let mut seen = 0usize;
        for _ in 0..max_row {
            let v = next("row entry")?;
            if v == 0 {
                continue;
            }
            if v > cols {
                return Err(Error::Parse(format!(
                    "column index {v} out of range in row {i}"
                )));
            }
            if !m.get(i, v - 1) {
                return Err(Error::Parse(format!(
                    "row {i} lists column {v} absent from the column lists"
                )));
            }
            seen += 1;
        }
        if seen != deg {
            return Err(Error::Parse(format!(
                "row {i} declares degree {deg} but lists {seen} entries"
            )));
        }
    }
    if tokens.next().is_some() {
        return Err(Error::Parse("trailing data after alist entries".into()));
    }
    Ok(m)
}

pub fn write_dense(m: &BitMatrix) -> String {
    let mut out = String::with_capacity(m.rows() * (m.cols() + 1));
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out.push(if m.get(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

pub fn parse_dense(text: &str) -> Result<BitMatrix> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::Parse("empty dense matrix text".into()));
    }
    let cols = lines[0].len();
    let mut m = BitMatrix::zeros(lines.len(), cols);
    for (i, line) in lines.iter().enumerate() {
        if line.len() != cols {
            return Err(Error::Parse(format!(
                "row {i} has {} characters, expected {cols}",
                line.len()
            )));
        }
        for (j, ch) in line.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => m.set(i, j, true),
                other => {
                    return Err(Error::Parse(format!(
                        "unexpected character {other:?} in row {i}"
                    )))
                }
            }
        }
    }
    Ok(m)
}

/// Dense when the first non-empty line is a single 0/1 token, alist otherwise.
pub fn parse_matrix_auto(text: &str) -> Result<BitMatrix> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Parse("empty matrix text".into()))?;
    let mut tokens = first.split_whitespace();
    let head = tokens.next().unwrap_or("");
    let single = tokens.next().is_none();
    if single && head.chars().all(|c| c == '0' || c == '1') {
        parse_dense(text)
    } else {
        parse_alist(text)
    }
}

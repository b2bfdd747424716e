//! The alist sparse-matrix format.
//!
//! ```text
//! N M
//! max_col_degree max_row_degree
//! col_degree_1 ... col_degree_N
//! row_degree_1 ... row_degree_M
//! <N lines: 1-based check indices of each column, zero padded>
//! <M lines: 1-based variable indices of each row, zero padded>
//! ```
//!
//! The reader accepts lists with or without zero padding.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::BinaryMatrix;
use crate::error::{at, Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(format!("alist: {}", msg.into()))
}

/// Serializes `h` to alist text.
pub fn write_alist(h: &BinaryMatrix) -> String {
    let (m, n) = (h.num_rows(), h.num_cols());
    let row_lists: Vec<Vec<usize>> = (0..m).map(|c| h.row(c).support()).collect();
    let mut col_lists = vec![Vec::new(); n];
    for (c, row) in row_lists.iter().enumerate() {
        for &v in row {
            col_lists[v].push(c);
        }
    }
    let max_col = col_lists.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = row_lists.iter().map(Vec::len).max().unwrap_or(0);

    let mut out = String::new();
    let join = |xs: &mut dyn Iterator<Item = usize>| {
        xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "{n} {m}").unwrap();
    writeln!(out, "{max_col} {max_row}").unwrap();
    writeln!(out, "{}", join(&mut col_lists.iter().map(Vec::len))).unwrap();
    writeln!(out, "{}", join(&mut row_lists.iter().map(Vec::len))).unwrap();
    for list in &col_lists {
        let padded = list
            .iter()
            .map(|c| c + 1)
            .chain(std::iter::repeat(0))
            .take(max_col);
        writeln!(out, "{}", join(&mut padded.into_iter())).unwrap();
    }
    for list in &row_lists {
        let padded = list
            .iter()
            .map(|v| v + 1)
            .chain(std::iter::repeat(0))
            .take(max_row);
        writeln!(out, "{}", join(&mut padded.into_iter())).unwrap();
    }
    out
}

/// Parses alist text. Column and row lists must describe the same matrix.
pub fn read_alist(text: &str) -> Result<BinaryMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut next_numbers = |what: &str| -> Result<Vec<usize>> {
        let line = lines
            .next()
            .ok_or_else(|| parse_err(format!("missing {what}")))?;
        line.split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| parse_err(format!("bad integer {t:?} in {what}")))
            })
            .collect()
    };
    let dims = next_numbers("dimensions")?;
    let [n, m] = dims[..] else {
        return Err(parse_err("first line must be \"N M\""));
    };
    let _max_degrees = next_numbers("max degrees")?;
    let col_degrees = next_numbers("column degrees")?;
    let row_degrees = next_numbers("row degrees")?;
    if col_degrees.len() != n || row_degrees.len() != m {
        return Err(parse_err("degree list lengths do not match N M"));
    }
    let mut cols = Vec::with_capacity(n);
    for (v, &deg) in col_degrees.iter().enumerate() {
        let list: Vec<usize> = next_numbers(&format!("column {v}"))?
            .into_iter()
            .filter(|&x| x != 0)
            .collect();
        if list.len() != deg || list.iter().any(|&c| c > m) {
            return Err(parse_err(format!("column {v} list inconsistent")));
        }
        cols.push(list);
    }
    let mut rows = Vec::with_capacity(m);
    for (c, &deg) in row_degrees.iter().enumerate() {
        let mut list: Vec<usize> = next_numbers(&format!("row {c}"))?
            .into_iter()
            .filter(|&x| x != 0)
            .map(|x| x - 1)
            .collect();
        if list.len() != deg || list.iter().any(|&v| v >= n) {
            return Err(parse_err(format!("row {c} list inconsistent")));
        }
        list.sort_unstable();
        rows.push(list);
    }
    let h = BinaryMatrix::from_supports(&rows, n)?;
    for (v, list) in cols.iter().enumerate() {
        for &c in list {
            if !h.get(c - 1, v) {
                return Err(parse_err(format!(
                    "column {v} lists check {c} but row list disagrees"
                )));
            }
        }
    }
    if cols.iter().map(Vec::len).sum::<usize>() != h.count_ones() {
        return Err(parse_err("column and row lists have different edge counts"));
    }
    Ok(h)
}

pub fn load_alist(path: impl AsRef<Path>) -> Result<BinaryMatrix> {
    read_alist(&std::fs::read_to_string(path.as_ref()).map_err(at(path.as_ref()))?)
}

pub fn save_alist(h: &BinaryMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), write_alist(h)).map_err(at(path.as_ref()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_layout() {
        let h = BinaryMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let text = write_alist(&h);
        assert_eq!(text, "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n");
        assert_eq!(read_alist(&text).unwrap(), h);
    }

    #[test]
    fn unpadded_lists_parse() {
        let text = "3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n";
        let h = read_alist(text).unwrap();
        assert_eq!(h.to_dense(), vec![vec![1, 1, 0], vec![0, 1, 1]]);
    }

    #[test]
    fn inconsistent_lists_rejected() {
        let text = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n1 0\n1 2\n2 3\n";
        assert!(read_alist(text).is_err());
        assert!(read_alist("3\n").is_err());
        assert!(read_alist("").is_err());
    }
}

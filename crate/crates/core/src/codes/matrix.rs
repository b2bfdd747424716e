//! Dense binary matrices over GF(2), stored as packed row bitsets.

use std::fmt;

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD)
}

/// A packed GF(2) row vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut row = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                row.set(i, true);
            }
        }
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitRow) -> BitRow {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Size of the intersection of the two supports.
    pub fn overlap(&self, other: &BitRow) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Parity of the inner product over GF(2).
    pub fn dot(&self, other: &BitRow) -> bool {
        self.overlap(other) % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

/// An `M x N` binary parity-check matrix. Every row has at least one nonzero
/// entry.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: Vec<BitRow>,
    cols: usize,
}

impl BinaryMatrix {
    /// Builds a matrix from row-major 0/1 entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut packed = Vec::with_capacity(rows.len());
        for (c, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidMatrix(format!(
                    "row {c} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|&&b| b > 1) {
                return Err(Error::InvalidMatrix(format!(
                    "row {c} contains non-binary entry {bad}"
                )));
            }
            packed.push(BitRow::from_bits(row));
        }
        Self::from_bit_rows(packed, cols)
    }

    /// Builds a matrix from the column supports of each row.
    pub fn from_supports(supports: &[Vec<usize>], cols: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(supports.len());
        for (c, support) in supports.iter().enumerate() {
            let mut row = BitRow::zeros(cols);
            for &v in support {
                if v >= cols {
                    return Err(Error::InvalidMatrix(format!(
                        "row {c} references column {v} >= {cols}"
                    )));
                }
                row.set(v, true);
            }
            rows.push(row);
        }
        Self::from_bit_rows(rows, cols)
    }

    pub fn from_bit_rows(rows: Vec<BitRow>, cols: usize) -> Result<Self> {
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        for (c, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InvalidMatrix(format!(
                    "row {c} has length {}, expected {cols}",
                    row.len()
                )));
            }
            if row.is_zero() {
                return Err(Error::InvalidMatrix(format!("row {c} is all zero")));
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let supports: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        Self::from_supports(&supports, n)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row].get(col)
    }

    pub fn row(&self, row: usize) -> &BitRow {
        &self.rows[row]
    }

    pub fn rows(&self) -> &[BitRow] {
        &self.rows
    }

    /// Number of ones in the matrix.
    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(BitRow::count_ones).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(BitRow::to_bits).collect()
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        rank_of(self.rows.clone(), self.cols)
    }

    /// `H * x` over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        assert_eq!(bits.len(), self.cols, "syndrome: length mismatch");
        let x = BitRow::from_bits(bits);
        self.rows.iter().map(|r| r.dot(&x) as u8).collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        let x = BitRow::from_bits(bits);
        self.rows.iter().all(|r| !r.dot(&x))
    }

    /// Vertically stacks two matrices with equal column counts.
    pub fn stack(&self, other: &BinaryMatrix) -> Result<BinaryMatrix> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "cannot stack {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(Self {
            rows,
            cols: self.cols,
        })
    }

    /// A basis of the null space `{x : H x = 0}`, i.e. the rows of a
    /// generator matrix of the code defined by this parity-check matrix.
    pub fn null_space_basis(&self) -> Vec<BitRow> {
        let (reduced, pivots) = reduced_row_echelon(self.rows.clone(), self.cols);
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitRow::zeros(self.cols);
            v.set(free, true);
            for (r, &p) in pivots.iter().enumerate() {
                if reduced[r].get(free) {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        basis
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows.len(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "{r:?}")?;
        }
        Ok(())
    }
}

/// Rank of a set of rows via Gaussian elimination.
pub fn rank_of(rows: Vec<BitRow>, cols: usize) -> usize {
    reduced_row_echelon(rows, cols).1.len()
}

/// Returns the nonzero rows of the reduced row echelon form and the pivot
/// column of each.
fn reduced_row_echelon(mut rows: Vec<BitRow>, cols: usize) -> (Vec<BitRow>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..cols {
        let Some(found) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(next, found);
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        next += 1;
        if next == rows.len() {
            break;
        }
    }
    rows.truncate(next);
    (rows, pivots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_row_and_empty() {
        assert!(BinaryMatrix::from_rows(&[vec![1, 0], vec![0, 0]]).is_err());
        assert!(BinaryMatrix::from_rows(&[]).is_err());
        assert!(BinaryMatrix::from_rows(&[vec![2, 0]]).is_err());
        assert!(BinaryMatrix::from_rows(&[vec![1, 0], vec![1]]).is_err());
    }

    #[test]
    fn rank_and_null_space() {
        let h = BinaryMatrix::from_rows(&[vec![1, 1, 0, 1], vec![0, 1, 1, 1], vec![1, 0, 1, 0]])
            .unwrap();
        // third row is the sum of the first two
        assert_eq!(h.rank(), 2);
        let basis = h.null_space_basis();
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(h.is_codeword(&b.to_bits()));
        }
        assert_eq!(rank_of(basis, 4), 2);
    }

    #[test]
    fn wide_rows_cross_word_boundary() {
        let mut bits = vec![0u8; 130];
        bits[0] = 1;
        bits[64] = 1;
        bits[129] = 1;
        let h = BinaryMatrix::from_rows(&[bits.clone()]).unwrap();
        assert_eq!(h.count_ones(), 3);
        assert_eq!(h.row(0).support(), vec![0, 64, 129]);
        assert_eq!(h.syndrome(&bits), vec![1]);
    }
}

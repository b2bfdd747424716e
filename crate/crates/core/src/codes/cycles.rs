//! Length-4 cycle counting and greedy cycle reduction.

use rand::seq::SliceRandom;

use super::matrix::{BinaryMatrix, BitRow};
use crate::rng::seeded;

fn pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Number of length-4 cycles in the Tanner graph of `h`: the sum over
/// unordered row pairs of `C(overlap, 2)`.
pub fn count_4cycles(h: &BinaryMatrix) -> usize {
    let rows = h.rows();
    let mut total = 0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            total += pairs(rows[i].overlap(&rows[j]));
        }
    }
    total
}

/// Cycles contributed by `row` against every row of `rows` except `skip`.
fn row_cycles(rows: &[BitRow], row: &BitRow, skip: usize) -> usize {
    rows.iter()
        .enumerate()
        .filter(|&(k, _)| k != skip)
        .map(|(_, other)| pairs(row.overlap(other)))
        .sum()
}

/// Greedy hill climbing over row replacements `r_i <- r_i xor r_j`.
///
/// Each pass visits the ordered row pairs in a seeded random order and
/// accepts any replacement that strictly lowers the 4-cycle count. Stops
/// after `budget` passes or after a pass without an accepted move. The row
/// space and the number of rows are unchanged.
pub fn reduce_cycles(h: &BinaryMatrix, seed: u64, budget: usize) -> BinaryMatrix {
    let mut rows: Vec<BitRow> = h.rows().to_vec();
    let m = rows.len();
    let mut rng = seeded(seed, 0);
    let mut order: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    for _ in 0..budget {
        order.shuffle(&mut rng);
        let mut improved = false;
        for &(i, j) in &order {
            let candidate = rows[i].xor(&rows[j]);
            if candidate.is_zero() {
                continue;
            }
            let before = row_cycles(&rows, &rows[i], i);
            let after = row_cycles(&rows, &candidate, i);
            if after < before {
                rows[i] = candidate;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    BinaryMatrix::from_bit_rows(rows, h.num_cols()).expect("replacement rows are nonzero")
}

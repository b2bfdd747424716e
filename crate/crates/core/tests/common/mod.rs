//! Independent reference implementations shared by the test targets.

#![allow(dead_code)]

use commlearn::codes::BinaryMatrix;
use commlearn::rng::seeded;
use rand::Rng;

/// Flooding sum-product written directly from a dense parity-check matrix.
/// Returns the output LLRs of every iteration.
pub fn textbook_sum_product(h: &[Vec<u8>], llr: &[f64], iterations: usize) -> Vec<Vec<f64>> {
    let m = h.len();
    let n = llr.len();
    let clip = 15.0;
    // messages indexed [check][variable]; only entries with h = 1 are used
    let mut to_check = vec![vec![0.0f64; n]; m];
    let mut to_var = vec![vec![0.0f64; n]; m];
    let mut outputs = Vec::new();
    for _ in 0..iterations {
        for v in 0..n {
            for c in 0..m {
                if h[c][v] == 0 {
                    continue;
                }
                let mut sum = llr[v];
                for c2 in 0..m {
                    if c2 != c && h[c2][v] == 1 {
                        sum += to_var[c2][v];
                    }
                }
                to_check[c][v] = sum;
            }
        }
        for c in 0..m {
            let tanhs: Vec<f64> = (0..n).map(|v| (to_check[c][v] / 2.0).tanh()).collect();
            for v in 0..n {
                if h[c][v] == 0 {
                    continue;
                }
                let mut prod = 1.0;
                for v2 in 0..n {
                    if v2 != v && h[c][v2] == 1 {
                        prod *= tanhs[v2];
                    }
                }
                to_var[c][v] = (2.0 * prod.abs().atanh().copysign(prod)).clamp(-clip, clip);
            }
        }
        let out = (0..n)
            .map(|v| {
                let mut s = llr[v];
                for c in 0..m {
                    if h[c][v] == 1 {
                        s += to_var[c][v];
                    }
                }
                s
            })
            .collect();
        outputs.push(out);
    }
    outputs
}

/// Every codeword of `h` by exhaustive search over `2^n` words.
pub fn all_codewords(h: &BinaryMatrix) -> Vec<Vec<u8>> {
    let n = h.num_cols();
    assert!(n <= 20);
    (0u32..1 << n)
        .map(|w| (0..n).map(|i| ((w >> i) & 1) as u8).collect::<Vec<u8>>())
        .filter(|x| h.is_codeword(x))
        .collect()
}

/// Exact `P(x_v = 0 | y)` for a uniform prior over the codewords.
pub fn brute_force_posteriors(h: &BinaryMatrix, llr: &[f64]) -> Vec<f64> {
    let words = all_codewords(h);
    let logp: Vec<f64> = words
        .iter()
        .map(|x| {
            x.iter()
                .zip(llr)
                .map(|(&b, &l)| if b == 0 { l / 2.0 } else { -l / 2.0 })
                .sum()
        })
        .collect();
    let top = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logp.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    (0..llr.len())
        .map(|v| {
            words
                .iter()
                .zip(&weights)
                .filter(|(x, _)| x[v] == 0)
                .map(|(_, w)| w)
                .sum::<f64>()
                / total
        })
        .collect()
}

/// A random parity-check matrix whose Tanner graph is a tree: every new
/// check touches one earlier variable and at least one new one.
pub fn random_tree_code(seed: u64, max_vars: usize) -> BinaryMatrix {
    let mut rng = seeded(seed, 0);
    let mut supports: Vec<Vec<usize>> = Vec::new();
    let first = rng.random_range(2..=4usize.min(max_vars));
    supports.push((0..first).collect());
    let mut n = first;
    while n < max_vars {
        let fresh = rng.random_range(1..=3usize.min(max_vars - n));
        let anchor = rng.random_range(0..n);
        let mut row = vec![anchor];
        row.extend(n..n + fresh);
        n += fresh;
        supports.push(row);
        if rng.random_bool(0.2) {
            break;
        }
    }
    BinaryMatrix::from_supports(&supports, n).unwrap()
}

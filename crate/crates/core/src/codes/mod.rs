//! Parity-check matrices, Tanner graphs, BCH construction, cycle reduction
//! and code automorphisms.

mod alist;
mod bch;
mod cycles;
mod matrix;
mod perm;
mod tanner;

pub use alist::{load_alist, read_alist, save_alist, write_alist};
pub use bch::{bch_parity_check, BchCode, PRIMITIVE_POLYNOMIALS};
pub use cycles::{count_4cycles, reduce_cycles};
pub use matrix::{rank_of, BinaryMatrix, BitRow};
pub use perm::{cyclic_automorphism, sample_automorphism, sample_automorphism_with, Permutation};
pub use tanner::{build_tanner, TannerGraph};

/// Encodes random information words for the code `{x : H x = 0}` using a
/// null-space basis of `H`.
#[derive(Clone, Debug)]
pub struct Encoder {
    basis: Vec<BitRow>,
    n: usize,
}

impl Encoder {
    pub fn new(h: &BinaryMatrix) -> Self {
        Self {
            basis: h.null_space_basis(),
            n: h.num_cols(),
        }
    }

    /// Code dimension `K`.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn length(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.n as f64
    }

    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.basis.len(), "information word length");
        let mut word = BitRow::zeros(self.n);
        for (row, &bit) in self.basis.iter().zip(info) {
            if bit & 1 == 1 {
                word.xor_assign(row);
            }
        }
        word.to_bits()
    }

    pub fn random_codeword(&self, rng: &mut impl rand::Rng) -> Vec<u8> {
        let info: Vec<u8> = (0..self.dimension())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        self.encode(&info)
    }
}

/// Named built-in matrices: `bch-<n>-<k>` (standard) and
/// `bch-<n>-<k>-cr` (cycle reduced with the default seed and budget).
pub fn builtin_matrix(name: &str) -> crate::Result<BinaryMatrix> {
    let bad = || crate::Error::UnsupportedCode(format!("unknown built-in matrix {name:?}"));
    let parts: Vec<&str> = name.split('-').collect();
    let (n, k, reduced) = match parts.as_slice() {
        ["bch", n, k] => (n, k, false),
        ["bch", n, k, "cr"] => (n, k, true),
        _ => return Err(bad()),
    };
    let n: usize = n.parse().map_err(|_| bad())?;
    let k: usize = k.parse().map_err(|_| bad())?;
    let h = bch_parity_check(n, k)?;
    Ok(if reduced {
        reduce_cycles(&h, DEFAULT_CR_SEED, DEFAULT_CR_BUDGET)
    } else {
        h
    })
}

pub const DEFAULT_CR_SEED: u64 = 1;
pub const DEFAULT_CR_BUDGET: usize = 50;

//! Narrow-sense binary BCH codes of length `2^m - 1`.
//!
//! The generator polynomial is the product of the minimal polynomials of
//! `alpha^1 .. alpha^(d-1)` over GF(2^m), where `alpha` is a root of the
//! primitive polynomial listed in [`PRIMITIVE_POLYNOMIALS`]. Polynomials are
//! stored little-endian: index `i` holds the coefficient of `x^i`.

use super::matrix::BinaryMatrix;
use crate::error::{Error, Result};

/// Primitive polynomials for GF(2^m), `m = 3..=10`, as bit masks including
/// the leading term. For `m = 6` this is `x^6 + x + 1`.
pub const PRIMITIVE_POLYNOMIALS: [(u32, u32); 8] = [
    (3, 0b1011),
    (4, 0b1_0011),
    (5, 0b10_0101),
    (6, 0b100_0011),
    (7, 0b1000_1001),
    (8, 0b1_0001_1101),
    (9, 0b10_0001_0001),
    (10, 0b100_0000_1001),
];

/// Exp/log tables for GF(2^m).
struct GaloisField {
    order: usize,
    exp: Vec<u32>,
    log: Vec<usize>,
}

impl GaloisField {
    fn new(m: u32) -> Result<Self> {
        let poly = PRIMITIVE_POLYNOMIALS
            .iter()
            .find(|(deg, _)| *deg == m)
            .map(|(_, p)| *p)
            .ok_or_else(|| Error::UnsupportedCode(format!("no field table for m = {m}")))?;
        let order = (1usize << m) - 1;
        let mut exp = vec![0u32; 2 * order];
        let mut log = vec![0usize; order + 1];
        let mut x = 1u32;
        for i in 0..order {
            exp[i] = x;
            log[x as usize] = i;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Self { order, exp, log })
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] + self.log[b as usize]]
        }
    }

    fn alpha_pow(&self, i: usize) -> u32 {
        self.exp[i % self.order]
    }

    /// Cyclotomic coset of `i` under multiplication by 2 mod `order`.
    fn coset(&self, i: usize) -> Vec<usize> {
        let mut coset = vec![i % self.order];
        let mut j = (2 * i) % self.order;
        while j != coset[0] {
            coset.push(j);
            j = (2 * j) % self.order;
        }
        coset
    }

    /// Minimal polynomial over GF(2) of `alpha^i`.
    fn minimal_polynomial(&self, i: usize) -> Vec<u8> {
        // prod (x - alpha^j) over the coset, computed with field coefficients
        let mut poly: Vec<u32> = vec![1];
        for j in self.coset(i) {
            let root = self.alpha_pow(j);
            let mut next = vec![0u32; poly.len() + 1];
            for (d, &c) in poly.iter().enumerate() {
                next[d + 1] ^= c;
                next[d] ^= self.mul(c, root);
            }
            poly = next;
        }
        poly.into_iter()
            .map(|c| {
                debug_assert!(c <= 1, "minimal polynomial must be binary");
                c as u8
            })
            .collect()
    }
}

fn poly_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 1 {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= y;
            }
        }
    }
    out
}

/// Exact division over GF(2); returns `None` if there is a remainder.
fn poly_div_exact(num: &[u8], den: &[u8]) -> Option<Vec<u8>> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    if num.len() < den.len() {
        return None;
    }
    let mut quot = vec![0u8; num.len() - dd];
    for i in (0..quot.len()).rev() {
        if rem[i + dd] == 1 {
            quot[i] = 1;
            for (j, &d) in den.iter().enumerate() {
                rem[i + j] ^= d;
            }
        }
    }
    rem.iter().all(|&r| r == 0).then_some(quot)
}

/// A narrow-sense binary BCH code.
#[derive(Clone, Debug)]
pub struct BchCode {
    pub n: usize,
    pub k: usize,
    pub designed_distance: usize,
    /// Generator polynomial `g(x)`, degree `n - k`.
    pub generator: Vec<u8>,
    /// Parity polynomial `h(x) = (x^n - 1) / g(x)`, degree `k`.
    pub parity: Vec<u8>,
}

impl BchCode {
    /// Finds the narrow-sense BCH code of length `n` and dimension `k`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let m = (n + 1).trailing_zeros();
        if n < 7 || (1usize << m) != n + 1 {
            return Err(Error::UnsupportedCode(format!(
                "BCH length {n} is not of the form 2^m - 1"
            )));
        }
        let field = GaloisField::new(m)?;
        let mut generator = vec![1u8];
        let mut used = vec![false; n];
        for i in 1..n {
            // roots alpha^1 .. alpha^i give designed distance i + 1
            if !used[i] {
                for j in field.coset(i) {
                    used[j] = true;
                }
                generator = poly_mul(&generator, &field.minimal_polynomial(i));
            }
            let dim = n - (generator.len() - 1);
            if dim == k {
                let mut x_n_minus_1 = vec![0u8; n + 1];
                x_n_minus_1[0] = 1;
                x_n_minus_1[n] = 1;
                let parity =
                    poly_div_exact(&x_n_minus_1, &generator).expect("generator divides x^n - 1");
                let mut top = i;
                while top + 1 < n && used[top + 1] {
                    top += 1;
                }
                return Ok(Self {
                    n,
                    k,
                    designed_distance: top + 1,
                    generator,
                    parity,
                });
            }
            if dim < k {
                break;
            }
        }
        Err(Error::UnsupportedCode(format!(
            "no narrow-sense BCH code with (n, k) = ({n}, {k})"
        )))
    }

    /// The `(n-k) x n` parity-check matrix whose rows are the cyclic shifts
    /// of the reciprocal parity polynomial. Column `i` corresponds to `x^i`.
    pub fn parity_check_matrix(&self) -> BinaryMatrix {
        let (n, k) = (self.n, self.k);
        let rows: Vec<Vec<u8>> = (0..n - k)
            .map(|r| {
                (0..n)
                    .map(|i| {
                        let idx = (r + k + n - i) % n;
                        if idx <= k {
                            self.parity[idx]
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        BinaryMatrix::from_rows(&rows).expect("BCH parity rows are nonzero")
    }

    /// The `k x n` generator matrix whose rows are shifts of `g(x)`.
    pub fn generator_matrix(&self) -> BinaryMatrix {
        let (n, k) = (self.n, self.k);
        let rows: Vec<Vec<u8>> = (0..k)
            .map(|j| {
                let mut row = vec![0u8; n];
                row[j..j + self.generator.len()].copy_from_slice(&self.generator);
                row
            })
            .collect();
        BinaryMatrix::from_rows(&rows).expect("BCH generator rows are nonzero")
    }

    /// Non-systematic encoding `c(x) = m(x) g(x)`.
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.k, "information word length");
        let mut c = poly_mul(info, &self.generator);
        c.resize(self.n, 0);
        c
    }
}

/// Standard parity-check matrix of the narrow-sense BCH code `(n, k)`.
pub fn bch_parity_check(n: usize, k: usize) -> Result<BinaryMatrix> {
    Ok(BchCode::new(n, k)?.parity_check_matrix())
}

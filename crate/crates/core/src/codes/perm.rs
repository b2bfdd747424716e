//! Bit-position permutations and automorphisms of binary cyclic codes.

use crate::error::{Error, Result};
use crate::rng::seeded;

/// A bijection on `0..n`. `map[i]` is the image of position `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &x in &map {
            if x >= map.len() || seen[x] {
                return Err(Error::InvalidArgument(
                    "permutation map is not a bijection".into(),
                ));
            }
            seen[x] = true;
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "compose: length mismatch");
        Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { map: inv }
    }

    /// Moves the entry at position `i` to position `map[i]`.
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.len(), "apply: length mismatch");
        let mut out = vec![T::default(); x.len()];
        for (i, &v) in x.iter().enumerate() {
            out[self.map[i]] = v;
        }
        out
    }
}

/// Multiplicative order of 2 modulo odd `n`.
fn order_of_two(n: usize) -> usize {
    let mut x = 2 % n;
    let mut k = 1;
    while x != 1 % n {
        x = (2 * x) % n;
        k += 1;
    }
    k
}

fn check_cyclic_length(n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::UnsupportedCode(format!(
            "automorphisms need an odd cyclic code length, got {n}"
        )));
    }
    Ok(())
}

/// The automorphism `i -> 2^frobenius_power * i + shift (mod n)`.
pub fn cyclic_automorphism(n: usize, shift: usize, frobenius_power: usize) -> Result<Permutation> {
    check_cyclic_length(n)?;
    let mut scale = 1usize;
    for _ in 0..frobenius_power {
        scale = (2 * scale) % n;
    }
    let map = (0..n).map(|i| (scale * i + shift) % n).collect();
    Ok(Permutation { map })
}

/// Uniform sample from the group generated by the cyclic shift and the
/// doubling map. Both preserve every binary cyclic code of length `n`.
pub fn sample_automorphism(n: usize, seed: u64) -> Result<Permutation> {
    check_cyclic_length(n)?;
    let mut rng = seeded(seed, 0);
    sample_automorphism_with(n, &mut rng)
}

pub fn sample_automorphism_with(n: usize, rng: &mut impl rand::Rng) -> Result<Permutation> {
    check_cyclic_length(n)?;
    let power = rng.random_range(0..order_of_two(n));
    let shift = rng.random_range(0..n);
    cyclic_automorphism(n, shift, power)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_element() {
        assert!(cyclic_automorphism(63, 0, 0).unwrap().is_identity());
        assert!(cyclic_automorphism(63, 0, 6).unwrap().is_identity());
        assert_eq!(order_of_two(63), 6);
        assert_eq!(order_of_two(15), 4);
    }

    #[test]
    fn compose_and_inverse() {
        let a = cyclic_automorphism(15, 3, 1).unwrap();
        let b = cyclic_automorphism(15, 7, 2).unwrap();
        let ab = a.compose(&b);
        assert!(ab.compose(&ab.inverse()).is_identity());
        let x: Vec<usize> = (0..15).collect();
        assert_eq!(ab.apply(&x), a.apply(&b.apply(&x)));
        assert!(Permutation::from_map(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn rejects_even_length() {
        assert!(sample_automorphism(64, 1).is_err());
    }
}

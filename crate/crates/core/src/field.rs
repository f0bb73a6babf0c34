//! Arithmetic in GF(2^m) for 1 ≤ m ≤ 12, elements packed in the low `m` bits.
//!
//! Each field is built from the least primitive polynomial of its degree
//! (bit `i` of the modulus is the coefficient of `z^i`):
//!
//! | m | modulus | polynomial |
//! |---|---------|------------|
//! | 1 | `0x3` | z + 1 |
//! | 2 | `0x7` | z² + z + 1 |
//! | 3 | `0xb` | z³ + z + 1 |
//! | 4 | `0x13` | z⁴ + z + 1 |
//! | 5 | `0x25` | z⁵ + z² + 1 |
//! | 6 | `0x43` | z⁶ + z + 1 |
//! | 7 | `0x83` | z⁷ + z + 1 |
//! | 8 | `0x11d` | z⁸ + z⁴ + z³ + z² + 1 |
//! | 9 | `0x211` | z⁹ + z⁴ + 1 |
//! | 10 | `0x409` | z¹⁰ + z³ + 1 |
//! | 11 | `0x805` | z¹¹ + z² + 1 |
//! | 12 | `0x1053` | z¹² + z⁶ + z⁴ + z + 1 |

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 12;

const MODULI: [u32; MAX_DEGREE + 1] = [0, 0x3, 0x7, 0xb, 0x13, 0x25, 0x43, 0x83, 0x11d, 0x211, 0x409, 0x805, 0x1053];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryField {
    m: u32,
    modulus: u32,
}

impl BinaryField {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_DEGREE {
            return Err(Error::OutOfRange(format!("field degree {m} not in 1..={MAX_DEGREE}")));
        }
        Ok(Self { m: m as u32, modulus: MODULI[m] })
    }

    pub fn degree(&self) -> usize {
        self.m as usize
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        1 << self.m
    }

    /// Shift-and-add multiplication with reduction.
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let top = 1u32 << self.m;
        let (mut a, mut b, mut acc) = (a, b, 0u32);
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.modulus;
            }
        }
        acc
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let (mut base, mut acc) = (a, 1u32);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via a^(2^m − 2); `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.pow(a, (1u64 << self.m) - 2))
    }

    /// Multiplicative order of a nonzero element.
    pub fn element_order(&self, a: u32) -> u32 {
        assert!(a != 0, "zero has no multiplicative order");
        let mut x = a;
        let mut k = 1;
        while x != 1 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Matrix of `x ↦ s·x` as `m` row words (row `i` yields output bit `i`).
    pub fn mul_matrix(&self, s: u32) -> Vec<u64> {
        let m = self.m as usize;
        let cols: Vec<u32> = (0..m).map(|j| self.mul(s, 1 << j)).collect();
        (0..m).map(|i| cols.iter().enumerate().fold(0u64, |row, (j, c)| row | (((c >> i) & 1) as u64) << j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Polynomial remainder over F₂ on raw words, used only as an oracle.
    fn poly_mod(mut a: u64, b: u64) -> u64 {
        let db = 63 - b.leading_zeros();
        while a != 0 && 63 - a.leading_zeros() >= db {
            a ^= b << (63 - a.leading_zeros() - db);
        }
        a
    }

    fn is_irreducible(p: u64) -> bool {
        let d = 63 - p.leading_zeros();
        (2u64..(1 << (d / 2 + 1))).all(|q| poly_mod(p, q) != 0)
    }

    #[test]
    fn moduli_are_least_primitive() {
        for m in 1..=MAX_DEGREE {
            let f = BinaryField::new(m).unwrap();
            assert!(is_irreducible(f.modulus() as u64), "m={m}");
            let z = if m == 1 { 1 } else { 2 };
            assert_eq!(f.element_order(z), f.order() - 1, "z is not primitive for m={m}");
            // No smaller degree-m polynomial is primitive.
            for cand in (1u32 << m)..f.modulus() {
                if cand & 1 == 0 || !is_irreducible(cand as u64) {
                    continue;
                }
                let g = BinaryField { m: m as u32, modulus: cand };
                assert_ne!(g.element_order(z), g.order() - 1, "m={m} cand={cand:#x}");
            }
        }
    }

    #[test]
    fn field_axioms_small() {
        for m in 1..=6 {
            let f = BinaryField::new(m).unwrap();
            for a in 0..f.order() {
                assert_eq!(f.mul(a, 1), a);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..f.order() {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in [0, 1, f.order() - 1] {
                        assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn mul_matrix_matches_mul() {
        let f = BinaryField::new(5).unwrap();
        for s in 0..f.order() {
            let rows = f.mul_matrix(s);
            for x in 0..f.order() {
                let y = rows.iter().enumerate().fold(0u32, |y, (i, r)| y | (((r & x as u64).count_ones() & 1) << i));
                assert_eq!(y, f.mul(s, x));
            }
        }
    }

    #[test]
    fn degree_guard() {
        assert!(BinaryField::new(0).is_err());
        assert!(BinaryField::new(13).is_err());
    }
}

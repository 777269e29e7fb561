//! Small finite fields for codeword arithmetic.
//!
//! Prime fields use modular arithmetic directly; binary extension fields
//! GF(2^m) use exp/log tables built from a primitive polynomial. Elements are
//! stored as `u8`, so the field order is at most 256.

use crate::error::{Error, Result};

/// Default primitive polynomials for GF(2^m), m = 1..=8 (bit i = coefficient of x^i).
const PRIMITIVE_POLYS: [u16; 9] = [0, 0b11, 0b111, 0b1011, 0b10011, 0b100101, 0b1000011, 0b10001001, 0b100011101];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Prime,
    Binary { exp: Vec<u8>, log: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    order: u16,
    kind: Kind,
}

fn is_prime(q: u16) -> bool {
    q >= 2 && (2..q).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

impl Field {
    /// The field with `q` elements. Supports primes below 256 and powers of two up to 256.
    pub fn new(q: u16) -> Result<Self> {
        if q.is_power_of_two() && (4..=256).contains(&q) {
            let m = q.trailing_zeros() as usize;
            Ok(Self::binary_extension(m, PRIMITIVE_POLYS[m]))
        } else if is_prime(q) && q < 256 {
            Ok(Field {
                order: q,
                kind: Kind::Prime,
            })
        } else {
            Err(Error::Config(format!("no finite field of order {q} is supported")))
        }
    }

    /// GF(2^m) built from the given primitive polynomial (bit i = coefficient of x^i).
    pub fn binary_extension(m: usize, poly: u16) -> Self {
        assert!((1..=8).contains(&m), "extension degree out of range");
        let order = 1u16 << m;
        let period = (order - 1) as usize;
        let mut exp = vec![0u8; 2 * period];
        let mut log = vec![0u8; order as usize];
        let mut x: u16 = 1;
        for i in 0..period {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & order != 0 {
                x ^= poly;
            }
        }
        assert_eq!(x, 1, "polynomial is not primitive");
        for i in period..2 * period {
            exp[i] = exp[i - period];
        }
        Field {
            order,
            kind: Kind::Binary { exp, log },
        }
    }

    pub fn order(&self) -> u16 {
        self.order
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        match self.kind {
            Kind::Prime => ((a as u16 + b as u16) % self.order) as u8,
            Kind::Binary { .. } => a ^ b,
        }
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        match self.kind {
            Kind::Prime => ((self.order - a as u16) % self.order) as u8,
            Kind::Binary { .. } => a,
        }
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        match &self.kind {
            Kind::Prime => ((a as u16 * b as u16) % self.order) as u8,
            Kind::Binary { exp, log } => {
                if a == 0 || b == 0 {
                    0
                } else {
                    exp[log[a as usize] as usize + log[b as usize] as usize]
                }
            }
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self, a: u8) -> u8 {
        assert!(a != 0, "zero has no inverse");
        match &self.kind {
            Kind::Prime => {
                // a^(p-2) mod p
                let p = self.order as u32;
                let mut result = 1u32;
                let mut base = a as u32;
                let mut e = p - 2;
                while e > 0 {
                    if e & 1 == 1 {
                        result = result * base % p;
                    }
                    base = base * base % p;
                    e >>= 1;
                }
                result as u8
            }
            Kind::Binary { exp, log } => {
                let period = self.order as usize - 1;
                exp[(period - log[a as usize] as usize) % period]
            }
        }
    }

    /// `alpha^i` for binary extension fields (the primitive element's powers).
    pub fn alpha_pow(&self, i: usize) -> Option<u8> {
        match &self.kind {
            Kind::Prime => None,
            Kind::Binary { exp, .. } => Some(exp[i % (self.order as usize - 1)]),
        }
    }
}

/// Rank of a matrix over `field` by Gaussian elimination.
pub fn rank(field: &Field, rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = field.inv(m[rank][col]);
        for v in m[rank].iter_mut() {
            *v = field.mul(*v, inv);
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0 {
                let factor = m[r][col];
                for c in 0..ncols {
                    let t = field.mul(factor, m[rank][c]);
                    m[r][c] = field.sub(m[r][c], t);
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small_fields() {
        for q in [2u16, 3, 4, 5, 7, 8, 16, 64] {
            let f = Field::new(q).unwrap();
            for a in 0..q as u8 {
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1, "q={q} a={a}");
                }
                for b in 0..q as u8 {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert!(f.add(a, b) < q as u8);
                }
            }
        }
    }

    #[test]
    fn gf8_distributive() {
        let f = Field::new(8).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }

    #[test]
    fn unsupported_orders() {
        assert!(Field::new(6).is_err());
        assert!(Field::new(1).is_err());
    }

    #[test]
    fn rank_detects_dependence() {
        let f = Field::new(2).unwrap();
        let rows = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]];
        assert_eq!(rank(&f, &rows), 2);
        let f3 = Field::new(3).unwrap();
        assert_eq!(rank(&f3, &[vec![1, 2], vec![2, 1]]), 1);
    }
}

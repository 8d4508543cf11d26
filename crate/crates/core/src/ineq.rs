//! Bit-streaming check of `m·A + B ≥ n·C + D` over binary naturals.
//!
//! Bits of `m` and `n` are read least significant first. Two scratchpads,
//! seeded with `B` and `D`, accumulate the long multiplication; after every
//! step their lowest bit is settled, compared and discarded.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};

/// A natural number as a little-endian bit vector. Leading zeros are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BinaryNat {
    bits: Vec<bool>,
}

impl BinaryNat {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        BinaryNat { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_biguint(&self) -> BigUint {
        self.bits
            .iter()
            .rev()
            .fold(BigUint::zero(), |acc, &b| (acc << 1u32) + BigUint::from(b as u8))
    }

    fn padded(&self, len: usize) -> Vec<bool> {
        let mut v = self.bits.clone();
        v.resize(len.max(v.len()), false);
        v
    }
}

impl From<u64> for BinaryNat {
    fn from(x: u64) -> Self {
        BinaryNat::from(x as u128)
    }
}

impl From<u128> for BinaryNat {
    fn from(mut x: u128) -> Self {
        let mut bits = Vec::new();
        while x > 0 {
            bits.push(x & 1 == 1);
            x >>= 1;
        }
        BinaryNat { bits }
    }
}

impl From<&BigUint> for BinaryNat {
    fn from(x: &BigUint) -> Self {
        let n = x.bits();
        BinaryNat { bits: (0..n).map(|i| x.bit(i)).collect() }
    }
}

/// `0b1011` is binary (most significant bit first); anything else is decimal.
impl FromStr for BinaryNat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(b) = s.strip_prefix("0b") {
            if b.is_empty() || !b.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Input(format!("bad binary literal `{s}`")));
            }
            return Ok(BinaryNat { bits: b.chars().rev().map(|c| c == '1').collect() });
        }
        let v: BigUint = s
            .parse()
            .map_err(|_| Error::Input(format!("bad natural number `{s}`")))?;
        Ok(BinaryNat::from(&v))
    }
}

impl fmt::Display for BinaryNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_biguint())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamStats {
    /// Padded length of the coefficients `A, B, C, D`.
    pub operand_bits: usize,
    /// Largest scratchpad length observed, in bits.
    pub max_scratchpad: usize,
    pub steps: usize,
}

/// Little-endian scratchpad trimmed of leading zeros.
struct Scratch(VecDeque<bool>);

impl Scratch {
    fn new(bits: &[bool]) -> Self {
        let mut s = Scratch(bits.iter().copied().collect());
        s.trim();
        s
    }

    fn add(&mut self, x: &[bool]) {
        let n = self.0.len().max(x.len());
        self.0.resize(n, false);
        let mut carry = false;
        for (i, a) in self.0.iter_mut().enumerate() {
            let b = x.get(i).copied().unwrap_or(false);
            let s = *a ^ b ^ carry;
            carry = (*a && b) || (carry && (*a ^ b));
            *a = s;
        }
        if carry {
            self.0.push_back(true);
        }
        self.trim();
    }

    fn trim(&mut self) {
        while self.0.back() == Some(&false) {
            self.0.pop_back();
        }
    }

    /// Removes and returns the settled low bit.
    fn shift(&mut self) -> bool {
        let b = self.0.pop_front().unwrap_or(false);
        self.trim();
        b
    }
}

/// Whether `m·A + B ≥ n·C + D`.
pub fn check_weighted_inequality(
    m: &BinaryNat,
    a: &BinaryNat,
    b: &BinaryNat,
    n: &BinaryNat,
    c: &BinaryNat,
    d: &BinaryNat,
) -> bool {
    check_weighted_inequality_traced(m, a, b, n, c, d).0
}

pub fn check_weighted_inequality_traced(
    m: &BinaryNat,
    a: &BinaryNat,
    b: &BinaryNat,
    n: &BinaryNat,
    c: &BinaryNat,
    d: &BinaryNat,
) -> (bool, StreamStats) {
    let lm = m.len().max(n.len());
    let lc = [a, b, c, d].iter().map(|x| x.len()).max().unwrap_or(0);
    let (m, n) = (m.padded(lm), n.padded(lm));
    let (a, c) = (a.padded(lc), c.padded(lc));
    let mut left = Scratch::new(b.bits());
    let mut right = Scratch::new(d.bits());

    let mut out = true;
    let mut stats = StreamStats { operand_bits: lc, max_scratchpad: 0, steps: 0 };
    let mut i = 0;
    while i < lm || !left.0.is_empty() || !right.0.is_empty() {
        if i < lm {
            if m[i] {
                left.add(&a);
            }
            if n[i] {
                right.add(&c);
            }
        }
        stats.max_scratchpad = stats.max_scratchpad.max(left.0.len()).max(right.0.len());
        let (x, y) = (left.shift(), right.shift());
        if x != y {
            out = x;
        }
        i += 1;
    }
    stats.steps = i;
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check(m: u128, a: u128, b: u128, n: u128, c: u128, d: u128) -> (bool, StreamStats) {
        check_weighted_inequality_traced(
            &m.into(),
            &a.into(),
            &b.into(),
            &n.into(),
            &c.into(),
            &d.into(),
        )
    }

    fn exact(m: u128, a: u128, b: u128, n: u128, c: u128, d: u128) -> bool {
        let big = |x: u128| BigUint::from(x);
        big(m) * big(a) + big(b) >= big(n) * big(c) + big(d)
    }

    #[test]
    fn small_cases() {
        assert!(check(3, 2, 1, 2, 3, 0).0);
        assert!(!check(2, 3, 0, 3, 2, 1).0);
        assert!(check(0, 9, 5, 0, 7, 5).0);
        assert!(!check(0, 9, 4, 0, 7, 5).0);
        assert!(check(0, 0, 0, 0, 0, 0).0);
    }

    #[test]
    fn exhaustive_small_lattice() {
        for m in 0..6u128 {
            for n in 0..6u128 {
                for a in [0u128, 1, 5, 13] {
                    for c in [0u128, 2, 7, 15] {
                        for b in [0u128, 3, 12] {
                            for d in [0u128, 1, 9] {
                                let (got, st) = check(m, a, b, n, c, d);
                                assert_eq!(got, exact(m, a, b, n, c, d), "{m} {a} {b} {n} {c} {d}");
                                assert!(st.max_scratchpad <= st.operand_bits + 2);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn parsing() {
        assert_eq!("0b110".parse::<BinaryNat>().unwrap().to_biguint(), BigUint::from(6u8));
        assert_eq!("42".parse::<BinaryNat>().unwrap().to_biguint(), BigUint::from(42u8));
        assert!("0b12".parse::<BinaryNat>().is_err());
        assert!("-3".parse::<BinaryNat>().is_err());
    }

    #[test]
    fn padding_is_harmless() {
        let padded = BinaryNat::from_bits(vec![true, false, false, false, false]);
        let one = BinaryNat::from(1u64);
        let z = BinaryNat::default();
        assert!(check_weighted_inequality(&padded, &one, &z, &one, &one, &z));
    }

    proptest! {
        #[test]
        fn agrees_with_bigint(m: u128, a: u128, b: u128, n: u128, c: u128, d: u128) {
            let (got, st) = check(m, a, b, n, c, d);
            prop_assert_eq!(got, exact(m, a, b, n, c, d));
            prop_assert!(st.max_scratchpad <= st.operand_bits + 2);
        }

        #[test]
        fn both_directions_iff_equal(m in 0u128..64, a in 0u128..64, b in 0u128..64,
                                     n in 0u128..64, c in 0u128..64, d in 0u128..64) {
            let both = check(m, a, b, n, c, d).0 && check(n, c, d, m, a, b).0;
            prop_assert_eq!(both, m * a + b == n * c + d);
        }
    }
}

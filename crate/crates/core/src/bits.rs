//! Fixed-length bit strings.
//!
//! Bit `i` of a [`Bits`] is the `i`-th coordinate of the string. The textual
//! form lists coordinates in index order, so `"110"` has bit 0 and bit 1 set.
//! Boolean functions in this crate take their input packed into a `u64` with
//! the same convention (coordinate `i` is bit `i` of the word).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            len,
            words: SmallVec::from_elem(0, words_for(len)),
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self::zeros(len);
        for w in b.words.iter_mut() {
            *w = u64::MAX;
        }
        b.trim();
        b
    }

    /// Low `len` bits of `value`; `len` may exceed 64, in which case the
    /// high coordinates are zero.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut b = Self::zeros(len);
        if !b.words.is_empty() {
            b.words[0] = value;
        }
        b.trim();
        b
    }

    pub fn from_u128(value: u128, len: usize) -> Self {
        let mut b = Self::zeros(len);
        if !b.words.is_empty() {
            b.words[0] = value as u64;
        }
        if b.words.len() > 1 {
            b.words[1] = (value >> 64) as u64;
        }
        b.trim();
        b
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// The string packed into a `u64`. Fails when longer than 64 bits.
    pub fn to_u64(&self) -> Result<u64> {
        if self.len > 64 {
            return Err(Error::ArityTooLarge {
                arity: self.len,
                limit: 64,
            });
        }
        Ok(self.words.first().copied().unwrap_or(0))
    }

    pub fn to_u128(&self) -> Result<u128> {
        if self.len > 128 {
            return Err(Error::ArityTooLarge {
                arity: self.len,
                limit: 128,
            });
        }
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        Ok(lo | (hi << 64))
    }

    /// Bits `start..start+len` as a `u64` (`len <= 64`).
    pub fn slice_u64(&self, start: usize, len: usize) -> u64 {
        assert!(len <= 64 && start + len <= self.len);
        if len == 0 {
            return 0;
        }
        let (w, off) = (start / 64, start % 64);
        let mut out = self.words[w] >> off;
        if off != 0 && w + 1 < self.words.len() {
            out |= self.words[w + 1] << (64 - off);
        }
        if len < 64 {
            out &= (1u64 << len) - 1;
        }
        out
    }

    /// Sub-string `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len);
        let mut out = Bits::zeros(len);
        for j in 0..len {
            out.set(j, self.get(start + j));
        }
        out
    }

    pub fn concat(parts: &[&Bits]) -> Bits {
        let total = parts.iter().map(|p| p.len()).sum();
        let mut out = Bits::zeros(total);
        let mut at = 0;
        for p in parts {
            for j in 0..p.len() {
                out.set(at + j, p.get(j));
            }
            at += p.len();
        }
        out
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        self.zip_words(other, |a, b| a ^ b)
    }

    pub fn and(&self, other: &Bits) -> Result<Bits> {
        self.zip_words(other, |a, b| a & b)
    }

    fn zip_words(&self, other: &Bits, op: impl Fn(u64, u64) -> u64) -> Result<Bits> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Bits {
            len: self.len,
            words,
        })
    }

    /// Parity of the AND of the two strings.
    pub fn dot(&self, other: &Bits) -> Result<bool> {
        Ok(self.and(other)?.count_ones() & 1 == 1)
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut b = Bits::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => b.set(i, true),
                other => return Err(Error::Parse(format!("invalid bit character {other:?}"))),
            }
        }
        Ok(b)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.iter() {
            f.write_str(if v { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl Serialize for Bits {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_use_index_order() {
        let b: Bits = "1101".parse().unwrap();
        assert!(b.get(0) && b.get(1) && !b.get(2) && b.get(3));
        assert_eq!(b.to_u64().unwrap(), 0b1011);
        assert_eq!(b.to_string(), "1101");
    }

    #[test]
    fn long_strings_span_words() {
        let mut b = Bits::zeros(130);
        b.set(129, true);
        b.set(64, true);
        assert_eq!(b.count_ones(), 2);
        assert!(b.to_u64().is_err());
        assert_eq!(
            b.to_u128().unwrap_err(),
            Error::ArityTooLarge {
                arity: 130,
                limit: 128
            }
        );
        assert_eq!(Bits::ones(70).count_ones(), 70);
    }

    #[test]
    fn xor_checks_lengths() {
        let a = Bits::zeros(3);
        let b = Bits::zeros(4);
        assert_eq!(
            a.xor(&b),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 4
            })
        );
    }

    #[test]
    fn slices_and_concat() {
        let b: Bits = "0011010".parse().unwrap();
        assert_eq!(b.slice(2, 3).to_string(), "110");
        assert_eq!(b.slice_u64(2, 3), 0b011);
        let c = Bits::concat(&[&b.slice(0, 2), &b.slice(2, 5)]);
        assert_eq!(c, b);
    }
}

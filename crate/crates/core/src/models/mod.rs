//! Boolean functions and the computational models they are tested against.
//!
//! Every function takes its input packed into a `u64`: coordinate `i` is bit
//! `i`. Arity is therefore capped at [`MAX_ARITY`]; anything that needs a
//! materialized truth table is further capped at [`MAX_TABLE_ARITY`].

mod bp2;
mod fourier;
mod junta;
mod sparse;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

pub use bp2::{decompose_2bp, eval_2bp, BranchingProgram2, Decomposition, Node};
pub use fourier::{fourier_expand, l1_norm, FourierSpectrum, MAX_FOURIER_ARITY};
pub use junta::{eval_xor_of_juntas, Junta, XorOfJuntas};
pub use sparse::{
    eval_sparse, is_set_multilinear, junta_to_sparse, Partition, SparsePolyF2, MAX_SPARSE_SUPPORT,
};

pub const MAX_ARITY: usize = 64;
pub const MAX_TABLE_ARITY: usize = 24;

/// A total, deterministic predicate on `{0,1}^arity`.
pub trait BooleanFunction: Send + Sync {
    fn arity(&self) -> usize;

    /// Evaluate on the input packed into the low `arity` bits of `x`.
    /// Bits above the arity are ignored.
    fn eval(&self, x: u64) -> bool;

    fn eval_bits(&self, x: &Bits) -> Result<bool> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: x.len(),
            });
        }
        Ok(self.eval(x.to_u64()?))
    }

    fn truth_table(&self) -> Result<TruthTable> {
        TruthTable::from_function(self)
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for &T {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, x: u64) -> bool {
        (**self).eval(x)
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for Box<T> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, x: u64) -> bool {
        (**self).eval(x)
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for Arc<T> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, x: u64) -> bool {
        (**self).eval(x)
    }
}

pub type DynFunction = Arc<dyn BooleanFunction>;

pub(crate) fn check_table_arity(arity: usize) -> Result<()> {
    if arity > MAX_TABLE_ARITY {
        return Err(Error::ArityTooLarge {
            arity,
            limit: MAX_TABLE_ARITY,
        });
    }
    Ok(())
}

/// A materialized truth table; entry `x` is `f(x)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    arity: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn zeros(arity: usize) -> Result<Self> {
        check_table_arity(arity)?;
        Ok(TruthTable {
            arity,
            words: vec![0; (1usize << arity).div_ceil(64)],
        })
    }

    pub fn from_function<F: BooleanFunction + ?Sized>(f: &F) -> Result<Self> {
        let arity = f.arity();
        check_table_arity(arity)?;
        let size = 1u64 << arity;
        let words: Vec<u64> = (0..(size as usize).div_ceil(64))
            .into_par_iter()
            .map(|w| {
                let base = (w as u64) * 64;
                let mut word = 0u64;
                for j in 0..64u64.min(size - base) {
                    if f.eval(base + j) {
                        word |= 1 << j;
                    }
                }
                word
            })
            .collect();
        Ok(TruthTable { arity, words })
    }

    pub fn from_fn(arity: usize, f: impl Fn(u64) -> bool + Send + Sync) -> Result<Self> {
        Self::from_function(&FnFunction::new(arity, f))
    }

    pub fn len(&self) -> usize {
        1 << self.arity
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, x: u64) -> bool {
        (self.words[(x >> 6) as usize] >> (x & 63)) & 1 == 1
    }

    pub fn set(&mut self, x: u64, v: bool) {
        let (w, b) = ((x >> 6) as usize, x & 63);
        if v {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of inputs where the two tables disagree.
    pub fn disagreements(&self, other: &TruthTable) -> Result<u64> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: other.arity,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum())
    }

    /// Hex rendering with entry 0 in the least significant bit of the last digit.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nib = 0u32;
            for j in 0..4 {
                let x = (d * 4 + j) as u64;
                if x < self.len() as u64 && self.get(x) {
                    nib |= 1 << j;
                }
            }
            s.push(char::from_digit(nib, 16).unwrap());
        }
        s
    }

    pub fn from_hex(arity: usize, hex: &str) -> Result<Self> {
        let mut t = Self::zeros(arity)?;
        let digits: Vec<char> = hex.trim_start_matches("0x").chars().collect();
        let needed = t.len().div_ceil(4);
        if digits.len() > needed {
            return Err(Error::Parse(format!(
                "table hex has {} digits, arity {arity} needs at most {needed}",
                digits.len()
            )));
        }
        for (pos, c) in digits.iter().rev().enumerate() {
            let nib = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("invalid hex digit {c:?}")))?;
            for j in 0..4 {
                if nib >> j & 1 == 1 {
                    let x = (pos * 4 + j) as u64;
                    if x >= t.len() as u64 {
                        return Err(Error::Parse("table hex sets bits beyond the table".into()));
                    }
                    t.set(x, true);
                }
            }
        }
        Ok(t)
    }
}

impl BooleanFunction for TruthTable {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        self.get(x & ((1u64 << self.arity) - 1))
    }
    fn truth_table(&self) -> Result<TruthTable> {
        Ok(self.clone())
    }
}

impl std::fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TruthTable(n={}, {})", self.arity, self.to_hex())
    }
}

/// Wraps a closure as a [`BooleanFunction`].
pub struct FnFunction<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(u64) -> bool + Send + Sync> FnFunction<F> {
    pub fn new(arity: usize, f: F) -> Self {
        assert!(arity <= MAX_ARITY, "arity {arity} exceeds {MAX_ARITY}");
        FnFunction { arity, f }
    }
}

impl<F: Fn(u64) -> bool + Send + Sync> BooleanFunction for FnFunction<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        (self.f)(x)
    }
}

#[inline]
pub(crate) fn arity_mask(arity: usize) -> u64 {
    if arity >= 64 {
        u64::MAX
    } else {
        (1u64 << arity) - 1
    }
}

/// Parity of the bits selected by `mask`, optionally negated. Covers all
/// affine functions; `Parity::full(n)` is the parity of all `n` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parity {
    pub arity: usize,
    pub mask: u64,
    pub negate: bool,
}

impl Parity {
    pub fn full(arity: usize) -> Self {
        Parity {
            arity,
            mask: arity_mask(arity),
            negate: false,
        }
    }

    pub fn affine(arity: usize, mask: u64, negate: bool) -> Self {
        Parity {
            arity,
            mask: mask & arity_mask(arity),
            negate,
        }
    }

    pub fn dictator(arity: usize, i: usize) -> Self {
        assert!(i < arity);
        Parity::affine(arity, 1 << i, false)
    }

    pub fn constant(arity: usize, value: bool) -> Self {
        Parity::affine(arity, 0, value)
    }
}

impl BooleanFunction for Parity {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        ((x & self.mask).count_ones() & 1 == 1) ^ self.negate
    }
}

/// AND of the bits selected by `mask` (the empty AND is 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct And {
    pub arity: usize,
    pub mask: u64,
}

impl BooleanFunction for And {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        x & self.mask == self.mask
    }
}

/// `1 - f`.
pub struct Negated<F>(pub F);

impl<F: BooleanFunction> BooleanFunction for Negated<F> {
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn eval(&self, x: u64) -> bool {
        !self.0.eval(x)
    }
}

/// Indices of the coordinates `f` actually depends on, found exhaustively.
pub fn relevant_variables<F: BooleanFunction + ?Sized>(f: &F) -> Result<Vec<usize>> {
    let t = TruthTable::from_function(f)?;
    let n = t.arity;
    Ok((0..n)
        .filter(|&i| {
            let bit = 1u64 << i;
            (0..(1u64 << n)).any(|x| x & bit == 0 && t.get(x) != t.get(x | bit))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table_hex_roundtrip() {
        let t = TruthTable::from_fn(3, |x| x.count_ones() >= 2).unwrap();
        // inputs 3,5,6,7 -> bits 0b1110_1000
        assert_eq!(t.to_hex(), "e8");
        assert_eq!(TruthTable::from_hex(3, "e8").unwrap(), t);
        assert!(TruthTable::from_hex(2, "e8").is_err());
        assert!(TruthTable::from_hex(1, "4").is_err());
    }

    #[test]
    fn materialization_limit() {
        let f = Parity::full(25);
        assert_eq!(
            f.truth_table(),
            Err(Error::ArityTooLarge {
                arity: 25,
                limit: 24
            })
        );
    }

    #[test]
    fn relevant_variables_of_and() {
        let f = And {
            arity: 5,
            mask: 0b10010,
        };
        assert_eq!(relevant_variables(&f).unwrap(), vec![1, 4]);
    }

    #[test]
    fn eval_bits_checks_arity() {
        let f = Parity::full(3);
        assert!(f.eval_bits(&"110".parse().unwrap()).is_ok());
        assert_eq!(
            f.eval_bits(&"11".parse().unwrap()),
            Err(Error::ArityMismatch {
                expected: 3,
                got: 2
            })
        );
    }
}

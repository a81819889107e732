use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{BooleanFunction, Junta, MAX_ARITY};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::restriction::{Cell, Restriction};

/// Largest junta support [`junta_to_sparse`] will expand.
pub const MAX_SPARSE_SUPPORT: usize = 20;

/// A polynomial over F2 in multilinear form.
///
/// Monomials are stored as variable bitmasks. Duplicates cancel in pairs at
/// construction and the empty monomial folds into the constant term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePolyF2 {
    arity: usize,
    monomials: BTreeSet<u64>,
    constant: bool,
}

impl SparsePolyF2 {
    pub fn new(arity: usize, monomials: &[Vec<usize>], constant: bool) -> Result<Self> {
        let mut masks = Vec::with_capacity(monomials.len());
        for m in monomials {
            let mut mask = 0u64;
            for &i in m {
                if i >= arity {
                    return Err(Error::ShapeMismatch(format!(
                        "monomial variable {i} out of range for arity {arity}"
                    )));
                }
                mask |= 1 << i;
            }
            masks.push(mask);
        }
        Self::from_masks(arity, masks, constant)
    }

    pub fn from_masks(
        arity: usize,
        masks: impl IntoIterator<Item = u64>,
        constant: bool,
    ) -> Result<Self> {
        if arity > MAX_ARITY {
            return Err(Error::ArityTooLarge {
                arity,
                limit: MAX_ARITY,
            });
        }
        let mut set = BTreeSet::new();
        let mut constant = constant;
        for m in masks {
            if m == 0 {
                constant = !constant;
            } else if !set.insert(m) {
                set.remove(&m);
            }
        }
        Ok(SparsePolyF2 {
            arity,
            monomials: set,
            constant,
        })
    }

    pub fn monomials(&self) -> impl Iterator<Item = u64> + '_ {
        self.monomials.iter().copied()
    }

    pub fn monomial_count(&self) -> usize {
        self.monomials.len()
    }

    pub fn constant(&self) -> bool {
        self.constant
    }

    pub fn degree(&self) -> u32 {
        self.monomials
            .iter()
            .map(|m| m.count_ones())
            .max()
            .unwrap_or(0)
    }

    /// Substitute the fixed cells of `rho`; the result keeps the same arity
    /// and only mentions alive variables.
    pub fn restrict(&self, rho: &Restriction) -> Result<SparsePolyF2> {
        if rho.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: rho.len(),
            });
        }
        let mut zeros = 0u64;
        let mut ones = 0u64;
        for (i, c) in rho.cells().iter().enumerate() {
            match c {
                Cell::Zero => zeros |= 1 << i,
                Cell::One => ones |= 1 << i,
                Cell::Star => {}
            }
        }
        let masks = self
            .monomials
            .iter()
            .filter(|&&m| m & zeros == 0)
            .map(|&m| m & !ones)
            .collect::<Vec<_>>();
        Self::from_masks(self.arity, masks, self.constant)
    }
}

impl BooleanFunction for SparsePolyF2 {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        self.monomials
            .iter()
            .fold(self.constant, |acc, &m| acc ^ (x & m == m))
    }
}

pub fn eval_sparse(p: &SparsePolyF2, x: &Bits) -> Result<bool> {
    p.eval_bits(x)
}

#[derive(Serialize, Deserialize)]
struct SparseWire {
    arity: usize,
    monomials: Vec<Vec<usize>>,
    constant: bool,
}

impl Serialize for SparsePolyF2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let monomials = self
            .monomials
            .iter()
            .map(|&m| (0..64).filter(|i| m >> i & 1 == 1).collect())
            .collect();
        SparseWire {
            arity: self.arity,
            monomials,
            constant: self.constant,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparsePolyF2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = SparseWire::deserialize(d)?;
        SparsePolyF2::new(w.arity, &w.monomials, w.constant).map_err(serde::de::Error::custom)
    }
}

/// Disjoint, nonempty variable blocks. Need not cover every variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::ShapeMismatch("partition block is empty".into()));
            }
            for &i in b {
                if i >= MAX_ARITY {
                    return Err(Error::ShapeMismatch(format!("variable {i} out of range")));
                }
                if !seen.insert(i) {
                    return Err(Error::ShapeMismatch(format!(
                        "variable {i} appears in two blocks"
                    )));
                }
            }
        }
        Ok(Partition { blocks })
    }

    /// `count` contiguous blocks of `size` variables starting at 0.
    pub fn contiguous(count: usize, size: usize) -> Result<Self> {
        Self::new(
            (0..count)
                .map(|b| (b * size..(b + 1) * size).collect())
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_masks(&self) -> Vec<u64> {
        self.blocks
            .iter()
            .map(|b| b.iter().fold(0u64, |m, &i| m | 1 << i))
            .collect()
    }

    pub fn covered_mask(&self) -> u64 {
        self.block_masks().iter().fold(0, |a, b| a | b)
    }
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;
    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        Partition::new(blocks)
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.blocks
    }
}

/// Whether every monomial of `p` meets every block of `q` in at most one
/// variable. Variables of `p` outside all blocks are an error.
pub fn is_set_multilinear(p: &SparsePolyF2, q: &Partition) -> Result<bool> {
    let blocks = q.block_masks();
    let covered = blocks.iter().fold(0u64, |a, b| a | b);
    for m in p.monomials() {
        let stray = m & !covered;
        if stray != 0 {
            return Err(Error::UncoveredVariable(stray.trailing_zeros() as usize));
        }
    }
    Ok(p.monomials()
        .all(|m| blocks.iter().all(|b| (m & b).count_ones() <= 1)))
}

/// Algebraic normal form of a junta via the subset Moebius transform of its table.
pub fn junta_to_sparse(j: &Junta) -> Result<SparsePolyF2> {
    let d = j.support().len();
    if d > MAX_SPARSE_SUPPORT {
        return Err(Error::SupportTooLarge {
            size: d,
            limit: MAX_SPARSE_SUPPORT,
        });
    }
    let size = 1usize << d;
    let mut coeff: Vec<u8> = (0..size as u64).map(|y| j.table().get(y) as u8).collect();
    let mut step = 1;
    while step < size {
        for y in 0..size {
            if y & step != 0 {
                coeff[y] ^= coeff[y ^ step];
            }
        }
        step <<= 1;
    }
    let support = j.support();
    let masks = (0..size).filter(|&y| coeff[y] == 1).map(|y| {
        (0..d)
            .filter(|&k| y >> k & 1 == 1)
            .fold(0u64, |m, k| m | 1 << support[k])
    });
    SparsePolyF2::from_masks(j.arity(), masks, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(arity: usize, monos: &[&[usize]], c: bool) -> SparsePolyF2 {
        let v: Vec<Vec<usize>> = monos.iter().map(|m| m.to_vec()).collect();
        SparsePolyF2::new(arity, &v, c).unwrap()
    }

    #[test]
    fn duplicates_cancel() {
        let p = poly(3, &[&[0, 1], &[1, 0], &[2]], false);
        assert_eq!(p.monomial_count(), 1);
        assert_eq!(p.degree(), 1);
        let q = poly(3, &[&[], &[]], true);
        assert!(q.constant());
    }

    #[test]
    fn eval_example() {
        let p = poly(3, &[&[0, 1], &[2]], false);
        assert!(!eval_sparse(&p, &"111".parse().unwrap()).unwrap());
        assert!(eval_sparse(&p, &"110".parse().unwrap()).unwrap());
    }

    #[test]
    fn set_multilinear_examples() {
        let x1x2 = poly(3, &[&[0, 1]], false);
        let split = Partition::new(vec![vec![0], vec![1]]).unwrap();
        let joint = Partition::new(vec![vec![0, 1]]).unwrap();
        assert!(is_set_multilinear(&x1x2, &split).unwrap());
        assert!(!is_set_multilinear(&x1x2, &joint).unwrap());
        let p = poly(3, &[&[0, 1], &[2]], false);
        let q = Partition::new(vec![vec![0, 2], vec![1]]).unwrap();
        assert!(is_set_multilinear(&p, &q).unwrap());
        let r = Partition::new(vec![vec![0], vec![1]]).unwrap();
        assert_eq!(is_set_multilinear(&p, &r), Err(Error::UncoveredVariable(2)));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0, 1], vec![1]]).is_err());
        assert!(Partition::new(vec![vec![]]).is_err());
        let p: Partition = serde_json::from_str("[[0,1],[2]]").unwrap();
        assert_eq!(p.blocks().len(), 2);
        assert!(serde_json::from_str::<Partition>("[[0],[0]]").is_err());
    }

    #[test]
    fn small_juntas_to_anf() {
        let dict = Junta::dictator(4, 2).unwrap();
        assert_eq!(junta_to_sparse(&dict).unwrap(), poly(4, &[&[2]], false));
        let and = Junta::from_fn(4, vec![1, 3], |y| y == 3).unwrap();
        assert_eq!(junta_to_sparse(&and).unwrap(), poly(4, &[&[1, 3]], false));
        let nand = Junta::from_fn(2, vec![0, 1], |y| y != 3).unwrap();
        assert_eq!(junta_to_sparse(&nand).unwrap(), poly(2, &[&[0, 1]], true));
    }

    #[test]
    fn support_limit() {
        let j = Junta::from_fn(24, (0..21).collect(), |_| false).unwrap();
        assert_eq!(
            junta_to_sparse(&j),
            Err(Error::SupportTooLarge {
                size: 21,
                limit: 20
            })
        );
    }

    #[test]
    fn restriction_substitutes_constants() {
        let p = poly(3, &[&[0, 1], &[1, 2], &[2]], false);
        let rho: Restriction = "1*0".parse().unwrap();
        // x1 + 0 + 0 with x0 = 1, x2 = 0
        assert_eq!(p.restrict(&rho).unwrap(), poly(3, &[&[1]], false));
        let rho: Restriction = "*11".parse().unwrap();
        // x0 + 1 + 1
        assert_eq!(p.restrict(&rho).unwrap(), poly(3, &[&[0]], false));
    }

    #[test]
    fn sparse_json_shape() {
        let p = poly(4, &[&[0, 3], &[1]], true);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(
            json,
            r#"{"arity":4,"monomials":[[1],[0,3]],"constant":true}"#
        );
        assert_eq!(serde_json::from_str::<SparsePolyF2>(&json).unwrap(), p);
    }
}

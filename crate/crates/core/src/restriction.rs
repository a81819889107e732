use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::models::{BooleanFunction, TruthTable, MAX_ARITY};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Zero,
    One,
    Star,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Zero => '0',
            Cell::One => '1',
            Cell::Star => '*',
        }
    }
}

/// A partial assignment in `{0, 1, *}^n`. Text form uses `*` (or `⋆`) for alive cells.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Restriction {
    cells: Vec<Cell>,
}

impl Restriction {
    pub fn new(cells: Vec<Cell>) -> Self {
        Restriction { cells }
    }

    pub fn all_star(n: usize) -> Self {
        Restriction {
            cells: vec![Cell::Star; n],
        }
    }

    /// Fully fixed restriction equal to `x`.
    pub fn from_bits(x: &Bits) -> Self {
        Restriction {
            cells: x
                .iter()
                .map(|b| if b { Cell::One } else { Cell::Zero })
                .collect(),
        }
    }

    /// Cells in `star` are alive; the rest take their value from `fixed`.
    pub fn from_masks(n: usize, star: u64, fixed: u64) -> Self {
        Restriction {
            cells: (0..n)
                .map(|i| match (star >> i & 1, fixed >> i & 1) {
                    (1, _) => Cell::Star,
                    (_, 1) => Cell::One,
                    _ => Cell::Zero,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, i: usize) -> Cell {
        self.cells[i]
    }

    pub fn alive(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.cells[i] == Cell::Star)
            .collect()
    }

    pub fn alive_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Cell::Star).count()
    }

    /// Alive positions as a bitmask; only meaningful for `n <= 64`.
    pub fn star_mask(&self) -> u64 {
        self.mask_of(Cell::Star)
    }

    /// Positions fixed to 1 as a bitmask; only meaningful for `n <= 64`.
    pub fn fixed_ones(&self) -> u64 {
        self.mask_of(Cell::One)
    }

    fn mask_of(&self, cell: Cell) -> u64 {
        self.cells
            .iter()
            .take(64)
            .enumerate()
            .filter(|(_, &c)| c == cell)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Fill the alive cells from `x` (indexed over all coordinates).
    pub fn fill(&self, x: &Bits) -> Result<Bits> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        let mut out = x.clone();
        for (i, c) in self.cells.iter().enumerate() {
            match c {
                Cell::Zero => out.set(i, false),
                Cell::One => out.set(i, true),
                Cell::Star => {}
            }
        }
        Ok(out)
    }
}

pub fn sample_rp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Restriction> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let cells = (0..n)
        .map(|_| {
            if rng.gen_bool(p) {
                Cell::Star
            } else if rng.gen_bool(0.5) {
                Cell::One
            } else {
                Cell::Zero
            }
        })
        .collect();
    Ok(Restriction { cells })
}

/// Fix the cells of `r1` first, then the cells of `r2` on what `r1` left alive.
pub fn compose(r1: &Restriction, r2: &Restriction) -> Result<Restriction> {
    if r1.len() != r2.len() {
        return Err(Error::LengthMismatch {
            expected: r1.len(),
            got: r2.len(),
        });
    }
    Ok(Restriction {
        cells: r1
            .cells
            .iter()
            .zip(&r2.cells)
            .map(|(&a, &b)| if a == Cell::Star { b } else { a })
            .collect(),
    })
}

/// `x ⊛ y`: alive where `y` is 1, equal to `x` elsewhere.
pub fn star_merge(x: &Bits, y: &Bits) -> Result<Restriction> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(Restriction {
        cells: x
            .iter()
            .zip(y.iter())
            .map(|(xi, yi)| match (xi, yi) {
                (_, true) => Cell::Star,
                (true, false) => Cell::One,
                (false, false) => Cell::Zero,
            })
            .collect(),
    })
}

/// `f|rho` on the original index space.
#[derive(Clone, Debug)]
pub struct Restricted<F> {
    f: F,
    star: u64,
    fixed: u64,
}

impl<F: BooleanFunction> Restricted<F> {
    pub fn inner(&self) -> &F {
        &self.f
    }

    pub fn materialize(&self) -> Result<TruthTable> {
        TruthTable::from_function(self)
    }
}

impl<F: BooleanFunction> BooleanFunction for Restricted<F> {
    fn arity(&self) -> usize {
        self.f.arity()
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        self.f.eval((x & self.star) | self.fixed)
    }
}

pub fn apply<F: BooleanFunction>(f: F, rho: &Restriction) -> Result<Restricted<F>> {
    if f.arity() != rho.len() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            got: rho.len(),
        });
    }
    if rho.len() > MAX_ARITY {
        return Err(Error::ArityTooLarge {
            arity: rho.len(),
            limit: MAX_ARITY,
        });
    }
    Ok(Restricted {
        star: rho.star_mask(),
        fixed: rho.fixed_ones(),
        f,
    })
}

impl FromStr for Restriction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(Cell::Zero),
                '1' => Ok(Cell::One),
                '*' | '⋆' => Ok(Cell::Star),
                _ => Err(Error::Parse(format!("invalid restriction cell {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Restriction::new)
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.cells
            .iter()
            .try_for_each(|c| write!(f, "{}", c.symbol()))
    }
}

impl fmt::Debug for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Restriction({self})")
    }
}

impl Serialize for Restriction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Restriction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

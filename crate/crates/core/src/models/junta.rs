use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_table_arity, BooleanFunction, TruthTable};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::restriction::Restriction;

/// A function of the coordinates listed in `support`.
///
/// The local table is indexed by `sum_j x[support[j]] << j`. The support is
/// ordered and may repeat an index; a repeated read only restricts which table
/// entries are reachable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Junta {
    arity: usize,
    support: Vec<usize>,
    table: TruthTable,
}

impl Junta {
    pub fn new(arity: usize, support: Vec<usize>, table: TruthTable) -> Result<Self> {
        if let Some(&bad) = support.iter().find(|&&i| i >= arity) {
            return Err(Error::ShapeMismatch(format!(
                "support index {bad} out of range for arity {arity}"
            )));
        }
        if table.arity() != support.len() {
            return Err(Error::ArityMismatch {
                expected: support.len(),
                got: table.arity(),
            });
        }
        Ok(Junta {
            arity,
            support,
            table,
        })
    }

    pub fn from_fn(
        arity: usize,
        support: Vec<usize>,
        f: impl Fn(u64) -> bool + Send + Sync,
    ) -> Result<Self> {
        check_table_arity(support.len())?;
        let table = TruthTable::from_fn(support.len(), f)?;
        Self::new(arity, support, table)
    }

    pub fn dictator(arity: usize, i: usize) -> Result<Self> {
        Self::from_fn(arity, vec![i], |y| y & 1 == 1)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn table(&self) -> &TruthTable {
        &self.table
    }

    /// Local input seen by the table.
    #[inline]
    pub fn local_index(&self, x: u64) -> u64 {
        let mut idx = 0u64;
        for (j, &i) in self.support.iter().enumerate() {
            idx |= ((x >> i) & 1) << j;
        }
        idx
    }

    /// Coordinates that the restriction of this junta by `rho` depends on.
    /// Only the alive part of the support is enumerated.
    pub fn restricted_support(&self, rho: &Restriction) -> Result<Vec<usize>> {
        if rho.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: rho.len(),
            });
        }
        if self.arity > 64 {
            return Err(Error::ArityTooLarge {
                arity: self.arity,
                limit: 64,
            });
        }
        let star = rho.star_mask();
        let mut alive: Vec<usize> = self
            .support
            .iter()
            .copied()
            .filter(|&i| star >> i & 1 == 1)
            .collect();
        alive.sort_unstable();
        alive.dedup();
        let base = rho.fixed_ones();
        let scatter = |y: u64| {
            alive
                .iter()
                .enumerate()
                .fold(base, |x, (j, &i)| x | (y >> j & 1) << i)
        };
        Ok(alive
            .iter()
            .enumerate()
            .filter(|&(j, &i)| {
                (0..1u64 << alive.len())
                    .filter(|y| y >> j & 1 == 0)
                    .any(|y| {
                        let x = scatter(y);
                        self.eval(x) != self.eval(x | 1 << i)
                    })
            })
            .map(|(_, &i)| i)
            .collect())
    }
}

impl BooleanFunction for Junta {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        self.table.get(self.local_index(x))
    }
}

/// Parity of a list of juntas over a shared arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorOfJuntas {
    arity: usize,
    terms: Vec<Junta>,
}

impl XorOfJuntas {
    pub fn new(arity: usize, terms: Vec<Junta>) -> Result<Self> {
        for t in &terms {
            if t.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    got: t.arity(),
                });
            }
        }
        Ok(XorOfJuntas { arity, terms })
    }

    pub fn terms(&self) -> &[Junta] {
        &self.terms
    }

    /// `terms` juntas, each on `d` distinct uniformly chosen coordinates with a
    /// uniformly random table.
    pub fn random<R: Rng + ?Sized>(
        arity: usize,
        d: usize,
        terms: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if d > arity || d > 16 {
            return Err(Error::ParameterOutOfRange(format!(
                "{d}-juntas on {arity} bits"
            )));
        }
        let juntas = (0..terms)
            .map(|_| {
                let support = rand::seq::index::sample(rng, arity, d).into_vec();
                let mut table = TruthTable::zeros(d)?;
                for v in 0..1u64 << d {
                    table.set(v, rng.gen());
                }
                Junta::new(arity, support, table)
            })
            .collect::<Result<Vec<_>>>()?;
        XorOfJuntas::new(arity, juntas)
    }
}

impl BooleanFunction for XorOfJuntas {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        self.terms.iter().fold(false, |acc, t| acc ^ t.eval(x))
    }
}

pub fn eval_xor_of_juntas(g: &XorOfJuntas, x: &Bits) -> Result<bool> {
    g.eval_bits(x)
}

#[derive(Serialize, Deserialize)]
struct JuntaWire {
    arity: usize,
    support: Vec<usize>,
    table: String,
}

impl Serialize for Junta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JuntaWire {
            arity: self.arity,
            support: self.support.clone(),
            table: self.table.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Junta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = JuntaWire::deserialize(d)?;
        let table =
            TruthTable::from_hex(w.support.len(), &w.table).map_err(serde::de::Error::custom)?;
        Junta::new(w.arity, w.support, table).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct XorWire {
    arity: usize,
    terms: Vec<Junta>,
}

impl Serialize for XorOfJuntas {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        XorWire {
            arity: self.arity,
            terms: self.terms.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for XorOfJuntas {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = XorWire::deserialize(d)?;
        XorOfJuntas::new(w.arity, w.terms).map_err(serde::de::Error::custom)
    }
}

//! Correlation, k-party norms, statistical distance and fooling error.
//!
//! Exact paths count `+1` and `-1` outcomes in integers and divide once.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardfn::FunctionDescriptor;
use crate::models::{
    arity_mask, fourier_expand, is_set_multilinear, BooleanFunction, DynFunction, Junta, Parity,
    Partition, SparsePolyF2, TruthTable, MAX_FOURIER_ARITY,
};
use crate::prg::Generator;

pub const MAX_CORR_ARITY: usize = 28;
pub const MAX_CLASS_ARITY: usize = 24;
pub const MAX_NORM_BITS: usize = 26;
pub const MAX_FOOLING_BITS: usize = 24;
pub const DEFAULT_CLASS_BUDGET: u64 = 1 << 22;
pub const DEFAULT_MC_SAMPLES: u64 = 1 << 20;

/// Confidence level of every Monte-Carlo radius.
pub const MC_CONFIDENCE: f64 = 0.99;

/// Half-width of a 99% Hoeffding interval for the mean of `samples` values in `[-1, 1]`.
pub fn hoeffding_radius(samples: u64) -> f64 {
    (2.0 * (2.0 / (1.0 - MC_CONFIDENCE)).ln() / samples as f64).sqrt()
}

/// Finite distribution as outcome counts over `{0, ..., len-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distribution {
    counts: Vec<u64>,
    total: u64,
}

impl Distribution {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::ParameterOutOfRange(
                "distribution has no mass".into(),
            ));
        }
        Ok(Distribution { counts, total })
    }

    pub fn uniform(bits: usize) -> Result<Self> {
        if bits > 24 {
            return Err(Error::ArityTooLarge {
                arity: bits,
                limit: 24,
            });
        }
        Self::from_counts(vec![1; 1 << bits])
    }

    pub fn point(bits: usize, x: u64) -> Result<Self> {
        if bits > 24 {
            return Err(Error::ArityTooLarge {
                arity: bits,
                limit: 24,
            });
        }
        if x >> bits != 0 {
            return Err(Error::ParameterOutOfRange(format!(
                "point {x} outside {bits}-bit support"
            )));
        }
        let mut counts = vec![0; 1 << bits];
        counts[x as usize] = 1;
        Self::from_counts(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn probability(&self, x: usize) -> f64 {
        self.counts[x] as f64 / self.total as f64
    }
}

/// `max_S |A(S) - B(S)|`.
pub fn tv_distance(a: &Distribution, b: &Distribution) -> Result<f64> {
    if a.support_size() != b.support_size() {
        return Err(Error::SupportMismatch(a.support_size(), b.support_size()));
    }
    let (ta, tb) = (a.total as u128, b.total as u128);
    let num: u128 = a
        .counts
        .iter()
        .zip(&b.counts)
        .map(|(&x, &y)| (x as u128 * tb).abs_diff(y as u128 * ta))
        .sum();
    Ok(num as f64 / (2 * ta * tb) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrReport {
    pub value: f64,
    pub mode: CorrMode,
    pub samples: Option<u64>,
    pub radius: f64,
    pub argmax_descriptor: Option<FunctionDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_index: Option<u64>,
}

impl CorrReport {
    fn exact(value: f64) -> Self {
        CorrReport {
            value,
            mode: CorrMode::Exact,
            samples: None,
            radius: 0.0,
            argmax_descriptor: None,
            argmax_index: None,
        }
    }

    fn monte_carlo(value: f64, samples: u64) -> Self {
        CorrReport {
            value,
            mode: CorrMode::MonteCarlo,
            samples: Some(samples),
            radius: hoeffding_radius(samples),
            argmax_descriptor: None,
            argmax_index: None,
        }
    }
}

fn check_same_arity<F: BooleanFunction + ?Sized, G: BooleanFunction + ?Sized>(
    f: &F,
    g: &G,
) -> Result<usize> {
    if f.arity() != g.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            got: g.arity(),
        });
    }
    Ok(f.arity())
}

/// Number of inputs in `[lo, hi)` where `f` and `g` agree.
fn agreements<F: BooleanFunction + ?Sized, G: BooleanFunction + ?Sized>(
    f: &F,
    g: &G,
    lo: u64,
    hi: u64,
) -> u64 {
    (lo..hi).filter(|&x| f.eval(x) == g.eval(x)).count() as u64
}

fn count_agreements<F: BooleanFunction + ?Sized, G: BooleanFunction + ?Sized>(
    f: &F,
    g: &G,
    n: usize,
) -> u64 {
    const CHUNK: u64 = 1 << 14;
    let size = 1u64 << n;
    if size <= CHUNK {
        return agreements(f, g, 0, size);
    }
    (0..size / CHUNK)
        .into_par_iter()
        .map(|c| agreements(f, g, c * CHUNK, (c + 1) * CHUNK))
        .sum()
}

/// `|2 * agree - 2^n| / 2^n`.
fn corr_from_agreements(agree: u64, n: usize) -> f64 {
    (2 * agree).abs_diff(1 << n) as f64 / (1u64 << n) as f64
}

/// `|E_x (-1)^{f(x) + g(x)}|` by exhaustive enumeration.
pub fn corr_exact<F: BooleanFunction + ?Sized, G: BooleanFunction + ?Sized>(
    f: &F,
    g: &G,
) -> Result<CorrReport> {
    let n = check_same_arity(f, g)?;
    if n > MAX_CORR_ARITY {
        return Err(Error::ArityTooLarge {
            arity: n,
            limit: MAX_CORR_ARITY,
        });
    }
    Ok(CorrReport::exact(corr_from_agreements(
        count_agreements(f, g, n),
        n,
    )))
}

/// Empirical correlation over `samples` uniform inputs, with a 99% Hoeffding radius.
pub fn corr_mc<F, G, R>(f: &F, g: &G, samples: u64, rng: &mut R) -> Result<CorrReport>
where
    F: BooleanFunction + ?Sized,
    G: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    let n = check_same_arity(f, g)?;
    if samples == 0 {
        return Err(Error::ParameterOutOfRange(
            "need at least one sample".into(),
        ));
    }
    let mask = arity_mask(n);
    let agree = (0..samples)
        .filter(|_| {
            let x = rng.gen::<u64>() & mask;
            f.eval(x) == g.eval(x)
        })
        .count() as u64;
    let value = (2 * agree).abs_diff(samples) as f64 / samples as f64;
    Ok(CorrReport::monte_carlo(value, samples))
}

/// Adversary classes whose members are enumerated exhaustively (or, for
/// `SampledSparse`, drawn from a fixed seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum AdversaryClass {
    /// Every function depending on exactly the variables of some subset of
    /// size at most `width`. With `supports` given, subsets of those only.
    Juntas {
        n: usize,
        width: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        supports: Option<Vec<Vec<usize>>>,
    },
    /// All `2^(n+1)` affine functions; member `i` is `<i >> 1, x> + (i & 1)`.
    Affine {
        n: usize,
    },
    /// All polynomials whose monomials have degree at most `max_degree` and
    /// at most one variable per block.
    SetMultilinear {
        partition: Partition,
        max_degree: usize,
    },
    /// Every protocol where one of two players writes a single bit that is
    /// also the output: all functions of one `b`-bit block.
    Nof1Bit {
        b: usize,
    },
    Explicit {
        functions: Vec<FunctionDescriptor>,
    },
    /// `count` random polynomials with `terms` monomials of degree at most `max_degree`.
    SampledSparse {
        n: usize,
        count: usize,
        terms: usize,
        max_degree: usize,
        seed: u64,
    },
}

/// A `w`-variable junta stored as a support mask and a table of up to 64 entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SmallJunta {
    arity: usize,
    support: u64,
    table: u64,
}

impl SmallJunta {
    #[inline]
    fn eval(&self, x: u64) -> bool {
        let mut idx = 0;
        let mut s = self.support;
        let mut j = 0;
        while s != 0 {
            let i = s.trailing_zeros();
            idx |= (x >> i & 1) << j;
            j += 1;
            s &= s - 1;
        }
        self.table >> idx & 1 == 1
    }

    fn to_junta(self) -> Junta {
        let support: Vec<usize> = (0..64).filter(|&i| self.support >> i & 1 == 1).collect();
        Junta::from_fn(self.arity, support, |v| self.table >> v & 1 == 1).expect("valid junta")
    }
}

/// Does a table on `w` variables depend on each of them?
fn depends_on_all(table: u64, w: usize) -> bool {
    let size = 1u64 << w;
    (0..w).all(|i| {
        (0..size).any(|v| v >> i & 1 == 0 && (table >> v & 1) != (table >> (v | 1 << i) & 1))
    })
}

enum Prepared {
    Juntas(Vec<SmallJunta>),
    Affine { n: usize },
    Poly { n: usize, monomials: Vec<u64> },
    Functions(Vec<(DynFunction, Option<FunctionDescriptor>)>),
}

impl Prepared {
    fn len(&self) -> u64 {
        match self {
            Prepared::Juntas(v) => v.len() as u64,
            Prepared::Affine { n } => 2 << n,
            Prepared::Poly { monomials, .. } => 2 << monomials.len(),
            Prepared::Functions(v) => v.len() as u64,
        }
    }

    fn poly(n: usize, monomials: &[u64], i: u64) -> SparsePolyF2 {
        let chosen = (0..monomials.len())
            .filter(|&j| i >> (j + 1) & 1 == 1)
            .map(|j| monomials[j]);
        SparsePolyF2::from_masks(n, chosen, i & 1 == 1).expect("monomials in range")
    }

    fn agreements(&self, f: &TruthTable, n: usize, i: u64) -> u64 {
        let size = 1u64 << n;
        let count =
            |g: &dyn Fn(u64) -> bool| (0..size).filter(|&x| f.get(x) == g(x)).count() as u64;
        match self {
            Prepared::Juntas(v) => count(&|x| v[i as usize].eval(x)),
            Prepared::Affine { .. } => {
                let (mask, neg) = (i >> 1, i & 1 == 1);
                count(&|x| ((x & mask).count_ones() & 1 == 1) ^ neg)
            }
            Prepared::Poly { n, monomials } => {
                let p = Self::poly(*n, monomials, i);
                count(&|x| p.eval(x))
            }
            Prepared::Functions(v) => count(&|x| v[i as usize].0.eval(x)),
        }
    }

    fn descriptor(&self, i: u64) -> Option<FunctionDescriptor> {
        match self {
            Prepared::Juntas(v) => Some(FunctionDescriptor::Junta(v[i as usize].to_junta())),
            Prepared::Affine { n } => Some(FunctionDescriptor::Parity {
                n: *n,
                mask: Some(i >> 1),
                negate: i & 1 == 1,
            }),
            Prepared::Poly { n, monomials } => {
                Some(FunctionDescriptor::Sparse(Self::poly(*n, monomials, i)))
            }
            Prepared::Functions(v) => v[i as usize].1.clone(),
        }
    }
}

fn subsets_up_to(n: usize, width: usize) -> Vec<u64> {
    // Lexicographic by size, then by mask value.
    let mut out = Vec::new();
    for w in 0..=width.min(n) {
        if w == 0 {
            out.push(0);
            continue;
        }
        let mut s: u64 = (1 << w) - 1;
        while s < 1 << n {
            out.push(s);
            let c = s & s.wrapping_neg();
            let r = s + c;
            s = (((r ^ s) >> 2) / c) | r;
        }
    }
    out
}

fn set_multilinear_monomials(partition: &Partition, max_degree: usize) -> Vec<u64> {
    let masks = partition.block_masks();
    let mut out = Vec::new();
    fn rec(masks: &[u64], start: usize, left: usize, cur: u64, out: &mut Vec<u64>) {
        if cur != 0 {
            out.push(cur);
        }
        if left == 0 {
            return;
        }
        for b in start..masks.len() {
            let mut m = masks[b];
            while m != 0 {
                let bit = m & m.wrapping_neg();
                rec(masks, b + 1, left - 1, cur | bit, out);
                m &= m - 1;
            }
        }
    }
    rec(&masks, 0, max_degree, 0, &mut out);
    out.sort_by_key(|&m| (m.count_ones(), m));
    out
}

impl AdversaryClass {
    pub fn arity(&self) -> Result<usize> {
        Ok(match self {
            AdversaryClass::Juntas { n, .. }
            | AdversaryClass::Affine { n }
            | AdversaryClass::SampledSparse { n, .. } => *n,
            AdversaryClass::SetMultilinear { partition, .. } => partition_arity(partition),
            AdversaryClass::Nof1Bit { b } => 2 * b,
            AdversaryClass::Explicit { functions } => match functions.first() {
                Some(f) => f.arity()?,
                None => 0,
            },
        })
    }

    /// Number of members, or `None` if it does not fit in a `u64`.
    pub fn size(&self) -> Result<Option<u64>> {
        Ok(match self {
            AdversaryClass::Juntas { .. } | AdversaryClass::Nof1Bit { .. } => {
                let w = match self {
                    AdversaryClass::Juntas { width, .. } => *width,
                    AdversaryClass::Nof1Bit { b } => *b,
                    _ => unreachable!(),
                };
                if w > 4 {
                    return Ok(None);
                }
                Some(self.junta_members()?.len() as u64)
            }
            AdversaryClass::Affine { n } => 2u64.checked_pow(*n as u32 + 1),
            AdversaryClass::SetMultilinear {
                partition,
                max_degree,
            } => {
                2u64.checked_pow(set_multilinear_monomials(partition, *max_degree).len() as u32 + 1)
            }
            AdversaryClass::Explicit { functions } => Some(functions.len() as u64),
            AdversaryClass::SampledSparse { count, .. } => Some(*count as u64),
        })
    }

    fn junta_members(&self) -> Result<Vec<SmallJunta>> {
        let (n, supports) = match self {
            AdversaryClass::Juntas { n, width, supports } => {
                if *width > 6 {
                    return Err(Error::BudgetExceeded(format!(
                        "junta width {width} has too many tables"
                    )));
                }
                if *n > 64 {
                    return Err(Error::ArityTooLarge {
                        arity: *n,
                        limit: 64,
                    });
                }
                let masks = match supports {
                    None => subsets_up_to(*n, *width),
                    Some(list) => {
                        let mut set = std::collections::BTreeSet::new();
                        for s in list {
                            if let Some(&bad) = s.iter().find(|&&i| i >= *n) {
                                return Err(Error::ParameterOutOfRange(format!(
                                    "support index {bad} outside arity {n}"
                                )));
                            }
                            let mask = s.iter().fold(0u64, |m, &i| m | 1 << i);
                            if mask.count_ones() as usize > *width {
                                return Err(Error::SupportTooLarge {
                                    size: mask.count_ones() as usize,
                                    limit: *width,
                                });
                            }
                            let mut sub = mask;
                            loop {
                                set.insert(sub);
                                if sub == 0 {
                                    break;
                                }
                                sub = (sub - 1) & mask;
                            }
                        }
                        let mut v: Vec<u64> = set.into_iter().collect();
                        v.sort_by_key(|&m| (m.count_ones(), m));
                        v
                    }
                };
                (*n, masks)
            }
            AdversaryClass::Nof1Bit { b } => {
                if *b > 4 {
                    return Err(Error::BudgetExceeded(format!(
                        "{b}-bit blocks have too many tables"
                    )));
                }
                let block = arity_mask(*b);
                (2 * b, vec![0, block, block << b])
            }
            _ => unreachable!(),
        };
        let mut out = Vec::new();
        for support in supports {
            let w = support.count_ones() as usize;
            if let AdversaryClass::Nof1Bit { .. } = self {
                // Constants are listed once, under the empty support.
                if w == 0 {
                    out.push(SmallJunta {
                        arity: n,
                        support,
                        table: 0,
                    });
                    out.push(SmallJunta {
                        arity: n,
                        support,
                        table: 1,
                    });
                    continue;
                }
                out.extend(
                    (0..1u64 << (1 << w))
                        .filter(|&t| t != 0 && t != arity_mask(1 << w))
                        .map(|table| SmallJunta {
                            arity: n,
                            support,
                            table,
                        }),
                );
                continue;
            }
            let tables = if w == 6 {
                u64::MAX
            } else {
                (1u64 << (1 << w)) - 1
            };
            let mut t = 0u64;
            loop {
                if depends_on_all(t, w) {
                    out.push(SmallJunta {
                        arity: n,
                        support,
                        table: t,
                    });
                }
                if t == tables {
                    break;
                }
                t += 1;
            }
        }
        Ok(out)
    }

    fn prepare(&self, budget: u64) -> Result<Prepared> {
        let over = |size: Option<u64>| -> Result<()> {
            match size {
                Some(s) if s <= budget => Ok(()),
                Some(s) => Err(Error::BudgetExceeded(format!(
                    "class has {s} members, budget {budget}"
                ))),
                None => Err(Error::BudgetExceeded(format!(
                    "class exceeds budget {budget}"
                ))),
            }
        };
        Ok(match self {
            AdversaryClass::Juntas { .. } | AdversaryClass::Nof1Bit { .. } => {
                let members = self.junta_members()?;
                over(Some(members.len() as u64))?;
                Prepared::Juntas(members)
            }
            AdversaryClass::Affine { n } => {
                over(2u64.checked_pow(*n as u32 + 1))?;
                Prepared::Affine { n: *n }
            }
            AdversaryClass::SetMultilinear {
                partition,
                max_degree,
            } => {
                let monomials = set_multilinear_monomials(partition, *max_degree);
                over(2u64.checked_pow(monomials.len() as u32 + 1))?;
                Prepared::Poly {
                    n: partition_arity(partition),
                    monomials,
                }
            }
            AdversaryClass::Explicit { functions } => {
                over(Some(functions.len() as u64))?;
                Prepared::Functions(
                    functions
                        .iter()
                        .map(|d| Ok((d.build()?, Some(d.clone()))))
                        .collect::<Result<_>>()?,
                )
            }
            AdversaryClass::SampledSparse {
                n,
                count,
                terms,
                max_degree,
                seed,
            } => {
                over(Some(*count as u64))?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let members = (0..*count)
                    .map(|_| {
                        let p = random_sparse(*n, *terms, *max_degree, &mut rng)?;
                        let d = FunctionDescriptor::Sparse(p.clone());
                        Ok((std::sync::Arc::new(p) as DynFunction, Some(d)))
                    })
                    .collect::<Result<_>>()?;
                Prepared::Functions(members)
            }
        })
    }

    /// Every member, built as a function. Intended for small classes.
    pub fn members(&self, budget: u64) -> Result<Vec<FunctionDescriptor>> {
        let p = self.prepare(budget)?;
        Ok((0..p.len()).filter_map(|i| p.descriptor(i)).collect())
    }
}

fn partition_arity(p: &Partition) -> usize {
    (64 - p.covered_mask().leading_zeros()) as usize
}

/// A random polynomial with `terms` monomials, each of degree `1..=max_degree`.
pub fn random_sparse<R: Rng + ?Sized>(
    n: usize,
    terms: usize,
    max_degree: usize,
    rng: &mut R,
) -> Result<SparsePolyF2> {
    if max_degree == 0 || max_degree > n {
        return Err(Error::ParameterOutOfRange(format!(
            "degree {max_degree} on {n} variables"
        )));
    }
    let monomials = (0..terms).map(|_| {
        let deg = rng.gen_range(1..=max_degree);
        rand::seq::index::sample(rng, n, deg)
            .iter()
            .fold(0u64, |m, i| m | 1 << i)
    });
    let monomials: Vec<u64> = monomials.collect();
    SparsePolyF2::from_masks(n, monomials, false)
}

/// `max_{g in C} corr(f, g)` with the first maximizer (in enumeration order) as witness.
pub fn corr_class_max<F: BooleanFunction + ?Sized>(
    f: &F,
    class: &AdversaryClass,
) -> Result<CorrReport> {
    corr_class_max_with_budget(f, class, DEFAULT_CLASS_BUDGET)
}

pub fn corr_class_max_with_budget<F: BooleanFunction + ?Sized>(
    f: &F,
    class: &AdversaryClass,
    budget: u64,
) -> Result<CorrReport> {
    let n = f.arity();
    let class_arity = class.arity()?;
    if class_arity > n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: class_arity,
        });
    }
    if n > MAX_CLASS_ARITY {
        return Err(Error::ArityTooLarge {
            arity: n,
            limit: MAX_CLASS_ARITY,
        });
    }
    let prepared = class.prepare(budget)?;
    if let AdversaryClass::Affine { n: m } = class {
        if *m != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: *m,
            });
        }
        if n <= MAX_FOURIER_ARITY {
            return affine_max(f, &prepared);
        }
    }
    if let AdversaryClass::Explicit { functions } = class {
        for d in functions {
            let a = d.arity()?;
            if a != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: a,
                });
            }
        }
    }
    let table = TruthTable::from_function(f)?;
    let (best, idx) = (0..prepared.len())
        .into_par_iter()
        .map(|i| ((2 * prepared.agreements(&table, n, i)).abs_diff(1 << n), i))
        .reduce(|| (0, u64::MAX), pick_max);
    let mut report = CorrReport::exact(best as f64 / (1u64 << n) as f64);
    if idx != u64::MAX {
        report.argmax_descriptor = prepared.descriptor(idx);
        report.argmax_index = Some(idx);
    }
    Ok(report)
}

/// Larger value wins; ties go to the smaller index.
fn pick_max(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

/// All affine correlations at once from the Walsh spectrum of `f`.
fn affine_max<F: BooleanFunction + ?Sized>(f: &F, prepared: &Prepared) -> Result<CorrReport> {
    let n = f.arity();
    let spec = fourier_expand(f)?;
    // sum_x (-1)^{f(x) + <S,x>} = 2^n [S = 0] - 2 * numerator(S)
    let full = 1i64 << n;
    let (best, idx) = (0..1u64 << n)
        .map(|s| {
            let v = if s == 0 { full } else { 0 } - 2 * spec.numerator(s);
            (v.unsigned_abs(), s << 1)
        })
        .fold((0, u64::MAX), pick_max);
    let mut report = CorrReport::exact(best as f64 / full as f64);
    report.argmax_descriptor = prepared.descriptor(idx);
    report.argmax_index = Some(idx);
    Ok(report)
}

/// `R_k(f) = E_{X^0, X^1} e(sum_{delta} f(X_1^{delta_1}, ..., X_k^{delta_k}))`
/// for `f` on `k` contiguous blocks of `b` bits, exhaustively.
pub fn kparty_norm<F: BooleanFunction + ?Sized>(f: &F, k: usize, b: usize) -> Result<f64> {
    check_norm_shape(f, k, b)?;
    if 2 * k * b > MAX_NORM_BITS {
        return Err(Error::ArityTooLarge {
            arity: 2 * k * b,
            limit: MAX_NORM_BITS,
        });
    }
    let table = TruthTable::from_function(f)?;
    let kb = k * b;
    let sum: i64 = (0..1u64 << kb)
        .into_par_iter()
        .map(|x0| {
            (0..1u64 << kb)
                .map(|x1| cube_sign(&table, k, b, x0, x1))
                .sum::<i64>()
        })
        .sum();
    Ok(sum as f64 / (1u64 << (2 * kb)) as f64)
}

/// Monte-Carlo `R_k` over `samples` random pairs `(X^0, X^1)`.
pub fn kparty_norm_mc<F: BooleanFunction + ?Sized, R: Rng + ?Sized>(
    f: &F,
    k: usize,
    b: usize,
    samples: u64,
    rng: &mut R,
) -> Result<CorrReport> {
    check_norm_shape(f, k, b)?;
    if samples == 0 {
        return Err(Error::ParameterOutOfRange(
            "need at least one sample".into(),
        ));
    }
    let mask = arity_mask(k * b);
    let mut sum = 0i64;
    for _ in 0..samples {
        let (x0, x1) = (rng.gen::<u64>() & mask, rng.gen::<u64>() & mask);
        let s = (0..1u64 << k).fold(false, |acc, delta| {
            acc ^ f.eval(cube_point(k, b, x0, x1, delta))
        });
        sum += if s { -1 } else { 1 };
    }
    Ok(CorrReport::monte_carlo(
        sum as f64 / samples as f64,
        samples,
    ))
}

fn check_norm_shape<F: BooleanFunction + ?Sized>(f: &F, k: usize, b: usize) -> Result<()> {
    if k == 0 || f.arity() != k * b {
        return Err(Error::ShapeMismatch(format!(
            "arity {} is not {k} blocks of {b} bits",
            f.arity()
        )));
    }
    Ok(())
}

#[inline]
fn cube_point(k: usize, b: usize, x0: u64, x1: u64, delta: u64) -> u64 {
    let mut sel = 0u64;
    for i in 0..k {
        if delta >> i & 1 == 1 {
            sel |= arity_mask(b) << (i * b);
        }
    }
    (x0 & !sel) | (x1 & sel)
}

#[inline]
fn cube_sign(table: &TruthTable, k: usize, b: usize, x0: u64, x1: u64) -> i64 {
    let s = (0..1u64 << k).fold(false, |acc, delta| {
        acc ^ table.get(cube_point(k, b, x0, x1, delta))
    });
    if s {
        -1
    } else {
        1
    }
}

/// `sum_x (-1)^{f(x)}` over all inputs.
fn signed_sum<F: BooleanFunction + ?Sized>(f: &F) -> i64 {
    let n = f.arity();
    let agree = count_agreements(f, &Parity::constant(n, false), n) as i64;
    2 * agree - (1i64 << n)
}

/// `|E (-1)^{f(U)} - E (-1)^{f(G(s))}|`: exhaustive when the seed and arity
/// are at most 24 bits, otherwise a Monte-Carlo estimate from a fixed seed.
pub fn fooling_error<G: Generator + ?Sized, F: BooleanFunction + ?Sized>(
    g: &G,
    f: &F,
) -> Result<CorrReport> {
    fooling_error_with(g, f, DEFAULT_MC_SAMPLES, 0)
}

pub fn fooling_error_with<G: Generator + ?Sized, F: BooleanFunction + ?Sized>(
    g: &G,
    f: &F,
    samples: u64,
    seed: u64,
) -> Result<CorrReport> {
    let (n, s) = (g.output_len(), g.seed_len());
    if f.arity() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: f.arity(),
        });
    }
    if s <= MAX_FOOLING_BITS && n <= MAX_FOOLING_BITS {
        let truth = signed_sum(f);
        let gen: i64 = (0..1u64 << s)
            .into_par_iter()
            .map(|w| if f.eval(g.expand_u64(w)) { -1 } else { 1 })
            .sum();
        let gap = (truth as i128 * (1i128 << s) - gen as i128 * (1i128 << n)).unsigned_abs();
        return Ok(CorrReport::exact(gap as f64 / (1u128 << (n + s)) as f64));
    }
    if samples == 0 {
        return Err(Error::ParameterOutOfRange(
            "need at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = arity_mask(n);
    let mut diff = 0i64;
    for _ in 0..samples {
        let x = rng.gen::<u64>() & mask;
        let w = crate::bits::Bits::from_u128(rng.gen::<u128>(), s.min(128));
        let w = if s > 128 { random_bits(s, &mut rng) } else { w };
        diff += f.eval(x) as i64 - f.eval(g.expand(&w)) as i64;
    }
    // Each sample of the difference lies in [-1, 1]; twice that for the ±1 form.
    let mut r = CorrReport::monte_carlo(2.0 * (diff as f64 / samples as f64).abs(), samples);
    r.radius *= 2.0;
    Ok(r)
}

fn random_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> crate::bits::Bits {
    crate::bits::Bits::from_bools(&(0..len).map(|_| rng.gen::<bool>()).collect::<Vec<_>>())
}

/// Counts of each output of `g` over all seeds.
pub fn output_histogram<G: Generator + ?Sized>(g: &G) -> Result<Vec<u64>> {
    let (n, s) = (g.output_len(), g.seed_len());
    if s > MAX_FOOLING_BITS || n > MAX_FOOLING_BITS {
        return Err(Error::BudgetExceeded(format!(
            "histogram over {s} seed bits and {n} output bits"
        )));
    }
    const CHUNK: u64 = 1 << 12;
    let seeds = 1u64 << s;
    let mut outputs: Vec<u64> = (0..seeds.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| (c * CHUNK..((c + 1) * CHUNK).min(seeds)).map(|w| g.expand_u64(w)))
        .collect();
    outputs.par_sort_unstable();
    let mut counts = vec![0u64; 1 << n];
    for y in outputs {
        counts[y as usize] += 1;
    }
    Ok(counts)
}

/// Largest fooling error of `g` over every member of `class`, exhaustively.
pub fn max_fooling_error<G: Generator + ?Sized>(
    g: &G,
    class: &AdversaryClass,
) -> Result<CorrReport> {
    let (n, s) = (g.output_len(), g.seed_len());
    if class.arity()? != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: class.arity()?,
        });
    }
    let hist = output_histogram(g)?;
    let prepared = class.prepare(DEFAULT_CLASS_BUDGET)?;
    let (best, idx) = (0..prepared.len())
        .into_par_iter()
        .map(|i| {
            let member = MemberFn {
                prepared: &prepared,
                n,
                i,
            };
            let (mut truth, mut gen) = (0i128, 0i128);
            for (y, &c) in hist.iter().enumerate() {
                let sign = if member.eval(y as u64) { -1 } else { 1 };
                truth += sign;
                gen += sign * c as i128;
            }
            let gap = (truth * (1i128 << s) - gen * (1i128 << n)).unsigned_abs() as u64;
            (gap, i)
        })
        .reduce(|| (0, u64::MAX), pick_max);
    let mut report = CorrReport::exact(best as f64 / (1u128 << (n + s)) as f64);
    if idx != u64::MAX {
        report.argmax_descriptor = prepared.descriptor(idx);
        report.argmax_index = Some(idx);
    }
    Ok(report)
}

struct MemberFn<'a> {
    prepared: &'a Prepared,
    n: usize,
    i: u64,
}

impl MemberFn<'_> {
    fn eval(&self, x: u64) -> bool {
        match self.prepared {
            Prepared::Juntas(v) => v[self.i as usize].eval(x),
            Prepared::Affine { .. } => {
                ((x & (self.i >> 1)).count_ones() & 1 == 1) ^ (self.i & 1 == 1)
            }
            Prepared::Poly { n, monomials } => {
                let _ = self.n;
                // Rebuilt per call; only used on small output spaces.
                Prepared::poly(*n, monomials, self.i).eval(x)
            }
            Prepared::Functions(v) => v[self.i as usize].0.eval(x),
        }
    }
}

fn walsh(a: &mut [i64]) {
    let mut h = 1;
    while h < a.len() {
        for block in (0..a.len()).step_by(2 * h) {
            for i in block..block + h {
                let (u, v) = (a[i], a[i + h]);
                a[i] = u + v;
                a[i + h] = u - v;
            }
        }
        h <<= 1;
    }
}

/// Largest fooling error of `g` over the XORs of every nonempty subset of
/// `juntas`, with the maximizing subset as a mask (ties to the smallest;
/// 0 when every gap vanishes).
///
/// Tallies the string `(phi_1(x), ..., phi_t(x))` under uniform `x` and
/// under `g`, then reads every subset's bias off the Walsh transforms.
pub fn xor_subset_error<G: Generator + ?Sized>(g: &G, juntas: &[Junta]) -> Result<(f64, u64)> {
    let (n, s, t) = (g.output_len(), g.seed_len(), juntas.len());
    if s > MAX_FOOLING_BITS || n > MAX_FOOLING_BITS || t > 20 {
        return Err(Error::BudgetExceeded(format!(
            "{t} juntas over {n} bits with {s} seed bits"
        )));
    }
    if let Some(j) = juntas.iter().find(|j| j.arity() != n) {
        return Err(Error::ArityMismatch {
            expected: n,
            got: j.arity(),
        });
    }
    let phi = |x: u64| {
        juntas
            .iter()
            .enumerate()
            .fold(0usize, |acc, (v, j)| acc | (j.eval(x) as usize) << v)
    };
    let tally = |size: u64, point: &(dyn Fn(u64) -> u64 + Sync)| -> Vec<i64> {
        (0..size)
            .into_par_iter()
            .fold(
                || vec![0i64; 1 << t],
                |mut h, i| {
                    h[phi(point(i))] += 1;
                    h
                },
            )
            .reduce(
                || vec![0i64; 1 << t],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    let mut uniform = tally(1 << n, &|x| x);
    let mut generated = tally(1 << s, &|w| g.expand_u64(w));
    walsh(&mut uniform);
    walsh(&mut generated);
    let (best, idx) = (1..1usize << t)
        .map(|m| {
            let gap = (uniform[m] as i128 * (1i128 << s) - generated[m] as i128 * (1i128 << n))
                .unsigned_abs() as u64;
            (gap, m as u64)
        })
        .fold((0, 0), pick_max);
    Ok((best as f64 / (1u128 << (n + s)) as f64, idx))
}

/// The bound `d eps + (d - 1)(1 / (2^k eps^2) + eps)`.
pub fn extffm_bound(d: usize, k: usize, eps: f64) -> f64 {
    d as f64 * eps + (d as f64 - 1.0) * (1.0 / (2f64.powi(k as i32) * eps * eps) + eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub vacuous: bool,
    pub argmax_descriptor: Option<FunctionDescriptor>,
}

/// Compare the exhaustive max correlation of `f` over a degree-`<d` class
/// with the displayed bound. Classes that may contain degree-`d` functions
/// fall outside the hypothesis and are rejected.
pub fn check_extffm_bound<F: BooleanFunction + ?Sized>(
    f: &F,
    d: usize,
    k: usize,
    eps: f64,
    class: &AdversaryClass,
) -> Result<BoundReport> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidProbability(eps));
    }
    match class {
        AdversaryClass::SetMultilinear { max_degree, .. } if *max_degree >= d => {
            return Err(Error::HypothesisViolation(format!(
                "class allows degree {max_degree}, the bound needs degree < {d}"
            )))
        }
        AdversaryClass::Juntas { width, .. } | AdversaryClass::Nof1Bit { b: width }
            if *width >= d =>
        {
            return Err(Error::HypothesisViolation(format!(
                "{width}-variable functions can reach degree {d}"
            )))
        }
        AdversaryClass::Affine { .. } if d < 2 => {
            return Err(Error::HypothesisViolation(
                "affine functions have degree 1".into(),
            ))
        }
        AdversaryClass::Explicit { functions } => {
            for fd in functions {
                let deg = anf_degree(&*fd.build()?)?;
                if deg >= d {
                    return Err(Error::HypothesisViolation(format!(
                        "class member of degree {deg}, the bound needs degree < {d}"
                    )));
                }
            }
        }
        AdversaryClass::SampledSparse { max_degree, .. } if *max_degree >= d => {
            return Err(Error::HypothesisViolation(format!(
                "sampled polynomials reach degree {max_degree}, the bound needs degree < {d}"
            )))
        }
        _ => {}
    }
    let report = corr_class_max(f, class)?;
    let bound = extffm_bound(d, k, eps);
    Ok(BoundReport {
        d,
        k,
        epsilon: eps,
        measured: report.value,
        bound,
        slack: bound - report.value,
        pass: report.value <= bound,
        vacuous: bound >= 1.0,
        argmax_descriptor: report.argmax_descriptor,
    })
}

/// Degree of the algebraic normal form.
pub fn anf_degree<F: BooleanFunction + ?Sized>(f: &F) -> Result<usize> {
    let n = f.arity();
    if n > MAX_FOURIER_ARITY {
        return Err(Error::ArityTooLarge {
            arity: n,
            limit: MAX_FOURIER_ARITY,
        });
    }
    let table = TruthTable::from_function(f)?;
    let mut a: Vec<bool> = (0..1u64 << n).map(|x| table.get(x)).collect();
    for i in 0..n {
        for x in 0..a.len() {
            if x >> i & 1 == 1 {
                a[x] ^= a[x ^ (1 << i)];
            }
        }
    }
    Ok((0..a.len())
        .filter(|&m| a[m])
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0))
}

/// For each block `X_i`, the largest `X_i ∩ A_j` over the parts `A_j`
/// (ties to the first part).
pub fn largest_intersections(blocks: &Partition, parts: &Partition) -> Vec<Vec<usize>> {
    blocks
        .blocks()
        .iter()
        .map(|x| {
            let mut best: Vec<usize> = Vec::new();
            for a in parts.blocks() {
                let inter: Vec<usize> = x.iter().copied().filter(|i| a.contains(i)).collect();
                if inter.len() > best.len() {
                    best = inter;
                }
            }
            best
        })
        .collect()
}

/// Fix every bit of each block outside its chosen set to `value`, leaving
/// bits outside all blocks alive, and test set-multilinearity over the blocks.
pub fn restricted_is_set_multilinear(
    p: &SparsePolyF2,
    blocks: &Partition,
    alive: &[Vec<usize>],
    value: bool,
) -> Result<bool> {
    let n = p.arity();
    let mut cells = vec![crate::restriction::Cell::Star; n];
    for (block, keep) in blocks.blocks().iter().zip(alive) {
        for &i in block {
            if !keep.contains(&i) {
                cells[i] = if value {
                    crate::restriction::Cell::One
                } else {
                    crate::restriction::Cell::Zero
                };
            }
        }
    }
    let restricted = p.restrict(&crate::restriction::Restriction::new(cells))?;
    // Only the blocks matter; extend the partition with singletons elsewhere.
    let covered = blocks.covered_mask();
    let mut all = blocks.blocks().to_vec();
    all.extend((0..n).filter(|&i| covered >> i & 1 == 0).map(|i| vec![i]));
    is_set_multilinear(&restricted, &Partition::new(all)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{And, FnFunction};

    #[test]
    fn tv_examples() {
        let u = Distribution::uniform(1).unwrap();
        let p = Distribution::point(1, 0).unwrap();
        assert_eq!(tv_distance(&u, &p).unwrap(), 0.5);
        assert_eq!(tv_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(
            tv_distance(&u, &Distribution::uniform(2).unwrap()),
            Err(Error::SupportMismatch(2, 4))
        );
    }

    #[test]
    fn corr_examples() {
        let x1 = Parity::dictator(2, 0);
        let and = And { arity: 2, mask: 3 };
        assert_eq!(corr_exact(&x1, &and).unwrap().value, 0.5);
        assert_eq!(corr_exact(&x1, &x1).unwrap().value, 1.0);
        let and3 = And { arity: 3, mask: 3 };
        assert_eq!(corr_exact(&Parity::full(3), &and3).unwrap().value, 0.0);
        assert!(corr_exact(&x1, &Parity::full(3)).is_err());
    }

    #[test]
    fn corr_report_json() {
        let r = corr_exact(&Parity::full(2), &Parity::full(2)).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"value":1.0,"mode":"exact","samples":null,"radius":0.0,"argmax_descriptor":null}"#
        );
    }

    #[test]
    fn junta_class_sizes() {
        // functions depending on exactly 0, 1, 2 variables of 3
        let c = AdversaryClass::Juntas {
            n: 3,
            width: 2,
            supports: None,
        };
        assert_eq!(c.size().unwrap(), Some(2 + 3 * 2 + 3 * 10));
        let nof = AdversaryClass::Nof1Bit { b: 1 };
        assert_eq!(nof.size().unwrap(), Some(6));
    }

    #[test]
    fn set_multilinear_monomial_count() {
        let p = Partition::contiguous(2, 2).unwrap();
        assert_eq!(set_multilinear_monomials(&p, 1).len(), 4);
        assert_eq!(set_multilinear_monomials(&p, 2).len(), 8);
    }

    #[test]
    fn affine_fast_path_matches_generic() {
        let f = FnFunction::new(5, |x| (x * 13 + 7) % 11 < 4);
        let fast = corr_class_max(&f, &AdversaryClass::Affine { n: 5 }).unwrap();
        let p = Partition::new((0..5).map(|i| vec![i]).collect()).unwrap();
        let slow = corr_class_max(
            &f,
            &AdversaryClass::SetMultilinear {
                partition: p,
                max_degree: 1,
            },
        )
        .unwrap();
        assert_eq!(fast.value, slow.value);
    }

    #[test]
    fn norms() {
        let ip1 = And { arity: 2, mask: 3 };
        assert_eq!(kparty_norm(&ip1, 2, 1).unwrap(), 0.5);
        assert_eq!(kparty_norm(&Parity::constant(2, false), 2, 1).unwrap(), 1.0);
        assert_eq!(kparty_norm(&Parity::dictator(2, 0), 2, 1).unwrap(), 1.0);
    }

    #[test]
    fn anf_degrees() {
        assert_eq!(anf_degree(&And { arity: 3, mask: 7 }).unwrap(), 3);
        assert_eq!(anf_degree(&Parity::full(4)).unwrap(), 1);
        assert_eq!(anf_degree(&Parity::constant(4, true)).unwrap(), 0);
    }

    #[test]
    fn bound_formula() {
        assert!((extffm_bound(2, 2, 0.5) - (1.0 + 1.0 + 0.5)).abs() < 1e-12);
    }
}

//! Bit-fixing sources, seeded and seedless extractors, and limited-independence
//! samplers.
//!
//! All sources and outputs here are at most 64 bits and travel packed in a
//! `u64` (coordinate `i` at bit `i`). Seeds are explicit [`Bits`].

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::corr::Distribution;
use crate::error::{Error, Result};
use crate::gf2::FieldSpec;
use crate::models::arity_mask;

pub const MAX_SOURCE_LEN: usize = 64;

/// Largest seed length [`certify_seeded`] will sweep.
pub const MAX_SWEEP_SEED_LEN: usize = 24;

/// Scatter the low bits of `v` onto the set bits of `mask`, lowest first.
#[inline]
pub fn deposit(mut v: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if v & 1 == 1 {
            out |= low;
        }
        v >>= 1;
        mask ^= low;
    }
    out
}

fn check_len(n: usize) -> Result<()> {
    if n > MAX_SOURCE_LEN {
        return Err(Error::ArityTooLarge {
            arity: n,
            limit: MAX_SOURCE_LEN,
        });
    }
    Ok(())
}

/// An oblivious bit-fixing source: the fixed positions carry constants and the
/// free positions are independent uniform bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitFixingSource {
    n: usize,
    free: u64,
    fixed: u64,
}

impl BitFixingSource {
    pub fn new(n: usize, fixed: &BTreeMap<usize, bool>) -> Result<Self> {
        check_len(n)?;
        let mut fixed_mask = 0u64;
        let mut values = 0u64;
        for (&i, &b) in fixed {
            if i >= n {
                return Err(Error::ShapeMismatch(format!(
                    "fixed position {i} outside length {n}"
                )));
            }
            fixed_mask |= 1 << i;
            values |= (b as u64) << i;
        }
        Ok(BitFixingSource {
            n,
            free: arity_mask(n) & !fixed_mask,
            fixed: values,
        })
    }

    /// Free positions given by `free`; the others take their value from `values`.
    pub fn from_masks(n: usize, free: u64, values: u64) -> Result<Self> {
        check_len(n)?;
        let full = arity_mask(n);
        if free & !full != 0 {
            return Err(Error::ShapeMismatch(format!(
                "free mask {free:#x} exceeds length {n}"
            )));
        }
        Ok(BitFixingSource {
            n,
            free,
            fixed: values & full & !free,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_masks(n, arity_mask(n), 0)
    }

    /// Every source on `n` bits with exactly `k` free positions, free sets in
    /// increasing mask order and fixings in increasing value order.
    pub fn all(n: usize, k: usize) -> Result<Vec<Self>> {
        if n > 24 || k > n {
            return Err(Error::ParameterOutOfRange(format!(
                "cannot enumerate all ({n}, {k}) bit-fixing sources"
            )));
        }
        let full = arity_mask(n);
        let mut out = Vec::new();
        for free in 0..=full {
            if free.count_ones() as usize != k {
                continue;
            }
            let fixed_mask = full & !free;
            for v in 0..1u64 << (n - k) {
                out.push(BitFixingSource {
                    n,
                    free,
                    fixed: deposit(v, fixed_mask),
                });
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn free_mask(&self) -> u64 {
        self.free
    }

    pub fn fixed_values(&self) -> u64 {
        self.fixed
    }

    pub fn free_positions(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.free >> i & 1 == 1).collect()
    }

    pub fn min_entropy(&self) -> usize {
        self.free.count_ones() as usize
    }

    pub fn sample_u64<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        (rng.gen::<u64>() & self.free) | self.fixed
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Bits {
        Bits::from_u64(self.sample_u64(rng), self.n)
    }

    /// All `2^k` equally likely outcomes in increasing order.
    pub fn outcomes(&self) -> impl Iterator<Item = u64> + '_ {
        let free = self.free;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let s = next?;
            let succ = ((s | !free).wrapping_add(1)) & free;
            next = if succ == 0 { None } else { Some(succ) };
            Some(s | self.fixed)
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SourceWire {
    n: usize,
    fixed: BTreeMap<usize, u8>,
}

impl Serialize for BitFixingSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let fixed = (0..self.n)
            .filter(|&i| self.free >> i & 1 == 0)
            .map(|i| (i, (self.fixed >> i & 1) as u8))
            .collect();
        SourceWire { n: self.n, fixed }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitFixingSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = SourceWire::deserialize(d)?;
        let fixed = w.fixed.into_iter().map(|(i, b)| (i, b != 0)).collect();
        BitFixingSource::new(w.n, &fixed).map_err(serde::de::Error::custom)
    }
}

/// Block parities of the first `m * r` bits of `x`, block `i` being bits `i*r..(i+1)*r`.
#[inline]
pub fn parity_blocks_word(m: usize, r: usize, x: u64) -> u64 {
    let block = arity_mask(r);
    (0..m).fold(0, |acc, i| {
        acc | (((x >> (i * r)) & block).count_ones() as u64 & 1) << i
    })
}

pub fn parity_blocks(m: usize, r: usize, x: &Bits) -> Result<Bits> {
    if x.len() != m * r {
        return Err(Error::LengthMismatch {
            expected: m * r,
            got: x.len(),
        });
    }
    let mut out = Bits::zeros(m);
    for i in 0..m {
        let ones = (0..r).filter(|&j| x.get(i * r + j)).count();
        out.set(i, ones % 2 == 1);
    }
    Ok(out)
}

/// Rows of the `m x n` Toeplitz matrix `T[i][j] = seed[i - j + n - 1]`.
pub fn toeplitz_rows(n: usize, m: usize, seed: &Bits) -> Vec<u64> {
    (0..m)
        .map(|i| seed.slice_u64(i, n).reverse_bits() >> (64 - n))
        .collect()
}

#[inline]
pub fn apply_rows(rows: &[u64], x: u64) -> u64 {
    rows.iter().enumerate().fold(0, |acc, (i, &row)| {
        acc | ((row & x).count_ones() as u64 & 1) << i
    })
}

/// Toeplitz hashing: `T x` with `T` read from the first `n + m - 1` seed bits.
/// The seed is `2n` bits long.
pub fn lhl_extract(x: &Bits, seed: &Bits, m: usize) -> Result<Bits> {
    let n = x.len();
    check_len(n)?;
    if m > n {
        return Err(Error::OutputTooLong {
            requested: m,
            max: n,
        });
    }
    if seed.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            got: seed.len(),
        });
    }
    if n == 0 {
        return Ok(Bits::zeros(m));
    }
    let rows = toeplitz_rows(n, m, seed);
    Ok(Bits::from_u64(apply_rows(&rows, x.to_u64()?), m))
}

/// Walk on the odd cycle `Z_M`: start at 0, step `+1` on a one and `-1` on a
/// zero, and output the endpoint reduced mod `2^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleWalk {
    n: usize,
    cycle: u64,
    m: usize,
}

/// Largest odd cycle length not exceeding `2^(m+1)`.
pub fn default_cycle(m: usize) -> u64 {
    (1u64 << (m + 1)) - 1
}

fn ceil_log2(x: u64) -> usize {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as usize
    }
}

impl CycleWalk {
    pub fn new(n: usize, cycle: u64, m: usize) -> Result<Self> {
        check_len(n)?;
        if cycle % 2 == 0 {
            return Err(Error::ParameterOutOfRange(format!(
                "cycle length {cycle} is not odd"
            )));
        }
        let max = ceil_log2(cycle);
        if m > max {
            return Err(Error::OutputTooLong { requested: m, max });
        }
        Ok(CycleWalk { n, cycle, m })
    }

    pub fn with_default_cycle(n: usize, m: usize) -> Result<Self> {
        if m >= 62 {
            return Err(Error::ParameterOutOfRange(format!(
                "output length {m} too large for a cycle walk"
            )));
        }
        Self::new(n, default_cycle(m), m)
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    #[inline]
    pub fn endpoint(&self, x: u64) -> u64 {
        let ones = (x & arity_mask(self.n)).count_ones() as i64;
        (2 * ones - self.n as i64).rem_euclid(self.cycle as i64) as u64
    }

    #[inline]
    pub fn extract(&self, x: u64) -> u64 {
        self.endpoint(x) & arity_mask(self.m)
    }
}

pub fn kz_extract(x: &Bits, m: usize) -> Result<Bits> {
    let walk = CycleWalk::with_default_cycle(x.len(), m)?;
    Ok(Bits::from_u64(walk.extract(x.to_u64()?), m))
}

/// The extractor families used by hard functions and experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extractor {
    Identity { n: usize },
    Parity { m: usize, r: usize },
    Toeplitz { n: usize, m: usize },
    Cycle(CycleWalk),
}

impl Extractor {
    pub fn identity(n: usize) -> Result<Self> {
        check_len(n)?;
        Ok(Extractor::Identity { n })
    }

    pub fn parity(m: usize, r: usize) -> Result<Self> {
        check_len(m * r)?;
        if r == 0 {
            return Err(Error::ParameterOutOfRange(
                "parity blocks need r >= 1".into(),
            ));
        }
        Ok(Extractor::Parity { m, r })
    }

    pub fn toeplitz(n: usize, m: usize) -> Result<Self> {
        check_len(n)?;
        if m > n {
            return Err(Error::OutputTooLong {
                requested: m,
                max: n,
            });
        }
        if n == 0 {
            return Err(Error::ParameterOutOfRange(
                "Toeplitz extractor needs n >= 1".into(),
            ));
        }
        Ok(Extractor::Toeplitz { n, m })
    }

    pub fn input_len(&self) -> usize {
        match *self {
            Extractor::Identity { n } | Extractor::Toeplitz { n, .. } => n,
            Extractor::Parity { m, r } => m * r,
            Extractor::Cycle(w) => w.input_len(),
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            Extractor::Identity { n } => n,
            Extractor::Parity { m, .. } | Extractor::Toeplitz { m, .. } => m,
            Extractor::Cycle(w) => w.output_len(),
        }
    }

    pub fn seed_len(&self) -> usize {
        match *self {
            Extractor::Toeplitz { n, .. } => 2 * n,
            _ => 0,
        }
    }

    /// Linear over F2 for every fixed seed.
    pub fn is_linear(&self) -> bool {
        !matches!(self, Extractor::Cycle(_))
    }

    /// Evaluate on a packed input; seedless families ignore `seed`.
    #[inline]
    pub fn extract(&self, x: u64, seed: &Bits) -> u64 {
        match *self {
            Extractor::Identity { n } => x & arity_mask(n),
            Extractor::Parity { m, r } => parity_blocks_word(m, r, x),
            Extractor::Toeplitz { n, m } => apply_rows(&toeplitz_rows(n, m, seed), x),
            Extractor::Cycle(w) => w.extract(x),
        }
    }

    /// The per-seed map, precomputed where that helps.
    pub fn fix_seed(&self, seed: &Bits) -> Result<FixedExtractor> {
        if seed.len() != self.seed_len() {
            return Err(Error::LengthMismatch {
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        Ok(match *self {
            Extractor::Toeplitz { n, m } => FixedExtractor::Rows(toeplitz_rows(n, m, seed)),
            other => FixedExtractor::Seedless(other),
        })
    }

    pub fn extract_bits(&self, x: &Bits, seed: &Bits) -> Result<Bits> {
        if x.len() != self.input_len() {
            return Err(Error::LengthMismatch {
                expected: self.input_len(),
                got: x.len(),
            });
        }
        let f = self.fix_seed(seed)?;
        Ok(Bits::from_u64(f.apply(x.to_u64()?), self.output_len()))
    }

    /// For a square Toeplitz extractor, the seed whose matrix is the identity.
    pub fn identity_seed(&self) -> Option<Bits> {
        match *self {
            Extractor::Toeplitz { n, m } if n == m => {
                let mut s = Bits::zeros(2 * n);
                s.set(n - 1, true);
                Some(s)
            }
            _ => None,
        }
    }
}

/// An extractor with its seed fixed.
#[derive(Clone, Debug)]
pub enum FixedExtractor {
    Rows(Vec<u64>),
    Seedless(Extractor),
}

impl FixedExtractor {
    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        match self {
            FixedExtractor::Rows(rows) => apply_rows(rows, x),
            FixedExtractor::Seedless(e) => e.extract(x, &Bits::zeros(0)),
        }
    }
}

#[derive(Serialize, Deserialize, Default)]
struct ExtractorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cycle: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct ExtractorWire {
    family: String,
    n: usize,
    m: usize,
    #[serde(default)]
    parameters: ExtractorParams,
}

impl Serialize for Extractor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (family, parameters) = match *self {
            Extractor::Identity { .. } => ("identity", ExtractorParams::default()),
            Extractor::Parity { r, .. } => (
                "parity",
                ExtractorParams {
                    r: Some(r),
                    ..Default::default()
                },
            ),
            Extractor::Toeplitz { .. } => ("lhl", ExtractorParams::default()),
            Extractor::Cycle(w) => (
                "kz",
                ExtractorParams {
                    cycle: Some(w.cycle()),
                    ..Default::default()
                },
            ),
        };
        ExtractorWire {
            family: family.into(),
            n: self.input_len(),
            m: self.output_len(),
            parameters,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Extractor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = ExtractorWire::deserialize(d)?;
        let e = match w.family.as_str() {
            "identity" => {
                if w.m != w.n {
                    return Err(D::Error::custom("identity extractor needs m = n"));
                }
                Extractor::identity(w.n)
            }
            "parity" => {
                let r = match w.parameters.r {
                    Some(r) => r,
                    None if w.m > 0 && w.n % w.m == 0 => w.n / w.m,
                    None => return Err(D::Error::custom("parity extractor needs m | n")),
                };
                if w.m * r != w.n {
                    return Err(D::Error::custom("parity extractor needs n = m * r"));
                }
                Extractor::parity(w.m, r)
            }
            "lhl" | "toeplitz" => Extractor::toeplitz(w.n, w.m),
            "kz" | "cycle" => {
                let cycle = w.parameters.cycle.unwrap_or_else(|| default_cycle(w.m));
                CycleWalk::new(w.n, cycle, w.m).map(Extractor::Cycle)
            }
            other => {
                return Err(D::Error::custom(format!(
                    "unknown extractor family {other:?}"
                )))
            }
        };
        e.map_err(D::Error::custom)
    }
}

/// Image of `source` under the seed-fixed extractor, as outcome counts.
pub fn output_distribution(
    ext: &FixedExtractor,
    m: usize,
    source: &BitFixingSource,
) -> Distribution {
    let mut counts = vec![0u64; 1 << m];
    for x in source.outcomes() {
        counts[ext.apply(x) as usize] += 1;
    }
    Distribution::from_counts(counts).expect("nonempty source")
}

/// `TV(counts / 2^k, U_m)` as a numerator over `2^(k + m + 1)`.
fn tv_numerator(counts: &[u64], k: usize, m: usize) -> u64 {
    let unit = 1u64 << k;
    counts.iter().map(|&c| (c << m).abs_diff(unit)).sum()
}

/// Exhaustive strong-extractor measurements over every seed and the given sources.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongReport {
    pub n: usize,
    pub m: usize,
    pub seed_len: usize,
    pub sources: usize,
    pub epsilon: f64,
    /// Largest (over sources) seed-averaged TV from uniform.
    pub max_average_tv: f64,
    /// Smallest (over sources) fraction of seeds whose TV is at most `epsilon`.
    pub min_good_fraction: f64,
    /// Fraction of seeds whose TV is at most `epsilon` against every source at once.
    pub uniform_good_fraction: f64,
    /// Smallest `e` such that, for every source, at most an `e` fraction of
    /// seeds have TV above `e`, and every seed-averaged TV is at most `e`.
    pub measured_epsilon: f64,
    pub average_ok: bool,
    pub strong_ok: bool,
}

pub fn certify_seeded(
    ext: &Extractor,
    sources: &[BitFixingSource],
    epsilon: f64,
) -> Result<StrongReport> {
    let (n, m, s) = (ext.input_len(), ext.output_len(), ext.seed_len());
    if s > MAX_SWEEP_SEED_LEN {
        return Err(Error::BudgetExceeded(format!(
            "seed length {s} exceeds sweep limit {MAX_SWEEP_SEED_LEN}"
        )));
    }
    if m > 20 {
        return Err(Error::BudgetExceeded(format!(
            "output length {m} too large to tally"
        )));
    }
    if sources.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "no sources to certify against".into(),
        ));
    }
    for src in sources {
        if src.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: src.len(),
            });
        }
    }
    let shifts: Vec<usize> = sources.iter().map(|s| s.min_entropy() + m + 1).collect();
    let max_shift = *shifts.iter().max().unwrap();
    // TV numerators rescaled to the common denominator 2^max_shift.
    let scale: Vec<u32> = shifts.iter().map(|&k| (max_shift - k) as u32).collect();
    let eps_num = (epsilon * (1u128 << max_shift) as f64).floor() as u64;

    #[derive(Clone)]
    struct Acc {
        sum: Vec<u128>,
        hist: Vec<BTreeMap<u64, u64>>,
        all_good: u64,
    }
    let empty = Acc {
        sum: vec![0; sources.len()],
        hist: vec![BTreeMap::new(); sources.len()],
        all_good: 0,
    };
    let acc = (0..1u64 << s)
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, seed| {
                let fixed = ext
                    .fix_seed(&Bits::from_u64(seed, s))
                    .expect("seed length checked");
                let mut good = true;
                let mut counts = vec![0u64; 1 << m];
                for (j, src) in sources.iter().enumerate() {
                    counts.iter_mut().for_each(|c| *c = 0);
                    for x in src.outcomes() {
                        counts[fixed.apply(x) as usize] += 1;
                    }
                    let tv = tv_numerator(&counts, src.min_entropy(), m) << scale[j];
                    acc.sum[j] += tv as u128;
                    *acc.hist[j].entry(tv).or_insert(0) += 1;
                    good &= tv <= eps_num;
                }
                acc.all_good += good as u64;
                acc
            },
        )
        .reduce(
            || empty.clone(),
            |mut a, b| {
                for j in 0..a.sum.len() {
                    a.sum[j] += b.sum[j];
                    for (&k, &v) in &b.hist[j] {
                        *a.hist[j].entry(k).or_insert(0) += v;
                    }
                }
                a.all_good += b.all_good;
                a
            },
        );

    let seeds = (1u64 << s) as f64;
    let den = (1u128 << max_shift) as f64;
    let max_average_tv = acc
        .sum
        .iter()
        .map(|&t| t as f64 / den / seeds)
        .fold(0.0, f64::max);
    let mut min_good = 1.0f64;
    let mut measured = max_average_tv;
    for h in &acc.hist {
        let good: u64 = h.range(..=eps_num).map(|(_, c)| c).sum();
        min_good = min_good.min(good as f64 / seeds);
        // For each threshold t, the fraction of seeds strictly above t.
        let mut above = 1u64 << s;
        let mut best = f64::INFINITY;
        let mut candidates = vec![(0u64, 0u64)];
        candidates.extend(h.iter().map(|(&t, &c)| (t, c)));
        for (t, c) in candidates {
            above -= c;
            best = best.min((t as f64 / den).max(above as f64 / seeds));
        }
        measured = measured.max(best);
    }
    Ok(StrongReport {
        n,
        m,
        seed_len: s,
        sources: sources.len(),
        epsilon,
        max_average_tv,
        min_good_fraction: min_good,
        uniform_good_fraction: acc.all_good as f64 / seeds,
        measured_epsilon: measured,
        average_ok: max_average_tv <= epsilon,
        strong_ok: min_good >= 1.0 - epsilon,
    })
}

/// `max(1, ceil(log2 n))`: the field width used to index `n` evaluation points.
pub fn index_field_width(n: usize) -> u32 {
    ceil_log2(n as u64).max(1) as u32
}

/// Exact `k`-wise uniform bits: evaluations of a random polynomial of degree
/// `< k` over `F_{2^b}` at the points `0, 1, ..., n-1`, keeping the constant
/// coefficient of each value.
///
/// Seed layout: coefficient `j` of the polynomial is seed bits `j*b..(j+1)*b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KwiseSampler {
    n: usize,
    k: usize,
    field: FieldSpec,
}

impl KwiseSampler {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_len(n)?;
        if k == 0 || k > n {
            return Err(Error::ParameterOutOfRange(format!(
                "k = {k} must satisfy 1 <= k <= n = {n}"
            )));
        }
        Ok(KwiseSampler {
            n,
            k,
            field: FieldSpec::default_for(index_field_width(n))?,
        })
    }

    pub fn output_len(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn seed_len(&self) -> usize {
        self.k * self.field.width() as usize
    }

    /// Unchecked: `seed` must be at least `seed_len` bits.
    #[inline]
    pub fn sample(&self, seed: &Bits) -> u64 {
        let b = self.field.width() as usize;
        let coeffs: smallvec::SmallVec<[u64; 16]> =
            (0..self.k).map(|j| seed.slice_u64(j * b, b)).collect();
        self.eval_coeffs(&coeffs)
    }

    /// `sample` on a packed seed; needs `seed_len <= 64`.
    #[inline]
    pub fn sample_u64(&self, seed: u64) -> u64 {
        let b = self.field.width() as usize;
        let coeffs: smallvec::SmallVec<[u64; 16]> = (0..self.k)
            .map(|j| (seed >> (j * b)) & arity_mask(b))
            .collect();
        self.eval_coeffs(&coeffs)
    }

    fn eval_coeffs(&self, coeffs: &[u64]) -> u64 {
        let mut out = 0u64;
        for i in 0..self.n {
            let alpha = i as u64;
            let v = coeffs
                .iter()
                .rev()
                .fold(0u64, |acc, &c| self.field.mul_raw(acc, alpha) ^ c);
            out |= (v & 1) << i;
        }
        out
    }
}

pub fn sample_kwise(n: usize, k: usize, seed: &Bits) -> Result<Bits> {
    let s = KwiseSampler::new(n, k)?;
    if seed.len() != s.seed_len() {
        return Err(Error::LengthMismatch {
            expected: s.seed_len(),
            got: seed.len(),
        });
    }
    Ok(Bits::from_u64(s.sample(seed), n))
}

/// The powering small-bias generator: seed `(x, y)` in `F_{2^w}^2`, output bit
/// `j` is `<x^j, y>` for `j = 0..len`. Bias at most `(len - 1) / 2^w`.
///
/// Seed layout: `x` is bits `0..w`, `y` is bits `w..2w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallBiasSampler {
    len: usize,
    field: FieldSpec,
}

impl SmallBiasSampler {
    pub fn new(len: usize, width: u32) -> Result<Self> {
        Ok(SmallBiasSampler {
            len,
            field: FieldSpec::default_for(width)?,
        })
    }

    /// The narrowest field guaranteeing bias at most `eps`.
    pub fn for_bias(len: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "bias {eps} outside (0, 1]"
            )));
        }
        let need = (len.saturating_sub(1) as f64 / eps).log2().ceil();
        let width = if need.is_finite() && need > 1.0 {
            need as u32
        } else {
            1
        };
        if width > crate::gf2::MAX_WIDTH {
            return Err(Error::ParameterOutOfRange(format!(
                "bias {eps} needs a field wider than 64 bits"
            )));
        }
        Self::new(len, width)
    }

    pub fn output_len(&self) -> usize {
        self.len
    }

    pub fn width(&self) -> u32 {
        self.field.width()
    }

    pub fn seed_len(&self) -> usize {
        2 * self.field.width() as usize
    }

    pub fn bias_bound(&self) -> f64 {
        self.len.saturating_sub(1) as f64 / self.field.order() as f64
    }

    /// `sample` on a packed seed; needs `seed_len <= 64` and `len <= 64`.
    #[inline]
    pub fn sample_u64(&self, seed: u64) -> u64 {
        let w = self.field.width() as usize;
        let (x, y) = (seed & arity_mask(w), (seed >> w) & arity_mask(w));
        let mut out = 0u64;
        let mut p = 1u64;
        for j in 0..self.len {
            out |= (((p & y).count_ones() & 1) as u64) << j;
            p = self.field.mul_raw(p, x);
        }
        out
    }

    pub fn sample(&self, seed: &Bits) -> Bits {
        let w = self.field.width() as usize;
        let x = seed.slice_u64(0, w);
        let y = seed.slice_u64(w, w);
        let mut out = Bits::zeros(self.len);
        let mut p = 1u64;
        for j in 0..self.len {
            out.set(j, (p & y).count_ones() & 1 == 1);
            p = self.field.mul_raw(p, x);
        }
        out
    }
}

/// `delta`-almost `k`-wise uniform bits: a small-bias string fed through the
/// linear map of [`KwiseSampler`]. Any `k` outputs are a linear image of the
/// small-bias string with independent rows, so every nonempty parity of at
/// most `k` outputs has bias at most `delta / 2^(k/2)`, which keeps each
/// `k`-coordinate marginal within `delta` of uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlmostKwiseSampler {
    kwise: KwiseSampler,
    bias: SmallBiasSampler,
    delta: f64,
}

impl AlmostKwiseSampler {
    pub fn new(n: usize, k: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "delta {delta} outside (0, 1]"
            )));
        }
        let kwise = KwiseSampler::new(n, k)?;
        let eps = delta / 2f64.powf(k as f64 / 2.0);
        let bias = SmallBiasSampler::for_bias(kwise.seed_len(), eps)?;
        Ok(AlmostKwiseSampler { kwise, bias, delta })
    }

    pub fn output_len(&self) -> usize {
        self.kwise.output_len()
    }

    pub fn k(&self) -> usize {
        self.kwise.k()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed_len(&self) -> usize {
        self.bias.seed_len()
    }

    pub fn bias_bound(&self) -> f64 {
        self.bias.bias_bound()
    }

    #[inline]
    pub fn sample(&self, seed: &Bits) -> u64 {
        self.kwise.sample(&self.bias.sample(seed))
    }

    /// `sample` on a packed seed.
    #[inline]
    pub fn sample_u64(&self, seed: u64) -> u64 {
        if self.seed_len() <= 64 && self.kwise.seed_len() <= 64 {
            self.kwise.sample_u64(self.bias.sample_u64(seed))
        } else {
            self.sample(&Bits::from_u64(seed, self.seed_len()))
        }
    }
}

pub fn sample_almost_kwise(n: usize, k: usize, delta: f64, seed: &Bits) -> Result<Bits> {
    let s = AlmostKwiseSampler::new(n, k, delta)?;
    if seed.len() != s.seed_len() {
        return Err(Error::LengthMismatch {
            expected: s.seed_len(),
            got: seed.len(),
        });
    }
    Ok(Bits::from_u64(s.sample(seed), n))
}

/// Bits that are close to `Ber(1/d)^n` on every `l` coordinates: the AND of
/// `log2 d` independent almost-`l`-wise uniform strings, each with error
/// `delta / log2 d`. `d` is rounded up to a power of two; `l` is capped at `n`.
///
/// Seed layout: the strings' seeds one after another.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerSampler {
    n: usize,
    d: u64,
    strings: usize,
    part: Option<AlmostKwiseSampler>,
}

impl BerSampler {
    pub fn new(n: usize, d: u64, ell: usize, delta: f64) -> Result<Self> {
        check_len(n)?;
        if d == 0 {
            return Err(Error::ParameterOutOfRange("d must be at least 1".into()));
        }
        let d = d
            .checked_next_power_of_two()
            .ok_or_else(|| Error::ParameterOutOfRange(format!("d = {d} too large")))?;
        let strings = d.trailing_zeros() as usize;
        let part = if strings == 0 || n == 0 {
            None
        } else {
            Some(AlmostKwiseSampler::new(
                n,
                ell.clamp(1, n),
                delta / strings as f64,
            )?)
        };
        Ok(BerSampler {
            n,
            d,
            strings,
            part,
        })
    }

    pub fn output_len(&self) -> usize {
        self.n
    }

    /// `d` after rounding up to a power of two.
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn strings(&self) -> usize {
        self.strings
    }

    pub fn part(&self) -> Option<&AlmostKwiseSampler> {
        self.part.as_ref()
    }

    pub fn seed_len(&self) -> usize {
        self.part.map_or(0, |p| self.strings * p.seed_len())
    }

    #[inline]
    pub fn sample(&self, seed: &Bits) -> u64 {
        let Some(p) = self.part else {
            return arity_mask(self.n);
        };
        let len = p.seed_len();
        (0..self.strings).fold(arity_mask(self.n), |acc, j| {
            acc & p.sample(&seed.slice(j * len, len))
        })
    }

    /// `sample` on a packed seed; needs `seed_len <= 64`.
    #[inline]
    pub fn sample_u64(&self, seed: u64) -> u64 {
        let Some(p) = self.part else {
            return arity_mask(self.n);
        };
        let len = p.seed_len();
        (0..self.strings).fold(arity_mask(self.n), |acc, j| {
            acc & p.sample_u64((seed >> (j * len)) & arity_mask(len))
        })
    }
}

pub fn sample_ber_almost_kwise(
    n: usize,
    d: u64,
    ell: usize,
    delta: f64,
    seed: &Bits,
) -> Result<Bits> {
    let s = BerSampler::new(n, d, ell, delta)?;
    if seed.len() != s.seed_len() {
        return Err(Error::LengthMismatch {
            expected: s.seed_len(),
            got: seed.len(),
        });
    }
    Ok(Bits::from_u64(s.sample(seed), n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn deposit_spreads_bits() {
        assert_eq!(deposit(0b101, 0b1011_0000), 0b1001_0000);
        assert_eq!(deposit(0b111, 0b1011), 0b1011);
    }

    #[test]
    fn source_outcomes_enumerate_free_bits() {
        let src = BitFixingSource::from_masks(5, 0b10010, 0b00101).unwrap();
        let outs: Vec<u64> = src.outcomes().collect();
        assert_eq!(outs, vec![0b00101, 0b00111, 0b10101, 0b10111]);
        assert_eq!(src.min_entropy(), 2);
        assert_eq!(BitFixingSource::all(8, 5).unwrap().len(), 56 * 8);
        let json = serde_json::to_string(&src).unwrap();
        assert_eq!(json, r#"{"n":5,"fixed":{"0":1,"2":1,"3":0}}"#);
        assert_eq!(serde_json::from_str::<BitFixingSource>(&json).unwrap(), src);
    }

    #[test]
    fn parity_blocks_examples() {
        assert_eq!(parity_blocks(2, 2, &b("1101")).unwrap(), b("01"));
        let x = b("10110");
        assert_eq!(parity_blocks(5, 1, &x).unwrap(), x);
        assert!(parity_blocks(2, 2, &b("110")).is_err());
        assert_eq!(parity_blocks_word(2, 2, 0b1011), 0b10);
    }

    #[test]
    fn toeplitz_layout() {
        // n = 3, m = 2: T[i][j] = s[i - j + 2]
        let seed = b("010011");
        let rows = toeplitz_rows(3, 2, &seed);
        // row 0: s2 s1 s0 = 0 1 0 ; row 1: s3 s2 s1 = 0 0 1
        assert_eq!(rows, vec![0b010, 0b100]);
        let x = b("011");
        assert_eq!(lhl_extract(&x, &seed, 2).unwrap(), b("11"));
        assert_eq!(lhl_extract(&x, &Bits::zeros(6), 2).unwrap(), b("00"));
        assert_eq!(
            lhl_extract(&x, &seed, 4),
            Err(Error::OutputTooLong {
                requested: 4,
                max: 3
            })
        );
    }

    #[test]
    fn identity_seed_is_identity() {
        let e = Extractor::toeplitz(4, 4).unwrap();
        let s = e.identity_seed().unwrap();
        for x in 0..16 {
            assert_eq!(e.extract(x, &s), x);
        }
    }

    #[test]
    fn cycle_walk_endpoints() {
        let w = CycleWalk::with_default_cycle(16, 4).unwrap();
        assert_eq!(w.cycle(), 31);
        assert_eq!(w.endpoint(0), 15);
        assert_eq!(w.endpoint(0xffff), 16);
        assert_eq!(
            kz_extract(&Bits::ones(16), 4).unwrap(),
            Bits::from_u64(0, 4)
        );
        assert!(CycleWalk::new(4, 8, 2).is_err());
        assert!(matches!(
            CycleWalk::new(4, 7, 4),
            Err(Error::OutputTooLong { .. })
        ));
    }

    #[test]
    fn extractor_descriptors_round_trip() {
        for e in [
            Extractor::identity(4).unwrap(),
            Extractor::parity(3, 2).unwrap(),
            Extractor::toeplitz(8, 1).unwrap(),
            Extractor::Cycle(CycleWalk::with_default_cycle(16, 4).unwrap()),
        ] {
            let json = serde_json::to_string(&e).unwrap();
            assert_eq!(
                serde_json::from_str::<Extractor>(&json).unwrap(),
                e,
                "{json}"
            );
        }
        let json = serde_json::to_string(&Extractor::toeplitz(8, 1).unwrap()).unwrap();
        assert_eq!(json, r#"{"family":"lhl","n":8,"m":1,"parameters":{}}"#);
    }

    #[test]
    fn small_bias_layout() {
        let s = SmallBiasSampler::new(4, 2).unwrap();
        // x = 1 (bits 0..2 = "10"), y = 1 ("10"): x^j = 1, <1, 1> = 1
        assert_eq!(s.sample(&b("1010")), b("1111"));
        assert_eq!(s.seed_len(), 4);
        assert_eq!(s.bias_bound(), 0.75);
    }

    #[test]
    fn sampler_parameter_checks() {
        assert!(KwiseSampler::new(4, 5).is_err());
        assert!(KwiseSampler::new(4, 0).is_err());
        assert!(AlmostKwiseSampler::new(8, 3, 0.0).is_err());
        let ber = BerSampler::new(8, 3, 3, 0.1).unwrap();
        assert_eq!((ber.d(), ber.strings()), (4, 2));
        let one = BerSampler::new(8, 1, 3, 0.1).unwrap();
        assert_eq!(one.seed_len(), 0);
        assert_eq!(one.sample(&Bits::zeros(0)), 0xff);
    }
}

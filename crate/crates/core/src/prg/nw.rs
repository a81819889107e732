use serde::{Deserialize, Serialize};

use super::design::{smallest_design, Design, DEFAULT_NODE_BUDGET};
use super::{check_output_len, Generator, GeneratorDescriptor, IdentityGenerator};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::extract::Extractor;
use crate::hardfn::FunctionDescriptor;
use crate::models::{BooleanFunction, DynFunction};

/// Output bit `i` is `h` applied to the seed bits in `sets[i]`, ascending.
pub fn nw_generate<H: BooleanFunction + ?Sized>(
    h: &H,
    design: &Design,
    seed: &Bits,
) -> Result<Bits> {
    if seed.len() != design.universe() {
        return Err(Error::ShapeMismatch(format!(
            "seed has {} bits, design universe is {}",
            seed.len(),
            design.universe()
        )));
    }
    if h.arity() != design.set_size() {
        return Err(Error::ShapeMismatch(format!(
            "hard function has arity {}, design sets have size {}",
            h.arity(),
            design.set_size()
        )));
    }
    Ok(Bits::from_bools(
        &design
            .sets()
            .iter()
            .map(|set| h.eval(gather(seed, set)))
            .collect::<Vec<_>>(),
    ))
}

#[inline]
fn gather(seed: &Bits, set: &[usize]) -> u64 {
    set.iter()
        .enumerate()
        .fold(0, |acc, (j, &i)| acc | (seed.get(i) as u64) << j)
}

#[inline]
fn gather_u128(seed: u128, set: &[usize]) -> u64 {
    set.iter()
        .enumerate()
        .fold(0, |acc, (j, &i)| acc | ((seed >> i) as u64 & 1) << j)
}

/// Free constants of the junta generator, recorded in every descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JuntaConstants {
    /// Leading multiplier of the set size.
    #[serde(rename = "C")]
    pub mult: f64,
    /// Exponent multiplier in the `2^(c sqrt(log n))` factor.
    #[serde(rename = "c")]
    pub exponent: f64,
    /// Return the identity generator instead of failing when `r >= n`.
    #[serde(default)]
    pub pass_through: bool,
    #[serde(default = "default_budget")]
    pub design_budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

impl Default for JuntaConstants {
    fn default() -> Self {
        JuntaConstants {
            mult: 1.0,
            exponent: 0.0,
            pass_through: false,
            design_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Derived parameters of a junta generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JuntaPrgInfo {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub constants: JuntaConstants,
    /// Set size before rounding up to whole parity blocks.
    pub r_raw: usize,
    pub r: usize,
    /// Bits per parity block.
    pub block_len: usize,
    pub blocks: usize,
    pub intersection: usize,
}

pub struct NwGenerator {
    design: Design,
    hard: FunctionDescriptor,
    h: DynFunction,
    info: Option<JuntaPrgInfo>,
}

impl NwGenerator {
    pub fn new(design: Design, hard: FunctionDescriptor) -> Result<Self> {
        Self::with_info(design, hard, None)
    }

    pub fn with_info(
        design: Design,
        hard: FunctionDescriptor,
        info: Option<JuntaPrgInfo>,
    ) -> Result<Self> {
        check_output_len(design.len())?;
        let h = hard.build()?;
        if h.arity() != design.set_size() {
            return Err(Error::ShapeMismatch(format!(
                "hard function has arity {}, design sets have size {}",
                h.arity(),
                design.set_size()
            )));
        }
        Ok(NwGenerator {
            design,
            hard,
            h,
            info,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn hard_function(&self) -> &DynFunction {
        &self.h
    }

    pub fn info(&self) -> Option<&JuntaPrgInfo> {
        self.info.as_ref()
    }
}

impl Generator for NwGenerator {
    fn seed_len(&self) -> usize {
        self.design.universe()
    }
    fn output_len(&self) -> usize {
        self.design.len()
    }
    fn expand(&self, seed: &Bits) -> u64 {
        let s = self.design.universe();
        let lo = seed.slice_u64(0, s.min(64)) as u128;
        let hi = if s > 64 {
            seed.slice_u64(64, s - 64) as u128
        } else {
            0
        };
        self.expand_wide(lo | hi << 64)
    }
    fn expand_u64(&self, seed: u64) -> u64 {
        self.expand_wide(seed as u128)
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        GeneratorDescriptor::Nw {
            n: self.output_len(),
            seed_len: self.seed_len(),
            design: self.design.clone(),
            hard_fn: self.hard.clone(),
            constants: self.info.clone(),
        }
    }
}

impl NwGenerator {
    #[inline]
    fn expand_wide(&self, seed: u128) -> u64 {
        self.design
            .sets()
            .iter()
            .enumerate()
            .fold(0, |acc, (i, set)| {
                acc | (self.h.eval(gather_u128(seed, set)) as u64) << i
            })
    }
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

/// NW generator for XORs of `d`-juntas on `n` bits. The hard function is
/// `h` composed with parities of blocks of `d * ceil(log2 n)` bits; the set
/// size `ceil(C d 2^(c sqrt(log2 n)) log2(1/eps))` is rounded up to a whole
/// number of blocks, and the design intersection is `ceil(log2 n)`.
///
/// `hard` may be given with arity equal to the set size (used as is) or to
/// the number of blocks (composed with the parities); the default is the
/// inner-product function on the blocks.
pub fn junta_prg(
    n: usize,
    d: usize,
    eps: f64,
    hard: Option<&FunctionDescriptor>,
    constants: &JuntaConstants,
) -> Result<Box<dyn Generator>> {
    if n < 2 || d == 0 || d > n {
        return Err(Error::ParameterOutOfRange(format!(
            "junta generator with n = {n}, d = {d}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidProbability(eps));
    }
    check_output_len(n)?;
    let log_n = ceil_log2(n);
    let scale =
        constants.mult * d as f64 * 2f64.powf(constants.exponent * (n as f64).log2().sqrt());
    let r_raw = ((scale * (1.0 / eps).log2()).ceil() as usize).max(1);
    let block_len = d * log_n;
    let blocks = r_raw.div_ceil(block_len);
    let r = blocks * block_len;
    if r >= n {
        if constants.pass_through {
            return Ok(Box::new(IdentityGenerator::new(n)?));
        }
        return Err(Error::Infeasible(format!(
            "set size {r} is not below the output length {n}"
        )));
    }
    let hard_fn = match hard {
        None => compose_parities(FunctionDescriptor::Ip { n: blocks }, block_len, blocks)?,
        Some(h) => {
            let a = h.arity()?;
            if a == r {
                h.clone()
            } else if a == blocks {
                compose_parities(h.clone(), block_len, blocks)?
            } else {
                return Err(Error::ShapeMismatch(format!(
                    "hard function has arity {a}, expected {r} or {blocks}"
                )));
            }
        }
    };
    let design = smallest_design(n, r, log_n, constants.design_budget)?;
    let info = JuntaPrgInfo {
        n,
        d,
        epsilon: eps,
        constants: constants.clone(),
        r_raw,
        r,
        block_len,
        blocks,
        intersection: log_n,
    };
    Ok(Box::new(NwGenerator::with_info(
        design,
        hard_fn,
        Some(info),
    )?))
}

fn compose_parities(
    outer: FunctionDescriptor,
    block_len: usize,
    blocks: usize,
) -> Result<FunctionDescriptor> {
    Ok(FunctionDescriptor::Compose {
        outer: Box::new(outer),
        ext: Extractor::parity(1, block_len)?,
        k: blocks,
    })
}

/// The junta generator at error `eps / ((t + 1) / 2)`, for `(d, t, n)`
/// width-2 programs.
pub fn bp2_prg(
    n: usize,
    d: usize,
    t: usize,
    eps: f64,
    constants: &JuntaConstants,
) -> Result<Box<dyn Generator>> {
    if t == 0 {
        return Err(Error::ParameterOutOfRange(
            "program length must be positive".into(),
        ));
    }
    junta_prg(n, d, bp2_epsilon(t, eps), None, constants)
}

pub fn bp2_epsilon(t: usize, eps: f64) -> f64 {
    eps / ((t as f64 + 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Parity;

    #[test]
    fn parity_on_disjoint_sets() {
        let design = Design::new(4, 2, 0, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let out = nw_generate(&Parity::full(2), &design, &"1011".parse().unwrap()).unwrap();
        assert_eq!(out.to_string(), "10");
        assert!(nw_generate(&Parity::full(3), &design, &"1011".parse().unwrap()).is_err());
        assert!(nw_generate(&Parity::full(2), &design, &"101".parse().unwrap()).is_err());
    }

    #[test]
    fn generator_matches_free_function() {
        let design =
            Design::new(6, 3, 1, vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 3, 5]]).unwrap();
        let g = NwGenerator::new(design.clone(), FunctionDescriptor::Ip { n: 3 }).unwrap();
        let h = FunctionDescriptor::Ip { n: 3 }.build().unwrap();
        for s in 0..64u64 {
            let seed = Bits::from_u64(s, 6);
            assert_eq!(
                g.generate(&seed).unwrap(),
                nw_generate(&h, &design, &seed).unwrap()
            );
            assert_eq!(g.expand_u64(s), g.expand(&seed));
        }
    }

    #[test]
    fn epsilon_scaling() {
        assert_eq!(bp2_epsilon(1, 0.3), 0.3);
        assert!((bp2_epsilon(9, 0.5) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn infeasible_when_sets_cover_everything() {
        let c = JuntaConstants::default();
        assert!(matches!(
            junta_prg(4, 4, 0.25, None, &c),
            Err(Error::Infeasible(_))
        ));
        let pass = JuntaConstants {
            pass_through: true,
            ..c
        };
        let g = junta_prg(4, 4, 0.25, None, &pass).unwrap();
        assert_eq!((g.seed_len(), g.output_len()), (4, 4));
    }
}

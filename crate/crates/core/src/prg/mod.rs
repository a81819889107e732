//! Pseudorandom generators. Outputs are packed into a `u64`, so every
//! generator here has output length at most 64.

mod aw;
mod design;
mod nw;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::extract::{KwiseSampler, SmallBiasSampler};
use crate::hardfn::FunctionDescriptor;
use crate::models::arity_mask;

pub use aw::{
    aw_prg, sample_pseudorestriction, AwGenerator, EllRule, PseudoRestrictionSampler,
    SamplerDescriptor,
};
pub use design::{
    build_design, build_design_with_budget, smallest_design, Design, DEFAULT_NODE_BUDGET,
    MAX_UNIVERSE,
};
pub use nw::{bp2_prg, junta_prg, nw_generate, JuntaConstants, JuntaPrgInfo, NwGenerator};

pub const MAX_OUTPUT_LEN: usize = 64;

pub trait Generator: Send + Sync {
    fn seed_len(&self) -> usize;
    fn output_len(&self) -> usize;
    /// Output for a seed of exactly `seed_len` bits.
    fn expand(&self, seed: &Bits) -> u64;
    fn descriptor(&self) -> GeneratorDescriptor;

    /// `expand` on a seed packed in a `u64`; needs `seed_len <= 64`.
    fn expand_u64(&self, seed: u64) -> u64 {
        self.expand(&Bits::from_u64(seed, self.seed_len()))
    }

    fn generate(&self, seed: &Bits) -> Result<Bits> {
        if seed.len() != self.seed_len() {
            return Err(Error::LengthMismatch {
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        Ok(Bits::from_u64(self.expand(seed), self.output_len()))
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn seed_len(&self) -> usize {
        (**self).seed_len()
    }
    fn output_len(&self) -> usize {
        (**self).output_len()
    }
    fn expand(&self, seed: &Bits) -> u64 {
        (**self).expand(seed)
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        (**self).descriptor()
    }
    fn expand_u64(&self, seed: u64) -> u64 {
        (**self).expand_u64(seed)
    }
}

fn check_output_len(n: usize) -> Result<()> {
    if n > MAX_OUTPUT_LEN {
        return Err(Error::OutputTooLong {
            requested: n,
            max: MAX_OUTPUT_LEN,
        });
    }
    Ok(())
}

/// The seed itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityGenerator {
    n: usize,
}

impl IdentityGenerator {
    pub fn new(n: usize) -> Result<Self> {
        check_output_len(n)?;
        Ok(IdentityGenerator { n })
    }
}

impl Generator for IdentityGenerator {
    fn seed_len(&self) -> usize {
        self.n
    }
    fn output_len(&self) -> usize {
        self.n
    }
    fn expand(&self, seed: &Bits) -> u64 {
        seed.slice_u64(0, self.n)
    }
    fn expand_u64(&self, seed: u64) -> u64 {
        seed & arity_mask(self.n)
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        GeneratorDescriptor::Identity { n: self.n }
    }
}

/// A fixed string from an empty seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantGenerator {
    value: Bits,
}

impl ConstantGenerator {
    pub fn new(value: Bits) -> Result<Self> {
        check_output_len(value.len())?;
        Ok(ConstantGenerator { value })
    }
}

impl Generator for ConstantGenerator {
    fn seed_len(&self) -> usize {
        0
    }
    fn output_len(&self) -> usize {
        self.value.len()
    }
    fn expand(&self, _seed: &Bits) -> u64 {
        self.value.slice_u64(0, self.value.len())
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        GeneratorDescriptor::Constant {
            value: self.value.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KwiseGenerator {
    sampler: KwiseSampler,
}

impl KwiseGenerator {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_output_len(n)?;
        Ok(KwiseGenerator {
            sampler: KwiseSampler::new(n, k)?,
        })
    }
}

impl Generator for KwiseGenerator {
    fn seed_len(&self) -> usize {
        self.sampler.seed_len()
    }
    fn output_len(&self) -> usize {
        self.sampler.output_len()
    }
    fn expand(&self, seed: &Bits) -> u64 {
        self.sampler.sample(seed)
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        GeneratorDescriptor::Kwise {
            n: self.sampler.output_len(),
            k: self.sampler.k(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmallBiasGenerator {
    sampler: SmallBiasSampler,
}

impl SmallBiasGenerator {
    pub fn new(n: usize, width: u32) -> Result<Self> {
        check_output_len(n)?;
        if width > 32 {
            return Err(Error::ParameterOutOfRange(format!(
                "small-bias width {width} exceeds 32"
            )));
        }
        Ok(SmallBiasGenerator {
            sampler: SmallBiasSampler::new(n, width)?,
        })
    }
}

impl Generator for SmallBiasGenerator {
    fn seed_len(&self) -> usize {
        self.sampler.seed_len()
    }
    fn output_len(&self) -> usize {
        self.sampler.output_len()
    }
    fn expand(&self, seed: &Bits) -> u64 {
        self.sampler
            .sample_u64(seed.slice_u64(0, self.sampler.seed_len()))
    }
    fn expand_u64(&self, seed: u64) -> u64 {
        self.sampler.sample_u64(seed)
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        GeneratorDescriptor::SmallBias {
            n: self.sampler.output_len(),
            width: self.sampler.width(),
        }
    }
}

/// Serializable recipe that rebuilds a generator bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorDescriptor {
    Identity {
        n: usize,
    },
    Constant {
        value: Bits,
    },
    Kwise {
        n: usize,
        k: usize,
    },
    SmallBias {
        n: usize,
        width: u32,
    },
    Nw {
        n: usize,
        seed_len: usize,
        design: Design,
        hard_fn: FunctionDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constants: Option<JuntaPrgInfo>,
    },
    Aw {
        n: usize,
        seed_len: usize,
        rounds: usize,
        sampler: SamplerDescriptor,
        base: Box<GeneratorDescriptor>,
    },
}

impl GeneratorDescriptor {
    pub fn build(&self) -> Result<Box<dyn Generator>> {
        let g: Box<dyn Generator> = match self {
            GeneratorDescriptor::Identity { n } => Box::new(IdentityGenerator::new(*n)?),
            GeneratorDescriptor::Constant { value } => {
                Box::new(ConstantGenerator::new(value.clone())?)
            }
            GeneratorDescriptor::Kwise { n, k } => Box::new(KwiseGenerator::new(*n, *k)?),
            GeneratorDescriptor::SmallBias { n, width } => {
                Box::new(SmallBiasGenerator::new(*n, *width)?)
            }
            GeneratorDescriptor::Nw {
                design,
                hard_fn,
                constants,
                ..
            } => Box::new(NwGenerator::with_info(
                design.clone(),
                hard_fn.clone(),
                constants.clone(),
            )?),
            GeneratorDescriptor::Aw {
                rounds,
                sampler,
                base,
                ..
            } => Box::new(aw_prg(base.build()?, sampler.build()?, *rounds)?),
        };
        match self {
            GeneratorDescriptor::Nw { n, seed_len, .. } | GeneratorDescriptor::Aw { n, seed_len, .. }
                if (*n, *seed_len) != (g.output_len(), g.seed_len()) =>
            {
                Err(Error::ShapeMismatch(format!(
                    "descriptor declares {n} outputs from {seed_len} seed bits, construction gives {} from {}",
                    g.output_len(),
                    g.seed_len()
                )))
            }
            _ => Ok(g),
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{Generator, GeneratorDescriptor};
use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::extract::BerSampler;
use crate::restriction::Restriction;

/// How the independence parameter `l` of the restriction sampler is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EllRule {
    /// `ceil(c * log2(n / delta))`.
    Log {
        c: f64,
    },
    /// Smallest `l` with `terms * C(d, l) * d^-l <= delta / 2`, where `d` is
    /// both the junta width and the inverse star probability.
    UnionBound {
        terms: usize,
    },
    Fixed {
        ell: usize,
    },
}

impl Default for EllRule {
    fn default() -> Self {
        EllRule::Log { c: 1.0 }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl EllRule {
    pub fn ell(&self, n: usize, d: u64, delta: f64) -> usize {
        let raw = match self {
            EllRule::Log { c } => (c * (n as f64 / delta).log2()).ceil() as usize,
            EllRule::Fixed { ell } => *ell,
            EllRule::UnionBound { terms } => {
                let w = d as usize;
                (1..=w)
                    .find(|&l| {
                        *terms as f64 * binomial(w, l) * (d as f64).powi(-(l as i32)) <= delta / 2.0
                    })
                    .unwrap_or(w)
            }
        };
        raw.clamp(1, n.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerDescriptor {
    pub n: usize,
    pub d: u64,
    pub delta: f64,
    #[serde(default)]
    pub rule: EllRule,
    /// Error of the `Z` sampler; `delta / (2n)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ber_delta: Option<f64>,
}

impl SamplerDescriptor {
    pub fn build(&self) -> Result<PseudoRestrictionSampler> {
        PseudoRestrictionSampler::with_ber_delta(
            self.n,
            self.d,
            self.delta,
            self.rule.clone(),
            self.ber_delta,
        )
    }
}

/// `U ⊛ Z` with `Z` close to `Ber(1/d)^n` on every `l` coordinates, so each
/// cell is alive with probability about `1/d`. `Z` is sampled with error
/// `delta / (2n)` unless `ber_delta` overrides it.
///
/// Seed layout: the `Z` seed, then `n` raw bits for `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoRestrictionSampler {
    n: usize,
    ell: usize,
    delta: f64,
    rule: EllRule,
    ber_delta: Option<f64>,
    ber: BerSampler,
}

impl PseudoRestrictionSampler {
    pub fn new(n: usize, d: u64, delta: f64, rule: EllRule) -> Result<Self> {
        Self::with_ber_delta(n, d, delta, rule, None)
    }

    pub fn with_ber_delta(
        n: usize,
        d: u64,
        delta: f64,
        rule: EllRule,
        ber_delta: Option<f64>,
    ) -> Result<Self> {
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::ParameterOutOfRange(format!(
                "d = {d} is not a power of two"
            )));
        }
        if n == 0 || n > 64 {
            return Err(Error::ParameterOutOfRange(format!(
                "restriction length {n}"
            )));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidProbability(delta));
        }
        let ell = rule.ell(n, d, delta);
        let z_delta = ber_delta.unwrap_or(delta / (2.0 * n as f64));
        if !(z_delta > 0.0 && z_delta <= 1.0) {
            return Err(Error::InvalidProbability(z_delta));
        }
        let ber = BerSampler::new(n, d, ell, z_delta)?;
        Ok(PseudoRestrictionSampler {
            n,
            ell,
            delta,
            rule,
            ber_delta,
            ber,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.ber.d()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ber(&self) -> &BerSampler {
        &self.ber
    }

    /// Seed bits for `Z` alone.
    pub fn star_seed_len(&self) -> usize {
        self.ber.seed_len()
    }

    pub fn seed_len(&self) -> usize {
        self.ber.seed_len() + self.n
    }

    /// The alive set `Z` from its seed.
    #[inline]
    pub fn stars(&self, seed: &Bits) -> u64 {
        self.ber.sample(seed)
    }

    /// `stars` on a packed seed; needs `star_seed_len <= 64`.
    #[inline]
    pub fn stars_u64(&self, seed: u64) -> u64 {
        self.ber.sample_u64(seed)
    }

    pub fn sample(&self, seed: &Bits) -> Result<Restriction> {
        if seed.len() != self.seed_len() {
            return Err(Error::LengthMismatch {
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        let z_len = self.star_seed_len();
        let z = self.stars(&seed.slice(0, z_len));
        let u = seed.slice_u64(z_len, self.n);
        Ok(Restriction::from_masks(self.n, z, u & !z))
    }

    pub fn descriptor(&self) -> SamplerDescriptor {
        SamplerDescriptor {
            n: self.n,
            d: self.d(),
            delta: self.delta,
            rule: self.rule.clone(),
            ber_delta: self.ber_delta,
        }
    }
}

pub fn sample_pseudorestriction(n: usize, d: u64, delta: f64, seed: &Bits) -> Result<Restriction> {
    PseudoRestrictionSampler::new(n, d, delta, EllRule::default())?.sample(seed)
}

/// Each round draws a star set `Z` and a base output `U`, and fixes the
/// still-alive cells outside `Z` to `U`; cells alive after the last round
/// take one more base output.
///
/// Seed layout: per round, the `Z` seed then a base seed; then the final base seed.
pub struct AwGenerator {
    base: Box<dyn Generator>,
    sampler: PseudoRestrictionSampler,
    rounds: usize,
}

pub fn aw_prg(
    base: Box<dyn Generator>,
    sampler: PseudoRestrictionSampler,
    rounds: usize,
) -> Result<AwGenerator> {
    if base.output_len() != sampler.n() {
        return Err(Error::ShapeMismatch(format!(
            "base generator outputs {} bits, sampler restricts {}",
            base.output_len(),
            sampler.n()
        )));
    }
    Ok(AwGenerator {
        base,
        sampler,
        rounds,
    })
}

impl AwGenerator {
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn sampler(&self) -> &PseudoRestrictionSampler {
        &self.sampler
    }

    pub fn base(&self) -> &dyn Generator {
        self.base.as_ref()
    }

    fn round_len(&self) -> usize {
        self.sampler.star_seed_len() + self.base.seed_len()
    }

    /// Output and, for each coordinate, the round that fixed it
    /// (`rounds` for the final base fill).
    fn run(&self, seed: &Bits, mut owner: Option<&mut Vec<usize>>) -> u64 {
        let n = self.sampler.n();
        let (z_len, b_len) = (self.sampler.star_seed_len(), self.base.seed_len());
        let mut alive = crate::models::arity_mask(n);
        let mut out = 0u64;
        for r in 0..self.rounds {
            let at = r * self.round_len();
            let z = self.sampler.stars(&seed.slice(at, z_len));
            let u = self.base.expand(&seed.slice(at + z_len, b_len));
            let fix = alive & !z;
            out |= u & fix;
            if let Some(owner) = owner.as_deref_mut() {
                for (i, o) in owner.iter_mut().enumerate() {
                    if fix >> i & 1 == 1 {
                        *o = r;
                    }
                }
            }
            alive &= z;
        }
        let last = self
            .base
            .expand(&seed.slice(self.rounds * self.round_len(), b_len));
        out | (last & alive)
    }

    pub fn trace(&self, seed: &Bits) -> Result<Vec<usize>> {
        if seed.len() != self.seed_len() {
            return Err(Error::LengthMismatch {
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        let mut owner = vec![self.rounds; self.sampler.n()];
        self.run(seed, Some(&mut owner));
        Ok(owner)
    }
}

impl Generator for AwGenerator {
    fn seed_len(&self) -> usize {
        self.rounds * self.round_len() + self.base.seed_len()
    }
    fn output_len(&self) -> usize {
        self.sampler.n()
    }
    fn expand(&self, seed: &Bits) -> u64 {
        self.run(seed, None)
    }
    fn expand_u64(&self, seed: u64) -> u64 {
        let n = self.sampler.n();
        let (z_len, b_len) = (self.sampler.star_seed_len(), self.base.seed_len());
        let word = |at: usize, len: usize| (seed >> at) & crate::models::arity_mask(len);
        let mut alive = crate::models::arity_mask(n);
        let mut out = 0u64;
        for r in 0..self.rounds {
            let at = r * self.round_len();
            let z = self.sampler.stars_u64(word(at, z_len));
            let fix = alive & !z;
            out |= self.base.expand_u64(word(at + z_len, b_len)) & fix;
            alive &= z;
        }
        out | (self
            .base
            .expand_u64(word(self.rounds * self.round_len(), b_len))
            & alive)
    }
    fn descriptor(&self) -> GeneratorDescriptor {
        GeneratorDescriptor::Aw {
            n: self.output_len(),
            seed_len: self.seed_len(),
            rounds: self.rounds,
            sampler: self.sampler.descriptor(),
            base: Box::new(self.base.descriptor()),
        }
    }
}

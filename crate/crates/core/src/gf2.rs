//! Arithmetic in binary extension fields F_{2^w}, w <= 64.
//!
//! An element is stored as a `u64` whose bit `i` is the coefficient of `x^i`
//! (bit 0 is the constant term). The modulus is stored the same way in a
//! `u128` so that degree-64 moduli fit. Hex renderings of elements and moduli
//! are plain integer hex, so the least significant hex digit carries bit 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

pub const MAX_WIDTH: u32 = 64;

/// Lexicographically smallest irreducible polynomial of each degree 1..=64
/// (smallest as an integer with the bit-`i` = coefficient-of-`x^i` encoding).
pub const DEFAULT_MODULI: [u128; 64] = [
    0x2,
    0x7,
    0xb,
    0x13,
    0x25,
    0x43,
    0x83,
    0x11b,
    0x203,
    0x409,
    0x805,
    0x1009,
    0x201b,
    0x4021,
    0x8003,
    0x1002b,
    0x20009,
    0x40009,
    0x80027,
    0x100009,
    0x200005,
    0x400003,
    0x800021,
    0x100001b,
    0x2000009,
    0x400001b,
    0x8000027,
    0x10000003,
    0x20000005,
    0x40000003,
    0x80000009,
    0x10000008d,
    0x20000004b,
    0x40000001b,
    0x800000005,
    0x1000000035,
    0x200000003f,
    0x4000000063,
    0x8000000011,
    0x10000000039,
    0x20000000009,
    0x40000000027,
    0x80000000059,
    0x100000000021,
    0x20000000001b,
    0x400000000003,
    0x800000000021,
    0x100000000002d,
    0x2000000000071,
    0x400000000001d,
    0x800000000004b,
    0x10000000000009,
    0x20000000000047,
    0x4000000000007d,
    0x80000000000047,
    0x100000000000095,
    0x200000000000011,
    0x400000000000063,
    0x80000000000007b,
    0x1000000000000003,
    0x2000000000000027,
    0x4000000000000069,
    0x8000000000000003,
    0x1000000000000001b,
];

/// Degree of a nonzero polynomial over F2.
fn degree(p: u128) -> u32 {
    127 - p.leading_zeros()
}

/// Carryless product of two polynomials of degree < 64.
#[inline]
pub fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let a = a as u128;
    let mut b = b;
    while b != 0 {
        let tz = b.trailing_zeros();
        acc ^= a << tz;
        b &= b - 1;
    }
    acc
}

/// Remainder of `a` modulo `m` in F2[x].
pub fn poly_rem(mut a: u128, m: u128) -> u128 {
    assert!(m != 0, "division by the zero polynomial");
    let dm = degree(m);
    while a != 0 && degree(a) >= dm {
        a ^= m << (degree(a) - dm);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    // Operands are already reduced, so both fit in 64 bits.
    poly_rem(clmul(a as u64, b as u64), m)
}

/// Irreducibility by dividing out every polynomial of degree 1..=deg/2.
fn irreducible_by_trial_division(m: u128) -> bool {
    let w = degree(m);
    for d in 1..=w / 2 {
        for low in 0..(1u128 << d) {
            let divisor = (1u128 << d) | low;
            if poly_rem(m, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// Ben-Or irreducibility test: `gcd(x^(2^i) - x, m) = 1` for all `i <= deg/2`.
fn irreducible_by_ben_or(m: u128) -> bool {
    let w = degree(m);
    let x = poly_rem(2, m);
    let mut t = x;
    for _ in 1..=w / 2 {
        t = mulmod(t, t, m);
        if poly_gcd(m, t ^ x) != 1 {
            return false;
        }
    }
    true
}

/// Trial division is used up to this degree; above it the Ben-Or test runs.
const TRIAL_DIVISION_MAX_WIDTH: u32 = 32;

pub fn is_irreducible(m: u128) -> bool {
    if m < 2 {
        return false;
    }
    if degree(m) <= TRIAL_DIVISION_MAX_WIDTH {
        irreducible_by_trial_division(m)
    } else {
        irreducible_by_ben_or(m)
    }
}

/// A validated binary extension field F_2[x]/(modulus).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    width: u32,
    modulus: u128,
}

impl FieldSpec {
    /// Validates `modulus` (degree exactly `width`, irreducible).
    pub fn new(width: u32, modulus: u128) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::ParameterOutOfRange(format!(
                "field width {width} not in 1..={MAX_WIDTH}"
            )));
        }
        let deg = if modulus == 0 { 0 } else { degree(modulus) };
        if modulus == 0 || deg != width {
            return Err(Error::DegreeMismatch { width, degree: deg });
        }
        if !is_irreducible(modulus) {
            return Err(Error::ReducibleModulus { modulus });
        }
        Ok(FieldSpec { width, modulus })
    }

    /// The pinned default field of the given width (see [`DEFAULT_MODULI`]).
    pub fn default_for(width: u32) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::ParameterOutOfRange(format!(
                "field width {width} not in 1..={MAX_WIDTH}"
            )));
        }
        Ok(FieldSpec {
            width,
            modulus: DEFAULT_MODULI[width as usize - 1],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    pub fn order(&self) -> u128 {
        1u128 << self.width
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    pub fn element(&self, bits: u64) -> Result<FieldElement> {
        if bits & !self.mask() != 0 {
            return Err(Error::LengthMismatch {
                expected: self.width as usize,
                got: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(FieldElement { bits, spec: *self })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            bits: 0,
            spec: *self,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            bits: 1,
            spec: *self,
        }
    }

    /// All elements in increasing integer order. Only sensible for small widths.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        assert!(
            self.width <= 32,
            "refusing to enumerate a field of width {}",
            self.width
        );
        (0..(1u64 << self.width)).map(move |bits| FieldElement { bits, spec: *self })
    }

    /// Raw product of two reduced elements.
    #[inline]
    pub fn mul_raw(&self, a: u64, b: u64) -> u64 {
        // Shift-and-add with interleaved reduction keeps everything in 64+1 bits.
        let w = self.width;
        let top = 1u128 << w;
        let m = self.modulus;
        let mut acc: u64 = 0;
        let mut a = a as u128;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a as u64;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= m;
            }
        }
        acc
    }

    /// `a^e` by square-and-multiply.
    pub fn pow_raw(&self, a: u64, mut e: u128) -> u64 {
        let mut base = a;
        let mut acc = 1u64;
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via `a^(2^w - 2)`; `None` for zero.
    pub fn inv_raw(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        Some(self.pow_raw(a, self.order() - 2))
    }

    pub fn modulus_hex(&self) -> String {
        format!("{:x}", self.modulus)
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.width, self.modulus)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldSpecWire {
    width: u32,
    modulus: String,
}

impl Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldSpecWire {
            width: self.width,
            modulus: self.modulus_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = FieldSpecWire::deserialize(d)?;
        let modulus = u128::from_str_radix(wire.modulus.trim_start_matches("0x"), 16)
            .map_err(serde::de::Error::custom)?;
        FieldSpec::new(wire.width, modulus).map_err(serde::de::Error::custom)
    }
}

/// An element of a [`FieldSpec`] field.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    bits: u64,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// Coefficient vector as a bit string (index 0 = constant term).
    pub fn to_bits(&self) -> Bits {
        Bits::from_u64(self.bits, self.spec.width as usize)
    }

    pub fn to_hex(&self) -> String {
        format!("{:x}", self.bits)
    }

    pub fn from_hex(spec: &FieldSpec, hex: &str) -> Result<Self> {
        let bits = u64::from_str_radix(hex.trim_start_matches("0x"), 16)
            .map_err(|e| Error::Parse(format!("bad field element hex {hex:?}: {e}")))?;
        spec.element(bits)
    }

    /// Parse a coefficient string written most-significant coefficient first,
    /// as field literals are usually written (`"10"` is `x`). Shorter strings
    /// are zero-padded on the left.
    pub fn from_literal(spec: &FieldSpec, lit: &str) -> Result<Self> {
        let bits = u64::from_str_radix(lit, 2)
            .map_err(|e| Error::Parse(format!("bad field literal {lit:?}: {e}")))?;
        spec.element(bits)
    }

    pub fn inv(&self) -> Option<FieldElement> {
        self.spec.inv_raw(self.bits).map(|bits| FieldElement {
            bits,
            spec: self.spec,
        })
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:0width$b}",
            self.bits,
            width = self.spec.width as usize
        )
    }
}

fn same_field(a: &FieldElement, b: &FieldElement) -> Result<()> {
    if a.spec != b.spec {
        return Err(Error::SpecMismatch);
    }
    Ok(())
}

pub fn gf_add(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    same_field(a, b)?;
    Ok(FieldElement {
        bits: a.bits ^ b.bits,
        spec: a.spec,
    })
}

pub fn gf_mul(a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
    same_field(a, b)?;
    Ok(FieldElement {
        bits: a.spec.mul_raw(a.bits, b.bits),
        spec: a.spec,
    })
}

/// Constant-term coefficient.
#[inline]
pub fn lsb(a: &FieldElement) -> bool {
    a.bits & 1 == 1
}

/// `<x, y> = sum_i x_i y_i` over F2.
pub fn inner_product(x: &Bits, y: &Bits) -> Result<bool> {
    x.dot(y)
}

/// The additive character `chi_c(x) = lsb(c * x)`.
///
/// This is the form used by every hard function in the crate. The other
/// standard parametrisation, `x -> <x, c>`, is [`character_dot`]; both range
/// over all `2^w` characters but they assign them to multipliers differently.
pub fn character(c: &FieldElement, x: &FieldElement) -> Result<bool> {
    Ok(lsb(&gf_mul(c, x)?))
}

/// The additive character `x -> <x, c>` on coefficient vectors.
pub fn character_dot(c: &FieldElement, x: &FieldElement) -> Result<bool> {
    same_field(c, x)?;
    Ok((c.bits & x.bits).count_ones() & 1 == 1)
}

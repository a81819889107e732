//! Explicit hard functions over the contiguous block convention: input
//! `X = (X_1, ..., X_d)` with `X_i` occupying bits `(i-1)n/d .. i n/d`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::extract::Extractor;
use crate::gf2::{FieldElement, FieldSpec};
use crate::models::{
    arity_mask, BooleanFunction, BranchingProgram2, DynFunction, Junta, Parity, SparsePolyF2,
    TruthTable, XorOfJuntas, MAX_ARITY,
};

/// `n` bits cut into `d` contiguous blocks of `n/d` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockedInput {
    n: usize,
    d: usize,
}

impl BlockedInput {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if d == 0 || n % d != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{n} bits do not split into {d} equal blocks"
            )));
        }
        if n > MAX_ARITY {
            return Err(Error::ArityTooLarge {
                arity: n,
                limit: MAX_ARITY,
            });
        }
        Ok(BlockedInput { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn blocks(&self) -> usize {
        self.d
    }

    pub fn block_len(&self) -> usize {
        self.n / self.d
    }

    /// Mask of block `i` (0-based).
    pub fn block_mask(&self, i: usize) -> u64 {
        arity_mask(self.block_len()) << (i * self.block_len())
    }

    /// `X_i`, 0-based.
    #[inline]
    pub fn block(&self, x: u64, i: usize) -> u64 {
        (x >> (i * self.block_len())) & arity_mask(self.block_len())
    }

    /// `X_{-i}`: the other blocks, in order, packed contiguously.
    pub fn without(&self, x: u64, i: usize) -> u64 {
        let b = self.block_len();
        let low = x & arity_mask(i * b);
        let high = if (i + 1) * b >= 64 {
            0
        } else {
            x >> ((i + 1) * b)
        };
        low | if i * b >= 64 { 0 } else { high << (i * b) }
    }

    /// Place `v` into block `i` of an otherwise zero string.
    pub fn embed(&self, v: u64, i: usize) -> u64 {
        (v & arity_mask(self.block_len())) << (i * self.block_len())
    }
}

/// `GIP_{m,k}(x_1, ..., x_k) = sum_i prod_j x_ij`, block `j` holding `x_1j .. x_mj`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gip {
    m: usize,
    k: usize,
}

impl Gip {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::ShapeMismatch("GIP needs m, k >= 1".into()));
        }
        BlockedInput::new(m * k, k)?;
        Ok(Gip { m, k })
    }
}

impl BooleanFunction for Gip {
    fn arity(&self) -> usize {
        self.m * self.k
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        let block = arity_mask(self.m);
        let prod = (0..self.k).fold(block, |acc, j| acc & (x >> (j * self.m)));
        (prod & block).count_ones() & 1 == 1
    }
}

pub fn gip(m: usize, k: usize, x: &Bits) -> Result<bool> {
    let g = Gip::new(m, k)?;
    if x.len() != m * k {
        return Err(Error::ShapeMismatch(format!(
            "GIP_{{{m},{k}}} takes {} bits, got {}",
            m * k,
            x.len()
        )));
    }
    g.eval_bits(x)
}

/// `RW_{m,k,r} = sum_{i<m} prod_{j<k} sum_{l<r} x_ijl` with `x_ijl` at bit `j*m*r + i*r + l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rw {
    m: usize,
    k: usize,
    r: usize,
}

impl Rw {
    pub fn new(m: usize, k: usize, r: usize) -> Result<Self> {
        if m == 0 || k == 0 || r == 0 {
            return Err(Error::ShapeMismatch("RW needs m, k, r >= 1".into()));
        }
        if m * k * r > MAX_ARITY {
            return Err(Error::ArityTooLarge {
                arity: m * k * r,
                limit: MAX_ARITY,
            });
        }
        Ok(Rw { m, k, r })
    }

    /// The same function built as `GIP_{m,k}` over block parities.
    pub fn as_composition(&self) -> Result<Composed> {
        Composed::new(
            Arc::new(Gip::new(self.m, self.k)?),
            Extractor::parity(self.m, self.r)?,
            self.k,
        )
    }
}

impl BooleanFunction for Rw {
    fn arity(&self) -> usize {
        self.m * self.k * self.r
    }
    fn eval(&self, x: u64) -> bool {
        let mut sum = false;
        for i in 0..self.m {
            let mut prod = true;
            for j in 0..self.k {
                let mut inner = false;
                for l in 0..self.r {
                    inner ^= x >> (j * self.m * self.r + i * self.r + l) & 1 == 1;
                }
                prod &= inner;
            }
            sum ^= prod;
        }
        sum
    }
}

pub fn rw(m: usize, k: usize, r: usize, x: &Bits) -> Result<bool> {
    let f = Rw::new(m, k, r)?;
    if x.len() != m * k * r {
        return Err(Error::ShapeMismatch(format!(
            "RW takes {} bits, got {}",
            m * k * r,
            x.len()
        )));
    }
    f.eval_bits(x)
}

/// `lsb(X_1 X_2 ... X_d)` in the given field, each block one field element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ffm {
    d: usize,
    field: FieldSpec,
}

impl Ffm {
    pub fn new(d: usize, field: FieldSpec) -> Result<Self> {
        BlockedInput::new(d * field.width() as usize, d)?;
        Ok(Ffm { d, field })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }
}

impl BooleanFunction for Ffm {
    fn arity(&self) -> usize {
        self.d * self.field.width() as usize
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        let w = self.field.width() as usize;
        let mask = self.field.mask();
        let prod = (0..self.d).fold(1u64, |acc, i| {
            self.field.mul_raw(acc, (x >> (i * w)) & mask)
        });
        prod & 1 == 1
    }
}

pub fn ffm(d: usize, x: &Bits, field: &FieldSpec) -> Result<bool> {
    let blocked = BlockedInput::new(x.len(), d)?;
    if blocked.block_len() != field.width() as usize {
        return Err(Error::SpecMismatch);
    }
    Ffm::new(d, *field)?.eval_bits(x)
}

/// `lsb(prod_i Ext(X_i, W))` on input `(X, W)`: `X` is `d` blocks of the
/// extractor's input length and `W` its seed, placed after `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtFfm {
    d: usize,
    ext: Extractor,
    field: FieldSpec,
}

impl ExtFfm {
    pub fn new(d: usize, ext: Extractor, field: FieldSpec) -> Result<Self> {
        if d == 0 {
            return Err(Error::ShapeMismatch("ExtFFM needs d >= 1".into()));
        }
        if ext.output_len() != field.width() as usize {
            return Err(Error::ShapeMismatch(format!(
                "extractor outputs {} bits but the field has width {}",
                ext.output_len(),
                field.width()
            )));
        }
        let arity = d * ext.input_len() + ext.seed_len();
        if arity > MAX_ARITY {
            return Err(Error::ArityTooLarge {
                arity,
                limit: MAX_ARITY,
            });
        }
        Ok(ExtFfm { d, ext, field })
    }

    pub fn source_len(&self) -> usize {
        self.d * self.ext.input_len()
    }

    pub fn blocks(&self) -> BlockedInput {
        BlockedInput {
            n: self.source_len(),
            d: self.d,
        }
    }

    pub fn extractor(&self) -> &Extractor {
        &self.ext
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }
}

impl BooleanFunction for ExtFfm {
    fn arity(&self) -> usize {
        self.source_len() + self.ext.seed_len()
    }
    fn eval(&self, x: u64) -> bool {
        let n = self.source_len();
        let seed = Bits::from_u64(x >> n, self.ext.seed_len());
        let fixed = self
            .ext
            .fix_seed(&seed)
            .expect("seed length is the extractor's");
        let b = self.ext.input_len();
        let prod = (0..self.d).fold(1u64, |acc, i| {
            self.field
                .mul_raw(acc, fixed.apply((x >> (i * b)) & arity_mask(b)))
        });
        prod & 1 == 1
    }
}

pub fn extffm(d: usize, x: &Bits, w: &Bits, ext: &Extractor, field: &FieldSpec) -> Result<bool> {
    let f = ExtFfm::new(d, *ext, *field)?;
    if x.len() != f.source_len() || w.len() != ext.seed_len() {
        return Err(Error::ShapeMismatch(format!(
            "ExtFFM takes {} source bits and {} seed bits, got {} and {}",
            f.source_len(),
            ext.seed_len(),
            x.len(),
            w.len()
        )));
    }
    f.eval_bits(&Bits::concat(&[x, w]))
}

/// `f(Ext(X_1), ..., Ext(X_k))` for a seedless block map; `f`'s input bit
/// `i*m + j` is bit `j` of `Ext(X_i)`.
#[derive(Clone)]
pub struct Composed {
    f: DynFunction,
    ext: Extractor,
    k: usize,
}

impl Composed {
    pub fn new(f: DynFunction, ext: Extractor, k: usize) -> Result<Self> {
        if ext.seed_len() != 0 {
            return Err(Error::ShapeMismatch(
                "composition needs a seedless block map".into(),
            ));
        }
        if f.arity() != k * ext.output_len() {
            return Err(Error::ShapeMismatch(format!(
                "outer function has arity {}, expected {} blocks of {} bits",
                f.arity(),
                k,
                ext.output_len()
            )));
        }
        let arity = k * ext.input_len();
        if arity > MAX_ARITY {
            return Err(Error::ArityTooLarge {
                arity,
                limit: MAX_ARITY,
            });
        }
        Ok(Composed { f, ext, k })
    }

    pub fn outer(&self) -> &DynFunction {
        &self.f
    }

    pub fn block_map(&self) -> &Extractor {
        &self.ext
    }
}

impl BooleanFunction for Composed {
    fn arity(&self) -> usize {
        self.k * self.ext.input_len()
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        let (b, m) = (self.ext.input_len(), self.ext.output_len());
        let none = Bits::zeros(0);
        let y = (0..self.k).fold(0u64, |acc, i| {
            acc | self.ext.extract((x >> (i * b)) & arity_mask(b), &none) << (i * m)
        });
        self.f.eval(y)
    }
}

impl std::fmt::Debug for Composed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Composed(arity {}, {:?}, k = {})",
            self.arity(),
            self.ext,
            self.k
        )
    }
}

pub fn compose_ext(f: DynFunction, ext: Extractor, k: usize) -> Result<Composed> {
    Composed::new(f, ext, k)
}

/// Inner product of the first two `floor(n/2)`-bit halves, XOR the last bit
/// when `n` is odd. A convenient default hard function of any arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InnerProduct {
    n: usize,
}

impl InnerProduct {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ARITY {
            return Err(Error::ShapeMismatch(format!("inner product on {n} bits")));
        }
        Ok(InnerProduct { n })
    }
}

impl BooleanFunction for InnerProduct {
    fn arity(&self) -> usize {
        self.n
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        let h = self.n / 2;
        let ip = (x & (x >> h) & arity_mask(h)).count_ones() & 1 == 1;
        ip ^ (self.n % 2 == 1 && x >> (self.n - 1) & 1 == 1)
    }
}

/// Serializable description of any function the lab can build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    Parity {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mask: Option<u64>,
        #[serde(default)]
        negate: bool,
    },
    Ip {
        n: usize,
    },
    Gip {
        m: usize,
        k: usize,
    },
    Rw {
        m: usize,
        k: usize,
        r: usize,
    },
    Ffm {
        d: usize,
        field: FieldSpec,
    },
    Extffm {
        d: usize,
        ext: Extractor,
        field: FieldSpec,
    },
    Compose {
        outer: Box<FunctionDescriptor>,
        ext: Extractor,
        k: usize,
    },
    Table {
        n: usize,
        table: String,
    },
    Junta(Junta),
    XorOfJuntas(XorOfJuntas),
    Sparse(SparsePolyF2),
    Bp2(BranchingProgram2),
}

impl FunctionDescriptor {
    pub fn build(&self) -> Result<DynFunction> {
        Ok(match self {
            FunctionDescriptor::Parity { n, mask, negate } => {
                if *n > MAX_ARITY {
                    return Err(Error::ArityTooLarge {
                        arity: *n,
                        limit: MAX_ARITY,
                    });
                }
                Arc::new(Parity::affine(*n, mask.unwrap_or(u64::MAX), *negate))
            }
            FunctionDescriptor::Ip { n } => Arc::new(InnerProduct::new(*n)?),
            FunctionDescriptor::Gip { m, k } => Arc::new(Gip::new(*m, *k)?),
            FunctionDescriptor::Rw { m, k, r } => Arc::new(Rw::new(*m, *k, *r)?),
            FunctionDescriptor::Ffm { d, field } => Arc::new(Ffm::new(*d, *field)?),
            FunctionDescriptor::Extffm { d, ext, field } => {
                Arc::new(ExtFfm::new(*d, *ext, *field)?)
            }
            FunctionDescriptor::Compose { outer, ext, k } => {
                Arc::new(Composed::new(outer.build()?, *ext, *k)?)
            }
            FunctionDescriptor::Table { n, table } => Arc::new(TruthTable::from_hex(*n, table)?),
            FunctionDescriptor::Junta(j) => Arc::new(j.clone()),
            FunctionDescriptor::XorOfJuntas(x) => Arc::new(x.clone()),
            FunctionDescriptor::Sparse(p) => Arc::new(p.clone()),
            FunctionDescriptor::Bp2(b) => Arc::new(b.clone()),
        })
    }

    pub fn arity(&self) -> Result<usize> {
        Ok(self.build()?.arity())
    }
}

/// A finite field element given as a most-significant-first literal, for tests and the CLI.
pub fn field_literal(field: &FieldSpec, lit: &str) -> Result<u64> {
    Ok(FieldElement::from_literal(field, lit)?.bits())
}

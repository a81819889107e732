//! Desk-scale pseudorandomness lab: finite fields over F2, restrictions, the
//! computational models (juntas, sparse polynomials, width-2 branching
//! programs), extractors, hard functions, generators, and exact correlation
//! oracles.
//!
//! Bit conventions: a function input is packed into a `u64` with coordinate
//! `i` at bit `i`; bit strings are written in index order (`"1110"` sets
//! `x1 = x2 = x3 = 1`); field element literals are written with the leading
//! coefficient first (`"10"` is `x`).

pub mod bits;
pub mod corr;
pub mod error;
pub mod extract;
pub mod gf2;
pub mod hardfn;
pub mod models;
pub mod prg;
pub mod restriction;

pub use bits::Bits;
pub use error::{Error, Result};

use super::{BooleanFunction, TruthTable};
use crate::error::{Error, Result};

pub const MAX_FOURIER_ARITY: usize = 20;

/// Fourier coefficients of a 0/1-valued function in the basis
/// `chi_S(x) = (-1)^{sum_{i in S} x_i}`:
/// `f(x) = sum_S fhat(S) chi_S(x)` with `fhat(S) = E_x[f(x) chi_S(x)]`.
///
/// Coefficients are kept as exact integer numerators over `2^arity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierSpectrum {
    arity: usize,
    numerators: Vec<i64>,
}

impl FourierSpectrum {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn denominator(&self) -> i64 {
        1 << self.arity
    }

    pub fn numerator(&self, s: u64) -> i64 {
        self.numerators[s as usize]
    }

    pub fn coefficient(&self, s: u64) -> f64 {
        self.numerator(s) as f64 / self.denominator() as f64
    }

    /// Nonzero coefficients as `(S, fhat(S))`, `S` as a variable bitmask.
    pub fn nonzero(&self) -> Vec<(u64, f64)> {
        (0..self.numerators.len() as u64)
            .filter(|&s| self.numerators[s as usize] != 0)
            .map(|s| (s, self.coefficient(s)))
            .collect()
    }

    /// `sum_S |fhat(S)|` times `2^arity`.
    pub fn l1_numerator(&self) -> u64 {
        self.numerators.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn l1(&self) -> f64 {
        self.l1_numerator() as f64 / self.denominator() as f64
    }

    /// `sum_S fhat(S)^2` times `4^arity`.
    pub fn l2_squared_numerator(&self) -> u128 {
        self.numerators
            .iter()
            .map(|&c| (c as i128 * c as i128) as u128)
            .sum()
    }

    /// `f(x)` recovered from the expansion, times `2^arity`.
    pub fn reconstruct_numerator(&self, x: u64) -> i64 {
        self.numerators
            .iter()
            .enumerate()
            .map(|(s, &c)| {
                if (s as u64 & x).count_ones() & 1 == 1 {
                    -c
                } else {
                    c
                }
            })
            .sum()
    }
}

pub fn fourier_expand<F: BooleanFunction + ?Sized>(f: &F) -> Result<FourierSpectrum> {
    let n = f.arity();
    if n > MAX_FOURIER_ARITY {
        return Err(Error::ArityTooLarge {
            arity: n,
            limit: MAX_FOURIER_ARITY,
        });
    }
    let table = TruthTable::from_function(f)?;
    let size = 1usize << n;
    let mut a: Vec<i64> = (0..size as u64).map(|x| table.get(x) as i64).collect();
    // In-place Walsh-Hadamard butterflies.
    let mut h = 1;
    while h < size {
        for block in (0..size).step_by(2 * h) {
            for i in block..block + h {
                let (u, v) = (a[i], a[i + h]);
                a[i] = u + v;
                a[i + h] = u - v;
            }
        }
        h <<= 1;
    }
    Ok(FourierSpectrum {
        arity: n,
        numerators: a,
    })
}

pub fn l1_norm<F: BooleanFunction + ?Sized>(f: &F) -> Result<f64> {
    Ok(fourier_expand(f)?.l1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{And, FnFunction, Parity};

    #[test]
    fn zero_function_has_empty_spectrum() {
        let s = fourier_expand(&Parity::constant(3, false)).unwrap();
        assert!(s.nonzero().is_empty());
    }

    #[test]
    fn dictator() {
        let s = fourier_expand(&Parity::dictator(1, 0)).unwrap();
        assert_eq!(s.nonzero(), vec![(0, 0.5), (1, -0.5)]);
    }

    #[test]
    fn and2_by_hand() {
        // f = x1 x2 = (1 - chi1)/2 * (1 - chi2)/2
        let s = fourier_expand(&And { arity: 2, mask: 3 }).unwrap();
        assert_eq!(
            s.nonzero(),
            vec![(0, 0.25), (1, -0.25), (2, -0.25), (3, 0.25)]
        );
        assert_eq!(s.l1(), 1.0);
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_norm(&Parity::constant(4, true)).unwrap(), 1.0);
        // parity = (1 - chi_[n]) / 2
        assert_eq!(l1_norm(&Parity::full(6)).unwrap(), 1.0);
    }

    #[test]
    fn reconstruction_is_exact() {
        let f = FnFunction::new(5, |x| (x * 7 + 3) % 5 < 2);
        let s = fourier_expand(&f).unwrap();
        for x in 0..32 {
            assert_eq!(s.reconstruct_numerator(x), (f.eval(x) as i64) * 32);
        }
    }

    #[test]
    fn arity_limit() {
        assert!(matches!(
            fourier_expand(&Parity::full(21)),
            Err(Error::ArityTooLarge {
                arity: 21,
                limit: 20
            })
        ));
    }
}

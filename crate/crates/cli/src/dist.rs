use pseudolab::corr::Distribution;

use crate::CliError;

/// A distribution on `{0,1}^bits` written as `uniform:<bits>`,
/// `point:<x>` / `point:<x>:<bits>`, or `counts:<c0>,<c1>,...` (a power-of-two
/// number of counts).
#[derive(Clone, Debug, PartialEq)]
pub enum DistSpec {
    Uniform(usize),
    Point { x: u64, bits: Option<usize> },
    Counts(Vec<u64>),
}

impl std::str::FromStr for DistSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Validation(format!("cannot parse distribution {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        match kind {
            "uniform" => Ok(DistSpec::Uniform(num(rest)? as usize)),
            "point" => match rest.split_once(':') {
                Some((x, bits)) => Ok(DistSpec::Point {
                    x: num(x)?,
                    bits: Some(num(bits)? as usize),
                }),
                None => Ok(DistSpec::Point {
                    x: num(rest)?,
                    bits: None,
                }),
            },
            "counts" => Ok(DistSpec::Counts(
                rest.split(',').map(num).collect::<Result<_, _>>()?,
            )),
            _ => Err(bad()),
        }
    }
}

impl DistSpec {
    fn bits(&self) -> Option<usize> {
        match self {
            DistSpec::Uniform(b) => Some(*b),
            DistSpec::Point { bits, .. } => *bits,
            DistSpec::Counts(c) => Some(c.len().trailing_zeros() as usize),
        }
    }

    pub fn build(&self, other: Option<&DistSpec>) -> Result<Distribution, CliError> {
        Ok(match self {
            DistSpec::Uniform(b) => Distribution::uniform(*b)?,
            DistSpec::Point { x, bits } => {
                let bits = bits
                    .or_else(|| other.and_then(DistSpec::bits))
                    .ok_or_else(|| CliError::Validation("point mass needs a width".into()))?;
                Distribution::point(bits, *x)?
            }
            DistSpec::Counts(c) => Distribution::from_counts(c.clone())?,
        })
    }
}

/// Both sides of a TV comparison; a bare `point:<x>` takes the other side's width.
pub fn pair(a: &str, b: &str) -> Result<(Distribution, Distribution), CliError> {
    let (a, b): (DistSpec, DistSpec) = (a.parse()?, b.parse()?);
    Ok((a.build(Some(&b))?, b.build(Some(&a))?))
}

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BooleanFunction, Junta, TruthTable, MAX_ARITY};
use crate::bits::Bits;
use crate::error::{Error, Result};

/// One node of a width-2 program: the input bits it reads and, for each value
/// of those bits, which node (0 or 1) of the next layer to move to.
///
/// `table[v]` is the successor for read value `v = sum_j x[reads[j]] << j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub reads: Vec<usize>,
    pub table: Vec<u8>,
}

impl Node {
    #[inline]
    fn step(&self, x: u64) -> u8 {
        let mut v = 0usize;
        for (j, &i) in self.reads.iter().enumerate() {
            v |= (((x >> i) & 1) as usize) << j;
        }
        self.table[v]
    }
}

/// A layered width-2 branching program. Each layer holds nodes 0 and 1;
/// evaluation starts at `start` in the first layer, takes one transition per
/// layer, and outputs whether the node reached after the last layer equals
/// `accept` (with `accept = 1` the output is the final node's label).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Bp2Wire", into = "Bp2Wire")]
pub struct BranchingProgram2 {
    arity: usize,
    layers: Vec<[Node; 2]>,
    start: u8,
    accept: u8,
}

#[derive(Clone, Serialize, Deserialize)]
struct Bp2Wire {
    arity: usize,
    #[serde(default)]
    start: u8,
    #[serde(default = "default_accept")]
    accept: u8,
    layers: Vec<[Node; 2]>,
}

fn default_accept() -> u8 {
    1
}

impl TryFrom<Bp2Wire> for BranchingProgram2 {
    type Error = Error;
    fn try_from(w: Bp2Wire) -> Result<Self> {
        BranchingProgram2::new(w.arity, w.layers, w.start, w.accept)
    }
}

impl From<BranchingProgram2> for Bp2Wire {
    fn from(b: BranchingProgram2) -> Self {
        Bp2Wire {
            arity: b.arity,
            start: b.start,
            accept: b.accept,
            layers: b.layers,
        }
    }
}

impl BranchingProgram2 {
    pub fn new(arity: usize, layers: Vec<[Node; 2]>, start: u8, accept: u8) -> Result<Self> {
        if arity > MAX_ARITY {
            return Err(Error::ArityTooLarge {
                arity,
                limit: MAX_ARITY,
            });
        }
        if start > 1 || accept > 1 {
            return Err(Error::ShapeMismatch(
                "start and accept nodes must be 0 or 1".into(),
            ));
        }
        for (l, layer) in layers.iter().enumerate() {
            for node in layer {
                if node.reads.len() > 20 {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {l} reads {} bits at one node",
                        node.reads.len()
                    )));
                }
                if let Some(&bad) = node.reads.iter().find(|&&i| i >= arity) {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {l} reads index {bad} outside arity {arity}"
                    )));
                }
                if node.table.len() != 1 << node.reads.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {l} transition table has {} entries, expected {}",
                        node.table.len(),
                        1usize << node.reads.len()
                    )));
                }
                if node.table.iter().any(|&t| t > 1) {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {l} names a node other than 0/1"
                    )));
                }
            }
        }
        Ok(BranchingProgram2 {
            arity,
            layers,
            start,
            accept,
        })
    }

    /// A program with `len` layers whose nodes each read `d` distinct random
    /// coordinates and carry uniformly random transition tables.
    pub fn random<R: Rng + ?Sized>(
        d: usize,
        len: usize,
        arity: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if d > arity {
            return Err(Error::ParameterOutOfRange(format!(
                "cannot read {d} of {arity} bits"
            )));
        }
        let node = |rng: &mut R| Node {
            reads: sample(rng, arity, d).into_vec(),
            table: (0..1usize << d).map(|_| rng.gen_range(0..2)).collect(),
        };
        let layers = (0..len).map(|_| [node(rng), node(rng)]).collect();
        Self::new(arity, layers, 0, 1)
    }

    pub fn layers(&self) -> &[[Node; 2]] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Largest number of bits read at any node.
    pub fn read_width(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.iter())
            .map(|n| n.reads.len())
            .max()
            .unwrap_or(0)
    }

    pub fn final_node(&self, x: u64) -> u8 {
        let mut v = self.start;
        for layer in &self.layers {
            v = layer[v as usize].step(x);
        }
        v
    }
}

impl BooleanFunction for BranchingProgram2 {
    fn arity(&self) -> usize {
        self.arity
    }
    #[inline]
    fn eval(&self, x: u64) -> bool {
        self.final_node(x) == self.accept
    }
}

pub fn eval_2bp(b: &BranchingProgram2, x: &Bits) -> Result<bool> {
    b.eval_bits(x)
}

/// `B(x) = core(phi_0(x), ..., phi_{2l-1}(x))`: `phi_v` is the transition
/// function of node `v = 2 * layer + label`, and the core program's node `v`
/// reads bit `v` of the phi-string and moves to the node named by that bit.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub core: BranchingProgram2,
    pub juntas: Vec<Junta>,
}

impl Decomposition {
    /// The phi-string `(phi_0(x), ..., phi_{2l-1}(x))` packed into a `u64`.
    pub fn phi(&self, x: u64) -> u64 {
        self.juntas
            .iter()
            .enumerate()
            .fold(0u64, |acc, (v, j)| acc | (j.eval(x) as u64) << v)
    }
}

impl BooleanFunction for Decomposition {
    fn arity(&self) -> usize {
        self.juntas.first().map(|j| j.arity()).unwrap_or(0)
    }
    fn eval(&self, x: u64) -> bool {
        self.core.eval(self.phi(x))
    }
}

pub fn decompose_2bp(b: &BranchingProgram2) -> Result<Decomposition> {
    let core_arity = 2 * b.len();
    if core_arity > MAX_ARITY {
        return Err(Error::ArityTooLarge {
            arity: core_arity,
            limit: MAX_ARITY,
        });
    }
    let mut juntas = Vec::with_capacity(core_arity);
    let mut core_layers = Vec::with_capacity(b.len());
    for (l, layer) in b.layers.iter().enumerate() {
        for node in layer {
            let mut table = TruthTable::zeros(node.reads.len())?;
            for (v, &t) in node.table.iter().enumerate() {
                table.set(v as u64, t == 1);
            }
            juntas.push(Junta::new(b.arity, node.reads.clone(), table)?);
        }
        let relay = |v: usize| Node {
            reads: vec![v],
            table: vec![0, 1],
        };
        core_layers.push([relay(2 * l), relay(2 * l + 1)]);
    }
    let core = BranchingProgram2::new(core_arity, core_layers, b.start, b.accept)?;
    Ok(Decomposition { core, juntas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node(reads: Vec<usize>, table: Vec<u8>) -> Node {
        Node { reads, table }
    }

    #[test]
    fn one_layer_identity_outputs_x1() {
        let b = BranchingProgram2::new(
            1,
            vec![[node(vec![0], vec![0, 1]), node(vec![0], vec![0, 1])]],
            0,
            1,
        )
        .unwrap();
        assert!(!eval_2bp(&b, &"0".parse().unwrap()).unwrap());
        assert!(eval_2bp(&b, &"1".parse().unwrap()).unwrap());
        assert!(eval_2bp(&b, &"10".parse().unwrap()).is_err());
    }

    fn and_program() -> BranchingProgram2 {
        // layer 1: read x1, go to node x1. layer 2: from node 0 stay at 0,
        // from node 1 go to x2.
        BranchingProgram2::new(
            2,
            vec![
                [node(vec![0], vec![0, 1]), node(vec![0], vec![0, 1])],
                [node(vec![1], vec![0, 0]), node(vec![1], vec![0, 1])],
            ],
            0,
            1,
        )
        .unwrap()
    }

    #[test]
    fn two_layer_and() {
        let b = and_program();
        for x in 0..4u64 {
            assert_eq!(b.eval(x), x == 3);
        }
    }

    #[test]
    fn and_decomposition_uses_read_projections() {
        let b = and_program();
        let dec = decompose_2bp(&b).unwrap();
        assert_eq!(dec.juntas.len(), 4);
        assert_eq!(dec.juntas[0].support(), &[0]);
        assert_eq!(dec.juntas[3].support(), &[1]);
        for x in 0..4u64 {
            assert_eq!(dec.eval(x), b.eval(x));
        }
        assert_eq!(dec.core.read_width(), 1);
    }

    #[test]
    fn one_bit_program_decomposes_into_dictators() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = BranchingProgram2::random(1, 4, 6, &mut rng).unwrap();
        let dec = decompose_2bp(&b).unwrap();
        for (v, j) in dec.juntas.iter().enumerate() {
            let l = v / 2;
            let n = &b.layers()[l][v % 2];
            assert_eq!(j.support(), n.reads.as_slice());
        }
        for x in 0..64u64 {
            assert_eq!(dec.eval(x), b.eval(x));
        }
    }

    #[test]
    fn validation() {
        assert!(BranchingProgram2::new(
            2,
            vec![[node(vec![2], vec![0, 1]), node(vec![0], vec![0, 1])]],
            0,
            1
        )
        .is_err());
        assert!(BranchingProgram2::new(
            2,
            vec![[node(vec![1], vec![0]), node(vec![0], vec![0, 1])]],
            0,
            1
        )
        .is_err());
        assert!(BranchingProgram2::new(
            2,
            vec![[node(vec![1], vec![0, 2]), node(vec![0], vec![0, 1])]],
            0,
            1
        )
        .is_err());
        // repeated reads are allowed
        assert!(BranchingProgram2::new(
            2,
            vec![[
                node(vec![1, 1], vec![0, 1, 1, 0]),
                node(vec![0], vec![0, 1])
            ]],
            0,
            1
        )
        .is_ok());
    }

    #[test]
    fn json_layout() {
        let b = and_program();
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.starts_with(
            r#"{"arity":2,"start":0,"accept":1,"layers":[[{"reads":[0],"table":[0,1]}"#
        ));
        let back: BranchingProgram2 = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_UNIVERSE: usize = 128;
pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000;

/// `count` subsets of `[universe]`, each of size `set_size`, pairwise
/// meeting in at most `max_intersection` points. Sets are sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DesignWire")]
pub struct Design {
    universe: usize,
    set_size: usize,
    max_intersection: usize,
    sets: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct DesignWire {
    universe: usize,
    set_size: usize,
    max_intersection: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<DesignWire> for Design {
    type Error = Error;
    fn try_from(w: DesignWire) -> Result<Self> {
        Design::new(w.universe, w.set_size, w.max_intersection, w.sets)
    }
}

impl Design {
    /// Checks every invariant.
    pub fn new(
        universe: usize,
        set_size: usize,
        max_intersection: usize,
        mut sets: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if universe > MAX_UNIVERSE {
            return Err(Error::ParameterOutOfRange(format!(
                "universe {universe} above {MAX_UNIVERSE}"
            )));
        }
        for s in sets.iter_mut() {
            s.sort_unstable();
            if s.len() != set_size || s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::ShapeMismatch(format!(
                    "design set {s:?} does not have {set_size} distinct points"
                )));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= universe) {
                return Err(Error::ShapeMismatch(format!(
                    "design point {bad} outside universe {universe}"
                )));
            }
        }
        let d = Design {
            universe,
            set_size,
            max_intersection,
            sets,
        };
        let masks = d.masks();
        for i in 0..masks.len() {
            for j in 0..i {
                let meet = (masks[i] & masks[j]).count_ones() as usize;
                if meet > max_intersection {
                    return Err(Error::ShapeMismatch(format!(
                        "design sets {j} and {i} share {meet} points, limit {max_intersection}"
                    )));
                }
            }
        }
        Ok(d)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn max_intersection(&self) -> usize {
        self.max_intersection
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn masks(&self) -> Vec<u128> {
        self.sets
            .iter()
            .map(|s| s.iter().fold(0u128, |m, &i| m | 1 << i))
            .collect()
    }

    /// Largest pairwise intersection actually present.
    pub fn realized_intersection(&self) -> usize {
        let masks = self.masks();
        let mut best = 0;
        for i in 0..masks.len() {
            for j in 0..i {
                best = best.max((masks[i] & masks[j]).count_ones() as usize);
            }
        }
        best
    }
}

/// Next `r`-subset of `[s]` after `c` in lexicographic order.
fn next_combination(c: &mut [usize], s: usize) -> bool {
    let r = c.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if c[i] < s - r + i {
            c[i] += 1;
            for j in i + 1..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn mask_of(c: &[usize]) -> u128 {
    c.iter().fold(0u128, |m, &i| m | 1 << i)
}

/// Greedy design: scan `r`-subsets in lexicographic order, taking each one
/// compatible with those already taken, and backtrack on a dead end. When
/// `count * r <= s` the sets are disjoint consecutive blocks.
pub fn build_design(count: usize, s: usize, r: usize, k: usize) -> Result<Design> {
    build_design_with_budget(count, s, r, k, DEFAULT_NODE_BUDGET)
}

pub fn build_design_with_budget(
    count: usize,
    s: usize,
    r: usize,
    k: usize,
    budget: u64,
) -> Result<Design> {
    if s > MAX_UNIVERSE {
        return Err(Error::ParameterOutOfRange(format!(
            "universe {s} above {MAX_UNIVERSE}"
        )));
    }
    if r > s || r == 0 {
        return Err(Error::Infeasible(format!(
            "sets of size {r} in a universe of {s}"
        )));
    }
    if count * r <= s {
        let sets = (0..count).map(|i| (i * r..(i + 1) * r).collect()).collect();
        return Design::new(s, r, k, sets);
    }
    if k >= r {
        // Any distinct sets qualify; take the first `count` in order.
        let mut c: Vec<usize> = (0..r).collect();
        let mut sets = Vec::with_capacity(count);
        loop {
            if sets.len() == count {
                return Design::new(s, r, k, sets);
            }
            sets.push(c.clone());
            if !next_combination(&mut c, s) {
                return Err(Error::Infeasible(format!(
                    "fewer than {count} subsets of size {r} in [{s}]"
                )));
            }
        }
    }

    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(count);
    let mut masks: Vec<u128> = Vec::with_capacity(count);
    let mut cursor: Vec<usize> = (0..r).collect();
    let mut nodes = 0u64;
    let fits = |m: u128, masks: &[u128]| masks.iter().all(|&o| (o & m).count_ones() as usize <= k);
    loop {
        // Advance `cursor` to the next compatible candidate.
        let mut found = false;
        loop {
            nodes += 1;
            if nodes > budget {
                return Err(Error::Infeasible(format!(
                    "design search for {count} sets of size {r} in [{s}] with intersection {k} exceeded {budget} steps"
                )));
            }
            if fits(mask_of(&cursor), &masks) {
                found = true;
                break;
            }
            if !next_combination(&mut cursor, s) {
                break;
            }
        }
        if found {
            masks.push(mask_of(&cursor));
            chosen.push(cursor.clone());
            if chosen.len() == count {
                return Design::new(s, r, k, chosen);
            }
            if next_combination(&mut cursor, s) {
                continue;
            }
        }
        // Dead end: drop the last choice and resume after it.
        loop {
            let Some(last) = chosen.pop() else {
                return Err(Error::Infeasible(format!(
                    "no design of {count} sets of size {r} in [{s}] with intersection {k}"
                )));
            };
            masks.pop();
            cursor = last;
            if next_combination(&mut cursor, s) {
                break;
            }
        }
    }
}

/// The design from the smallest universe (between `r` and `count * r`) on
/// which the greedy search succeeds within its budget.
pub fn smallest_design(count: usize, r: usize, k: usize, budget: u64) -> Result<Design> {
    let top = (count * r).min(MAX_UNIVERSE);
    for s in r..=top {
        match build_design_with_budget(count, s, r, k, budget) {
            Ok(d) => return Ok(d),
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Infeasible(format!(
        "no universe up to {top} holds {count} sets of size {r} with intersection {k}"
    )))
}

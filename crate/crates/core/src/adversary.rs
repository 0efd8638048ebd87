//! Corrupted tables: planted-distance corruption, one flip per set, and
//! flipping a coordinate on a chosen cluster of sets.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact::{ratio_u, serde_rational, Rational};
use crate::model::{dp_encode, Assignment, DPTable, Domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorruptionSpec {
    RandomSetCorruption {
        #[serde(with = "serde_rational")]
        delta: Rational,
        seed: u64,
    },
    PerSetSingleFlip {
        seed: u64,
    },
    CoordinateClusterFlip {
        coord: u32,
        sets: Vec<usize>,
    },
}

impl CorruptionSpec {
    pub fn apply(&self, a: &Assignment, dom: &Arc<Domain>) -> Result<DPTable> {
        match self {
            CorruptionSpec::RandomSetCorruption { delta, seed } => corrupt_random_sets(a, dom, delta, *seed),
            CorruptionSpec::PerSetSingleFlip { seed } => per_set_single_flip(a, dom, *seed),
            CorruptionSpec::CoordinateClusterFlip { coord, sets } => coordinate_cluster_flip(a, dom, *coord, sets),
        }
    }
}

/// Number of sets corrupted at rate `delta`: ⌈δ|V|⌉.
pub fn corrupted_count(delta: &Rational, sets: usize) -> usize {
    let v = delta * ratio_u(sets, 1);
    v.numer().div_ceil(v.denom()).to_usize().unwrap_or(0)
}

/// Replaces ⌈δ|V|⌉ uniformly chosen sets by a uniformly random different value.
pub fn corrupt_random_sets(a: &Assignment, dom: &Arc<Domain>, delta: &Rational, seed: u64) -> Result<DPTable> {
    if delta < &Rational::zero() || delta > &Rational::one() {
        return Err(invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    let mut f = dp_encode(a, dom)?;
    let count = corrupted_count(delta, dom.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = index::sample(&mut rng, dom.len(), count).into_vec();
    chosen.sort_unstable();
    if let Some(&idx) = chosen.iter().find(|&&i| dom.set(i).is_empty()) {
        return Err(invalid(format!("set {idx} is empty and cannot be corrupted")));
    }
    for idx in chosen {
        let bits = f.values_mut()[idx].bits_mut();
        // a uniform nonzero XOR mask gives a uniform value among the 2^k - 1 others
        loop {
            let mask: Vec<bool> = (0..bits.len()).map(|_| rng.gen()).collect();
            if mask.iter().any(|&m| m) {
                for (b, m) in bits.iter_mut().zip(mask) {
                    *b ^= m;
                }
                break;
            }
        }
    }
    Ok(f)
}

/// Flips one uniformly chosen coordinate in every set.
pub fn per_set_single_flip(a: &Assignment, dom: &Arc<Domain>, seed: u64) -> Result<DPTable> {
    if let Some(idx) = dom.sets().iter().position(|s| s.is_empty()) {
        return Err(invalid(format!("set {idx} is empty")));
    }
    let mut f = dp_encode(a, dom)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for value in f.values_mut() {
        let bits = value.bits_mut();
        let p = rng.gen_range(0..bits.len());
        bits[p] = !bits[p];
    }
    Ok(f)
}

/// Flips coordinate `coord` on exactly the listed sets, which must all contain it.
pub fn coordinate_cluster_flip(a: &Assignment, dom: &Arc<Domain>, coord: u32, sets: &[usize]) -> Result<DPTable> {
    if coord == 0 || coord > dom.n() {
        return Err(invalid(format!("coordinate {coord} outside [1, {}]", dom.n())));
    }
    let mut f = dp_encode(a, dom)?;
    let mut seen = vec![false; dom.len()];
    for &idx in sets {
        let pos = (idx < dom.len())
            .then(|| dom.set(idx).position(coord))
            .flatten()
            .ok_or_else(|| invalid(format!("set {idx} does not contain coordinate {coord}")))?;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(invalid(format!("set {idx} listed twice")));
        }
        let bits = f.values_mut()[idx].bits_mut();
        bits[pos] = !bits[pos];
    }
    Ok(f)
}

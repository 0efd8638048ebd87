//! Ground sets, subset domains, assignments and the direct product encoding.
//!
//! Coordinates are 1-based (`1..=n`). A [`Subset`] keeps its coordinates in
//! strictly ascending order and a [`LocalAssignment`] stores one bit per
//! coordinate of its owning subset, aligned with that order.

use std::sync::Arc;

use num_rational::BigRational;

use crate::error::{invalid, Error, Result};
use crate::exact::ratio_u;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subset {
    coords: Vec<u32>,
    n: u32,
}

impl Subset {
    /// Builds a subset of `[n]`, sorting the coordinates. Duplicates and
    /// out-of-range coordinates are rejected.
    pub fn new(mut coords: Vec<u32>, n: u32) -> Result<Self> {
        coords.sort_unstable();
        if coords.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("repeated coordinate in {coords:?}")));
        }
        if let Some(&c) = coords.iter().find(|&&c| c == 0 || c > n) {
            return Err(invalid(format!("coordinate {c} outside [1, {n}]")));
        }
        Ok(Subset { coords, n })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, coord: u32) -> bool {
        self.coords.binary_search(&coord).is_ok()
    }

    /// Position of `coord` inside this subset, if present.
    pub fn position(&self, coord: u32) -> Option<usize> {
        self.coords.binary_search(&coord).ok()
    }

    pub fn intersection_len(&self, other: &Subset) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.coords.len() && j < other.coords.len() {
            match self.coords[i].cmp(&other.coords[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }
}

/// An indexed multiset of subsets of `[n]` together with the per-coordinate
/// membership index: `coord_index[i - 1]` lists the set indices containing `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    n: u32,
    sets: Vec<Subset>,
    coord_index: Vec<Vec<usize>>,
}

impl Domain {
    pub fn new(n: u32, sets: Vec<Subset>) -> Result<Self> {
        if let Some(s) = sets.iter().find(|s| s.n != n) {
            return Err(invalid(format!(
                "subset over ground set {} in a domain over {n}",
                s.n
            )));
        }
        let mut coord_index = vec![Vec::new(); n as usize];
        for (idx, set) in sets.iter().enumerate() {
            for &c in &set.coords {
                coord_index[(c - 1) as usize].push(idx);
            }
        }
        Ok(Domain { n, sets, coord_index })
    }

    /// Convenience constructor from raw coordinate lists.
    pub fn from_lists(n: u32, lists: Vec<Vec<u32>>) -> Result<Self> {
        let sets = lists
            .into_iter()
            .map(|c| Subset::new(c, n))
            .collect::<Result<Vec<_>>>()?;
        Domain::new(n, sets)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sets(&self) -> &[Subset] {
        &self.sets
    }

    pub fn set(&self, idx: usize) -> &Subset {
        &self.sets[idx]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Set indices whose subset contains coordinate `coord` (1-based).
    pub fn containing(&self, coord: u32) -> &[usize] {
        &self.coord_index[(coord - 1) as usize]
    }

    pub fn max_set_len(&self) -> usize {
        self.sets.iter().map(Subset::len).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    pub fn zeros(n: u32) -> Self {
        Assignment { bits: vec![false; n as usize] }
    }

    /// Bit `i` of the integer `value` becomes coordinate `i + 1`.
    pub fn from_index(value: u64, n: u32) -> Self {
        Assignment {
            bits: (0..n).map(|i| (value >> i) & 1 == 1).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Value at 1-based coordinate.
    pub fn get(&self, coord: u32) -> bool {
        self.bits[(coord - 1) as usize]
    }

    pub fn flip(&mut self, coord: u32) {
        let b = &mut self.bits[(coord - 1) as usize];
        *b = !*b;
    }

    /// Relative Hamming distance.
    pub fn distance(&self, other: &Assignment) -> Result<BigRational> {
        if self.len() != other.len() || self.is_empty() {
            return Err(invalid("assignments of different or zero length"));
        }
        let diff = self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count();
        Ok(ratio_u(diff, self.len()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalAssignment {
    bits: Vec<bool>,
}

impl LocalAssignment {
    pub fn new(bits: Vec<bool>) -> Self {
        LocalAssignment { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// A function assigning each set of a domain a local bit assignment.
#[derive(Clone, Debug)]
pub struct DPTable {
    domain: Arc<Domain>,
    values: Vec<LocalAssignment>,
}

impl DPTable {
    pub fn new(domain: Arc<Domain>, values: Vec<LocalAssignment>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(invalid(format!(
                "{} local assignments for a domain of {} sets",
                values.len(),
                domain.len()
            )));
        }
        for (idx, (v, s)) in values.iter().zip(domain.sets()).enumerate() {
            if v.len() != s.len() {
                return Err(invalid(format!(
                    "set {idx} has {} coordinates but {} bits",
                    s.len(),
                    v.len()
                )));
            }
        }
        Ok(DPTable { domain, values })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[LocalAssignment] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> &LocalAssignment {
        &self.values[idx]
    }

    /// Value of set `idx` at coordinate `coord`, if the set contains it.
    pub fn bit_at(&self, idx: usize, coord: u32) -> Option<bool> {
        self.domain.set(idx).position(coord).map(|p| self.values[idx].bits[p])
    }

    pub(crate) fn values_mut(&mut self) -> &mut [LocalAssignment] {
        &mut self.values
    }

    pub fn same_domain(&self, other: &DPTable) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }
}

impl PartialEq for DPTable {
    fn eq(&self, other: &Self) -> bool {
        self.same_domain(other) && self.values == other.values
    }
}

/// Restricts `a` to every set of the domain.
pub fn dp_encode(a: &Assignment, dom: &Arc<Domain>) -> Result<DPTable> {
    if a.len() != dom.n() as usize {
        return Err(invalid(format!(
            "assignment of length {} for ground set of size {}",
            a.len(),
            dom.n()
        )));
    }
    let values = dom
        .sets()
        .iter()
        .map(|s| LocalAssignment::new(s.coords().iter().map(|&c| a.get(c)).collect()))
        .collect();
    Ok(DPTable { domain: Arc::clone(dom), values })
}

/// Fraction of sets on which the two tables differ (as whole local assignments).
pub fn dp_distance(f: &DPTable, g: &DPTable) -> Result<BigRational> {
    if !f.same_domain(g) {
        return Err(invalid("tables over different domains"));
    }
    if f.values.is_empty() {
        return Err(invalid("empty domain"));
    }
    let diff = f.values.iter().zip(&g.values).filter(|(x, y)| x != y).count();
    Ok(ratio_u(diff, f.values.len()))
}

pub const CLOSEST_CODEWORD_MAX_N: u32 = 24;

/// Exhaustive search for the codeword nearest to `f`. Ties go to the
/// lexicographically smallest assignment (coordinate 1 most significant).
pub fn closest_codeword(f: &DPTable) -> Result<(Assignment, BigRational)> {
    let dom = f.domain();
    let n = dom.n();
    if n > CLOSEST_CODEWORD_MAX_N {
        return Err(Error::UnsupportedSize(format!(
            "exhaustive search needs n <= {CLOSEST_CODEWORD_MAX_N}, got {n}"
        )));
    }
    if dom.is_empty() {
        return Err(invalid("empty domain"));
    }
    // Pack each set as (mask, value) in a u32 with coordinate c at bit n - c so
    // that integer order equals lexicographic order.
    let packed: Vec<(u32, u32)> = dom
        .sets()
        .iter()
        .zip(f.values())
        .map(|(s, v)| {
            let mut mask = 0u32;
            let mut val = 0u32;
            for (&c, &b) in s.coords().iter().zip(v.bits()) {
                let bit = 1u32 << (n - c);
                mask |= bit;
                if b {
                    val |= bit;
                }
            }
            (mask, val)
        })
        .collect();
    let mut best = (0u32, usize::MAX);
    for x in 0..(1u64 << n) {
        let x = x as u32;
        let mut diff = 0;
        for &(mask, val) in &packed {
            if x & mask != val {
                diff += 1;
                if diff >= best.1 {
                    break;
                }
            }
        }
        if diff < best.1 {
            best = (x, diff);
        }
    }
    let bits = (1..=n).map(|c| (best.0 >> (n - c)) & 1 == 1).collect();
    Ok((Assignment::new(bits), ratio_u(best.1, dom.len())))
}

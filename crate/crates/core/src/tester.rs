//! The two-query agreement test: exact rejection probability and Monte Carlo estimates.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{serde_rational_opt, to_f64, Rational};
use crate::model::DPTable;
use crate::testgraph::{sample_edge_unchecked, TestGraph};

/// Largest number of ordered (vertex, neighbor) picks enumerated exactly.
pub const EXACT_PICK_CAP: usize = 100_000_000;

/// Monte Carlo trials drawn from one RNG stream.
const TRIAL_BLOCK: u64 = 1 << 14;

/// Accepts iff the two local assignments agree on every shared coordinate.
pub fn check_edge(f: &DPTable, s: usize, t: usize) -> bool {
    if s == t {
        return true;
    }
    let dom = f.domain();
    let (a, b) = (dom.set(s).coords(), dom.set(t).coords());
    let (va, vb) = (f.value(s).bits(), f.value(t).bits());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if va[i] != vb[j] {
                    return false;
                }
                i += 1;
                j += 1;
            }
        }
    }
    true
}

/// Each set as a bitset over `[n]`: membership mask and value bits.
struct Packed {
    words: usize,
    masks: Vec<u64>,
    values: Vec<u64>,
}

impl Packed {
    fn new(f: &DPTable) -> Self {
        let dom = f.domain();
        let words = (dom.n() as usize).div_ceil(64).max(1);
        let mut masks = vec![0u64; words * dom.len()];
        let mut values = vec![0u64; words * dom.len()];
        for (idx, (set, v)) in dom.sets().iter().zip(f.values()).enumerate() {
            for (&c, &bit) in set.coords().iter().zip(v.bits()) {
                let p = (c - 1) as usize;
                masks[idx * words + p / 64] |= 1 << (p % 64);
                if bit {
                    values[idx * words + p / 64] |= 1 << (p % 64);
                }
            }
        }
        Packed { words, masks, values }
    }

    fn rejects(&self, s: usize, t: usize) -> bool {
        let (a, b) = (s * self.words, t * self.words);
        (0..self.words).any(|w| {
            self.masks[a + w] & self.masks[b + w] & (self.values[a + w] ^ self.values[b + w]) != 0
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestReport {
    pub mode: Mode,
    /// Exact rejection probability (exact mode only).
    #[serde(with = "serde_rational_opt", default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Rational>,
    /// Rejection probability as a float (the estimate in Monte Carlo mode).
    pub rejection: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejections: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

fn check_compatible(f: &DPTable, graph: &TestGraph) -> Result<()> {
    if !std::sync::Arc::ptr_eq(f.domain(), graph.domain()) && **f.domain() != **graph.domain() {
        return Err(invalid("table and graph are over different domains"));
    }
    if graph.vertex_count() == 0 {
        return Err(invalid("empty graph"));
    }
    if graph.min_degree() == 0 {
        return Err(Error::InvalidGraph("graph has a vertex of degree zero".into()));
    }
    Ok(())
}

/// Exact probability that the test rejects: S uniform, S' proportional to weight.
pub fn rejection_probability_exact(f: &DPTable, graph: &TestGraph) -> Result<TestReport> {
    check_compatible(f, graph)?;
    if graph.adjacency_entries() > EXACT_PICK_CAP {
        return Err(Error::Unsupported(format!(
            "{} ordered picks exceed the exact cap of {EXACT_PICK_CAP}; use Monte Carlo",
            graph.adjacency_entries()
        )));
    }
    let packed = Packed::new(f);
    // rejected weight summed per distinct degree
    let mut by_degree: BTreeMap<u64, u128> = BTreeMap::new();
    for s in 0..graph.vertex_count() {
        let rejected: u64 = graph
            .neighbors(s)
            .filter(|&(t, _)| packed.rejects(s, t))
            .map(|(_, w)| w as u64)
            .sum();
        if rejected > 0 {
            *by_degree.entry(graph.degree(s)).or_insert(0) += rejected as u128;
        }
    }
    let mut total = Rational::zero();
    for (d, r) in by_degree {
        total += BigRational::new(BigInt::from(r), BigInt::from(d));
    }
    total /= BigRational::from_integer(BigInt::from(graph.vertex_count()));
    Ok(TestReport {
        mode: Mode::Exact,
        rejection: to_f64(&total),
        exact: Some(total),
        trials: None,
        rejections: None,
        seed: None,
        std_error: None,
    })
}

/// Monte Carlo estimate over `trials` independent picks. Trials are drawn in
/// fixed-size blocks, block `b` from stream `b` of a ChaCha generator keyed
/// by `seed`, so results depend only on `(seed, trials)`.
pub fn run_test_monte_carlo(f: &DPTable, graph: &TestGraph, trials: u64, seed: u64) -> Result<TestReport> {
    check_compatible(f, graph)?;
    if trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let packed = Packed::new(f);
    let mut rejections = 0u64;
    let mut done = 0u64;
    let mut block = 0u64;
    while done < trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let len = TRIAL_BLOCK.min(trials - done);
        for _ in 0..len {
            let (s, t) = sample_edge_unchecked(graph, &mut rng);
            if packed.rejects(s, t) {
                rejections += 1;
            }
        }
        done += len;
        block += 1;
    }
    let p = rejections as f64 / trials as f64;
    Ok(TestReport {
        mode: Mode::MonteCarlo,
        exact: None,
        rejection: p,
        trials: Some(trials),
        rejections: Some(rejections),
        seed: Some(seed),
        std_error: Some((p * (1.0 - p) / trials as f64).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::model::{dp_encode, Assignment};
    use crate::testgraph::{build_from_edges, build_sliding_window};
    use crate::model::Domain;
    use std::sync::Arc;

    fn flipped_fixture() -> (DPTable, TestGraph) {
        let (dom, g) = build_sliding_window(4, 2, false).unwrap();
        let mut f = dp_encode(&Assignment::zeros(4), &dom).unwrap();
        let idx = dom.sets().iter().position(|s| s.coords() == [1, 2]).unwrap();
        f.values_mut()[idx].bits_mut()[0] = true;
        (f, g)
    }

    #[test]
    fn single_flip_on_four_windows() {
        let (f, g) = flipped_fixture();
        let dom = f.domain().clone();
        let a = dom.sets().iter().position(|s| s.coords() == [1, 2]).unwrap();
        let b = dom.sets().iter().position(|s| s.coords() == [1, 4]).unwrap();
        assert!(!check_edge(&f, a, b));
        assert!(check_edge(&f, a, a));
        let r = rejection_probability_exact(&f, &g).unwrap();
        assert_eq!(r.exact, Some(ratio(1, 6)));
    }

    #[test]
    fn codeword_is_accepted() {
        let (dom, g) = build_sliding_window(9, 3, false).unwrap();
        let f = dp_encode(&Assignment::from_index(0b101101011, 9), &dom).unwrap();
        assert_eq!(rejection_probability_exact(&f, &g).unwrap().exact, Some(ratio(0, 1)));
        let mc = run_test_monte_carlo(&f, &g, 5000, 3).unwrap();
        assert_eq!(mc.rejection, 0.0);
        assert_eq!(mc.std_error, Some(0.0));
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let (f, g) = flipped_fixture();
        let a = run_test_monte_carlo(&f, &g, 40_000, 11).unwrap();
        let b = run_test_monte_carlo(&f, &g, 40_000, 11).unwrap();
        assert_eq!(a.rejections, b.rejections);
        assert!((a.rejection - 1.0 / 6.0).abs() < 5.0 * a.std_error.unwrap());
        let one = run_test_monte_carlo(&f, &g, 1, 0).unwrap();
        assert!(one.rejection == 0.0 || one.rejection == 1.0);
        assert!(run_test_monte_carlo(&f, &g, 0, 0).is_err());
    }

    #[test]
    fn irregular_graph_weights_by_vertex() {
        // path 0 - 1 - 2 over coordinate sets {1}, {1,2}, {2}
        let dom = Arc::new(Domain::from_lists(2, vec![vec![1], vec![1, 2], vec![2]]).unwrap());
        let g = build_from_edges(Arc::clone(&dom), &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let mut f = dp_encode(&Assignment::zeros(2), &dom).unwrap();
        f.values_mut()[0].bits_mut()[0] = true;
        // vertex 0 always rejects, vertex 1 half the time, vertex 2 never
        let r = rejection_probability_exact(&f, &g).unwrap();
        assert_eq!(r.exact, Some(ratio(1, 2)));
    }

    #[test]
    fn degree_zero_is_an_error() {
        let dom = Arc::new(Domain::from_lists(2, vec![vec![1], vec![2]]).unwrap());
        let g = build_from_edges(Arc::clone(&dom), &[(0, 0, 1)]).unwrap();
        let f = dp_encode(&Assignment::zeros(2), &dom).unwrap();
        assert!(matches!(rejection_probability_exact(&f, &g), Err(Error::InvalidGraph(_))));
    }
}

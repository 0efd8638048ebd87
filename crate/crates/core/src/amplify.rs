//! Vertex expansion, random regular graphs, neighborhood domains and the
//! distance amplification they give.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{ratio_u, serde_rational, Rational};
use crate::model::{dp_encode, dp_distance, Assignment, Domain};
use crate::testgraph::{binomial, build_from_edges, TestGraph};

/// Retries of the pairing model before giving up.
pub const PAIRING_RETRIES: usize = 10_000;

/// Largest number of candidate sets brute-force expansion will enumerate.
pub const BRUTE_FORCE_SUBSETS: u128 = 1 << 22;

/// Domain of singletons `{v}` over `[n]`, used to carry plain graphs.
pub fn singleton_domain(n: usize) -> Result<Arc<Domain>> {
    let lists = (1..=n as u32).map(|v| vec![v]).collect();
    Ok(Arc::new(Domain::from_lists(n as u32, lists)?))
}

/// A uniform simple d-regular graph on `n` vertices from the pairing model,
/// rejecting pairings with loops or repeated edges.
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<TestGraph> {
    if n == 0 {
        return Err(invalid("a graph needs at least one vertex"));
    }
    if (n * d) % 2 == 1 {
        return Err(invalid(format!("n·d = {} is odd", n * d)));
    }
    if d >= n {
        return Err(invalid(format!("degree {d} needs more than {n} vertices")));
    }
    let dom = singleton_domain(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d.max(1)).collect();
    'attempt: for _ in 0..PAIRING_RETRIES {
        points.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = points
            .chunks_exact(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                continue 'attempt;
            }
        }
        if edges.iter().any(|&(u, v)| u == v) {
            continue;
        }
        let weighted: Vec<_> = edges.into_iter().map(|(u, v)| (u, v, 1)).collect();
        return build_from_edges(dom, &weighted);
    }
    Err(Error::RetryExhausted(PAIRING_RETRIES))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionMode {
    BruteForce,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionLabel {
    BruteForce,
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionEstimate {
    /// Exact in brute-force mode, an upper bound when sampled.
    #[serde(with = "serde_rational")]
    pub h: Rational,
    pub mode: ExpansionLabel,
    /// Minimizing (or best found) vertex set, 0-based.
    pub witness: Vec<usize>,
}

fn expansion_degree(graph: &TestGraph) -> Result<usize> {
    match graph.regular_degree() {
        Some(d) if d > 0 => Ok(d as usize),
        Some(_) => Err(invalid("vertex expansion is undefined for degree 0")),
        None => Err(invalid("vertex expansion needs a regular graph")),
    }
}

/// Number of sets `S` with `0 < |S| ≤ ⌊|V|/d⌋`.
fn candidate_count(v: usize, max_size: usize) -> u128 {
    (1..=max_size).map(|s| binomial(v as u64, s as u64)).sum()
}

/// Outer boundary size of `set` (vertices outside it with a neighbor inside).
fn boundary_size(graph: &TestGraph, set: &[usize]) -> usize {
    let mut inside = vec![false; graph.vertex_count()];
    for &v in set {
        inside[v] = true;
    }
    let mut hit = vec![false; graph.vertex_count()];
    let mut count = 0;
    for &v in set {
        for (u, _) in graph.neighbors(v) {
            if !inside[u] && !hit[u] {
                hit[u] = true;
                count += 1;
            }
        }
    }
    count
}

/// The vertex isoperimetric constant `min |∂S| / (|S| d)` over `0 < |S| ≤ |V|/d`.
pub fn vertex_expansion(graph: &TestGraph, mode: ExpansionMode) -> Result<ExpansionEstimate> {
    let d = expansion_degree(graph)?;
    let v = graph.vertex_count();
    let max_size = v / d;
    if max_size == 0 {
        return Err(invalid("no vertex set satisfies 0 < |S| <= |V|/d"));
    }
    // best as (boundary, size, witness), compared as boundary/size
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    let offer = |boundary: usize, set: Vec<usize>, best: &mut Option<(usize, usize, Vec<usize>)>| {
        let better = match best {
            None => true,
            Some((b, s, _)) => boundary * *s < *b * set.len(),
        };
        if better {
            *best = Some((boundary, set.len(), set));
        }
    };
    let label = match mode {
        ExpansionMode::BruteForce => {
            if v > 64 || candidate_count(v, max_size) > BRUTE_FORCE_SUBSETS {
                return Err(Error::UnsupportedSize(format!(
                    "brute-force expansion over {v} vertices needs too many subsets; use sampling"
                )));
            }
            let nbr: Vec<u64> = (0..v)
                .map(|x| graph.neighbors(x).fold(0u64, |m, (u, _)| m | 1 << u))
                .collect();
            for size in 1..=max_size {
                // Gosper's hack over masks with `size` bits
                let mut mask: u64 = (1u64 << size) - 1;
                let limit: u64 = if v == 64 { u64::MAX } else { (1u64 << v) - 1 };
                loop {
                    let mut reach = 0u64;
                    let mut rest = mask;
                    while rest != 0 {
                        reach |= nbr[rest.trailing_zeros() as usize];
                        rest &= rest - 1;
                    }
                    let boundary = (reach & !mask).count_ones() as usize;
                    let cheaper = best.as_ref().is_none_or(|(b, s, _)| boundary * s < b * size);
                    if cheaper {
                        let set = (0..v).filter(|&x| mask >> x & 1 == 1).collect();
                        offer(boundary, set, &mut best);
                    }
                    let c = mask & mask.wrapping_neg();
                    let r = mask.wrapping_add(c);
                    if r == 0 || r > limit {
                        break;
                    }
                    mask = (((r ^ mask) >> 2) / c) | r;
                    if mask > limit {
                        break;
                    }
                }
            }
            ExpansionLabel::BruteForce
        }
        ExpansionMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(invalid("sampled expansion needs at least one sample"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let size = rng.gen_range(1..=max_size);
                let mut set = index::sample(&mut rng, v, size).into_vec();
                set.sort_unstable();
                offer(boundary_size(graph, &set), set, &mut best);
            }
            ExpansionLabel::Sampled
        }
    };
    let (boundary, size, witness) = best.expect("at least one candidate set");
    Ok(ExpansionEstimate {
        h: BigRational::new(BigInt::from(boundary), BigInt::from(size * d)),
        mode: label,
        witness,
    })
}

/// One set per vertex: its open neighborhood, vertex `v` being coordinate `v + 1`.
pub fn boundary_domain(graph: &TestGraph) -> Result<Arc<Domain>> {
    if graph.regular_degree().is_none() {
        return Err(invalid("boundary domain needs a regular graph"));
    }
    if !graph.is_simple() {
        return Err(invalid("boundary domain needs a simple graph"));
    }
    let n = graph.vertex_count();
    let lists = (0..n)
        .map(|v| graph.neighbors(v).map(|(u, _)| u as u32 + 1).collect())
        .collect();
    Ok(Arc::new(Domain::from_lists(n as u32, lists)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Amplification {
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    #[serde(with = "serde_rational")]
    pub encoded_distance: Rational,
    /// `encoded_distance / (k δ)` with `k` the largest set size.
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    pub k: usize,
    /// δ ≥ 1/k, outside the regime where amplification is defined.
    pub out_of_regime: bool,
}

pub fn amplification_ratio(dom: &Arc<Domain>, x: &Assignment, y: &Assignment) -> Result<Amplification> {
    let delta = x.distance(y)?;
    if delta == ratio_u(0, 1) {
        return Err(invalid("x and y must differ"));
    }
    let k = dom.max_set_len();
    if k == 0 {
        return Err(invalid("domain has no nonempty set"));
    }
    let encoded = dp_distance(&dp_encode(x, dom)?, &dp_encode(y, dom)?)?;
    let ratio = &encoded / (&delta * ratio_u(k, 1));
    Ok(Amplification {
        out_of_regime: &delta * ratio_u(k, 1) >= ratio_u(1, 1),
        delta,
        encoded_distance: encoded,
        ratio,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn cycle(n: usize) -> TestGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1)).collect();
        build_from_edges(singleton_domain(n).unwrap(), &edges).unwrap()
    }

    #[test]
    fn k4_is_forced() {
        for seed in 0..5 {
            let g = random_regular_graph(4, 3, seed).unwrap();
            assert!(g.is_simple());
            assert_eq!(g.regular_degree(), Some(3));
            assert_eq!(g.undirected_edges().count(), 6);
        }
    }

    #[test]
    fn random_regular_degree_audit() {
        for (n, d) in [(6, 2), (10, 3), (14, 3), (12, 4), (30, 5)] {
            let g = random_regular_graph(n, d, 7).unwrap();
            assert!(g.is_simple());
            assert!((0..n).all(|v| g.degree(v) == d as u64 && g.neighbor_count(v) == d));
        }
        assert_eq!(
            random_regular_graph(10, 3, 1).unwrap().undirected_edges().collect::<Vec<_>>(),
            random_regular_graph(10, 3, 1).unwrap().undirected_edges().collect::<Vec<_>>()
        );
        assert!(random_regular_graph(5, 3, 0).is_err());
        assert!(random_regular_graph(4, 4, 0).is_err());
    }

    #[test]
    fn cycle_and_clique_expansion() {
        let h = vertex_expansion(&cycle(6), ExpansionMode::BruteForce).unwrap();
        assert_eq!(h.h, ratio(1, 3));
        assert_eq!(h.witness.len(), 3);
        let k4 = random_regular_graph(4, 3, 0).unwrap();
        assert_eq!(vertex_expansion(&k4, ExpansionMode::BruteForce).unwrap().h, ratio(1, 1));
        let s = vertex_expansion(&cycle(6), ExpansionMode::Sampled { samples: 50, seed: 2 }).unwrap();
        assert!(s.h >= ratio(1, 3));
    }

    #[test]
    fn boundary_of_c4_and_k4() {
        let dom = boundary_domain(&cycle(4)).unwrap();
        let sets: Vec<_> = dom.sets().iter().map(|s| s.coords().to_vec()).collect();
        assert_eq!(sets, vec![vec![2, 4], vec![1, 3], vec![2, 4], vec![1, 3]]);
        let dom = boundary_domain(&random_regular_graph(4, 3, 0).unwrap()).unwrap();
        for (v, s) in dom.sets().iter().enumerate() {
            assert_eq!(s.len(), 3);
            assert!(!s.contains(v as u32 + 1));
        }
    }

    #[test]
    fn amplification_examples() {
        let dom = boundary_domain(&cycle(4)).unwrap();
        let x = Assignment::zeros(4);
        let mut y = x.clone();
        y.flip(1);
        let amp = amplification_ratio(&dom, &x, &y).unwrap();
        assert_eq!((amp.delta.clone(), amp.encoded_distance.clone()), (ratio(1, 4), ratio(1, 2)));
        assert_eq!(amp.ratio, ratio(1, 1));
        assert!(!amp.out_of_regime);
        assert!(amplification_ratio(&dom, &x, &x).is_err());

        let (dom, _) = crate::testgraph::build_sliding_window(20, 4, false).unwrap();
        let x = Assignment::zeros(20);
        let mut y = x.clone();
        y.flip(7);
        let amp = amplification_ratio(&dom, &x, &y).unwrap();
        assert_eq!(amp.encoded_distance, ratio(4, 20));
        assert_eq!(amp.ratio, ratio(1, 1));
        assert!(!amp.out_of_regime);
    }
}

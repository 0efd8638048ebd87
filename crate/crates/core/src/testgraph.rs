//! Weighted test graphs over domain indices and the named constructions.
//!
//! The test distribution picks a vertex uniformly and then a neighbor with
//! probability proportional to edge weight. A self loop of weight `w`
//! contributes `w` to its vertex's degree (counted once).

use std::sync::Arc;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::model::{Domain, Subset};

/// Largest vertex count accepted by the explicit constructions.
pub const MAX_VERTICES: usize = 200_000;
/// Largest number of adjacency entries (ordered neighbor slots) stored.
pub const MAX_ADJACENCY: usize = 50_000_000;

#[derive(Clone, Debug)]
pub struct TestGraph {
    domain: Arc<Domain>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u32>,
    degrees: Vec<u64>,
}

struct CsrBuilder {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u32>,
    degrees: Vec<u64>,
}

impl CsrBuilder {
    fn with_capacity(vertices: usize, entries: usize) -> Self {
        let mut offsets = Vec::with_capacity(vertices + 1);
        offsets.push(0);
        CsrBuilder {
            offsets,
            targets: Vec::with_capacity(entries),
            weights: Vec::with_capacity(entries),
            degrees: Vec::with_capacity(vertices),
        }
    }

    /// Appends the next vertex's neighbor list, merging duplicate targets.
    fn push_vertex(&mut self, nbrs: &mut [(u32, u32)]) -> Result<()> {
        nbrs.sort_unstable_by_key(|e| e.0);
        let mut degree = 0u64;
        let mut last: Option<u32> = None;
        for &(t, w) in nbrs.iter() {
            degree += w as u64;
            if last == Some(t) {
                let slot = self.weights.last_mut().expect("previous entry");
                *slot = slot
                    .checked_add(w)
                    .ok_or_else(|| invalid("edge weight overflow"))?;
            } else {
                self.targets.push(t);
                self.weights.push(w);
                last = Some(t);
            }
        }
        if self.targets.len() > MAX_ADJACENCY {
            return Err(Error::UnsupportedSize(format!(
                "more than {MAX_ADJACENCY} adjacency entries"
            )));
        }
        self.offsets.push(self.targets.len());
        self.degrees.push(degree);
        Ok(())
    }

    fn finish(self, domain: Arc<Domain>) -> TestGraph {
        TestGraph {
            domain,
            offsets: self.offsets,
            targets: self.targets,
            weights: self.weights,
            degrees: self.degrees,
        }
    }
}

impl TestGraph {
    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn vertex_count(&self) -> usize {
        self.degrees.len()
    }

    /// Neighbors of `v` as `(target, weight)` pairs, sorted by target.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&t, &w)| (t as usize, w))
    }

    pub fn neighbor_count(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degree(&self, v: usize) -> u64 {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn weight(&self, u: usize, v: usize) -> u32 {
        let range = self.offsets[u]..self.offsets[u + 1];
        match self.targets[range.clone()].binary_search(&(v as u32)) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0,
        }
    }

    /// Common degree if the graph is regular (and nonempty).
    pub fn regular_degree(&self) -> Option<u64> {
        let first = *self.degrees.first()?;
        self.degrees.iter().all(|&d| d == first).then_some(first)
    }

    pub fn min_degree(&self) -> u64 {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    /// Total number of ordered (vertex, neighbor) picks counted with weight.
    pub fn total_weight(&self) -> u128 {
        self.degrees.iter().map(|&d| d as u128).sum()
    }

    pub fn adjacency_entries(&self) -> usize {
        self.targets.len()
    }

    /// Undirected edges `(s, t, w)` with `s <= t`, each listed once.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.vertex_count()).flat_map(move |s| {
            self.neighbors(s)
                .filter(move |&(t, _)| t >= s)
                .map(move |(t, w)| (s, t, w))
        })
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.vertex_count()).any(|v| self.weight(v, v) > 0)
    }

    /// No self loops and every weight equal to one.
    pub fn is_simple(&self) -> bool {
        self.weights.iter().all(|&w| w == 1) && !self.has_self_loops()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.vertex_count())
            .all(|u| self.neighbors(u).all(|(v, w)| self.weight(v, u) == w))
    }

    /// Connected components as a label per vertex; returns (labels, count).
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.components().1 <= 1
    }
}

/// Graph ingestion from a weighted edge list. Each entry is an undirected
/// edge; repeated entries (in either orientation) add their weights.
pub fn build_from_edges(dom: Arc<Domain>, edges: &[(usize, usize, u32)]) -> Result<TestGraph> {
    let n = dom.len();
    let mut lists: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for &(s, t, w) in edges {
        if s >= n || t >= n {
            return Err(invalid(format!("edge ({s}, {t}) outside {n} vertices")));
        }
        if w == 0 {
            return Err(invalid(format!("edge ({s}, {t}) has zero weight")));
        }
        lists[s].push((t as u32, w));
        if s != t {
            lists[t].push((s as u32, w));
        }
    }
    let entries = lists.iter().map(Vec::len).sum();
    let mut b = CsrBuilder::with_capacity(n, entries);
    for list in &mut lists {
        b.push_vertex(list)?;
    }
    Ok(b.finish(dom))
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_vertices(count: u128) -> Result<usize> {
    if count > MAX_VERTICES as u128 {
        return Err(Error::UnsupportedSize(format!(
            "{count} vertices exceeds the cap of {MAX_VERTICES}"
        )));
    }
    Ok(count as usize)
}

/// All k-subsets of [n] in colex order, as 1-based sorted coordinate lists.
fn k_subsets(n: u32, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<u32> = (1..=k).collect();
    loop {
        out.push(cur.clone());
        // colex successor: find the first position that can be bumped
        let mut j = 0usize;
        while j < k as usize {
            let limit = if j + 1 < k as usize { cur[j + 1] - 1 } else { n };
            if cur[j] < limit {
                break;
            }
            j += 1;
        }
        if j == k as usize {
            break;
        }
        cur[j] += 1;
        for (i, slot) in cur.iter_mut().enumerate().take(j) {
            *slot = i as u32 + 1;
        }
    }
    out
}

/// Colex rank of a sorted 1-based k-subset.
fn colex_rank(coords: &[u32], table: &[Vec<u64>]) -> usize {
    coords
        .iter()
        .enumerate()
        .map(|(j, &c)| table[(c - 1) as usize][j + 1])
        .sum::<u64>() as usize
}

fn binomial_table(n: u32, k: u32) -> Vec<Vec<u64>> {
    (0..=n as u64)
        .map(|a| (0..=k as u64 + 1).map(|b| binomial(a, b) as u64).collect())
        .collect()
}

/// Calls `f` with every r-combination of `items` (in lexicographic order).
fn for_each_combination(items: &[u32], r: usize, f: &mut impl FnMut(&[u32])) {
    let m = items.len();
    if r > m {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut buf: Vec<u32> = Vec::with_capacity(r);
    loop {
        buf.clear();
        buf.extend(idx.iter().map(|&i| items[i]));
        f(&buf);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < i + m - r {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// The Johnson graph J(n,k,t): all k-subsets, unit edge iff `|S ∩ S'| = t`.
pub fn build_johnson(n: u32, k: u32, t: u32) -> Result<(Arc<Domain>, TestGraph)> {
    if !(t < k && k <= n) {
        return Err(invalid(format!("need 0 <= t < k <= n, got n={n} k={k} t={t}")));
    }
    let count = check_vertices(binomial(n as u64, k as u64))?;
    let degree = binomial(k as u64, t as u64) * binomial((n - k) as u64, (k - t) as u64);
    if degree * count as u128 > MAX_ADJACENCY as u128 {
        return Err(Error::UnsupportedSize(format!(
            "J({n},{k},{t}) has {} adjacency entries",
            degree * count as u128
        )));
    }
    let subsets = k_subsets(n, k);
    debug_assert_eq!(subsets.len(), count);
    let table = binomial_table(n, k);
    let mut b = CsrBuilder::with_capacity(count, degree as usize * count);
    let mut nbrs: Vec<(u32, u32)> = Vec::with_capacity(degree as usize);
    let mut merged: Vec<u32> = Vec::with_capacity(k as usize);
    for s in &subsets {
        let complement: Vec<u32> = (1..=n).filter(|c| s.binary_search(c).is_err()).collect();
        nbrs.clear();
        for_each_combination(s, t as usize, &mut |kept| {
            for_each_combination(&complement, (k - t) as usize, &mut |added| {
                merged.clear();
                merged.extend_from_slice(kept);
                merged.extend_from_slice(added);
                merged.sort_unstable();
                nbrs.push((colex_rank(&merged, &table) as u32, 1));
            });
        });
        b.push_vertex(&mut nbrs)?;
    }
    let sets = subsets
        .into_iter()
        .map(|c| Subset::new(c, n))
        .collect::<Result<Vec<_>>>()?;
    let dom = Arc::new(Domain::new(n, sets)?);
    Ok((Arc::clone(&dom), b.finish(dom)))
}

fn window(start: u32, k: u32, n: u32) -> Vec<u32> {
    (0..k).map(|j| (start - 1 + j) % n + 1).collect()
}

/// Cyclic window domains. Dense: the `n` windows `{i, .., i+k-1}` (mod n).
/// Sparse: the `2n/k` windows starting at `1 + i·k/2`. Two windows are
/// adjacent iff they intersect, which includes a self loop on every vertex.
pub fn build_sliding_window(n: u32, k: u32, sparse: bool) -> Result<(Arc<Domain>, TestGraph)> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got n={n} k={k}")));
    }
    if sparse {
        if k % 2 != 0 || (2 * n) % k != 0 {
            return Err(invalid(format!(
                "sparse windows need k even and k | 2n, got n={n} k={k}"
            )));
        }
        let half = k / 2;
        let m = (2 * n / k) as usize;
        check_vertices(m as u128)?;
        let sets = (0..m as u32)
            .map(|i| Subset::new(window(1 + i * half, k, n), n))
            .collect::<Result<Vec<_>>>()?;
        let dom = Arc::new(Domain::new(n, sets)?);
        // window i covers blocks i and i+1 (mod m); windows meet iff they share a block
        let mut b = CsrBuilder::with_capacity(m, 3 * m);
        for i in 0..m {
            let mut nbrs: Vec<(u32, u32)> = vec![(m - 1 + i) % m, i, (i + 1) % m]
                .into_iter()
                .map(|j| j as u32)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .map(|j| (j, 1))
                .collect();
            b.push_vertex(&mut nbrs)?;
        }
        return Ok((Arc::clone(&dom), b.finish(dom)));
    }
    let count = check_vertices(n as u128)?;
    let sets = (1..=n)
        .map(|i| Subset::new(window(i, k, n), n))
        .collect::<Result<Vec<_>>>()?;
    let dom = Arc::new(Domain::new(n, sets)?);
    let offsets: Vec<u32> = (0..n).filter(|&d| d < k || n - d < k).collect();
    let mut b = CsrBuilder::with_capacity(count, count * offsets.len());
    for i in 0..n {
        let mut nbrs: Vec<(u32, u32)> = offsets.iter().map(|&d| ((i + d) % n, 1)).collect();
        b.push_vertex(&mut nbrs)?;
    }
    Ok((Arc::clone(&dom), b.finish(dom)))
}

/// The n/2-slice of the hypercube with the complete graph plus self loops
/// (independent uniform pair).
pub fn build_clique_slice(n: u32) -> Result<(Arc<Domain>, TestGraph)> {
    if n == 0 || n % 2 != 0 {
        return Err(invalid(format!("clique slice needs positive even n, got {n}")));
    }
    let count = check_vertices(binomial(n as u64, (n / 2) as u64))?;
    if count * count > MAX_ADJACENCY {
        return Err(Error::UnsupportedSize(format!(
            "complete graph on {count} vertices"
        )));
    }
    let sets = k_subsets(n, n / 2)
        .into_iter()
        .map(|c| Subset::new(c, n))
        .collect::<Result<Vec<_>>>()?;
    let dom = Arc::new(Domain::new(n, sets)?);
    let mut b = CsrBuilder::with_capacity(count, count * count);
    for _ in 0..count {
        let mut nbrs: Vec<(u32, u32)> = (0..count as u32).map(|j| (j, 1)).collect();
        b.push_vertex(&mut nbrs)?;
    }
    Ok((Arc::clone(&dom), b.finish(dom)))
}

/// Draws an ordered pair: a uniform vertex, then a weight-proportional neighbor.
pub fn sample_edge<R: Rng + ?Sized>(graph: &TestGraph, rng: &mut R) -> Result<(usize, usize)> {
    if graph.vertex_count() == 0 || graph.min_degree() == 0 {
        return Err(Error::InvalidGraph("graph has a vertex of degree zero".into()));
    }
    Ok(sample_edge_unchecked(graph, rng))
}

pub(crate) fn sample_edge_unchecked<R: Rng + ?Sized>(graph: &TestGraph, rng: &mut R) -> (usize, usize) {
    let s = rng.gen_range(0..graph.vertex_count());
    let mut r = rng.gen_range(0..graph.degree(s));
    for (t, w) in graph.neighbors(s) {
        if r < w as u64 {
            return (s, t);
        }
        r -= w as u64;
    }
    unreachable!("degree equals the sum of weights")
}

/// Induced subgraph on the sets containing a coordinate.
#[derive(Clone, Debug)]
pub struct LocalView {
    pub coord: u32,
    pub graph: TestGraph,
    /// `parent[j]` is the index in the parent graph of local vertex `j`.
    pub parent: Vec<usize>,
}

pub fn local_subgraph(graph: &TestGraph, coord: u32) -> Result<LocalView> {
    let dom = graph.domain();
    if coord == 0 || coord > dom.n() {
        return Err(invalid(format!("coordinate {coord} outside [1, {}]", dom.n())));
    }
    let members = dom.containing(coord).to_vec();
    if members.is_empty() {
        return Err(Error::EmptyLocalView(coord));
    }
    let mut local_of = vec![u32::MAX; graph.vertex_count()];
    for (j, &p) in members.iter().enumerate() {
        local_of[p] = j as u32;
    }
    let sets = members.iter().map(|&p| dom.set(p).clone()).collect();
    let local_dom = Arc::new(Domain::new(dom.n(), sets)?);
    let mut b = CsrBuilder::with_capacity(members.len(), 0);
    for &p in &members {
        let mut nbrs: Vec<(u32, u32)> = graph
            .neighbors(p)
            .filter(|&(t, _)| local_of[t] != u32::MAX)
            .map(|(t, w)| (local_of[t], w))
            .collect();
        b.push_vertex(&mut nbrs)?;
    }
    Ok(LocalView {
        coord,
        graph: b.finish(local_dom),
        parent: members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn johnson_4_2_1() {
        let (dom, g) = build_johnson(4, 2, 1).unwrap();
        assert_eq!(dom.len(), 6);
        assert_eq!(g.regular_degree(), Some(4));
        assert!(g.is_symmetric());
        for (s, t, _) in g.undirected_edges() {
            assert_eq!(dom.set(s).intersection_len(dom.set(t)), 1);
        }
    }

    #[test]
    fn johnson_counts() {
        let (dom, g) = build_johnson(6, 3, 1).unwrap();
        assert_eq!(dom.len(), 20);
        // C(3,1)·C(3,2) = 9
        assert_eq!(g.regular_degree(), Some(9));
        assert_eq!(g.undirected_edges().count(), 20 * 9 / 2);
        assert!(build_johnson(4, 2, 2).is_err());
        assert!(matches!(build_johnson(40, 20, 10), Err(Error::UnsupportedSize(_))));
    }

    #[test]
    fn johnson_brute_force_adjacency() {
        for (n, k, t) in [(5, 2, 0), (6, 3, 2), (7, 3, 1), (6, 2, 1)] {
            let (dom, g) = build_johnson(n, k, t).unwrap();
            for a in 0..dom.len() {
                for b in 0..dom.len() {
                    let want = (dom.set(a).intersection_len(dom.set(b)) == t as usize) as u32;
                    assert_eq!(g.weight(a, b), want, "J({n},{k},{t}) pair {a},{b}");
                }
            }
        }
    }

    #[test]
    fn sliding_window_6_3() {
        let (dom, g) = build_sliding_window(6, 3, false).unwrap();
        assert_eq!(dom.len(), 6);
        assert_eq!(dom.set(0).coords(), &[1, 2, 3]);
        assert_eq!(dom.set(5).coords(), &[1, 2, 6]); // {6,1,2}
        assert_eq!(g.regular_degree(), Some(5));
        for a in 0..6 {
            for b in 0..6 {
                let meet = dom.set(a).intersection_len(dom.set(b)) > 0;
                assert_eq!(g.weight(a, b) == 1, meet);
            }
        }
    }

    #[test]
    fn sliding_window_wide_k_is_complete() {
        let (_, g) = build_sliding_window(5, 4, false).unwrap();
        assert_eq!(g.regular_degree(), Some(5));
    }

    #[test]
    fn sparse_windows() {
        let (dom, g) = build_sliding_window(8, 4, true).unwrap();
        let lists: Vec<_> = dom.sets().iter().map(|s| s.coords().to_vec()).collect();
        assert_eq!(
            lists,
            vec![vec![1, 2, 3, 4], vec![3, 4, 5, 6], vec![5, 6, 7, 8], vec![1, 2, 7, 8]]
        );
        assert_eq!(g.regular_degree(), Some(3));
        assert_eq!(g.weight(0, 2), 0);
        assert!(build_sliding_window(8, 3, true).is_err());
        assert!(build_sliding_window(10, 6, true).is_err());
        assert_eq!(build_sliding_window(6, 4, true).unwrap().1.regular_degree(), Some(3));
    }

    #[test]
    fn clique_slice_4() {
        let (dom, g) = build_clique_slice(4).unwrap();
        assert_eq!(dom.len(), 6);
        assert_eq!(g.regular_degree(), Some(6));
        assert_eq!(g.weight(2, 2), 1);
        assert!(build_clique_slice(5).is_err());
    }

    #[test]
    fn edges_ingestion() {
        let dom = Arc::new(Domain::from_lists(3, vec![vec![1], vec![2], vec![3]]).unwrap());
        let g = build_from_edges(Arc::clone(&dom), &[]).unwrap();
        assert_eq!(g.min_degree(), 0);
        let g = build_from_edges(Arc::clone(&dom), &[(0, 1, 1), (1, 0, 2), (2, 2, 1)]).unwrap();
        assert_eq!(g.weight(0, 1), 3);
        assert_eq!(g.weight(1, 0), 3);
        assert_eq!(g.degree(2), 1);
        assert!(g.is_symmetric());
        assert!(build_from_edges(Arc::clone(&dom), &[(0, 3, 1)]).is_err());
        assert!(build_from_edges(dom, &[(0, 1, 0)]).is_err());
    }

    #[test]
    fn sampling_single_edge() {
        let dom = Arc::new(Domain::from_lists(2, vec![vec![1], vec![2]]).unwrap());
        let g = build_from_edges(dom, &[(0, 1, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (s, t) = sample_edge(&g, &mut rng).unwrap();
            assert!((s, t) == (0, 1) || (s, t) == (1, 0));
        }
    }

    #[test]
    fn sampling_rejects_isolated_vertices() {
        let dom = Arc::new(Domain::from_lists(2, vec![vec![1], vec![2]]).unwrap());
        let g = build_from_edges(dom, &[(0, 0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_edge(&g, &mut rng), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn sampling_is_uniform_on_sliding_4_2() {
        let (_, g) = build_sliding_window(4, 2, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = std::collections::HashMap::new();
        let trials = 120_000;
        for _ in 0..trials {
            *counts.entry(sample_edge(&g, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 12);
        for (_, c) in counts {
            let p = c as f64 / trials as f64;
            assert!((p - 1.0 / 12.0).abs() < 0.005, "p = {p}");
        }
    }

    #[test]
    fn local_views() {
        let (_, g) = build_sliding_window(6, 3, false).unwrap();
        let view = local_subgraph(&g, 2).unwrap();
        assert_eq!(view.graph.vertex_count(), 3);
        assert_eq!(view.graph.regular_degree(), Some(3));
        for v in 0..3 {
            assert_eq!(view.graph.weight(v, v), 1);
        }

        let (_, g) = build_johnson(6, 2, 1).unwrap();
        let view = local_subgraph(&g, 4).unwrap();
        assert_eq!(view.graph.vertex_count(), 5);
        assert_eq!(view.graph.regular_degree(), Some(4));
        assert!(!view.graph.has_self_loops());

        let (_, g) = build_clique_slice(6).unwrap();
        let view = local_subgraph(&g, 1).unwrap();
        assert_eq!(view.graph.vertex_count(), 10);
        assert_eq!(view.graph.regular_degree(), Some(10));

        let dom = Arc::new(Domain::from_lists(3, vec![vec![1], vec![2]]).unwrap());
        let g = build_from_edges(dom, &[(0, 1, 1)]).unwrap();
        assert!(matches!(local_subgraph(&g, 3), Err(Error::EmptyLocalView(3))));
    }
}

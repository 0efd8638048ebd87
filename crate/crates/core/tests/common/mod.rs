//! Shared fixtures for integration tests: small graph builders and an
//! enumerator of all cubic graphs up to isomorphism.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dptlab::amplify::singleton_domain;
use dptlab::testgraph::build_from_edges;
use dptlab::TestGraph;

pub type Edges = Vec<(usize, usize)>;

pub fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> TestGraph {
    let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1)).collect();
    build_from_edges(singleton_domain(n).unwrap(), &weighted).unwrap()
}

pub fn cycle_edges(n: usize) -> Edges {
    (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect()
}

/// Multiplicity matrix; a loop adds 1 on the diagonal.
fn multiplicities(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u8>> {
    let mut m = vec![vec![0u8; n]; n];
    for &(u, v) in edges {
        m[u][v] += 1;
        if u != v {
            m[v][u] += 1;
        }
    }
    m
}

/// Neighbor lists with multiplicity; a loop lists its vertex twice.
fn neighbor_lists(m: &[Vec<u8>]) -> Vec<Vec<usize>> {
    (0..m.len())
        .map(|v| {
            (0..m.len())
                .flat_map(|u| std::iter::repeat_n(u, m[v][u] as usize * if u == v { 2 } else { 1 }))
                .collect()
        })
        .collect()
}

/// Splits cells by the sorted cells of each vertex's neighbors until stable.
/// The cell order depends only on the isomorphism class of the input.
fn refine(adj: &[Vec<usize>], mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut cell_of = vec![0usize; adj.len()];
    loop {
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                cell_of[v] = c;
            }
        }
        let mut next = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut keyed: Vec<(Vec<usize>, usize)> = cell
                .iter()
                .map(|&v| {
                    let mut key: Vec<usize> = adj[v].iter().map(|&u| cell_of[u]).collect();
                    key.sort_unstable();
                    (key, v)
                })
                .collect();
            keyed.sort_unstable();
            let mut start = 0;
            for i in 1..=keyed.len() {
                if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                    next.push(keyed[start..i].iter().map(|x| x.1).collect());
                    start = i;
                }
            }
        }
        if next.len() == cells.len() {
            return next;
        }
        cells = next;
    }
}

fn search(m: &[Vec<u8>], adj: &[Vec<usize>], cells: Vec<Vec<usize>>, best: &mut Option<Vec<u8>>) {
    let cells = refine(adj, cells);
    match cells.iter().position(|c| c.len() > 1) {
        None => {
            let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
            let form: Vec<u8> = order.iter().flat_map(|&v| order.iter().map(move |&u| m[v][u])).collect();
            if best.as_ref().is_none_or(|b| form < *b) {
                *best = Some(form);
            }
        }
        Some(idx) => {
            for &v in &cells[idx] {
                let mut split = cells[..idx].to_vec();
                split.push(vec![v]);
                split.push(cells[idx].iter().copied().filter(|&u| u != v).collect());
                split.extend(cells[idx + 1..].iter().cloned());
                search(m, adj, split, best);
            }
        }
    }
}

/// Canonical multiplicity matrix: equal iff the multigraphs are isomorphic.
pub fn canonical_form(n: usize, edges: &[(usize, usize)]) -> Vec<u8> {
    let m = multiplicities(n, edges);
    let mut best = None;
    search(&m, &neighbor_lists(&m), vec![(0..n).collect()], &mut best);
    best.unwrap()
}

fn edges_of_form(n: usize, form: &[u8]) -> Edges {
    let mut edges = Vec::new();
    for v in 0..n {
        for u in v..n {
            for _ in 0..form[v * n + u] {
                edges.push((v, u));
            }
        }
    }
    edges
}

/// Loops count 2, every extra parallel copy 1. One insertion removes at most 2.
fn defect(n: usize, form: &[u8]) -> usize {
    let mut total = 0;
    for v in 0..n {
        for u in v..n {
            let k = form[v * n + u] as usize;
            total += if u == v { 2 * k } else { k.saturating_sub(1) };
        }
    }
    total
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while label[r] != r {
            r = label[r];
        }
        label[x] = r;
        r
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut label, u), find(&mut label, v));
        label[a] = b;
    }
    let root = find(&mut label, 0);
    (0..n).all(|v| find(&mut label, v) == root)
}

fn union(a: (usize, &[(usize, usize)]), b: (usize, &[(usize, usize)])) -> (usize, Edges) {
    let mut edges = a.1.to_vec();
    edges.extend(b.1.iter().map(|&(u, v)| (u + a.0, v + a.0)));
    (a.0 + b.0, edges)
}

/// Subdivides edges `i` and `j` (possibly the same edge twice) and joins the
/// two new vertices.
fn insert(n: usize, edges: &[(usize, usize)], i: usize, j: usize) -> Edges {
    let (x, y) = (n, n + 1);
    let mut grown: Edges = edges
        .iter()
        .enumerate()
        .filter(|&(e, _)| e != i && e != j)
        .map(|(_, &e)| e)
        .collect();
    let (a, b) = edges[i];
    if i == j {
        grown.extend([(a, x), (x, y), (y, b), (x, y)]);
    } else {
        let (c, d) = edges[j];
        grown.extend([(a, x), (b, x), (c, y), (d, y), (x, y)]);
    }
    grown
}

/// Every cubic multigraph with at most `max_n` vertices arises from the
/// theta graph, the dumbbell and the star with three looped leaves by edge
/// insertions and disjoint unions. Intermediates with more defects than the
/// remaining insertions can remove are dropped.
fn cubic_levels(max_n: usize) -> Vec<(usize, Vec<Vec<u8>>)> {
    assert!(max_n % 2 == 0 && max_n <= 16);
    let theta = vec![(0, 1), (0, 1), (0, 1)];
    let dumbbell = vec![(0, 0), (1, 1), (0, 1)];
    let star = vec![(0, 1), (0, 2), (0, 3), (1, 1), (2, 2), (3, 3)];
    let bases2 = [theta, dumbbell];
    let mut levels: Vec<(usize, BTreeSet<Vec<u8>>)> = Vec::new();
    let mut n = 2;
    while n <= max_n {
        let budget = max_n - n;
        let mut level: BTreeSet<Vec<u8>> = BTreeSet::new();
        let add = |n: usize, edges: &[(usize, usize)], level: &mut BTreeSet<Vec<u8>>| {
            let m = multiplicities(n, edges);
            let flat: Vec<u8> = m.iter().flatten().copied().collect();
            // the defect is an isomorphism invariant, so check it before canonizing
            if defect(n, &flat) <= budget {
                let mut best = None;
                search(&m, &neighbor_lists(&m), vec![(0..n).collect()], &mut best);
                level.insert(best.unwrap());
            }
        };
        if n == 2 {
            for b in &bases2 {
                add(2, b, &mut level);
            }
        }
        if n == 4 {
            add(4, &star, &mut level);
        }
        if let Some((m, prev)) = levels.last() {
            for form in prev {
                let edges = edges_of_form(*m, form);
                for i in 0..edges.len() {
                    for j in i..edges.len() {
                        add(n, &insert(*m, &edges, i, j), &mut level);
                    }
                }
                for b in &bases2 {
                    let (k, es) = union((*m, &edges), (2, b));
                    add(k, &es, &mut level);
                }
            }
        }
        if n >= 6 {
            for form in &levels[levels.len() - 2].1 {
                let (k, es) = union((n - 4, &edges_of_form(n - 4, form)), (4, &star));
                add(k, &es, &mut level);
            }
        }
        levels.push((n, level));
        n += 2;
    }
    levels.into_iter().map(|(n, l)| (n, l.into_iter().collect())).collect()
}

/// Connected simple cubic graphs on at most `max_n` vertices, one per
/// isomorphism class.
pub fn connected_cubic_graphs(max_n: usize) -> Vec<(usize, Edges)> {
    let mut out = Vec::new();
    for (n, forms) in cubic_levels(max_n - max_n % 2) {
        for form in forms {
            let edges = edges_of_form(n, &form);
            if defect(n, &form) == 0 && is_connected(n, &edges) {
                out.push((n, edges));
            }
        }
    }
    out
}

/// All cubic graphs (connected or not) on at most `max_n` vertices, one per
/// isomorphism class, as disjoint unions of connected ones.
pub fn all_cubic_graphs(max_n: usize) -> Vec<(usize, Edges)> {
    disjoint_unions(&connected_cubic_graphs(max_n), max_n)
}

/// Every disjoint union of the given connected graphs (with repetition)
/// with at most `max_n` vertices.
pub fn disjoint_unions(connected: &[(usize, Edges)], max_n: usize) -> Vec<(usize, Edges)> {
    let mut out = Vec::new();
    // multisets of component indices in nondecreasing order
    fn extend(
        connected: &[(usize, Edges)],
        start: usize,
        size: usize,
        max_n: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<(usize, Edges)>,
    ) {
        if !chosen.is_empty() {
            let mut edges = Vec::new();
            let mut offset = 0;
            for &c in chosen.iter() {
                let (m, ref es) = connected[c];
                edges.extend(es.iter().map(|&(u, v)| (u + offset, v + offset)));
                offset += m;
            }
            out.push((size, edges));
        }
        for c in start..connected.len() {
            if size + connected[c].0 <= max_n {
                chosen.push(c);
                extend(connected, c, size + connected[c].0, max_n, chosen, out);
                chosen.pop();
            }
        }
    }
    extend(connected, 0, 0, max_n, &mut Vec::new(), &mut out);
    out
}

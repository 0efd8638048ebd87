//! Spectra of normalized adjacency matrices and expander-mixing bounds.
//!
//! For a regular graph the normalized adjacency is `W / d`; otherwise the
//! symmetric form `D^{-1/2} W D^{-1/2}` is used and the report is flagged
//! non-regular. Graphs up to [`DENSE_LIMIT`] vertices go through a dense
//! symmetric eigensolver, larger ones through Lanczos iteration with full
//! reorthogonalization, deflating the known top eigenvector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{ratio, ratio_u};
use crate::testgraph::TestGraph;

pub const DENSE_LIMIT: usize = 2000;
pub const MAX_ITERATIONS: usize = 100_000;
pub const TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub vertices: usize,
    /// Second-largest eigenvalue (signed).
    pub lambda2: f64,
    /// Smallest eigenvalue.
    pub lambda_min: f64,
    /// `max(|lambda2|, |lambda_min|)`.
    pub lambda_g: f64,
    pub method: Method,
    /// Largest `‖Ax − θx‖` over the reported eigenpairs.
    pub residual: f64,
    pub regular: bool,
    pub components: usize,
}

impl SpectralReport {
    fn new(
        vertices: usize,
        lambda2: f64,
        lambda_min: f64,
        method: Method,
        residual: f64,
        regular: bool,
        components: usize,
    ) -> Self {
        SpectralReport {
            vertices,
            lambda2,
            lambda_min,
            lambda_g: lambda2.abs().max(lambda_min.abs()),
            method,
            residual,
            regular,
            components,
        }
    }
}

/// Row scaling used to form the normalized adjacency.
struct Normalizer {
    regular: bool,
    /// `1/d` for regular graphs, `1/sqrt(d_v)` (or 0) otherwise.
    scale: Vec<f64>,
}

impl Normalizer {
    fn new(graph: &TestGraph) -> Self {
        match graph.regular_degree() {
            Some(d) if d > 0 => Normalizer {
                regular: true,
                scale: vec![1.0 / d as f64; graph.vertex_count()],
            },
            _ => Normalizer {
                regular: false,
                scale: graph
                    .degrees()
                    .iter()
                    .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
                    .collect(),
            },
        }
    }

    fn entry(&self, u: usize, v: usize, w: u32) -> f64 {
        if self.regular {
            w as f64 * self.scale[u]
        } else {
            w as f64 * self.scale[u] * self.scale[v]
        }
    }

    /// Unit top eigenvector (proportional to `sqrt(d)`).
    fn top_vector(&self, graph: &TestGraph) -> DVector<f64> {
        let mut v = DVector::from_iterator(
            graph.vertex_count(),
            graph.degrees().iter().map(|&d| (d as f64).sqrt()),
        );
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        v
    }
}

pub fn normalized_adjacency(graph: &TestGraph) -> DMatrix<f64> {
    let norm = Normalizer::new(graph);
    let n = graph.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for u in 0..n {
        for (v, w) in graph.neighbors(u) {
            m[(u, v)] = norm.entry(u, v, w);
        }
    }
    m
}

fn matvec(graph: &TestGraph, norm: &Normalizer, x: &DVector<f64>, out: &mut DVector<f64>) {
    for u in 0..graph.vertex_count() {
        out[u] = graph.neighbors(u).map(|(v, w)| norm.entry(u, v, w) * x[v]).sum();
    }
}

/// Spectral summary with automatic solver selection.
pub fn lambda_of(graph: &TestGraph) -> Result<SpectralReport> {
    lambda_with(graph, Solver::Auto)
}

pub fn lambda_with(graph: &TestGraph, solver: Solver) -> Result<SpectralReport> {
    let n = graph.vertex_count();
    if n == 0 {
        return Err(Error::InvalidGraph("graph has no vertices".into()));
    }
    let norm = Normalizer::new(graph);
    let components = graph.components().1;
    if n == 1 {
        let method = if solver == Solver::Iterative { Method::Iterative } else { Method::Dense };
        return Ok(SpectralReport::new(1, 0.0, 0.0, method, 0.0, norm.regular, 1));
    }
    let dense = match solver {
        Solver::Dense => true,
        Solver::Iterative => false,
        Solver::Auto => n <= DENSE_LIMIT,
    };
    let (lambda2, lambda_min, residual, method) = if dense {
        let (a, b, r) = dense_extremes(graph)?;
        (a, b, r, Method::Dense)
    } else {
        let (a, b, r) = lanczos_extremes(graph, &norm)?;
        (a, b, r, Method::Iterative)
    };
    Ok(SpectralReport::new(
        n, lambda2, lambda_min, method, residual, norm.regular, components,
    ))
}

/// All eigenvalues of the normalized adjacency, descending.
pub fn spectrum_dense(graph: &TestGraph) -> Vec<f64> {
    let eig = SymmetricEigen::new(normalized_adjacency(graph));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

fn dense_extremes(graph: &TestGraph) -> Result<(f64, f64, f64)> {
    let m = normalized_adjacency(graph);
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let second = order[1];
    let last = *order.last().expect("at least two eigenvalues");
    let residual = [second, last]
        .iter()
        .map(|&j| {
            let v = eig.eigenvectors.column(j);
            (&m * v - v * eig.eigenvalues[j]).norm()
        })
        .fold(0.0, f64::max);
    if !residual.is_finite() || residual > 1e-6 {
        return Err(Error::NumericFailure { residual });
    }
    Ok((eig.eigenvalues[second], eig.eigenvalues[last], residual))
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// Largest and smallest eigenvalues of the normalized adjacency restricted
/// to the complement of the top eigenvector.
fn lanczos_extremes(graph: &TestGraph, norm: &Normalizer) -> Result<(f64, f64, f64)> {
    let n = graph.vertex_count();
    let top = norm.top_vector(graph);
    // bounded Krylov memory: at most ~2e7 stored entries
    let max_basis = (n - 1).min((20_000_000 / n).max(30));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut start = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
    let mut matvecs = 0usize;
    let mut last_residual = f64::INFINITY;
    let mut scratch = DVector::zeros(n);

    while matvecs < MAX_ITERATIONS {
        orthogonalize(&mut start, std::slice::from_ref(&top));
        let s = start.norm();
        if s < 1e-300 {
            return Err(Error::NumericFailure { residual: last_residual });
        }
        let mut basis: Vec<DVector<f64>> = vec![start.clone() / s];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let j = basis.len() - 1;
            matvec(graph, norm, &basis[j], &mut scratch);
            matvecs += 1;
            let mut w = scratch.clone();
            let a = basis[j].dot(&w);
            alpha.push(a);
            orthogonalize(&mut w, std::slice::from_ref(&top));
            orthogonalize(&mut w, &basis);
            let b = w.norm();
            let m = alpha.len();
            let check = m == max_basis || b < 1e-12 || m % 10 == 0 || matvecs >= MAX_ITERATIONS;
            if check {
                let t = tridiagonal(&alpha, &beta);
                let eig = SymmetricEigen::new(t);
                let (hi, lo) = extreme_indices(&eig.eigenvalues);
                let res_hi = (b * eig.eigenvectors[(m - 1, hi)]).abs();
                let res_lo = (b * eig.eigenvectors[(m - 1, lo)]).abs();
                let theta_hi = eig.eigenvalues[hi];
                let theta_lo = eig.eigenvalues[lo];
                last_residual = res_hi.max(res_lo);
                let converged = b < 1e-12
                    || (res_hi <= TOLERANCE * theta_hi.abs().max(1.0)
                        && res_lo <= TOLERANCE * theta_lo.abs().max(1.0));
                if converged {
                    let x_hi = ritz_vector(&basis, &eig.eigenvectors, hi);
                    let x_lo = ritz_vector(&basis, &eig.eigenvectors, lo);
                    let r = true_residual(graph, norm, &x_hi, theta_hi)
                        .max(true_residual(graph, norm, &x_lo, theta_lo));
                    return Ok((theta_hi, theta_lo, r));
                }
                if m == max_basis || matvecs >= MAX_ITERATIONS {
                    // restart from the two wanted Ritz directions
                    start = ritz_vector(&basis, &eig.eigenvectors, hi)
                        + ritz_vector(&basis, &eig.eigenvectors, lo);
                    break;
                }
            }
            beta.push(b);
            basis.push(w / b);
        }
    }
    Err(Error::NumericFailure { residual: last_residual })
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

fn extreme_indices(vals: &DVector<f64>) -> (usize, usize) {
    let mut hi = 0;
    let mut lo = 0;
    for i in 0..vals.len() {
        if vals[i] > vals[hi] {
            hi = i;
        }
        if vals[i] < vals[lo] {
            lo = i;
        }
    }
    (hi, lo)
}

fn ritz_vector(basis: &[DVector<f64>], coeffs: &DMatrix<f64>, col: usize) -> DVector<f64> {
    let mut x = DVector::zeros(basis[0].len());
    for (i, q) in basis.iter().enumerate() {
        x.axpy(coeffs[(i, col)], q, 1.0);
    }
    let nrm = x.norm();
    if nrm > 0.0 {
        x /= nrm;
    }
    x
}

fn true_residual(graph: &TestGraph, norm: &Normalizer, x: &DVector<f64>, theta: f64) -> f64 {
    let mut y = DVector::zeros(x.len());
    matvec(graph, norm, x, &mut y);
    (y - x * theta).norm()
}

/// Closed form `t/k − (k−t)/(n−k)` for the nontrivial eigenvalue of largest
/// magnitude of J(n,k,t) (it is the smallest eigenvalue), valid when
/// `(k−t)(n−1) ≥ k(n−k)`.
pub fn johnson_lambda2_closed_form(n: u32, k: u32, t: u32) -> Result<BigRational> {
    if !(t < k && k < n) {
        return Err(invalid(format!("need 0 <= t < k < n, got n={n} k={k} t={t}")));
    }
    let (n, k, t) = (n as i64, k as i64, t as i64);
    if (k - t) * (n - 1) < k * (n - k) {
        return Err(Error::FormulaNotApplicable(format!(
            "(k-t)(n-1) = {} < k(n-k) = {}",
            (k - t) * (n - 1),
            k * (n - k)
        )));
    }
    Ok(ratio(t, k) - ratio(k - t, n - k))
}

/// Upper bound on `Pr[v ∈ T | u ∼ μ on S]` for a regular graph, where μ
/// has max/min ratio at most `c_ratio`: `|T|/|V| + λ_G·sqrt(c|T|/|S|)`.
pub fn mixing_bound(graph: &TestGraph, s_size: usize, t_size: usize, c_ratio: f64) -> Result<f64> {
    let report = lambda_of(graph)?;
    mixing_bound_with(graph, &report, s_size, t_size, c_ratio)
}

/// [`mixing_bound`] with a precomputed spectral report.
pub fn mixing_bound_with(
    graph: &TestGraph,
    report: &SpectralReport,
    s_size: usize,
    t_size: usize,
    c_ratio: f64,
) -> Result<f64> {
    if graph.regular_degree().is_none() {
        return Err(Error::Unsupported("mixing bound needs a regular graph".into()));
    }
    let v = graph.vertex_count();
    if s_size == 0 || 2 * s_size > v {
        return Err(invalid(format!("need 0 < |S| <= |V|/2, got |S|={s_size}, |V|={v}")));
    }
    if t_size > v {
        return Err(invalid(format!("|T|={t_size} exceeds |V|={v}")));
    }
    if !(c_ratio >= 1.0) {
        return Err(invalid(format!("ratio bound c must be >= 1, got {c_ratio}")));
    }
    Ok(t_size as f64 / v as f64
        + report.lambda_g * (c_ratio * t_size as f64 / s_size as f64).sqrt())
}

/// Exact `Pr[v ∈ T]` where `u` is drawn from `S` (uniformly, or proportional
/// to `mu`) and `v` is a weight-proportional neighbor of `u`.
pub fn conditional_edge_probability(
    graph: &TestGraph,
    s: &[usize],
    t: &[usize],
    mu: Option<&[u64]>,
) -> Result<BigRational> {
    if s.is_empty() {
        return Err(invalid("empty source set"));
    }
    let n = graph.vertex_count();
    if s.iter().chain(t).any(|&x| x >= n) {
        return Err(invalid("vertex index out of range"));
    }
    if let Some(mu) = mu {
        if mu.len() != s.len() || mu.iter().any(|&m| m == 0) {
            return Err(invalid("mu must give a positive weight per source vertex"));
        }
    }
    let mut in_t = vec![false; n];
    for &x in t {
        in_t[x] = true;
    }
    let total_mu: u64 = mu.map_or(s.len() as u64, |m| m.iter().sum());
    let mut acc = BigRational::zero();
    for (idx, &u) in s.iter().enumerate() {
        let deg = graph.degree(u);
        if deg == 0 {
            return Err(Error::InvalidGraph(format!("vertex {u} has degree zero")));
        }
        let hit: u64 = graph
            .neighbors(u)
            .filter(|&(v, _)| in_t[v])
            .map(|(_, w)| w as u64)
            .sum();
        let weight = mu.map_or(1, |m| m[idx]);
        acc += BigRational::new(BigInt::from(weight) * BigInt::from(hit), BigInt::from(deg));
    }
    Ok(acc / ratio_u(total_mu as usize, 1))
}

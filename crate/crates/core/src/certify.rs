//! Coordinate-expansion certificates and the soundness constants they imply.
//!
//! A regular test graph is a (λ, ρ)-coordinate expander when
//! 1. λ(G) < λ and λ(G_i) < λ for every coordinate i,
//! 2. every S ∈ V_i keeps i in a random neighbor with probability ≥ ρ,
//! 3. for every S and T ⊆ S with |T| ≥ ⌈2/ρ⌉, a random neighbor S' has
//!    |S' ∩ T| ≤ ρ|T|/2 with probability ≤ λ.
//!
//! Conditions 2 and 3 are evaluated in exact rational arithmetic.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact::{int, ratio, serde_rational, to_f64, Rational, Surd};
use crate::spectral::{lambda_of, SpectralReport};
use crate::testgraph::{local_subgraph, TestGraph};

/// Largest set size for which condition 3 enumerates every subset.
pub const EXHAUSTIVE_MAX_K: usize = 16;

/// Default interpolation parameter of the soundness analysis.
pub fn default_c() -> Rational {
    ratio(3, 40)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Exhaustive,
    Sampled { per_size: usize, seed: u64 },
}

/// A nonnegative fraction with small integer parts, compared exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frac {
    num: u128,
    den: u128,
}

impl Frac {
    fn cmp(&self, other: &Frac) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn to_rational(self) -> Rational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalLambda {
    pub coord: u32,
    pub lambda: f64,
    pub connected: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlobalCondition {
    pub lambda_g: f64,
    pub worst_local: f64,
    pub worst_local_coord: Option<u32>,
    pub local: Vec<LocalLambda>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RetentionCondition {
    #[serde(with = "serde_rational")]
    pub min_retention: Rational,
    /// `(coordinate, set index)` attaining the minimum.
    pub witness: Option<(u32, usize)>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyLabel {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplingWitness {
    pub set: usize,
    pub subset: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplingCondition {
    #[serde(with = "serde_rational")]
    pub worst_tail: Rational,
    pub witness: Option<SamplingWitness>,
    pub strategy: StrategyLabel,
    /// Number of (S, T) pairs evaluated.
    pub checked: u64,
    /// Smallest eligible |T|, if any T is eligible at all.
    pub min_subset_size: Option<usize>,
    /// Sampled results only exhibit a lower bound on the true worst tail.
    pub witness_only: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SoundnessReport {
    #[serde(with = "serde_rational")]
    pub c: Rational,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub k: f64,
    /// Exact: all three expressions (hence K) are strictly positive.
    pub certifies: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "serde_rational")]
    pub lambda_target: Rational,
    #[serde(with = "serde_rational")]
    pub rho_target: Rational,
    pub cond1: GlobalCondition,
    pub cond2: RetentionCondition,
    pub cond3: SamplingCondition,
    pub overall: bool,
    pub soundness: SoundnessReport,
}

fn require_regular(graph: &TestGraph) -> Result<u64> {
    match graph.regular_degree() {
        Some(d) if d > 0 => Ok(d),
        _ => Err(Error::Unsupported(
            "certification needs a regular graph with positive degree".into(),
        )),
    }
}

fn local_lambda(report: &SpectralReport) -> f64 {
    if report.components > 1 {
        1.0
    } else {
        report.lambda_g
    }
}

/// Condition 1: global and local spectral expansion, strictly below `lambda`.
pub fn check_condition_global(graph: &TestGraph, lambda: &Rational) -> Result<GlobalCondition> {
    require_regular(graph)?;
    let threshold = to_f64(lambda);
    let lambda_g = local_lambda(&lambda_of(graph)?);
    let dom = graph.domain();
    let mut local = Vec::new();
    for coord in 1..=dom.n() {
        if dom.containing(coord).is_empty() {
            continue;
        }
        let view = local_subgraph(graph, coord)?;
        let report = lambda_of(&view.graph)?;
        local.push(LocalLambda {
            coord,
            lambda: local_lambda(&report),
            connected: report.components <= 1,
        });
    }
    let worst = local
        .iter()
        .max_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let worst_local = worst.map_or(0.0, |w| w.lambda);
    let pass = lambda_g < threshold && local.iter().all(|l| l.lambda < threshold);
    Ok(GlobalCondition {
        lambda_g,
        worst_local,
        worst_local_coord: worst.map(|w| w.coord),
        local,
        pass,
    })
}

/// For every set, the weight of its neighbors containing each of its
/// coordinates (indexed by position in the set). Self loops count.
fn retained_weights(graph: &TestGraph, s: usize) -> Vec<u64> {
    let dom = graph.domain();
    let set = dom.set(s);
    let mut acc = vec![0u64; set.len()];
    for (t, w) in graph.neighbors(s) {
        let other = dom.set(t);
        for (p, &c) in set.coords().iter().enumerate() {
            if other.contains(c) {
                acc[p] += w as u64;
            }
        }
    }
    acc
}

fn min_retention(graph: &TestGraph) -> Option<(Frac, u32, usize)> {
    let dom = graph.domain();
    let mut best: Option<(Frac, u32, usize)> = None;
    for s in 0..graph.vertex_count() {
        let deg = graph.degree(s) as u128;
        for (p, w) in retained_weights(graph, s).into_iter().enumerate() {
            let f = Frac { num: w as u128, den: deg };
            if best.as_ref().is_none_or(|b| f.cmp(&b.0) == Ordering::Less) {
                best = Some((f, dom.set(s).coords()[p], s));
            }
        }
    }
    best
}

/// Condition 2: exact minimum retention probability.
pub fn check_condition_retention(graph: &TestGraph, rho: &Rational) -> Result<RetentionCondition> {
    require_regular(graph)?;
    Ok(match min_retention(graph) {
        Some((f, coord, set)) => {
            let r = f.to_rational();
            RetentionCondition {
                pass: &r >= rho,
                min_retention: r,
                witness: Some((coord, set)),
            }
        }
        // no coordinate is covered: the condition quantifies over nothing
        None => RetentionCondition {
            min_retention: Rational::one(),
            witness: None,
            pass: true,
        },
    })
}

/// Smallest eligible |T| = ⌈2/ρ⌉, or `None` when ρ ≤ 0.
fn min_subset_size(rho: &Rational) -> Option<usize> {
    if !rho.is_positive() {
        return None;
    }
    (int(2) / rho).ceil().to_integer().to_usize()
}

/// Largest intersection size counted in the tail: ⌊ρ|T|/2⌋.
fn tail_cutoff(rho: &Rational, size: usize) -> i64 {
    let v = rho * int(size as i64) / int(2);
    v.numer().div_floor(v.denom()).to_i64().unwrap_or(i64::MAX)
}

/// Per-set data for condition 3: intersection patterns of neighbors in
/// local bit positions, with their accumulated weights.
struct Patterns {
    words: usize,
    masks: Vec<Vec<u64>>,
    weights: Vec<u64>,
}

fn patterns(graph: &TestGraph, s: usize) -> Patterns {
    let dom = graph.domain();
    let set = dom.set(s);
    let words = set.len().div_ceil(64).max(1);
    let mut map: std::collections::HashMap<Vec<u64>, u64> = std::collections::HashMap::new();
    for (t, w) in graph.neighbors(s) {
        let other = dom.set(t);
        let mut mask = vec![0u64; words];
        for (p, &c) in set.coords().iter().enumerate() {
            if other.contains(c) {
                mask[p / 64] |= 1 << (p % 64);
            }
        }
        *map.entry(mask).or_insert(0) += w as u64;
    }
    let mut entries: Vec<_> = map.into_iter().collect();
    entries.sort();
    let (masks, weights) = entries.into_iter().unzip();
    Patterns { words, masks, weights }
}

impl Patterns {
    fn tail_weight(&self, subset: &[u64], cutoff: i64) -> u64 {
        self.masks
            .iter()
            .zip(&self.weights)
            .filter(|(m, _)| {
                let hits: u32 = m.iter().zip(subset).map(|(a, b)| (a & b).count_ones()).sum();
                (hits as i64) <= cutoff
            })
            .map(|(_, &w)| w)
            .sum()
    }
}

/// Condition 3: worst tail probability over subsets of each set.
pub fn check_condition_sampling(
    graph: &TestGraph,
    rho: &Rational,
    lambda: &Rational,
    strategy: Strategy,
) -> Result<SamplingCondition> {
    require_regular(graph)?;
    let dom = graph.domain();
    let label = match strategy {
        Strategy::Exhaustive => StrategyLabel::Exhaustive,
        Strategy::Sampled { per_size, .. } => {
            if per_size == 0 {
                return Err(invalid("sampled strategy needs at least one sample"));
            }
            StrategyLabel::Sampled
        }
    };
    let min_size = min_subset_size(rho);
    if matches!(strategy, Strategy::Exhaustive) {
        if let Some(m) = min_size {
            if let Some(big) = dom.sets().iter().find(|s| s.len() > EXHAUSTIVE_MAX_K && s.len() >= m) {
                return Err(Error::UnsupportedSize(format!(
                    "exhaustive subset enumeration needs |S| <= {EXHAUSTIVE_MAX_K}, found {}",
                    big.len()
                )));
            }
        }
    }
    let mut worst: Option<(Frac, usize, Vec<u64>)> = None;
    let mut checked = 0u64;
    if let Some(m) = min_size {
        for s in 0..graph.vertex_count() {
            let k = dom.set(s).len();
            if k < m {
                continue;
            }
            let pats = patterns(graph, s);
            let deg = graph.degree(s) as u128;
            let consider = |subset: &[u64], size: usize, worst: &mut Option<(Frac, usize, Vec<u64>)>| {
                let f = Frac { num: pats.tail_weight(subset, tail_cutoff(rho, size)) as u128, den: deg };
                if worst.as_ref().is_none_or(|w| f.cmp(&w.0) == Ordering::Greater) {
                    *worst = Some((f, s, subset.to_vec()));
                }
            };
            match strategy {
                Strategy::Exhaustive => {
                    for bits in 0u64..(1u64 << k) {
                        let size = bits.count_ones() as usize;
                        if size < m {
                            continue;
                        }
                        consider(&[bits], size, &mut worst);
                        checked += 1;
                    }
                }
                Strategy::Sampled { per_size, seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(s as u64);
                    for size in m..=k {
                        for _ in 0..per_size {
                            let mut subset = vec![0u64; pats.words];
                            for p in index::sample(&mut rng, k, size) {
                                subset[p / 64] |= 1 << (p % 64);
                            }
                            consider(&subset, size, &mut worst);
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    let (worst_tail, witness) = match worst {
        Some((f, s, subset)) => {
            let coords = dom.set(s).coords();
            let members = (0..coords.len())
                .filter(|&p| subset[p / 64] >> (p % 64) & 1 == 1)
                .map(|p| coords[p])
                .collect();
            (f.to_rational(), Some(SamplingWitness { set: s, subset: members }))
        }
        None => (Rational::zero(), None),
    };
    Ok(SamplingCondition {
        pass: &worst_tail <= lambda,
        worst_tail,
        witness,
        strategy: label,
        checked,
        min_subset_size: min_size,
        witness_only: label == StrategyLabel::Sampled,
    })
}

/// The three soundness expressions and `K = min(c·e1, e2/2, (1−2c)·e3)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoundnessConstants {
    pub e1: Surd,
    pub e2: Surd,
    pub e3: Surd,
    pub k: Surd,
}

impl SoundnessConstants {
    /// All three expressions strictly positive (equivalently K > 0).
    pub fn certifies(&self) -> bool {
        self.k.signum() > 0
    }

    /// Whether `distance ≤ epsilon / K`, decided exactly; `None` when K ≤ 0.
    pub fn bound_holds(&self, distance: &Rational, epsilon: &Rational) -> Option<bool> {
        if !self.certifies() {
            return None;
        }
        let lhs = self.k.scale(distance);
        Some(lhs.cmp_exact(&Surd::from_rational(epsilon.clone())) != Ordering::Greater)
    }

    pub fn report(&self, c: &Rational) -> SoundnessReport {
        SoundnessReport {
            c: c.clone(),
            e1: self.e1.to_f64(),
            e2: self.e2.to_f64(),
            e3: self.e3.to_f64(),
            k: self.k.to_f64(),
            certifies: self.certifies(),
        }
    }
}

pub fn soundness_constant(lambda: &Rational, rho: &Rational, c: &Rational) -> Result<SoundnessConstants> {
    let zero = Rational::zero();
    let one = Rational::one();
    let half = ratio(1, 2);
    if !(c > &zero && c < &half) {
        return Err(invalid(format!("c must lie in (0, 1/2), got {c}")));
    }
    if lambda < &zero || lambda > &one || rho < &zero || rho > &one {
        return Err(invalid("lambda and rho must lie in [0, 1]"));
    }
    let two = int(2);
    let e1 = Surd::new(&half - lambda, -lambda.clone(), one.clone() / (&two * c));
    let e2 = Surd::new(c - lambda, -lambda.clone(), &two - &two * c);
    let e3 = Surd::new(
        rho / &two - &two * lambda - &two * c,
        -lambda.clone(),
        (&two * c) / (&one - &two * c),
    );
    let k1 = e1.scale(c);
    let k2 = e2.scale(&half);
    let k3 = e3.scale(&(&one - &two * c));
    let k = k1.min_exact(&k2).min_exact(&k3).clone();
    Ok(SoundnessConstants { e1, e2, e3, k })
}

/// Runs all three conditions and assembles the certificate.
pub fn certify_coordinate_expansion(
    graph: &TestGraph,
    lambda: &Rational,
    rho: &Rational,
    strategy: Strategy,
    c: &Rational,
) -> Result<Certificate> {
    let soundness = soundness_constant(lambda, rho, c)?.report(c);
    let cond1 = check_condition_global(graph, lambda)?;
    let cond2 = check_condition_retention(graph, rho)?;
    let cond3 = check_condition_sampling(graph, rho, lambda, strategy)?;
    Ok(Certificate {
        lambda_target: lambda.clone(),
        rho_target: rho.clone(),
        overall: cond1.pass && cond2.pass && cond3.pass,
        cond1,
        cond2,
        cond3,
        soundness,
    })
}

/// If every induced local graph G_i is a clique (unit weights, self loops
/// optional) on a regular graph, the minimum retention probability; this is
/// the constant of the clique-local soundness bound `dist ≤ 2ε/c`.
pub fn local_clique_retention(graph: &TestGraph) -> Option<Rational> {
    graph.regular_degree().filter(|&d| d > 0)?;
    if (0..graph.vertex_count()).any(|s| graph.neighbors(s).any(|(_, w)| w != 1)) {
        return None;
    }
    let dom = graph.domain();
    for s in 0..graph.vertex_count() {
        let loop_w = graph.weight(s, s) as u64;
        for (p, w) in retained_weights(graph, s).into_iter().enumerate() {
            let coord = dom.set(s).coords()[p];
            if w - loop_w != dom.containing(coord).len() as u64 - 1 {
                return None;
            }
        }
    }
    min_retention(graph).map(|(f, _, _)| f.to_rational())
}

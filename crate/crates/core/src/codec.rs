//! Majority decoding and conflict statistics of a table against its decoding.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact::{int, ratio, ratio_u, serde_rational, Rational};
use crate::model::{dp_encode, Assignment, DPTable};

/// Per-coordinate majority vote; ties and uncovered coordinates give 0.
pub fn majority_decode(f: &DPTable) -> (Assignment, DPTable) {
    let dom = f.domain();
    let mut ones = vec![0usize; dom.n() as usize];
    let mut total = vec![0usize; dom.n() as usize];
    for (set, value) in dom.sets().iter().zip(f.values()) {
        for (&c, &b) in set.coords().iter().zip(value.bits()) {
            total[(c - 1) as usize] += 1;
            if b {
                ones[(c - 1) as usize] += 1;
            }
        }
    }
    let bits = ones.iter().zip(&total).map(|(&o, &t)| 2 * o > t).collect();
    let a = Assignment::new(bits);
    let decoded = dp_encode(&a, dom).expect("decoded assignment matches the ground set");
    (a, decoded)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "1A")]
    OneA,
    #[serde(rename = "1B")]
    OneB,
    #[serde(rename = "2")]
    Two,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateConflict {
    pub coord: u32,
    #[serde(with = "serde_rational")]
    pub beta: Rational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConflictProfile {
    pub decoded: Vec<u8>,
    /// Indices of sets where F differs from d(F).
    pub b: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub beta: Rational,
    /// Conflict counts of the sets in `b`, ascending.
    pub conflict_counts: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub c: Rational,
    pub m_c: Option<usize>,
    pub m_half: Option<usize>,
    pub m_one_minus_c: Option<usize>,
    /// Only present when ρ was supplied and B is nonempty.
    pub case: Option<Case>,
    pub beta_i: Vec<CoordinateConflict>,
}

impl ConflictProfile {
    /// Conflict count of the ⌈p|B|⌉-th smallest element of B (1-based,
    /// clamped to the first element when p|B| < 1).
    pub fn m_of(&self, p: &Rational) -> Option<usize> {
        order_statistic(&self.conflict_counts, p)
    }
}

fn order_statistic(sorted: &[usize], p: &Rational) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let pos = (p * ratio_u(sorted.len(), 1)).ceil().to_integer();
    let pos: usize = pos.try_into().unwrap_or(0);
    Some(sorted[pos.clamp(1, sorted.len()) - 1])
}

fn classify(m_c: usize, m_half: usize, m_hi: usize, rho: &Rational) -> Case {
    // m_{1-c} > (2/ρ) m_{1/2}  ⇔  ρ·m_{1-c} > 2·m_{1/2}
    let exceeds = |big: usize, small: usize| rho * int(big as i64) > int(2 * small as i64);
    if exceeds(m_hi, m_half) {
        Case::OneA
    } else if exceeds(m_half, m_c) {
        Case::OneB
    } else {
        Case::Two
    }
}

/// Conflict profile of `f` against its majority decoding, with the case
/// split of the soundness analysis when `rho` is given.
pub fn conflict_profile(f: &DPTable, c: &Rational, rho: Option<&Rational>) -> Result<ConflictProfile> {
    if !(c.is_positive() && c < &ratio(1, 2)) {
        return Err(invalid(format!("c must lie in (0, 1/2), got {c}")));
    }
    let dom = f.domain();
    if dom.is_empty() {
        return Err(invalid("empty domain"));
    }
    let (a, _) = majority_decode(f);
    let mut b = Vec::new();
    let mut counts = Vec::new();
    let mut wrong = vec![0usize; dom.n() as usize];
    for (idx, (set, value)) in dom.sets().iter().zip(f.values()).enumerate() {
        let mut conflicts = 0;
        for (&coord, &bit) in set.coords().iter().zip(value.bits()) {
            if bit != a.get(coord) {
                conflicts += 1;
                wrong[(coord - 1) as usize] += 1;
            }
        }
        if conflicts > 0 {
            b.push(idx);
            counts.push(conflicts);
        }
    }
    counts.sort_unstable();
    let half = ratio(1, 2);
    let one_minus_c = ratio(1, 1) - c;
    let m_c = order_statistic(&counts, c);
    let m_half = order_statistic(&counts, &half);
    let m_hi = order_statistic(&counts, &one_minus_c);
    let case = match (rho, m_c, m_half, m_hi) {
        (Some(r), Some(lo), Some(mid), Some(hi)) => Some(classify(lo, mid, hi, r)),
        _ => None,
    };
    let beta_i = (1..=dom.n())
        .filter(|&i| !dom.containing(i).is_empty())
        .map(|i| CoordinateConflict {
            coord: i,
            beta: ratio_u(wrong[(i - 1) as usize], dom.containing(i).len()),
        })
        .collect();
    Ok(ConflictProfile {
        decoded: a.bits().iter().map(|&x| x as u8).collect(),
        beta: ratio_u(b.len(), dom.len()),
        b,
        conflict_counts: counts,
        c: c.clone(),
        m_c,
        m_half,
        m_one_minus_c: m_hi,
        case,
        beta_i,
    })
}

/// Δ(F, d(F)), the quantity every soundness bound controls.
pub fn decoding_distance(f: &DPTable) -> Result<Rational> {
    if f.domain().is_empty() {
        return Err(invalid("empty domain"));
    }
    let (_, d) = majority_decode(f);
    crate::model::dp_distance(f, &d)
}

impl ConflictProfile {
    pub fn is_codeword(&self) -> bool {
        self.beta.is_zero()
    }
}

//! Comparison tests for nonnegative series known up to a finite horizon.
//!
//! Terms are passed as natural logarithms (`-inf` for exact zeros) so that
//! factorially small terms keep their information. A convergence
//! certificate fits one of three comparison series on the last half of the
//! horizon (geometric, `n^{-s}`, `1/(n log^L n)`) and bounds the remainder
//! beyond the horizon by the comparison's tail, assuming the fitted decay
//! persists. Divergence witnesses compare against `1/(n log n)`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// Pass only if both pass; fail if either fails.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Inconclusive,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// Every term past the midpoint is exactly zero.
    Vanishing,
    Geometric { ratio: f64 },
    Power { exponent: f64 },
    LogPower { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemainderBound {
    pub comparison: Comparison,
    /// Bound on `Σ_{n > horizon} t_n`.
    pub bound: f64,
}

const EXPONENT_MARGIN: f64 = 1e-6;
const FLAT_TOLERANCE: f64 = 1e-9;

fn last_half(len: usize) -> std::ops::Range<usize> {
    let mid = len / 2;
    mid..len
}

/// Remainder bound for `Σ_{n > last} t_n` where `log_terms[i] = ln t_{first_index + i}`.
pub fn remainder_bound(log_terms: &[f64], first_index: i64) -> Option<RemainderBound> {
    if log_terms.len() < 4 {
        return None;
    }
    let half = last_half(log_terms.len());
    let last = first_index + log_terms.len() as i64 - 1;
    let tail = &log_terms[half.clone()];
    if tail.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Some(RemainderBound { comparison: Comparison::Vanishing, bound: 0.0 });
    }
    if tail.iter().any(|l| !l.is_finite()) {
        return None;
    }
    let mut candidates = Vec::new();
    let base = half.start;
    let q4 = tail.len() / 2;

    // each fit must be at least as favourable on the last quarter as on the one before
    let ratios: Vec<f64> = tail.windows(2).map(|w| (w[1] - w[0]).exp()).collect();
    let r3 = ratios[..q4].iter().copied().fold(0.0f64, f64::max);
    let ratio = ratios[q4..].iter().copied().fold(0.0f64, f64::max);
    if ratio < 1.0 - 1e-12 && ratio <= r3 + FLAT_TOLERANCE {
        let bound = tail[tail.len() - 1].exp() * ratio / (1.0 - ratio);
        candidates.push(RemainderBound { comparison: Comparison::Geometric { ratio }, bound });
    }

    let index = |i: usize| (first_index + (base + i) as i64) as f64;
    let stable_min = |f: &dyn Fn(usize) -> Option<f64>| -> Option<f64> {
        let q3 = (0..q4).filter_map(f).fold(f64::INFINITY, f64::min);
        let q4v = (q4..tail.len()).filter_map(f).fold(f64::INFINITY, f64::min);
        (q4v.is_finite() && q3.is_finite() && q4v >= q3 - FLAT_TOLERANCE).then_some(q4v)
    };

    let power = stable_min(&|i| {
        let n = index(i);
        (n >= 2.0).then(|| -tail[i] / n.ln())
    });
    if let Some(power) = power.filter(|s| *s > 1.0 + EXPONENT_MARGIN) {
        let b = last as f64;
        let bound = b.powf(1.0 - power) / (power - 1.0);
        candidates.push(RemainderBound { comparison: Comparison::Power { exponent: power }, bound });
    }

    let log_power = stable_min(&|i| {
        let n = index(i);
        (n >= 3.0).then(|| (-tail[i] - n.ln()) / n.ln().ln())
    });
    if let Some(log_power) = log_power.filter(|l| *l > 1.0 + EXPONENT_MARGIN) {
        let lb = (last as f64).ln();
        let bound = lb.powf(1.0 - log_power) / (log_power - 1.0);
        candidates.push(RemainderBound { comparison: Comparison::LogPower { exponent: log_power }, bound });
    }

    candidates.into_iter().min_by(|a, b| a.bound.total_cmp(&b.bound))
}

/// A witness that the terms dominate `c/(n log n)` with a non-decreasing
/// ratio over the last half of the horizon.
pub fn divergence_witness(log_terms: &[f64], first_index: i64) -> Option<String> {
    let len = log_terms.len();
    if len < 8 {
        return None;
    }
    let q3 = len / 2;
    let q4 = (3 * len) / 4;
    let scaled = |i: usize| {
        let n = (first_index + i as i64).max(3) as f64;
        log_terms[i] + n.ln() + n.ln().ln()
    };
    let min_q3 = (q3..q4).map(scaled).fold(f64::INFINITY, f64::min);
    let min_q4 = (q4..len).map(scaled).fold(f64::INFINITY, f64::min);
    if min_q4.is_finite() && min_q3.is_finite() && min_q4 >= min_q3 - FLAT_TOLERANCE {
        let last = first_index + len as i64 - 1;
        Some(format!(
            "t_n >= {:.6e} / (n log n) on [{}, {}] with non-decreasing ratio (divergent comparison)",
            min_q4.exp(),
            first_index + q3 as i64,
            last
        ))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesAssessment {
    pub verdict: Verdict,
    pub partial_sum: f64,
    pub remainder: Option<RemainderBound>,
    pub witness: Option<String>,
}

/// Combined verdict: pass if a convergent comparison holds and the
/// remainder is below `tol`, fail on a divergence witness.
pub fn assess(log_terms: &[f64], first_index: i64, tol: f64) -> SeriesAssessment {
    let partial_sum = log_terms.iter().map(|l| l.exp()).sum();
    let remainder = remainder_bound(log_terms, first_index);
    let (verdict, witness) = match remainder {
        Some(r) if r.bound < tol => (Verdict::Pass, None),
        Some(_) => (Verdict::Inconclusive, None),
        None => match divergence_witness(log_terms, first_index) {
            Some(w) => (Verdict::Fail, Some(w)),
            None => (Verdict::Inconclusive, None),
        },
    };
    SeriesAssessment { verdict, partial_sum, remainder, witness }
}

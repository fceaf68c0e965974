//! Offline stable-state oracle and the evaluation metrics built on it.

use crate::distance::distance;
use crate::domain::RankResult;
use crate::error::{Error, Result};

/// Earliest 1-based checkpoint `l` such that every pair of rankings at or
/// after `l` lies within `theta` of each other.
///
/// The qualifying checkpoints form a suffix, so the scan walks backwards
/// and stops at the first checkpoint that breaks the condition.
pub fn stable_state(rankings: &[RankResult], theta: f64) -> Result<usize> {
    let last = rankings.len();
    if last == 0 {
        return Err(Error::EmptyHistory("no rankings to scan".into()));
    }
    let mut l = last;
    'scan: while l > 1 {
        let cand = &rankings[l - 2];
        for later in &rankings[l - 1..] {
            if distance(cand, later)?.value() > theta {
                break 'scan;
            }
        }
        l -= 1;
    }
    Ok(l)
}

/// Stable state from a distance-to-final curve alone, `curve[c - 1]` being
/// the distance between checkpoint `c` and the final ranking: the earliest
/// `l` with `curve[c - 1] <= theta` for every `c >= l`.
pub fn stable_state_from_curve(curve: &[f64], theta: f64) -> Result<usize> {
    if curve.is_empty() {
        return Err(Error::EmptyHistory("no checkpoints in the curve".into()));
    }
    let bad = curve.iter().rposition(|&d| d > theta);
    Ok(bad.map_or(1, |idx| idx + 2).min(curve.len()))
}

/// Fraction of the budget left unspent when stopping at `p_optimal`.
pub fn savings(p_optimal: usize, total_batches: usize) -> f64 {
    1.0 - p_optimal as f64 / total_batches as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `|p_optimal - p_sc|` over the number of batches.
    pub delta_sc: f64,
    pub used_budget: f64,
    /// Distance between the ranking at `p_sc` and the final one.
    pub actual_error: f64,
}

pub fn evaluate(
    p_sc: usize,
    p_optimal: usize,
    at_stop: &RankResult,
    last: &RankResult,
    total_batches: usize,
) -> Result<Evaluation> {
    for (name, p) in [("p_sc", p_sc), ("p_optimal", p_optimal)] {
        if p == 0 || p > total_batches {
            return Err(Error::Config(format!(
                "{name} = {p} outside checkpoints 1..={total_batches}"
            )));
        }
    }
    let f = total_batches as f64;
    Ok(Evaluation {
        delta_sc: p_optimal.abs_diff(p_sc) as f64 / f,
        used_budget: p_sc as f64 / f,
        actual_error: distance(at_stop, last)?.value(),
    })
}

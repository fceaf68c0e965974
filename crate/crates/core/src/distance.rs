//! Normalized Kendall tau distance between complete rankings and between
//! top-k lists.
//!
//! For top-k lists an object missing from a list is treated as ranked below
//! every object of that list, and two objects missing from the same list are
//! tied there (the optimistic convention: no penalty). A pair is discordant
//! when the two lists order it strictly oppositely. With this rule two
//! disjoint lists disagree on exactly `k^2` pairs, the normalizer.

use crate::domain::{RankKind, RankResult, NOT_RANKED};
use crate::error::{Error, Result};

/// A normalized distance in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Distance(f64);

impl Distance {
    pub const ZERO: Distance = Distance(0.0);

    pub fn new(value: f64) -> Self {
        debug_assert!(
            (0.0..=1.0).contains(&value),
            "distance {value} out of [0, 1]"
        );
        Distance(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Distance> for f64 {
    fn from(d: Distance) -> f64 {
        d.0
    }
}

fn check_comparable(a: &RankResult, b: &RankResult) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Incomparable(format!(
            "rankings over {} and {} objects",
            a.n(),
            b.n()
        )));
    }
    if a.kind() != b.kind() {
        return Err(Error::Incomparable(
            "cannot compare a complete ranking with a top-k list".into(),
        ));
    }
    if a.len() != b.len() {
        return Err(Error::Incomparable(format!(
            "top-k lists of different lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Denominator of the normalized distance for rankings shaped like `r`.
pub fn normalizer(r: &RankResult) -> u64 {
    let len = r.len() as u64;
    match r.kind() {
        RankKind::Complete => len * len.saturating_sub(1) / 2,
        RankKind::TopK => len * len,
    }
}

/// Number of discordant object pairs between two comparable rankings.
pub fn discordant_pairs(a: &RankResult, b: &RankResult) -> Result<u64> {
    check_comparable(a, b)?;
    Ok(match a.kind() {
        RankKind::Complete => complete_inversions(a, b),
        RankKind::TopK => top_k_discordant(a, b),
    })
}

/// Distance of the appropriate kind between `a` and `b`.
pub fn distance(a: &RankResult, b: &RankResult) -> Result<Distance> {
    let d = discordant_pairs(a, b)?;
    let norm = normalizer(a);
    Ok(if norm == 0 {
        Distance::ZERO
    } else {
        Distance::new(d as f64 / norm as f64)
    })
}

pub fn kendall_complete(a: &RankResult, b: &RankResult) -> Result<Distance> {
    if a.kind() != RankKind::Complete || b.kind() != RankKind::Complete {
        return Err(Error::Incomparable("expected complete rankings".into()));
    }
    distance(a, b)
}

pub fn kendall_topk(a: &RankResult, b: &RankResult) -> Result<Distance> {
    if a.kind() != RankKind::TopK || b.kind() != RankKind::TopK {
        return Err(Error::Incomparable("expected top-k lists".into()));
    }
    distance(a, b)
}

// Inversions of b's positions read in a's order, by merge sort.
fn complete_inversions(a: &RankResult, b: &RankResult) -> u64 {
    let pb = b.raw_positions();
    let mut seq: Vec<u32> = a.order().iter().map(|&o| pb[o]).collect();
    let mut buf = vec![0u32; seq.len()];
    sort_count(&mut seq, &mut buf)
}

fn sort_count(v: &mut [u32], buf: &mut [u32]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        sort_count(l, bl) + sort_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}

fn top_k_discordant(a: &RankResult, b: &RankResult) -> u64 {
    let k = a.len() as i64;
    let (pa, pb) = (a.raw_positions(), b.raw_positions());
    let pos = |p: u32| if p == NOT_RANKED { k } else { i64::from(p) };

    // Only objects in at least one list can contribute.
    let mut union: Vec<usize> = a.order().to_vec();
    union.extend(b.order().iter().copied().filter(|&o| pa[o] == NOT_RANKED));

    let mut count = 0;
    for (x_idx, &x) in union.iter().enumerate() {
        for &y in &union[x_idx + 1..] {
            let da = pos(pa[x]) - pos(pa[y]);
            let db = pos(pb[x]) - pos(pb[y]);
            if da * db < 0 {
                count += 1;
            }
        }
    }
    count
}

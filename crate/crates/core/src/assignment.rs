//! Task-assignment modules: choose the next batch of pairwise comparisons.
//!
//! Every module emits exactly `n_batch` tasks. When `n_batch` exceeds the
//! number of candidate pairs a module cycles through its candidates again,
//! so duplicates only appear once every candidate has been emitted.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::domain::{all_pairs, ComparisonMatrix, Pair, ScoreVector};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub type TaskList = Vec<Pair>;

pub trait AssignmentModule: Send + Sync {
    fn name(&self) -> &str;

    /// Next `n_batch` tasks, most important first. `scores` come from the
    /// process's inference module on the same answers as `m`.
    fn assign(
        &self,
        m: &ComparisonMatrix,
        scores: &ScoreVector,
        n_batch: usize,
        rng: &mut SimRng,
    ) -> Result<TaskList>;

    fn needs_top_k(&self) -> bool {
        false
    }
}

fn cycle_to(list: Vec<Pair>, n_batch: usize) -> TaskList {
    if list.is_empty() {
        return list;
    }
    list.iter().copied().cycle().take(n_batch).collect()
}

fn check_objects(m: &ComparisonMatrix) -> Result<()> {
    if m.n() < 2 {
        return Err(Error::Config(
            "assignment needs at least two objects".into(),
        ));
    }
    Ok(())
}

/// Uniform among the least-answered pairs, level by level.
pub fn assign_random(m: &ComparisonMatrix, n_batch: usize, rng: &mut SimRng) -> Result<TaskList> {
    check_objects(m)?;
    let mut pool: Vec<(u64, Pair)> = all_pairs(m.n())
        .map(|(i, j)| (u64::from(m.pair_total(i, j)), (i, j)))
        .collect();
    let mut out = Vec::with_capacity(n_batch);
    while out.len() < n_batch {
        let level = pool.iter().map(|p| p.0).min().expect("at least one pair");
        let mut candidates: Vec<usize> = (0..pool.len()).filter(|&x| pool[x].0 == level).collect();
        candidates.shuffle(rng);
        for &x in candidates.iter().take(n_batch - out.len()) {
            out.push(pool[x].1);
            pool[x].0 += 1;
        }
    }
    Ok(out)
}

/// Highest product of positively shifted scores first.
pub fn assign_greedy(
    scores: &ScoreVector,
    m: &ComparisonMatrix,
    n_batch: usize,
) -> Result<TaskList> {
    check_objects(m)?;
    if scores.len() != m.n() {
        return Err(Error::Config(format!(
            "{} scores for {} objects",
            scores.len(),
            m.n()
        )));
    }
    let s = scores.as_slice();
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = s.iter().map(|x| x - min + 1.0).collect();
    let mut pairs: Vec<(f64, Pair)> = all_pairs(m.n())
        .map(|(i, j)| (shifted[i] * shifted[j], (i, j)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(cycle_to(pairs.into_iter().map(|p| p.1).collect(), n_batch))
}

/// Largest `x` with `x(x-1)/2 <= n_batch`.
pub fn complete_group_size(n_batch: usize) -> usize {
    let mut x = 1;
    while (x + 1) * x / 2 <= n_batch {
        x += 1;
    }
    x
}

/// All comparisons among the `x` best objects, repeated to fill the batch.
pub fn assign_complete(scores: &ScoreVector, n_batch: usize) -> Result<TaskList> {
    if n_batch == 0 {
        return Err(Error::Config("n_batch must be positive".into()));
    }
    if scores.len() < 2 {
        return Err(Error::Config(
            "assignment needs at least two objects".into(),
        ));
    }
    let x = complete_group_size(n_batch).clamp(2, scores.len());
    let mut top: Vec<usize> = scores.order()[..x].to_vec();
    top.sort_unstable();
    let mut pairs = Vec::with_capacity(x * (x - 1) / 2);
    for (a, &i) in top.iter().enumerate() {
        for &j in &top[a + 1..] {
            pairs.push((i, j));
        }
    }
    Ok(cycle_to(pairs, n_batch))
}

/// Posterior variance times binary entropy of the posterior mean, under
/// `Beta(M_ij + 1, M_ji + 1)`.
pub fn active_utility(wins: u32, losses: u32) -> f64 {
    let a = f64::from(wins) + 1.0;
    let b = f64::from(losses) + 1.0;
    let sum = a + b;
    let var = a * b / (sum * sum * (sum + 1.0));
    let p = a / sum;
    let entropy = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
    var * entropy
}

pub fn assign_active(m: &ComparisonMatrix, n_batch: usize) -> Result<TaskList> {
    check_objects(m)?;
    let mut pairs: Vec<(f64, Pair)> = all_pairs(m.n())
        .map(|(i, j)| (active_utility(m.get(i, j), m.get(j, i)), (i, j)))
        .collect();
    pairs.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    });
    Ok(cycle_to(pairs.into_iter().map(|p| p.1).collect(), n_batch))
}

pub struct RandomAssignment;
pub struct GreedyAssignment;
pub struct CompleteAssignment;
pub struct ActiveAssignment;

impl AssignmentModule for RandomAssignment {
    fn name(&self) -> &str {
        "Random"
    }

    fn assign(
        &self,
        m: &ComparisonMatrix,
        _: &ScoreVector,
        n: usize,
        rng: &mut SimRng,
    ) -> Result<TaskList> {
        assign_random(m, n, rng)
    }
}

impl AssignmentModule for GreedyAssignment {
    fn name(&self) -> &str {
        "Greedy"
    }

    fn assign(
        &self,
        m: &ComparisonMatrix,
        s: &ScoreVector,
        n: usize,
        _: &mut SimRng,
    ) -> Result<TaskList> {
        assign_greedy(s, m, n)
    }
}

impl AssignmentModule for CompleteAssignment {
    fn name(&self) -> &str {
        "Complete"
    }

    fn assign(
        &self,
        _: &ComparisonMatrix,
        s: &ScoreVector,
        n: usize,
        _: &mut SimRng,
    ) -> Result<TaskList> {
        assign_complete(s, n)
    }

    fn needs_top_k(&self) -> bool {
        true
    }
}

impl AssignmentModule for ActiveAssignment {
    fn name(&self) -> &str {
        "CrowdBT"
    }

    fn assign(
        &self,
        m: &ComparisonMatrix,
        _: &ScoreVector,
        n: usize,
        _: &mut SimRng,
    ) -> Result<TaskList> {
        assign_active(m, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentKind {
    Random,
    Greedy,
    Complete,
    Active,
}

impl AssignmentKind {
    pub fn build(self) -> Box<dyn AssignmentModule> {
        match self {
            AssignmentKind::Random => Box::new(RandomAssignment),
            AssignmentKind::Greedy => Box::new(GreedyAssignment),
            AssignmentKind::Complete => Box::new(CompleteAssignment),
            AssignmentKind::Active => Box::new(ActiveAssignment),
        }
    }

    pub fn top_k_only(self) -> bool {
        self == AssignmentKind::Complete
    }
}

impl fmt::Display for AssignmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignmentKind::Random => "Random",
            AssignmentKind::Greedy => "Greedy",
            AssignmentKind::Complete => "Complete",
            AssignmentKind::Active => "CrowdBT",
        })
    }
}

impl FromStr for AssignmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "greedy" => Ok(Self::Greedy),
            "complete" => Ok(Self::Complete),
            "crowdbt" | "active" => Ok(Self::Active),
            _ => Err(Error::Config(format!("unknown assignment module `{s}`"))),
        }
    }
}

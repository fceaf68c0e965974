//! Domain types shared by every module: objects, answers, the batch-structured
//! answer log, the comparison-count matrix and ranking results.
//!
//! Conventions:
//! - Objects are dense indices `0..n`.
//! - An [`Answer`] with `winner == Winner::Left` asserts that `left` is
//!   preferred over `right`.
//! - Batches and checkpoints are 1-based: checkpoint `c` is the state after
//!   the first `c * n_batch` answers.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// An unordered object pair, stored with `0 < 1`.
pub type Pair = (usize, usize);

/// All unordered pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = Pair> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl ObjectSet {
    /// `n` objects labelled by their index.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_labels((0..n).map(|i| i.to_string()).collect())
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Config(format!(
                "an object set needs at least 2 objects, got {}",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate object label `{l}`")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Opaque worker identifier. Two reserved values mark answers that were not
/// given by a real worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorkerId(pub u32);

impl WorkerId {
    /// Answers sampled by the prediction model.
    pub const PREDICTED: WorkerId = WorkerId(u32::MAX);
    /// Replay answers synthesized for an exhausted pair.
    pub const SIMULATED: WorkerId = WorkerId(u32::MAX - 1);

    pub fn is_real(self) -> bool {
        self != Self::PREDICTED && self != Self::SIMULATED
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Answer {
    pub worker: WorkerId,
    pub left: usize,
    pub right: usize,
    pub winner: Winner,
}

impl Answer {
    pub fn new(worker: WorkerId, left: usize, right: usize, winner: Winner) -> Result<Self> {
        if left == right {
            return Err(Error::MalformedLog(format!(
                "answer compares object {left} with itself"
            )));
        }
        Ok(Self {
            worker,
            left,
            right,
            winner,
        })
    }

    /// An answer stating that `preferred` beats `other`.
    pub fn preferring(worker: WorkerId, preferred: usize, other: usize) -> Self {
        debug_assert_ne!(preferred, other);
        Self {
            worker,
            left: preferred,
            right: other,
            winner: Winner::Left,
        }
    }

    pub fn preferred(&self) -> usize {
        match self.winner {
            Winner::Left => self.left,
            Winner::Right => self.right,
        }
    }

    pub fn rejected(&self) -> usize {
        match self.winner {
            Winner::Left => self.right,
            Winner::Right => self.left,
        }
    }

    pub fn pair(&self) -> Pair {
        (self.left.min(self.right), self.left.max(self.right))
    }

    /// The same judgement re-expressed with `left` as the given object.
    pub fn oriented(&self, left: usize) -> Self {
        if left == self.left {
            *self
        } else {
            debug_assert_eq!(left, self.right);
            let winner = match self.winner {
                Winner::Left => Winner::Right,
                Winner::Right => Winner::Left,
            };
            Self {
                worker: self.worker,
                left: self.right,
                right: self.left,
                winner,
            }
        }
    }
}

/// Answers in arrival order, grouped into batches of `n_batch`.
///
/// Batch `b` (1-based) holds answers `(b-1)*n_batch .. b*n_batch`; only the
/// last batch may be partial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerLog {
    n_batch: usize,
    answers: Vec<Answer>,
}

impl AnswerLog {
    pub fn new(n_batch: usize) -> Result<Self> {
        if n_batch == 0 {
            return Err(Error::Config("n_batch must be positive".into()));
        }
        Ok(Self {
            n_batch,
            answers: Vec::new(),
        })
    }

    pub fn from_answers(n_batch: usize, answers: Vec<Answer>) -> Result<Self> {
        let mut log = Self::new(n_batch)?;
        log.answers = answers;
        Ok(log)
    }

    pub fn n_batch(&self) -> usize {
        self.n_batch
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn push(&mut self, answer: Answer) {
        self.answers.push(answer);
    }

    pub fn extend<I: IntoIterator<Item = Answer>>(&mut self, answers: I) {
        self.answers.extend(answers);
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    /// Number of batches, counting a trailing partial batch.
    pub fn num_batches(&self) -> usize {
        self.answers.len().div_ceil(self.n_batch)
    }

    /// Number of full batches.
    pub fn complete_batches(&self) -> usize {
        self.answers.len() / self.n_batch
    }

    /// `true` when the log ends exactly on a batch boundary.
    pub fn is_aligned(&self) -> bool {
        self.answers.len().is_multiple_of(self.n_batch)
    }

    /// The 1-based batch containing answer `idx`.
    pub fn batch_of(&self, idx: usize) -> usize {
        idx / self.n_batch + 1
    }

    /// Answers of batch `b` (1-based).
    pub fn batch(&self, b: usize) -> &[Answer] {
        assert!(b >= 1, "batches are 1-based");
        let start = ((b - 1) * self.n_batch).min(self.answers.len());
        let end = (b * self.n_batch).min(self.answers.len());
        &self.answers[start..end]
    }

    /// Answers of batches `1..=upto_batch`.
    pub fn prefix(&self, upto_batch: usize) -> &[Answer] {
        let end = upto_batch
            .saturating_mul(self.n_batch)
            .min(self.answers.len());
        &self.answers[..end]
    }

    /// Copy of the first `upto_batch` batches.
    pub fn truncated(&self, upto_batch: usize) -> AnswerLog {
        AnswerLog {
            n_batch: self.n_batch,
            answers: self.prefix(upto_batch).to_vec(),
        }
    }
}

/// `counts[i][j]` = number of answers asserting `i` preferred over `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonMatrix {
    n: usize,
    counts: Vec<u32>,
    total: u64,
}

impl ComparisonMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
            total: 0,
        }
    }

    /// Builds a matrix from explicit counts; the diagonal must be zero.
    pub fn from_counts(counts: Vec<Vec<u32>>) -> Result<Self> {
        let n = counts.len();
        let mut m = Self::zeros(n);
        for (i, row) in counts.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MalformedLog("count matrix is not square".into()));
            }
            for (j, &c) in row.iter().enumerate() {
                if i == j && c != 0 {
                    return Err(Error::MalformedLog("non-zero diagonal count".into()));
                }
                m.counts[i * n + j] = c;
                m.total += u64::from(c);
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    /// Answers recorded for the unordered pair `{i, j}`.
    #[inline]
    pub fn pair_total(&self, i: usize, j: usize) -> u32 {
        self.get(i, j) + self.get(j, i)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn record(&mut self, preferred: usize, other: usize) {
        self.counts[preferred * self.n + other] += 1;
        self.total += 1;
    }

    pub fn add(&mut self, answer: &Answer) -> Result<()> {
        if answer.left >= self.n || answer.right >= self.n || answer.left == answer.right {
            return Err(Error::MalformedLog(format!(
                "answer ({}, {}) is out of range for {} objects",
                answer.left, answer.right, self.n
            )));
        }
        self.record(answer.preferred(), answer.rejected());
        Ok(())
    }

    pub fn add_all<'a, I: IntoIterator<Item = &'a Answer>>(&mut self, answers: I) -> Result<()> {
        for a in answers {
            self.add(a)?;
        }
        Ok(())
    }

    /// Restriction to `keep` (in the given order).
    pub fn restricted(&self, keep: &[usize]) -> ComparisonMatrix {
        let mut m = ComparisonMatrix::zeros(keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                if a != b {
                    let c = self.get(i, j);
                    m.counts[a * keep.len() + b] = c;
                    m.total += u64::from(c);
                }
            }
        }
        m
    }
}

/// Folds batches `1..=upto_batch` of `log` into a fresh comparison matrix.
pub fn fold_answers(
    log: &AnswerLog,
    upto_batch: usize,
    objects: &ObjectSet,
) -> Result<ComparisonMatrix> {
    if upto_batch > log.num_batches() {
        return Err(Error::MalformedLog(format!(
            "requested {upto_batch} batches but the log has {}",
            log.num_batches()
        )));
    }
    let mut m = ComparisonMatrix::zeros(objects.len());
    m.add_all(log.prefix(upto_batch))?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKind {
    Complete,
    TopK,
}

/// A complete ranking or a top-k list over `n` objects, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankResult {
    kind: RankKind,
    n: usize,
    order: Vec<usize>,
    // position of every object, or NOT_RANKED
    positions: Vec<u32>,
}

pub(crate) const NOT_RANKED: u32 = u32::MAX;

impl RankResult {
    pub fn complete(order: Vec<usize>, n: usize) -> Result<Self> {
        if order.len() != n {
            return Err(Error::InvalidRanking(format!(
                "complete ranking over {n} objects has {} entries",
                order.len()
            )));
        }
        Self::build(RankKind::Complete, order, n)
    }

    pub fn top_k(order: Vec<usize>, n: usize) -> Result<Self> {
        if order.is_empty() || order.len() > n {
            return Err(Error::InvalidRanking(format!(
                "top-k list of length {} over {n} objects",
                order.len()
            )));
        }
        Self::build(RankKind::TopK, order, n)
    }

    fn build(kind: RankKind, order: Vec<usize>, n: usize) -> Result<Self> {
        let mut positions = vec![NOT_RANKED; n];
        for (p, &o) in order.iter().enumerate() {
            if o >= n {
                return Err(Error::InvalidRanking(format!(
                    "object {o} out of range for {n} objects"
                )));
            }
            if positions[o] != NOT_RANKED {
                return Err(Error::InvalidRanking(format!("object {o} ranked twice")));
            }
            positions[o] = p as u32;
        }
        Ok(Self {
            kind,
            n,
            order,
            positions,
        })
    }

    pub fn kind(&self) -> RankKind {
        self.kind
    }

    /// Number of objects in the underlying set.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of the ranked list (`n` for complete rankings, `k` for top-k).
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 0-based position of `object`, if ranked.
    pub fn position(&self, object: usize) -> Option<usize> {
        match self.positions[object] {
            NOT_RANKED => None,
            p => Some(p as usize),
        }
    }

    pub(crate) fn raw_positions(&self) -> &[u32] {
        &self.positions
    }

    /// Whether the ranking places `a` before `b`. Unranked objects sit below
    /// every ranked one; `None` when neither is ranked.
    pub fn prefers(&self, a: usize, b: usize) -> Option<bool> {
        let (pa, pb) = (self.positions[a], self.positions[b]);
        if pa == NOT_RANKED && pb == NOT_RANKED {
            None
        } else {
            Some(pa < pb)
        }
    }

    /// First `k` entries as a top-k list.
    pub fn truncate(&self, k: usize) -> Result<RankResult> {
        RankResult::top_k(self.order[..k.min(self.order.len())].to_vec(), self.n)
    }
}

impl fmt::Display for RankResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|o| o.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Per-object real scores; higher is better.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(pub Vec<f64>);

impl ScoreVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Object indices by descending score, ties by ascending index.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        idx
    }

    pub fn ranking(&self) -> RankResult {
        RankResult::complete(self.order(), self.0.len()).expect("argsort is a permutation")
    }
}

//! Answer sources for simulated collection: a replayed dataset drawn without
//! replacement, or a synthetic Bradley-Terry world with noisy workers.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{pair_count, Answer, ObjectSet, Pair, RankResult, ScoreVector, WorkerId};
use crate::error::{Error, Result};
use crate::rng::{Seed, SimRng};

/// Dense index of the unordered pair `{i, j}` among `n` objects.
pub(crate) fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

/// A worker in the pool's roster. For replayed data `accuracy` is the
/// fraction of the worker's answers that agree with the ground truth; for a
/// synthetic pool it is the drawn accuracy and `answers` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerStats {
    pub id: WorkerId,
    pub answers: u64,
    pub accuracy: f64,
}

/// How synthetic worker accuracies are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccuracyDist {
    Fixed(f64),
    /// Uniform on `[lo, hi]`.
    Uniform(f64, f64),
}

impl AccuracyDist {
    fn mean(self) -> f64 {
        match self {
            AccuracyDist::Fixed(a) => a,
            AccuracyDist::Uniform(lo, hi) => (lo + hi) / 2.0,
        }
    }

    fn sample(self, rng: &mut SimRng) -> f64 {
        match self {
            AccuracyDist::Fixed(a) => a,
            AccuracyDist::Uniform(lo, hi) if hi > lo => rng.random_range(lo..=hi),
            AccuracyDist::Uniform(lo, _) => lo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrueScores {
    Given(Vec<f64>),
    /// i.i.d. normal scores with this standard deviation.
    Random {
        sd: f64,
    },
}

/// Answers drawn after `at_answer` answers have been served use `scores`
/// instead of the initial ones.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSwitch {
    pub at_answer: usize,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub scores: TrueScores,
    pub accuracy: AccuracyDist,
    pub workers: usize,
    pub seed: u64,
    pub switch: Option<RegimeSwitch>,
}

impl SyntheticSpec {
    pub fn new(n: usize, scores: TrueScores, accuracy: AccuracyDist, seed: u64) -> Self {
        Self {
            n,
            scores,
            accuracy,
            workers: 100,
            seed,
            switch: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Replay {
    by_pair: Vec<Vec<Answer>>,
    remaining: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Synthetic {
    scores: Vec<f64>,
    switch: Option<RegimeSwitch>,
    /// Accuracy of worker `w` at index `w`.
    accuracies: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Backing {
    Replay(Replay),
    Synthetic(Synthetic),
}

/// Source of worker answers for a simulated ranking process.
///
/// Cloning a pool yields an independent copy with the same remaining
/// answers, which is how each repetition starts from a full pool.
#[derive(Debug, Clone)]
pub struct AnswerPool {
    objects: ObjectSet,
    truth: RankResult,
    workers: Vec<WorkerStats>,
    mean_accuracy: f64,
    served: usize,
    backing: Backing,
}

impl AnswerPool {
    /// Replay pool over recorded `answers`. Worker accuracies are measured
    /// against `truth`.
    pub fn from_answers(
        objects: ObjectSet,
        truth: RankResult,
        answers: Vec<Answer>,
    ) -> Result<Self> {
        let n = objects.len();
        if truth.n() != n || truth.len() != n {
            return Err(Error::InvalidRanking(format!(
                "ground truth must rank all {n} objects"
            )));
        }
        if answers.is_empty() {
            return Err(Error::MalformedLog("answer pool is empty".into()));
        }
        let mut by_pair = vec![Vec::new(); pair_count(n)];
        let mut workers: Vec<(WorkerId, u64, u64)> = Vec::new();
        let mut worker_slot = std::collections::HashMap::new();
        for a in answers {
            if a.left >= n || a.right >= n {
                return Err(Error::MalformedLog(format!(
                    "answer on ({}, {}) outside {n} objects",
                    a.left, a.right
                )));
            }
            let slot = *worker_slot.entry(a.worker).or_insert_with(|| {
                workers.push((a.worker, 0, 0));
                workers.len() - 1
            });
            let w = &mut workers[slot];
            w.1 += 1;
            w.2 += u64::from(truth.prefers(a.preferred(), a.rejected()) == Some(true));
            by_pair[pair_slot(n, a.left, a.right)].push(a);
        }
        let workers: Vec<WorkerStats> = workers
            .into_iter()
            .map(|(id, answers, correct)| WorkerStats {
                id,
                answers,
                accuracy: correct as f64 / answers as f64,
            })
            .collect();
        let mean_accuracy = workers.iter().map(|w| w.accuracy).sum::<f64>() / workers.len() as f64;
        let remaining = by_pair.iter().map(Vec::len).collect();
        Ok(Self {
            objects,
            truth,
            workers,
            mean_accuracy,
            served: 0,
            backing: Backing::Replay(Replay { by_pair, remaining }),
        })
    }

    pub fn objects(&self) -> &ObjectSet {
        &self.objects
    }

    pub fn n(&self) -> usize {
        self.objects.len()
    }

    /// The correct complete ranking.
    pub fn truth(&self) -> &RankResult {
        &self.truth
    }

    pub fn workers(&self) -> &[WorkerStats] {
        &self.workers
    }

    /// Mean worker accuracy used when synthesizing answers.
    pub fn mean_accuracy(&self) -> f64 {
        self.mean_accuracy
    }

    /// Recorded answers for a replay pool, `None` for a synthetic one.
    pub fn recorded_answers(&self) -> Option<usize> {
        match &self.backing {
            Backing::Replay(r) => Some(r.by_pair.iter().map(Vec::len).sum()),
            Backing::Synthetic(_) => None,
        }
    }

    /// Answers still available for `{i, j}` before synthesis kicks in.
    pub fn remaining(&self, pair: Pair) -> Option<usize> {
        match &self.backing {
            Backing::Replay(r) => Some(r.remaining[pair_slot(self.n(), pair.0, pair.1)]),
            Backing::Synthetic(_) => None,
        }
    }

    /// Answers served so far.
    pub fn served(&self) -> usize {
        self.served
    }

    /// One answer for `pair`.
    pub fn draw(&mut self, pair: Pair, rng: &mut SimRng) -> Answer {
        let (i, j) = pair;
        assert!(
            i != j && i < self.n() && j < self.n(),
            "bad pair ({i}, {j})"
        );
        let served = self.served;
        self.served += 1;
        match &mut self.backing {
            Backing::Replay(r) => {
                let slot = pair_slot(self.objects.len(), i, j);
                let left = r.remaining[slot];
                if left > 0 {
                    let pick = rng.random_range(0..left);
                    r.by_pair[slot].swap(pick, left - 1);
                    r.remaining[slot] = left - 1;
                    return r.by_pair[slot][left - 1];
                }
                let truth_left = self.truth.prefers(i, j) == Some(true);
                let correct = rng.random::<f64>() < self.mean_accuracy;
                let left_wins = truth_left == correct;
                orient(WorkerId::SIMULATED, i, j, left_wins)
            }
            Backing::Synthetic(s) => {
                let scores = match &s.switch {
                    Some(sw) if served >= sw.at_answer => &sw.scores,
                    _ => &s.scores,
                };
                let w = rng.random_range(0..s.accuracies.len());
                let p_left = bt_probability(scores[i], scores[j]);
                let mut left_wins = rng.random::<f64>() < p_left;
                if rng.random::<f64>() >= s.accuracies[w] {
                    left_wins = !left_wins;
                }
                orient(WorkerId(w as u32), i, j, left_wins)
            }
        }
    }
}

fn orient(worker: WorkerId, i: usize, j: usize, left_wins: bool) -> Answer {
    if left_wins {
        Answer::preferring(worker, i, j)
    } else {
        Answer::preferring(worker, j, i).oriented(i)
    }
}

/// Bradley-Terry probability that the object with score `si` beats the one
/// with score `sj`.
pub fn bt_probability(si: f64, sj: f64) -> f64 {
    1.0 / (1.0 + (sj - si).exp())
}

/// Draws one answer for `pair`: without replacement from the recorded
/// answers, or synthesized once the pair is exhausted.
pub fn draw_answer(pool: &mut AnswerPool, pair: Pair, rng: &mut SimRng) -> Answer {
    pool.draw(pair, rng)
}

/// Synthetic pool with unlimited answers. The ground truth is the score
/// order of the regime in force at the end of collection.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<AnswerPool> {
    let n = spec.n;
    let objects = ObjectSet::new(n)?;
    let seed = Seed(spec.seed);
    let scores = match &spec.scores {
        TrueScores::Given(s) => {
            if s.len() != n {
                return Err(Error::Config(format!("{} scores for {n} objects", s.len())));
            }
            s.clone()
        }
        TrueScores::Random { sd } => {
            let normal = Normal::new(0.0, *sd)
                .map_err(|e| Error::Config(format!("score distribution: {e}")))?;
            let mut rng = seed.rng("scores", 0);
            (0..n).map(|_| normal.sample(&mut rng)).collect()
        }
    };
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Config("scores must be finite".into()));
    }
    if let Some(sw) = &spec.switch {
        if sw.scores.len() != n {
            return Err(Error::Config(format!(
                "{} switched scores for {n} objects",
                sw.scores.len()
            )));
        }
    }
    match spec.accuracy {
        AccuracyDist::Fixed(a) if (0.0..=1.0).contains(&a) => {}
        AccuracyDist::Uniform(lo, hi) if 0.0 <= lo && lo <= hi && hi <= 1.0 => {}
        other => {
            return Err(Error::Config(format!(
                "invalid accuracy distribution {other:?}"
            )))
        }
    }
    if spec.workers == 0 {
        return Err(Error::Config(
            "synthetic pool needs at least one worker".into(),
        ));
    }
    let mut rng = seed.rng("workers", 0);
    let accuracies: Vec<f64> = (0..spec.workers)
        .map(|_| spec.accuracy.sample(&mut rng))
        .collect();
    let final_scores = spec.switch.as_ref().map_or(&scores, |sw| &sw.scores);
    let truth = ScoreVector(final_scores.clone()).ranking();
    let workers = accuracies
        .iter()
        .enumerate()
        .map(|(w, &accuracy)| WorkerStats {
            id: WorkerId(w as u32),
            answers: 0,
            accuracy,
        })
        .collect();
    Ok(AnswerPool {
        objects,
        truth,
        workers,
        mean_accuracy: spec.accuracy.mean(),
        served: 0,
        backing: Backing::Synthetic(Synthetic {
            scores,
            switch: spec.switch.clone(),
            accuracies,
        }),
    })
}

//! Expected-distance estimation over sampled possible worlds and the stop
//! decision built on it.
//!
//! Each sample `s` predicts the remaining `m` batches with its own stream
//! `("mc", s)` and records the discordant-pair counts between every pair of
//! checkpoint rankings `sigma[i], sigma[j]`, `0 <= i < j <= m`. Counts are
//! summed as integers, so the estimate does not depend on how the samples
//! were spread over threads, and memory stays `O(m^2)`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::assignment::AssignmentModule;
use crate::config::ProcessConfig;
use crate::distance::{discordant_pairs, normalizer};
use crate::domain::{AnswerLog, ComparisonMatrix};
use crate::error::{Error, Result};
use crate::exec::try_sum_counts;
use crate::inference::InferenceModule;
use crate::prediction::{reliability_for, remaining_batches, Predictor};
use crate::rng::Seed;

use super::hoeffding::sample_budget;

/// Upper-triangular matrix of mean sampled distances between checkpoint
/// rankings `0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    values: Vec<f64>,
}

#[inline]
fn tri_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j <= m);
    // rows 0..i hold (m - r) entries each
    i * m - i * (i.saturating_sub(1)) / 2 + (j - i - 1)
}

fn tri_len(m: usize) -> usize {
    (m + 1) * m / 2
}

impl DistanceMatrix {
    pub fn empty() -> Self {
        Self {
            m: 0,
            values: Vec::new(),
        }
    }

    fn from_counts(m: usize, counts: &[u64], n_sample: u64, norm: u64) -> Self {
        let denom = (n_sample * norm) as f64;
        let values = counts
            .iter()
            .map(|&c| if denom == 0.0 { 0.0 } else { c as f64 / denom })
            .collect();
        Self { m, values }
    }

    /// Number of predicted batches `m`; checkpoints run `0..=m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Mean distance between checkpoints `i < j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[tri_index(self.m, i, j)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(i, j, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let m = self.m;
        (0..m).flat_map(move |i| (i + 1..=m).map(move |j| (i, j, self.get(i, j))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Stop,
    Continue,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Stop => "stop",
            Decision::Continue => "continue",
        }
    }
}

/// `Stop` iff every mean distance is at most `theta - t`.
pub fn decide(matrix: &DistanceMatrix, theta: f64, margin: f64) -> Decision {
    if matrix.values.iter().all(|&d| d <= theta - margin) {
        Decision::Stop
    } else {
        Decision::Continue
    }
}

/// Outcome of one early-stopping check.
#[derive(Debug, Clone, PartialEq)]
pub struct StopReport {
    /// Checkpoint (batches collected so far) at which the check ran.
    pub checkpoint: usize,
    pub m: usize,
    pub n_sample: u64,
    pub weakened: bool,
    /// Reliability used for the predictions.
    pub rel: f64,
    pub threshold: f64,
    pub matrix: DistanceMatrix,
    pub decision: Decision,
    pub wall_time: Duration,
}

impl StopReport {
    pub const CSV_HEADER: &'static str =
        "checkpoint,m,n_sample,weakened,rel,max_distance,threshold,decision";

    pub fn max_distance(&self) -> f64 {
        self.matrix.max()
    }

    pub fn is_stop(&self) -> bool {
        self.decision == Decision::Stop
    }

    /// One CSV row matching [`CSV_HEADER`](Self::CSV_HEADER). Wall time is
    /// left out so the row is reproducible.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{}",
            self.checkpoint,
            self.m,
            self.n_sample,
            self.weakened,
            self.rel,
            self.max_distance(),
            self.threshold,
            self.decision.as_str()
        )
    }

    /// Multi-line `key = value` record followed by the matrix entries.
    pub fn text_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "checkpoint = {}", self.checkpoint);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "n_sample = {}", self.n_sample);
        let _ = writeln!(s, "weakened_guarantee = {}", self.weakened);
        let _ = writeln!(s, "rel = {:.6}", self.rel);
        let _ = writeln!(s, "threshold = {:.6}", self.threshold);
        let _ = writeln!(s, "max_distance = {:.6}", self.max_distance());
        let _ = writeln!(s, "decision = {}", self.decision.as_str());
        let _ = writeln!(s, "wall_ms = {}", self.wall_time.as_millis());
        for (i, j, d) in self.matrix.entries() {
            let _ = writeln!(s, "d[{i}][{j}] = {d:.6}");
        }
        s
    }
}

/// Runs the early-stopping check for the process whose collected answers
/// are `log` over `n` objects. Sample `s` draws from `seed.rng("mc", s)`.
pub fn monte_carlo(
    log: &AnswerLog,
    n: usize,
    inference: &dyn InferenceModule,
    assignment: &dyn AssignmentModule,
    cfg: &ProcessConfig,
    seed: Seed,
) -> Result<StopReport> {
    let started = Instant::now();
    let m = remaining_batches(log, cfg)?;
    let checkpoint = log.len() / cfg.n_batch;
    let threshold = cfg.theta - cfg.margin;
    if m == 0 {
        return Ok(StopReport {
            checkpoint,
            m: 0,
            n_sample: 0,
            weakened: false,
            rel: f64::NAN,
            threshold,
            matrix: DistanceMatrix::empty(),
            decision: Decision::Stop,
            wall_time: started.elapsed(),
        });
    }

    let mut matrix = ComparisonMatrix::zeros(n);
    matrix.add_all(log.answers())?;
    let current = inference.infer(&matrix, cfg.query)?;
    let rel = reliability_for(log, n, &current.ranking, cfg)?;
    let budget = sample_budget(m, cfg.alpha, cfg.margin, cfg.n_sample_override);
    let predictor = Predictor {
        inference,
        assignment,
        query: cfg.query,
        n_batch: cfg.n_batch,
        rel: rel.rel,
    };
    let norm = normalizer(&current.ranking);

    let counts = try_sum_counts(cfg.parallelism, budget.n_sample, tri_len(m), |s, acc| {
        let mut rng = seed.rng("mc", s);
        let sigma = predictor.rollout(matrix.clone(), &current, m, &mut rng, None)?;
        let mut idx = 0;
        for i in 0..m {
            for j in i + 1..=m {
                acc[idx] += discordant_pairs(&sigma[i], &sigma[j])?;
                idx += 1;
            }
        }
        Ok::<(), Error>(())
    })?;

    let matrix = DistanceMatrix::from_counts(m, &counts, budget.n_sample, norm);
    let decision = decide(&matrix, cfg.theta, cfg.margin);
    Ok(StopReport {
        checkpoint,
        m,
        n_sample: budget.n_sample,
        weakened: budget.weakened,
        rel: rel.rel,
        threshold,
        matrix,
        decision,
        wall_time: started.elapsed(),
    })
}

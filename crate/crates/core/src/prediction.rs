//! Answer prediction: per-pair MAP probabilities under a `Beta(1, 1)` prior,
//! a single reliability factor mixing them toward a coin flip, and Bernoulli
//! sampling of whole future batches through the process's own inference and
//! assignment modules.

use rand::Rng;

use crate::assignment::AssignmentModule;
use crate::config::{ProcessConfig, Query, ReliabilityStrategy};
use crate::domain::{Answer, AnswerLog, ComparisonMatrix, Pair, RankResult, WorkerId};
use crate::error::{Error, Result};
use crate::inference::{InferenceModule, Inferred};
use crate::rng::SimRng;

/// Posterior mode of `P(i preferred over j)` given `wins` and `losses`.
#[inline]
pub fn map_probability(wins: u32, losses: u32) -> f64 {
    (f64::from(wins) + 1.0) / (f64::from(wins) + f64::from(losses) + 2.0)
}

/// Plain maximum-likelihood estimate `wins / (wins + losses)`.
pub fn mle_probability(wins: u64, losses: u64) -> f64 {
    wins as f64 / (wins + losses) as f64
}

/// `p * rel + (1 - p) * (1 - rel)`.
#[inline]
pub fn mix_reliability(p: f64, rel: f64) -> f64 {
    p * rel + (1.0 - p) * (1.0 - rel)
}

/// Dense `n x n` matrix of preference probabilities, `p[i][j] + p[j][i] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseProbabilities {
    n: usize,
    p: Vec<f64>,
}

impl PairwiseProbabilities {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Builds a matrix from its upper triangle; `upper(i, j)` is called for
    /// `i < j`.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let mut p = vec![0.5; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = upper(i, j);
                p[i * n + j] = v;
                p[j * n + i] = 1.0 - v;
            }
        }
        Self { n, p }
    }
}

pub fn estimate_probabilities(m: &ComparisonMatrix) -> PairwiseProbabilities {
    let n = m.n();
    let mut p = vec![0.5; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = map_probability(m.get(i, j), m.get(j, i));
            }
        }
    }
    PairwiseProbabilities { n, p }
}

pub fn adjust_reliability(
    p: &PairwiseProbabilities,
    rel: &ReliabilityEstimate,
) -> PairwiseProbabilities {
    let n = p.n;
    let mut out = p.clone();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.p[i * n + j] = mix_reliability(p.get(i, j), rel.rel);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityEstimate {
    pub rel: f64,
    pub strategy: ReliabilityStrategy,
    /// Set when the strategy had no usable answers and fell back to 0.5.
    pub fallback: bool,
}

impl ReliabilityEstimate {
    pub fn constant(rel: f64) -> Self {
        Self {
            rel: rel.clamp(0.5, 1.0),
            strategy: ReliabilityStrategy::Constant(rel),
            fallback: false,
        }
    }
}

/// Estimates the reliability of upcoming workers from the collected answers.
/// Predicted answers are ignored. The result is clamped to `[0.5, 1]`.
pub fn estimate_reliability(
    answers: &[Answer],
    n: usize,
    reference: Option<&RankResult>,
    strategy: ReliabilityStrategy,
) -> Result<ReliabilityEstimate> {
    let real = || answers.iter().filter(|a| a.worker != WorkerId::PREDICTED);
    let (agree, total) = match strategy {
        ReliabilityStrategy::Constant(c) => {
            return Ok(ReliabilityEstimate {
                rel: c.clamp(0.5, 1.0),
                strategy,
                fallback: false,
            })
        }
        ReliabilityStrategy::MajorityAgreement => {
            let mut m = ComparisonMatrix::zeros(n);
            m.add_all(real())?;
            let (mut agree, mut total) = (0u64, 0u64);
            for a in real() {
                let (w, l) = (
                    m.get(a.preferred(), a.rejected()),
                    m.get(a.rejected(), a.preferred()),
                );
                if w != l {
                    total += 1;
                    agree += u64::from(w > l);
                }
            }
            (agree, total)
        }
        ReliabilityStrategy::RankingAgreement => {
            let reference = reference.ok_or_else(|| {
                Error::Config("ranking-agreement reliability needs a reference ranking".into())
            })?;
            if reference.n() != n {
                return Err(Error::Incomparable(format!(
                    "reference ranks {} objects, expected {n}",
                    reference.n()
                )));
            }
            let (mut agree, mut total) = (0u64, 0u64);
            for a in real() {
                if let Some(ok) = reference.prefers(a.preferred(), a.rejected()) {
                    total += 1;
                    agree += u64::from(ok);
                }
            }
            (agree, total)
        }
    };
    if total == 0 {
        log::warn!("no answers usable for {strategy} reliability; falling back to 0.5");
        return Ok(ReliabilityEstimate {
            rel: 0.5,
            strategy,
            fallback: true,
        });
    }
    Ok(ReliabilityEstimate {
        rel: (agree as f64 / total as f64).clamp(0.5, 1.0),
        strategy,
        fallback: false,
    })
}

/// Draws `winner = left` with probability `p[i][j]`.
pub fn sample_answer(pair: Pair, p: &PairwiseProbabilities, rng: &mut SimRng) -> Answer {
    let (i, j) = pair;
    sample_with(i, j, p.get(i, j), rng)
}

#[inline]
fn sample_with(i: usize, j: usize, p_left: f64, rng: &mut SimRng) -> Answer {
    if rng.random::<f64>() < p_left {
        Answer::preferring(WorkerId::PREDICTED, i, j)
    } else {
        Answer::preferring(WorkerId::PREDICTED, j, i).oriented(i)
    }
}

/// Generates possible futures of a ranking process.
pub struct Predictor<'a> {
    pub inference: &'a dyn InferenceModule,
    pub assignment: &'a dyn AssignmentModule,
    pub query: Query,
    pub n_batch: usize,
    pub rel: f64,
}

impl<'a> Predictor<'a> {
    /// One predicted batch given the answers folded into `m` and the
    /// inference output on them. Probabilities and tasks are both computed
    /// once from `m`, before any answer of the batch is drawn.
    pub fn next_batch(
        &self,
        m: &ComparisonMatrix,
        current: &Inferred,
        rng: &mut SimRng,
    ) -> Result<Vec<Answer>> {
        let tasks = self
            .assignment
            .assign(m, &current.scores, self.n_batch, rng)?;
        Ok(tasks
            .into_iter()
            .take(self.n_batch)
            .map(|(i, j)| {
                let p = mix_reliability(map_probability(m.get(i, j), m.get(j, i)), self.rel);
                sample_with(i, j, p, rng)
            })
            .collect())
    }

    /// Predicts `batches` further batches starting from `m` / `start`, and
    /// returns the rankings `sigma[0..=batches]` with `sigma[0]` the starting
    /// ranking. Predicted answers are appended to `sink` when given.
    pub fn rollout(
        &self,
        mut m: ComparisonMatrix,
        start: &Inferred,
        batches: usize,
        rng: &mut SimRng,
        mut sink: Option<&mut Vec<Answer>>,
    ) -> Result<Vec<RankResult>> {
        let mut rankings = Vec::with_capacity(batches + 1);
        rankings.push(start.ranking.clone());
        let mut current = start.clone();
        for _ in 0..batches {
            let batch = self.next_batch(&m, &current, rng)?;
            for a in &batch {
                m.record(a.preferred(), a.rejected());
            }
            if let Some(s) = sink.as_deref_mut() {
                s.extend_from_slice(&batch);
            }
            current = self.inference.infer(&m, self.query)?;
            rankings.push(current.ranking.clone());
        }
        Ok(rankings)
    }
}

/// Reliability estimate for the process at `log`, using `current` as the
/// reference ranking where the strategy needs one.
pub fn reliability_for(
    log: &AnswerLog,
    n: usize,
    current: &RankResult,
    cfg: &ProcessConfig,
) -> Result<ReliabilityEstimate> {
    estimate_reliability(log.answers(), n, Some(current), cfg.reliability)
}

/// One predicted batch for the process whose collected answers are `log`.
/// The input log is not modified.
pub fn predict_next_batch(
    log: &AnswerLog,
    n: usize,
    inference: &dyn InferenceModule,
    assignment: &dyn AssignmentModule,
    cfg: &ProcessConfig,
    rng: &mut SimRng,
) -> Result<Vec<Answer>> {
    let mut m = ComparisonMatrix::zeros(n);
    m.add_all(log.answers())?;
    let current = inference.infer(&m, cfg.query)?;
    let rel = reliability_for(log, n, &current.ranking, cfg)?;
    let predictor = Predictor {
        inference,
        assignment,
        query: cfg.query,
        n_batch: cfg.n_batch,
        rel: rel.rel,
    };
    predictor.next_batch(&m, &current, rng)
}

/// A predicted completion of the answer log up to the budget.
#[derive(Debug, Clone)]
pub struct PredictedCompletion {
    pub log: AnswerLog,
    /// `rankings[0]` is inferred from the collected answers, `rankings[j]`
    /// after the `j`-th predicted batch.
    pub rankings: Vec<RankResult>,
}

/// Extends `log` with predicted batches until it holds `cfg.budget` answers.
pub fn predict_complete(
    log: &AnswerLog,
    n: usize,
    inference: &dyn InferenceModule,
    assignment: &dyn AssignmentModule,
    cfg: &ProcessConfig,
    rng: &mut SimRng,
) -> Result<PredictedCompletion> {
    let batches = remaining_batches(log, cfg)?;
    let mut m = ComparisonMatrix::zeros(n);
    m.add_all(log.answers())?;
    let current = inference.infer(&m, cfg.query)?;
    let rel = reliability_for(log, n, &current.ranking, cfg)?;
    let predictor = Predictor {
        inference,
        assignment,
        query: cfg.query,
        n_batch: cfg.n_batch,
        rel: rel.rel,
    };
    let mut predicted = Vec::with_capacity(batches * cfg.n_batch);
    let rankings = predictor.rollout(m, &current, batches, rng, Some(&mut predicted))?;
    let mut out = log.clone();
    out.extend(predicted);
    Ok(PredictedCompletion { log: out, rankings })
}

/// `(B - |log|) / n_batch`; the log must sit on a batch boundary within the
/// budget.
pub fn remaining_batches(log: &AnswerLog, cfg: &ProcessConfig) -> Result<usize> {
    if log.n_batch() != cfg.n_batch {
        return Err(Error::MalformedLog(format!(
            "log batches of {} answers, configuration expects {}",
            log.n_batch(),
            cfg.n_batch
        )));
    }
    if log.len() > cfg.budget {
        return Err(Error::MalformedLog(format!(
            "log holds {} answers, more than the budget {}",
            log.len(),
            cfg.budget
        )));
    }
    if !log.is_aligned() {
        return Err(Error::MalformedLog(format!(
            "log of {} answers does not end on a batch boundary of {}",
            log.len(),
            cfg.n_batch
        )));
    }
    Ok((cfg.budget - log.len()) / cfg.n_batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::RandomAssignment;
    use crate::domain::Winner;
    use crate::inference::Local;
    use crate::rng::derive_rng;

    #[test]
    fn map_examples() {
        assert_eq!(map_probability(0, 0), 0.5);
        assert!((map_probability(3, 1) - 4.0 / 6.0).abs() < 1e-15);
        let p = map_probability(100, 0);
        assert_eq!(p, 101.0 / 102.0);
        assert!(p < 1.0);
    }

    #[test]
    fn probabilities_are_complementary() {
        let m = ComparisonMatrix::from_counts(vec![vec![0, 3, 0], vec![1, 0, 7], vec![2, 2, 0]])
            .unwrap();
        let p = estimate_probabilities(&m);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((p.get(i, j) + p.get(j, i) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn adjustment_examples() {
        let p = PairwiseProbabilities::from_upper(2, |_, _| 0.8);
        let same = adjust_reliability(&p, &ReliabilityEstimate::constant(1.0));
        assert_eq!(same, p);
        let flat = adjust_reliability(&p, &ReliabilityEstimate::constant(0.5));
        assert_eq!(flat.get(0, 1), 0.5);
        assert_eq!(flat.get(1, 0), 0.5);
        let adj = adjust_reliability(&p, &ReliabilityEstimate::constant(0.9));
        assert!((adj.get(0, 1) - 0.74).abs() < 1e-12);
        assert!((adj.get(0, 1) + adj.get(1, 0) - 1.0).abs() < 1e-12);
    }

    fn answer(l: usize, r: usize, left_wins: bool) -> Answer {
        Answer::new(
            WorkerId(1),
            l,
            r,
            if left_wins {
                Winner::Left
            } else {
                Winner::Right
            },
        )
        .unwrap()
    }

    #[test]
    fn reliability_constant_and_majority() {
        let r = estimate_reliability(&[], 3, None, ReliabilityStrategy::Constant(0.9)).unwrap();
        assert_eq!(r.rel, 0.9);
        let all_majority = vec![answer(0, 1, true), answer(0, 1, true), answer(1, 2, false)];
        let r = estimate_reliability(
            &all_majority,
            3,
            None,
            ReliabilityStrategy::MajorityAgreement,
        )
        .unwrap();
        assert_eq!(r.rel, 1.0);
        // tied pair excluded: (0,1) 1-1, (1,2) 2-1 -> 2 of 3
        let mixed = vec![
            answer(0, 1, true),
            answer(0, 1, false),
            answer(1, 2, true),
            answer(1, 2, true),
            answer(1, 2, false),
        ];
        let r =
            estimate_reliability(&mixed, 3, None, ReliabilityStrategy::MajorityAgreement).unwrap();
        assert!((r.rel - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reliability_ranking_agreement() {
        let reference = RankResult::complete(vec![0, 1, 2, 3], 4).unwrap();
        let mut answers = Vec::new();
        for _ in 0..8 {
            answers.push(answer(0, 3, true));
        }
        answers.push(answer(1, 2, false));
        answers.push(answer(0, 2, false));
        let r = estimate_reliability(
            &answers,
            4,
            Some(&reference),
            ReliabilityStrategy::RankingAgreement,
        )
        .unwrap();
        assert!((r.rel - 0.8).abs() < 1e-12);
    }

    #[test]
    fn reliability_clamps_and_falls_back() {
        let reference = RankResult::complete(vec![0, 1], 2).unwrap();
        let wrong = vec![answer(0, 1, false); 4];
        let r = estimate_reliability(
            &wrong,
            2,
            Some(&reference),
            ReliabilityStrategy::RankingAgreement,
        )
        .unwrap();
        assert_eq!(r.rel, 0.5);
        assert!(!r.fallback);
        let r = estimate_reliability(
            &[],
            2,
            Some(&reference),
            ReliabilityStrategy::RankingAgreement,
        )
        .unwrap();
        assert_eq!(r.rel, 0.5);
        assert!(r.fallback);
        let r = estimate_reliability(&[], 2, None, ReliabilityStrategy::MajorityAgreement).unwrap();
        assert!(r.fallback);
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut rng = derive_rng(3, "t", 0);
        let one = PairwiseProbabilities::from_upper(2, |_, _| 1.0);
        let zero = PairwiseProbabilities::from_upper(2, |_, _| 0.0);
        for _ in 0..1000 {
            let a = sample_answer((0, 1), &one, &mut rng);
            assert_eq!((a.left, a.right, a.winner), (0, 1, Winner::Left));
            assert_eq!(a.worker, WorkerId::PREDICTED);
            assert_eq!(sample_answer((0, 1), &zero, &mut rng).winner, Winner::Right);
        }
    }

    #[test]
    fn bernoulli_frequency() {
        let mut rng = derive_rng(11, "t", 0);
        let p = PairwiseProbabilities::from_upper(2, |_, _| 0.7);
        let n = 100_000;
        let left = (0..n)
            .filter(|_| sample_answer((0, 1), &p, &mut rng).winner == Winner::Left)
            .count();
        let f = left as f64 / n as f64;
        assert!((f - 0.7).abs() < 0.01, "frequency {f}");
    }

    fn chain_log(n: usize, per_pair: usize, n_batch: usize) -> AnswerLog {
        let mut answers = Vec::new();
        for _ in 0..per_pair {
            for i in 0..n {
                for j in i + 1..n {
                    answers.push(answer(i, j, true));
                }
            }
        }
        AnswerLog::from_answers(n_batch, answers).unwrap()
    }

    #[test]
    fn next_batch_shape_and_determinism() {
        let log = chain_log(4, 1, 6);
        let cfg =
            ProcessConfig::new(60, 6, 0.1).with_reliability(ReliabilityStrategy::Constant(1.0));
        let a = predict_next_batch(
            &log,
            4,
            &Local,
            &RandomAssignment,
            &cfg,
            &mut derive_rng(1, "p", 0),
        )
        .unwrap();
        let b = predict_next_batch(
            &log,
            4,
            &Local,
            &RandomAssignment,
            &cfg,
            &mut derive_rng(1, "p", 0),
        )
        .unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
        assert_eq!(log.len(), 6);
    }

    #[test]
    fn dominant_direction_frequency() {
        let log = chain_log(4, 20, 6);
        let cfg =
            ProcessConfig::new(600, 6, 0.1).with_reliability(ReliabilityStrategy::Constant(1.0));
        let mut rng = derive_rng(2, "p", 0);
        let (mut agree, mut total) = (0usize, 0usize);
        for _ in 0..2000 {
            for a in predict_next_batch(&log, 4, &Local, &RandomAssignment, &cfg, &mut rng).unwrap()
            {
                total += 1;
                agree += usize::from(a.preferred() < a.rejected());
            }
        }
        let f = agree as f64 / total as f64;
        assert!((f - 21.0 / 22.0).abs() < 0.01, "frequency {f}");
    }

    #[test]
    fn complete_prediction_lengths() {
        let log = chain_log(4, 2, 6);
        let cfg = ProcessConfig::new(12, 6, 0.1);
        let out = predict_complete(
            &log,
            4,
            &Local,
            &RandomAssignment,
            &cfg,
            &mut derive_rng(0, "p", 0),
        )
        .unwrap();
        assert_eq!(out.log, log);
        assert_eq!(out.rankings.len(), 1);

        let cfg = ProcessConfig::new(24, 6, 0.1);
        let out = predict_complete(
            &log,
            4,
            &Local,
            &RandomAssignment,
            &cfg,
            &mut derive_rng(0, "p", 0),
        )
        .unwrap();
        assert_eq!(out.log.len(), 24);
        assert_eq!(out.rankings.len(), 3);
        assert!(out.log.answers()[12..]
            .iter()
            .all(|a| a.worker == WorkerId::PREDICTED));
    }

    #[test]
    fn consistent_history_keeps_ranking() {
        let log = chain_log(4, 20, 6);
        let cfg = ProcessConfig::new(log.len() + 60, 6, 0.1)
            .with_reliability(ReliabilityStrategy::Constant(1.0));
        for s in 0..20 {
            let out = predict_complete(
                &log,
                4,
                &Local,
                &RandomAssignment,
                &cfg,
                &mut derive_rng(s, "p", 0),
            )
            .unwrap();
            assert_eq!(out.rankings.len(), 11);
            assert!(out.rankings.iter().all(|r| r.order() == [0, 1, 2, 3]));
        }
    }

    #[test]
    fn unaligned_log_rejected() {
        let log = chain_log(3, 1, 2);
        let cfg = ProcessConfig::new(10, 2, 0.1);
        assert!(remaining_batches(&log, &cfg).is_err());
    }
}

//! Monte-Carlo estimates checked against exhaustive possible-world
//! enumeration, plus the boundary behaviour of the stop check.

use crowdstop::assignment::{AssignmentKind, AssignmentModule, TaskList};
use crowdstop::earlystop::{decide, monte_carlo, required_samples, Decision};
use crowdstop::inference::{Copeland, InferenceKind};
use crowdstop::rng::SimRng;
use crowdstop::{
    Answer, AnswerLog, ComparisonMatrix, Parallelism, ProcessConfig, ReliabilityStrategy,
    ScoreVector, Seed, WorkerId,
};

/// Always asks the same pairs, so the future is a fixed sequence of coin
/// flips whose biases depend only on the counts.
struct FixedTasks(Vec<(usize, usize)>);

impl AssignmentModule for FixedTasks {
    fn name(&self) -> &str {
        "Fixed"
    }

    fn assign(
        &self,
        _: &ComparisonMatrix,
        _: &ScoreVector,
        n: usize,
        _: &mut SimRng,
    ) -> crowdstop::Result<TaskList> {
        Ok(self.0.iter().copied().cycle().take(n).collect())
    }
}

const N: usize = 3;
const TASKS: [(usize, usize); 2] = [(0, 1), (1, 2)];
const REL: f64 = 0.8;

fn history() -> AnswerLog {
    let w = WorkerId(0);
    let answers = vec![
        Answer::preferring(w, 0, 1),
        Answer::preferring(w, 0, 1),
        Answer::preferring(w, 1, 2),
        Answer::preferring(w, 2, 0),
    ];
    AnswerLog::from_answers(2, answers).unwrap()
}

/// Copeland order written out independently: wins minus losses, ties to
/// the lower index.
fn copeland_order(c: &[[u32; N]; N]) -> [usize; N] {
    let score = |i: usize| (0..N).map(|j| c[i][j] as i64 - c[j][i] as i64).sum::<i64>();
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| score(b).cmp(&score(a)).then(a.cmp(&b)));
    order
}

fn kendall(a: &[usize; N], b: &[usize; N]) -> f64 {
    let pos = |r: &[usize; N], x: usize| r.iter().position(|&y| y == x).unwrap();
    let mut disc = 0;
    for x in 0..N {
        for y in x + 1..N {
            disc += u32::from((pos(a, x) < pos(a, y)) != (pos(b, x) < pos(b, y)));
        }
    }
    f64::from(disc) / 3.0
}

/// Exact `E[D(sigma_i, sigma_j)]` for `0 <= i < j <= 2` by enumerating all
/// 2^4 outcomes of the two predicted batches.
fn exhaustive_expectation() -> [[f64; 3]; 3] {
    let mut c = [[0u32; N]; N];
    for a in history().answers() {
        c[a.preferred()][a.rejected()] += 1;
    }
    let p_left = |c: &[[u32; N]; N], i: usize, j: usize| {
        let p = (f64::from(c[i][j]) + 1.0) / (f64::from(c[i][j]) + f64::from(c[j][i]) + 2.0);
        p * REL + (1.0 - p) * (1.0 - REL)
    };
    let sigma0 = copeland_order(&c);
    let mut e = [[0.0; 3]; 3];
    for first in 0..4u32 {
        let mut c1 = c;
        let mut w1 = 1.0;
        for (bit, &(i, j)) in TASKS.iter().enumerate() {
            let p = p_left(&c, i, j);
            if first >> bit & 1 == 1 {
                c1[i][j] += 1;
                w1 *= p;
            } else {
                c1[j][i] += 1;
                w1 *= 1.0 - p;
            }
        }
        let sigma1 = copeland_order(&c1);
        for second in 0..4u32 {
            let mut c2 = c1;
            let mut w2 = w1;
            for (bit, &(i, j)) in TASKS.iter().enumerate() {
                let p = p_left(&c1, i, j);
                if second >> bit & 1 == 1 {
                    c2[i][j] += 1;
                    w2 *= p;
                } else {
                    c2[j][i] += 1;
                    w2 *= 1.0 - p;
                }
            }
            let sigma2 = copeland_order(&c2);
            e[0][1] += w2 * kendall(&sigma0, &sigma1);
            e[0][2] += w2 * kendall(&sigma0, &sigma2);
            e[1][2] += w2 * kendall(&sigma1, &sigma2);
        }
    }
    e
}

fn small_cfg(theta: f64) -> ProcessConfig {
    ProcessConfig::new(8, 2, theta).with_reliability(ReliabilityStrategy::Constant(REL))
}

#[test]
fn exhaustive_oracle_is_nontrivial() {
    let e = exhaustive_expectation();
    assert!(e[0][1] > 0.05 && e[0][2] > 0.05, "{e:?}");
}

#[test]
fn sample_means_track_exhaustive_expectation() {
    let exact = exhaustive_expectation();
    let cfg = small_cfg(0.1).with_sample_cap(10_000);
    let assign = FixedTasks(TASKS.to_vec());
    let mut within = 0;
    for run in 0..100 {
        let report = monte_carlo(&history(), N, &Copeland, &assign, &cfg, Seed(run)).unwrap();
        assert_eq!((report.m, report.n_sample), (2, 10_000));
        assert!(report.weakened);
        let ok = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .all(|&(i, j)| (report.matrix.get(i, j) - exact[i][j]).abs() <= 0.02);
        within += usize::from(ok);
    }
    assert!(within >= 95, "{within} of 100 runs within 0.02");
}

#[test]
fn hoeffding_sample_count_bounds_the_failure_rate() {
    let exact = exhaustive_expectation();
    let cfg = small_cfg(0.5);
    let t = cfg.margin;
    assert_eq!(required_samples(2, cfg.alpha, t), 819);
    let assign = FixedTasks(TASKS.to_vec());
    let runs = 200;
    let mut failures = 0;
    for run in 0..runs {
        let report =
            monte_carlo(&history(), N, &Copeland, &assign, &cfg, Seed(1000 + run)).unwrap();
        assert!(!report.weakened);
        let fail = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .any(|&(i, j)| exact[i][j] > report.matrix.get(i, j) + t);
        failures += u32::from(fail);
    }
    assert!(
        f64::from(failures) <= cfg.alpha * runs as f64,
        "{failures} of {runs} runs undershot by more than t"
    );
}

#[test]
fn deterministic_history_stops_with_zero_distances() {
    let n = 4;
    let mut answers = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for _ in 0..20 {
                answers.push(Answer::preferring(WorkerId(1), i, j));
            }
        }
    }
    let log = AnswerLog::from_answers(4, answers).unwrap();
    let cfg = ProcessConfig::new(log.len() + 12, 4, 0.1)
        .with_reliability(ReliabilityStrategy::Constant(1.0))
        .with_sample_cap(2000);
    let inf = InferenceKind::Copeland.build(cfg.crowdbt_lambda);
    let asg = AssignmentKind::Random.build();
    let report = monte_carlo(&log, n, inf.as_ref(), asg.as_ref(), &cfg, Seed(3)).unwrap();
    assert_eq!(report.m, 3);
    assert!(report.max_distance() <= 1e-3, "{}", report.max_distance());
    assert_eq!(report.decision, Decision::Stop);
}

#[test]
fn exhausted_budget_is_a_trivial_stop() {
    let log = history();
    let cfg = ProcessConfig::new(log.len(), 2, 0.1);
    let report = monte_carlo(
        &log,
        N,
        &Copeland,
        &FixedTasks(TASKS.to_vec()),
        &cfg,
        Seed(0),
    )
    .unwrap();
    assert_eq!(report.m, 0);
    assert_eq!(report.n_sample, 0);
    assert!(report.is_stop());
    assert_eq!(report.matrix.entries().count(), 0);
}

#[test]
fn contested_log_continues() {
    let n = 5;
    let mut answers = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for r in 0..10 {
                answers.push(if r % 2 == 0 {
                    Answer::preferring(WorkerId(r), i, j)
                } else {
                    Answer::preferring(WorkerId(r), j, i)
                });
            }
        }
    }
    let log = AnswerLog::from_answers(10, answers).unwrap();
    let cfg = ProcessConfig::new(400, 10, 0.1).with_sample_cap(300);
    let inf = InferenceKind::Local.build(cfg.crowdbt_lambda);
    let asg = AssignmentKind::Random.build();
    let report = monte_carlo(&log, n, inf.as_ref(), asg.as_ref(), &cfg, Seed(8)).unwrap();
    assert_eq!(report.m, 30);
    assert!(report.max_distance() > cfg.theta - cfg.margin);
    assert_eq!(report.decision, Decision::Continue);
}

#[test]
fn unaligned_or_oversized_logs_are_rejected() {
    let mut log = history();
    log.push(Answer::preferring(WorkerId(0), 0, 2));
    let cfg = small_cfg(0.1);
    assert!(monte_carlo(
        &log,
        N,
        &Copeland,
        &FixedTasks(TASKS.to_vec()),
        &cfg,
        Seed(0)
    )
    .is_err());
    let cfg = ProcessConfig::new(2, 2, 0.1);
    assert!(monte_carlo(
        &history(),
        N,
        &Copeland,
        &FixedTasks(TASKS.to_vec()),
        &cfg,
        Seed(0)
    )
    .is_err());
}

#[test]
fn sequential_and_parallel_estimates_agree_exactly() {
    let mut cfg = ProcessConfig::new(200, 10, 0.2).with_sample_cap(500);
    let mut answers = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            answers.push(Answer::preferring(WorkerId(0), i.max(j), i.min(j)));
        }
    }
    answers.extend_from_slice(&answers.clone()[..5]);
    let log = AnswerLog::from_answers(10, answers).unwrap();
    let inf = InferenceKind::CrowdBt.build(cfg.crowdbt_lambda);
    let asg = AssignmentKind::Greedy.build();
    cfg.parallelism = Parallelism::Sequential;
    let a = monte_carlo(&log, 6, inf.as_ref(), asg.as_ref(), &cfg, Seed(4)).unwrap();
    cfg.parallelism = Parallelism::Parallel;
    let b = monte_carlo(&log, 6, inf.as_ref(), asg.as_ref(), &cfg, Seed(4)).unwrap();
    assert_eq!(a.matrix, b.matrix);
    assert_eq!(a.csv_row(), b.csv_row());
}

#[test]
fn decision_is_a_function_of_the_matrix_and_thresholds() {
    let cfg = small_cfg(0.3).with_sample_cap(400);
    let report = monte_carlo(
        &history(),
        N,
        &Copeland,
        &FixedTasks(TASKS.to_vec()),
        &cfg,
        Seed(1),
    )
    .unwrap();
    assert_eq!(
        decide(&report.matrix, cfg.theta, cfg.margin),
        report.decision
    );
    let max = report.max_distance();
    assert_eq!(decide(&report.matrix, max + 0.01, 0.01), Decision::Stop);
    assert_eq!(decide(&report.matrix, max, 0.01), Decision::Continue);
    let row = report.csv_row();
    assert_eq!(
        row.split(',').count(),
        crowdstop::earlystop::StopReport::CSV_HEADER
            .split(',')
            .count()
    );
}

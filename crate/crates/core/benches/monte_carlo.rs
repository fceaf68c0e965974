//! Sequential versus rayon-parallel Monte-Carlo stop checks on a noisy
//! 12-object log.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crowdstop::assignment::AssignmentKind;
use crowdstop::earlystop::monte_carlo;
use crowdstop::inference::InferenceKind;
use crowdstop::{Answer, AnswerLog, Parallelism, ProcessConfig, Seed, WorkerId};

fn noisy_log(n: usize, n_batch: usize) -> AnswerLog {
    let mut answers = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for r in 0..4u32 {
                let a = if (i + j + r as usize) % 4 == 0 {
                    Answer::preferring(WorkerId(r), j, i)
                } else {
                    Answer::preferring(WorkerId(r), i, j)
                };
                answers.push(a);
            }
        }
    }
    let keep = answers.len() / n_batch * n_batch;
    answers.truncate(keep);
    AnswerLog::from_answers(n_batch, answers).unwrap()
}

fn bench(c: &mut Criterion) {
    let n = 12;
    let n_batch = 22;
    let log = noisy_log(n, n_batch);
    let inf = InferenceKind::Local.build(0.01);
    let asg = AssignmentKind::Random.build();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for mode in [Parallelism::Sequential, Parallelism::Parallel] {
        let mut cfg =
            ProcessConfig::new(log.len() + 10 * n_batch, n_batch, 0.05).with_sample_cap(1000);
        cfg.parallelism = mode;
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &cfg,
            |b, cfg| {
                b.iter(|| monte_carlo(&log, n, inf.as_ref(), asg.as_ref(), cfg, Seed(1)).unwrap())
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

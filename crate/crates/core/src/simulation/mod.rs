//! Dataset replay, synthetic worlds and the experiment runner.

mod dataset;
mod experiment;
mod pool;

pub use dataset::{
    load_dataset, read_answers, read_answers_from, read_log, read_truth, read_truth_from,
    write_answers, ANSWERS_HEADER, TRUTH_HEADER,
};
pub use experiment::{
    cold_start, run_experiment, run_repetition, CriterionStop, ExperimentResult, ExperimentSpec,
    RankProcess, Repetition, ResultRow, CURVE_HEADER, DEFAULT_REPETITIONS, RESULTS_HEADER,
};
pub use pool::{
    bt_probability, draw_answer, generate_synthetic, AccuracyDist, AnswerPool, RegimeSwitch,
    SyntheticSpec, TrueScores, WorkerStats,
};

//! Early stopping for crowdsourced ranking from pairwise comparisons.
//!
//! A ranking process repeatedly assigns a batch of comparison tasks, folds
//! the answers into a [`ComparisonMatrix`] and infers a ranking. The
//! [`earlystop`] module decides, after each batch, whether predicted future
//! answers could still move the ranking by more than a tolerance `theta`; if
//! not, the rest of the budget can be saved.
//!
//! ```
//! use crowdstop::{ComparisonMatrix, Query};
//! use crowdstop::inference::{InferenceModule, Local};
//!
//! let mut m = ComparisonMatrix::zeros(3);
//! m.record(2, 0);
//! m.record(2, 1);
//! m.record(0, 1);
//! let r = Local.infer(&m, Query::Complete).unwrap();
//! assert_eq!(r.ranking.order(), [2, 0, 1]);
//! ```

pub mod assignment;
pub mod config;
pub mod distance;
pub mod domain;
pub mod earlystop;
pub mod error;
pub mod exec;
pub mod inference;
pub mod prediction;
pub mod rng;
pub mod simulation;

pub use config::{ProcessConfig, Query, ReliabilityStrategy};
pub use domain::{
    all_pairs, fold_answers, pair_count, Answer, AnswerLog, ComparisonMatrix, ObjectSet, Pair,
    RankKind, RankResult, ScoreVector, Winner, WorkerId,
};
pub use error::{Error, Result};
pub use exec::Parallelism;
pub use rng::{Seed, SimRng};

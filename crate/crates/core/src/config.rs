use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Complete,
    TopK(usize),
}

impl Query {
    pub fn is_top_k(self) -> bool {
        matches!(self, Query::TopK(_))
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Complete => write!(f, "complete"),
            Query::TopK(k) => write!(f, "top-{k}"),
        }
    }
}

impl FromStr for Query {
    type Err = Error;

    /// `complete`, `top-10`, `top10` or `topk:10`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "complete" || t == "ranking" {
            return Ok(Query::Complete);
        }
        let digits = t
            .strip_prefix("top-")
            .or_else(|| t.strip_prefix("topk:"))
            .or_else(|| t.strip_prefix("top"))
            .ok_or_else(|| Error::Config(format!("unknown query `{s}`")))?;
        digits
            .parse()
            .map(Query::TopK)
            .map_err(|_| Error::Config(format!("bad k in query `{s}`")))
    }
}

/// How the prediction model estimates the reliability of future workers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ReliabilityStrategy {
    /// A fixed platform quality bound.
    Constant(f64),
    /// Agreement with the per-pair majority of the collected answers.
    MajorityAgreement,
    /// Agreement with the current inferred ranking.
    #[default]
    RankingAgreement,
}

impl fmt::Display for ReliabilityStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReliabilityStrategy::Constant(c) => write!(f, "constant:{c}"),
            ReliabilityStrategy::MajorityAgreement => write!(f, "majority-agreement"),
            ReliabilityStrategy::RankingAgreement => write!(f, "ranking-agreement"),
        }
    }
}

impl FromStr for ReliabilityStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "majority-agreement" | "majority" => Ok(Self::MajorityAgreement),
            "ranking-agreement" | "ranking" => Ok(Self::RankingAgreement),
            _ => {
                let c = t
                    .strip_prefix("constant:")
                    .ok_or_else(|| Error::Config(format!("unknown reliability strategy `{s}`")))?;
                let c: f64 = c
                    .parse()
                    .map_err(|_| Error::Config(format!("bad constant reliability `{s}`")))?;
                if !(0.5..=1.0).contains(&c) {
                    return Err(Error::Config(format!(
                        "constant reliability must lie in [0.5, 1], got {c}"
                    )));
                }
                Ok(Self::Constant(c))
            }
        }
    }
}

/// Parameters of one crowdsourced ranking process and its early-stopping
/// check.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessConfig {
    /// Total number of answers `B`, cold-start answers included.
    pub budget: usize,
    pub n_batch: usize,
    /// Accuracy tolerance.
    pub theta: f64,
    /// Overall failure probability shared by all expected-distance checks.
    pub alpha: f64,
    /// Hoeffding margin `t`, `0 < t < theta`.
    pub margin: f64,
    pub query: Query,
    pub seed: u64,
    pub n_sample_override: Option<u64>,
    pub reliability: ReliabilityStrategy,
    /// L2 regularization of the Bradley-Terry fit.
    pub crowdbt_lambda: f64,
    /// Pre-generate one answer per pair before the first assigned batch.
    pub cold_start: bool,
    pub parallelism: Parallelism,
}

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_CROWDBT_LAMBDA: f64 = 0.01;

impl ProcessConfig {
    /// Defaults: `alpha = 0.05`, `margin = theta / 10`, complete ranking.
    pub fn new(budget: usize, n_batch: usize, theta: f64) -> Self {
        Self {
            budget,
            n_batch,
            theta,
            alpha: DEFAULT_ALPHA,
            margin: theta / 10.0,
            query: Query::Complete,
            seed: 0,
            n_sample_override: None,
            reliability: ReliabilityStrategy::default(),
            crowdbt_lambda: DEFAULT_CROWDBT_LAMBDA,
            cold_start: true,
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_query(mut self, query: Query) -> Self {
        self.query = query;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sample_cap(mut self, cap: u64) -> Self {
        self.n_sample_override = Some(cap);
        self
    }

    pub fn with_reliability(mut self, r: ReliabilityStrategy) -> Self {
        self.reliability = r;
        self
    }

    /// Sets `theta` and resets the margin to `theta / 10`.
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self.margin = theta / 10.0;
        self
    }

    /// `B / n_batch`, the index of the final checkpoint.
    pub fn total_batches(&self) -> usize {
        self.budget / self.n_batch
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_batch == 0 {
            return Err(Error::Config("n_batch must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if !self.budget.is_multiple_of(self.n_batch) {
            return Err(Error::Config(format!(
                "budget {} is not a multiple of n_batch {}",
                self.budget, self.n_batch
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.margin > 0.0 && self.margin < self.theta) {
            return Err(Error::Config(format!(
                "margin t must satisfy 0 < t < theta, got t = {} with theta = {}",
                self.margin, self.theta
            )));
        }
        if let Query::TopK(k) = self.query {
            if k < 2 {
                return Err(Error::Config(format!("top-k needs k >= 2, got {k}")));
            }
        }
        if self.n_sample_override == Some(0) {
            return Err(Error::Config("n_sample_override must be positive".into()));
        }
        if !(self.crowdbt_lambda > 0.0) {
            return Err(Error::Config("crowdbt_lambda must be positive".into()));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus checks that depend on the object
    /// count.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if let Query::TopK(k) = self.query {
            if k > n {
                return Err(Error::Config(format!(
                    "top-{k} query over only {n} objects"
                )));
            }
        }
        Ok(())
    }
}

//! TOML run configuration and flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use crowdstop::earlystop::Criterion;
use crowdstop::simulation::{
    generate_synthetic, load_dataset, AccuracyDist, AnswerPool, ExperimentSpec, RankProcess,
    RegimeSwitch, SyntheticSpec, TrueScores, DEFAULT_REPETITIONS,
};
use crowdstop::{ProcessConfig, Query, ReliabilityStrategy};

pub const OUT_ENV: &str = "CROWDSTOP_OUT";
pub const DEFAULT_OUT: &str = "out";

/// File-level configuration. Every field is optional; unset fields fall back
/// to the library defaults.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub process: Option<String>,
    pub criteria: Option<Vec<String>>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub n_batch: Option<usize>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub margin: Option<f64>,
    pub query: Option<String>,
    pub n_sample_override: Option<u64>,
    pub reliability: Option<String>,
    pub crowdbt_lambda: Option<f64>,
    pub cold_start: Option<bool>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub data: Option<DataTable>,
    pub synthetic: Option<SyntheticTable>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataTable {
    pub answers: PathBuf,
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTable {
    pub n: usize,
    /// Explicit scores; random normal scores with `score_sd` otherwise.
    pub scores: Option<Vec<f64>>,
    pub score_sd: Option<f64>,
    pub accuracy: Option<f64>,
    pub accuracy_range: Option<[f64; 2]>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub switch_at: Option<usize>,
    pub switch_scores: Option<Vec<f64>>,
}

/// Values given on the command line, which win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub theta: Option<f64>,
    pub criteria: Vec<String>,
    pub process: Option<String>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    /// Reads `path`; relative data paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if let Some(d) = cfg.data.as_mut() {
            d.answers = base.join(&d.answers);
            d.truth = base.join(&d.truth);
        }
        if let Some(out) = cfg.out.as_mut() {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Applies `o` on top of the file values.
    pub fn merged(mut self, o: &Overrides) -> Self {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.theta.is_some() {
            self.theta = o.theta;
        }
        if !o.criteria.is_empty() {
            self.criteria = Some(o.criteria.clone());
        }
        if o.process.is_some() {
            self.process = o.process.clone();
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        self
    }

    /// Output directory: config value, then the environment, then `out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn process(&self) -> Result<RankProcess> {
        let name = self.process.as_deref().unwrap_or("Local-Random");
        name.parse().map_err(|e| anyhow!("{e}"))
    }

    pub fn criteria(&self) -> Result<Vec<Criterion>> {
        match &self.criteria {
            None => Ok(vec![Criterion::EarlyStop]),
            Some(list) => list
                .iter()
                .map(|c| c.parse().map_err(|e| anyhow!("{e}")))
                .collect(),
        }
    }

    pub fn process_config(&self) -> Result<ProcessConfig> {
        let budget = self.budget.ok_or_else(|| anyhow!("`budget` is not set"))?;
        let n_batch = self
            .n_batch
            .ok_or_else(|| anyhow!("`n_batch` is not set"))?;
        let theta = self.theta.unwrap_or(0.1);
        let mut cfg = ProcessConfig::new(budget, n_batch, theta);
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(t) = self.margin {
            cfg.margin = t;
        }
        if let Some(q) = &self.query {
            cfg.query = q.parse::<Query>().map_err(|e| anyhow!("{e}"))?;
        }
        cfg.n_sample_override = self.n_sample_override;
        if let Some(r) = &self.reliability {
            cfg.reliability = r
                .parse::<ReliabilityStrategy>()
                .map_err(|e| anyhow!("{e}"))?;
        }
        if let Some(l) = self.crowdbt_lambda {
            cfg.crowdbt_lambda = l;
        }
        if let Some(c) = self.cold_start {
            cfg.cold_start = c;
        }
        cfg.seed = self.seed.unwrap_or(0);
        cfg.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(cfg)
    }

    pub fn pool(&self) -> Result<AnswerPool> {
        match (&self.data, &self.synthetic) {
            (Some(_), Some(_)) => bail!("config sets both [data] and [synthetic]"),
            (None, None) => bail!("config needs a [data] or [synthetic] table"),
            (Some(d), None) => load_dataset(&d.answers, &d.truth).map_err(|e| anyhow!("{e}")),
            (None, Some(s)) => generate_synthetic(&s.to_spec()?).map_err(|e| anyhow!("{e}")),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(
            self.process()?,
            self.process_config()?,
            self.criteria()?,
            self.pool()?,
        );
        spec.repetitions = self.repetitions.unwrap_or(DEFAULT_REPETITIONS);
        spec.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(spec)
    }
}

impl SyntheticTable {
    pub fn to_spec(&self) -> Result<SyntheticSpec> {
        let scores = match (&self.scores, self.score_sd) {
            (Some(_), Some(_)) => bail!("[synthetic] sets both `scores` and `score_sd`"),
            (Some(s), None) => TrueScores::Given(s.clone()),
            (None, sd) => TrueScores::Random {
                sd: sd.unwrap_or(1.0),
            },
        };
        let accuracy = match (self.accuracy, self.accuracy_range) {
            (Some(_), Some(_)) => bail!("[synthetic] sets both `accuracy` and `accuracy_range`"),
            (Some(a), None) => AccuracyDist::Fixed(a),
            (None, Some([lo, hi])) => AccuracyDist::Uniform(lo, hi),
            (None, None) => AccuracyDist::Fixed(1.0),
        };
        let mut spec = SyntheticSpec::new(self.n, scores, accuracy, self.seed.unwrap_or(0));
        if let Some(w) = self.workers {
            spec.workers = w;
        }
        spec.switch = match (self.switch_at, &self.switch_scores) {
            (Some(at_answer), Some(scores)) => Some(RegimeSwitch {
                at_answer,
                scores: scores.clone(),
            }),
            (None, None) => None,
            _ => bail!("[synthetic] needs both `switch_at` and `switch_scores`"),
        };
        Ok(spec)
    }
}

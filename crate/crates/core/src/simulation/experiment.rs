//! Simulated collection runs and the evaluation of stopping criteria on
//! them.
//!
//! A repetition streams answers into one flat log: the cold-start answers
//! first, then assigned tasks. Checkpoint `c` is reached when the log holds
//! `c * n_batch` answers, so the first assigned batch may be shortened to
//! top up a partial cold-start batch. Every criterion is evaluated at every
//! checkpoint in shadow mode and only observes the process.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::assignment::{AssignmentKind, AssignmentModule};
use crate::config::{ProcessConfig, Query};
use crate::distance::distance;
use crate::domain::{all_pairs, pair_count, AnswerLog, ComparisonMatrix, RankResult};
use crate::earlystop::{
    evaluate, monte_carlo, moving_average, stable_state, weighted_moving_average, Criterion,
};
use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::inference::{InferenceKind, InferenceModule};
use crate::rng::{Seed, SimRng};

use super::pool::AnswerPool;

pub const DEFAULT_REPETITIONS: usize = 10;

/// An inference module paired with an assignment module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankProcess {
    pub inference: InferenceKind,
    pub assignment: AssignmentKind,
}

impl RankProcess {
    pub const fn new(inference: InferenceKind, assignment: AssignmentKind) -> Self {
        Self {
            inference,
            assignment,
        }
    }

    /// The seven combinations evaluated in the experiments.
    pub const STANDARD: [RankProcess; 7] = [
        RankProcess::new(InferenceKind::Copeland, AssignmentKind::Random),
        RankProcess::new(InferenceKind::Iterative, AssignmentKind::Random),
        RankProcess::new(InferenceKind::Local, AssignmentKind::Random),
        RankProcess::new(InferenceKind::CrowdBt, AssignmentKind::Random),
        RankProcess::new(InferenceKind::Local, AssignmentKind::Greedy),
        RankProcess::new(InferenceKind::Local, AssignmentKind::Complete),
        RankProcess::new(InferenceKind::CrowdBt, AssignmentKind::Active),
    ];

    pub fn top_k_only(self) -> bool {
        self.inference.top_k_only() || self.assignment.top_k_only()
    }
}

impl fmt::Display for RankProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.inference, self.assignment)
    }
}

impl FromStr for RankProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (inf, asg) = s.split_once('-').ok_or_else(|| {
            Error::Config(format!(
                "process `{s}` is not of the form Inference-Assignment"
            ))
        })?;
        Ok(Self::new(inf.parse()?, asg.parse()?))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub process: RankProcess,
    pub cfg: ProcessConfig,
    pub criteria: Vec<Criterion>,
    pub repetitions: usize,
    pub pool: AnswerPool,
}

impl ExperimentSpec {
    pub fn new(
        process: RankProcess,
        cfg: ProcessConfig,
        criteria: Vec<Criterion>,
        pool: AnswerPool,
    ) -> Self {
        Self {
            process,
            cfg,
            criteria,
            repetitions: DEFAULT_REPETITIONS,
            pool,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate_for(self.pool.n())?;
        if self.process.top_k_only() && self.cfg.query == Query::Complete {
            return Err(Error::Unsupported(format!(
                "{} only answers top-k queries",
                self.process
            )));
        }
        if let (InferenceKind::Iterative, Query::TopK(k)) = (self.process.inference, self.cfg.query)
        {
            if k >= self.pool.n() {
                return Err(Error::Config(format!(
                    "Iterative needs k < n, got k = {k} with n = {}",
                    self.pool.n()
                )));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if self.cfg.cold_start && pair_count(self.pool.n()) > self.cfg.budget {
            return Err(Error::Config(format!(
                "cold start needs {} answers, more than the budget {}",
                pair_count(self.pool.n()),
                self.cfg.budget
            )));
        }
        Ok(())
    }
}

/// One answer per unordered pair, in lexicographic pair order.
pub fn cold_start(pool: &mut AnswerPool, n_batch: usize, rng: &mut SimRng) -> Result<AnswerLog> {
    let mut log = AnswerLog::new(n_batch)?;
    for pair in all_pairs(pool.n()) {
        log.push(pool.draw(pair, rng));
    }
    Ok(log)
}

/// Checkpoint at which a criterion first fired, `None` if it never did.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionStop {
    pub criterion: Criterion,
    pub stop: Option<usize>,
}

/// A finished collection run.
#[derive(Debug, Clone)]
pub struct Repetition {
    pub log: AnswerLog,
    /// `rankings[c - 1]` is the ranking at checkpoint `c`.
    pub rankings: Vec<RankResult>,
    pub stops: Vec<CriterionStop>,
    pub p_optimal: usize,
    /// Distance of each checkpoint's ranking to the final one.
    pub curve: Vec<f64>,
}

impl Repetition {
    pub fn total_batches(&self) -> usize {
        self.rankings.len()
    }

    /// Stopping checkpoint, the final one when the criterion never fired.
    pub fn p_sc(&self, criterion: Criterion) -> Option<usize> {
        self.stops
            .iter()
            .find(|s| s.criterion == criterion)
            .map(|s| s.stop.unwrap_or(self.total_batches()))
    }
}

struct Modules {
    inference: Box<dyn InferenceModule>,
    assignment: Box<dyn AssignmentModule>,
}

/// Runs repetition `rep` of `spec` to the full budget.
pub fn run_repetition(spec: &ExperimentSpec, rep: usize) -> Result<Repetition> {
    let cfg = &spec.cfg;
    let modules = Modules {
        inference: spec.process.inference.build(cfg.crowdbt_lambda),
        assignment: spec.process.assignment.build(),
    };
    let n = spec.pool.n();
    let run = Seed(cfg.seed).child("run", rep as u64);
    let mut pool = spec.pool.clone();
    let mut draw_rng = run.rng("draw", 0);
    let mut assign_rng = run.rng("assign", 0);

    let mut state = Collector {
        spec,
        modules: &modules,
        run,
        log: AnswerLog::new(cfg.n_batch)?,
        matrix: ComparisonMatrix::zeros(n),
        rankings: Vec::with_capacity(cfg.total_batches()),
        stops: spec
            .criteria
            .iter()
            .map(|&criterion| CriterionStop {
                criterion,
                stop: None,
            })
            .collect(),
    };

    if cfg.cold_start {
        let mut cold_rng = run.rng("cold", 0);
        let cold = cold_start(&mut pool, cfg.n_batch, &mut cold_rng)?;
        for a in cold.answers() {
            state.push(*a)?;
        }
    }
    while state.log.len() < cfg.budget {
        let current = modules.inference.infer(&state.matrix, cfg.query)?;
        let tasks = modules.assignment.assign(
            &state.matrix,
            &current.scores,
            cfg.n_batch,
            &mut assign_rng,
        )?;
        let need = cfg.n_batch - state.log.len() % cfg.n_batch;
        if tasks.len() < need {
            return Err(Error::Config(format!(
                "{} returned {} tasks, expected {need}",
                modules.assignment.name(),
                tasks.len()
            )));
        }
        for &pair in &tasks[..need] {
            let a = pool.draw(pair, &mut draw_rng);
            state.push(a)?;
        }
    }

    let Collector {
        log,
        rankings,
        stops,
        ..
    } = state;
    let p_optimal = stable_state(&rankings, cfg.theta)?;
    let last = rankings.last().expect("at least one checkpoint");
    let curve = rankings
        .iter()
        .map(|r| distance(r, last).map(|d| d.value()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Repetition {
        log,
        rankings,
        stops,
        p_optimal,
        curve,
    })
}

struct Collector<'a> {
    spec: &'a ExperimentSpec,
    modules: &'a Modules,
    run: Seed,
    log: AnswerLog,
    matrix: ComparisonMatrix,
    rankings: Vec<RankResult>,
    stops: Vec<CriterionStop>,
}

impl Collector<'_> {
    fn push(&mut self, a: crate::domain::Answer) -> Result<()> {
        self.matrix.add(&a)?;
        self.log.push(a);
        if self.log.len().is_multiple_of(self.spec.cfg.n_batch) {
            self.checkpoint()?;
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<()> {
        let cfg = &self.spec.cfg;
        let c = self.log.len() / cfg.n_batch;
        let inferred = self.modules.inference.infer(&self.matrix, cfg.query)?;
        self.rankings.push(inferred.ranking);
        for slot in self.stops.iter_mut().filter(|s| s.stop.is_none()) {
            let fired = match slot.criterion {
                Criterion::EarlyStop => monte_carlo(
                    &self.log,
                    self.matrix.n(),
                    self.modules.inference.as_ref(),
                    self.modules.assignment.as_ref(),
                    cfg,
                    self.run.child("es", c as u64),
                )?
                .is_stop(),
                Criterion::MovingAverage(w) => {
                    moving_average(&self.rankings, w, c)?.is_some_and(|v| v < cfg.theta)
                }
                Criterion::WeightedMovingAverage(w) => {
                    weighted_moving_average(&self.rankings, w, c)?.is_some_and(|v| v < cfg.theta)
                }
            };
            if fired {
                slot.stop = Some(c);
            }
        }
        Ok(())
    }
}

/// One line of the results table; `rep = None` marks the average row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub process: String,
    pub criterion: String,
    pub theta: f64,
    pub rep: Option<usize>,
    pub p_sc: f64,
    pub p_optimal: f64,
    pub delta_sc: f64,
    pub used_budget: f64,
    pub actual_error: f64,
}

pub const RESULTS_HEADER: &str =
    "process,criterion,theta,rep,p_sc,p_optimal,delta_sc,used_budget,actual_error";
pub const CURVE_HEADER: &str = "process,rep,checkpoint,distance_to_final";

impl ResultRow {
    pub fn csv_row(&self) -> String {
        let rep = self.rep.map_or_else(|| "avg".to_owned(), |r| r.to_string());
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            self.process,
            self.criterion,
            self.theta,
            rep,
            self.p_sc,
            self.p_optimal,
            self.delta_sc,
            self.used_budget,
            self.actual_error
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub process: RankProcess,
    pub theta: f64,
    pub repetitions: Vec<Repetition>,
    /// Per-repetition rows grouped by criterion, each group followed by its
    /// average row.
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    /// Average row for `criterion`.
    pub fn average(&self, criterion: Criterion) -> Option<&ResultRow> {
        let name = criterion.to_string();
        self.rows
            .iter()
            .find(|r| r.rep.is_none() && r.criterion == name)
    }

    pub fn write_results<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "{RESULTS_HEADER}")?;
        }
        for r in &self.rows {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }

    pub fn write_curves<W: Write>(&self, mut out: W, header: bool) -> Result<()> {
        if header {
            writeln!(out, "{CURVE_HEADER}")?;
        }
        for (rep, r) in self.repetitions.iter().enumerate() {
            for (c, d) in r.curve.iter().enumerate() {
                writeln!(out, "{},{rep},{},{d:.6}", self.process, c + 1)?;
            }
        }
        Ok(())
    }
}

/// Runs every repetition and evaluates each criterion against the
/// stable-state oracle.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let reps = map_ordered(spec.cfg.parallelism, spec.repetitions, |r| {
        run_repetition(spec, r).map_err(|e| Error::Repetition {
            rep: r,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let total = spec.cfg.total_batches();
    let process = spec.process.to_string();
    let mut rows = Vec::new();
    for &criterion in &spec.criteria {
        let mut group = Vec::with_capacity(reps.len());
        for (r, rep) in reps.iter().enumerate() {
            let p_sc = rep.p_sc(criterion).expect("criterion evaluated");
            let last = rep.rankings.last().expect("at least one checkpoint");
            let e = evaluate(p_sc, rep.p_optimal, &rep.rankings[p_sc - 1], last, total)?;
            group.push(ResultRow {
                process: process.clone(),
                criterion: criterion.to_string(),
                theta: spec.cfg.theta,
                rep: Some(r),
                p_sc: p_sc as f64,
                p_optimal: rep.p_optimal as f64,
                delta_sc: e.delta_sc,
                used_budget: e.used_budget,
                actual_error: e.actual_error,
            });
        }
        let k = group.len() as f64;
        let mean = |f: fn(&ResultRow) -> f64| group.iter().map(f).sum::<f64>() / k;
        let avg = ResultRow {
            process: process.clone(),
            criterion: criterion.to_string(),
            theta: spec.cfg.theta,
            rep: None,
            p_sc: mean(|r| r.p_sc),
            p_optimal: mean(|r| r.p_optimal),
            delta_sc: mean(|r| r.delta_sc),
            used_budget: mean(|r| r.used_budget),
            actual_error: mean(|r| r.actual_error),
        };
        rows.extend(group);
        rows.push(avg);
    }
    Ok(ExperimentResult {
        process: spec.process,
        theta: spec.cfg.theta,
        repetitions: reps,
        rows,
    })
}

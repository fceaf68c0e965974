use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use crowdstop::earlystop::{
    monte_carlo, savings, stable_state, stable_state_from_curve, StopReport,
};
use crowdstop::simulation::{
    read_log, read_truth, run_experiment, ExperimentResult, ExperimentSpec, CURVE_HEADER,
    RESULTS_HEADER,
};
use crowdstop::{ComparisonMatrix, Query, RankResult, Seed};

use crate::config::FileConfig;

fn lib<T>(r: crowdstop::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("{e}"))
}

fn create_file(dir: &Path, name: &str) -> Result<(PathBuf, fs::File)> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    let f = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok((path, f))
}

/// Paths written by a command.
#[derive(Debug, Default)]
pub struct Written(pub Vec<PathBuf>);

/// Per-criterion averages as an aligned text table.
pub fn summary_table(result: &ExperimentResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:<9} {:>8} {:>9} {:>9} {:>11} {:>12}",
        "process", "criterion", "p_sc", "p_optimal", "delta_sc", "used_budget", "actual_error"
    );
    for r in result.rows.iter().filter(|r| r.rep.is_none()) {
        let _ = writeln!(
            s,
            "{:<24} {:<9} {:>8.2} {:>9.2} {:>9.4} {:>11.4} {:>12.4}",
            r.process, r.criterion, r.p_sc, r.p_optimal, r.delta_sc, r.used_budget, r.actual_error
        );
    }
    s
}

/// Runs the configured experiment and writes `results.csv` and
/// `curves.csv` under `out`.
pub fn cmd_run(cfg: &FileConfig) -> Result<(ExperimentResult, Written)> {
    let spec = cfg.experiment()?;
    let result = lib(run_experiment(&spec))?;
    let out = cfg.out_dir();
    let (rp, rf) = create_file(&out, "results.csv")?;
    lib(result.write_results(std::io::BufWriter::new(rf), true))?;
    let (cp, cf) = create_file(&out, "curves.csv")?;
    lib(result.write_curves(std::io::BufWriter::new(cf), true))?;
    Ok((result, Written(vec![rp, cp])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K,
    NBatch,
    Budget,
    Theta,
}

impl std::str::FromStr for SweepAxis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepAxis::K),
            "n_batch" => Ok(SweepAxis::NBatch),
            "B" | "budget" => Ok(SweepAxis::Budget),
            "theta" => Ok(SweepAxis::Theta),
            _ => bail!("unknown sweep axis `{s}` (expected k, n_batch, B or theta)"),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::NBatch => "n_batch",
            SweepAxis::Budget => "B",
            SweepAxis::Theta => "theta",
        }
    }

    fn apply(self, spec: &mut ExperimentSpec, value: &str) -> Result<()> {
        let int = || -> Result<usize> {
            value
                .parse()
                .map_err(|_| anyhow!("`{value}` is not a positive integer"))
        };
        match self {
            SweepAxis::K => spec.cfg.query = Query::TopK(int()?),
            SweepAxis::NBatch => spec.cfg.n_batch = int()?,
            SweepAxis::Budget => spec.cfg.budget = int()?,
            SweepAxis::Theta => {
                let t: f64 = value
                    .parse()
                    .map_err(|_| anyhow!("`{value}` is not a number"))?;
                let ratio = spec.cfg.margin / spec.cfg.theta;
                spec.cfg.theta = t;
                spec.cfg.margin = t * ratio;
            }
        }
        lib(spec.validate())
    }
}

pub const SWEEP_HEADER_PREFIX: &str = "axis,value,";

/// One experiment per axis value, merged into `sweep.csv` (one block per
/// value) and `sweep_curves.csv`. Invalid values are skipped and recorded
/// in the `note` column.
pub fn cmd_sweep(cfg: &FileConfig, axis: SweepAxis, values: &[String]) -> Result<(usize, Written)> {
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    let base = cfg.experiment()?;
    let out = cfg.out_dir();
    let (rp, rf) = create_file(&out, "sweep.csv")?;
    let (cp, cf) = create_file(&out, "sweep_curves.csv")?;
    let mut rw = std::io::BufWriter::new(rf);
    let mut cw = std::io::BufWriter::new(cf);
    writeln!(rw, "{SWEEP_HEADER_PREFIX}{RESULTS_HEADER},note")?;
    writeln!(cw, "{SWEEP_HEADER_PREFIX}{CURVE_HEADER}")?;
    let blank = ",".repeat(RESULTS_HEADER.matches(',').count());
    let mut blocks = 0;
    for v in values {
        let mut spec = base.clone();
        if let Err(e) = axis.apply(&mut spec, v) {
            log::warn!("skipping {}={v}: {e}", axis.name());
            writeln!(
                rw,
                "{},{v},{blank},skipped: {}",
                axis.name(),
                csv_text(&e.to_string())
            )?;
            continue;
        }
        let result = lib(run_experiment(&spec))?;
        let mut rows = Vec::new();
        lib(result.write_results(&mut rows, false))?;
        for line in String::from_utf8(rows)?.lines() {
            writeln!(rw, "{},{v},{line},", axis.name())?;
        }
        let mut curves = Vec::new();
        lib(result.write_curves(&mut curves, false))?;
        for line in String::from_utf8(curves)?.lines() {
            writeln!(cw, "{},{v},{line}", axis.name())?;
        }
        blocks += 1;
    }
    rw.flush()?;
    cw.flush()?;
    Ok((blocks, Written(vec![rp, cp])))
}

fn csv_text(s: &str) -> String {
    s.replace([',', '\n', '"'], " ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub process: String,
    pub rep: String,
    pub p_optimal: usize,
    pub total_batches: usize,
    pub savings: f64,
}

pub const ORACLE_HEADER: &str = "process,rep,p_optimal,total_batches,savings";

impl OracleRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6}",
            self.process, self.rep, self.p_optimal, self.total_batches, self.savings
        )
    }
}

/// Stable state of each run in a curve CSV (`process,rep,checkpoint,
/// distance_to_final`). Each run must list checkpoints `1..=F` in order and
/// end at distance 0.
pub fn oracle_from_curve(text: &str, theta: f64) -> Result<Vec<OracleRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != CURVE_HEADER {
        bail!(
            "curve header must be `{CURVE_HEADER}`, found `{}`",
            header.join(",")
        );
    }
    let mut runs: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
    let mut order = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let key = (rec[0].to_owned(), rec[1].to_owned());
        let c: usize = rec[2]
            .parse()
            .with_context(|| format!("line {line}: bad checkpoint `{}`", &rec[2]))?;
        let d: f64 = rec[3]
            .parse()
            .with_context(|| format!("line {line}: bad distance `{}`", &rec[3]))?;
        if !runs.contains_key(&key) {
            order.push(key.clone());
        }
        runs.entry(key).or_default().push((c, d));
    }
    if runs.is_empty() {
        bail!("curve file holds no checkpoints");
    }
    order
        .into_iter()
        .map(|key| {
            let points = &runs[&key];
            for (idx, &(c, _)) in points.iter().enumerate() {
                if c != idx + 1 {
                    bail!(
                        "incomplete curve for {} rep {}: expected checkpoint {}, found {c}",
                        key.0,
                        key.1,
                        idx + 1
                    );
                }
            }
            let last = points.last().expect("non-empty").1;
            if last != 0.0 {
                bail!(
                    "incomplete curve for {} rep {}: final checkpoint is {last} from the final ranking",
                    key.0,
                    key.1
                );
            }
            let curve: Vec<f64> = points.iter().map(|p| p.1).collect();
            let p = lib(stable_state_from_curve(&curve, theta))?;
            Ok(OracleRow {
                process: key.0,
                rep: key.1,
                p_optimal: p,
                total_batches: curve.len(),
                savings: savings(p, curve.len()),
            })
        })
        .collect()
}

/// Replays a complete answer log through the configured process and
/// applies the all-pairs stable-state oracle to its checkpoint rankings.
pub fn oracle_from_log(
    cfg: &FileConfig,
    log_path: &Path,
    objects_path: &Path,
) -> Result<OracleRow> {
    let pcfg = cfg.process_config()?;
    let process = cfg.process()?;
    let (objects, _) = lib(read_truth(objects_path))?;
    let log = lib(read_log(log_path, &objects, pcfg.n_batch))?;
    if log.len() != pcfg.budget {
        bail!(
            "incomplete log: {} answers, the budget is {}",
            log.len(),
            pcfg.budget
        );
    }
    let inference = process.inference.build(pcfg.crowdbt_lambda);
    let mut m = ComparisonMatrix::zeros(objects.len());
    let mut rankings: Vec<RankResult> = Vec::new();
    for b in 1..=log.num_batches() {
        lib(m.add_all(log.batch(b)))?;
        rankings.push(lib(inference.infer(&m, pcfg.query))?.ranking);
    }
    let theta = pcfg.theta;
    let p = lib(stable_state(&rankings, theta))?;
    Ok(OracleRow {
        process: process.to_string(),
        rep: log_path.display().to_string(),
        p_optimal: p,
        total_batches: rankings.len(),
        savings: savings(p, rankings.len()),
    })
}

/// One-shot early-stopping decision for a collected partial log.
pub fn cmd_check_stop(
    cfg: &FileConfig,
    log_path: &Path,
    objects_path: &Path,
) -> Result<StopReport> {
    let pcfg = cfg.process_config()?;
    let process = cfg.process()?;
    let (objects, _) = lib(read_truth(objects_path))?;
    lib(pcfg.validate_for(objects.len()))?;
    let log = lib(read_log(log_path, &objects, pcfg.n_batch))?;
    let inference = process.inference.build(pcfg.crowdbt_lambda);
    let assignment = process.assignment.build();
    lib(monte_carlo(
        &log,
        objects.len(),
        inference.as_ref(),
        assignment.as_ref(),
        &pcfg,
        Seed(pcfg.seed).child("check-stop", 0),
    ))
}

/// Rewrites a `worker,winner,loser` table into the answers format, with the
/// winner as the left object.
pub fn cmd_convert(input: &Path, output: &Path, columns: [&str; 3]) -> Result<usize> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let header = rdr.headers()?.clone();
    let idx = columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| anyhow!("{}: no column `{c}`", input.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    w.write_record(crowdstop::simulation::ANSWERS_HEADER)?;
    let mut count = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| {
            rec.get(idx[i])
                .ok_or_else(|| anyhow!("{}:{line}: missing field", input.display()))
        };
        let (worker, winner, loser) = (get(0)?, get(1)?, get(2)?);
        if winner == loser {
            bail!(
                "{}:{line}: `{winner}` compared with itself",
                input.display()
            );
        }
        w.write_record([worker, winner, loser, winner])?;
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

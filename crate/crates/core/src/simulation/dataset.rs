//! CSV ingestion for recorded comparison datasets.
//!
//! Answers: header `worker_id,left,right,winner` where `left`, `right` and
//! `winner` are object labels and `winner` is one of the other two.
//! Truth: header `object,rank`, rank 1 being the best object. Objects get
//! dense indices in the order they appear in the truth file.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::domain::{Answer, AnswerLog, ObjectSet, RankResult, Winner, WorkerId};
use crate::error::{Error, Result};

use super::pool::AnswerPool;

pub const ANSWERS_HEADER: [&str; 4] = ["worker_id", "left", "right", "winner"];
pub const TRUTH_HEADER: [&str; 2] = ["object", "rank"];

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path)
        .map_err(|e| parse_err(&path.display().to_string(), 0, format!("cannot open: {e}")))
}

fn check_header(rdr: &mut csv::Reader<impl Read>, path: &str, expected: &[&str]) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads a truth file into the object set and the true complete ranking.
pub fn read_truth(path: &Path) -> Result<(ObjectSet, RankResult)> {
    let name = path.display().to_string();
    read_truth_from(open(path)?, &name)
}

pub fn read_truth_from(src: impl Read, name: &str) -> Result<(ObjectSet, RankResult)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src);
    check_header(&mut rdr, name, &TRUTH_HEADER)?;
    let mut labels = Vec::new();
    let mut ranks: Vec<(i64, usize)> = Vec::new();
    let mut seen = HashMap::new();
    let mut seen_rank = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(name, line, e.to_string())
        })?;
        let line = line_of(&rec);
        if rec.len() != 2 {
            return Err(parse_err(
                name,
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let label = rec[0].to_owned();
        let rank: i64 = rec[1]
            .parse()
            .map_err(|_| parse_err(name, line, format!("rank `{}` is not an integer", &rec[1])))?;
        if let Some(prev) = seen.insert(label.clone(), line) {
            return Err(parse_err(
                name,
                line,
                format!("object `{label}` already listed on line {prev}"),
            ));
        }
        if let Some(prev) = seen_rank.insert(rank, line) {
            return Err(parse_err(
                name,
                line,
                format!("rank {rank} already used on line {prev}"),
            ));
        }
        ranks.push((rank, labels.len()));
        labels.push(label);
    }
    if labels.len() < 2 {
        return Err(parse_err(
            name,
            0,
            "ground truth needs at least two objects",
        ));
    }
    let n = labels.len();
    ranks.sort_unstable();
    let truth = RankResult::complete(ranks.into_iter().map(|(_, i)| i).collect(), n)?;
    Ok((ObjectSet::with_labels(labels)?, truth))
}

/// Reads answers over `objects`. Worker ids are mapped to dense numbers in
/// first-seen order.
pub fn read_answers(path: &Path, objects: &ObjectSet) -> Result<Vec<Answer>> {
    let name = path.display().to_string();
    read_answers_from(open(path)?, &name, objects)
}

pub fn read_answers_from(src: impl Read, name: &str, objects: &ObjectSet) -> Result<Vec<Answer>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src);
    check_header(&mut rdr, name, &ANSWERS_HEADER)?;
    let mut workers: HashMap<String, u32> = HashMap::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(name, line, e.to_string())
        })?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            return Err(parse_err(
                name,
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        let lookup = |label: &str| {
            objects
                .index_of(label)
                .ok_or_else(|| parse_err(name, line, format!("unknown object `{label}`")))
        };
        let left = lookup(&rec[1])?;
        let right = lookup(&rec[2])?;
        if left == right {
            return Err(parse_err(
                name,
                line,
                format!("object `{}` compared with itself", &rec[1]),
            ));
        }
        let winner = if rec[3] == rec[1] {
            Winner::Left
        } else if rec[3] == rec[2] {
            Winner::Right
        } else {
            return Err(parse_err(
                name,
                line,
                format!(
                    "winner `{}` is neither `{}` nor `{}`",
                    &rec[3], &rec[1], &rec[2]
                ),
            ));
        };
        let next = workers.len() as u32;
        let id = *workers.entry(rec[0].to_owned()).or_insert(next);
        out.push(Answer {
            worker: WorkerId(id),
            left,
            right,
            winner,
        });
    }
    if out.is_empty() {
        return Err(parse_err(name, 0, "answer file holds no answers"));
    }
    Ok(out)
}

/// Loads a replay pool from an answers file and a truth file.
pub fn load_dataset(answers_path: &Path, truth_path: &Path) -> Result<AnswerPool> {
    let (objects, truth) = read_truth(truth_path)?;
    let answers = read_answers(answers_path, &objects)?;
    AnswerPool::from_answers(objects, truth, answers)
}

/// Reads a collected answer log in the answers format.
pub fn read_log(path: &Path, objects: &ObjectSet, n_batch: usize) -> Result<AnswerLog> {
    let answers = read_answers(path, objects)?;
    AnswerLog::from_answers(n_batch, answers)
}

/// Writes answers in the answers format. Worker ids are written as plain
/// numbers; predicted and simulated answers use `predicted` / `simulated`.
pub fn write_answers<W: std::io::Write>(
    out: W,
    objects: &ObjectSet,
    answers: &[Answer],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANSWERS_HEADER)?;
    for a in answers {
        let worker = match a.worker {
            WorkerId::PREDICTED => "predicted".to_owned(),
            WorkerId::SIMULATED => "simulated".to_owned(),
            WorkerId(id) => id.to_string(),
        };
        w.write_record([
            worker.as_str(),
            objects.label(a.left),
            objects.label(a.right),
            objects.label(a.preferred()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! Moving-average stopping baselines over consecutive-checkpoint distances.
//!
//! `history[c - 1]` holds the ranking after batch `c`. At batch `i` the
//! window covers the `w` distances `D(sigma_{i-j}, sigma_{i-j+1})`,
//! `j = 1..=w`, so it needs `i > w`; earlier calls return `Ok(None)`.

use crate::distance::distance;
use crate::domain::RankResult;
use crate::error::{Error, Result};

/// Window distances, latest first.
fn window(history: &[RankResult], w: usize, i: usize) -> Result<Option<Vec<f64>>> {
    if w == 0 {
        return Err(Error::Config(
            "moving-average window must be at least 1".into(),
        ));
    }
    if i > history.len() {
        return Err(Error::Config(format!(
            "batch index {i} beyond a history of {} rankings",
            history.len()
        )));
    }
    if i <= w {
        return Ok(None);
    }
    (1..=w)
        .map(|j| {
            let older = &history[i - j - 1];
            let newer = &history[i - j];
            distance(older, newer).map(|d| d.value())
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

pub fn moving_average(history: &[RankResult], w: usize, i: usize) -> Result<Option<f64>> {
    Ok(window(history, w, i)?.map(|d| d.iter().sum::<f64>() / w as f64))
}

/// Linearly weighted average, weight `w` on the latest distance down to 1.
pub fn weighted_moving_average(history: &[RankResult], w: usize, i: usize) -> Result<Option<f64>> {
    Ok(window(history, w, i)?.map(|d| {
        let num: f64 = d
            .iter()
            .enumerate()
            .map(|(idx, x)| (w - idx) as f64 * x)
            .sum();
        num / (w * (w + 1) / 2) as f64
    }))
}

//! Stopping criteria: the Monte-Carlo early-stopping check, the moving
//! average baselines and the offline stable-state oracle.

mod baselines;
mod hoeffding;
mod montecarlo;
mod oracle;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub use baselines::{moving_average, weighted_moving_average};
pub use hoeffding::{required_samples, sample_budget, SampleBudget};
pub use montecarlo::{decide, monte_carlo, Decision, DistanceMatrix, StopReport};
pub use oracle::{evaluate, savings, stable_state, stable_state_from_curve, Evaluation};

pub const DEFAULT_WINDOW: usize = 10;

/// A stopping rule evaluated at each checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    EarlyStop,
    MovingAverage(usize),
    WeightedMovingAverage(usize),
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::EarlyStop => f.write_str("ES"),
            Criterion::MovingAverage(w) => write!(f, "MA({w})"),
            Criterion::WeightedMovingAverage(w) => write!(f, "WMA({w})"),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// Accepts `ES`, `MA`, `MA(5)`, `MA:5` and the same forms for `WMA`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim().to_ascii_uppercase();
        if t == "ES" {
            return Ok(Criterion::EarlyStop);
        }
        let (name, rest) = match t.find(['(', ':']) {
            Some(pos) => (&t[..pos], Some(&t[pos..])),
            None => (t.as_str(), None),
        };
        let w = match rest {
            None => DEFAULT_WINDOW,
            Some(r) => {
                let inner = r
                    .strip_prefix('(')
                    .and_then(|x| x.strip_suffix(')'))
                    .or_else(|| r.strip_prefix(':'))
                    .ok_or_else(|| Error::Config(format!("malformed criterion `{s}`")))?;
                let w: usize = inner
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad window in criterion `{s}`")))?;
                if w == 0 {
                    return Err(Error::Config(format!("window must be positive in `{s}`")));
                }
                w
            }
        };
        match name {
            "MA" => Ok(Criterion::MovingAverage(w)),
            "WMA" => Ok(Criterion::WeightedMovingAverage(w)),
            _ => Err(Error::Config(format!("unknown criterion `{s}`"))),
        }
    }
}

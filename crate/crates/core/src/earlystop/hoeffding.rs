/// Monte-Carlo sample count for a stop check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleBudget {
    pub n_sample: u64,
    /// The count that the union-bound guarantee calls for.
    pub required: u64,
    /// `true` when a cap cut the count below `required`, so the stated
    /// confidence no longer holds.
    pub weakened: bool,
}

/// Samples needed so that all `(m+1)m/2` expected distances are within `t`
/// of their sample means with overall probability `1 - alpha`:
/// `ceil((ln((m+1)m/2) + ln(1/alpha)) / (2 t^2))`.
pub fn required_samples(m: usize, alpha: f64, t: f64) -> u64 {
    assert!(m >= 1, "need at least one remaining batch");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(t > 0.0, "margin must be positive");
    let checks = (m as f64 + 1.0) * m as f64 / 2.0;
    let n = (checks.ln() + (1.0 / alpha).ln()) / (2.0 * t * t);
    n.ceil() as u64
}

pub fn sample_budget(m: usize, alpha: f64, t: f64, cap: Option<u64>) -> SampleBudget {
    let required = required_samples(m, alpha, t);
    match cap {
        Some(c) if c < required => SampleBudget {
            n_sample: c,
            required,
            weakened: true,
        },
        _ => SampleBudget {
            n_sample: required,
            required,
            weakened: false,
        },
    }
}

//! Inference modules: map a comparison matrix to a ranking.
//!
//! All four built-ins are deterministic and break ties by ascending object
//! index.

use std::fmt;
use std::str::FromStr;

use crate::config::Query;
use crate::domain::{ComparisonMatrix, RankResult, ScoreVector};
use crate::error::{Error, Result};

/// Output of an inference module: the per-object scores it ranked by and the
/// query-shaped ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct Inferred {
    pub scores: ScoreVector,
    pub ranking: RankResult,
}

pub trait InferenceModule: Send + Sync {
    fn name(&self) -> &str;

    fn infer(&self, m: &ComparisonMatrix, query: Query) -> Result<Inferred>;

    /// Whether the module can answer complete-ranking queries.
    fn supports_complete(&self) -> bool {
        true
    }
}

fn shape(scores: ScoreVector, query: Query) -> Result<Inferred> {
    let n = scores.len();
    let order = scores.order();
    let ranking = match query {
        Query::Complete => RankResult::complete(order, n)?,
        Query::TopK(k) => {
            if k == 0 || k > n {
                return Err(Error::Config(format!("top-{k} query over {n} objects")));
            }
            RankResult::top_k(order[..k].to_vec(), n)?
        }
    };
    Ok(Inferred { scores, ranking })
}

/// Wins minus losses.
pub fn copeland_scores(m: &ComparisonMatrix) -> ScoreVector {
    let n = m.n();
    ScoreVector(
        (0..n)
            .map(|i| {
                let (mut won, mut lost) = (0i64, 0i64);
                for j in 0..n {
                    won += i64::from(m.get(i, j));
                    lost += i64::from(m.get(j, i));
                }
                (won - lost) as f64
            })
            .collect(),
    )
}

pub fn infer_copeland(m: &ComparisonMatrix) -> Result<RankResult> {
    Ok(copeland_scores(m).ranking())
}

/// 1-hop margin plus wins-of-wins minus losses-of-losses on the majority
/// graph (edge `i -> j` iff strictly more answers prefer `i` over `j`).
pub fn local_scores(m: &ComparisonMatrix) -> ScoreVector {
    let n = m.n();
    let mut beats = vec![false; n * n];
    let mut out_deg = vec![0i64; n];
    let mut in_deg = vec![0i64; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && m.get(i, j) > m.get(j, i) {
                beats[i * n + j] = true;
                out_deg[i] += 1;
                in_deg[j] += 1;
            }
        }
    }
    let scores = (0..n)
        .map(|i| {
            let mut s = out_deg[i] - in_deg[i];
            for u in 0..n {
                if beats[i * n + u] {
                    s += out_deg[u];
                }
                if beats[u * n + i] {
                    s -= in_deg[u];
                }
            }
            s as f64
        })
        .collect();
    ScoreVector(scores)
}

pub fn infer_local(m: &ComparisonMatrix) -> Result<RankResult> {
    Ok(local_scores(m).ranking())
}

/// Halving elimination on Local scores until `k` objects survive.
///
/// Each round recomputes Local scores on the answers among the survivors
/// and drops the `floor(survivors / 2)` lowest, never leaving fewer than `k`.
pub fn infer_iterative(m: &ComparisonMatrix, k: usize) -> Result<RankResult> {
    Ok(iterative(m, k)?.1)
}

/// Returns the number of halving rounds along with the top-k list.
pub fn iterative(m: &ComparisonMatrix, k: usize) -> Result<(usize, RankResult)> {
    let n = m.n();
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "iterative inference needs 1 <= k < n, got k = {k} with n = {n}"
        )));
    }
    let mut survivors: Vec<usize> = (0..n).collect();
    let mut rounds = 0;
    while survivors.len() > k {
        let order = local_scores(&m.restricted(&survivors)).order();
        let drop = (survivors.len() / 2).min(survivors.len() - k);
        let keep = survivors.len() - drop;
        let mut kept: Vec<usize> = order[..keep].iter().map(|&p| survivors[p]).collect();
        kept.sort_unstable();
        survivors = kept;
        rounds += 1;
    }
    let order = local_scores(&m.restricted(&survivors)).order();
    let top = order.iter().map(|&p| survivors[p]).collect();
    Ok((rounds, RankResult::top_k(top, n)?))
}

pub const CROWDBT_TOLERANCE: f64 = 1e-6;
pub const CROWDBT_MAX_ITER: usize = 500;

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Regularized Bradley-Terry log-likelihood
/// `sum_ij M_ij log(e^{s_i} / (e^{s_i} + e^{s_j})) - lambda * sum_i s_i^2`.
pub fn crowdbt_objective(m: &ComparisonMatrix, s: &[f64], lambda: f64) -> f64 {
    let n = m.n();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = m.get(i, j);
            if c > 0 {
                ll += f64::from(c) * log_sigmoid(s[i] - s[j]);
            }
        }
    }
    ll - lambda * s.iter().map(|x| x * x).sum::<f64>()
}

pub fn crowdbt_gradient(m: &ComparisonMatrix, s: &[f64], lambda: f64) -> Vec<f64> {
    let n = m.n();
    let mut g: Vec<f64> = s.iter().map(|x| -2.0 * lambda * x).collect();
    for i in 0..n {
        for j in i + 1..n {
            let (wij, wji) = (f64::from(m.get(i, j)), f64::from(m.get(j, i)));
            if wij + wji == 0.0 {
                continue;
            }
            let p = sigmoid(s[i] - s[j]);
            // d/ds_i of wij*log p + wji*log(1-p)
            let d = wij * (1.0 - p) - wji * p;
            g[i] += d;
            g[j] -= d;
        }
    }
    g
}

/// Maximizes the regularized Bradley-Terry likelihood by damped Newton
/// steps. The objective is strictly concave for `lambda > 0`, so the
/// maximizer is unique; it satisfies `sum s_i = 0`, which is re-imposed
/// after convergence.
pub fn fit_bradley_terry(m: &ComparisonMatrix, lambda: f64) -> ScoreVector {
    let n = m.n();
    let mut s = vec![0.0; n];
    if m.total() == 0 {
        return ScoreVector(s);
    }
    let mut h = vec![0.0; n * n];
    let mut obj = crowdbt_objective(m, &s, lambda);
    for _ in 0..CROWDBT_MAX_ITER {
        let g = crowdbt_gradient(m, &s, lambda);
        // negative Hessian: weighted graph Laplacian + 2*lambda*I
        h.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            h[i * n + i] = 2.0 * lambda;
        }
        for i in 0..n {
            for j in i + 1..n {
                let w = f64::from(m.pair_total(i, j));
                if w == 0.0 {
                    continue;
                }
                let p = sigmoid(s[i] - s[j]);
                let c = w * p * (1.0 - p);
                h[i * n + i] += c;
                h[j * n + j] += c;
                h[i * n + j] -= c;
                h[j * n + i] -= c;
            }
        }
        let step = match cholesky_solve(&mut h, &g, n) {
            Some(step) => step,
            None => g.clone(),
        };
        let mut scale = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = s.iter().zip(&step).map(|(a, d)| a + scale * d).collect();
            let o = crowdbt_objective(m, &next, lambda);
            if o >= obj || scale < 1e-10 {
                obj = o;
                break;
            }
            scale *= 0.5;
        }
        let change = s
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        s = next;
        if change < CROWDBT_TOLERANCE {
            break;
        }
    }
    let mean = s.iter().sum::<f64>() / n as f64;
    s.iter_mut().for_each(|x| *x -= mean);
    ScoreVector(s)
}

// Solves A x = b for symmetric positive definite A (overwritten by its
// Cholesky factor).
fn cholesky_solve(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Some(y)
}

pub fn infer_crowdbt(m: &ComparisonMatrix, lambda: f64) -> (ScoreVector, RankResult) {
    let s = fit_bradley_terry(m, lambda);
    let r = s.ranking();
    (s, r)
}

pub struct Copeland;
pub struct Local;
pub struct Iterative;
pub struct CrowdBt {
    pub lambda: f64,
}

impl InferenceModule for Copeland {
    fn name(&self) -> &str {
        "Copeland"
    }

    fn infer(&self, m: &ComparisonMatrix, query: Query) -> Result<Inferred> {
        shape(copeland_scores(m), query)
    }
}

impl InferenceModule for Local {
    fn name(&self) -> &str {
        "Local"
    }

    fn infer(&self, m: &ComparisonMatrix, query: Query) -> Result<Inferred> {
        shape(local_scores(m), query)
    }
}

impl InferenceModule for Iterative {
    fn name(&self) -> &str {
        "Iterative"
    }

    fn supports_complete(&self) -> bool {
        false
    }

    /// Scores are the full-population Local scores, which is what
    /// score-driven assigners see.
    fn infer(&self, m: &ComparisonMatrix, query: Query) -> Result<Inferred> {
        match query {
            Query::Complete => Err(Error::Unsupported(
                "Iterative inference only answers top-k queries".into(),
            )),
            Query::TopK(k) => Ok(Inferred {
                scores: local_scores(m),
                ranking: infer_iterative(m, k)?,
            }),
        }
    }
}

impl InferenceModule for CrowdBt {
    fn name(&self) -> &str {
        "CrowdBT"
    }

    fn infer(&self, m: &ComparisonMatrix, query: Query) -> Result<Inferred> {
        shape(fit_bradley_terry(m, self.lambda), query)
    }
}

/// The built-in inference modules by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InferenceKind {
    Copeland,
    Local,
    Iterative,
    CrowdBt,
}

impl InferenceKind {
    pub fn build(self, crowdbt_lambda: f64) -> Box<dyn InferenceModule> {
        match self {
            InferenceKind::Copeland => Box::new(Copeland),
            InferenceKind::Local => Box::new(Local),
            InferenceKind::Iterative => Box::new(Iterative),
            InferenceKind::CrowdBt => Box::new(CrowdBt {
                lambda: crowdbt_lambda,
            }),
        }
    }

    pub fn top_k_only(self) -> bool {
        self == InferenceKind::Iterative
    }
}

impl fmt::Display for InferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InferenceKind::Copeland => "Copeland",
            InferenceKind::Local => "Local",
            InferenceKind::Iterative => "Iterative",
            InferenceKind::CrowdBt => "CrowdBT",
        })
    }
}

impl FromStr for InferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "copeland" => Ok(Self::Copeland),
            "local" => Ok(Self::Local),
            "iterative" => Ok(Self::Iterative),
            "crowdbt" | "bt" => Ok(Self::CrowdBt),
            _ => Err(Error::Config(format!("unknown inference module `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, entries: &[(usize, usize, u32)]) -> ComparisonMatrix {
        let mut c = vec![vec![0; n]; n];
        for &(i, j, v) in entries {
            c[i][j] = v;
        }
        ComparisonMatrix::from_counts(c).unwrap()
    }

    #[test]
    fn copeland_examples() {
        assert_eq!(
            infer_copeland(&ComparisonMatrix::zeros(3)).unwrap().order(),
            &[0, 1, 2]
        );
        let m = matrix(2, &[(0, 1, 3), (1, 0, 1)]);
        assert_eq!(copeland_scores(&m).0, vec![2.0, -2.0]);
        assert_eq!(infer_copeland(&m).unwrap().order(), &[0, 1]);
        let cyc = matrix(3, &[(0, 1, 2), (1, 2, 2), (2, 0, 2)]);
        assert_eq!(copeland_scores(&cyc).0, vec![0.0; 3]);
        assert_eq!(infer_copeland(&cyc).unwrap().order(), &[0, 1, 2]);
    }

    #[test]
    fn local_examples() {
        assert_eq!(
            infer_local(&ComparisonMatrix::zeros(4)).unwrap().order(),
            &[0, 1, 2, 3]
        );
        let chain = matrix(3, &[(0, 1, 1), (1, 2, 1)]);
        assert_eq!(local_scores(&chain).0, vec![2.0, 0.0, -2.0]);
        assert_eq!(infer_local(&chain).unwrap().order(), &[0, 1, 2]);
        let single = matrix(3, &[(0, 1, 1)]);
        assert_eq!(local_scores(&single).0, vec![1.0, -1.0, 0.0]);
        assert_eq!(infer_local(&single).unwrap().order(), &[0, 2, 1]);
    }

    #[test]
    fn majority_ties_make_no_edge() {
        let m = matrix(2, &[(0, 1, 2), (1, 0, 2)]);
        assert_eq!(local_scores(&m).0, vec![0.0, 0.0]);
    }

    #[test]
    fn iterative_examples() {
        let m = matrix(2, &[(0, 1, 5)]);
        assert_eq!(infer_iterative(&m, 1).unwrap().order(), &[0]);

        let mut e = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                e.push((i, j, 1));
            }
        }
        let chain = matrix(4, &e);
        assert_eq!(infer_iterative(&chain, 2).unwrap().order(), &[0, 1]);

        let (rounds, r) = iterative(&ComparisonMatrix::zeros(8), 2).unwrap();
        assert_eq!(rounds, 2);
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn iterative_never_drops_below_k() {
        // 5 -> 3
        let (rounds, r) = iterative(&ComparisonMatrix::zeros(5), 3).unwrap();
        assert_eq!(rounds, 1);
        assert_eq!(r.len(), 3);
        let (rounds, r) = iterative(&ComparisonMatrix::zeros(7), 3).unwrap();
        // 7 -> 4 -> 3
        assert_eq!(rounds, 2);
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn iterative_rejects_bad_k() {
        assert!(infer_iterative(&ComparisonMatrix::zeros(3), 3).is_err());
        assert!(infer_iterative(&ComparisonMatrix::zeros(3), 0).is_err());
        assert!(Iterative
            .infer(&ComparisonMatrix::zeros(3), Query::Complete)
            .is_err());
    }

    #[test]
    fn crowdbt_symmetric_and_monotone() {
        let (s, r) = infer_crowdbt(&ComparisonMatrix::zeros(3), 0.01);
        assert_eq!(s.0, vec![0.0; 3]);
        assert_eq!(r.order(), &[0, 1, 2]);
        let (s, r) = infer_crowdbt(&matrix(2, &[(0, 1, 10)]), 0.01);
        assert!(s.0[0] > s.0[1]);
        assert_eq!(r.order(), &[0, 1]);
        assert!(s.0.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn crowdbt_two_object_mle() {
        let (s, _) = infer_crowdbt(&matrix(2, &[(0, 1, 3), (1, 0, 1)]), 1e-9);
        let p = sigmoid(s.0[0] - s.0[1]);
        assert!((p - 0.75).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn shaped_top_k() {
        let m = matrix(3, &[(2, 0, 3), (2, 1, 3), (0, 1, 1)]);
        let out = Copeland.infer(&m, Query::TopK(2)).unwrap();
        assert_eq!(out.ranking.order(), &[2, 0]);
        assert_eq!(out.ranking.kind(), crate::domain::RankKind::TopK);
    }
}

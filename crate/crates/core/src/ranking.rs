//! Tie-aware feature rankings and Spearman rank correlation.
//!
//! Importance scores are converted to descending rankings (rank 1 = most
//! important) with average ranks on ties, and rankings are compared with
//! Spearman's rho computed as the Pearson correlation of the rank values.
//! The classical `1 - 6*sum(d^2)/(k(k^2-1))` shortcut is biased under ties,
//! so it is never used for reported values; tests use it as an independent
//! oracle on tie-free inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::GroundTruthRanking;
use crate::sensitivity::SensitivityReport;

/// Tie-aware ranking of `k` features. Rank 1 is the most important feature;
/// tied entries (bitwise-equal scores) share the average of the ranks they
/// span, so the rank sum is always `k(k+1)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    ranks: Vec<f64>,
}

impl RankVector {
    /// Validates an externally supplied rank vector (e.g. a ground-truth
    /// file): every rank in `[1, k]` and the rank sum equal to `k(k+1)/2`.
    pub fn new(ranks: Vec<f64>) -> Result<Self> {
        let k = ranks.len();
        if k == 0 {
            return Err(Error::Input("rank vector must be non-empty".into()));
        }
        let kf = k as f64;
        for (i, &r) in ranks.iter().enumerate() {
            if !r.is_finite() || r < 1.0 || r > kf {
                return Err(Error::Input(format!(
                    "rank {r} at index {i} outside [1, {k}]"
                )));
            }
        }
        let sum: f64 = ranks.iter().sum();
        let expected = kf * (kf + 1.0) / 2.0;
        if (sum - expected).abs() > 1e-9 {
            return Err(Error::Input(format!(
                "rank sum {sum} != k(k+1)/2 = {expected}"
            )));
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Reverses the ranking (rank r becomes k+1-r). Average-tie structure is
    /// preserved, so the result is again a valid rank vector.
    pub fn inverted(&self) -> Self {
        let k = self.ranks.len() as f64;
        Self {
            ranks: self.ranks.iter().map(|r| k + 1.0 - r).collect(),
        }
    }
}

/// Ranks scores descending: the largest score gets rank 1. Exact (bitwise
/// equal) score ties receive the average of the ranks they span.
pub fn rank(scores: &[f64]) -> Result<RankVector> {
    if scores.is_empty() {
        return Err(Error::Input("cannot rank an empty score vector".into()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Input(format!("NaN score at index {i}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap().then(i.cmp(&j)));

    let mut ranks = vec![0.0; scores.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos + 1;
        while end < order.len() && scores[order[end]] == scores[order[pos]] {
            end += 1;
        }
        // Tied block occupies 1-based ranks pos+1 ..= end; average them.
        let avg = (pos + end + 1) as f64 / 2.0;
        for &i in &order[pos..end] {
            ranks[i] = avg;
        }
        pos = end;
    }
    Ok(RankVector { ranks })
}

/// Spearman's rho between two rankings of equal length `k >= 2`.
///
/// Computed as the Pearson correlation of the rank values, which handles
/// ties correctly. Errors if either side has zero rank variance (all-tied),
/// where the coefficient is undefined.
pub fn spearman(a: &RankVector, b: &RankVector) -> Result<f64> {
    let k = a.len();
    if k != b.len() {
        return Err(Error::Input(format!(
            "rank vectors have different lengths: {} vs {}",
            k,
            b.len()
        )));
    }
    if k < 2 {
        return Err(Error::Input("need at least 2 features to correlate".into()));
    }
    let mean_a = a.ranks.iter().sum::<f64>() / k as f64;
    let mean_b = b.ranks.iter().sum::<f64>() / k as f64;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..k {
        let da = a.ranks[i] - mean_a;
        let db = b.ranks[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero rank variance (all scores tied) on at least one side".into(),
        ));
    }
    // When the variances are bitwise equal the denominator is taken directly,
    // so identical rankings give exactly 1.0 and reversals exactly -1.0.
    let denom = if var_a == var_b {
        var_a
    } else {
        (var_a * var_b).sqrt()
    };
    Ok((cov / denom).clamp(-1.0, 1.0))
}

/// Pairwise Spearman agreement between sensitivity reports.
///
/// Axis labels are `(model id, method id)` pairs in report order; the matrix
/// is symmetric with a unit diagonal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<(String, String)>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    /// Renders the matrix as a CSV table with labels in the first row and
    /// column. Pair labels are joined as `model.method`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (model, method) in &self.labels {
            out.push(',');
            out.push_str(&format!("{model}.{method}"));
        }
        out.push('\n');
        for (i, (model, method)) in self.labels.iter().enumerate() {
            out.push_str(&format!("{model}.{method}"));
            for v in &self.values[i] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Computes the pairwise Spearman matrix over the rankings induced by a set
/// of sensitivity reports. All reports must share the same feature list.
pub fn agreement_matrix(reports: &[SensitivityReport]) -> Result<CorrelationMatrix> {
    if reports.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 reports to build an agreement matrix, got {}",
            reports.len()
        )));
    }
    let features = &reports[0].features;
    for r in &reports[1..] {
        if &r.features != features {
            return Err(Error::Input(format!(
                "feature sets differ: ({}, {}) has {:?}, ({}, {}) has {:?}",
                reports[0].model, reports[0].method, features, r.model, r.method, r.features
            )));
        }
    }
    let rankings: Vec<RankVector> = reports
        .iter()
        .map(|r| rank(r.ranking_scores()))
        .collect::<Result<_>>()?;

    let n = reports.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in (i + 1)..n {
            let rho = spearman(&rankings[i], &rankings[j]).map_err(|e| match e {
                Error::UndefinedCorrelation(msg) => Error::UndefinedCorrelation(format!(
                    "pair ({}, {}) vs ({}, {}): {msg}",
                    reports[i].model, reports[i].method, reports[j].model, reports[j].method
                )),
                other => other,
            })?;
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    let labels = reports
        .iter()
        .map(|r| (r.model.clone(), r.method.id().to_string()))
        .collect();
    Ok(CorrelationMatrix { labels, values })
}

/// Spearman correlation between a report's induced ranking and a
/// ground-truth ranking over the same feature list.
pub fn accuracy(report: &SensitivityReport, truth: &GroundTruthRanking) -> Result<f64> {
    if report.features != truth.features {
        return Err(Error::Input(format!(
            "report ({}, {}) features {:?} do not match ground truth features {:?}",
            report.model, report.method, report.features, truth.features
        )));
    }
    let ranked = rank(report.ranking_scores())?;
    spearman(&ranked, &truth.ranks)
}

//! Evaluation statistics: tie-corrected AUC, Pearson's r, coefficient of
//! determination, and MSE.
//!
//! Metrics that are undefined for an input (single-class AUC, constant
//! series for r) are reported as absent rather than as 0 or NaN.

use crate::bag::FeatureBag;
use crate::error::{Error, Result};
use crate::model::{forward, ModelHead};

/// Binarized slide label: low iff score <= threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TilClass {
    Low,
    High,
}

/// Parallel (truth, prediction) series.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePairs {
    pub truth: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl ScorePairs {
    pub fn new(truth: Vec<f64>, predicted: Vec<f64>) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::validation("score series lengths differ"));
        }
        if truth.is_empty() {
            return Err(Error::validation("score series is empty"));
        }
        if truth.iter().chain(&predicted).any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite score"));
        }
        Ok(Self { truth, predicted })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub slide_id: String,
    pub true_label: f64,
    pub predicted: f64,
}

/// Predictions plus summary statistics for one model on one set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub auc: Option<f64>,
    pub pearson_r: Option<f64>,
    pub r2: Option<f64>,
    pub mse: f64,
}

/// Tie-corrected Mann-Whitney AUC via average ranks.
pub fn auc(predicted: &[f64], labels: &[TilClass]) -> Result<f64> {
    if predicted.len() != labels.len() {
        return Err(Error::validation("auc: series lengths differ"));
    }
    let n_high = labels.iter().filter(|&&c| c == TilClass::High).count();
    let n_low = labels.len() - n_high;
    if n_high == 0 || n_low == 0 {
        return Err(Error::UndefinedMetric("auc requires both classes"));
    }
    let mut order: Vec<usize> = (0..predicted.len()).collect();
    order.sort_by(|&a, &b| predicted[a].partial_cmp(&predicted[b]).unwrap());
    let mut rank_sum_high = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && predicted[order[j]] == predicted[order[i]] {
            j += 1;
        }
        // 1-based average rank for the tie group [i, j)
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == TilClass::High {
                rank_sum_high += avg_rank;
            }
        }
        i = j;
    }
    let np = n_high as f64;
    let nn = n_low as f64;
    Ok((rank_sum_high - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Sample Pearson correlation.
pub fn pearson_r(pairs: &ScorePairs) -> Result<f64> {
    let n = pairs.truth.len();
    if n < 2 {
        return Err(Error::UndefinedMetric("pearson r requires n >= 2"));
    }
    let mean_x = pairs.truth.iter().sum::<f64>() / n as f64;
    let mean_y = pairs.predicted.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in pairs.truth.iter().zip(&pairs.predicted) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("pearson r undefined for constant series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Coefficient of determination against the predictions directly:
/// 1 - SS_res / SS_tot. Not squared Pearson; no refitting.
pub fn r_squared(pairs: &ScorePairs) -> Result<f64> {
    let n = pairs.truth.len();
    if n < 2 {
        return Err(Error::UndefinedMetric("r-squared requires n >= 2"));
    }
    let mean_t = pairs.truth.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&t, &p) in pairs.truth.iter().zip(&pairs.predicted) {
        ss_res += (t - p) * (t - p);
        ss_tot += (t - mean_t) * (t - mean_t);
    }
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("r-squared undefined for constant true labels"));
    }
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mse(pairs: &ScorePairs) -> f64 {
    let n = pairs.truth.len() as f64;
    pairs
        .truth
        .iter()
        .zip(&pairs.predicted)
        .map(|(&t, &p)| (t - p) * (t - p))
        .sum::<f64>()
        / n
}

/// Run the head over every bag and assemble the full report. AUC is
/// computed against labels binarized at `threshold`.
pub fn evaluate(head: &ModelHead, bags: &[&FeatureBag], threshold: f64) -> Result<EvalReport> {
    if bags.is_empty() {
        return Err(Error::validation("evaluate: no bags"));
    }
    let mut records = Vec::with_capacity(bags.len());
    for bag in bags {
        let pred = forward(head, bag)?;
        records.push(EvalRecord {
            slide_id: bag.slide_id.clone(),
            true_label: bag.label,
            predicted: pred.bag_score,
        });
    }
    let pairs = ScorePairs::new(
        records.iter().map(|r| r.true_label).collect(),
        records.iter().map(|r| r.predicted).collect(),
    )?;
    let classes: Vec<TilClass> = records
        .iter()
        .map(|r| crate::train::binarize(r.true_label, threshold))
        .collect();
    let auc_val = optional(auc(&pairs.predicted, &classes))?;
    let r_val = optional(pearson_r(&pairs))?;
    let r2_val = optional(r_squared(&pairs))?;
    Ok(EvalReport { records, auc: auc_val, pearson_r: r_val, r2: r2_val, mse: mse(&pairs) })
}

fn optional(res: Result<f64>) -> Result<Option<f64>> {
    match res {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Mean and sample standard deviation (n-1 denominator); std is 0 for a
/// single value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Standard error of the mean.
pub fn sem(xs: &[f64]) -> f64 {
    let (_, sd) = mean_std(xs);
    sd / (xs.len() as f64).sqrt()
}

//! Ranking and threshold metrics.

use serde::{Deserialize, Serialize};

use crate::error::{DtiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub aupr: f64,
    pub precision: f64,
}

fn check(labels: &[u8], scores: &[f64]) -> Result<(usize, usize)> {
    if labels.len() != scores.len() {
        return Err(DtiError::Dimension(format!("{} labels vs {} scores", labels.len(), scores.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(DtiError::Invalid("non-finite score".into()));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(DtiError::Invalid("labels must be 0 or 1".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

fn require_both(pos: usize, neg: usize) -> Result<()> {
    if pos == 0 || neg == 0 {
        return Err(DtiError::UndefinedMetric(format!(
            "AUC/AUPR need both classes ({pos} positive, {neg} negative)"
        )));
    }
    Ok(())
}

/// Mann–Whitney AUC with mid-ranks for ties.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check(labels, scores)?;
    require_both(pos, neg)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision: `Σ (R_k − R_{k−1}) P_k` over distinct score
/// thresholds, highest first.
pub fn average_precision(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check(labels, scores)?;
    require_both(pos, neg)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// `TP / (TP + FP)` over scores `>= threshold`; zero with a warning when
/// nothing is predicted positive.
pub fn precision_at(labels: &[u8], scores: &[f64], threshold: f64) -> Result<f64> {
    check(labels, scores)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&l, &s) in labels.iter().zip(scores) {
        if s >= threshold {
            if l == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    if tp + fp == 0 {
        log::warn!("no predicted positives at threshold {threshold}; precision set to 0");
        return Ok(0.0);
    }
    Ok(tp as f64 / (tp + fp) as f64)
}

pub fn compute_metrics(labels: &[u8], scores: &[f64], threshold: f64) -> Result<Metrics> {
    Ok(Metrics {
        auc: roc_auc(labels, scores)?,
        aupr: average_precision(labels, scores)?,
        precision: precision_at(labels, scores, threshold)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let m = compute_metrics(&[1, 0, 1, 0], &[0.9, 0.8, 0.4, 0.1], 0.5).unwrap();
        assert_eq!(m.precision, 0.5);
        assert!((m.auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_constant() {
        let m = compute_metrics(&[0, 0, 1, 1], &[0.1, 0.2, 0.7, 0.9], 0.5).unwrap();
        assert_eq!((m.auc, m.aupr), (1.0, 1.0));
        assert_eq!(roc_auc(&[0, 1, 0, 1], &[0.3; 4]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_undefined() {
        assert!(matches!(roc_auc(&[1, 1], &[0.2, 0.3]), Err(DtiError::UndefinedMetric(_))));
        assert_eq!(precision_at(&[1, 0], &[0.1, 0.2], 0.5).unwrap(), 0.0);
    }
}

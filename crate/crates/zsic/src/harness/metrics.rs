//! Support-weighted accuracy and F1 over a class set.
//!
//! Accuracy is the support-weighted mean of per-class recalls, which
//! algebraically equals correct/total when every gold label is covered;
//! it is computed from per-class integer counts so the identity is exact.
//! F1 is the support-weighted mean of per-class F1 scores (precision or
//! recall undefined counts as 0).

use std::collections::BTreeSet;

use crate::data::ClassId;

use super::HarnessError;

/// Per-class outcome line for the report table.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub name: String,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Metrics over one evaluation partition.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub name: String,
    pub accuracy: f64,
    pub f1: f64,
    pub support: usize,
    pub per_class: Vec<ClassReport>,
}

/// Accuracy and F1 per partition, in report order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricsReport {
    pub partitions: Vec<PartitionReport>,
}

impl MetricsReport {
    pub fn partition(&self, name: &str) -> Option<&PartitionReport> {
        self.partitions.iter().find(|p| p.name == name)
    }
}

struct ClassCounts {
    class_id: ClassId,
    support: usize,
    true_pos: usize,
    false_pos: usize,
}

fn per_class_counts(
    predictions: &[ClassId],
    gold: &[ClassId],
    class_ids: &BTreeSet<ClassId>,
) -> Result<Vec<ClassCounts>, HarnessError> {
    if predictions.is_empty() {
        return Err(HarnessError::Usage("no samples to score".into()));
    }
    if predictions.len() != gold.len() {
        return Err(HarnessError::Usage(format!(
            "prediction/gold length mismatch: {} vs {}",
            predictions.len(),
            gold.len()
        )));
    }
    for g in gold {
        if !class_ids.contains(g) {
            return Err(HarnessError::Usage(format!(
                "gold label {g} outside the scored class set"
            )));
        }
    }
    Ok(class_ids
        .iter()
        .map(|&class_id| {
            let mut support = 0;
            let mut true_pos = 0;
            let mut false_pos = 0;
            for (p, g) in predictions.iter().zip(gold) {
                if *g == class_id {
                    support += 1;
                    if *p == class_id {
                        true_pos += 1;
                    }
                } else if *p == class_id {
                    false_pos += 1;
                }
            }
            ClassCounts {
                class_id,
                support,
                true_pos,
                false_pos,
            }
        })
        .collect())
}

/// Support-weighted accuracy (equals correct/total).
pub fn weighted_accuracy(
    predictions: &[ClassId],
    gold: &[ClassId],
    class_ids: &BTreeSet<ClassId>,
) -> Result<f64, HarnessError> {
    let counts = per_class_counts(predictions, gold, class_ids)?;
    let correct: usize = counts.iter().map(|c| c.true_pos).sum();
    let total: usize = counts.iter().map(|c| c.support).sum();
    Ok(correct as f64 / total as f64)
}

/// Support-weighted macro F1.
pub fn weighted_f1(
    predictions: &[ClassId],
    gold: &[ClassId],
    class_ids: &BTreeSet<ClassId>,
) -> Result<f64, HarnessError> {
    let counts = per_class_counts(predictions, gold, class_ids)?;
    let total: usize = counts.iter().map(|c| c.support).sum();
    let mut f1 = 0.0;
    for c in &counts {
        f1 += (c.support as f64 / total as f64) * class_f1(c);
    }
    Ok(f1)
}

fn class_f1(c: &ClassCounts) -> f64 {
    let predicted = c.true_pos + c.false_pos;
    if predicted == 0 || c.support == 0 || c.true_pos == 0 {
        return 0.0;
    }
    let precision = c.true_pos as f64 / predicted as f64;
    let recall = c.true_pos as f64 / c.support as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Full partition report with the per-class table. `class_name` maps a
/// class id to its display name.
pub fn partition_report(
    name: &str,
    predictions: &[ClassId],
    gold: &[ClassId],
    class_ids: &BTreeSet<ClassId>,
    class_name: impl Fn(ClassId) -> String,
) -> Result<PartitionReport, HarnessError> {
    let counts = per_class_counts(predictions, gold, class_ids)?;
    let accuracy = weighted_accuracy(predictions, gold, class_ids)?;
    let f1 = weighted_f1(predictions, gold, class_ids)?;
    let per_class = counts
        .iter()
        .filter(|c| c.support > 0)
        .map(|c| ClassReport {
            name: class_name(c.class_id),
            recall: c.true_pos as f64 / c.support as f64,
            f1: class_f1(c),
            support: c.support,
        })
        .collect();
    Ok(PartitionReport {
        name: name.to_string(),
        accuracy,
        f1,
        support: predictions.len(),
        per_class,
    })
}

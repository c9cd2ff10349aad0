//! Unigram statistics over seen training data and label-description
//! embeddings.

use std::collections::HashMap;

use super::corpus::{IntentLabel, Utterance};
use super::embeddings::EmbeddingTable;
use super::DataError;

/// Token counts and unigram probabilities over the training utterances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnigramStats {
    counts: HashMap<String, u64>,
    total: u64,
}

impl UnigramStats {
    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Unigram likelihood; 0 for tokens never seen in training.
    pub fn p(&self, token: &str) -> f64 {
        self.count(token) as f64 / self.total as f64
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn probability_sum(&self) -> f64 {
        self.counts.values().map(|c| *c as f64 / self.total as f64).sum()
    }
}

/// Counts unigrams over the supplied (seen) training utterances.
pub fn unigram_stats(train: &[Utterance]) -> Result<UnigramStats, DataError> {
    if train.is_empty() {
        return Err(DataError::Invalid(
            "unigram stats need a non-empty training set".into(),
        ));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for u in train {
        for t in &u.tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok(UnigramStats { counts, total })
}

/// Mean of the description tokens' embedding vectors.
pub fn label_embedding(label: &IntentLabel, table: &EmbeddingTable) -> Vec<f64> {
    assert!(
        !label.description_tokens.is_empty(),
        "label `{}` has no description tokens",
        label.name
    );
    let d = table.dim();
    let mut acc = vec![0.0; d];
    for t in &label.description_tokens {
        for (a, v) in acc.iter_mut().zip(table.lookup(t)) {
            *a += v;
        }
    }
    let n = label.description_tokens.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

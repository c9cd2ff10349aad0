//! Standard/generalized task splits and meta-learning episodes.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::corpus::{ClassId, Corpus, Utterance};
use super::DataError;

/// A train/test partition plus the class set predictions range over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<Utterance>,
    pub test: Vec<Utterance>,
    pub candidate_ids: BTreeSet<ClassId>,
}

/// One simulated zero-shot task over the seen classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Episode {
    pub meta_seen_ids: BTreeSet<ClassId>,
    pub meta_unseen_ids: BTreeSet<ClassId>,
}

/// Standard task: all seen-class samples train, all unseen-class samples
/// test, candidates are the unseen classes.
pub fn split_standard(corpus: &Corpus) -> Result<DataSplit, DataError> {
    if corpus.seen_ids.is_empty() || corpus.unseen_ids.is_empty() {
        return Err(DataError::Invalid(
            "standard split needs both seen and unseen classes".into(),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for u in &corpus.utterances {
        if corpus.seen_ids.contains(&u.label_id) {
            train.push(u.clone());
        } else {
            test.push(u.clone());
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(DataError::Invalid(
            "standard split produced an empty side".into(),
        ));
    }
    Ok(DataSplit {
        train,
        test,
        candidate_ids: corpus.unseen_ids.clone(),
    })
}

/// Generalized task: per seen class, `floor(ratio * n)` samples go to
/// train (uniform without replacement, seeded); the rest plus all
/// unseen-class samples form the test set. Candidates are all classes.
pub fn split_generalized(
    corpus: &Corpus,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<DataSplit, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Invalid(format!(
            "split ratio must be in (0,1), got {ratio}"
        )));
    }
    if corpus.seen_ids.is_empty() || corpus.unseen_ids.is_empty() {
        return Err(DataError::Invalid(
            "generalized split needs both seen and unseen classes".into(),
        ));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &class in &corpus.seen_ids {
        let mut members: Vec<&Utterance> = corpus
            .utterances
            .iter()
            .filter(|u| u.label_id == class)
            .collect();
        if members.len() < 2 {
            return Err(DataError::Invalid(format!(
                "seen class {class} has {} sample(s); need at least 2 to split",
                members.len()
            )));
        }
        members.shuffle(rng);
        let n_train = (ratio * members.len() as f64).floor() as usize;
        for (i, u) in members.into_iter().enumerate() {
            if i < n_train {
                train.push(u.clone());
            } else {
                test.push(u.clone());
            }
        }
    }
    for u in &corpus.utterances {
        if corpus.unseen_ids.contains(&u.label_id) {
            test.push(u.clone());
        }
    }
    let candidate_ids: BTreeSet<ClassId> =
        corpus.seen_ids.union(&corpus.unseen_ids).copied().collect();
    Ok(DataSplit {
        train,
        test,
        candidate_ids,
    })
}

/// Uniformly partitions the seen classes into `n_meta_seen` meta-seen
/// classes and the complementary meta-unseen classes.
pub fn sample_episode(
    seen_ids: &BTreeSet<ClassId>,
    n_meta_seen: usize,
    rng: &mut impl Rng,
) -> Result<Episode, DataError> {
    if n_meta_seen == 0 || n_meta_seen >= seen_ids.len() {
        return Err(DataError::Invalid(format!(
            "n_meta_seen must satisfy 1 <= n < {}, got {n_meta_seen}",
            seen_ids.len()
        )));
    }
    let mut ids: Vec<ClassId> = seen_ids.iter().copied().collect();
    ids.shuffle(rng);
    let meta_seen_ids: BTreeSet<ClassId> = ids[..n_meta_seen].iter().copied().collect();
    let meta_unseen_ids: BTreeSet<ClassId> = ids[n_meta_seen..].iter().copied().collect();
    Ok(Episode {
        meta_seen_ids,
        meta_unseen_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::corpus::IntentLabel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_corpus(per_class: &[(usize, bool)]) -> Corpus {
        // (sample_count, seen?) per class
        let mut labels = Vec::new();
        let mut utterances = Vec::new();
        let mut seen_ids = BTreeSet::new();
        let mut unseen_ids = BTreeSet::new();
        for (id, (count, seen)) in per_class.iter().enumerate() {
            labels.push(IntentLabel {
                id,
                name: format!("c{id}"),
                description_tokens: vec![format!("c{id}")],
            });
            if *seen {
                seen_ids.insert(id);
            } else {
                unseen_ids.insert(id);
            }
            for k in 0..*count {
                utterances.push(Utterance {
                    tokens: vec![format!("t{id}_{k}")],
                    label_id: id,
                });
            }
        }
        let corpus = Corpus {
            utterances,
            labels,
            seen_ids,
            unseen_ids,
        };
        corpus.validate().unwrap();
        corpus
    }

    #[test]
    fn standard_split_partitions_corpus() {
        let corpus = toy_corpus(&[(3, true), (2, false)]);
        let split = split_standard(&corpus).unwrap();
        assert_eq!(split.train.len(), 3);
        assert_eq!(split.test.len(), 2);
        assert_eq!(split.train.len() + split.test.len(), corpus.utterances.len());
        assert!(split.train.iter().all(|u| u.label_id == 0));
        assert!(split.test.iter().all(|u| u.label_id == 1));
        assert_eq!(split.candidate_ids, corpus.unseen_ids);
    }

    #[test]
    fn standard_split_requires_both_sides() {
        let corpus = toy_corpus(&[(3, true), (2, true)]);
        assert!(split_standard(&corpus).is_err());
    }

    #[test]
    fn generalized_split_takes_floor_per_class() {
        let corpus = toy_corpus(&[(10, true), (4, true), (5, false)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let split = split_generalized(&corpus, 0.7, &mut rng).unwrap();
        let count = |utts: &[Utterance], id| utts.iter().filter(|u| u.label_id == id).count();
        assert_eq!(count(&split.train, 0), 7);
        assert_eq!(count(&split.test, 0), 3);
        assert_eq!(count(&split.train, 1), 2);
        assert_eq!(count(&split.test, 1), 2);
        assert_eq!(count(&split.train, 2), 0);
        assert_eq!(count(&split.test, 2), 5);
        assert_eq!(
            split.candidate_ids.iter().copied().collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn generalized_split_half_ratio() {
        let corpus = toy_corpus(&[(4, true), (2, false)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let split = split_generalized(&corpus, 0.5, &mut rng).unwrap();
        assert_eq!(split.train.len(), 2);
        assert_eq!(split.test.len(), 4);
    }

    #[test]
    fn generalized_split_is_seed_deterministic() {
        let corpus = toy_corpus(&[(9, true), (7, true), (5, false)]);
        let a = split_generalized(&corpus, 0.7, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = split_generalized(&corpus, 0.7, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generalized_split_never_trains_on_unseen() {
        let corpus = toy_corpus(&[(6, true), (8, true), (4, false), (3, false)]);
        for seed in 0..20 {
            let split =
                split_generalized(&corpus, 0.7, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(split
                .train
                .iter()
                .all(|u| corpus.seen_ids.contains(&u.label_id)));
            for &c in &corpus.seen_ids {
                let n = corpus.utterances.iter().filter(|u| u.label_id == c).count();
                let in_train = split.train.iter().filter(|u| u.label_id == c).count();
                assert_eq!(in_train, (0.7 * n as f64).floor() as usize);
            }
        }
    }

    #[test]
    fn generalized_split_rejects_tiny_class() {
        let corpus = toy_corpus(&[(1, true), (4, true), (2, false)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(split_generalized(&corpus, 0.7, &mut rng).is_err());
    }

    #[test]
    fn episode_partitions_seen_classes() {
        let seen: BTreeSet<usize> = (0..5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ep = sample_episode(&seen, 4, &mut rng).unwrap();
        assert_eq!(ep.meta_seen_ids.len(), 4);
        assert_eq!(ep.meta_unseen_ids.len(), 1);
        assert!(ep.meta_seen_ids.is_disjoint(&ep.meta_unseen_ids));
        let union: BTreeSet<usize> = ep
            .meta_seen_ids
            .union(&ep.meta_unseen_ids)
            .copied()
            .collect();
        assert_eq!(union, seen);
    }

    #[test]
    fn episode_smp_sizes() {
        let seen: BTreeSet<usize> = (0..24).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ep = sample_episode(&seen, 21, &mut rng).unwrap();
        assert_eq!(ep.meta_unseen_ids.len(), 3);
    }

    #[test]
    fn episode_rejects_bad_sizes() {
        let seen: BTreeSet<usize> = (0..5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(sample_episode(&seen, 0, &mut rng).is_err());
        assert!(sample_episode(&seen, 5, &mut rng).is_err());
    }

    #[test]
    fn episode_sampling_is_uniform() {
        let seen: BTreeSet<usize> = (0..5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut unseen_counts = [0usize; 5];
        let draws = 10_000;
        for _ in 0..draws {
            let ep = sample_episode(&seen, 4, &mut rng).unwrap();
            for &c in &ep.meta_unseen_ids {
                unseen_counts[c] += 1;
            }
        }
        for c in unseen_counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.2).abs() < 0.02, "frequency {freq}");
        }
    }
}

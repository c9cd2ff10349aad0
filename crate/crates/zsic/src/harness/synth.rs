//! Synthetic corpus generation for property-based evaluation.
//!
//! Every class gets a handful of signature tokens whose embeddings
//! cluster around a class direction; utterances interleave them with
//! shared filler tokens and the label description is exactly the
//! signature token set. Two direction layouts are available:
//!
//! * `SignedPairs` (default): directions are normalized sums and
//!   differences of concept-axis pairs, interleaved so both signs of
//!   every axis occur among the seen classes and unseen directions lie
//!   in the span of the seen ones, which is the geometry zero-shot
//!   transfer needs;
//! * `OrthogonalBasis`: one coordinate axis per class, mutually
//!   orthogonal for up to `embed_dim` classes. Unseen directions are
//!   then orthogonal to everything training ever sees, which makes this
//!   layout a stress case rather than a transfer benchmark.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{
    Corpus, DataError, EmbeddingTable, IntentLabel, Utterance, Vocab,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionScheme {
    OrthogonalBasis,
    SignedPairs,
}

/// Vocabulary/geometry layout of a synthetic corpus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthDesign {
    pub scheme: DirectionScheme,
    pub embed_dim: usize,
    pub signature_tokens_per_class: usize,
    pub filler_tokens: usize,
    pub utterance_len: usize,
    /// Probability that a token position carries a signature token.
    pub signature_prob: f64,
    /// Half-width of the uniform noise added to signature embeddings.
    pub noise: f64,
}

impl Default for SynthDesign {
    fn default() -> Self {
        SynthDesign {
            scheme: DirectionScheme::SignedPairs,
            embed_dim: 16,
            signature_tokens_per_class: 4,
            filler_tokens: 8,
            utterance_len: 8,
            signature_prob: 0.38,
            noise: 0.22,
        }
    }
}

/// Unit class directions plus the number of leading "concept" axes used.
fn class_directions(
    n_classes: usize,
    design: &SynthDesign,
) -> Result<(Vec<Vec<f64>>, usize), DataError> {
    let d = design.embed_dim;
    match design.scheme {
        DirectionScheme::OrthogonalBasis => {
            if n_classes > d {
                return Err(DataError::Invalid(format!(
                    "orthogonal basis supports at most {d} classes, asked for {n_classes}"
                )));
            }
            let dirs = (0..n_classes)
                .map(|i| {
                    let mut v = vec![0.0; d];
                    v[i] = 1.0;
                    v
                })
                .collect();
            Ok((dirs, n_classes))
        }
        DirectionScheme::SignedPairs => {
            // smallest concept count r with r*(r-1) signed pairs >= classes
            let mut r = 2;
            while r * (r - 1) < n_classes {
                r += 1;
            }
            if r > d {
                return Err(DataError::Invalid(format!(
                    "signed pairs need {r} concept axes but embed_dim is {d}"
                )));
            }
            let mut dirs = Vec::with_capacity(n_classes);
            let inv = 1.0 / 2.0f64.sqrt();
            'outer: for a in 0..r {
                for b in (a + 1)..r {
                    for sign in [1.0, -1.0] {
                        let mut v = vec![0.0; d];
                        v[a] = inv;
                        v[b] = sign * inv;
                        dirs.push(v);
                        if dirs.len() == n_classes {
                            break 'outer;
                        }
                    }
                }
            }
            Ok((dirs, r))
        }
    }
}

/// Builds a deterministic synthetic corpus and its embedding table.
pub fn synth_corpus(
    n_classes: usize,
    n_seen: usize,
    samples_per_class: usize,
    design: &SynthDesign,
    seed: u64,
) -> Result<(Corpus, EmbeddingTable), DataError> {
    if n_seen >= n_classes {
        return Err(DataError::Invalid(format!(
            "need n_seen < n_classes, got {n_seen} >= {n_classes}"
        )));
    }
    if samples_per_class < 4 {
        return Err(DataError::Invalid(format!(
            "need at least 4 samples per class, got {samples_per_class}"
        )));
    }
    if design.signature_tokens_per_class == 0 || design.utterance_len == 0 {
        return Err(DataError::Invalid("degenerate synthetic design".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dirs, concept_axes) = class_directions(n_classes, design)?;
    let d = design.embed_dim;

    let mut tokens: Vec<String> = Vec::new();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for (class, dir) in dirs.iter().enumerate() {
        let mut description = Vec::new();
        for j in 0..design.signature_tokens_per_class {
            let name = format!("sig{class}_{j}");
            let vector: Vec<f64> = dir
                .iter()
                .map(|v| v + rng.gen_range(-design.noise..design.noise))
                .collect();
            description.push(name.clone());
            tokens.push(name);
            vectors.push(vector);
        }
        labels.push(IntentLabel {
            id: class,
            name: format!("intent_{class}"),
            description_tokens: description,
        });
    }
    for j in 0..design.filler_tokens {
        let name = format!("filler{j}");
        let vector: Vec<f64> = (0..d)
            .map(|axis| {
                if axis < concept_axes && concept_axes < d {
                    0.0
                } else {
                    rng.gen_range(-0.4..0.4)
                }
            })
            .collect();
        tokens.push(name);
        vectors.push(vector);
    }

    let mut utterances = Vec::new();
    for class in 0..n_classes {
        for _ in 0..samples_per_class {
            let mut utt = Vec::with_capacity(design.utterance_len);
            let mut has_signature = false;
            for _ in 0..design.utterance_len {
                if design.filler_tokens == 0 || rng.gen_bool(design.signature_prob) {
                    let j = rng.gen_range(0..design.signature_tokens_per_class);
                    utt.push(format!("sig{class}_{j}"));
                    has_signature = true;
                } else {
                    let j = rng.gen_range(0..design.filler_tokens);
                    utt.push(format!("filler{j}"));
                }
            }
            if !has_signature {
                let pos = rng.gen_range(0..design.utterance_len);
                let j = rng.gen_range(0..design.signature_tokens_per_class);
                utt[pos] = format!("sig{class}_{j}");
            }
            utterances.push(Utterance {
                tokens: utt,
                label_id: class,
            });
        }
    }

    let corpus = Corpus {
        utterances,
        labels,
        seen_ids: (0..n_seen).collect(),
        unseen_ids: (n_seen..n_classes).collect(),
    };
    corpus.validate()?;
    let vocab = Vocab::from_tokens(tokens.iter().map(|s| s.as_str()));
    let table = EmbeddingTable::from_vectors(vocab, d, vectors);
    Ok((corpus, table))
}

/// Writes `corpus.tsv`, `labels.tsv` and `embeddings.txt` so the
/// synthetic data can be fed back through the file loaders.
pub fn write_synth_files(
    dir: &Path,
    corpus: &Corpus,
    table: &EmbeddingTable,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut corpus_file = fs::File::create(dir.join("corpus.tsv"))?;
    for u in &corpus.utterances {
        writeln!(
            corpus_file,
            "{}\t{}",
            u.tokens.join(" "),
            corpus.labels[u.label_id].name
        )?;
    }
    let mut labels_file = fs::File::create(dir.join("labels.tsv"))?;
    for l in &corpus.labels {
        let flag = if corpus.seen_ids.contains(&l.id) {
            "seen"
        } else {
            "unseen"
        };
        writeln!(
            labels_file,
            "{}\t{}\t{}",
            l.name,
            flag,
            l.description_tokens.join(" ")
        )?;
    }
    let mut emb_file = fs::File::create(dir.join("embeddings.txt"))?;
    writeln!(emb_file, "{} {}", table.vocab().len(), table.dim())?;
    for i in 0..table.vocab().len() {
        let token = table.vocab().token(i);
        let values: Vec<String> = table
            .lookup(token)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        writeln!(emb_file, "{} {}", token, values.join(" "))?;
    }
    Ok(())
}

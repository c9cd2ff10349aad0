//! Vocabulary and word2vec-style text embedding loading.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::corpus::Corpus;
use super::DataError;

/// Bijective token <-> dense index map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Vocab {
            index: HashMap::new(),
            tokens: Vec::new(),
        };
        for t in tokens {
            v.add(t);
        }
        v
    }

    /// All utterance tokens plus label-description tokens, first-seen order.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut v = Vocab {
            index: HashMap::new(),
            tokens: Vec::new(),
        };
        for u in &corpus.utterances {
            for t in &u.tokens {
                v.add(t);
            }
        }
        for l in &corpus.labels {
            for t in &l.description_tokens {
                v.add(t);
            }
        }
        v
    }

    fn add(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(token.to_string(), i);
        self.tokens.push(token.to_string());
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// How to fill vectors for vocabulary tokens absent from the file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OovPolicy {
    Zero,
    /// Uniform(-0.1, 0.1) per coordinate, drawn deterministically from
    /// the load seed in vocabulary index order.
    SeededUniform,
}

/// Frozen token embeddings over a vocabulary. Tokens outside the
/// vocabulary (first seen at prediction time) resolve to the zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    vocab: Vocab,
    zero: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmbedLoadReport {
    /// Vocabulary tokens not found in the file, filled per policy.
    pub oov_filled: usize,
    /// File lines whose token repeated an earlier one (first kept).
    pub duplicates: usize,
}

impl EmbeddingTable {
    /// Builds a table directly from per-token vectors (synthetic data).
    pub fn from_vectors(vocab: Vocab, dim: usize, vectors: Vec<Vec<f64>>) -> Self {
        assert_eq!(vocab.len(), vectors.len(), "one vector per vocab token");
        for v in &vectors {
            assert_eq!(v.len(), dim, "vector length mismatch");
        }
        EmbeddingTable {
            dim,
            vectors,
            vocab,
            zero: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn lookup(&self, token: &str) -> &[f64] {
        match self.vocab.get(token) {
            Some(i) => &self.vectors[i],
            None => &self.zero,
        }
    }
}

/// Loads word2vec-style text embeddings for a vocabulary.
///
/// Format: optional `V d` header line, then `token v1 .. v_d` lines
/// separated by single spaces.
pub fn load_embeddings(
    path: &Path,
    vocab: Vocab,
    oov_policy: OovPolicy,
    seed: u64,
) -> Result<(EmbeddingTable, EmbedLoadReport), DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let path_str = path.display().to_string();

    let mut dim: Option<usize> = None;
    let mut by_token: HashMap<String, Vec<f64>> = HashMap::new();
    let mut report = EmbedLoadReport::default();

    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap();
        let rest: Vec<&str> = fields.collect();
        if line_num == 1 && rest.len() == 1 {
            // "V d" header
            if let (Ok(_), Ok(d)) = (token.parse::<usize>(), rest[0].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }
        let mut values = Vec::with_capacity(rest.len());
        for f in &rest {
            let v: f64 = f.parse().map_err(|_| DataError::Parse {
                path: path_str.clone(),
                line: line_num,
                msg: format!("bad float `{f}`"),
            })?;
            values.push(v);
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(DataError::Parse {
                    path: path_str.clone(),
                    line: line_num,
                    msg: format!("expected {d} values, got {}", values.len()),
                });
            }
            _ => {}
        }
        if by_token.contains_key(token) {
            report.duplicates += 1;
        } else {
            by_token.insert(token.to_string(), values);
        }
    }

    let dim = dim.ok_or_else(|| DataError::Invalid(format!("no vectors in {path_str}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Vec::with_capacity(vocab.len());
    for i in 0..vocab.len() {
        match by_token.get(vocab.token(i)) {
            Some(v) => vectors.push(v.clone()),
            None => {
                report.oov_filled += 1;
                let filled = match oov_policy {
                    OovPolicy::Zero => vec![0.0; dim],
                    OovPolicy::SeededUniform => {
                        (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect()
                    }
                };
                vectors.push(filled);
            }
        }
    }
    Ok((EmbeddingTable::from_vectors(vocab, dim, vectors), report))
}

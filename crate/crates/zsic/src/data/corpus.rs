//! Corpus and label-description files.
//!
//! Corpus file: one `text<TAB>label` record per line, UTF-8.
//! Labels file: one `label<TAB>seen|unseen<TAB>description text` per line.
//! Tokens come from lowercasing and whitespace splitting; pre-segmented
//! text (e.g. Chinese with spaces between words) passes through as-is.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use super::DataError;

pub type ClassId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    pub tokens: Vec<String>,
    pub label_id: ClassId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntentLabel {
    pub id: ClassId,
    pub name: String,
    pub description_tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub labels: Vec<IntentLabel>,
    pub seen_ids: BTreeSet<ClassId>,
    pub unseen_ids: BTreeSet<ClassId>,
}

/// Per-load metadata: records skipped because the text was empty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub skipped_empty: usize,
}

/// Lowercase + whitespace split.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|t| t.to_string())
        .collect()
}

impl Corpus {
    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, id: ClassId) -> &IntentLabel {
        &self.labels[id]
    }

    /// Checks the structural invariants; loaders call this before
    /// returning and synthetic builders reuse it.
    pub fn validate(&self) -> Result<(), DataError> {
        for (i, l) in self.labels.iter().enumerate() {
            if l.id != i {
                return Err(DataError::Invalid(format!(
                    "label ids must be dense 0..C-1, found {} at position {i}",
                    l.id
                )));
            }
            if l.description_tokens.is_empty() {
                return Err(DataError::Invalid(format!(
                    "label `{}` has an empty description",
                    l.name
                )));
            }
        }
        if !self.seen_ids.is_disjoint(&self.unseen_ids) {
            return Err(DataError::Invalid(
                "seen and unseen class sets overlap".into(),
            ));
        }
        for u in &self.utterances {
            if u.tokens.is_empty() {
                return Err(DataError::Invalid("empty utterance".into()));
            }
            if !self.seen_ids.contains(&u.label_id) && !self.unseen_ids.contains(&u.label_id) {
                return Err(DataError::Invalid(format!(
                    "utterance label id {} is neither seen nor unseen",
                    u.label_id
                )));
            }
        }
        Ok(())
    }
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses the labels file: `label<TAB>seen|unseen<TAB>description`.
/// A missing description falls back to the tokenized label name.
fn load_labels(
    path: &Path,
) -> Result<(Vec<IntentLabel>, BTreeSet<ClassId>, BTreeSet<ClassId>), DataError> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut labels = Vec::new();
    let mut seen = BTreeSet::new();
    let mut unseen = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let name = parts.next().unwrap_or("").trim();
        let flag = parts.next().map(str::trim);
        let description = parts.next().map(str::trim).unwrap_or("");
        if name.is_empty() {
            return Err(DataError::Parse {
                path: path_str.clone(),
                line: line_num,
                msg: "missing label name".into(),
            });
        }
        let flag = match flag {
            Some("seen") => true,
            Some("unseen") => false,
            other => {
                return Err(DataError::Parse {
                    path: path_str.clone(),
                    line: line_num,
                    msg: format!(
                        "expected seen|unseen flag, got `{}`",
                        other.unwrap_or("<missing>")
                    ),
                })
            }
        };
        let mut description_tokens = tokenize(description);
        if description_tokens.is_empty() {
            description_tokens = tokenize(name);
        }
        if description_tokens.is_empty() {
            return Err(DataError::Parse {
                path: path_str.clone(),
                line: line_num,
                msg: format!("label `{name}` yields no description tokens"),
            });
        }
        let id = labels.len();
        if flag {
            seen.insert(id);
        } else {
            unseen.insert(id);
        }
        labels.push(IntentLabel {
            id,
            name: name.to_string(),
            description_tokens,
        });
    }
    if labels.is_empty() {
        return Err(DataError::Invalid(format!("no labels in {path_str}")));
    }
    Ok((labels, seen, unseen))
}

/// Loads a corpus file plus its companion labels file.
pub fn load_corpus(
    data_path: &Path,
    labels_path: &Path,
) -> Result<(Corpus, LoadReport), DataError> {
    let (labels, seen_ids, unseen_ids) = load_labels(labels_path)?;
    let by_name: HashMap<&str, ClassId> =
        labels.iter().map(|l| (l.name.as_str(), l.id)).collect();

    let text = read_to_string(data_path)?;
    let path_str = data_path.display().to_string();
    let mut utterances = Vec::new();
    let mut report = LoadReport::default();
    for (lineno, line) in text.lines().enumerate() {
        let line_num = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let Some((utt_text, label_name)) = line.rsplit_once('\t') else {
            return Err(DataError::Parse {
                path: path_str.clone(),
                line: line_num,
                msg: "missing tab between text and label".into(),
            });
        };
        let label_name = label_name.trim();
        let Some(&label_id) = by_name.get(label_name) else {
            return Err(DataError::UnknownLabel {
                path: path_str.clone(),
                line: line_num,
                name: label_name.to_string(),
            });
        };
        let tokens = tokenize(utt_text);
        if tokens.is_empty() {
            report.skipped_empty += 1;
            continue;
        }
        utterances.push(Utterance { tokens, label_id });
    }
    let corpus = Corpus {
        utterances,
        labels,
        seen_ids,
        unseen_ids,
    };
    corpus.validate()?;
    Ok((corpus, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_small_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(
            dir.path(),
            "labels.tsv",
            "play_music\tseen\tplay music\nget_weather\tunseen\tget the weather\n",
        );
        let data = write_file(
            dir.path(),
            "corpus.tsv",
            "Play some Jazz\tplay_music\nwill it rain\tget_weather\nPLAY it loud\tplay_music\n",
        );
        let (corpus, report) = load_corpus(&data, &labels).unwrap();
        assert_eq!(corpus.utterances.len(), 3);
        assert_eq!(corpus.labels.len(), 2);
        assert_eq!(report.skipped_empty, 0);
        assert_eq!(corpus.utterances[0].tokens, vec!["play", "some", "jazz"]);
        assert_eq!(corpus.seen_ids.iter().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(corpus.unseen_ids.iter().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn missing_tab_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(dir.path(), "labels.tsv", "a\tseen\talpha\n");
        let data = write_file(dir.path(), "corpus.tsv", "hello\ta\nno tab here\n");
        let err = load_corpus(&data, &labels).unwrap_err();
        match err {
            DataError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_reference_error() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(dir.path(), "labels.tsv", "a\tseen\talpha\n");
        let data = write_file(dir.path(), "corpus.tsv", "hello\tb\n");
        let err = load_corpus(&data, &labels).unwrap_err();
        match err {
            DataError::UnknownLabel { name, line, .. } => {
                assert_eq!(name, "b");
                assert_eq!(line, 1);
            }
            other => panic!("expected unknown label, got {other:?}"),
        }
    }

    #[test]
    fn empty_utterance_skipped_with_count() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(dir.path(), "labels.tsv", "a\tseen\talpha\n");
        let data = write_file(dir.path(), "corpus.tsv", "hello\ta\n \ta\nbye\ta\n");
        let (corpus, report) = load_corpus(&data, &labels).unwrap();
        assert_eq!(corpus.utterances.len(), 2);
        assert_eq!(report.skipped_empty, 1);
    }

    #[test]
    fn description_falls_back_to_label_name() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(dir.path(), "labels.tsv", "weather\tseen\n");
        let data = write_file(dir.path(), "corpus.tsv", "x\tweather\n");
        let (corpus, _) = load_corpus(&data, &labels).unwrap();
        assert_eq!(corpus.labels[0].description_tokens, vec!["weather"]);
    }

    #[test]
    fn loading_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(
            dir.path(),
            "labels.tsv",
            "a\tseen\talpha beta\nb\tunseen\tgamma\n",
        );
        let data = write_file(dir.path(), "corpus.tsv", "one two\ta\nthree\tb\n");
        let first = load_corpus(&data, &labels).unwrap();
        let second = load_corpus(&data, &labels).unwrap();
        assert_eq!(first, second);
    }
}

//! Experiment configuration: a flat `key = value` file with `#` comments,
//! overridden by command-line flags.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::attention::Ablations;
use crate::metalearn::TrainConfig;

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Standard,
    Generalized,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Task::Standard),
            "generalized" => Ok(Task::Generalized),
            other => Err(format!("unknown task `{other}` (standard|generalized)")),
        }
    }
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Standard => "standard",
            Task::Generalized => "generalized",
        }
    }
}

/// Optional hidden-size overrides; `d_w` always comes from the table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DimOverrides {
    pub d_h: Option<usize>,
    pub d_b: Option<usize>,
    pub d_a: Option<usize>,
    pub d_s: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub data_path: PathBuf,
    pub labels_path: PathBuf,
    pub embedding_path: PathBuf,
    pub out_dir: PathBuf,
    pub split_ratio: f64,
    pub train: TrainConfig,
    pub dims: DimOverrides,
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub task: Option<String>,
    pub data: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub ablate: Option<String>,
}

fn parse_kv_file(path: &Path) -> Result<HashMap<String, String>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| {
        HarnessError::Usage(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(HarnessError::Usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_field<T: FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<T>, HarnessError> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| HarnessError::Usage(format!("config key `{key}`: bad value `{raw}`"))),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "task",
    "data",
    "labels",
    "embeddings",
    "out",
    "split_ratio",
    "episodes",
    "n_meta_seen",
    "lr_train",
    "lr_adapt",
    "batch_size",
    "seed",
    "threshold",
    "ablate",
    "d_h",
    "d_b",
    "d_a",
    "d_s",
];

/// Builds the experiment configuration from an optional file plus flag
/// overrides. Required paths: data, labels, embeddings, out.
pub fn build_config(
    file: Option<&Path>,
    overrides: &ConfigOverrides,
) -> Result<ExperimentConfig, HarnessError> {
    let map = match file {
        Some(p) => parse_kv_file(p)?,
        None => HashMap::new(),
    };
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(HarnessError::Usage(format!("unknown config key `{key}`")));
        }
    }

    let mut train = TrainConfig::default();
    if let Some(v) = parse_field(&map, "episodes")? {
        train.episodes = v;
    }
    if let Some(v) = parse_field(&map, "n_meta_seen")? {
        train.n_meta_seen = v;
    }
    if let Some(v) = parse_field(&map, "lr_train")? {
        train.lr_train = v;
    }
    if let Some(v) = parse_field(&map, "lr_adapt")? {
        train.lr_adapt = v;
    }
    if let Some(v) = parse_field(&map, "batch_size")? {
        train.batch_size = v;
    }
    if let Some(v) = parse_field(&map, "seed")? {
        train.seed = v;
    }
    if let Some(v) = parse_field(&map, "threshold")? {
        train.threshold = v;
    }
    if let Some(list) = map.get("ablate") {
        train.ablations = Ablations::from_ablate_list(list).map_err(HarnessError::Usage)?;
    }
    if let Some(v) = overrides.seed {
        train.seed = v;
    }
    if let Some(v) = overrides.threshold {
        train.threshold = v;
    }
    if let Some(list) = &overrides.ablate {
        train.ablations = Ablations::from_ablate_list(list).map_err(HarnessError::Usage)?;
    }

    let task_str = overrides
        .task
        .clone()
        .or_else(|| map.get("task").cloned())
        .unwrap_or_else(|| "standard".to_string());
    let task: Task = task_str.parse().map_err(HarnessError::Usage)?;

    let path = |flag: &Option<PathBuf>, key: &str| -> Result<PathBuf, HarnessError> {
        flag.clone()
            .or_else(|| map.get(key).map(PathBuf::from))
            .ok_or_else(|| HarnessError::Usage(format!("missing required path `{key}`")))
    };

    Ok(ExperimentConfig {
        task,
        data_path: path(&overrides.data, "data")?,
        labels_path: path(&overrides.labels, "labels")?,
        embedding_path: path(&overrides.embeddings, "embeddings")?,
        out_dir: path(&overrides.out, "out")?,
        split_ratio: parse_field(&map, "split_ratio")?.unwrap_or(0.7),
        train,
        dims: DimOverrides {
            d_h: parse_field(&map, "d_h")?,
            d_b: parse_field(&map, "d_b")?,
            d_a: parse_field(&map, "d_a")?,
            d_s: parse_field(&map, "d_s")?,
        },
    })
}

impl ExperimentConfig {
    /// Key/value echo stored in checkpoint headers.
    pub fn header_echo(&self) -> String {
        let t = &self.train;
        format!(
            "task = {}\nsplit_ratio = {}\nepisodes = {}\nn_meta_seen = {}\nlr_train = {}\nlr_adapt = {}\nbatch_size = {}\nseed = {}\nthreshold = {}\n",
            self.task.name(),
            self.split_ratio,
            t.episodes,
            t.n_meta_seen,
            t.lr_train,
            t.lr_adapt,
            t.batch_size,
            t.seed,
            t.threshold,
        )
    }
}

//! End-to-end experiment orchestration: load, split, train, evaluate,
//! write the checkpoint and reports.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attention::Dims;
use crate::data::{
    load_corpus, load_embeddings, split_generalized, split_standard, unigram_stats, ClassId,
    Corpus, DataSplit, EmbeddingTable, OovPolicy, UnigramStats, Vocab,
};
use crate::metalearn::{train, Model, TrainSummary};
use crate::numerics::{load_checkpoint, save_checkpoint};

use super::config::{ExperimentConfig, Task};
use super::metrics::{partition_report, MetricsReport};
use super::report::{emit_csv, render_table};
use super::HarnessError;

pub struct PreparedData {
    pub corpus: Corpus,
    pub table: EmbeddingTable,
    pub split: DataSplit,
    pub stats: UnigramStats,
}

/// Loads corpus/labels/embeddings and builds the task split.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData, HarnessError> {
    let (corpus, _) = load_corpus(&cfg.data_path, &cfg.labels_path)?;
    let vocab = Vocab::from_corpus(&corpus);
    let (table, _) = load_embeddings(
        &cfg.embedding_path,
        vocab,
        OovPolicy::SeededUniform,
        cfg.train.seed,
    )?;
    let split = match cfg.task {
        Task::Standard => split_standard(&corpus)?,
        Task::Generalized => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
            split_generalized(&corpus, cfg.split_ratio, &mut rng)?
        }
    };
    let stats = unigram_stats(&split.train)?;
    Ok(PreparedData {
        corpus,
        table,
        split,
        stats,
    })
}

pub fn resolve_dims(cfg: &ExperimentConfig, d_w: usize) -> Dims {
    let mut dims = Dims::with_defaults(d_w);
    if let Some(v) = cfg.dims.d_h {
        dims.d_h = v;
    }
    if let Some(v) = cfg.dims.d_b {
        dims.d_b = v;
    }
    if let Some(v) = cfg.dims.d_a {
        dims.d_a = v;
    }
    if let Some(v) = cfg.dims.d_s {
        dims.d_s = v;
    }
    dims
}

/// Trains a fresh model on the prepared split.
pub fn train_model(
    cfg: &ExperimentConfig,
    data: &PreparedData,
) -> Result<(Model, TrainSummary), HarnessError> {
    let dims = resolve_dims(cfg, data.table.dim());
    let mut model = Model::new(
        data.corpus.labels.clone(),
        data.table.clone(),
        data.stats.clone(),
        dims,
        cfg.train.ablations,
        cfg.train.seed,
    )?;
    let summary = train(
        &mut model,
        &data.split.train,
        &data.corpus.seen_ids,
        &cfg.train,
    )?;
    Ok((model, summary))
}

/// Scores the test side of the split. The standard task reports one
/// partition over the unseen classes; the generalized task reports
/// seen/unseen/overall partitions from a single prediction pass with the
/// threshold rule.
pub fn evaluate(
    model: &Model,
    data: &PreparedData,
    task: Task,
    threshold: f64,
) -> Result<MetricsReport, HarnessError> {
    let mut gold = Vec::with_capacity(data.split.test.len());
    let mut preds = Vec::with_capacity(data.split.test.len());
    for utt in &data.split.test {
        let x = model.encode_tokens(&utt.tokens)?;
        let pred = match task {
            Task::Standard => model.predict_standard(&x, &data.split.candidate_ids)?,
            Task::Generalized => model.predict_generalized(
                &x,
                &data.split.candidate_ids,
                &data.corpus.unseen_ids,
                threshold,
            )?,
        };
        gold.push(utt.label_id);
        preds.push(pred);
    }
    let name_of = |c: ClassId| model.labels[c].name.clone();

    let mut report = MetricsReport::default();
    match task {
        Task::Standard => {
            report.partitions.push(partition_report(
                "unseen",
                &preds,
                &gold,
                &data.split.candidate_ids,
                name_of,
            )?);
        }
        Task::Generalized => {
            let subset = |keep: &BTreeSet<ClassId>| -> (Vec<ClassId>, Vec<ClassId>) {
                let mut p = Vec::new();
                let mut g = Vec::new();
                for (pi, gi) in preds.iter().zip(&gold) {
                    if keep.contains(gi) {
                        p.push(*pi);
                        g.push(*gi);
                    }
                }
                (p, g)
            };
            let (p, g) = subset(&data.corpus.seen_ids);
            report.partitions.push(partition_report(
                "seen",
                &p,
                &g,
                &data.corpus.seen_ids,
                name_of,
            )?);
            let (p, g) = subset(&data.corpus.unseen_ids);
            let name_of = |c: ClassId| model.labels[c].name.clone();
            report.partitions.push(partition_report(
                "unseen",
                &p,
                &g,
                &data.corpus.unseen_ids,
                name_of,
            )?);
            let name_of = |c: ClassId| model.labels[c].name.clone();
            report.partitions.push(partition_report(
                "overall",
                &preds,
                &gold,
                &data.split.candidate_ids,
                name_of,
            )?);
        }
    }
    Ok(report)
}

pub struct ExperimentOutcome {
    pub report: MetricsReport,
    pub summary: TrainSummary,
    pub checkpoint_path: PathBuf,
    pub report_csv_path: PathBuf,
    pub report_txt_path: PathBuf,
}

fn write_reports(
    cfg: &ExperimentConfig,
    report: &MetricsReport,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let csv_path = cfg.out_dir.join("report.csv");
    fs::write(&csv_path, emit_csv(report))?;
    let txt_path = cfg.out_dir.join("report.txt");
    let title = format!("task: {}", cfg.task.name());
    fs::write(&txt_path, render_table(report, &title))?;
    Ok((csv_path, txt_path))
}

/// Full pipeline: prepare, train, evaluate, persist.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let data = prepare_data(cfg)?;
    let (model, summary) = train_model(cfg, &data)?;
    let report = evaluate(&model, &data, cfg.task, cfg.train.threshold)?;

    fs::create_dir_all(&cfg.out_dir)?;
    let checkpoint_path = cfg.out_dir.join("model.ckpt");
    save_checkpoint(&checkpoint_path, &model.checkpoint(&cfg.header_echo()))?;
    let (report_csv_path, report_txt_path) = write_reports(cfg, &report)?;
    Ok(ExperimentOutcome {
        report,
        summary,
        checkpoint_path,
        report_csv_path,
        report_txt_path,
    })
}

/// Trains and saves a checkpoint without evaluating.
pub fn run_train(cfg: &ExperimentConfig) -> Result<(TrainSummary, PathBuf), HarnessError> {
    let data = prepare_data(cfg)?;
    let (model, summary) = train_model(cfg, &data)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let checkpoint_path = cfg.out_dir.join("model.ckpt");
    save_checkpoint(&checkpoint_path, &model.checkpoint(&cfg.header_echo()))?;
    Ok((summary, checkpoint_path))
}

/// Evaluates a saved checkpoint against the configured data.
pub fn run_eval(
    cfg: &ExperimentConfig,
    checkpoint: &std::path::Path,
) -> Result<(MetricsReport, PathBuf, PathBuf), HarnessError> {
    let data = prepare_data(cfg)?;
    let ckpt = load_checkpoint(checkpoint)?;
    let model = Model::from_checkpoint(
        &ckpt,
        data.corpus.labels.clone(),
        data.table.clone(),
        data.stats.clone(),
    )?;
    let report = evaluate(&model, &data, cfg.task, cfg.train.threshold)?;
    let (csv, txt) = write_reports(cfg, &report)?;
    Ok((report, csv, txt))
}

//! Episodic meta-learning over label-description prototypes.
//!
//! A two-layer tanh projection `G(e) = tanh(M2 tanh(M1 e))` maps a label
//! embedding into utterance space; class probabilities are a softmax over
//! negated Euclidean distances to the prototypes. Each training episode
//! splits the seen classes into meta-seen classes (all parameters update
//! on their utterances) and meta-unseen classes (only the projection
//! updates), simulating a zero-shot task. Prediction picks the nearest
//! prototype among the task candidates; the generalized task falls back
//! to unseen classes when the maximum probability is below a threshold.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attention::{
    bind_feature_vars, encode, encode_graph, init_feature_params, Ablations, Dims, EncoderInput,
    RidgeClassifier,
};
use crate::data::{
    sample_episode, ClassId, DataError, EmbeddingTable, IntentLabel, UnigramStats, Utterance,
};
use crate::numerics::{
    adam_step, euclidean, softmax, AdamState, Checkpoint, Matrix, NumericsError, ParamStore, Tape,
    TapeBinding, Var,
};

pub const PROJ_M1: &str = "proj.m1";
pub const PROJ_M2: &str = "proj.m2";

/// Fraction of training utterances (per class) held out for episode-level
/// validation and early stopping.
pub const HOLDOUT_FRACTION: f64 = 0.1;
/// Episodes without validation improvement before training stops.
pub const EARLY_STOP_PATIENCE: usize = 20;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("batch label {label} is outside the episode class set")]
    LabelOutsideEpisode { label: ClassId },
}

/// Training hyperparameters. The defaults follow the SNIPS setup
/// (learning rates 0.006/0.002, 4 meta-seen classes, threshold 0.6);
/// [`TrainConfig::smp`] switches to the SMP setup (0.008/0.004, 21
/// meta-seen classes, threshold 0.8).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub n_meta_seen: usize,
    pub lr_train: f64,
    pub lr_adapt: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub threshold: f64,
    pub ablations: Ablations,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 200,
            n_meta_seen: 4,
            lr_train: 0.006,
            lr_adapt: 0.002,
            batch_size: 32,
            seed: 0,
            threshold: 0.6,
            ablations: Ablations::default(),
        }
    }
}

impl TrainConfig {
    pub fn smp() -> Self {
        TrainConfig {
            n_meta_seen: 21,
            lr_train: 0.008,
            lr_adapt: 0.004,
            threshold: 0.8,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self, seen_count: usize) -> Result<(), MetaError> {
        if self.episodes == 0 {
            return Err(MetaError::Config("episodes must be positive".into()));
        }
        if self.n_meta_seen == 0 || self.n_meta_seen >= seen_count {
            return Err(MetaError::Config(format!(
                "n_meta_seen must satisfy 1 <= n < {seen_count}, got {}",
                self.n_meta_seen
            )));
        }
        if self.lr_train <= 0.0 || self.lr_adapt <= 0.0 {
            return Err(MetaError::Config("learning rates must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(MetaError::Config("batch size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(MetaError::Config(format!(
                "threshold must lie in [0,1], got {}",
                self.threshold
            )));
        }
        self.ablations.validate().map_err(MetaError::Config)
    }
}

/// A projected class prototype `G(e_i)`; entries lie strictly in (-1, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Prototype {
    pub class_id: ClassId,
    pub vector: Vec<f64>,
}

/// Two-layer tanh projection of a label embedding into utterance space.
pub fn project_label(e: &[f64], m1: &Matrix, m2: &Matrix) -> Vec<f64> {
    let e = Matrix::col_from_slice(e);
    let hidden = m1.matmul(&e).map(f64::tanh);
    m2.matmul(&hidden).map(f64::tanh).col_vec(0)
}

/// Softmax over negated distances.
pub fn probabilities_from_distances(distances: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = distances.iter().map(|d| -d).collect();
    softmax(&neg)
}

/// `p_i(x) = exp(-d(x, G(e_i))) / sum_j exp(-d(x, G(e_j)))` over the
/// supplied prototypes.
pub fn class_probabilities(x: &[f64], prototypes: &[Prototype]) -> Result<Vec<f64>, MetaError> {
    if prototypes.is_empty() {
        return Err(MetaError::Config(
            "class_probabilities needs at least one prototype".into(),
        ));
    }
    let mut distances = Vec::with_capacity(prototypes.len());
    for p in prototypes {
        distances.push(euclidean(x, &p.vector)?);
    }
    Ok(probabilities_from_distances(&distances))
}

/// One utterance prepared for the encoder, with its gold label.
#[derive(Clone, Debug)]
pub struct TrainExample {
    pub input: EncoderInput,
    pub label_id: ClassId,
}

/// The full trainable model plus its frozen companions.
#[derive(Clone, Debug)]
pub struct Model {
    pub store: ParamStore,
    pub clf: RidgeClassifier,
    pub table: EmbeddingTable,
    pub stats: UnigramStats,
    pub labels: Vec<IntentLabel>,
    pub dims: Dims,
    pub ablations: Ablations,
    label_embeds: Vec<Vec<f64>>,
}

impl Model {
    /// Initializes all parameter groups (seeded), fits the frozen ridge
    /// classifier over every label description and caches the label
    /// embeddings.
    pub fn new(
        labels: Vec<IntentLabel>,
        table: EmbeddingTable,
        stats: UnigramStats,
        dims: Dims,
        ablations: Ablations,
        seed: u64,
    ) -> Result<Self, MetaError> {
        ablations.validate().map_err(MetaError::Config)?;
        if dims.d_w != table.dim() {
            return Err(MetaError::Config(format!(
                "dims.d_w = {} but embedding table has dim {}",
                dims.d_w,
                table.dim()
            )));
        }
        let clf = RidgeClassifier::fit(&labels, &table)?;
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        init_feature_params(&mut store, &dims, &ablations, &mut rng);
        init_projection_params(&mut store, &dims, &mut rng);
        let label_embeds = labels
            .iter()
            .map(|l| crate::data::label_embedding(l, &table))
            .collect();
        Ok(Model {
            store,
            clf,
            table,
            stats,
            labels,
            dims,
            ablations,
            label_embeds,
        })
    }

    pub fn label_embedding(&self, class_id: ClassId) -> &[f64] {
        &self.label_embeds[class_id]
    }

    /// `G(e_i)` for one class under the current projection parameters.
    pub fn prototype(&self, class_id: ClassId) -> Prototype {
        let vector = project_label(
            &self.label_embeds[class_id],
            self.store.value(PROJ_M1),
            self.store.value(PROJ_M2),
        );
        Prototype { class_id, vector }
    }

    /// Prototypes for a class set, ascending class id.
    pub fn prototypes(&self, ids: &BTreeSet<ClassId>) -> Vec<Prototype> {
        ids.iter().map(|&id| self.prototype(id)).collect()
    }

    pub fn prepare_example(&self, utterance: &Utterance) -> TrainExample {
        TrainExample {
            input: EncoderInput::prepare(
                &utterance.tokens,
                &self.table,
                &self.stats,
                &self.clf,
                &self.ablations,
            ),
            label_id: utterance.label_id,
        }
    }

    /// Inference-mode utterance feature `x`.
    pub fn encode_tokens(&self, tokens: &[String]) -> Result<Vec<f64>, MetaError> {
        let input = EncoderInput::prepare(tokens, &self.table, &self.stats, &self.clf, &self.ablations);
        Ok(encode(&input, &self.store, &self.ablations)?)
    }

    /// Standard-task prediction: nearest prototype among the candidates,
    /// ties broken by lowest class id.
    pub fn predict_standard(&self, x: &[f64], candidates: &BTreeSet<ClassId>) -> Result<ClassId, MetaError> {
        if candidates.is_empty() {
            return Err(MetaError::Config("empty candidate set".into()));
        }
        let mut best: Option<(ClassId, f64)> = None;
        for &id in candidates {
            let proto = self.prototype(id);
            let d = euclidean(x, &proto.vector)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((id, d));
            }
        }
        Ok(best.unwrap().0)
    }

    /// Generalized-task prediction with the threshold rule: probabilities
    /// over all candidates; if the maximum is below `threshold` the
    /// argmax is restricted to unseen classes.
    pub fn predict_generalized(
        &self,
        x: &[f64],
        candidates: &BTreeSet<ClassId>,
        unseen_ids: &BTreeSet<ClassId>,
        threshold: f64,
    ) -> Result<ClassId, MetaError> {
        if candidates.is_empty() || unseen_ids.is_empty() {
            return Err(MetaError::Config("empty candidate or unseen set".into()));
        }
        let prototypes = self.prototypes(candidates);
        let probs = class_probabilities(x, &prototypes)?;
        let argmax_over = |keep: &dyn Fn(ClassId) -> bool| -> ClassId {
            let mut best: Option<(ClassId, f64)> = None;
            for (p, proto) in probs.iter().zip(&prototypes) {
                if !keep(proto.class_id) {
                    continue;
                }
                if best.is_none_or(|(_, bp)| *p > bp) {
                    best = Some((proto.class_id, *p));
                }
            }
            best.expect("non-empty candidate subset").0
        };
        let max_p = probs.iter().fold(f64::NEG_INFINITY, |m, p| m.max(*p));
        if max_p >= threshold {
            Ok(argmax_over(&|_| true))
        } else {
            Ok(argmax_over(&|id| unseen_ids.contains(&id)))
        }
    }

    /// Serializes every parameter group plus the frozen ridge weights.
    pub fn checkpoint(&self, extra_header: &str) -> Checkpoint {
        let mut header = String::new();
        header.push_str(&format!("d_w = {}\n", self.dims.d_w));
        header.push_str(&format!("d_h = {}\n", self.dims.d_h));
        header.push_str(&format!("d_b = {}\n", self.dims.d_b));
        header.push_str(&format!("d_a = {}\n", self.dims.d_a));
        header.push_str(&format!("d_s = {}\n", self.dims.d_s));
        header.push_str(&format!("ablate = {}\n", self.ablations.ablated_list()));
        header.push_str(extra_header);
        let mut tensors: Vec<(String, Matrix)> = self
            .store
            .names()
            .map(|n| (n.to_string(), self.store.value(n).clone()))
            .collect();
        tensors.push(("ridge.w".to_string(), self.clf.weights().clone()));
        Checkpoint { header, tensors }
    }

    /// Rebuilds a model from a checkpoint plus the frozen companions.
    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        labels: Vec<IntentLabel>,
        table: EmbeddingTable,
        stats: UnigramStats,
    ) -> Result<Self, MetaError> {
        let get = |key: &str| -> Option<String> {
            ckpt.header.lines().find_map(|l| {
                let (k, v) = l.split_once('=')?;
                (k.trim() == key).then(|| v.trim().to_string())
            })
        };
        let dim = |key: &str| -> Result<usize, MetaError> {
            get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| MetaError::Config(format!("checkpoint header missing {key}")))
        };
        let dims = Dims {
            d_w: dim("d_w")?,
            d_h: dim("d_h")?,
            d_b: dim("d_b")?,
            d_a: dim("d_a")?,
            d_s: dim("d_s")?,
        };
        let ablations = match get("ablate") {
            Some(list) => Ablations::from_ablate_list(&list).map_err(MetaError::Config)?,
            None => Ablations::default(),
        };
        let mut model = Model::new(labels, table, stats, dims, ablations, 0)?;
        for (name, tensor) in &ckpt.tensors {
            if name == "ridge.w" {
                model.clf = RidgeClassifier::from_weights(tensor.clone());
                continue;
            }
            let current = model.store.index_of(name).ok_or_else(|| {
                MetaError::Config(format!("checkpoint tensor `{name}` has no parameter group"))
            })?;
            if !model.store.value_at(current).same_shape(tensor) {
                return Err(MetaError::Config(format!(
                    "checkpoint tensor `{name}` shape mismatch"
                )));
            }
            *model.store.value_mut(name) = tensor.clone();
        }
        Ok(model)
    }
}

fn init_projection_params(store: &mut ParamStore, dims: &Dims, rng: &mut impl Rng) {
    let bound1 = (1.0 / dims.d_w as f64).sqrt();
    let m1 = Matrix::from_fn(dims.d_s, dims.d_w, |_, _| rng.gen_range(-bound1..bound1));
    let bound2 = (1.0 / dims.d_s as f64).sqrt();
    let m2 = Matrix::from_fn(2 * dims.d_h, dims.d_s, |_, _| rng.gen_range(-bound2..bound2));
    store.insert(PROJ_M1, m1, true);
    store.insert(PROJ_M2, m2, true);
}

/// `sqrt(sum((x - g)^2))` as tape nodes.
fn distance_node(tape: &mut Tape, x: Var, g: Var) -> Var {
    let diff = tape.sub(x, g);
    let sq = tape.hadamard(diff, diff);
    let s = tape.sum_all(sq);
    tape.sqrt(s)
}

fn prototype_nodes(
    tape: &mut Tape,
    model: &Model,
    m1: Var,
    m2: Var,
    class_ids: &[ClassId],
) -> Vec<Var> {
    class_ids
        .iter()
        .map(|&id| {
            let e = tape.input(Matrix::col_from_slice(model.label_embedding(id)));
            let h = tape.matmul(m1, e);
            let h = tape.tanh(h);
            let g = tape.matmul(m2, h);
            tape.tanh(g)
        })
        .collect()
}

/// Mean negative log-probability of the gold classes given per-example
/// feature nodes and shared prototype nodes.
fn nll_loss(
    tape: &mut Tape,
    features: &[(Var, usize)], // (x node, index of gold class in prototype list)
    prototypes: &[Var],
) -> Var {
    let mut terms = Vec::with_capacity(features.len());
    for &(x, target) in features {
        let distances: Vec<Var> = prototypes
            .iter()
            .map(|&g| {
                let d = distance_node(tape, x, g);
                tape.scale(d, -1.0)
            })
            .collect();
        let logits = tape.concat_rows(&distances);
        let logp = tape.log_softmax(logits);
        let picked = tape.pick(logp, target);
        terms.push(tape.scale(picked, -1.0));
    }
    let total = if terms.len() == 1 {
        terms[0]
    } else {
        let stacked = tape.concat_rows(&terms);
        tape.sum_all(stacked)
    };
    tape.scale(total, 1.0 / features.len() as f64)
}

fn target_index(ids: &[ClassId], label: ClassId) -> Result<usize, MetaError> {
    ids.binary_search(&label)
        .map_err(|_| MetaError::LabelOutsideEpisode { label })
}

/// Builds the full meta-training graph (encoder through NLL) for a batch.
/// Returns the tape, the parameter binding and the scalar loss node.
pub fn meta_train_forward(
    model: &Model,
    batch: &[&TrainExample],
    meta_seen_ids: &BTreeSet<ClassId>,
) -> Result<(Tape, TapeBinding, Var), MetaError> {
    if batch.is_empty() {
        return Err(MetaError::Config("empty meta-training batch".into()));
    }
    let ids: Vec<ClassId> = meta_seen_ids.iter().copied().collect();
    let mut tape = Tape::new();
    let mut binding = TapeBinding::new();
    let feature_vars = bind_feature_vars(&mut tape, &mut binding, &model.store, &model.ablations);
    let m1 = binding.bind(&mut tape, &model.store, PROJ_M1);
    let m2 = binding.bind(&mut tape, &model.store, PROJ_M2);
    let prototypes = prototype_nodes(&mut tape, model, m1, m2, &ids);
    let mut features = Vec::with_capacity(batch.len());
    for ex in batch {
        let target = target_index(&ids, ex.label_id)?;
        let x = encode_graph(&mut tape, &feature_vars, &ex.input);
        features.push((x, target));
    }
    let loss = nll_loss(&mut tape, &features, &prototypes);
    Ok((tape, binding, loss))
}

/// One meta-training step: forward, backward, Adam on every trainable
/// group. Returns the batch loss.
pub fn meta_train_step(
    model: &mut Model,
    batch: &[&TrainExample],
    meta_seen_ids: &BTreeSet<ClassId>,
    adam: &mut AdamState,
    lr_train: f64,
) -> Result<f64, MetaError> {
    let (mut tape, binding, loss) = meta_train_forward(model, batch, meta_seen_ids)?;
    let loss_value = tape.scalar(loss);
    tape.backward(loss);
    binding.harvest(&tape, &mut model.store);
    adam_step(&mut model.store, adam, lr_train)?;
    Ok(loss_value)
}

/// One meta-adapting step: features are computed with frozen parameters
/// and only the projection matrices receive gradients. Samples and gold
/// classes come from the meta-unseen set while the probability
/// denominator ranges over every class of the episode (meta-seen and
/// meta-unseen), so the adapted prototypes must win against the
/// meta-seen ones; that is what counteracts the bias towards seen
/// classes. A no-op (loss evaluation only) when meta-adapting is
/// ablated.
pub fn meta_adapt_step(
    model: &mut Model,
    batch: &[&TrainExample],
    meta_seen_ids: &BTreeSet<ClassId>,
    meta_unseen_ids: &BTreeSet<ClassId>,
    adam: &mut AdamState,
    lr_adapt: f64,
) -> Result<f64, MetaError> {
    if batch.is_empty() {
        return Err(MetaError::Config("empty meta-adapting batch".into()));
    }
    for ex in batch {
        if !meta_unseen_ids.contains(&ex.label_id) {
            return Err(MetaError::LabelOutsideEpisode { label: ex.label_id });
        }
    }
    let ids: Vec<ClassId> = meta_seen_ids
        .union(meta_unseen_ids)
        .copied()
        .collect();
    if !model.ablations.meta_adapt {
        let id_set: BTreeSet<ClassId> = ids.iter().copied().collect();
        let prototypes = model.prototypes(&id_set);
        let mut total = 0.0;
        for ex in batch {
            let target = target_index(&ids, ex.label_id)?;
            let x = encode(&ex.input, &model.store, &model.ablations)?;
            let probs = class_probabilities(&x, &prototypes)?;
            total -= probs[target].ln();
        }
        return Ok(total / batch.len() as f64);
    }

    let mut tape = Tape::new();
    let mut binding = TapeBinding::new();
    let m1 = binding.bind(&mut tape, &model.store, PROJ_M1);
    let m2 = binding.bind(&mut tape, &model.store, PROJ_M2);
    let prototypes = prototype_nodes(&mut tape, model, m1, m2, &ids);
    let mut features = Vec::with_capacity(batch.len());
    for ex in batch {
        let target = target_index(&ids, ex.label_id)?;
        let x = encode(&ex.input, &model.store, &model.ablations)?;
        let x = tape.input(Matrix::col_from_slice(&x));
        features.push((x, target));
    }
    let loss = nll_loss(&mut tape, &features, &prototypes);
    let loss_value = tape.scalar(loss);
    tape.backward(loss);
    binding.harvest(&tape, &mut model.store);
    adam_step(&mut model.store, adam, lr_adapt)?;
    Ok(loss_value)
}

/// Per-run training record.
#[derive(Clone, Debug, Default)]
pub struct TrainSummary {
    pub episodes_run: usize,
    pub train_losses: Vec<f64>,
    pub adapt_losses: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub best_val_accuracy: Option<f64>,
    pub early_stopped: bool,
}

/// Runs the episodic trainer: per episode, one pass of meta-training over
/// the meta-seen utterances then one pass of meta-adapting over the
/// meta-unseen utterances. Early stopping watches the negative
/// log-likelihood on a per-class 10% holdout (accuracy saturates long
/// before the prototype geometry stops improving) and restores the best
/// parameters. Fully determined by `config.seed`.
pub fn train(
    model: &mut Model,
    train_utterances: &[Utterance],
    seen_ids: &BTreeSet<ClassId>,
    config: &TrainConfig,
) -> Result<TrainSummary, MetaError> {
    config.validate(seen_ids.len())?;
    if train_utterances.is_empty() {
        return Err(MetaError::Config("empty training set".into()));
    }
    for u in train_utterances {
        if !seen_ids.contains(&u.label_id) {
            return Err(MetaError::Config(format!(
                "training utterance carries non-seen label {}",
                u.label_id
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let examples: Vec<TrainExample> = train_utterances
        .iter()
        .map(|u| model.prepare_example(u))
        .collect();

    // stratified holdout for validation / early stopping
    let mut pool: Vec<usize> = Vec::new();
    let mut holdout: Vec<usize> = Vec::new();
    for &class in seen_ids {
        let mut members: Vec<usize> = (0..examples.len())
            .filter(|&i| examples[i].label_id == class)
            .collect();
        members.shuffle(&mut rng);
        let n_hold = (HOLDOUT_FRACTION * members.len() as f64).floor() as usize;
        holdout.extend(&members[..n_hold]);
        pool.extend(&members[n_hold..]);
    }
    let holdout_features: Vec<(ClassId, &TrainExample)> = holdout
        .iter()
        .map(|&i| (examples[i].label_id, &examples[i]))
        .collect();

    let mut adam_train = AdamState::new(&model.store, |_| true);
    let mut adam_adapt = AdamState::new(&model.store, |n| n.starts_with("proj."));

    let seen_sorted: Vec<ClassId> = seen_ids.iter().copied().collect();
    let mut summary = TrainSummary::default();
    let mut best_store: Option<ParamStore> = None;
    let mut best_loss = f64::INFINITY;
    let mut best_acc = 0.0;
    let mut stale = 0usize;

    for _ in 0..config.episodes {
        let episode = sample_episode(seen_ids, config.n_meta_seen, &mut rng)?;

        let mut meta_seen: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| episode.meta_seen_ids.contains(&examples[i].label_id))
            .collect();
        meta_seen.shuffle(&mut rng);
        let mut episode_loss = 0.0;
        let mut batches = 0usize;
        for chunk in meta_seen.chunks(config.batch_size) {
            let batch: Vec<&TrainExample> = chunk.iter().map(|&i| &examples[i]).collect();
            episode_loss += meta_train_step(
                model,
                &batch,
                &episode.meta_seen_ids,
                &mut adam_train,
                config.lr_train,
            )?;
            batches += 1;
        }
        summary
            .train_losses
            .push(episode_loss / batches.max(1) as f64);

        if config.ablations.meta_adapt {
            let mut meta_unseen: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&i| episode.meta_unseen_ids.contains(&examples[i].label_id))
                .collect();
            meta_unseen.shuffle(&mut rng);
            let mut adapt_loss = 0.0;
            let mut adapt_batches = 0usize;
            for chunk in meta_unseen.chunks(config.batch_size) {
                let batch: Vec<&TrainExample> = chunk.iter().map(|&i| &examples[i]).collect();
                adapt_loss += meta_adapt_step(
                    model,
                    &batch,
                    &episode.meta_seen_ids,
                    &episode.meta_unseen_ids,
                    &mut adam_adapt,
                    config.lr_adapt,
                )?;
                adapt_batches += 1;
            }
            summary
                .adapt_losses
                .push(adapt_loss / adapt_batches.max(1) as f64);
        }

        summary.episodes_run += 1;

        if !holdout_features.is_empty() {
            let prototypes = model.prototypes(seen_ids);
            let mut nll = 0.0;
            let mut correct = 0usize;
            for (gold, ex) in &holdout_features {
                let x = encode(&ex.input, &model.store, &model.ablations)?;
                let probs = class_probabilities(&x, &prototypes)?;
                let target = seen_sorted.binary_search(gold).expect("gold is seen");
                nll -= probs[target].ln();
                let argmax = probs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0;
                if prototypes[argmax].class_id == *gold {
                    correct += 1;
                }
            }
            let nll = nll / holdout_features.len() as f64;
            let acc = correct as f64 / holdout_features.len() as f64;
            summary.val_loss.push(nll);
            summary.val_accuracy.push(acc);
            if nll < best_loss {
                best_loss = nll;
                best_acc = acc;
                best_store = Some(model.store.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= EARLY_STOP_PATIENCE {
                    summary.early_stopped = true;
                    break;
                }
            }
        }
    }

    if let Some(best) = best_store {
        model.store = best;
        summary.best_val_accuracy = Some(best_acc);
    }
    Ok(summary)
}

//! Finite-difference verification of the full training gradient.
//!
//! Builds a small synthetic batch, runs one meta-training forward/backward
//! and compares every parameter entry's analytic gradient against central
//! finite differences, aggregated per reported parameter group.

use std::collections::BTreeSet;

use crate::attention::Dims;
use crate::data::{split_standard, unigram_stats, ClassId};
use crate::metalearn::{meta_train_forward, Model, TrainExample};
use crate::numerics::Matrix;

use super::synth::{synth_corpus, SynthDesign};
use super::HarnessError;

/// Tolerance every group must satisfy.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

const FD_STEP: f64 = 1e-5;
/// Entries where both gradients sit below finite-difference resolution
/// are skipped.
const SKIP_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GroupCheck {
    pub group: String,
    pub max_rel_err: f64,
    pub entries_checked: usize,
}

impl GroupCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_err < GRADCHECK_TOLERANCE
    }
}

fn report_group(name: &str) -> &'static str {
    if name.starts_with("encoder.") {
        "encoder_bilstm"
    } else if name.starts_with("sig.fwd") || name.starts_with("sig.bwd") {
        "signature_bilstm"
    } else if name == "sig.f" {
        "F"
    } else if name == "attn.w1" {
        "W1"
    } else if name == "attn.w2" {
        "W2"
    } else if name == "mix.b" {
        "b"
    } else if name == "proj.m1" {
        "M1"
    } else if name == "proj.m2" {
        "M2"
    } else {
        "other"
    }
}

const REPORT_ORDER: [&str; 8] = [
    "encoder_bilstm",
    "signature_bilstm",
    "F",
    "W1",
    "W2",
    "b",
    "M1",
    "M2",
];

/// Runs the gradient check on a 3-utterance micro-batch with
/// `d_w=8, d_h=8, d_b=4, d_a=8, d_s=8`.
pub fn run_gradcheck(seed: u64) -> Result<Vec<GroupCheck>, HarnessError> {
    let design = SynthDesign {
        embed_dim: 8,
        utterance_len: 5,
        ..SynthDesign::default()
    };
    let (corpus, table) = synth_corpus(4, 3, 4, &design, seed)?;
    let split = split_standard(&corpus)?;
    let stats = unigram_stats(&split.train)?;
    let dims = Dims {
        d_w: 8,
        d_h: 8,
        d_b: 4,
        d_a: 8,
        d_s: 8,
    };
    let mut model = Model::new(
        corpus.labels.clone(),
        table,
        stats,
        dims,
        Default::default(),
        seed,
    )?;

    // one utterance from each seen class
    let meta_seen: BTreeSet<ClassId> = corpus.seen_ids.clone();
    let mut batch_utts = Vec::new();
    for &class in &meta_seen {
        let utt = split
            .train
            .iter()
            .find(|u| u.label_id == class)
            .expect("class has training samples");
        batch_utts.push(utt.clone());
    }
    let examples: Vec<TrainExample> = batch_utts
        .iter()
        .map(|u| model.prepare_example(u))
        .collect();
    let batch: Vec<&TrainExample> = examples.iter().collect();

    // analytic gradients
    let (mut tape, binding, loss) = meta_train_forward(&model, &batch, &meta_seen)?;
    tape.backward(loss);
    model.store.zero_grads();
    binding.harvest(&tape, &mut model.store);
    let names: Vec<String> = model.store.names().map(str::to_string).collect();
    let analytic: Vec<Matrix> = names.iter().map(|n| model.store.grad(n).clone()).collect();
    drop(tape);

    let loss_at = |model: &Model| -> Result<f64, HarnessError> {
        let (tape, _, loss) = meta_train_forward(model, &batch, &meta_seen)?;
        Ok(tape.scalar(loss))
    };

    let mut checks: Vec<GroupCheck> = REPORT_ORDER
        .iter()
        .map(|g| GroupCheck {
            group: g.to_string(),
            max_rel_err: 0.0,
            entries_checked: 0,
        })
        .collect();

    for (name, grad) in names.iter().zip(&analytic) {
        let group = report_group(name);
        let slot = checks
            .iter_mut()
            .find(|c| c.group == group)
            .expect("known report group");
        for idx in 0..grad.len() {
            let an = grad.data()[idx];
            let original = model.store.value(name).data()[idx];
            model.store.value_mut(name).data_mut()[idx] = original + FD_STEP;
            let plus = loss_at(&model)?;
            model.store.value_mut(name).data_mut()[idx] = original - FD_STEP;
            let minus = loss_at(&model)?;
            model.store.value_mut(name).data_mut()[idx] = original;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            if an.abs() < SKIP_FLOOR && fd.abs() < SKIP_FLOOR {
                continue;
            }
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
            slot.entries_checked += 1;
            if rel > slot.max_rel_err {
                slot.max_rel_err = rel;
            }
        }
    }
    Ok(checks)
}

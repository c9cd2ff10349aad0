//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines; a failed assertion names its criterion.

use std::collections::BTreeSet;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zsic::attention::{Ablations, Dims};
use zsic::data::{
    split_generalized, split_standard, unigram_stats, ClassId, Corpus, EmbeddingTable,
};
use zsic::harness::{
    emit_csv, run_gradcheck, synth_corpus, weighted_accuracy, write_synth_files, SynthDesign,
    GRADCHECK_TOLERANCE,
};
use zsic::metalearn::{
    class_probabilities, meta_adapt_step, meta_train_step, project_label, train, Model, Prototype,
    TrainConfig, TrainExample, PROJ_M1, PROJ_M2,
};
use zsic::numerics::{entropy, ridge_solve, AdamState, Matrix};

/// Serializes the training-heavy criteria so wall-clock bounds are not
/// distorted by CPU contention between test threads.
fn heavy_lock() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|e| e.into_inner())
}

fn pass(n: usize, label: &str) {
    println!("acceptance criterion {n} ({label}): PASS");
}

#[test]
fn criterion_1_gradient_fidelity() {
    let start = Instant::now();
    let checks = run_gradcheck(0).expect("gradcheck runs");
    let elapsed = start.elapsed();

    let expected = [
        "encoder_bilstm",
        "signature_bilstm",
        "F",
        "W1",
        "W2",
        "b",
        "M1",
        "M2",
    ];
    assert_eq!(checks.len(), expected.len());
    for (check, want) in checks.iter().zip(expected) {
        assert_eq!(check.group, want);
        assert!(check.entries_checked > 0, "group {want} was never checked");
        assert!(
            check.max_rel_err < GRADCHECK_TOLERANCE,
            "group {} max relative error {} >= {GRADCHECK_TOLERANCE}",
            check.group,
            check.max_rel_err
        );
    }
    assert!(
        elapsed.as_secs() < 30,
        "gradcheck took {elapsed:?}, budget is 30 s"
    );
    pass(1, "gradient fidelity");
}

/// Dense solve by Gaussian elimination with partial pivoting; the
/// acceptance oracle stays independent of the library's Cholesky path.
fn gaussian_solve(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let m = b.cols();
    let mut aug = Matrix::zeros(n, n + m);
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, a.get(r, c));
        }
        for c in 0..m {
            aug.set(r, n + c, b.get(r, c));
        }
    }
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if aug.get(r, col).abs() > aug.get(piv, col).abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..(n + m) {
                let t = aug.get(col, c);
                aug.set(col, c, aug.get(piv, c));
                aug.set(piv, c, t);
            }
        }
        let d = aug.get(col, col);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug.get(r, col) / d;
            for c in col..(n + m) {
                aug.set(r, c, aug.get(r, c) - f * aug.get(col, c));
            }
        }
    }
    let mut x = Matrix::zeros(n, m);
    for r in 0..n {
        for c in 0..m {
            x.set(r, c, aug.get(r, n + c) / aug.get(r, r));
        }
    }
    x
}

#[test]
fn criterion_2_ridge_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reg = 1.0;
    for _ in 0..100 {
        let c = rng.gen_range(2..=20usize);
        let d_w = rng.gen_range(2..=50usize);
        let e = Matrix::from_fn(c, d_w, |_, _| rng.gen_range(-1.0..1.0));
        let y = Matrix::identity(c);

        let w_dual = ridge_solve(&e, &y, reg).expect("ridge solve");

        let mut lhs = e.transpose().matmul(&e);
        for i in 0..d_w {
            lhs.set(i, i, lhs.get(i, i) + reg);
        }
        let w_primal = gaussian_solve(&lhs, &e.transpose().matmul(&y));
        let diff = w_dual.sub(&w_primal).frob_norm();
        assert!(diff < 1e-8, "dual/primal Frobenius gap {diff}");

        let grad = e
            .transpose()
            .matmul(&e.matmul(&w_dual).sub(&y))
            .scale(2.0)
            .add(&w_dual.scale(2.0 * reg));
        assert!(
            grad.frob_norm() < 1e-6 * (1.0 + w_dual.frob_norm()),
            "objective gradient norm {} too large",
            grad.frob_norm()
        );
    }
    pass(2, "ridge oracle equivalence");
}

#[test]
fn criterion_3_analytic_spot_values() {
    // entropy of the uniform distribution over 4 outcomes
    let h = entropy(&[0.25, 0.25, 0.25, 0.25]);
    assert!((h - 4.0f64.ln()).abs() < 1e-12, "entropy(uniform 4) = {h}");

    // s(P = 1e-5) = eps / (eps + 1e-5) = 0.5 exactly
    let tokens: Vec<String> = std::iter::once("rare".to_string())
        .chain(std::iter::repeat("common".to_string()).take(99_999))
        .collect();
    let stats = unigram_stats(&[zsic::data::Utterance {
        tokens,
        label_id: 0,
    }])
    .expect("stats");
    assert_eq!(stats.p("rare"), 1e-5);
    assert_eq!(
        zsic::attention::general_word_importance("rare", &stats),
        0.5
    );

    // G(0) = 0 exactly
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m1 = Matrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
    let m2 = Matrix::from_fn(4, 5, |_, _| rng.gen_range(-1.0..1.0));
    assert_eq!(project_label(&[0.0, 0.0, 0.0], &m1, &m2), vec![0.0; 4]);

    // class probabilities at distances (0, 2)
    let prototypes = vec![
        Prototype {
            class_id: 0,
            vector: vec![0.0, 0.0],
        },
        Prototype {
            class_id: 1,
            vector: vec![2.0, 0.0],
        },
    ];
    let probs = class_probabilities(&[0.0, 0.0], &prototypes).expect("probabilities");
    assert!((probs[0] - 0.8808).abs() < 1e-4, "p0 = {}", probs[0]);
    assert!((probs[1] - 0.1192).abs() < 1e-4, "p1 = {}", probs[1]);
    pass(3, "analytic spot values");
}

fn acceptance_corpus() -> &'static (Corpus, EmbeddingTable) {
    static CORPUS: OnceLock<(Corpus, EmbeddingTable)> = OnceLock::new();
    CORPUS.get_or_init(|| {
        synth_corpus(8, 6, 50, &SynthDesign::default(), 0).expect("synthetic corpus")
    })
}

#[test]
fn criterion_4_synthetic_standard_zsic() {
    let _guard = heavy_lock();
    let start = Instant::now();
    let (corpus, table) = acceptance_corpus();
    let split = split_standard(corpus).expect("standard split");
    let stats = unigram_stats(&split.train).expect("stats");
    let mut model = Model::new(
        corpus.labels.clone(),
        table.clone(),
        stats,
        Dims::with_defaults(table.dim()),
        Ablations::default(),
        0,
    )
    .expect("model");
    let config = TrainConfig::default();
    train(&mut model, &split.train, &corpus.seen_ids, &config).expect("training");

    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for u in &split.test {
        let x = model.encode_tokens(&u.tokens).expect("encode");
        preds.push(model.predict_standard(&x, &split.candidate_ids).expect("predict"));
        gold.push(u.label_id);
    }
    let acc = weighted_accuracy(&preds, &gold, &split.candidate_ids).expect("accuracy");
    let elapsed = start.elapsed();
    assert!(
        acc >= 0.90,
        "standard-task accuracy {acc} below the 0.90 bar"
    );
    assert!(
        elapsed.as_secs() < 120,
        "standard-task run took {elapsed:?}, budget is 2 minutes"
    );
    pass(4, &format!("synthetic standard ZSIC, acc {acc:.4}"));
}

fn generalized_run(adapt: bool) -> (f64, f64) {
    let (corpus, table) = acceptance_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let split = split_generalized(corpus, 0.7, &mut rng).expect("generalized split");
    let stats = unigram_stats(&split.train).expect("stats");
    let ablations = Ablations {
        meta_adapt: adapt,
        ..Ablations::default()
    };
    let mut model = Model::new(
        corpus.labels.clone(),
        table.clone(),
        stats,
        Dims::with_defaults(table.dim()),
        ablations,
        0,
    )
    .expect("model");
    let config = TrainConfig {
        ablations,
        ..TrainConfig::default()
    };
    train(&mut model, &split.train, &corpus.seen_ids, &config).expect("training");

    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for u in &split.test {
        let x = model.encode_tokens(&u.tokens).expect("encode");
        preds.push(
            model
                .predict_generalized(&x, &split.candidate_ids, &corpus.unseen_ids, 0.6)
                .expect("predict"),
        );
        gold.push(u.label_id);
    }
    let mut unseen_preds = Vec::new();
    let mut unseen_gold = Vec::new();
    for (p, g) in preds.iter().zip(&gold) {
        if corpus.unseen_ids.contains(g) {
            unseen_preds.push(*p);
            unseen_gold.push(*g);
        }
    }
    let unseen = weighted_accuracy(&unseen_preds, &unseen_gold, &corpus.unseen_ids)
        .expect("unseen accuracy");
    let overall = weighted_accuracy(&preds, &gold, &split.candidate_ids).expect("overall accuracy");
    (unseen, overall)
}

#[test]
fn criterion_5_synthetic_generalized_zsic() {
    let _guard = heavy_lock();
    let (unseen, overall) = generalized_run(true);
    let (_, overall_no_adapt) = generalized_run(false);
    assert!(
        unseen >= 0.70,
        "generalized unseen-partition accuracy {unseen} below the 0.70 bar"
    );
    assert!(
        overall > overall_no_adapt,
        "meta-adapting run ({overall}) did not beat the ablated run ({overall_no_adapt})"
    );
    pass(
        5,
        &format!(
            "synthetic generalized ZSIC, unseen {unseen:.4}, overall {overall:.4} > {overall_no_adapt:.4} w/o meta-adapting"
        ),
    );
}

fn small_model(ablations: Ablations) -> (Model, Vec<TrainExample>, BTreeSet<ClassId>) {
    let design = SynthDesign {
        embed_dim: 8,
        utterance_len: 5,
        ..SynthDesign::default()
    };
    let (corpus, table) = synth_corpus(4, 3, 5, &design, 11).expect("small corpus");
    let split = split_standard(&corpus).expect("split");
    let stats = unigram_stats(&split.train).expect("stats");
    let dims = Dims {
        d_w: 8,
        d_h: 6,
        d_b: 3,
        d_a: 6,
        d_s: 8,
    };
    let model = Model::new(corpus.labels.clone(), table, stats, dims, ablations, 11)
        .expect("model");
    let examples: Vec<TrainExample> = split
        .train
        .iter()
        .map(|u| model.prepare_example(u))
        .collect();
    (model, examples, corpus.seen_ids.clone())
}

#[test]
fn criterion_6_freeze_contracts() {
    // meta-adapting moves only the projection matrices
    let (mut model, examples, seen) = small_model(Ablations::default());
    let seen_vec: Vec<ClassId> = seen.iter().copied().collect();
    let meta_seen: BTreeSet<ClassId> = seen_vec[..2].iter().copied().collect();
    let meta_unseen: BTreeSet<ClassId> = seen_vec[2..].iter().copied().collect();
    let batch: Vec<&TrainExample> = examples
        .iter()
        .filter(|e| meta_unseen.contains(&e.label_id))
        .collect();
    let before = model.store.clone();
    let mut adam = AdamState::new(&model.store, |n| n.starts_with("proj."));
    meta_adapt_step(&mut model, &batch, &meta_seen, &meta_unseen, &mut adam, 0.01)
        .expect("adapt step");
    for name in before.names() {
        if name.starts_with("proj.") {
            continue;
        }
        assert_eq!(
            before.value(name),
            model.store.value(name),
            "meta-adapting changed non-projection group {name}"
        );
    }
    assert!(
        before.value(PROJ_M1) != model.store.value(PROJ_M1)
            || before.value(PROJ_M2) != model.store.value(PROJ_M2),
        "meta-adapting did not move the projection"
    );

    // ds ablation freezes the signature BiLSTM and F across meta-training
    for (ablations, frozen_prefixes) in [
        (
            Ablations {
                ds: false,
                ..Ablations::default()
            },
            vec!["sig."],
        ),
        (
            Ablations {
                mlp: false,
                ..Ablations::default()
            },
            vec!["attn.w1", "attn.w2"],
        ),
    ] {
        let (mut model, examples, seen) = small_model(ablations);
        let batch: Vec<&TrainExample> = examples.iter().collect();
        let before = model.store.clone();
        let mut adam = AdamState::new(&model.store, |_| true);
        meta_train_step(&mut model, &batch, &seen, &mut adam, 0.01).expect("train step");
        let mut some_group_moved = false;
        for name in before.names() {
            let frozen = frozen_prefixes.iter().any(|p| name.starts_with(p));
            if frozen {
                assert_eq!(
                    before.value(name),
                    model.store.value(name),
                    "ablated group {name} changed during meta-training"
                );
            } else if before.value(name) != model.store.value(name) {
                some_group_moved = true;
            }
        }
        assert!(some_group_moved, "meta-training was a no-op");
    }
    pass(6, "freeze contracts");
}

#[test]
fn criterion_7_experiment_determinism() {
    let _guard = heavy_lock();
    let dir = tempfile::tempdir().expect("tempdir");
    let (corpus, table) = synth_corpus(6, 4, 12, &SynthDesign::default(), 5).expect("corpus");
    write_synth_files(&dir.path().join("data"), &corpus, &table).expect("synth files");

    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        format!(
            "task = generalized\ndata = {d}/corpus.tsv\nlabels = {d}/labels.tsv\nembeddings = {d}/embeddings.txt\nepisodes = 30\nn_meta_seen = 3\nseed = 7\nd_h = 16\nd_b = 4\nd_a = 16\nd_s = 24\n",
            d = dir.path().join("data").display()
        ),
    )
    .expect("config file");

    let run = |out: &str| {
        let overrides = zsic::harness::ConfigOverrides {
            out: Some(dir.path().join(out)),
            ..Default::default()
        };
        let cfg = zsic::harness::build_config(Some(&cfg_path), &overrides).expect("config");
        zsic::harness::run_experiment(&cfg).expect("experiment");
        std::fs::read(dir.path().join(out).join("report.csv")).expect("report bytes")
    };
    let first = run("out_a");
    let second = run("out_b");
    assert_eq!(first, second, "reports differ across identical runs");
    pass(7, "experiment determinism");
}

#[test]
fn criterion_8_metric_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let classes = rng.gen_range(2..9usize);
        let n = rng.gen_range(1..60usize);
        let ids: BTreeSet<ClassId> = (0..classes).collect();
        let gold: Vec<ClassId> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let preds: Vec<ClassId> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let acc = weighted_accuracy(&preds, &gold, &ids).expect("accuracy");
        let correct = preds.iter().zip(&gold).filter(|(p, g)| p == g).count();
        assert_eq!(
            acc,
            correct as f64 / n as f64,
            "weighted accuracy deviates from correct/total"
        );
    }
    pass(8, "metric identity");
}

#[test]
fn criterion_9_threshold_monotonicity() {
    let _guard = heavy_lock();
    let (corpus, table) = synth_corpus(6, 4, 20, &SynthDesign::default(), 9).expect("corpus");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let split = split_generalized(&corpus, 0.7, &mut rng).expect("split");
    let stats = unigram_stats(&split.train).expect("stats");
    let dims = Dims {
        d_h: 16,
        d_b: 4,
        d_a: 16,
        d_s: 24,
        ..Dims::with_defaults(table.dim())
    };
    let mut model = Model::new(
        corpus.labels.clone(),
        table.clone(),
        stats,
        dims,
        Ablations::default(),
        9,
    )
    .expect("model");
    let config = TrainConfig {
        episodes: 30,
        n_meta_seen: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    train(&mut model, &split.train, &corpus.seen_ids, &config).expect("training");

    let candidates = &split.candidate_ids;
    let prototypes = model.prototypes(candidates);
    let mut seen_counts = Vec::new();
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut seen_predictions = 0usize;
        for u in &split.test {
            let x = model.encode_tokens(&u.tokens).expect("encode");
            let pred = model
                .predict_generalized(&x, candidates, &corpus.unseen_ids, lambda)
                .expect("predict");
            if corpus.seen_ids.contains(&pred) {
                seen_predictions += 1;
            }

            let probs = class_probabilities(&x, &prototypes).expect("probabilities");
            let max_p = probs.iter().fold(f64::NEG_INFINITY, |m, p| m.max(*p));
            let argmax = prototypes[probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0]
                .class_id;
            if lambda == 0.0 {
                assert_eq!(pred, argmax, "lambda = 0 must match the unrestricted argmax");
            }
            if lambda == 1.0 && max_p < 1.0 {
                assert!(
                    corpus.unseen_ids.contains(&pred),
                    "lambda = 1 must force unseen predictions"
                );
            }
        }
        seen_counts.push(seen_predictions);
    }
    for pair in seen_counts.windows(2) {
        assert!(
            pair[1] <= pair[0],
            "raising lambda increased seen-class predictions: {seen_counts:?}"
        );
    }
    pass(
        9,
        &format!("threshold monotonicity, seen counts {seen_counts:?}"),
    );
}

/// Report CSV round-trip, exercised on a real experiment report.
#[test]
fn report_round_trip_on_real_output() {
    let _guard = heavy_lock();
    let dir = tempfile::tempdir().expect("tempdir");
    let (corpus, table) = synth_corpus(5, 3, 8, &SynthDesign::default(), 4).expect("corpus");
    write_synth_files(&dir.path().join("data"), &corpus, &table).expect("files");
    let overrides = zsic::harness::ConfigOverrides {
        data: Some(dir.path().join("data/corpus.tsv")),
        labels: Some(dir.path().join("data/labels.tsv")),
        embeddings: Some(dir.path().join("data/embeddings.txt")),
        out: Some(dir.path().join("out")),
        task: Some("standard".into()),
        ..Default::default()
    };
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "episodes = 5\nn_meta_seen = 2\nd_h = 8\nd_b = 2\nd_a = 8\nd_s = 8\n")
        .expect("config");
    let cfg = zsic::harness::build_config(Some(&cfg_path), &overrides).expect("config");
    let outcome = zsic::harness::run_experiment(&cfg).expect("experiment");
    let text = std::fs::read_to_string(&outcome.report_csv_path).expect("csv");
    let parsed = zsic::harness::parse_csv(&text).expect("parse");
    assert_eq!(parsed, outcome.report);
    assert_eq!(emit_csv(&parsed), text);
}

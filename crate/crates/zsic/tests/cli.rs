//! CLI behavior: exit codes and the end-to-end subcommand flow.

use zsic::harness::cli::run;

fn args(parts: &[&str]) -> Vec<String> {
    std::iter::once("zsic".to_string())
        .chain(parts.iter().map(|s| s.to_string()))
        .collect()
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(args(&["bogus"])), 1);
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(run(args(&["gradcheck", "--frobnicate"])), 1);
}

#[test]
fn bad_task_is_usage_error() {
    assert_eq!(
        run(args(&[
            "experiment", "--task", "nope", "--data", "x", "--labels", "x", "--embeddings", "x",
            "--out", "x"
        ])),
        1
    );
}

#[test]
fn double_attention_ablation_rejected() {
    assert_eq!(
        run(args(&[
            "experiment", "--ablate", "ds,mlp", "--data", "x", "--labels", "x", "--embeddings",
            "x", "--out", "x"
        ])),
        1
    );
}

#[test]
fn missing_data_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let missing = missing.to_str().unwrap();
    assert_eq!(
        run(args(&[
            "experiment", "--data", missing, "--labels", missing, "--embeddings", missing,
            "--out", dir.path().to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(args(&["--help"])), 0);
}

#[test]
fn synth_then_experiment_then_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    assert_eq!(
        run(args(&[
            "synth",
            "--out",
            data_dir.to_str().unwrap(),
            "--classes",
            "5",
            "--seen",
            "3",
            "--samples",
            "6",
            "--seed",
            "1"
        ])),
        0
    );
    for name in ["corpus.tsv", "labels.tsv", "embeddings.txt"] {
        assert!(data_dir.join(name).exists(), "{name} missing");
    }

    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "task = standard\ndata = {d}/corpus.tsv\nlabels = {d}/labels.tsv\nembeddings = {d}/embeddings.txt\nepisodes = 4\nn_meta_seen = 2\nd_h = 8\nd_b = 2\nd_a = 8\nd_s = 8\nseed = 3\n",
            d = data_dir.display()
        ),
    )
    .unwrap();

    let out = dir.path().join("run");
    assert_eq!(
        run(args(&[
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])),
        0
    );
    for name in ["model.ckpt", "report.csv", "report.txt"] {
        assert!(out.join(name).exists(), "{name} missing");
    }

    // evaluating the saved checkpoint reproduces a report
    let eval_out = dir.path().join("eval");
    assert_eq!(
        run(args(&[
            "eval",
            "--model",
            out.join("model.ckpt").to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            eval_out.to_str().unwrap()
        ])),
        0
    );
    let trained = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let evaluated = std::fs::read_to_string(eval_out.join("report.csv")).unwrap();
    assert_eq!(trained, evaluated, "eval of the checkpoint drifted");
}

#[test]
fn gradcheck_subcommand_passes() {
    assert_eq!(run(args(&["gradcheck", "--seed", "0"])), 0);
}

//! Utterance feature extraction with mixture attention.
//!
//! An utterance is encoded by a BiLSTM into `H` (one column per token).
//! Two attention distributions over the tokens are blended by a trainable
//! 1x2 weight vector `b`:
//!
//! * distributional-signature attention `p`: each token's pair of
//!   importances (general `s(w)`, class-specific `t(w)`) runs through a
//!   small BiLSTM, and `p = softmax(F Z)`;
//! * MLP attention `q = softmax(W2 ReLU(W1 H))`.
//!
//! The final feature is `x = H a^T` with `a = b1*p + b2*q` (not
//! renormalized). Ablation flags can disable either attention or replace
//! either signature channel with the constant 1.

use rand::Rng;

use crate::data::{EmbeddingTable, IntentLabel, UnigramStats};
use crate::numerics::{
    bilstm_forward, bilstm_graph, entropy, lstm_vars, ridge_solve, softmax, LstmParams, LstmRef,
    LstmVars, Matrix, NumericsError, ParamStore, Tape, TapeBinding, Var,
};

/// `epsilon` in the general word importance `s(w) = eps / (eps + P(w))`.
pub const FREQ_EPSILON: f64 = 1e-5;
/// Entropy floor in `t(w) = 1 / max(H, floor)`; bounds the signature
/// scale for near-deterministic word predictions.
pub const ENTROPY_FLOOR: f64 = 1e-3;
/// Default ridge regularizer for the label-description classifier.
pub const DEFAULT_RIDGE_REG: f64 = 1.0;

pub const ENC_FWD: &str = "encoder.fwd";
pub const ENC_BWD: &str = "encoder.bwd";
pub const SIG_FWD: &str = "sig.fwd";
pub const SIG_BWD: &str = "sig.bwd";
pub const SIG_F: &str = "sig.f";
pub const ATTN_W1: &str = "attn.w1";
pub const ATTN_W2: &str = "attn.w2";
pub const MIX_B: &str = "mix.b";

/// Hidden sizes of the model. `d_w` is fixed by the embedding table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub d_w: usize,
    pub d_h: usize,
    pub d_b: usize,
    pub d_a: usize,
    pub d_s: usize,
}

impl Dims {
    pub fn with_defaults(d_w: usize) -> Self {
        Dims {
            d_w,
            d_h: 64,
            d_b: 16,
            d_a: 64,
            d_s: 128,
        }
    }
}

/// Component switches; `true` means the component is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ablations {
    pub gw: bool,
    pub cw: bool,
    pub ds: bool,
    pub mlp: bool,
    pub meta_adapt: bool,
}

impl Default for Ablations {
    fn default() -> Self {
        Ablations {
            gw: true,
            cw: true,
            ds: true,
            mlp: true,
            meta_adapt: true,
        }
    }
}

impl Ablations {
    /// Parses a comma-separated ablation list (`gw,cw,ds,mlp,meta-adapt`),
    /// returning the flags with those components switched off.
    pub fn from_ablate_list(list: &str) -> Result<Self, String> {
        let mut a = Ablations::default();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "gw" => a.gw = false,
                "cw" => a.cw = false,
                "ds" => a.ds = false,
                "mlp" => a.mlp = false,
                "meta-adapt" | "meta_adapt" => a.meta_adapt = false,
                other => return Err(format!("unknown ablation `{other}`")),
            }
        }
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.ds && !self.mlp {
            return Err("cannot ablate both ds and mlp attention: no attention would remain".into());
        }
        Ok(())
    }

    /// The ablated component names, for config echoes.
    pub fn ablated_list(&self) -> String {
        let mut off = Vec::new();
        if !self.gw {
            off.push("gw");
        }
        if !self.cw {
            off.push("cw");
        }
        if !self.ds {
            off.push("ds");
        }
        if !self.mlp {
            off.push("mlp");
        }
        if !self.meta_adapt {
            off.push("meta-adapt");
        }
        off.join(",")
    }
}

/// Ridge classifier over label-description embeddings: `W` minimizes
/// `||E W - Y||_F^2 + reg ||W||_F^2` with `Y` the identity over all
/// (seen and unseen) classes.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeClassifier {
    w: Matrix,
    class_count: usize,
}

impl RidgeClassifier {
    /// Fits with the default regularizer (1.0).
    pub fn fit(labels: &[IntentLabel], table: &EmbeddingTable) -> Result<Self, NumericsError> {
        Self::fit_with_reg(labels, table, DEFAULT_RIDGE_REG)
    }

    pub fn fit_with_reg(
        labels: &[IntentLabel],
        table: &EmbeddingTable,
        reg: f64,
    ) -> Result<Self, NumericsError> {
        let c = labels.len();
        if c < 2 {
            return Err(NumericsError::InvalidArg(
                "ridge classifier needs at least 2 classes".into(),
            ));
        }
        let mut e = Matrix::zeros(c, table.dim());
        for (r, label) in labels.iter().enumerate() {
            let emb = crate::data::label_embedding(label, table);
            for (col, v) in emb.iter().enumerate() {
                e.set(r, col, *v);
            }
        }
        let y = Matrix::identity(c);
        let w = ridge_solve(&e, &y, reg)?;
        Ok(RidgeClassifier { w, class_count: c })
    }

    /// Direct construction from a weight matrix (`d_w x C`).
    pub fn from_weights(w: Matrix) -> Self {
        let class_count = w.cols();
        RidgeClassifier { w, class_count }
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    /// `P(y|w) = softmax(w^T W)` for a word embedding.
    pub fn word_class_probs(&self, embedding: &[f64]) -> Vec<f64> {
        assert_eq!(embedding.len(), self.w.rows(), "embedding dim mismatch");
        let mut logits = vec![0.0; self.class_count];
        for (r, e) in embedding.iter().enumerate() {
            for (c, l) in logits.iter_mut().enumerate() {
                *l += e * self.w.get(r, c);
            }
        }
        softmax(&logits)
    }
}

/// `s(w) = eps / (eps + P(w))`: downweights frequent words.
pub fn general_word_importance(token: &str, stats: &UnigramStats) -> f64 {
    FREQ_EPSILON / (FREQ_EPSILON + stats.p(token))
}

/// `t(w) = 1 / max(H(P(y|w)), floor)`: upweights class-indicative words.
pub fn class_specific_importance(
    token: &str,
    table: &EmbeddingTable,
    clf: &RidgeClassifier,
) -> f64 {
    let probs = clf.word_class_probs(table.lookup(token));
    1.0 / entropy(&probs).max(ENTROPY_FLOOR)
}

/// Distributional signature attention `p = softmax(F Z)` where `Z` is the
/// signature BiLSTM run over the per-token `(s, t)` pairs.
pub fn ds_attention(
    signature_pairs: &[(f64, f64)],
    sig_fwd: &LstmRef<'_>,
    sig_bwd: &LstmRef<'_>,
    f: &Matrix,
) -> Result<Vec<f64>, NumericsError> {
    let seq: Vec<Vec<f64>> = signature_pairs.iter().map(|(s, t)| vec![*s, *t]).collect();
    let z = bilstm_forward(&seq, sig_fwd, sig_bwd)?;
    let logits = f.matmul(&z);
    Ok(softmax(logits.data()))
}

/// MLP attention `q = softmax(W2 ReLU(W1 H))`.
pub fn mlp_attention(h: &Matrix, w1: &Matrix, w2: &Matrix) -> Vec<f64> {
    let hidden = w1.matmul(h).map(|v| if v > 0.0 { v } else { 0.0 });
    let logits = w2.matmul(&hidden);
    softmax(logits.data())
}

/// Mixture `a = b1*p + b2*q`; deliberately not renormalized.
pub fn mixture(p: &[f64], q: &[f64], b: &Matrix) -> Result<Vec<f64>, NumericsError> {
    if p.len() != q.len() {
        return Err(NumericsError::DimMismatch {
            context: "mixture attention inputs",
            expected: p.len(),
            got: q.len(),
        });
    }
    let (b1, b2) = (b.get(0, 0), b.get(0, 1));
    Ok(p.iter().zip(q).map(|(pi, qi)| b1 * pi + b2 * qi).collect())
}

/// Frozen per-utterance inputs to the encoder: embedding columns and,
/// when DS attention is active, the `(s, t)` signature pairs with any
/// ablated channel already replaced by 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderInput {
    pub embeddings: Vec<Vec<f64>>,
    pub signatures: Option<Vec<(f64, f64)>>,
}

impl EncoderInput {
    pub fn prepare(
        tokens: &[String],
        table: &EmbeddingTable,
        stats: &UnigramStats,
        clf: &RidgeClassifier,
        ablations: &Ablations,
    ) -> Self {
        assert!(!tokens.is_empty(), "cannot encode an empty utterance");
        let embeddings = tokens.iter().map(|t| table.lookup(t).to_vec()).collect();
        let signatures = if ablations.ds {
            Some(
                tokens
                    .iter()
                    .map(|t| {
                        let s = if ablations.gw {
                            general_word_importance(t, stats)
                        } else {
                            1.0
                        };
                        let c = if ablations.cw {
                            class_specific_importance(t, table, clf)
                        } else {
                            1.0
                        };
                        (s, c)
                    })
                    .collect(),
            )
        } else {
            None
        };
        EncoderInput {
            embeddings,
            signatures,
        }
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

/// Intermediate quantities of one encoding, for inspection and tests.
#[derive(Clone, Debug)]
pub struct EncodeTrace {
    pub h: Matrix,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub a: Vec<f64>,
    pub x: Vec<f64>,
}

/// Inference-mode encoding of one utterance into `x` (length `2*d_h`).
pub fn encode(
    input: &EncoderInput,
    store: &ParamStore,
    ablations: &Ablations,
) -> Result<Vec<f64>, NumericsError> {
    Ok(encode_trace(input, store, ablations)?.x)
}

pub fn encode_trace(
    input: &EncoderInput,
    store: &ParamStore,
    ablations: &Ablations,
) -> Result<EncodeTrace, NumericsError> {
    let enc_fwd = LstmRef::from_store(store, ENC_FWD);
    let enc_bwd = LstmRef::from_store(store, ENC_BWD);
    let h = bilstm_forward(&input.embeddings, &enc_fwd, &enc_bwd)?;

    let p = if ablations.ds {
        let pairs = input
            .signatures
            .as_ref()
            .expect("ds attention active but input has no signatures");
        let sig_fwd = LstmRef::from_store(store, SIG_FWD);
        let sig_bwd = LstmRef::from_store(store, SIG_BWD);
        Some(ds_attention(pairs, &sig_fwd, &sig_bwd, store.value(SIG_F))?)
    } else {
        None
    };
    let q = if ablations.mlp {
        Some(mlp_attention(&h, store.value(ATTN_W1), store.value(ATTN_W2)))
    } else {
        None
    };
    let a = match (&p, &q) {
        (Some(p), Some(q)) => mixture(p, q, store.value(MIX_B))?,
        (Some(p), None) => p.clone(),
        (None, Some(q)) => q.clone(),
        (None, None) => unreachable!("ablation validation rejects ds+mlp"),
    };

    let n = a.len();
    let mut x = vec![0.0; h.rows()];
    for t in 0..n {
        for (r, xv) in x.iter_mut().enumerate() {
            *xv += h.get(r, t) * a[t];
        }
    }
    Ok(EncodeTrace { h, p, q, a, x })
}

/// Tape handles for the feature-extraction parameters that are active
/// under the current ablations.
pub struct FeatureVars {
    pub enc_fwd: LstmVars,
    pub enc_bwd: LstmVars,
    pub sig_fwd: Option<LstmVars>,
    pub sig_bwd: Option<LstmVars>,
    pub f: Option<Var>,
    pub w1: Option<Var>,
    pub w2: Option<Var>,
    pub b: Option<Var>,
}

/// Binds the active feature parameters onto a tape.
pub fn bind_feature_vars(
    tape: &mut Tape,
    binding: &mut TapeBinding,
    store: &ParamStore,
    ablations: &Ablations,
) -> FeatureVars {
    let enc_fwd = lstm_vars(tape, binding, store, ENC_FWD);
    let enc_bwd = lstm_vars(tape, binding, store, ENC_BWD);
    let (sig_fwd, sig_bwd, f) = if ablations.ds {
        (
            Some(lstm_vars(tape, binding, store, SIG_FWD)),
            Some(lstm_vars(tape, binding, store, SIG_BWD)),
            Some(binding.bind(tape, store, SIG_F)),
        )
    } else {
        (None, None, None)
    };
    let (w1, w2) = if ablations.mlp {
        (
            Some(binding.bind(tape, store, ATTN_W1)),
            Some(binding.bind(tape, store, ATTN_W2)),
        )
    } else {
        (None, None)
    };
    let b = if ablations.ds && ablations.mlp {
        Some(binding.bind(tape, store, MIX_B))
    } else {
        None
    };
    FeatureVars {
        enc_fwd,
        enc_bwd,
        sig_fwd,
        sig_bwd,
        f,
        w1,
        w2,
        b,
    }
}

/// Taped encoding of one utterance; returns the feature node `x`
/// (`2*d_h x 1`).
pub fn encode_graph(tape: &mut Tape, vars: &FeatureVars, input: &EncoderInput) -> Var {
    let emb: Vec<Var> = input
        .embeddings
        .iter()
        .map(|e| tape.input(Matrix::col_from_slice(e)))
        .collect();
    let h = bilstm_graph(tape, &vars.enc_fwd, &vars.enc_bwd, &emb);

    let p = vars.sig_fwd.as_ref().map(|sig_fwd| {
        let pairs = input
            .signatures
            .as_ref()
            .expect("ds attention active but input has no signatures");
        let sig_inputs: Vec<Var> = pairs
            .iter()
            .map(|(s, t)| tape.input(Matrix::col_from_slice(&[*s, *t])))
            .collect();
        let sig_bwd = vars.sig_bwd.as_ref().unwrap();
        let z = bilstm_graph(tape, sig_fwd, sig_bwd, &sig_inputs);
        let logits = tape.matmul(vars.f.unwrap(), z);
        tape.softmax(logits)
    });
    let q = vars.w1.map(|w1| {
        let hidden = tape.matmul(w1, h);
        let hidden = tape.relu(hidden);
        let logits = tape.matmul(vars.w2.unwrap(), hidden);
        tape.softmax(logits)
    });
    let a = match (p, q) {
        (Some(p), Some(q)) => {
            let stacked = tape.concat_rows(&[p, q]);
            tape.matmul(vars.b.unwrap(), stacked)
        }
        (Some(p), None) => p,
        (None, Some(q)) => q,
        (None, None) => unreachable!("ablation validation rejects ds+mlp"),
    };
    let a_t = tape.transpose(a);
    tape.matmul(h, a_t)
}

/// Inserts all feature-extraction parameter groups into the store, with
/// trainable flags reflecting the ablations. Draw order is fixed so a
/// seed fully determines the initialization.
pub fn init_feature_params(
    store: &mut ParamStore,
    dims: &Dims,
    ablations: &Ablations,
    rng: &mut impl Rng,
) {
    LstmParams::init(dims.d_w, dims.d_h, rng).insert_into(store, ENC_FWD, true);
    LstmParams::init(dims.d_w, dims.d_h, rng).insert_into(store, ENC_BWD, true);
    LstmParams::init(2, dims.d_b, rng).insert_into(store, SIG_FWD, ablations.ds);
    LstmParams::init(2, dims.d_b, rng).insert_into(store, SIG_BWD, ablations.ds);
    let uniform = |rng: &mut dyn rand::RngCore, r: usize, c: usize| {
        Matrix::from_fn(r, c, |_, _| rng.gen_range(-0.1..0.1))
    };
    store.insert(SIG_F, uniform(rng, 1, 2 * dims.d_b), ablations.ds);
    store.insert(ATTN_W1, uniform(rng, dims.d_a, 2 * dims.d_h), ablations.mlp);
    store.insert(ATTN_W2, uniform(rng, 1, dims.d_a), ablations.mlp);
    store.insert(
        MIX_B,
        Matrix::row_from_slice(&[0.5, 0.5]),
        ablations.ds && ablations.mlp,
    );
}

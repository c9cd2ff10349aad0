//! Single-direction LSTM cells and the bidirectional encoder built from
//! two of them, in both plain (inference) and taped (training) forms.
//!
//! Gate layout is the standard one: input/forget/output gates with
//! sigmoid activations, candidate cell with tanh, zero initial states.
//! Each gate weight is `hidden_dim x (input_dim + hidden_dim)` and acts
//! on the concatenation `[x_t; h_{t-1}]`.

use rand::Rng;

use super::matrix::Matrix;
use super::optim::ParamStore;
use super::tape::{Tape, TapeBinding, Var};
use super::NumericsError;

const GATES: [&str; 4] = ["w_i", "w_f", "w_o", "w_c"];
const BIASES: [&str; 4] = ["b_i", "b_f", "b_o", "b_c"];

/// Owned parameters of one LSTM direction.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w_i: Matrix,
    pub w_f: Matrix,
    pub w_o: Matrix,
    pub w_c: Matrix,
    pub b_i: Matrix,
    pub b_f: Matrix,
    pub b_o: Matrix,
    pub b_c: Matrix,
}

impl LstmParams {
    /// Uniform(-0.1, 0.1) weights with the forget-gate bias set to 1.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut mat =
            |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.gen_range(-0.1..0.1));
        let cat = input_dim + hidden_dim;
        let w_i = mat(hidden_dim, cat);
        let w_f = mat(hidden_dim, cat);
        let w_o = mat(hidden_dim, cat);
        let w_c = mat(hidden_dim, cat);
        let b_i = mat(hidden_dim, 1);
        let b_f = Matrix::filled(hidden_dim, 1, 1.0);
        let b_o = mat(hidden_dim, 1);
        let b_c = mat(hidden_dim, 1);
        LstmParams {
            w_i,
            w_f,
            w_o,
            w_c,
            b_i,
            b_f,
            b_o,
            b_c,
        }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let cat = input_dim + hidden_dim;
        LstmParams {
            w_i: Matrix::zeros(hidden_dim, cat),
            w_f: Matrix::zeros(hidden_dim, cat),
            w_o: Matrix::zeros(hidden_dim, cat),
            w_c: Matrix::zeros(hidden_dim, cat),
            b_i: Matrix::zeros(hidden_dim, 1),
            b_f: Matrix::zeros(hidden_dim, 1),
            b_o: Matrix::zeros(hidden_dim, 1),
            b_c: Matrix::zeros(hidden_dim, 1),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_i.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_i.cols() - self.w_i.rows()
    }

    pub fn as_ref(&self) -> LstmRef<'_> {
        LstmRef {
            w_i: &self.w_i,
            w_f: &self.w_f,
            w_o: &self.w_o,
            w_c: &self.w_c,
            b_i: &self.b_i,
            b_f: &self.b_f,
            b_o: &self.b_o,
            b_c: &self.b_c,
        }
    }

    /// Moves the matrices into a store under `<prefix>.<name>` groups.
    pub fn insert_into(self, store: &mut ParamStore, prefix: &str, trainable: bool) {
        store.insert(&format!("{prefix}.w_i"), self.w_i, trainable);
        store.insert(&format!("{prefix}.w_f"), self.w_f, trainable);
        store.insert(&format!("{prefix}.w_o"), self.w_o, trainable);
        store.insert(&format!("{prefix}.w_c"), self.w_c, trainable);
        store.insert(&format!("{prefix}.b_i"), self.b_i, trainable);
        store.insert(&format!("{prefix}.b_f"), self.b_f, trainable);
        store.insert(&format!("{prefix}.b_o"), self.b_o, trainable);
        store.insert(&format!("{prefix}.b_c"), self.b_c, trainable);
    }
}

/// Borrowed view of one direction's parameters (usually into a store).
#[derive(Clone, Copy)]
pub struct LstmRef<'a> {
    pub w_i: &'a Matrix,
    pub w_f: &'a Matrix,
    pub w_o: &'a Matrix,
    pub w_c: &'a Matrix,
    pub b_i: &'a Matrix,
    pub b_f: &'a Matrix,
    pub b_o: &'a Matrix,
    pub b_c: &'a Matrix,
}

impl<'a> LstmRef<'a> {
    pub fn from_store(store: &'a ParamStore, prefix: &str) -> Self {
        LstmRef {
            w_i: store.value(&format!("{prefix}.w_i")),
            w_f: store.value(&format!("{prefix}.w_f")),
            w_o: store.value(&format!("{prefix}.w_o")),
            w_c: store.value(&format!("{prefix}.w_c")),
            b_i: store.value(&format!("{prefix}.b_i")),
            b_f: store.value(&format!("{prefix}.b_f")),
            b_o: store.value(&format!("{prefix}.b_o")),
            b_c: store.value(&format!("{prefix}.b_c")),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_i.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_i.cols() - self.w_i.rows()
    }

    fn step(&self, x: &[f64], h: &Matrix, c: &Matrix) -> (Matrix, Matrix) {
        let mut cat = Vec::with_capacity(x.len() + h.len());
        cat.extend_from_slice(x);
        cat.extend_from_slice(h.data());
        let cat = Matrix::col_from_slice(&cat);
        let sig = |m: Matrix| m.map(|v| 1.0 / (1.0 + (-v).exp()));
        let i = sig(self.w_i.matmul(&cat).add(self.b_i));
        let f = sig(self.w_f.matmul(&cat).add(self.b_f));
        let o = sig(self.w_o.matmul(&cat).add(self.b_o));
        let g = self.w_c.matmul(&cat).add(self.b_c).map(f64::tanh);
        let c_next = f.hadamard(c).add(&i.hadamard(&g));
        let h_next = o.hadamard(&c_next.map(f64::tanh));
        (h_next, c_next)
    }

    /// Hidden states for the whole sequence, one column per step.
    fn run(&self, seq: &[&[f64]]) -> Vec<Matrix> {
        let d = self.hidden_dim();
        let mut h = Matrix::zeros(d, 1);
        let mut c = Matrix::zeros(d, 1);
        let mut out = Vec::with_capacity(seq.len());
        for x in seq {
            let (h2, c2) = self.step(x, &h, &c);
            h = h2;
            c = c2;
            out.push(h.clone());
        }
        out
    }
}

/// BiLSTM encoding of a sequence: column `t` stacks the forward hidden
/// state after step `t` on the backward hidden state after step
/// `N+1-t` of the reversed pass. Output is `2*hidden_dim x N`.
pub fn bilstm_forward(
    seq: &[Vec<f64>],
    fwd: &LstmRef<'_>,
    bwd: &LstmRef<'_>,
) -> Result<Matrix, NumericsError> {
    if seq.is_empty() {
        return Err(NumericsError::InvalidArg("empty sequence".into()));
    }
    let d_in = fwd.input_dim();
    if bwd.input_dim() != d_in || fwd.hidden_dim() != bwd.hidden_dim() {
        return Err(NumericsError::DimMismatch {
            context: "bilstm direction shapes",
            expected: d_in,
            got: bwd.input_dim(),
        });
    }
    for x in seq {
        if x.len() != d_in {
            return Err(NumericsError::DimMismatch {
                context: "bilstm input vector",
                expected: d_in,
                got: x.len(),
            });
        }
    }
    let refs: Vec<&[f64]> = seq.iter().map(|v| v.as_slice()).collect();
    let fwd_states = fwd.run(&refs);
    let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
    let mut bwd_states = bwd.run(&rev);
    bwd_states.reverse();

    let n = seq.len();
    let d = fwd.hidden_dim();
    let mut h = Matrix::zeros(2 * d, n);
    for t in 0..n {
        for r in 0..d {
            h.set(r, t, fwd_states[t].get(r, 0));
            h.set(d + r, t, bwd_states[t].get(r, 0));
        }
    }
    Ok(h)
}

/// Tape handles for one direction's parameters.
#[derive(Clone, Copy)]
pub struct LstmVars {
    pub w_i: Var,
    pub w_f: Var,
    pub w_o: Var,
    pub w_c: Var,
    pub b_i: Var,
    pub b_f: Var,
    pub b_o: Var,
    pub b_c: Var,
    hidden_dim: usize,
}

/// Binds the eight `<prefix>.*` groups of one direction onto the tape.
pub fn lstm_vars(
    tape: &mut Tape,
    binding: &mut TapeBinding,
    store: &ParamStore,
    prefix: &str,
) -> LstmVars {
    let hidden_dim = store.value(&format!("{prefix}.w_i")).rows();
    let mut next = |gate: &str| binding.bind(tape, store, &format!("{prefix}.{gate}"));
    let w_i = next(GATES[0]);
    let w_f = next(GATES[1]);
    let w_o = next(GATES[2]);
    let w_c = next(GATES[3]);
    let b_i = next(BIASES[0]);
    let b_f = next(BIASES[1]);
    let b_o = next(BIASES[2]);
    let b_c = next(BIASES[3]);
    LstmVars {
        w_i,
        w_f,
        w_o,
        w_c,
        b_i,
        b_f,
        b_o,
        b_c,
        hidden_dim,
    }
}

fn lstm_cell(tape: &mut Tape, p: &LstmVars, x: Var, h: Var, c: Var) -> (Var, Var) {
    let cat = tape.concat_rows(&[x, h]);
    let zi = tape.matmul(p.w_i, cat);
    let zi = tape.add(zi, p.b_i);
    let i = tape.sigmoid(zi);
    let zf = tape.matmul(p.w_f, cat);
    let zf = tape.add(zf, p.b_f);
    let f = tape.sigmoid(zf);
    let zo = tape.matmul(p.w_o, cat);
    let zo = tape.add(zo, p.b_o);
    let o = tape.sigmoid(zo);
    let zc = tape.matmul(p.w_c, cat);
    let zc = tape.add(zc, p.b_c);
    let g = tape.tanh(zc);
    let fc = tape.hadamard(f, c);
    let ig = tape.hadamard(i, g);
    let c_next = tape.add(fc, ig);
    let tc = tape.tanh(c_next);
    let h_next = tape.hadamard(o, tc);
    (h_next, c_next)
}

fn lstm_run(tape: &mut Tape, p: &LstmVars, inputs: &[Var]) -> Vec<Var> {
    let d = p.hidden_dim;
    let mut h = tape.input(Matrix::zeros(d, 1));
    let mut c = tape.input(Matrix::zeros(d, 1));
    let mut out = Vec::with_capacity(inputs.len());
    for x in inputs {
        let (h2, c2) = lstm_cell(tape, p, *x, h, c);
        h = h2;
        c = c2;
        out.push(h);
    }
    out
}

/// Taped version of [`bilstm_forward`]: inputs are column-vector nodes,
/// output is the `2*hidden_dim x N` encoding node.
pub fn bilstm_graph(tape: &mut Tape, fwd: &LstmVars, bwd: &LstmVars, inputs: &[Var]) -> Var {
    assert!(!inputs.is_empty(), "bilstm_graph on empty sequence");
    let fwd_states = lstm_run(tape, fwd, inputs);
    let rev: Vec<Var> = inputs.iter().rev().copied().collect();
    let mut bwd_states = lstm_run(tape, bwd, &rev);
    bwd_states.reverse();
    let top = tape.concat_cols(&fwd_states);
    let bottom = tape.concat_cols(&bwd_states);
    tape.concat_rows(&[top, bottom])
}

//! Reverse-mode automatic differentiation over matrices.
//!
//! Operations are recorded eagerly on a [`Tape`]; [`Tape::backward`]
//! walks the recording in reverse and accumulates gradients for every
//! node. A tape lives for one forward/backward pass and is then dropped.

use super::matrix::Matrix;
use super::optim::ParamStore;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    Add(usize, usize),
    Sub(usize, usize),
    Hadamard(usize, usize),
    MatMul(usize, usize),
    Scale(usize, f64),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Sqrt(usize),
    SumAll(usize),
    Transpose(usize),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    Softmax(usize),
    LogSoftmax(usize),
    Pick(usize, usize),
}

struct Node {
    value: Matrix,
    grad: Matrix,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        let grad = Matrix::zeros(value.rows(), value.cols());
        self.nodes.push(Node { value, grad, op });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Input)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].grad
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.len(), 1, "scalar() on a non-scalar node");
        m.data()[0]
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.add(&self.nodes[b.0].value);
        self.push(value, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.sub(&self.nodes[b.0].value);
        self.push(value, Op::Sub(a.0, b.0))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.hadamard(&self.nodes[b.0].value);
        self.push(value, Op::Hadamard(a.0, b.0))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.nodes[a.0].value.matmul(&self.nodes[b.0].value);
        self.push(value, Op::MatMul(a.0, b.0))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.nodes[a.0].value.scale(s);
        self.push(value, Op::Scale(a.0, s))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(value, Op::Sigmoid(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.map(f64::tanh);
        self.push(value, Op::Tanh(a.0))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.map(|x| if x > 0.0 { x } else { 0.0 });
        self.push(value, Op::Relu(a.0))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.map(f64::sqrt);
        self.push(value, Op::Sqrt(a.0))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(Matrix::new(1, 1, vec![s]), Op::SumAll(a.0))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.transpose();
        self.push(value, Op::Transpose(a.0))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.nodes[parts[0].0].value.cols();
        let rows: usize = parts.iter().map(|p| self.nodes[p.0].value.rows()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for p in parts {
            let m = &self.nodes[p.0].value;
            assert_eq!(m.cols(), cols, "concat_rows column mismatch");
            data.extend_from_slice(m.data());
        }
        self.push(
            Matrix::new(rows, cols, data),
            Op::ConcatRows(parts.iter().map(|p| p.0).collect()),
        )
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.nodes[parts[0].0].value.rows();
        let cols: usize = parts.iter().map(|p| self.nodes[p.0].value.cols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut at = 0usize;
        for p in parts {
            let m = &self.nodes[p.0].value;
            assert_eq!(m.rows(), rows, "concat_cols row mismatch");
            for r in 0..rows {
                for c in 0..m.cols() {
                    out.set(r, at + c, m.get(r, c));
                }
            }
            at += m.cols();
        }
        self.push(out, Op::ConcatCols(parts.iter().map(|p| p.0).collect()))
    }

    /// Stabilized softmax over a vector-shaped node (1xN or Nx1).
    pub fn softmax(&mut self, a: Var) -> Var {
        let m = &self.nodes[a.0].value;
        assert!(m.rows() == 1 || m.cols() == 1, "softmax needs a vector");
        let p = super::ops::softmax(m.data());
        self.push(Matrix::new(m.rows(), m.cols(), p), Op::Softmax(a.0))
    }

    /// Stabilized log-softmax over a vector-shaped node.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let m = &self.nodes[a.0].value;
        assert!(m.rows() == 1 || m.cols() == 1, "log_softmax needs a vector");
        let max = m.data().iter().fold(f64::NEG_INFINITY, |acc, x| acc.max(*x));
        let lse = m.data().iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
        let value = m.map(|x| x - lse);
        self.push(value, Op::LogSoftmax(a.0))
    }

    /// Extracts one entry (flattened row-major index) as a 1x1 node.
    pub fn pick(&mut self, a: Var, index: usize) -> Var {
        let v = self.nodes[a.0].value.data()[index];
        self.push(Matrix::new(1, 1, vec![v]), Op::Pick(a.0, index))
    }

    /// Backpropagates from a scalar node, accumulating gradients on every
    /// node reached by the recording.
    pub fn backward(&mut self, loss: Var) {
        assert_eq!(self.nodes[loss.0].value.len(), 1, "backward needs a scalar loss");
        for n in &mut self.nodes {
            n.grad.fill(0.0);
        }
        self.nodes[loss.0].grad.set(0, 0, 1.0);

        for i in (0..self.nodes.len()).rev() {
            if self.nodes[i].grad.max_abs() == 0.0 {
                continue;
            }
            let g = self.nodes[i].grad.clone();
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    self.nodes[a].grad.add_assign(&g);
                    self.nodes[b].grad.add_assign(&g);
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    self.nodes[a].grad.add_assign(&g);
                    self.nodes[b].grad.add_assign(&g.scale(-1.0));
                }
                Op::Hadamard(a, b) => {
                    let (a, b) = (*a, *b);
                    let da = g.hadamard(&self.nodes[b].value);
                    let db = g.hadamard(&self.nodes[a].value);
                    self.nodes[a].grad.add_assign(&da);
                    self.nodes[b].grad.add_assign(&db);
                }
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    let da = g.matmul(&self.nodes[b].value.transpose());
                    let db = self.nodes[a].value.transpose().matmul(&g);
                    self.nodes[a].grad.add_assign(&da);
                    self.nodes[b].grad.add_assign(&db);
                }
                Op::Scale(a, s) => {
                    let (a, s) = (*a, *s);
                    self.nodes[a].grad.add_assign(&g.scale(s));
                }
                Op::Sigmoid(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let da = Matrix::new(
                        y.rows(),
                        y.cols(),
                        g.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| g * y * (1.0 - y))
                            .collect(),
                    );
                    self.nodes[a].grad.add_assign(&da);
                }
                Op::Tanh(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let da = Matrix::new(
                        y.rows(),
                        y.cols(),
                        g.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| g * (1.0 - y * y))
                            .collect(),
                    );
                    self.nodes[a].grad.add_assign(&da);
                }
                Op::Relu(a) => {
                    let a = *a;
                    let x = &self.nodes[a].value;
                    let da = Matrix::new(
                        x.rows(),
                        x.cols(),
                        g.data()
                            .iter()
                            .zip(x.data())
                            .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                            .collect(),
                    );
                    self.nodes[a].grad.add_assign(&da);
                }
                Op::Sqrt(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let da = Matrix::new(
                        y.rows(),
                        y.cols(),
                        g.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| g * 0.5 / y.max(1e-12))
                            .collect(),
                    );
                    self.nodes[a].grad.add_assign(&da);
                }
                Op::SumAll(a) => {
                    let a = *a;
                    let s = g.data()[0];
                    let shape = (self.nodes[a].value.rows(), self.nodes[a].value.cols());
                    self.nodes[a].grad.add_assign(&Matrix::filled(shape.0, shape.1, s));
                }
                Op::Transpose(a) => {
                    let a = *a;
                    self.nodes[a].grad.add_assign(&g.transpose());
                }
                Op::ConcatRows(parts) => {
                    let parts = parts.clone();
                    let cols = g.cols();
                    let mut row = 0usize;
                    for p in parts {
                        let rows = self.nodes[p].value.rows();
                        let block = Matrix::from_fn(rows, cols, |r, c| g.get(row + r, c));
                        self.nodes[p].grad.add_assign(&block);
                        row += rows;
                    }
                }
                Op::ConcatCols(parts) => {
                    let parts = parts.clone();
                    let rows = g.rows();
                    let mut col = 0usize;
                    for p in parts {
                        let cols = self.nodes[p].value.cols();
                        let block = Matrix::from_fn(rows, cols, |r, c| g.get(r, col + c));
                        self.nodes[p].grad.add_assign(&block);
                        col += cols;
                    }
                }
                Op::Softmax(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let dot: f64 = g.data().iter().zip(y.data()).map(|(g, y)| g * y).sum();
                    let da = Matrix::new(
                        y.rows(),
                        y.cols(),
                        g.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| y * (g - dot))
                            .collect(),
                    );
                    self.nodes[a].grad.add_assign(&da);
                }
                Op::LogSoftmax(a) => {
                    let a = *a;
                    let y = &self.nodes[i].value;
                    let gsum: f64 = g.data().iter().sum();
                    let da = Matrix::new(
                        y.rows(),
                        y.cols(),
                        g.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| g - y.exp() * gsum)
                            .collect(),
                    );
                    self.nodes[a].grad.add_assign(&da);
                }
                Op::Pick(a, index) => {
                    let (a, index) = (*a, *index);
                    let v = g.data()[0];
                    let cur = self.nodes[a].grad.data()[index];
                    self.nodes[a].grad.data_mut()[index] = cur + v;
                }
            }
        }
    }
}

/// Ties [`ParamStore`] groups to tape inputs so gradients can be
/// harvested back after [`Tape::backward`].
#[derive(Default)]
pub struct TapeBinding {
    pairs: Vec<(usize, Var)>,
}

impl TapeBinding {
    pub fn new() -> Self {
        TapeBinding { pairs: Vec::new() }
    }

    /// Registers a parameter group as a tape input.
    pub fn bind(&mut self, tape: &mut Tape, store: &ParamStore, name: &str) -> Var {
        let idx = store.index_of(name).unwrap_or_else(|| panic!("unknown parameter group {name}"));
        let var = tape.input(store.value_at(idx).clone());
        self.pairs.push((idx, var));
        var
    }

    /// Accumulates tape gradients into the trainable bound groups.
    pub fn harvest(&self, tape: &Tape, store: &mut ParamStore) {
        for (idx, var) in &self.pairs {
            if store.trainable_at(*idx) {
                store.accumulate_grad_at(*idx, tape.grad(*var));
            }
        }
    }
}

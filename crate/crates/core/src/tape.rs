//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! [`Graph::backward`] walks the nodes in reverse and accumulates gradients.
//! Parameters enter the graph as leaves bound to a `(set, index)` slot, so
//! the gradient for each parameter can be read back per parameter set.
//!
//! All sequence-level tensors are 2D: rows are time steps, columns features.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

pub type Matrix = DMatrix<f64>;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Which parameter set a leaf belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamSet {
    Generator,
    Discriminator,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Abs(Var),
    Log(Var),
    Sqrt(Var),
    MulConst(Var, Arc<Matrix>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Transpose(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    SumAll(Var),
    MeanRows(Var),
}

#[derive(Debug)]
struct Node {
    value: Arc<Matrix>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
    params: RefCell<HashMap<(ParamSet, usize), Var>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Matrix, op: Op) -> Var {
        self.push_arc(Arc::new(value), op)
    }

    fn push_arc(&self, value: Arc<Matrix>, op: Op) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var(nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> Arc<Matrix> {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let value = self.value(v);
        debug_assert_eq!(value.shape(), (1, 1));
        value[(0, 0)]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes.borrow()[v.0].value.shape()
    }

    /// A value that receives no gradient outside the graph.
    pub fn constant(&self, m: Matrix) -> Var {
        self.push(m, Op::Leaf)
    }

    pub fn constant_arc(&self, m: Arc<Matrix>) -> Var {
        self.push_arc(m, Op::Leaf)
    }

    /// Binds a parameter; repeated calls with the same slot return the same node.
    pub fn param(&self, set: ParamSet, index: usize, value: &Arc<Matrix>) -> Var {
        if let Some(&v) = self.params.borrow().get(&(set, index)) {
            return v;
        }
        let v = self.push_arc(value.clone(), Op::Param);
        self.params.borrow_mut().insert((set, index), v);
        v
    }

    fn map(&self, a: Var, op: Op, f: impl Fn(&Matrix) -> Matrix) -> Var {
        let va = self.value(a);
        self.push(f(&va), op)
    }

    fn zip(&self, a: Var, b: Var, op: Op, f: impl Fn(&Matrix, &Matrix) -> Matrix) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(f(&va, &vb), op)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Var {
        self.zip(a, b, Op::MatMul(a, b), |x, y| {
            assert_eq!(x.ncols(), y.nrows(), "matmul shape mismatch");
            x * y
        })
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        self.zip(a, b, Op::Add(a, b), |x, y| {
            assert_eq!(x.shape(), y.shape(), "add shape mismatch");
            x + y
        })
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        self.zip(a, b, Op::Sub(a, b), |x, y| {
            assert_eq!(x.shape(), y.shape(), "sub shape mismatch");
            x - y
        })
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        self.zip(a, b, Op::Mul(a, b), |x, y| {
            assert_eq!(x.shape(), y.shape(), "mul shape mismatch");
            x.component_mul(y)
        })
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_row(&self, a: Var, row: Var) -> Var {
        self.zip(a, row, Op::AddRow(a, row), |x, r| {
            assert_eq!((1, x.ncols()), r.shape(), "add_row shape mismatch");
            let mut out = x.clone();
            for mut xr in out.row_iter_mut() {
                xr += r;
            }
            out
        })
    }

    pub fn scale(&self, a: Var, k: f64) -> Var {
        self.map(a, Op::Scale(a, k), |x| x * k)
    }

    pub fn tanh(&self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), |x| x.map(f64::tanh))
    }

    pub fn sigmoid(&self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), |x| x.map(sigmoid))
    }

    pub fn abs(&self, a: Var) -> Var {
        self.map(a, Op::Abs(a), |x| x.map(f64::abs))
    }

    pub fn log(&self, a: Var) -> Var {
        self.map(a, Op::Log(a), |x| x.map(f64::ln))
    }

    pub fn sqrt(&self, a: Var) -> Var {
        self.map(a, Op::Sqrt(a), |x| x.map(f64::sqrt))
    }

    /// Elementwise product with a constant (used for masks and selections).
    pub fn mul_const(&self, a: Var, m: Arc<Matrix>) -> Var {
        let va = self.value(a);
        assert_eq!(va.shape(), m.shape(), "mul_const shape mismatch");
        let out = va.component_mul(&m);
        self.push(out, Op::MulConst(a, m))
    }

    pub fn concat_cols(&self, parts: &[Var]) -> Var {
        let values: Vec<_> = parts.iter().map(|&p| self.value(p)).collect();
        let rows = values.first().map(|v| v.nrows()).unwrap_or(0);
        let cols: usize = values.iter().map(|v| v.ncols()).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut c = 0;
        for v in &values {
            assert_eq!(v.nrows(), rows, "concat_cols row mismatch");
            out.columns_mut(c, v.ncols()).copy_from(v);
            c += v.ncols();
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&self, parts: &[Var]) -> Var {
        let values: Vec<_> = parts.iter().map(|&p| self.value(p)).collect();
        let cols = values.first().map(|v| v.ncols()).unwrap_or(0);
        let rows: usize = values.iter().map(|v| v.nrows()).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut r = 0;
        for v in &values {
            assert_eq!(v.ncols(), cols, "concat_rows column mismatch");
            out.rows_mut(r, v.nrows()).copy_from(v);
            r += v.nrows();
        }
        self.push(out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn slice_cols(&self, a: Var, start: usize, len: usize) -> Var {
        self.map(a, Op::SliceCols(a, start), |x| x.columns(start, len).into_owned())
    }

    pub fn slice_rows(&self, a: Var, start: usize, len: usize) -> Var {
        self.map(a, Op::SliceRows(a, start), |x| x.rows(start, len).into_owned())
    }

    pub fn transpose(&self, a: Var) -> Var {
        self.map(a, Op::Transpose(a), |x| x.transpose())
    }

    pub fn softmax_rows(&self, a: Var) -> Var {
        self.map(a, Op::SoftmaxRows(a), softmax_rows)
    }

    pub fn log_softmax_rows(&self, a: Var) -> Var {
        self.map(a, Op::LogSoftmaxRows(a), |x| {
            let mut out = x.clone();
            for mut r in out.row_iter_mut() {
                let m = r.max();
                let lse = m + r.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                r.add_scalar_mut(-lse);
            }
            out
        })
    }

    pub fn sum_all(&self, a: Var) -> Var {
        self.map(a, Op::SumAll(a), |x| Matrix::from_element(1, 1, x.sum()))
    }

    pub fn mean_all(&self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let s = self.sum_all(a);
        self.scale(s, 1.0 / (r * c) as f64)
    }

    /// Column-wise mean over rows: `T × c → 1 × c`.
    pub fn mean_rows(&self, a: Var) -> Var {
        self.map(a, Op::MeanRows(a), |x| {
            let n = x.nrows() as f64;
            let sums = x.row_sum();
            Matrix::from_fn(1, x.ncols(), |_, c| sums[c] / n)
        })
    }

    /// Reverse pass from a `1 × 1` output.
    pub fn backward(&self, output: Var) -> Gradients {
        let nodes = self.nodes.borrow();
        assert_eq!(
            nodes[output.0].value.shape(),
            (1, 1),
            "backward requires a scalar output"
        );
        let mut grads: Vec<Option<Matrix>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Matrix::from_element(1, 1, 1.0));

        for i in (0..=output.0).rev() {
            let node = &nodes[i];
            if matches!(node.op, Op::Leaf | Op::Param) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let val = |v: Var| -> &Matrix { &nodes[v.0].value };
            let mut acc = |v: Var, d: Matrix| match &mut grads[v.0] {
                Some(existing) => *existing += d,
                slot @ None => *slot = Some(d),
            };
            match &node.op {
                Op::Leaf | Op::Param => unreachable!(),
                Op::MatMul(a, b) => {
                    acc(*a, &g * val(*b).transpose());
                    acc(*b, val(*a).transpose() * &g);
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, -g);
                }
                Op::Mul(a, b) => {
                    acc(*a, g.component_mul(val(*b)));
                    acc(*b, g.component_mul(val(*a)));
                }
                Op::AddRow(a, r) => {
                    let sums = g.row_sum();
                    acc(*r, Matrix::from_fn(1, g.ncols(), |_, c| sums[c]));
                    acc(*a, g);
                }
                Op::Scale(a, k) => acc(*a, g * *k),
                Op::Tanh(a) => {
                    let y = &node.value;
                    acc(*a, g.zip_map(y, |g, y| g * (1.0 - y * y)));
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    acc(*a, g.zip_map(y, |g, y| g * y * (1.0 - y)));
                }
                Op::Abs(a) => {
                    acc(*a, g.zip_map(val(*a), |g, x| g * sign(x)));
                }
                Op::Log(a) => acc(*a, g.zip_map(val(*a), |g, x| g / x)),
                Op::Sqrt(a) => {
                    let y = &node.value;
                    acc(*a, g.zip_map(y, |g, y| g / (2.0 * y)));
                }
                Op::MulConst(a, m) => acc(*a, g.component_mul(m)),
                Op::ConcatCols(parts) => {
                    let mut c = 0;
                    for &p in parts {
                        let w = val(p).ncols();
                        acc(p, g.columns(c, w).into_owned());
                        c += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut r = 0;
                    for &p in parts {
                        let h = val(p).nrows();
                        acc(p, g.rows(r, h).into_owned());
                        r += h;
                    }
                }
                Op::SliceCols(a, start) => {
                    let src = val(*a);
                    let mut d = Matrix::zeros(src.nrows(), src.ncols());
                    d.columns_mut(*start, g.ncols()).copy_from(&g);
                    acc(*a, d);
                }
                Op::SliceRows(a, start) => {
                    let src = val(*a);
                    let mut d = Matrix::zeros(src.nrows(), src.ncols());
                    d.rows_mut(*start, g.nrows()).copy_from(&g);
                    acc(*a, d);
                }
                Op::Transpose(a) => acc(*a, g.transpose()),
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut d = g.component_mul(y);
                    for (r, mut row) in d.row_iter_mut().enumerate() {
                        let dot = g.row(r).dot(&y.row(r));
                        for (k, v) in row.iter_mut().enumerate() {
                            *v -= y[(r, k)] * dot;
                        }
                    }
                    acc(*a, d);
                }
                Op::LogSoftmaxRows(a) => {
                    let p = node.value.map(f64::exp);
                    let mut d = g.clone();
                    for r in 0..d.nrows() {
                        let total = g.row(r).sum();
                        for k in 0..d.ncols() {
                            d[(r, k)] -= p[(r, k)] * total;
                        }
                    }
                    acc(*a, d);
                }
                Op::SumAll(a) => {
                    let src = val(*a);
                    acc(*a, Matrix::from_element(src.nrows(), src.ncols(), g[(0, 0)]));
                }
                Op::MeanRows(a) => {
                    let src = val(*a);
                    let n = src.nrows();
                    let mut d = Matrix::zeros(n, src.ncols());
                    for r in 0..n {
                        for c in 0..src.ncols() {
                            d[(r, c)] = g[(0, c)] / n as f64;
                        }
                    }
                    acc(*a, d);
                }
            }
        }

        let mut params = HashMap::new();
        for (&slot, &v) in self.params.borrow().iter() {
            if let Some(Some(g)) = grads.get(v.0) {
                params.insert(slot, g.clone());
            }
        }
        Gradients { nodes: grads, params }
    }
}

/// Output of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Matrix>>,
    params: HashMap<(ParamSet, usize), Matrix>,
}

impl Gradients {
    /// Gradient of a leaf (constant or parameter node), if it was reached.
    pub fn wrt(&self, v: Var) -> Option<&Matrix> {
        self.nodes.get(v.0).and_then(Option::as_ref)
    }

    pub fn param(&self, set: ParamSet, index: usize) -> Option<&Matrix> {
        self.params.get(&(set, index))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for mut r in out.row_iter_mut() {
        let m = r.max();
        r.apply(|v| *v = (*v - m).exp());
        let s = r.sum();
        r /= s;
    }
    out
}

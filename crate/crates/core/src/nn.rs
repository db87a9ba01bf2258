//! Parameter storage and the recurrent building blocks shared by the
//! generator and discriminator.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tape::{Graph, Matrix, ParamSet, Var};

/// Named parameter matrices in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Arc<Matrix>>,
    lookup: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> usize {
        let name = name.into();
        assert!(!self.lookup.contains_key(&name), "duplicate parameter {name}");
        self.lookup.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.values.push(Arc::new(value));
        self.names.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.index(name).map(|i| &*self.values[i])
    }

    pub fn value(&self, index: usize) -> &Arc<Matrix> {
        &self.values[index]
    }

    pub fn set(&mut self, index: usize, value: Matrix) {
        assert_eq!(self.values[index].shape(), value.shape());
        self.values[index] = Arc::new(value);
    }

    pub fn set_by_name(&mut self, name: &str, value: Matrix) -> Result<()> {
        let i = self
            .index(name)
            .ok_or_else(|| Error::Argument(format!("unknown parameter {name}")))?;
        if self.values[i].shape() != value.shape() {
            return Err(Error::Structural(format!(
                "parameter {name} has shape {:?}, got {:?}",
                self.values[i].shape(),
                value.shape()
            )));
        }
        self.values[i] = Arc::new(value);
        Ok(())
    }

    pub fn get_mut(&mut self, index: usize) -> &mut Matrix {
        Arc::make_mut(&mut self.values[index])
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().map(|v| &**v))
    }

    pub fn map_values(&self, f: impl Fn(&Matrix) -> Matrix) -> ParamStore {
        let mut out = ParamStore::new();
        for (n, v) in self.iter() {
            out.insert(n, f(v));
        }
        out
    }

    pub fn bind<'a>(&'a self, graph: &'a Graph, set: ParamSet) -> Bound<'a> {
        Bound {
            graph,
            store: self,
            set: Some(set),
        }
    }

    /// Binds every parameter as a constant that receives no gradient.
    pub fn bind_frozen<'a>(&'a self, graph: &'a Graph) -> Bound<'a> {
        Bound {
            graph,
            store: self,
            set: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NamedArray {
    name: String,
    rows: usize,
    cols: usize,
    /// Row-major values.
    data: Vec<f64>,
}

impl Serialize for ParamStore {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let arrays: Vec<NamedArray> = self
            .iter()
            .map(|(name, m)| NamedArray {
                name: name.to_string(),
                rows: m.nrows(),
                cols: m.ncols(),
                data: m.transpose().iter().copied().collect(),
            })
            .collect();
        arrays.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParamStore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let arrays = Vec::<NamedArray>::deserialize(d)?;
        let mut store = ParamStore::new();
        for a in arrays {
            if a.data.len() != a.rows * a.cols {
                return Err(serde::de::Error::custom(format!(
                    "parameter {} declares {}x{} but holds {} values",
                    a.name,
                    a.rows,
                    a.cols,
                    a.data.len()
                )));
            }
            if store.lookup.contains_key(&a.name) {
                return Err(serde::de::Error::custom(format!("duplicate parameter {}", a.name)));
            }
            store.insert(a.name, Matrix::from_row_slice(a.rows, a.cols, &a.data));
        }
        Ok(store)
    }
}

/// A parameter store bound to a graph for one forward pass.
#[derive(Clone, Copy)]
pub struct Bound<'a> {
    pub graph: &'a Graph,
    pub store: &'a ParamStore,
    /// `None` for frozen bindings.
    pub set: Option<ParamSet>,
}

impl Bound<'_> {
    pub fn get(&self, name: &str) -> Var {
        let i = self
            .store
            .index(name)
            .unwrap_or_else(|| panic!("parameter {name} missing from store"));
        match self.set {
            Some(set) => self.graph.param(set, i, self.store.value(i)),
            None => self.graph.constant_arc(self.store.value(i).clone()),
        }
    }
}

pub fn xavier(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    let bound = (6.0 / (rows + cols).max(1) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound))
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound))
}

/// Registers `{prefix}.w` (`input × output`) and `{prefix}.b` (`1 × output`).
pub fn init_linear(store: &mut ParamStore, rng: &mut impl Rng, prefix: &str, input: usize, output: usize) {
    store.insert(format!("{prefix}.w"), xavier(rng, input, output));
    store.insert(format!("{prefix}.b"), Matrix::zeros(1, output));
}

pub fn linear(p: &Bound, prefix: &str, x: Var) -> Var {
    let g = p.graph;
    let w = p.get(&format!("{prefix}.w"));
    let b = p.get(&format!("{prefix}.b"));
    g.add_row(g.matmul(x, w), b)
}

/// Registers one LSTM direction: `{prefix}.w_ih` (`input × 4h`),
/// `{prefix}.w_hh` (`h × 4h`), `{prefix}.b` (`1 × 4h`). Gate blocks are
/// ordered input, forget, cell, output; the forget bias starts at 1.
pub fn init_lstm(store: &mut ParamStore, rng: &mut impl Rng, prefix: &str, input: usize, hidden: usize) {
    let bound = 1.0 / (hidden as f64).sqrt();
    store.insert(format!("{prefix}.w_ih"), uniform(rng, input, 4 * hidden, bound));
    store.insert(format!("{prefix}.w_hh"), uniform(rng, hidden, 4 * hidden, bound));
    let mut b = uniform(rng, 1, 4 * hidden, bound);
    for k in hidden..2 * hidden {
        b[(0, k)] += 1.0;
    }
    store.insert(format!("{prefix}.b"), b);
}

pub fn init_bilstm(store: &mut ParamStore, rng: &mut impl Rng, prefix: &str, input: usize, hidden: usize) {
    init_lstm(store, rng, &format!("{prefix}.fwd"), input, hidden);
    init_lstm(store, rng, &format!("{prefix}.bwd"), input, hidden);
}

/// One LSTM step given the already-projected input row `x_proj = x·W_ih + b`.
pub fn lstm_step(g: &Graph, x_proj: Var, w_hh: Var, h: Var, c: Var) -> (Var, Var) {
    let hidden = g.shape(h).1;
    let gates = g.add(x_proj, g.matmul(h, w_hh));
    let sig = g.sigmoid(gates);
    let th = g.tanh(gates);
    let i = g.slice_cols(sig, 0, hidden);
    let f = g.slice_cols(sig, hidden, hidden);
    let cand = g.slice_cols(th, 2 * hidden, hidden);
    let o = g.slice_cols(sig, 3 * hidden, hidden);
    let c_next = g.add(g.mul(f, c), g.mul(i, cand));
    let h_next = g.mul(o, g.tanh(c_next));
    (h_next, c_next)
}

pub fn zero_state(g: &Graph, hidden: usize) -> (Var, Var) {
    (
        g.constant(Matrix::zeros(1, hidden)),
        g.constant(Matrix::zeros(1, hidden)),
    )
}

/// Runs one direction over a `T × input` sequence from a zero state and
/// returns the `T × h` hidden states in time order.
pub fn lstm(p: &Bound, prefix: &str, xs: Var, reverse: bool) -> Var {
    let g = p.graph;
    let w_ih = p.get(&format!("{prefix}.w_ih"));
    let w_hh = p.get(&format!("{prefix}.w_hh"));
    let b = p.get(&format!("{prefix}.b"));
    let hidden = g.shape(w_hh).0;
    let steps = g.shape(xs).0;
    let proj = g.add_row(g.matmul(xs, w_ih), b);
    let (mut h, mut c) = zero_state(g, hidden);
    let mut states = vec![h; steps];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..steps).rev())
    } else {
        Box::new(0..steps)
    };
    for t in order {
        let row = g.slice_rows(proj, t, 1);
        (h, c) = lstm_step(g, row, w_hh, h, c);
        states[t] = h;
    }
    g.concat_rows(&states)
}

/// Bidirectional layer: `[forward states, backward states]` per time step.
pub fn bilstm(p: &Bound, prefix: &str, xs: Var) -> Var {
    let f = lstm(p, &format!("{prefix}.fwd"), xs, false);
    let b = lstm(p, &format!("{prefix}.bwd"), xs, true);
    p.graph.concat_cols(&[f, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn store_serde_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = ParamStore::new();
        init_linear(&mut s, &mut rng, "fc", 3, 2);
        init_lstm(&mut s, &mut rng, "rnn", 2, 4);
        let text = serde_json::to_string(&s).unwrap();
        let back: ParamStore = serde_json::from_str(&text).unwrap();
        assert_eq!(back.names(), s.names());
        for ((_, a), (_, b)) in back.iter().zip(s.iter()) {
            assert_eq!(a, b);
        }
        assert_eq!(s.scalar_count(), 3 * 2 + 2 + 2 * 16 + 4 * 16 + 16);
    }

    #[test]
    fn lstm_single_step_by_hand() {
        // hidden 1, input 1: all weights 0.5, bias 0 except forget 1 as initialised below
        let mut s = ParamStore::new();
        s.insert("r.w_ih", Matrix::from_element(1, 4, 0.5));
        s.insert("r.w_hh", Matrix::from_element(1, 4, 0.5));
        s.insert("r.b", Matrix::zeros(1, 4));
        let g = Graph::new();
        let p = s.bind(&g, ParamSet::Generator);
        let xs = g.constant(Matrix::from_element(1, 1, 2.0));
        let h = g.value(lstm(&p, "r", xs, false));
        let pre: f64 = 1.0;
        let sig = crate::tape::sigmoid(pre);
        let c = sig * pre.tanh();
        let expected = sig * c.tanh();
        assert!((h[(0, 0)] - expected).abs() < 1e-15);
    }

    #[test]
    fn reverse_direction_reads_backwards() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = ParamStore::new();
        init_lstm(&mut s, &mut rng, "r", 2, 3);
        let x = Matrix::from_fn(5, 2, |r, c| (r as f64 - 2.0) * 0.3 + c as f64 * 0.1);
        let mut x_rev = x.clone();
        for r in 0..5 {
            x_rev.set_row(r, &x.row(4 - r));
        }
        let g = Graph::new();
        let p = s.bind(&g, ParamSet::Generator);
        let fwd_on_rev = g.value(lstm(&p, "r", g.constant(x_rev), false));
        let bwd = g.value(lstm(&p, "r", g.constant(x), true));
        for r in 0..5 {
            assert_eq!(bwd.row(r), fwd_on_rev.row(4 - r));
        }
    }
}

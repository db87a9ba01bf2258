//! Global frame-level attention between encoder and decoder.
//!
//! For decoder step `t` with previous decoder state `ĥ_{t−1}`, the weight of
//! encoder step `e` is `softmax_e( W1 · tanh(W2 · [h_e; ĥ_{t−1}]) )` and the
//! context is `c_t = Σ_e φ(e, t) · h_e`.
//!
//! In the parameter store `W2` is split into its encoder and decoder column
//! blocks and kept transposed (`att.w2_enc`: `H × A`, `att.w2_dec`: `Hd × A`),
//! and `W1` is kept as a column (`att.w1`: `A × 1`), so the encoder block can
//! be projected once per sequence.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tape::{Graph, Matrix, Var};

pub(crate) struct AttentionInputs {
    pub enc: Var,
    /// `enc · w2_enc`, `T × A`.
    pub projected: Var,
    pub w2_dec: Var,
    pub w1: Var,
}

impl AttentionInputs {
    pub fn new(g: &Graph, enc: Var, w2_enc: Var, w2_dec: Var, w1: Var) -> Self {
        AttentionInputs {
            enc,
            projected: g.matmul(enc, w2_enc),
            w2_dec,
            w1,
        }
    }
}

/// Returns `(weights 1 × T, context 1 × H)` for one decoder step.
pub(crate) fn attend(g: &Graph, att: &AttentionInputs, prev_state: Var) -> (Var, Var) {
    let q = g.matmul(prev_state, att.w2_dec);
    let hidden = g.tanh(g.add_row(att.projected, q));
    let scores = g.matmul(hidden, att.w1);
    let weights = g.softmax_rows(g.transpose(scores));
    let context = g.matmul(weights, att.enc);
    (weights, context)
}

/// Attention weights over encoder steps for one decoder step.
///
/// `encoder_states` is `T × H`, `decoder_prev` is `1 × Hd`, `w1` is `1 × A`
/// and `w2` is `A × (H + Hd)`.
pub fn attention_weights(
    encoder_states: &Matrix,
    decoder_prev: &Matrix,
    w1: &Matrix,
    w2: &Matrix,
) -> Result<Vec<f64>> {
    let (t, h) = encoder_states.shape();
    let hd = decoder_prev.ncols();
    let a = w2.nrows();
    if t == 0 || decoder_prev.nrows() != 1 {
        return Err(Error::Argument(
            "need at least one encoder state and a single decoder row".into(),
        ));
    }
    if w2.ncols() != h + hd {
        return Err(Error::Argument(format!(
            "W2 has {} columns, expected {} + {}",
            w2.ncols(),
            h,
            hd
        )));
    }
    if w1.shape() != (1, a) {
        return Err(Error::Argument(format!(
            "W1 has shape {:?}, expected (1, {a})",
            w1.shape()
        )));
    }
    let g = Graph::new();
    let enc = g.constant(encoder_states.clone());
    let w2_enc = g.constant(w2.columns(0, h).transpose());
    let w2_dec = g.constant(w2.columns(h, hd).transpose());
    let w1 = g.constant(w1.transpose());
    let inputs = AttentionInputs::new(&g, enc, w2_enc, w2_dec, w1);
    let prev = g.constant(decoder_prev.clone());
    let (weights, _) = attend(&g, &inputs, prev);
    Ok(g.value(weights).iter().copied().collect())
}

/// `Σ_e weights[e] · encoder_states[e]`.
pub fn context_vector(weights: &[f64], encoder_states: &Matrix) -> Result<Vec<f64>> {
    if weights.len() != encoder_states.nrows() {
        return Err(Error::Argument(format!(
            "{} weights for {} encoder states",
            weights.len(),
            encoder_states.nrows()
        )));
    }
    let g = Graph::new();
    let w = g.constant(Matrix::from_row_slice(1, weights.len(), weights));
    let enc = g.constant_arc(Arc::new(encoder_states.clone()));
    Ok(g.value(g.matmul(w, enc)).iter().copied().collect())
}

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{encode_structures, init_encoder_fc, LabelVector, Structure};
use crate::error::{Error, Result};
use crate::model::attention::{attend, AttentionInputs};
use crate::model::ModelConfig;
use crate::motion::MotionSequence;
use crate::nn::{bilstm, init_bilstm, init_linear, init_lstm, linear, lstm_step, xavier, zero_state, Bound, ParamStore};
use crate::tape::{Graph, Matrix, ParamSet, Var};

/// Hierarchical bidirectional encoder with an attentive bidirectional decoder.
#[derive(Debug, Clone)]
pub struct Generator {
    pub config: ModelConfig,
    pub params: ParamStore,
}

/// Graph handles produced by one generator pass.
pub(crate) struct GeneratorVars {
    /// `T × 3J` generated poses.
    pub output: Var,
    /// `T × 6·slice` concatenated encoder states.
    pub encoder_states: Var,
    /// Attention rows (`1 × T`) of the forward decoder, in time order.
    pub attention_forward: Vec<Var>,
    /// Attention rows of the backward decoder, in time order.
    pub attention_backward: Vec<Var>,
}

/// Plain-value record of one generator pass.
#[derive(Debug, Clone)]
pub struct GeneratorTrace {
    pub output: MotionSequence,
    pub encoder_states: Matrix,
    pub attention_forward: Vec<Vec<f64>>,
    pub attention_backward: Vec<Vec<f64>>,
}

impl Generator {
    /// Randomly initialised parameters, reproducible from `seed`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        init_encoder_fc(&config.layout, &mut params, &mut rng);
        let hs = config.structure_hidden();
        for s in Structure::ALL {
            let input = config.layout.output_width(s);
            init_bilstm(&mut params, &mut rng, &format!("enc.{}.rnn", s.name()), input, hs);
        }
        let (h, hd, a) = (config.encoder_width(), config.decoder_hidden, config.attention_width);
        params.insert("att.w2_enc", xavier(&mut rng, h, a));
        params.insert("att.w2_dec", xavier(&mut rng, hd, a));
        params.insert("att.w1", xavier(&mut rng, a, 1));
        init_lstm(&mut params, &mut rng, "dec.fwd", h, hd);
        init_lstm(&mut params, &mut rng, "dec.bwd", h, hd);
        init_linear(&mut params, &mut rng, "out", 2 * hd, config.pose_width());
        Ok(Generator { config, params })
    }

    /// Wraps loaded parameters after checking names and shapes against the
    /// architecture.
    pub fn from_params(config: ModelConfig, params: ParamStore) -> Result<Self> {
        let reference = Generator::init(config.clone(), 0)?;
        check_same_layout(&reference.params, &params, "generator")?;
        Ok(Generator { config, params })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    pub(crate) fn forward(&self, p: &Bound, poses: Var, label: &[f64]) -> GeneratorVars {
        let g = p.graph;
        let cfg = &self.config;
        let steps = g.shape(poses).0;
        let poses = match &cfg.normalization {
            Some(n) => {
                let shift = g.constant(Matrix::from_fn(1, n.input_mean.len(), |_, c| -n.input_mean[c]));
                let inv = Arc::new(Matrix::from_fn(steps, n.input_std.len(), |_, c| 1.0 / n.input_std[c]));
                g.mul_const(g.add_row(poses, shift), inv)
            }
            None => poses,
        };
        let structures = encode_structures(p, &cfg.layout, poses, label);
        let encoded: Vec<Var> = Structure::ALL
            .iter()
            .zip(&structures)
            .map(|(s, &x)| bilstm(p, &format!("enc.{}.rnn", s.name()), x))
            .collect();
        let enc = g.concat_cols(&encoded);

        let att = AttentionInputs::new(g, enc, p.get("att.w2_enc"), p.get("att.w2_dec"), p.get("att.w1"));
        let (fwd, attention_forward) = self.decode(p, &att, "dec.fwd", false);
        let (bwd, attention_backward) = self.decode(p, &att, "dec.bwd", true);
        let states = g.concat_cols(&[fwd, bwd]);
        let output = linear(p, "out", states);
        let output = match &cfg.normalization {
            Some(n) => {
                let scale = Arc::new(Matrix::from_fn(steps, n.output_std.len(), |_, c| n.output_std[c]));
                let mean = g.constant(Matrix::from_row_slice(1, n.output_mean.len(), &n.output_mean));
                g.add_row(g.mul_const(output, scale), mean)
            }
            None => output,
        };
        GeneratorVars {
            output,
            encoder_states: enc,
            attention_forward,
            attention_backward,
        }
    }

    /// One decoder direction. Each step attends with its previous state, then
    /// feeds the context vector through the LSTM cell.
    fn decode(&self, p: &Bound, att: &AttentionInputs, prefix: &str, reverse: bool) -> (Var, Vec<Var>) {
        let g = p.graph;
        let steps = g.shape(att.enc).0;
        let w_ih = p.get(&format!("{prefix}.w_ih"));
        let w_hh = p.get(&format!("{prefix}.w_hh"));
        let b = p.get(&format!("{prefix}.b"));
        let (mut h, mut c) = zero_state(g, self.config.decoder_hidden);
        let mut states = vec![h; steps];
        let mut weights = vec![h; steps];
        let order: Vec<usize> = if reverse {
            (0..steps).rev().collect()
        } else {
            (0..steps).collect()
        };
        for t in order {
            let (w, ctx) = attend(g, att, h);
            let x = g.add_row(g.matmul(ctx, w_ih), b);
            (h, c) = lstm_step(g, x, w_hh, h, c);
            states[t] = h;
            weights[t] = w;
        }
        (g.concat_rows(&states), weights)
    }

    fn check_inputs(&self, motion_a: &MotionSequence, label: &LabelVector) -> Result<()> {
        if label.len() != self.config.classes() {
            return Err(Error::Argument(format!(
                "label has {} entries, model expects {}",
                label.len(),
                self.config.classes()
            )));
        }
        if motion_a.joints() != self.config.joints() {
            return Err(Error::Structural(format!(
                "input has {} joints, model expects {}",
                motion_a.joints(),
                self.config.joints()
            )));
        }
        Ok(())
    }

    /// Generates B's reaction with the same length and frame rate as `motion_a`.
    pub fn generate(&self, motion_a: &MotionSequence, label: &LabelVector) -> Result<MotionSequence> {
        Ok(self.trace(motion_a, label)?.output)
    }

    pub fn trace(&self, motion_a: &MotionSequence, label: &LabelVector) -> Result<GeneratorTrace> {
        self.check_inputs(motion_a, label)?;
        let g = Graph::new();
        let p = self.params.bind(&g, ParamSet::Generator);
        let poses = g.constant_arc(Arc::new(motion_a.to_matrix()));
        let vars = self.forward(&p, poses, &label.values);
        let out = g.value(vars.output);
        check_finite_rows(&out, "generated pose")?;
        let rows = |ws: &[Var]| ws.iter().map(|&w| g.value(w).iter().copied().collect()).collect();
        Ok(GeneratorTrace {
            output: MotionSequence::from_matrix(&out, motion_a.frame_rate, motion_a.skeleton_ref.clone())?,
            encoder_states: (*g.value(vars.encoder_states)).clone(),
            attention_forward: rows(&vars.attention_forward),
            attention_backward: rows(&vars.attention_backward),
        })
    }

    /// Concatenated encoder states averaged over time (`1 × 6·slice`).
    pub fn pooled_embedding(&self, motion_a: &MotionSequence, label: &LabelVector) -> Result<Vec<f64>> {
        let states = self.trace(motion_a, label)?.encoder_states;
        let n = states.nrows() as f64;
        Ok(states.row_sum().iter().map(|v| v / n).collect())
    }
}

pub(crate) fn check_finite_rows(m: &Matrix, what: &str) -> Result<()> {
    for r in 0..m.nrows() {
        if m.row(r).iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                frame: r,
                context: what.to_string(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_same_layout(reference: &ParamStore, actual: &ParamStore, what: &str) -> Result<()> {
    if reference.names() != actual.names() {
        return Err(Error::Load(format!(
            "{what} parameter names do not match the architecture"
        )));
    }
    for ((name, a), (_, b)) in reference.iter().zip(actual.iter()) {
        if a.shape() != b.shape() {
            return Err(Error::Load(format!(
                "{what} parameter {name} has shape {:?}, expected {:?}",
                b.shape(),
                a.shape()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Load(format!("{what} parameter {name} is not finite")));
        }
    }
    Ok(())
}

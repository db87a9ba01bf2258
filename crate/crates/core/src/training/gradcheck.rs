//! Per-term analytic gradients and a central-difference reference.

use crate::embedding::encode_label;
use crate::error::Result;
use crate::model::{discriminate, Discriminator, Generator};
use crate::motion::{InteractionPair, Skeleton};
use crate::nn::ParamStore;
use crate::tape::{Graph, Matrix, ParamSet};
use crate::training::{collect_grads, losses};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTerm {
    L1,
    Bone,
    Continuity,
    /// Adversarial loss in the generator role.
    CganGenerator,
    /// Adversarial loss in the discriminator role.
    CganDiscriminator,
}

impl LossTerm {
    pub const ALL: [LossTerm; 5] = [
        LossTerm::L1,
        LossTerm::Bone,
        LossTerm::Continuity,
        LossTerm::CganGenerator,
        LossTerm::CganDiscriminator,
    ];

    /// The parameter set the term is differentiated against.
    pub fn wrt(self) -> ParamSet {
        match self {
            LossTerm::CganDiscriminator => ParamSet::Discriminator,
            _ => ParamSet::Generator,
        }
    }
}

/// Loss value and gradient from the reverse-mode graph, for one pair with its
/// one-hot label. Bone targets are the skeleton rest lengths.
pub fn loss_and_gradient(
    term: LossTerm,
    generator: &Generator,
    discriminator: &Discriminator,
    pair: &InteractionPair,
    skeleton: &Skeleton,
) -> Result<(f64, Vec<Matrix>)> {
    let label = encode_label(pair.class_index, generator.config.classes())?;
    let g = Graph::new();
    let gp = generator.params.bind(&g, ParamSet::Generator);
    let out = generator.forward(&gp, g.constant(pair.motion_a.to_matrix()), &label.values).output;
    let truth = pair.motion_b.to_matrix();
    let mask = vec![true; truth.nrows()];
    let mean = |(v, n): (crate::tape::Var, usize)| g.scale(v, 1.0 / n as f64);
    let loss = match term {
        LossTerm::L1 => mean(losses::l1_sum(&g, out, &truth, &mask)),
        LossTerm::Bone => mean(losses::bone_sum(
            &g,
            out,
            &skeleton.bones(),
            &skeleton.rest_bone_lengths(),
            &mask,
        )),
        LossTerm::Continuity => mean(losses::continuity_sum(&g, out, &truth, &mask)),
        LossTerm::CganGenerator => {
            let dp = discriminator.params.bind_frozen(&g);
            losses::nll(&g, discriminator.logits(&dp, out), pair.class_index)
        }
        LossTerm::CganDiscriminator => {
            let dp = discriminator.params.bind(&g, ParamSet::Discriminator);
            let fake = g.constant_arc(g.value(out));
            let real = g.constant(truth.clone());
            let fidelity = generator.config.classes();
            g.add(
                losses::nll(&g, discriminator.logits(&dp, real), pair.class_index),
                losses::nll(&g, discriminator.logits(&dp, fake), fidelity),
            )
        }
    };
    let grads = g.backward(loss);
    let store = match term.wrt() {
        ParamSet::Generator => &generator.params,
        ParamSet::Discriminator => &discriminator.params,
    };
    Ok((g.scalar(loss), collect_grads(store, &grads, term.wrt())))
}

/// Loss value through the public plain-value functions only.
pub fn loss_value(
    term: LossTerm,
    generator: &Generator,
    discriminator: &Discriminator,
    pair: &InteractionPair,
    skeleton: &Skeleton,
) -> Result<f64> {
    let label = encode_label(pair.class_index, generator.config.classes())?;
    let out = generator.generate(&pair.motion_a, &label)?;
    match term {
        LossTerm::L1 => losses::loss_l1(&out, &pair.motion_b),
        LossTerm::Bone => losses::loss_bone(&out, skeleton),
        LossTerm::Continuity => losses::loss_continuity(&out, &pair.motion_b),
        LossTerm::CganGenerator | LossTerm::CganDiscriminator => {
            let real = discriminate(&pair.motion_b, discriminator)?;
            let fake = discriminate(&out, discriminator)?;
            let role = if term == LossTerm::CganGenerator {
                losses::CganRole::Generator
            } else {
                losses::CganRole::Discriminator
            };
            losses::loss_cgan(&real, &fake, pair.class_index, role)
        }
    }
}

/// Central differences `(f(θ + h) − f(θ − h)) / 2h` for every scalar of `store`.
pub fn finite_difference(
    store: &ParamStore,
    h: f64,
    f: impl Fn(&ParamStore) -> Result<f64>,
) -> Result<Vec<Matrix>> {
    let mut work = store.clone();
    let mut out = Vec::with_capacity(store.len());
    for i in 0..store.len() {
        let base = store.value(i).as_ref().clone();
        let mut grad = Matrix::zeros(base.nrows(), base.ncols());
        for k in 0..base.len() {
            let mut plus = base.clone();
            plus[k] += h;
            work.set(i, plus);
            let up = f(&work)?;
            let mut minus = base.clone();
            minus[k] -= h;
            work.set(i, minus);
            let down = f(&work)?;
            grad[k] = (up - down) / (2.0 * h);
        }
        work.set(i, base);
        out.push(grad);
    }
    Ok(out)
}

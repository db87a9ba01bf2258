//! Adversarial training of the generator against the multi-class
//! discriminator.
//!
//! Each batch takes one discriminator step on real reactions (true class) and
//! detached generated reactions (fidelity class), then one generator step on
//! `L_adv + λ_b·L_b + λ_c·L_c + λ_1·L_1` with the updated discriminator held
//! fixed. Sequences keep their native length. Batch losses are masked sums
//! over all valid terms in the batch divided by their count, which equals the
//! loss over the zero-padded batch.

mod config;
mod gradcheck;
pub(crate) mod losses;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Ablations, BoneReference, Optimizer, TrainingConfig};
pub use gradcheck::{finite_difference, loss_and_gradient, loss_value, LossTerm};
pub use losses::{
    bone_terms, continuity_terms, l1_terms, loss_bone, loss_bone_masked, loss_cgan, loss_continuity,
    loss_continuity_masked, loss_l1, loss_l1_masked, CganRole, MaskedSum,
};

use crate::embedding::encode_label;
use crate::error::{Error, Result};
use crate::model::{sha256_hex, Checkpoint, Discriminator, DiscriminatorConfig, Generator, ModelConfig, Normalization};
use crate::motion::{bone_lengths, write_atomic, InteractionPair, Skeleton};
use crate::nn::ParamStore;
use crate::tape::{Graph, Matrix, ParamSet, Var};

/// Per-epoch means of each loss term. Disabled terms are exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epoch: usize,
    pub l1: f64,
    pub adversarial_g: f64,
    pub adversarial_d: f64,
    pub bone: f64,
    pub continuity: f64,
    /// `adversarial_g + λ_b·bone + λ_c·continuity + λ_1·l1`.
    pub total_g: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "epoch,l1,adversarial_g,adversarial_d,bone,continuity,total_g";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch, self.l1, self.adversarial_g, self.adversarial_d, self.bone, self.continuity, self.total_g
        )
    }

    pub fn to_csv(reports: &[LossReport]) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    fn is_finite(&self) -> bool {
        [self.l1, self.adversarial_g, self.adversarial_d, self.bone, self.continuity, self.total_g]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// RMSprop with per-parameter running mean of squared gradients.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub eps: f64,
    cache: Vec<Matrix>,
}

impl RmsProp {
    pub fn new(store: &ParamStore, learning_rate: f64, rho: f64, eps: f64) -> Self {
        RmsProp {
            learning_rate,
            rho,
            eps,
            cache: store.iter().map(|(_, m)| Matrix::zeros(m.nrows(), m.ncols())).collect(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &[Matrix]) {
        for (i, g) in grads.iter().enumerate() {
            let cache = &mut self.cache[i];
            cache.zip_apply(g, |c, g| *c = self.rho * *c + (1.0 - self.rho) * g * g);
            let (lr, eps) = (self.learning_rate, self.eps);
            let p = store.get_mut(i);
            for k in 0..p.len() {
                p[k] -= lr * g[k] / (cache[k].sqrt() + eps);
            }
        }
    }
}

pub fn global_norm(grads: &[Matrix]) -> f64 {
    grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
}

/// Rescales `grads` so their global norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut [Matrix], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let k = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= k;
        }
    }
    norm
}

/// Gradient of every parameter of `store`, zero where the graph did not reach.
pub(crate) fn collect_grads(
    store: &ParamStore,
    grads: &crate::tape::Gradients,
    set: ParamSet,
) -> Vec<Matrix> {
    store
        .iter()
        .enumerate()
        .map(|(i, (_, m))| {
            grads
                .param(set, i)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(m.nrows(), m.ncols()))
        })
        .collect()
}

fn add_into(acc: &mut [Matrix], grads: Vec<Matrix>) {
    for (a, g) in acc.iter_mut().zip(grads) {
        *a += g;
    }
}

fn zeros_like(store: &ParamStore) -> Vec<Matrix> {
    store.iter().map(|(_, m)| Matrix::zeros(m.nrows(), m.ncols())).collect()
}

/// Builds the discriminator config matching a generator config.
pub fn discriminator_config(model: &ModelConfig) -> DiscriminatorConfig {
    DiscriminatorConfig {
        input_width: model.pose_width(),
        hidden: model.discriminator_hidden,
        outputs: model.classes() + 1,
    }
}

/// Target bone lengths for one pair under `reference`.
pub fn bone_targets(pair: &InteractionPair, skeleton: &Skeleton, reference: BoneReference) -> Result<Vec<f64>> {
    Ok(match reference {
        BoneReference::SkeletonRest => skeleton.rest_bone_lengths(),
        BoneReference::GroundTruth => {
            let lengths = bone_lengths(&pair.motion_b, skeleton)?;
            let n = lengths.len() as f64;
            let mut mean = vec![0.0; skeleton.bone_count()];
            for row in &lengths {
                for (m, l) in mean.iter_mut().zip(row) {
                    *m += l / n;
                }
            }
            mean
        }
    })
}

/// Generator-side graph for one pair, kept alive across the discriminator step.
struct ItemPass {
    graph: Graph,
    output: Var,
    l1: (Var, usize),
    bone: Option<(Var, usize)>,
    continuity: Option<(Var, usize)>,
    class_index: usize,
    real_b: Arc<Matrix>,
}

#[derive(Default)]
struct BatchTotals {
    l1: MaskedSum,
    bone: MaskedSum,
    continuity: MaskedSum,
}

/// Owns the parameters and optimizer state of one training run.
pub struct Trainer {
    pub config: TrainingConfig,
    pub skeleton: Skeleton,
    pub class_names: Vec<String>,
    pub generator: Generator,
    pub discriminator: Discriminator,
    g_opt: RmsProp,
    d_opt: RmsProp,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    /// Initializes parameters from the seed; with `normalize` set, the
    /// normalization statistics are fitted on `pairs`.
    pub fn new(
        config: TrainingConfig,
        skeleton: Skeleton,
        class_names: Vec<String>,
        pairs: &[InteractionPair],
    ) -> Result<Self> {
        config.validate()?;
        skeleton.validate()?;
        let mut model = ModelConfig::for_skeleton(
            &skeleton,
            class_names.len(),
            config.effective_widths(),
            !config.ablations.no_multi_hot,
        )?;
        if config.normalize {
            model.normalization = Some(Normalization::fit(pairs)?);
            model.validate()?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let generator = Generator::init(model.clone(), rng.gen())?;
        let discriminator = Discriminator::init(discriminator_config(&model), rng.gen())?;
        let (lr, rho, eps) = (config.learning_rate, config.rmsprop_rho, config.rmsprop_eps);
        Ok(Trainer {
            g_opt: RmsProp::new(&generator.params, lr, rho, eps),
            d_opt: RmsProp::new(&discriminator.params, lr, rho, eps),
            config,
            skeleton,
            class_names,
            generator,
            discriminator,
            rng,
            epoch: 0,
        })
    }

    /// Number of completed epochs.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(serde_json::to_string(&self.config).expect("config serializes").as_bytes())
    }

    pub fn checkpoint(&self, dataset_id: &str) -> Checkpoint {
        Checkpoint::new(
            dataset_id,
            self.class_names.clone(),
            self.skeleton.clone(),
            &self.generator,
            &self.discriminator,
            self.epoch,
            Some(self.config_hash()),
        )
    }

    fn check_pairs(&self, pairs: &[InteractionPair]) -> Result<()> {
        if pairs.is_empty() {
            return Err(Error::Argument("no training pairs".into()));
        }
        for p in pairs {
            p.validate()?;
            p.motion_a.validate_for(&self.skeleton)?;
            p.motion_b.validate_for(&self.skeleton)?;
            if p.class_index >= self.class_names.len() {
                return Err(Error::Argument(format!(
                    "pair {} has class {} but only {} classes exist",
                    p.id,
                    p.class_index,
                    self.class_names.len()
                )));
            }
        }
        Ok(())
    }

    /// Runs every remaining epoch, calling `on_epoch` after each.
    pub fn fit(
        &mut self,
        pairs: &[InteractionPair],
        mut on_epoch: impl FnMut(&Trainer, &LossReport) -> Result<()>,
    ) -> Result<Vec<LossReport>> {
        let mut reports = Vec::new();
        while self.epoch < self.config.epochs {
            let report = self.train_epoch(pairs)?;
            on_epoch(self, &report)?;
            reports.push(report);
        }
        Ok(reports)
    }

    /// One pass over `pairs` in a seeded shuffled order.
    pub fn train_epoch(&mut self, pairs: &[InteractionPair]) -> Result<LossReport> {
        self.check_pairs(pairs)?;
        let targets: Vec<Vec<f64>> = pairs
            .iter()
            .map(|p| bone_targets(p, &self.skeleton, self.config.bone_reference))
            .collect::<Result<_>>()?;
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut self.rng);
        let lr = self.config.learning_rate_at(self.epoch);
        self.g_opt.learning_rate = lr;
        self.d_opt.learning_rate = lr;
        let epoch = self.epoch + 1;
        let mut sum = LossReport {
            epoch,
            l1: 0.0,
            adversarial_g: 0.0,
            adversarial_d: 0.0,
            bone: 0.0,
            continuity: 0.0,
            total_g: 0.0,
        };
        let batches: Vec<&[usize]> = order.chunks(self.config.batch_size).collect();
        for (b, batch) in batches.iter().enumerate() {
            let items: Vec<(&InteractionPair, &[f64])> =
                batch.iter().map(|&i| (&pairs[i], targets[i].as_slice())).collect();
            let r = self.train_batch(&items, epoch, b)?;
            sum.l1 += r.l1;
            sum.adversarial_g += r.adversarial_g;
            sum.adversarial_d += r.adversarial_d;
            sum.bone += r.bone;
            sum.continuity += r.continuity;
        }
        let n = batches.len() as f64;
        let c = &self.config;
        let mut report = LossReport {
            l1: sum.l1 / n,
            adversarial_g: sum.adversarial_g / n,
            adversarial_d: sum.adversarial_d / n,
            bone: sum.bone / n,
            continuity: sum.continuity / n,
            ..sum
        };
        report.total_g = report.adversarial_g
            + c.lambda_b * report.bone
            + c.lambda_c * report.continuity
            + c.lambda_1 * report.l1;
        self.epoch = epoch;
        Ok(report)
    }

    fn forward_item(&self, pair: &InteractionPair, targets: &[f64]) -> Result<ItemPass> {
        let ab = &self.config.ablations;
        let classes = self.class_names.len();
        let label = encode_label(pair.class_index, classes)?;
        let graph = Graph::new();
        let (output, l1, bone, continuity) = {
            let g = &graph;
            let p = self.generator.params.bind(g, ParamSet::Generator);
            let poses = g.constant(pair.motion_a.to_matrix());
            let out = self.generator.forward(&p, poses, &label.values).output;
            let truth = pair.motion_b.to_matrix();
            let mask = vec![true; truth.nrows()];
            let l1 = losses::l1_sum(g, out, &truth, &mask);
            let bone = (!ab.no_bone_loss)
                .then(|| losses::bone_sum(g, out, &self.skeleton.bones(), targets, &mask));
            let continuity = (!ab.no_continuity).then(|| losses::continuity_sum(g, out, &truth, &mask));
            (out, l1, bone, continuity)
        };
        Ok(ItemPass {
            real_b: Arc::new(pair.motion_b.to_matrix()),
            graph,
            output,
            l1,
            bone,
            continuity,
            class_index: pair.class_index,
        })
    }

    fn forward_batch(&self, items: &[(&InteractionPair, &[f64])]) -> Result<(Vec<ItemPass>, BatchTotals)> {
        let passes: Vec<ItemPass> = items
            .par_iter()
            .map(|(pair, targets)| self.forward_item(pair, targets))
            .collect::<Result<_>>()?;
        let mut totals = BatchTotals::default();
        for p in &passes {
            let term = |t: (Var, usize)| MaskedSum {
                sum: p.graph.scalar(t.0),
                count: t.1,
            };
            totals.l1 = totals.l1.merge(term(p.l1));
            if let Some(t) = p.bone {
                totals.bone = totals.bone.merge(term(t));
            }
            if let Some(t) = p.continuity {
                totals.continuity = totals.continuity.merge(term(t));
            }
        }
        Ok((passes, totals))
    }

    /// Discriminator loss and gradient on real reactions and the detached
    /// generated ones.
    fn discriminator_gradient(&self, passes: &[ItemPass]) -> (f64, Vec<Matrix>) {
        let batch_len = passes.len() as f64;
        let fakes: Vec<(Arc<Matrix>, Arc<Matrix>, usize)> = passes
            .iter()
            .map(|p| (p.real_b.clone(), p.graph.value(p.output), p.class_index))
            .collect();
        let d = &self.discriminator;
        let fidelity = self.class_names.len();
        let per_item: Vec<(f64, Vec<Matrix>)> = fakes
            .par_iter()
            .map(|(real, fake, class)| {
                let g = Graph::new();
                let p = d.params.bind(&g, ParamSet::Discriminator);
                let real_term = losses::nll(&g, d.logits(&p, g.constant_arc(real.clone())), *class);
                let fake_term = losses::nll(&g, d.logits(&p, g.constant_arc(fake.clone())), fidelity);
                let loss = g.scale(g.add(real_term, fake_term), 1.0 / batch_len);
                let grads = g.backward(loss);
                (g.scalar(loss), collect_grads(&d.params, &grads, ParamSet::Discriminator))
            })
            .collect();
        let mut grads = zeros_like(&d.params);
        let mut loss = 0.0;
        for (l, g) in per_item {
            loss += l;
            add_into(&mut grads, g);
        }
        (loss, grads)
    }

    /// Generator objective gradient with the discriminator held fixed.
    /// Returns the batch-mean adversarial term alongside.
    fn generator_gradient(&self, passes: Vec<ItemPass>, totals: &BatchTotals) -> (f64, Vec<Matrix>) {
        let batch_len = passes.len() as f64;
        let cfg = &self.config;
        let weights = (
            cfg.lambda_1 / totals.l1.count.max(1) as f64,
            cfg.lambda_b / totals.bone.count.max(1) as f64,
            cfg.lambda_c / totals.continuity.count.max(1) as f64,
        );
        let use_d = !cfg.ablations.no_discriminator;
        let d = &self.discriminator;
        let gen_store = &self.generator.params;
        let per_item: Vec<(f64, Vec<Matrix>)> = passes
            .into_par_iter()
            .map(|p| {
                let g = &p.graph;
                let mut terms = vec![g.scale(p.l1.0, weights.0)];
                if let Some((v, _)) = p.bone {
                    terms.push(g.scale(v, weights.1));
                }
                if let Some((v, _)) = p.continuity {
                    terms.push(g.scale(v, weights.2));
                }
                let mut adv = 0.0;
                if use_d {
                    let frozen = d.params.bind_frozen(g);
                    let nll = losses::nll(g, d.logits(&frozen, p.output), p.class_index);
                    adv = g.scalar(nll);
                    terms.push(g.scale(nll, 1.0 / batch_len));
                }
                let total = terms[1..].iter().fold(terms[0], |acc, &t| g.add(acc, t));
                let grads = g.backward(total);
                (adv, collect_grads(gen_store, &grads, ParamSet::Generator))
            })
            .collect();
        let mut grads = zeros_like(gen_store);
        let mut adversarial_g = 0.0;
        for (adv, g) in per_item {
            adversarial_g += adv / batch_len;
            add_into(&mut grads, g);
        }
        (adversarial_g, grads)
    }

    /// Generator objective and its gradient on `pairs` treated as one batch,
    /// at the current parameters. Nothing is updated.
    pub fn batch_gradient(&self, pairs: &[InteractionPair]) -> Result<(LossReport, Vec<Matrix>)> {
        self.check_pairs(pairs)?;
        let targets: Vec<Vec<f64>> = pairs
            .iter()
            .map(|p| bone_targets(p, &self.skeleton, self.config.bone_reference))
            .collect::<Result<_>>()?;
        let items: Vec<(&InteractionPair, &[f64])> = pairs.iter().zip(&targets).map(|(p, t)| (p, t.as_slice())).collect();
        let (passes, totals) = self.forward_batch(&items)?;
        let (adversarial_g, grads) = self.generator_gradient(passes, &totals);
        let c = &self.config;
        let mut report = LossReport {
            epoch: self.epoch,
            l1: totals.l1.mean(),
            adversarial_g,
            adversarial_d: 0.0,
            bone: totals.bone.mean(),
            continuity: totals.continuity.mean(),
            total_g: 0.0,
        };
        report.total_g = report.adversarial_g
            + c.lambda_b * report.bone
            + c.lambda_c * report.continuity
            + c.lambda_1 * report.l1;
        Ok((report, grads))
    }

    fn train_batch(&mut self, items: &[(&InteractionPair, &[f64])], epoch: usize, batch: usize) -> Result<LossReport> {
        let diverged = |term: &str| Error::Diverged {
            epoch,
            batch,
            term: term.to_string(),
        };
        let (passes, totals) = self.forward_batch(items)?;

        let mut adversarial_d = 0.0;
        if !self.config.ablations.no_discriminator {
            let (loss, grads) = self.discriminator_gradient(&passes);
            adversarial_d = loss;
            if !adversarial_d.is_finite() {
                return Err(diverged("discriminator loss"));
            }
            self.update(ParamSet::Discriminator, grads).map_err(|_| diverged("discriminator gradient"))?;
        }

        let (adversarial_g, grads) = self.generator_gradient(passes, &totals);
        let report = LossReport {
            epoch,
            l1: totals.l1.mean(),
            adversarial_g,
            adversarial_d,
            bone: totals.bone.mean(),
            continuity: totals.continuity.mean(),
            total_g: 0.0,
        };
        if !report.is_finite() {
            return Err(diverged("generator loss"));
        }
        self.update(ParamSet::Generator, grads).map_err(|_| diverged("generator gradient"))?;
        Ok(report)
    }

    fn update(&mut self, set: ParamSet, mut grads: Vec<Matrix>) -> Result<()> {
        let norm = global_norm(&grads);
        if !norm.is_finite() {
            return Err(Error::Numeric {
                frame: 0,
                context: "gradient norm".into(),
            });
        }
        if let Some(max) = self.config.grad_clip {
            clip_global_norm(&mut grads, max);
        }
        match set {
            ParamSet::Generator => self.g_opt.step(&mut self.generator.params, &grads),
            ParamSet::Discriminator => self.d_opt.step(&mut self.discriminator.params, &grads),
        }
        Ok(())
    }
}


/// Files produced by [`train_to_dir`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub reports: Vec<LossReport>,
    pub final_checkpoint: PathBuf,
    pub loss_csv: PathBuf,
}

/// Trains on `pairs`, writing `losses.csv`, periodic `epoch_NNNNN.json`
/// checkpoints and `final.json` under `out`. On divergence the last good
/// parameters are saved as `diverged.json` before the error is returned.
pub fn train_to_dir(
    pairs: &[InteractionPair],
    skeleton: &Skeleton,
    class_names: &[String],
    dataset_id: &str,
    config: &TrainingConfig,
    out: &Path,
) -> Result<TrainOutcome> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut trainer = Trainer::new(config.clone(), skeleton.clone(), class_names.to_vec(), pairs)?;
    let loss_csv = out.join("losses.csv");
    let mut reports: Vec<LossReport> = Vec::new();
    while trainer.epoch() < config.epochs {
        let snapshot = (trainer.generator.params.clone(), trainer.discriminator.params.clone());
        match trainer.train_epoch(pairs) {
            Ok(r) => {
                log::info!("epoch {} l1 {:.5} total_g {:.5}", r.epoch, r.l1, r.total_g);
                reports.push(r);
            }
            Err(e) => {
                trainer.generator.params = snapshot.0;
                trainer.discriminator.params = snapshot.1;
                trainer.checkpoint(dataset_id).save(&out.join("diverged.json"))?;
                write_atomic(&loss_csv, LossReport::to_csv(&reports).as_bytes())?;
                return Err(e);
            }
        }
        if let Some(every) = config.checkpoint_every {
            if trainer.epoch() % every == 0 {
                let path = out.join(format!("epoch_{:05}.json", trainer.epoch()));
                trainer.checkpoint(dataset_id).save(&path)?;
                write_atomic(&loss_csv, LossReport::to_csv(&reports).as_bytes())?;
            }
        }
    }
    write_atomic(&loss_csv, LossReport::to_csv(&reports).as_bytes())?;
    let final_checkpoint = out.join("final.json");
    trainer.checkpoint(dataset_id).save(&final_checkpoint)?;
    Ok(TrainOutcome {
        reports,
        final_checkpoint,
        loss_csv,
    })
}

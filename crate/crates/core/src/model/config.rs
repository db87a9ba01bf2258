use serde::{Deserialize, Serialize};

use crate::embedding::{EncoderLayout, Structure};
use crate::error::{Error, Result};
use crate::motion::{InteractionPair, Skeleton};

/// Smallest standard deviation used when normalizing a coordinate.
pub const MIN_STD: f64 = 1e-3;

/// Fixed per-coordinate affine maps: inputs enter as `(x − input_mean) / input_std`
/// and outputs leave as `y · output_std + output_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub output_mean: Vec<f64>,
    pub output_std: Vec<f64>,
}

impl Normalization {
    /// Statistics of A (inputs) and B (outputs) over every frame of `pairs`.
    pub fn fit(pairs: &[InteractionPair]) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::Argument("cannot fit normalization without pairs".into()))?;
        let width = 3 * first.motion_a.joints();
        let stats = |pick: &dyn Fn(&InteractionPair) -> &crate::motion::MotionSequence| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut sum = vec![0.0; width];
            let mut sq = vec![0.0; width];
            let mut n = 0usize;
            for p in pairs {
                let m = pick(p);
                if 3 * m.joints() != width {
                    return Err(Error::Structural("pairs have different joint counts".into()));
                }
                for t in 0..m.frames() {
                    for (k, v) in m.frame(t).iter().enumerate() {
                        sum[k] += v;
                        sq[k] += v * v;
                    }
                    n += 1;
                }
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            let std = sq
                .iter()
                .zip(&mean)
                .map(|(q, m)| (q / n as f64 - m * m).max(0.0).sqrt().max(MIN_STD))
                .collect();
            Ok((mean, std))
        };
        let (input_mean, input_std) = stats(&|p| &p.motion_a)?;
        let (output_mean, output_std) = stats(&|p| &p.motion_b)?;
        Ok(Normalization {
            input_mean,
            input_std,
            output_mean,
            output_std,
        })
    }

    fn validate(&self, width: usize) -> Result<()> {
        let fields = [&self.input_mean, &self.input_std, &self.output_mean, &self.output_std];
        if fields.iter().any(|f| f.len() != width) {
            return Err(Error::Structural(format!("normalization vectors must have length {width}")));
        }
        if fields.iter().any(|f| f.iter().any(|v| !v.is_finite()))
            || self.input_std.iter().chain(&self.output_std).any(|&s| s <= 0.0)
        {
            return Err(Error::Argument("normalization needs finite values and positive deviations".into()));
        }
        Ok(())
    }
}

/// Architecture hyperparameters of the generator and discriminator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layout: EncoderLayout,
    /// Bidirectional output width of each structure's encoder
    /// (twice the per-direction hidden size).
    pub slice_width: usize,
    /// Per-direction hidden size of the bidirectional decoder.
    pub decoder_hidden: usize,
    /// Inner width of the attention scorer.
    pub attention_width: usize,
    /// Per-direction hidden size of both discriminator layers.
    pub discriminator_hidden: usize,
    /// Identity when absent.
    #[serde(default)]
    pub normalization: Option<Normalization>,
}

/// Widths that differ between datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    pub fc: Option<usize>,
    pub slice: usize,
    pub decoder_hidden: usize,
    pub attention: usize,
    pub discriminator_hidden: usize,
}

impl Widths {
    /// 80 units per spatial slice, 480 for the attentive layer.
    pub const SBU: Widths = Widths {
        fc: Some(80),
        slice: 80,
        decoder_hidden: 240,
        attention: 480,
        discriminator_hidden: 80,
    };

    /// 200 units per spatial slice, 1200 for the attentive layer.
    pub const TWO_CHARACTER: Widths = Widths {
        fc: Some(200),
        slice: 200,
        decoder_hidden: 600,
        attention: 1200,
        discriminator_hidden: 200,
    };
}

impl ModelConfig {
    pub fn new(layout: EncoderLayout, widths: Widths) -> Result<Self> {
        let cfg = ModelConfig {
            layout,
            slice_width: widths.slice,
            decoder_hidden: widths.decoder_hidden,
            attention_width: widths.attention,
            discriminator_hidden: widths.discriminator_hidden,
            normalization: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn for_skeleton(
        skeleton: &Skeleton,
        classes: usize,
        widths: Widths,
        label_conditioning: bool,
    ) -> Result<Self> {
        let layout = EncoderLayout::from_skeleton(skeleton, classes, widths.fc, label_conditioning);
        Self::new(layout, widths)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.layout.classes == 0 {
            return Err(Error::Argument("model needs at least one class".into()));
        }
        if self.slice_width == 0 || self.slice_width % 2 != 0 {
            return Err(Error::Argument(format!(
                "slice width {} must be a positive even number (two directions)",
                self.slice_width
            )));
        }
        if self.decoder_hidden == 0 || self.attention_width == 0 || self.discriminator_hidden == 0
        {
            return Err(Error::Argument("all widths must be positive".into()));
        }
        if self.layout.fc_width == Some(0) {
            return Err(Error::Argument("fc width must be positive".into()));
        }
        if let Some(n) = &self.normalization {
            n.validate(self.pose_width())?;
        }
        Ok(())
    }

    pub fn joints(&self) -> usize {
        self.layout.joints
    }

    pub fn classes(&self) -> usize {
        self.layout.classes
    }

    pub fn pose_width(&self) -> usize {
        3 * self.layout.joints
    }

    /// Per-direction hidden size of each structure encoder.
    pub fn structure_hidden(&self) -> usize {
        self.slice_width / 2
    }

    /// Width of the concatenated encoder states fed to attention: 6 × slice width.
    pub fn encoder_width(&self) -> usize {
        Structure::ALL.len() * self.slice_width
    }

    /// Bidirectional decoder state width.
    pub fn decoder_width(&self) -> usize {
        2 * self.decoder_hidden
    }
}

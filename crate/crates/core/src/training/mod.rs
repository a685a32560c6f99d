//! Optimization of the image and depth CR generators.
//!
//! Each step draws its batch from an RNG keyed on `(seed, step)`, so a run
//! restored from a saved [`TrainState`] continues exactly where an
//! uninterrupted run would be.

mod loss;

pub use loss::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, OptimizerKind, OptimizerState, Tape};
use crate::canny::{canny, CannyConfig};
use crate::data::{sample_siamese_pair, DeltaPolarity, FramePair, SamplerConfig};
use crate::error::{Error, Result};
use crate::generator::{build_generator, GeneratorConfig, GeneratorWeights};
use crate::image::GrayImage;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    DoubleSiamese,
    CommonEdges,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub p_similar: f64,
    pub window_k: usize,
    pub delta_polarity: DeltaPolarity,
    /// `[width, height]` the frames are resized to before training.
    pub resolution: [usize; 2],
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// `0` disables periodic checkpoints.
    pub checkpoint_every: usize,
    pub encoder_channels: Vec<usize>,
    pub kernel_size: usize,
    /// Range in meters mapped to depth intensity `1`.
    pub max_range: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::DoubleSiamese,
            learning_rate: 1e-3,
            batch_size: 8,
            steps: 500,
            p_similar: 0.5,
            window_k: 3,
            delta_polarity: DeltaPolarity::Dissimilarity,
            resolution: [64, 32],
            optimizer: OptimizerKind::Adam,
            seed: 0,
            checkpoint_every: 100,
            encoder_channels: vec![8, 16, 32],
            kernel_size: 3,
            max_range: 60.0,
        }
    }
}

impl TrainConfig {
    /// Generator config for one role. The depth generator gets a different
    /// init seed so the two networks do not start identical.
    pub fn generator_config(&self, role_offset: u64) -> GeneratorConfig {
        GeneratorConfig {
            input_width: self.resolution[0],
            input_height: self.resolution[1],
            encoder_channels: self.encoder_channels.clone(),
            kernel_size: self.kernel_size,
            activation: Activation::LeakyRelu,
            seed: self.seed.wrapping_add(role_offset),
        }
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            p_similar: self.p_similar,
            window_k: self.window_k,
            seed: self.seed,
            polarity: self.delta_polarity,
        }
    }

    /// Collects every violated constraint instead of stopping at the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            out.push(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            out.push("batch_size must be positive".into());
        }
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            out.push(format!("max_range must be positive, got {}", self.max_range));
        }
        if let Err(e) = self.sampler_config().validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.generator_config(0).validate() {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Everything needed to continue a run: weights, optimizer moments and the
/// per-step loss history (its length is the next step index).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub image: GeneratorWeights<f32>,
    pub depth: GeneratorWeights<f32>,
    pub image_opt: OptimizerState<f32>,
    pub depth_opt: OptimizerState<f32>,
    pub history: Vec<f64>,
}

impl TrainState {
    pub fn initial(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let lr = cfg.learning_rate as f32;
        Ok(TrainState {
            image: build_generator(&cfg.generator_config(0))?,
            depth: build_generator(&cfg.generator_config(1))?,
            image_opt: OptimizerState::new(cfg.optimizer, lr),
            depth_opt: OptimizerState::new(cfg.optimizer, lr),
            history: Vec::new(),
        })
    }

    pub fn step(&self) -> usize {
        self.history.len()
    }
}

/// Input for one batch item; indices refer to the trainer's frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BatchItem {
    Siamese { first: usize, second: usize, delta: f32 },
    Edges { frame: usize },
}

struct ItemResult {
    loss: f64,
    image_grads: Vec<Tensor<f32>>,
    depth_grads: Vec<Tensor<f32>>,
}

pub struct Trainer {
    cfg: TrainConfig,
    frames: Vec<FramePair>,
    edges: Vec<GrayImage>,
    state: TrainState,
}

impl Trainer {
    /// `frames` must already be at the configured resolution.
    pub fn new(cfg: TrainConfig, frames: Vec<FramePair>, canny_cfg: &CannyConfig) -> Result<Self> {
        let state = TrainState::initial(&cfg)?;
        Trainer::resume(cfg, frames, canny_cfg, state)
    }

    pub fn resume(
        cfg: TrainConfig,
        frames: Vec<FramePair>,
        canny_cfg: &CannyConfig,
        state: TrainState,
    ) -> Result<Self> {
        cfg.validate()?;
        let res = (cfg.resolution[0], cfg.resolution[1]);
        if let Some(f) = frames.iter().find(|f| f.gray.dims() != res) {
            return Err(Error::shape(format!(
                "frame {} is {:?}, training resolution is {res:?}",
                f.index,
                f.gray.dims()
            )));
        }
        let min = match cfg.architecture {
            Architecture::DoubleSiamese => cfg.sampler_config().min_frames(),
            Architecture::CommonEdges => 1,
        };
        if frames.len() < min {
            return Err(Error::invalid(format!(
                "training needs at least {min} frames, got {}",
                frames.len()
            )));
        }
        state.image.validate()?;
        state.depth.validate()?;
        for (role, w, off) in [("image", &state.image, 0), ("depth", &state.depth, 1)] {
            let mut expected = cfg.generator_config(off);
            expected.seed = w.config.seed;
            if w.config != expected {
                return Err(Error::invalid(format!(
                    "{role} weights were built for a different architecture"
                )));
            }
        }
        let edges = match cfg.architecture {
            Architecture::CommonEdges => frames
                .par_iter()
                .map(|f| canny(&f.gray, canny_cfg))
                .collect::<Result<_>>()?,
            Architecture::DoubleSiamese => Vec::new(),
        };
        Ok(Trainer {
            cfg,
            frames,
            edges,
            state,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn into_state(self) -> TrainState {
        self.state
    }

    pub fn frames(&self) -> &[FramePair] {
        &self.frames
    }

    /// Edge rasters for common-edges training, one per frame.
    pub fn edges(&self) -> &[GrayImage] {
        &self.edges
    }

    /// Batch drawn for `step`; depends only on the seed and the step index.
    pub fn batch_for_step(&self, step: usize) -> Result<Vec<BatchItem>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(step as u64);
        let sampler = self.cfg.sampler_config();
        (0..self.cfg.batch_size)
            .map(|_| match self.cfg.architecture {
                Architecture::DoubleSiamese => {
                    let p = sample_siamese_pair(&self.frames, &sampler, &mut rng)?;
                    Ok(BatchItem::Siamese {
                        first: p.first,
                        second: p.second,
                        delta: p.delta,
                    })
                }
                Architecture::CommonEdges => Ok(BatchItem::Edges {
                    frame: rng.random_range(0..self.frames.len()),
                }),
            })
            .collect()
    }

    fn item_gradients(&self, item: BatchItem) -> Result<ItemResult> {
        let st = &self.state;
        let mut tape = Tape::new();
        let iv = st.image.register(&mut tape, true);
        let dv = st.depth.register(&mut tape, true);
        let loss = match item {
            BatchItem::Siamese { first, second, delta } => {
                let (a, b) = (&self.frames[first], &self.frames[second]);
                let i1 = tape.constant(a.gray.to_tensor());
                let i2 = tape.constant(b.gray.to_tensor());
                let d1 = tape.constant(a.depth_gray.to_tensor());
                let d2 = tape.constant(b.depth_gray.to_tensor());
                let k11 = st.image.forward_on_tape(&mut tape, &iv, i1)?;
                let k12 = st.image.forward_on_tape(&mut tape, &iv, i2)?;
                let k21 = st.depth.forward_on_tape(&mut tape, &dv, d1)?;
                let k22 = st.depth.forward_on_tape(&mut tape, &dv, d2)?;
                double_siamese_on_tape(&mut tape, k11, k12, k21, k22, delta)?
            }
            BatchItem::Edges { frame } => {
                let f = &self.frames[frame];
                let img = tape.constant(f.gray.to_tensor());
                let dep = tape.constant(f.depth_gray.to_tensor());
                let edge = tape.constant(self.edges[frame].to_tensor());
                let k1 = st.image.forward_on_tape(&mut tape, &iv, img)?;
                let k2 = st.depth.forward_on_tape(&mut tape, &dv, dep)?;
                common_edges_on_tape(&mut tape, k1, k2, edge)?
            }
        };
        let value = tape.value(loss).item() as f64;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                step: st.step(),
                detail: format!("loss is {value} for batch item {item:?}"),
            });
        }
        let mut grads = tape.backward(loss)?;
        let mut collect = |vars: &crate::generator::GeneratorVars| -> Vec<Tensor<f32>> {
            vars.layers
                .iter()
                .flat_map(|&(k, b)| [k, b])
                .map(|v| grads.take(v).expect("trainable leaf has a gradient"))
                .collect()
        };
        let image_grads = collect(&iv);
        let depth_grads = collect(&dv);
        Ok(ItemResult {
            loss: value,
            image_grads,
            depth_grads,
        })
    }

    /// One optimizer step on `batch`. Items are differentiated in parallel;
    /// gradients are summed in item order so the result does not depend on
    /// scheduling. Returns the mean batch loss and appends it to the history.
    pub fn train_step(&mut self, batch: &[BatchItem]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid("batch must not be empty"));
        }
        let results: Vec<ItemResult> = batch
            .par_iter()
            .map(|&item| self.item_gradients(item))
            .collect::<Result<_>>()?;
        let n = results.len();
        let mean = |pick: fn(&ItemResult) -> &Vec<Tensor<f32>>| -> Vec<Tensor<f32>> {
            let mut acc = pick(&results[0]).clone();
            for r in &results[1..] {
                for (a, g) in acc.iter_mut().zip(pick(r)) {
                    a.add_assign(g);
                }
            }
            let inv = 1.0 / n as f32;
            acc.into_iter().map(|t| t.map(|v| v * inv)).collect()
        };
        let image_grads = mean(|r| &r.image_grads);
        let depth_grads = mean(|r| &r.depth_grads);
        let loss = results.iter().map(|r| r.loss).sum::<f64>() / n as f64;

        let step = self.state.step();
        let st = &mut self.state;
        let mut image_params = st.image.params();
        let mut depth_params = st.depth.params();
        let tag = |e: Error| match e {
            Error::NonFinite { detail, .. } => Error::NonFinite { step, detail },
            other => other,
        };
        // Validate both updates before committing either.
        let mut image_opt = st.image_opt.clone();
        let mut depth_opt = st.depth_opt.clone();
        image_opt.step(&mut image_params, &image_grads).map_err(tag)?;
        depth_opt.step(&mut depth_params, &depth_grads).map_err(tag)?;
        for (dst, src) in st.image.params_mut().into_iter().zip(image_params) {
            *dst = src;
        }
        for (dst, src) in st.depth.params_mut().into_iter().zip(depth_params) {
            *dst = src;
        }
        st.image_opt = image_opt;
        st.depth_opt = depth_opt;
        st.history.push(loss);
        Ok(loss)
    }

    /// Trains until the history reaches `cfg.steps` entries. `on_checkpoint`
    /// runs after every `checkpoint_every`-th step and after the last one.
    pub fn run(&mut self, mut on_checkpoint: impl FnMut(&TrainState) -> Result<()>) -> Result<()> {
        while self.state.step() < self.cfg.steps {
            let batch = self.batch_for_step(self.state.step())?;
            self.train_step(&batch)?;
            let done = self.state.step();
            let periodic = self.cfg.checkpoint_every > 0 && done.is_multiple_of(self.cfg.checkpoint_every);
            if periodic || done == self.cfg.steps {
                on_checkpoint(&self.state)?;
            }
        }
        Ok(())
    }
}

/// Convenience wrapper: trains from scratch and returns the final state.
pub fn train_loop(cfg: &TrainConfig, frames: Vec<FramePair>, canny_cfg: &CannyConfig) -> Result<TrainState> {
    let mut trainer = Trainer::new(cfg.clone(), frames, canny_cfg)?;
    trainer.run(|_| Ok(()))?;
    Ok(trainer.into_state())
}

/// Mean over frames of `mean|CR(image) − CR(depth)|`.
pub fn cross_modal_discrepancy(
    image: &GeneratorWeights<f32>,
    depth: &GeneratorWeights<f32>,
    frames: &[FramePair],
) -> Result<f64> {
    mean_over(frames, |f| {
        image.forward(&f.gray)?.mean_abs_diff(&depth.forward(&f.depth_gray)?)
    })
}

/// Mean over frames of `mean|CR(image) − edges|`.
pub fn edge_discrepancy(image: &GeneratorWeights<f32>, frames: &[FramePair], edges: &[GrayImage]) -> Result<f64> {
    if frames.len() != edges.len() {
        return Err(Error::shape(format!(
            "{} frames but {} edge images",
            frames.len(),
            edges.len()
        )));
    }
    let per: Vec<f64> = frames
        .par_iter()
        .zip(edges)
        .map(|(f, e)| image.forward(&f.gray)?.mean_abs_diff(e))
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len().max(1) as f64)
}

fn mean_over(frames: &[FramePair], f: impl Fn(&FramePair) -> Result<f64> + Sync + Send) -> Result<f64> {
    let per: Vec<f64> = frames.par_iter().map(f).collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len().max(1) as f64)
}

#[cfg(test)]
mod tests;

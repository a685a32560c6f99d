//! Encoder-decoder CR generator built only from convolutions.
//!
//! Encoder: per entry of `encoder_channels`, `conv → activation → maxpool`.
//! Decoder mirrors it with `upsample → conv → activation`, widths walking
//! back down the channel list, followed by a 1-channel conv head with a
//! sigmoid so the CR lies in `(0, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Tape, Var};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::tensor::{Real, Tensor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub input_width: usize,
    pub input_height: usize,
    pub encoder_channels: Vec<usize>,
    pub kernel_size: usize,
    /// Hidden-layer activation; the head is always a sigmoid.
    pub activation: Activation,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            input_width: 320,
            input_height: 160,
            encoder_channels: vec![16, 32, 64, 128],
            kernel_size: 3,
            activation: Activation::LeakyRelu,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoder_channels.is_empty() || self.encoder_channels.contains(&0) {
            return Err(Error::invalid(format!(
                "encoder_channels must be non-empty and positive, got {:?}",
                self.encoder_channels
            )));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        let factor = 1usize << self.encoder_channels.len();
        if self.input_width == 0
            || self.input_height == 0
            || !self.input_width.is_multiple_of(factor)
            || !self.input_height.is_multiple_of(factor)
        {
            return Err(Error::invalid(format!(
                "input {}x{} must be divisible by 2^{} = {factor} in both dimensions",
                self.input_width,
                self.input_height,
                self.encoder_channels.len()
            )));
        }
        Ok(())
    }

    /// `(name, in_channels, out_channels)` for every conv layer in order.
    pub fn layer_plan(&self) -> Vec<(String, usize, usize)> {
        let ch = &self.encoder_channels;
        let depth = ch.len();
        let mut plan = Vec::with_capacity(2 * depth + 1);
        let mut c_in = 1;
        for (i, &c) in ch.iter().enumerate() {
            plan.push((format!("enc{i}"), c_in, c));
            c_in = c;
        }
        for i in 0..depth {
            // Walk back down: deepest decoder stage outputs the second-to-last
            // encoder width, the last one the first encoder width.
            let c_out = ch[depth.saturating_sub(i + 2)];
            plan.push((format!("dec{i}"), c_in, c_out));
            c_in = c_out;
        }
        plan.push(("head".to_string(), c_in, 1));
        plan
    }

    pub fn bottleneck_dims(&self) -> (usize, usize) {
        let f = 1usize << self.encoder_channels.len();
        (self.input_width / f, self.input_height / f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub name: String,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorWeights<T = f32> {
    pub config: GeneratorConfig,
    pub layers: Vec<Layer<T>>,
}

/// He-uniform initialization (bound `√(6 / fan_in)`), zero biases.
pub fn build_generator(config: &GeneratorConfig) -> Result<GeneratorWeights<f32>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.kernel_size;
    let layers = config
        .layer_plan()
        .into_iter()
        .map(|(name, c_in, c_out)| {
            let fan_in = (c_in * k * k) as f64;
            let bound = (6.0 / fan_in).sqrt();
            let data = (0..c_out * c_in * k * k)
                .map(|_| rng.random_range(-bound..bound) as f32)
                .collect();
            Layer {
                name,
                kernels: Tensor::new(&[c_out, c_in, k, k], data).expect("planned shape"),
                bias: Tensor::zeros(&[c_out]),
            }
        })
        .collect();
    Ok(GeneratorWeights {
        config: config.clone(),
        layers,
    })
}

/// Trainable leaves for one generator on a tape: `(kernels, bias)` per layer.
#[derive(Clone, Debug)]
pub struct GeneratorVars {
    pub layers: Vec<(Var, Var)>,
}

impl<T: Real> GeneratorWeights<T> {
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.kernels.len() + l.bias.len()).sum()
    }

    pub fn cast<U: Real>(&self) -> GeneratorWeights<U> {
        GeneratorWeights {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    name: l.name.clone(),
                    kernels: l.kernels.cast(),
                    bias: l.bias.cast(),
                })
                .collect(),
        }
    }

    /// Flat parameter list in layer order, kernels before bias.
    pub fn params(&self) -> Vec<Tensor<T>> {
        self.layers
            .iter()
            .flat_map(|l| [l.kernels.clone(), l.bias.clone()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.kernels, &mut l.bias])
            .collect()
    }

    /// Checks every layer against the configured plan.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let plan = self.config.layer_plan();
        let k = self.config.kernel_size;
        if plan.len() != self.layers.len() {
            return Err(Error::shape(format!(
                "config implies {} layers, weights have {}",
                plan.len(),
                self.layers.len()
            )));
        }
        for ((name, c_in, c_out), layer) in plan.iter().zip(&self.layers) {
            if &layer.name != name || layer.kernels.shape() != [*c_out, *c_in, k, k] || layer.bias.shape() != [*c_out] {
                return Err(Error::shape(format!(
                    "layer {} does not match planned {name} ({c_in}->{c_out}, k={k})",
                    layer.name
                )));
            }
        }
        Ok(())
    }

    /// Records this generator's parameters on `tape`.
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> GeneratorVars {
        let leaf = |tape: &mut Tape<T>, t: &Tensor<T>| {
            if trainable {
                tape.param(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        GeneratorVars {
            layers: self
                .layers
                .iter()
                .map(|l| (leaf(tape, &l.kernels), leaf(tape, &l.bias)))
                .collect(),
        }
    }

    /// Runs the network on a `1×H×W` input already on the tape.
    pub fn forward_on_tape(&self, tape: &mut Tape<T>, vars: &GeneratorVars, input: Var) -> Result<Var> {
        let (c, h, w) = tape.value(input).chw()?;
        if c != 1 || h != self.config.input_height || w != self.config.input_width {
            return Err(Error::shape(format!(
                "generator expects 1x{}x{} input, got {c}x{h}x{w}",
                self.config.input_height, self.config.input_width
            )));
        }
        let depth = self.config.encoder_channels.len();
        let act = self.config.activation;
        let mut x = input;
        for &(k, b) in &vars.layers[..depth] {
            x = tape.conv2d(x, k, b)?;
            x = tape.activation(x, act);
            x = tape.maxpool2x2(x)?;
        }
        for &(k, b) in &vars.layers[depth..2 * depth] {
            x = tape.upsample2x_nearest(x)?;
            x = tape.conv2d(x, k, b)?;
            x = tape.activation(x, act);
        }
        let (k, b) = vars.layers[2 * depth];
        x = tape.conv2d(x, k, b)?;
        Ok(tape.activation(x, Activation::Sigmoid))
    }
}

impl GeneratorWeights<f32> {
    /// Maps an image to its CR (same size, values in `(0, 1)`).
    pub fn forward(&self, image: &GrayImage) -> Result<GrayImage> {
        if image.dims() != (self.config.input_width, self.config.input_height) {
            return Err(Error::shape(format!(
                "generator expects {}x{} images, got {}x{}",
                self.config.input_width,
                self.config.input_height,
                image.width(),
                image.height()
            )));
        }
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let input = tape.constant(image.to_tensor());
        let out = self.forward_on_tape(&mut tape, &vars, input)?;
        GrayImage::new(image.width(), image.height(), tape.value(out).data().to_vec())
    }
}

//! Tape-based reverse-mode differentiation over [`Tensor`]s.
//!
//! Operations are recorded on a [`Tape`] in execution order; each call
//! returns a [`Var`] handle naming the new node. [`Tape::backward`] walks the
//! tape once in reverse and returns gradients for every node that was
//! created with `requires_grad` (directly or through its inputs).
//!
//! Only the primitives the CR generators and the two training losses need
//! are provided: same-padded convolution, 2×2 max pooling, nearest
//! upsampling, two activations, mean absolute difference and a handful of
//! scalar ops.

pub mod gradcheck;
mod kernels;
mod optim;

pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Slope of the leaky ReLU used throughout the generators.
pub const LEAKY_SLOPE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Conv2d { input: Var, kernels: Var, bias: Var },
    MaxPool { input: Var, argmax: Vec<usize> },
    Upsample { input: Var },
    LeakyRelu { input: Var },
    // Backward uses the stored output.
    Sigmoid { input: Var },
    MeanAbsDiff { a: Var, b: Var },
    Abs { input: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Scale { input: Var, factor: T },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of `var`; `None` for constants.
    pub fn get(&self, var: Var) -> Option<&Tensor<T>> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a trainable leaf.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Records a leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, var: Var) -> &Tensor<T> {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Stride-1 cross-correlation with zero "same" padding plus a per-channel
    /// bias. `input` is CxHxW, `kernels` OxCxKxK with odd K, `bias` has O
    /// entries.
    pub fn conv2d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let (c, h, w) = self.value(input).chw()?;
        let kshape = self.value(kernels).shape().to_vec();
        let [o, kc, kh, kw] = kshape[..] else {
            return Err(Error::shape(format!("conv2d kernels must be OxCxKxK, got {kshape:?}")));
        };
        if kc != c {
            return Err(Error::shape(format!(
                "conv2d input has {c} channels but kernels expect {kc}"
            )));
        }
        if kh != kw || kh % 2 == 0 {
            return Err(Error::shape(format!(
                "conv2d kernels must be square with odd size, got {kh}x{kw}"
            )));
        }
        if self.value(bias).shape() != [o] {
            return Err(Error::shape(format!(
                "conv2d bias must have shape [{o}], got {:?}",
                self.value(bias).shape()
            )));
        }
        let out = kernels::conv2d_forward(
            self.value(input).data(),
            self.value(kernels).data(),
            self.value(bias).data(),
            c,
            h,
            w,
            o,
            kh,
        );
        let value = Tensor::new(&[o, h, w], out)?;
        let rg = self.any_grad(&[input, kernels, bias]);
        Ok(self.push(value, Op::Conv2d { input, kernels, bias }, rg))
    }

    /// 2×2 max pooling with stride 2. Ties go to the first cell in
    /// row-major order.
    pub fn maxpool2x2(&mut self, input: Var) -> Result<Var> {
        let (c, h, w) = self.value(input).chw()?;
        if h % 2 != 0 || w % 2 != 0 {
            return Err(Error::shape(format!("maxpool2x2 needs even spatial dims, got {h}x{w}")));
        }
        let (out, argmax) = kernels::maxpool_forward(self.value(input).data(), c, h, w);
        let value = Tensor::new(&[c, h / 2, w / 2], out)?;
        let rg = self.any_grad(&[input]);
        Ok(self.push(value, Op::MaxPool { input, argmax }, rg))
    }

    pub fn upsample2x_nearest(&mut self, input: Var) -> Result<Var> {
        let (c, h, w) = self.value(input).chw()?;
        let src = self.value(input).data();
        let (h2, w2) = (2 * h, 2 * w);
        let mut out = Vec::with_capacity(c * h2 * w2);
        for ch in 0..c {
            let plane = &src[ch * h * w..(ch + 1) * h * w];
            for y in 0..h2 {
                let row = &plane[(y / 2) * w..(y / 2 + 1) * w];
                for &v in row {
                    out.push(v);
                    out.push(v);
                }
            }
        }
        let value = Tensor::new(&[c, h2, w2], out)?;
        let rg = self.any_grad(&[input]);
        Ok(self.push(value, Op::Upsample { input }, rg))
    }

    pub fn activation(&mut self, input: Var, kind: Activation) -> Var {
        let rg = self.any_grad(&[input]);
        match kind {
            Activation::LeakyRelu => {
                let slope = T::of(LEAKY_SLOPE);
                let value = self.value(input).map(|x| if x >= T::zero() { x } else { slope * x });
                self.push(value, Op::LeakyRelu { input }, rg)
            }
            Activation::Sigmoid => {
                let value = self.value(input).map(sigmoid);
                self.push(value, Op::Sigmoid { input }, rg)
            }
        }
    }

    /// `(1/N)·Σ|a_i − b_i|` as a scalar.
    pub fn mean_abs_diff(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Error::shape(format!(
                "mean_abs_diff operands differ: {:?} vs {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let n = T::of(ta.len() as f64);
        let sum: T = ta.data().iter().zip(tb.data()).map(|(&x, &y)| (x - y).abs()).sum();
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::scalar(sum / n), Op::MeanAbsDiff { a, b }, rg))
    }

    pub fn abs(&mut self, input: Var) -> Result<Var> {
        let t = self.scalar_of(input, "abs")?;
        let rg = self.any_grad(&[input]);
        Ok(self.push(Tensor::scalar(t.abs()), Op::Abs { input }, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.scalar_of(a, "add")?, self.scalar_of(b, "add")?);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::scalar(x + y), Op::Add { a, b }, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.scalar_of(a, "sub")?, self.scalar_of(b, "sub")?);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(Tensor::scalar(x - y), Op::Sub { a, b }, rg))
    }

    pub fn scale(&mut self, input: Var, factor: T) -> Result<Var> {
        let x = self.scalar_of(input, "scale")?;
        let rg = self.any_grad(&[input]);
        Ok(self.push(Tensor::scalar(x * factor), Op::Scale { input, factor }, rg))
    }

    fn scalar_of(&self, var: Var, op: &str) -> Result<T> {
        let t = self.value(var);
        if !t.is_scalar() {
            return Err(Error::shape(format!(
                "{op} expects scalar operands, got shape {:?}",
                t.shape()
            )));
        }
        Ok(t.item())
    }

    /// Reverse pass from a scalar root. Gradients accumulate additively over
    /// fan-out; every node reachable from `root` that requires a gradient
    /// receives one (zeros if it did not influence the root).
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        if root.0 >= self.nodes.len() {
            return Err(Error::invalid(format!("{root:?} is not on this tape")));
        }
        if !self.value(root).is_scalar() {
            return Err(Error::shape(format!(
                "backward root must be scalar, got shape {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if self.nodes[root.0].requires_grad {
            grads[root.0] = Some(Tensor::scalar(T::one()));
        }

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }

        for (idx, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && grads[idx].is_none() {
                grads[idx] = Some(Tensor::zeros(node.value.shape()));
            }
            if !node.requires_grad {
                grads[idx] = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { input, kernels, bias } => {
                let (c, h, w) = self.value(*input).chw()?;
                let ks = self.value(*kernels).shape();
                let (o, k) = (ks[0], ks[2]);
                let x = self.value(*input).data();
                let wts = self.value(*kernels).data();
                if self.requires_grad(*input) {
                    let gi = kernels::conv2d_grad_input(g.data(), wts, c, h, w, o, k);
                    self.accumulate(grads, *input, gi)?;
                }
                if self.requires_grad(*kernels) {
                    let gk = kernels::conv2d_grad_kernels(g.data(), x, c, h, w, o, k);
                    self.accumulate(grads, *kernels, gk)?;
                }
                if self.requires_grad(*bias) {
                    let gb = g
                        .data()
                        .chunks(h * w)
                        .map(|plane| plane.iter().copied().sum())
                        .collect();
                    self.accumulate(grads, *bias, gb)?;
                }
            }
            Op::MaxPool { input, argmax } => {
                if self.requires_grad(*input) {
                    let mut gi = vec![T::zero(); self.value(*input).len()];
                    for (&src, &gv) in argmax.iter().zip(g.data()) {
                        gi[src] = gi[src] + gv;
                    }
                    self.accumulate(grads, *input, gi)?;
                }
            }
            Op::Upsample { input } => {
                if self.requires_grad(*input) {
                    let (c, h, w) = self.value(*input).chw()?;
                    let w2 = 2 * w;
                    let gd = g.data();
                    let mut gi = Vec::with_capacity(c * h * w);
                    for ch in 0..c {
                        let plane = &gd[ch * 4 * h * w..(ch + 1) * 4 * h * w];
                        for y in 0..h {
                            let r0 = &plane[(2 * y) * w2..(2 * y + 1) * w2];
                            let r1 = &plane[(2 * y + 1) * w2..(2 * y + 2) * w2];
                            for x in 0..w {
                                gi.push(r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
                            }
                        }
                    }
                    self.accumulate(grads, *input, gi)?;
                }
            }
            Op::LeakyRelu { input } => {
                if self.requires_grad(*input) {
                    let slope = T::of(LEAKY_SLOPE);
                    let gi = self
                        .value(*input)
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&x, &gv)| if x >= T::zero() { gv } else { slope * gv })
                        .collect();
                    self.accumulate(grads, *input, gi)?;
                }
            }
            Op::Sigmoid { input } => {
                if self.requires_grad(*input) {
                    let gi = node
                        .value
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&s, &gv)| gv * s * (T::one() - s))
                        .collect();
                    self.accumulate(grads, *input, gi)?;
                }
            }
            Op::MeanAbsDiff { a, b } => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let scale = g.item() / T::of(ta.len() as f64);
                let signs: Vec<T> = ta
                    .data()
                    .iter()
                    .zip(tb.data())
                    .map(|(&x, &y)| sign(x - y) * scale)
                    .collect();
                if self.requires_grad(*b) {
                    let neg = signs.iter().map(|&s| -s).collect();
                    self.accumulate(grads, *b, neg)?;
                }
                if self.requires_grad(*a) {
                    self.accumulate(grads, *a, signs)?;
                }
            }
            Op::Abs { input } => {
                let x = self.value(*input).item();
                self.accumulate(grads, *input, vec![sign(x) * g.item()])?;
            }
            Op::Add { a, b } => {
                self.accumulate(grads, *a, vec![g.item()])?;
                self.accumulate(grads, *b, vec![g.item()])?;
            }
            Op::Sub { a, b } => {
                self.accumulate(grads, *a, vec![g.item()])?;
                self.accumulate(grads, *b, vec![-g.item()])?;
            }
            Op::Scale { input, factor } => {
                self.accumulate(grads, *input, vec![g.item() * *factor])?;
            }
        }
        Ok(())
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], var: Var, data: Vec<T>) -> Result<()> {
        if !self.requires_grad(var) {
            return Ok(());
        }
        let incoming = Tensor::new(self.value(var).shape(), data)?;
        match &mut grads[var.0] {
            Some(existing) => existing.add_assign(&incoming),
            slot => *slot = Some(incoming),
        }
        Ok(())
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Sign with `sign(0) = 0`, the subgradient used for `|x|`.
fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests;

//! Pair-similarity network.
//!
//! Two embeddings are concatenated and pushed through a dense ReLU stack
//! (1536 → 1024 → 256 → 64 → 1 for 768-wide inputs) ending in a sigmoid, so
//! the output is a similarity score in (0, 1). Inverted dropout follows every
//! hidden layer except the last one. Training minimizes mean binary
//! cross-entropy with RMSProp.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedder::Embedding;
use crate::error::{Error, Result};
use crate::DEFAULT_DIM;

/// Hidden widths of the default architecture.
pub const DEFAULT_HIDDEN: [usize; 3] = [1024, 256, 64];
pub const DEFAULT_DROPOUT: f64 = 0.5;

/// Lower/upper clip applied to predicted probabilities before taking logs.
pub const PROB_CLIP: f64 = 1e-7;

const MODEL_FORMAT: &str = "tinysearch-simnet";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    None,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::None => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::None => 1.0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of one prediction, with `p` clipped to
/// `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Fully connected layer. `weights` is `in_width × out_width`, row-major, so
/// row `i` holds the fan-out of input `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_width: usize,
    out_width: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        in_width: usize,
        out_width: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if in_width == 0 || out_width == 0 {
            return Err(Error::Format("layer widths must be positive".into()));
        }
        if weights.len() != in_width * out_width {
            return Err(Error::Format(format!(
                "layer {in_width}x{out_width} expects {} weights, got {}",
                in_width * out_width,
                weights.len()
            )));
        }
        if bias.len() != out_width {
            return Err(Error::Format(format!(
                "layer {in_width}x{out_width} expects {out_width} biases, got {}",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite parameter".into()));
        }
        Ok(DenseLayer {
            in_width,
            out_width,
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(in_width: usize, out_width: usize, activation: Activation) -> Self {
        DenseLayer {
            in_width,
            out_width,
            weights: vec![0.0; in_width * out_width],
            bias: vec![0.0; out_width],
            activation,
        }
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.weights[input * self.out_width + output]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (xi, row) in x.iter().zip(self.weights.chunks_exact(self.out_width)) {
            if *xi == 0.0 {
                continue;
            }
            for (zj, wij) in z.iter_mut().zip(row) {
                *zj += xi * wij;
            }
        }
        z
    }
}

/// Train-time dropout versus deterministic inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// One labeled pair, stored as the concatenated network input.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExample {
    input: Vec<f64>,
    label: u8,
}

impl PairExample {
    pub fn new(a: &Embedding, b: &Embedding, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::Validation(format!("label must be 0 or 1, got {label}")));
        }
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        let mut input = Vec::with_capacity(a.dim() * 2);
        input.extend_from_slice(a.values());
        input.extend_from_slice(b.values());
        Ok(PairExample { input, label })
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    fn target(&self) -> f64 {
        f64::from(self.label)
    }
}

/// Everything backprop needs from one forward pass.
struct Trace {
    /// Input to each layer (post-activation, post-dropout output of the previous one).
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<bool>>>,
    output: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    dropout_rate: f64,
    seed: u64,
}

/// Default 768-wide architecture with Glorot-uniform weights.
pub fn init_model(seed: u64) -> SimilarityModel {
    SimilarityModel::new(DEFAULT_DIM, &DEFAULT_HIDDEN, DEFAULT_DROPOUT, seed)
        .expect("default architecture is valid")
}

impl SimilarityModel {
    /// Builds a model for `input_dim`-wide embeddings with the given hidden
    /// widths. Weights are Glorot-uniform from `seed`, biases zero.
    pub fn new(input_dim: usize, hidden: &[usize], dropout_rate: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut widths = vec![2 * input_dim];
        widths.extend_from_slice(hidden);
        widths.push(1);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                let activation = if l == last {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                };
                DenseLayer {
                    in_width: fan_in,
                    out_width: fan_out,
                    weights,
                    bias: vec![0.0; fan_out],
                    activation,
                }
            })
            .collect();
        Self::from_layers(input_dim, layers, dropout_rate, seed)
    }

    /// Assembles a model from explicit layers, checking that widths chain
    /// from `2 * input_dim` down to a single sigmoid output.
    pub fn from_layers(
        input_dim: usize,
        layers: Vec<DenseLayer>,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Format(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        let Some(first) = layers.first() else {
            return Err(Error::Format("model has no layers".into()));
        };
        if first.in_width != 2 * input_dim {
            return Err(Error::Format(format!(
                "first layer takes {} inputs, expected {}",
                first.in_width,
                2 * input_dim
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].out_width != pair[1].in_width {
                return Err(Error::Format(format!(
                    "layer output {} does not feed next layer input {}",
                    pair[0].out_width, pair[1].in_width
                )));
            }
        }
        let last = layers.last().unwrap();
        if last.out_width != 1 || last.activation != Activation::Sigmoid {
            return Err(Error::Format(
                "final layer must be a single sigmoid unit".into(),
            ));
        }
        Ok(SimilarityModel {
            input_dim,
            layers,
            dropout_rate,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// `[in, out]` of each layer.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .map(|l| (l.in_width, l.out_width))
            .collect()
    }

    /// Whether inverted dropout follows layer `index`: every hidden layer
    /// except the one feeding the output unit.
    pub fn dropout_after(&self, index: usize) -> bool {
        index + 2 < self.layers.len()
    }

    fn check_pair(&self, a: &Embedding, b: &Embedding) -> Result<()> {
        for v in [a, b] {
            if v.dim() != self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim,
                    actual: v.dim(),
                });
            }
        }
        Ok(())
    }

    /// Similarity score of `a` and `b`. In [`Mode::Train`] the dropout masks
    /// come from `dropout_seed`; in [`Mode::Infer`] the seed is ignored.
    pub fn forward(
        &self,
        a: &Embedding,
        b: &Embedding,
        mode: Mode,
        dropout_seed: u64,
    ) -> Result<f64> {
        self.check_pair(a, b)?;
        let mut input = Vec::with_capacity(2 * self.input_dim);
        input.extend_from_slice(a.values());
        input.extend_from_slice(b.values());
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let rng = (mode == Mode::Train).then_some(&mut rng);
        Ok(self.trace(&input, rng).output)
    }

    /// Inference-mode score.
    pub fn score(&self, a: &Embedding, b: &Embedding) -> Result<f64> {
        self.forward(a, b, Mode::Infer, 0)
    }

    /// Inference-mode score of an already concatenated input.
    pub fn score_input(&self, input: &[f64]) -> Result<f64> {
        if input.len() != 2 * self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.input_dim,
                actual: input.len(),
            });
        }
        Ok(self.trace(input, None).output)
    }

    /// Post-activation output of every layer (after dropout in train mode).
    pub fn activations(&self, input: &[f64], dropout: Option<&mut ChaCha8Rng>) -> Vec<Vec<f64>> {
        let mut t = self.trace(input, dropout);
        t.inputs.remove(0);
        t.inputs.push(vec![t.output]);
        t.inputs
    }

    fn trace(&self, input: &[f64], mut dropout: Option<&mut ChaCha8Rng>) -> Trace {
        let n = self.layers.len();
        let keep = 1.0 - self.dropout_rate;
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        let mut x = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.pre_activation(&x);
            let mut a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            let mask = match dropout.as_deref_mut() {
                Some(rng) if self.dropout_after(l) && self.dropout_rate > 0.0 => {
                    let mask: Vec<bool> = (0..a.len()).map(|_| rng.random::<f64>() < keep).collect();
                    for (v, &kept) in a.iter_mut().zip(&mask) {
                        *v = if kept { *v / keep } else { 0.0 };
                    }
                    Some(mask)
                }
                _ => None,
            };
            inputs.push(x);
            pre.push(z);
            masks.push(mask);
            x = a;
        }
        Trace {
            inputs,
            pre,
            masks,
            output: x[0],
        }
    }

    /// Accumulates `scale · ∂BCE/∂θ` for one traced example into `grads`.
    fn backprop(&self, trace: &Trace, target: f64, scale: f64, grads: &mut Gradients) {
        let keep = 1.0 - self.dropout_rate;
        let n = self.layers.len();
        // sigmoid + BCE: gradient wrt the output pre-activation is p - y
        let mut delta = vec![(trace.output - target) * scale];
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            if l + 1 < n {
                if let Some(mask) = &trace.masks[l] {
                    for (d, &kept) in delta.iter_mut().zip(mask) {
                        *d = if kept { *d / keep } else { 0.0 };
                    }
                }
                for (d, &z) in delta.iter_mut().zip(&trace.pre[l]) {
                    *d *= layer.activation.derivative(z);
                }
            }

            let g = &mut grads.layers[l];
            for (gb, d) in g.bias.iter_mut().zip(&delta) {
                *gb += d;
            }
            let x = &trace.inputs[l];
            for (xi, row) in x.iter().zip(g.weights.chunks_exact_mut(layer.out_width)) {
                if *xi == 0.0 {
                    continue;
                }
                for (gw, d) in row.iter_mut().zip(&delta) {
                    *gw += xi * d;
                }
            }

            if l > 0 {
                delta = layer
                    .weights
                    .chunks_exact(layer.out_width)
                    .map(|row| row.iter().zip(&delta).map(|(w, d)| w * d).sum())
                    .collect();
            }
        }
    }

    /// Gradient of the mean BCE over `batch` plus that loss and the number of
    /// correct predictions (at 0.5). In train mode one dropout mask per example
    /// is drawn, in batch order, from `dropout_seed`.
    pub fn backward(
        &self,
        batch: &[PairExample],
        mode: Mode,
        dropout_seed: u64,
    ) -> Result<(Gradients, BatchStats)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grads = Gradients::zeros_like(self);
        let mut stats = BatchStats::default();
        let scale = 1.0 / batch.len() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        for ex in batch {
            if ex.input.len() != 2 * self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: 2 * self.input_dim,
                    actual: ex.input.len(),
                });
            }
            let rng = (mode == Mode::Train).then_some(&mut rng);
            let trace = self.trace(&ex.input, rng);
            stats.record(trace.output, ex.target());
            self.backprop(&trace, ex.target(), scale, &mut grads);
        }
        Ok((grads, stats))
    }

    /// Mean BCE over `data` in inference mode.
    pub fn loss(&self, data: &[PairExample]) -> Result<f64> {
        Ok(self.infer_stats(data)?.mean_loss())
    }

    fn infer_stats(&self, data: &[PairExample]) -> Result<BatchStats> {
        let mut stats = BatchStats::default();
        for ex in data {
            stats.record(self.score_input(&ex.input)?, ex.target());
        }
        Ok(stats)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFileRef {
            format: MODEL_FORMAT,
            version: MODEL_VERSION,
            input_dim: self.input_dim,
            dropout_rate: self.dropout_rate,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFileRef {
                    in_width: l.in_width,
                    out_width: l.out_width,
                    activation: l.activation,
                    weights: &l.weights,
                    bias: &l.bias,
                })
                .collect(),
        };
        let write = || -> std::io::Result<()> {
            let mut out = BufWriter::new(File::create(path)?);
            serde_json::to_writer(&mut out, &file)?;
            out.write_all(b"\n")?;
            out.flush()
        };
        write().map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let raw: ModelFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if raw.format != MODEL_FORMAT {
            return Err(Error::Format(format!(
                "expected format {MODEL_FORMAT:?}, found {:?}",
                raw.format
            )));
        }
        if raw.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {}",
                raw.version
            )));
        }
        let layers = raw
            .layers
            .into_iter()
            .map(|l| DenseLayer::new(l.in_width, l.out_width, l.weights, l.bias, l.activation))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(raw.input_dim, layers, raw.dropout_rate, 0)
    }
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format: &'a str,
    version: u32,
    input_dim: usize,
    dropout_rate: f64,
    layers: Vec<LayerFileRef<'a>>,
}

#[derive(Serialize)]
struct LayerFileRef<'a> {
    #[serde(rename = "in")]
    in_width: usize,
    #[serde(rename = "out")]
    out_width: usize,
    activation: Activation,
    weights: &'a [f64],
    bias: &'a [f64],
}

#[derive(Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    input_dim: usize,
    dropout_rate: f64,
    layers: Vec<LayerFile>,
}

#[derive(Deserialize)]
struct LayerFile {
    #[serde(rename = "in")]
    in_width: usize,
    #[serde(rename = "out")]
    out_width: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Running loss/accuracy over a set of predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchStats {
    pub count: usize,
    pub loss_sum: f64,
    pub correct: usize,
}

impl BatchStats {
    fn record(&mut self, p: f64, y: f64) {
        self.count += 1;
        self.loss_sum += bce_loss(p, y);
        if f64::from(u8::from(p >= 0.5)) == y {
            self.correct += 1;
        }
    }

    fn merge(&mut self, other: BatchStats) {
        self.count += other.count;
        self.loss_sum += other.loss_sum;
        self.correct += other.correct;
    }

    pub fn mean_loss(&self) -> f64 {
        self.loss_sum / self.count.max(1) as f64
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.count.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Per-layer tensors shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(model: &SimilarityModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }
}

/// RMSProp squared-gradient accumulators, one per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub accumulators: Gradients,
}

impl OptimizerState {
    pub fn new(model: &SimilarityModel) -> Self {
        OptimizerState {
            accumulators: Gradients::zeros_like(model),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        RmsProp {
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-7,
        }
    }
}

impl RmsProp {
    /// `v ← ρv + (1−ρ)g²; θ ← θ − lr·g / (√v + ε)`, elementwise.
    pub fn step_slice(&self, params: &mut [f64], grads: &[f64], accum: &mut [f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), accum.len());
        for ((p, &g), v) in params.iter_mut().zip(grads).zip(accum.iter_mut()) {
            *v = self.rho * *v + (1.0 - self.rho) * g * g;
            *p -= self.learning_rate * g / (v.sqrt() + self.epsilon);
        }
    }

    pub fn step(&self, model: &mut SimilarityModel, grads: &Gradients, state: &mut OptimizerState) {
        for ((layer, g), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut state.accumulators.layers)
        {
            self.step_slice(&mut layer.weights, &g.weights, &mut v.weights);
            self.step_slice(&mut layer.bias, &g.bias, &mut v.bias);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_split: f64,
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 200,
            validation_split: 0.3,
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-7,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.validation_split > 0.0 && self.validation_split < 1.0) {
            return Err(Error::Config(format!(
                "validation split {} must lie strictly between 0 and 1",
                self.validation_split
            )));
        }
        Ok(())
    }

    /// `(train, validation)` sizes for a dataset of `n`: the trailing
    /// `validation_split` fraction is held out.
    pub fn split_sizes(&self, n: usize) -> (usize, usize) {
        let n_train = ((n as f64) * (1.0 - self.validation_split) + 1e-9).floor() as usize;
        let n_train = n_train.min(n);
        (n_train, n - n_train)
    }

    pub fn optimizer(&self) -> RmsProp {
        RmsProp {
            learning_rate: self.learning_rate,
            rho: self.rho,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

/// Trains `model` on `data`, holding out the trailing validation fraction.
pub fn train(
    model: SimilarityModel,
    data: &[PairExample],
    config: &TrainConfig,
) -> Result<(SimilarityModel, TrainHistory)> {
    train_with(model, data, config, |_| {})
}

/// [`train`] with a callback after each epoch.
pub fn train_with(
    mut model: SimilarityModel,
    data: &[PairExample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(SimilarityModel, TrainHistory)> {
    config.validate()?;
    let (n_train, n_val) = config.split_sizes(data.len());
    if n_train == 0 || n_val == 0 {
        return Err(Error::Config(format!(
            "{} examples with validation split {} leaves an empty partition",
            data.len(),
            config.validation_split
        )));
    }
    let (train_set, val_set) = data.split_at(n_train);
    let optimizer = config.optimizer();
    let mut state = OptimizerState::new(&model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut history = TrainHistory::default();
    let mut batch = Vec::with_capacity(config.batch_size.min(n_train));

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_stats = BatchStats::default();
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i].clone()));
            let (grads, stats) = model.backward(&batch, Mode::Train, dropout_rng.next_u64())?;
            optimizer.step(&mut model, &grads, &mut state);
            epoch_stats.merge(stats);
        }
        let val = model.infer_stats(val_set)?;
        let record = EpochRecord {
            epoch,
            train_loss: epoch_stats.mean_loss(),
            train_accuracy: epoch_stats.accuracy(),
            val_loss: val.mean_loss(),
            val_accuracy: val.accuracy(),
        };
        on_epoch(&record);
        history.epochs.push(record);
    }
    Ok((model, history))
}

/// Fraction of `data` classified correctly, predicting 1 when the
/// inference-mode score is `>= threshold`.
pub fn eval_accuracy(model: &SimilarityModel, data: &[PairExample], threshold: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Validation("accuracy of an empty dataset".into()));
    }
    let mut correct = 0usize;
    for ex in data {
        let predicted = u8::from(model.score_input(&ex.input)? >= threshold);
        if predicted == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

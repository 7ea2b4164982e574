//! Residual MLP mapping a weight vector to the predicted gain mismatch
//! `ΔG = G̃ − G` (dB), with hand-written backpropagation and an Adam trainer.
//!
//! Topology: `input → affine(width) → blocks × [affine, ReLU, affine, + skip]
//! → affine(1)`. The scalar output is multiplied by `target_scale` to give dB,
//! so a network whose head is all zeros predicts exactly zero.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{chain_rng, WeightVector};

/// One training record.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSample {
    pub weights: WeightVector,
    pub theoretical_gain_db: f64,
    pub true_gain_db: f64,
    pub residual_db: f64,
}

impl GainSample {
    pub fn new(weights: WeightVector, theoretical_gain_db: f64, true_gain_db: f64) -> Self {
        Self {
            weights,
            theoretical_gain_db,
            true_gain_db,
            residual_db: true_gain_db - theoretical_gain_db,
        }
    }
}

/// Writes `phase_indices,G_db,Gtrue_db`.
pub fn write_dataset_csv<W: Write>(out: &mut W, samples: &[GainSample], header_comments: &[String]) -> Result<()> {
    for line in header_comments {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "phase_indices,G_db,Gtrue_db")?;
    for s in samples {
        writeln!(out, "{},{},{}", s.weights, s.theoretical_gain_db, s.true_gain_db)?;
    }
    Ok(())
}

/// Reads the dataset CSV; the residual is recomputed from the two gains.
pub fn read_dataset_csv<R: BufRead>(input: R, m_levels: usize, source: &str) -> Result<Vec<GainSample>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut samples = Vec::new();
    let mut seen_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !seen_header {
            if trimmed != "phase_indices,G_db,Gtrue_db" {
                return Err(parse_err(lineno, format!("unexpected header '{trimmed}'")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(lineno, format!("expected 3 columns, found {}", fields.len())));
        }
        let w = WeightVector::from_base_m_string(fields[0], m_levels).map_err(|e| parse_err(lineno, e.to_string()))?;
        let num = |s: &str, name: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("{name} '{s}' is not a number")))
        };
        samples.push(GainSample::new(w, num(fields[1], "G_db")?, num(fields[2], "Gtrue_db")?));
    }
    if !seen_header {
        return Err(parse_err(1, "missing header".into()));
    }
    Ok(samples)
}

/// Anything that can stand in for the network inside the annealing loop.
pub trait ResidualPredictor {
    /// Predicted `ΔG̃` in dB for `w`, whose theoretical gain is given.
    fn predict_residual(&self, w: &WeightVector, theoretical_gain_db: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub width: usize,
    pub blocks: usize,
    /// Append the standardized theoretical gain to the phase encoding.
    pub include_gain_feature: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            width: 256,
            blocks: 3,
            include_gain_feature: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Per-epoch multiplicative learning-rate decay.
    pub decay: f64,
    pub seed: u64,
    /// Fraction of samples used for training; the rest validate.
    pub split_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 128,
            learning_rate: 1e-3,
            decay: 0.99,
            seed: 1,
            split_fraction: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidTraining("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.decay > 0.0) {
            return Err(Error::InvalidTraining(
                "learning_rate and decay must be positive".into(),
            ));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidTraining("split_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Location of one affine layer inside the flat parameter vector. Weights
/// are row-major `outputs × inputs`, followed by the bias.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Affine {
    inputs: usize,
    outputs: usize,
    weight: usize,
    bias: usize,
}

impl Affine {
    fn len(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    /// `y = x Wᵀ + b` for `rows` row-major inputs.
    fn forward(&self, params: &[f64], x: &[f64], rows: usize, y: &mut [f64]) {
        let (i, o) = (self.inputs, self.outputs);
        let w = &params[self.weight..self.weight + i * o];
        assert!(x.len() >= rows * i && y.len() >= rows * o);
        for row in y[..rows * o].chunks_exact_mut(o) {
            row.copy_from_slice(&params[self.bias..self.bias + o]);
        }
        // SAFETY: the asserts and slice bounds above cover every element touched.
        unsafe {
            matrixmultiply::dgemm(
                rows,
                i,
                o,
                1.0,
                x.as_ptr(),
                i as isize,
                1,
                w.as_ptr(),
                1,
                i as isize,
                1.0,
                y.as_mut_ptr(),
                o as isize,
                1,
            );
        }
    }

    /// Accumulates parameter gradients for the upstream gradient `g`
    /// (`rows × outputs`) at input `x` and, when asked, writes `g W` into `back`.
    fn backward(&self, params: &[f64], grads: &mut [f64], x: &[f64], g: &[f64], rows: usize, back: Option<&mut [f64]>) {
        let (i, o) = (self.inputs, self.outputs);
        assert!(x.len() >= rows * i && g.len() >= rows * o);
        let dw = &mut grads[self.weight..self.weight + i * o];
        // SAFETY: as in `forward`; `dw` is exactly `outputs × inputs`.
        unsafe {
            matrixmultiply::dgemm(
                o,
                rows,
                i,
                1.0,
                g.as_ptr(),
                1,
                o as isize,
                x.as_ptr(),
                i as isize,
                1,
                1.0,
                dw.as_mut_ptr(),
                i as isize,
                1,
            );
        }
        let db = &mut grads[self.bias..self.bias + o];
        for row in g[..rows * o].chunks_exact(o) {
            for (d, &v) in db.iter_mut().zip(row) {
                *d += v;
            }
        }
        if let Some(back) = back {
            assert!(back.len() >= rows * i);
            let w = &params[self.weight..self.weight + i * o];
            // SAFETY: `back` holds `rows × inputs` values.
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    o,
                    i,
                    1.0,
                    g.as_ptr(),
                    o as isize,
                    1,
                    w.as_ptr(),
                    i as isize,
                    1,
                    0.0,
                    back.as_mut_ptr(),
                    i as isize,
                    1,
                );
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualNetwork {
    n_elements: usize,
    m_levels: usize,
    config: NetConfig,
    /// Standardization of the optional gain feature.
    gain_offset: f64,
    gain_scale: f64,
    /// Network output times this is the residual in dB.
    target_scale: f64,
    stem: Affine,
    blocks: Vec<(Affine, Affine)>,
    head: Affine,
    params: Vec<f64>,
}

/// Activations of up to `capacity` samples, kept for the backward pass.
#[derive(Debug, Clone)]
struct Batch {
    rows: usize,
    input: Vec<f64>,
    /// Residual stream before each block, plus the final stream.
    stream: Vec<Vec<f64>>,
    /// Pre-activation of each block's hidden layer.
    hidden_pre: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    scratch: Vec<f64>,
    output: Vec<f64>,
}

/// Samples per forward pass when evaluating a whole dataset.
const CHUNK: usize = 256;

impl ResidualNetwork {
    /// Fresh network with uniform `±1/√fan_in` hidden weights, zero head and
    /// biases, unit target scale and no gain standardization.
    pub fn new(n_elements: usize, m_levels: usize, config: NetConfig, seed: u64) -> Result<Self> {
        if n_elements == 0 || config.width == 0 {
            return Err(Error::InvalidTraining("network needs positive input and width".into()));
        }
        let input_dim = 2 * n_elements + usize::from(config.include_gain_feature);
        let mut offset = 0;
        let mut layer = |inputs: usize, outputs: usize| {
            let a = Affine {
                inputs,
                outputs,
                weight: offset,
                bias: offset + inputs * outputs,
            };
            offset += a.len();
            a
        };
        let stem = layer(input_dim, config.width);
        let blocks: Vec<_> = (0..config.blocks)
            .map(|_| (layer(config.width, config.width), layer(config.width, config.width)))
            .collect();
        let head = layer(config.width, 1);

        let mut net = Self {
            n_elements,
            m_levels,
            config,
            gain_offset: 0.0,
            gain_scale: 1.0,
            target_scale: 1.0,
            stem,
            blocks,
            head,
            params: vec![0.0; offset],
        };
        let mut rng = chain_rng(seed, 0);
        // The head starts at zero so an untrained network predicts exactly zero.
        let hidden_layers = net.layers().len() - 1;
        for a in net.layers().into_iter().take(hidden_layers) {
            let bound = 1.0 / (a.inputs as f64).sqrt();
            for p in &mut net.params[a.weight..a.weight + a.inputs * a.outputs] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    fn layers(&self) -> Vec<Affine> {
        let mut v = vec![self.stem];
        for (a, b) in &self.blocks {
            v.push(*a);
            v.push(*b);
        }
        v.push(self.head);
        v
    }

    pub fn input_dim(&self) -> usize {
        self.stem.inputs
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn m_levels(&self) -> usize {
        self.m_levels
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn target_scale(&self) -> f64 {
        self.target_scale
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Index of the head bias in the flat parameter vector.
    pub fn head_bias_index(&self) -> usize {
        self.head.bias
    }

    /// Zeroes the head so that every prediction is exactly zero.
    pub fn zero_head(&mut self) {
        let h = self.head;
        self.params[h.weight..h.weight + h.len()]
            .iter_mut()
            .for_each(|p| *p = 0.0);
    }

    fn check_weights(&self, w: &WeightVector) -> Result<()> {
        if w.len() != self.n_elements {
            return Err(Error::DimensionMismatch {
                expected: self.n_elements,
                got: w.len(),
            });
        }
        if w.m_levels() != self.m_levels {
            return Err(Error::InvalidWeights(format!(
                "network expects M = {}, weights use M = {}",
                self.m_levels,
                w.m_levels()
            )));
        }
        Ok(())
    }

    fn encode_into(&self, w: &WeightVector, theoretical_gain_db: f64, out: &mut [f64]) {
        encode_weights_into(w, &mut out[..2 * self.n_elements]);
        if self.config.include_gain_feature {
            out[2 * self.n_elements] = (theoretical_gain_db - self.gain_offset) / self.gain_scale;
        }
    }

    fn batch(&self, capacity: usize) -> Batch {
        let width = self.config.width;
        let blocks = self.blocks.len();
        Batch {
            rows: 0,
            input: vec![0.0; capacity * self.input_dim()],
            stream: vec![vec![0.0; capacity * width]; blocks + 1],
            hidden_pre: vec![vec![0.0; capacity * width]; blocks],
            hidden: vec![vec![0.0; capacity * width]; blocks],
            scratch: vec![0.0; capacity * width],
            output: vec![0.0; capacity],
        }
    }

    fn load_batch<'a>(&self, batch: &mut Batch, samples: impl Iterator<Item = &'a GainSample>) -> Result<()> {
        let dim = self.input_dim();
        batch.rows = 0;
        for s in samples {
            self.check_weights(&s.weights)?;
            let row = batch.rows;
            self.encode_into(
                &s.weights,
                s.theoretical_gain_db,
                &mut batch.input[row * dim..(row + 1) * dim],
            );
            batch.rows += 1;
        }
        Ok(())
    }

    /// Raw scalar outputs for the encoded rows in `batch.input`.
    fn forward(&self, batch: &mut Batch) {
        let p = &self.params;
        let rows = batch.rows;
        let n = rows * self.config.width;
        self.stem.forward(p, &batch.input, rows, &mut batch.stream[0]);
        for (i, (first, second)) in self.blocks.iter().enumerate() {
            first.forward(p, &batch.stream[i], rows, &mut batch.hidden_pre[i]);
            for (h, &u) in batch.hidden[i][..n].iter_mut().zip(&batch.hidden_pre[i][..n]) {
                *h = u.max(0.0);
            }
            second.forward(p, &batch.hidden[i], rows, &mut batch.scratch);
            let (before, after) = batch.stream.split_at_mut(i + 1);
            for ((o, &s), &v) in after[0][..n].iter_mut().zip(&before[i][..n]).zip(&batch.scratch[..n]) {
                *o = s + v;
            }
        }
        self.head
            .forward(p, &batch.stream[self.blocks.len()], rows, &mut batch.output);
    }

    /// Accumulates `Σ_r g_out[r] · d(raw output_r)/dθ` into `grads`.
    fn backward(&self, batch: &Batch, g_out: &[f64], grads: &mut [f64]) {
        let p = &self.params;
        let rows = batch.rows;
        let n = rows * self.config.width;
        let mut g_stream = vec![0.0; n];
        let mut g_hidden = vec![0.0; n];
        let mut g_back = vec![0.0; n];
        let last = self.blocks.len();
        self.head
            .backward(p, grads, &batch.stream[last], g_out, rows, Some(&mut g_stream));
        for (i, (first, second)) in self.blocks.iter().enumerate().rev() {
            // stream[i+1] = stream[i] + W2 relu(W1 stream[i] + b1) + b2
            second.backward(p, grads, &batch.hidden[i], &g_stream, rows, Some(&mut g_hidden));
            for (g, &u) in g_hidden.iter_mut().zip(&batch.hidden_pre[i][..n]) {
                if u <= 0.0 {
                    *g = 0.0;
                }
            }
            first.backward(p, grads, &batch.stream[i], &g_hidden, rows, Some(&mut g_back));
            for (g, b) in g_stream.iter_mut().zip(&g_back) {
                *g += b;
            }
        }
        self.stem.backward(p, grads, &batch.input, &g_stream, rows, None);
    }

    /// Predicted residual in dB.
    pub fn predict(&self, w: &WeightVector, theoretical_gain_db: f64) -> Result<f64> {
        self.check_weights(w)?;
        let mut batch = self.batch(1);
        self.encode_into(w, theoretical_gain_db, &mut batch.input);
        batch.rows = 1;
        self.forward(&mut batch);
        Ok(self.target_scale * batch.output[0])
    }

    /// Mean squared error in dB² over the batch.
    pub fn loss(&self, batch: &[GainSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut work = self.batch(CHUNK.min(batch.len()));
        let mut total = 0.0;
        for chunk in batch.chunks(CHUNK) {
            self.load_batch(&mut work, chunk.iter())?;
            self.forward(&mut work);
            for (s, &raw) in chunk.iter().zip(&work.output) {
                total += (self.target_scale * raw - s.residual_db).powi(2);
            }
        }
        Ok(total / batch.len() as f64)
    }

    /// Exact gradient of [`loss`](Self::loss) with respect to every parameter,
    /// laid out like [`parameters`](Self::parameters).
    pub fn gradient(&self, batch: &[GainSample]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut work = self.batch(CHUNK.min(batch.len()));
        for chunk in batch.chunks(CHUNK) {
            self.accumulate_gradient(&mut work, chunk.iter(), batch.len(), &mut grads)?;
        }
        Ok(grads)
    }

    /// Adds the gradient of `Σ err² / total` over `samples` into `grads`;
    /// returns the sum of squared errors.
    fn accumulate_gradient<'a>(
        &self,
        work: &mut Batch,
        samples: impl Iterator<Item = &'a GainSample> + Clone,
        total: usize,
        grads: &mut [f64],
    ) -> Result<f64> {
        self.load_batch(work, samples.clone())?;
        self.forward(work);
        let mut sse = 0.0;
        let mut g_out = vec![0.0; work.rows];
        for ((g, s), &raw) in g_out.iter_mut().zip(samples).zip(&work.output) {
            let err = self.target_scale * raw - s.residual_db;
            sse += err * err;
            *g = 2.0 * err * self.target_scale / total as f64;
        }
        self.backward(work, &g_out, grads);
        Ok(sse)
    }
}

impl ResidualPredictor for ResidualNetwork {
    fn predict_residual(&self, w: &WeightVector, theoretical_gain_db: f64) -> Result<f64> {
        self.predict(w, theoretical_gain_db)
    }
}

/// `[cos θ₁, sin θ₁, …, cos θ_N, sin θ_N]` with `θ_n = 2πk_n/M`.
pub fn encode_weights(w: &WeightVector) -> Vec<f64> {
    let mut out = vec![0.0; 2 * w.len()];
    encode_weights_into(w, &mut out);
    out
}

fn encode_weights_into(w: &WeightVector, out: &mut [f64]) {
    let table = w.phasor_table();
    for (pair, &k) in out.chunks_exact_mut(2).zip(w.phase_indices()) {
        let z = table[k as usize];
        pair[0] = z.re;
        pair[1] = z.im;
    }
}

pub fn predict(net: &ResidualNetwork, w: &WeightVector, theoretical_gain_db: f64) -> Result<f64> {
    net.predict(w, theoretical_gain_db)
}

pub fn loss(net: &ResidualNetwork, batch: &[GainSample]) -> Result<f64> {
    net.loss(batch)
}

pub fn gradient(net: &ResidualNetwork, batch: &[GainSample]) -> Result<Vec<f64>> {
    net.gradient(batch)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub train_samples: usize,
    pub validation_samples: usize,
    /// Dataset positions held out for validation, in split order.
    pub validation_indices: Vec<usize>,
    pub final_validation_mse: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mini-batch Adam on the MSE loss. Samples are split once, then the
/// training part is reshuffled every epoch; all randomness comes from
/// `config.seed`.
pub fn train(
    mut net: ResidualNetwork,
    dataset: &[GainSample],
    config: &TrainConfig,
) -> Result<(ResidualNetwork, TrainReport)> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Error::InvalidTraining("need at least two samples".into()));
    }
    for s in dataset {
        net.check_weights(&s.weights)?;
        if !(s.residual_db.is_finite() && s.theoretical_gain_db.is_finite()) {
            return Err(Error::InvalidTraining("dataset contains non-finite gains".into()));
        }
    }

    let mut rng = chain_rng(config.seed, 1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let n_train = ((dataset.len() as f64 * config.split_fraction).round() as usize).clamp(1, dataset.len() - 1);
    let (train_idx, val_idx) = order.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    let val: Vec<GainSample> = val_idx.iter().map(|&i| dataset[i].clone()).collect();

    let (t_mean, t_std) = mean_std(train_idx.iter().map(|&i| dataset[i].residual_db));
    net.target_scale = if t_std > 1e-9 { t_std } else { 1.0 };
    net.params[net.head.bias] = t_mean / net.target_scale;
    if net.config.include_gain_feature {
        let (g_mean, g_std) = mean_std(train_idx.iter().map(|&i| dataset[i].theoretical_gain_db));
        net.gain_offset = g_mean;
        net.gain_scale = if g_std > 1e-9 { g_std } else { 1.0 };
    }

    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; net.params.len()];
    let mut v = vec![0.0; net.params.len()];
    let mut grads = vec![0.0; net.params.len()];
    let mut work = net.batch(config.batch_size.min(train_idx.len()));
    let mut step = 0i32;
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = config.learning_rate * config.decay.powi(epoch as i32);
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            epoch_loss +=
                net.accumulate_gradient(&mut work, batch.iter().map(|&i| &dataset[i]), batch.len(), &mut grads)?;
            step += 1;
            let c1 = 1.0 - beta1.powi(step);
            let c2 = 1.0 - beta2.powi(step);
            for (((p, g), m), v) in net.params.iter_mut().zip(&grads).zip(&mut m).zip(&mut v) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let validation_loss = net.loss(&val)?;
        if !(train_loss.is_finite() && validation_loss.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: if train_loss.is_finite() {
                    validation_loss
                } else {
                    train_loss
                },
            });
        }
        log::debug!("epoch {epoch}: train {train_loss:.5} validation {validation_loss:.5}");
        history.push(EpochStats {
            epoch,
            learning_rate: lr,
            train_loss,
            validation_loss,
        });
    }

    let final_validation_mse = history.last().map(|h| h.validation_loss).unwrap_or(f64::NAN);
    Ok((
        net,
        TrainReport {
            history,
            train_samples: train_idx.len(),
            validation_samples: val.len(),
            validation_indices: val_idx.to_vec(),
            final_validation_mse,
        },
    ))
}

const MODEL_FORMAT: &str = "ris-nulling-residual-net";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    n_elements: usize,
    m_levels: usize,
    input_dim: usize,
    width: usize,
    blocks: usize,
    include_gain_feature: bool,
    gain_offset: f64,
    gain_scale: f64,
    target_scale: f64,
    parameters: Vec<f64>,
}

impl ResidualNetwork {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            n_elements: self.n_elements,
            m_levels: self.m_levels,
            input_dim: self.input_dim(),
            width: self.config.width,
            blocks: self.config.blocks,
            include_gain_feature: self.config.include_gain_feature,
            gain_offset: self.gain_offset,
            gain_scale: self.gain_scale,
            target_scale: self.target_scale,
            parameters: self.params.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unknown format '{}'", f.format)));
        }
        if f.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported version {}", f.version)));
        }
        let config = NetConfig {
            width: f.width,
            blocks: f.blocks,
            include_gain_feature: f.include_gain_feature,
        };
        let mut net = Self::new(f.n_elements, f.m_levels, config, 0)?;
        if net.input_dim() != f.input_dim || net.params.len() != f.parameters.len() {
            return Err(Error::Model(format!(
                "topology mismatch: expected {} parameters, file has {}",
                net.params.len(),
                f.parameters.len()
            )));
        }
        net.gain_offset = f.gain_offset;
        net.gain_scale = f.gain_scale;
        net.target_scale = f.target_scale;
        net.params = f.parameters;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

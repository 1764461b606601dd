//! One-hidden-layer perceptron (ReLU hidden units, linear output) trained by
//! full-batch gradient descent on the mean squared error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::DesignMatrix;

pub const HIDDEN_UNITS: usize = 4;
const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Epochs per daily retrain once a model exists (warm start).
    pub retrain_epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: HIDDEN_UNITS,
            epochs: 2000,
            learning_rate: 0.01,
            retrain_epochs: 100,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 || self.retrain_epochs == 0 {
            return Err(Error::InvalidConfig(
                "MLP hidden, epochs and retrain_epochs must be >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "MLP learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    /// Hidden weights, `hidden × inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    /// Uniform weights in `±1/√fan_in`; biases start at zero.
    pub fn init(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = 1.0 / (inputs.max(1) as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        MlpModel {
            input_mean: vec![0.0; inputs],
            input_scale: vec![1.0; inputs],
            w1: (0..hidden * inputs)
                .map(|_| rng.gen_range(-a1..=a1))
                .collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.gen_range(-a2..=a2)).collect(),
            b2: 0.0,
        }
    }

    pub fn inputs(&self) -> usize {
        self.input_mean.len()
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    /// Parameters flattened as `w1, b1, w2, b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend(&self.w1);
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                p.len()
            )));
        }
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = d[0];
        Ok(())
    }

    fn standardize(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = (row[j] - self.input_mean[j]) / self.input_scale[j];
        }
    }

    fn forward_standardized(&self, z: &[f64], hidden: &mut [f64]) -> f64 {
        let n = z.len();
        let mut out = self.b2;
        for (i, h) in hidden.iter_mut().enumerate() {
            let w = &self.w1[i * n..(i + 1) * n];
            let a = self.b1[i] + w.iter().zip(z).map(|(w, z)| w * z).sum::<f64>();
            *h = a.max(0.0);
            out += self.w2[i] * *h;
        }
        out
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.inputs() {
            return Err(Error::Shape(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.inputs()
            )));
        }
        let mut z = vec![0.0; row.len()];
        self.standardize(row, &mut z);
        let mut h = vec![0.0; self.hidden()];
        Ok(self.forward_standardized(&z, &mut h))
    }

    /// MSE and its gradient (flattened like [`params`](Self::params)) over
    /// standardized rows `z` (row-major, `inputs` wide).
    pub fn loss_and_grad(&self, z: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
        let n_in = self.inputs();
        let nh = self.hidden();
        let m = y.len() as f64;
        let mut g = vec![0.0; self.n_params()];
        let (gw1, rest) = g.split_at_mut(nh * n_in);
        let (gb1, rest) = rest.split_at_mut(nh);
        let (gw2, gb2) = rest.split_at_mut(nh);
        let mut h = vec![0.0; nh];
        let mut loss = 0.0;
        for (row, &target) in z.chunks_exact(n_in).zip(y) {
            let err = self.forward_standardized(row, &mut h) - target;
            loss += err * err;
            let d_out = 2.0 * err / m;
            gb2[0] += d_out;
            for i in 0..nh {
                gw2[i] += d_out * h[i];
                if h[i] > 0.0 {
                    let d_hidden = d_out * self.w2[i];
                    gb1[i] += d_hidden;
                    for (gw, x) in gw1[i * n_in..(i + 1) * n_in].iter_mut().zip(row) {
                        *gw += d_hidden * x;
                    }
                }
            }
        }
        (loss / m, g)
    }

    /// Re-bases the input standardization without changing the function the
    /// network computes.
    fn restandardize(&mut self, mean: Vec<f64>, scale: Vec<f64>) {
        let n = self.inputs();
        for i in 0..self.hidden() {
            let w = &mut self.w1[i * n..(i + 1) * n];
            for j in 0..n {
                self.b1[i] += w[j] * (mean[j] - self.input_mean[j]) / self.input_scale[j];
                w[j] *= scale[j] / self.input_scale[j];
            }
        }
        self.input_mean = mean;
        self.input_scale = scale;
    }
}

fn column_stats(design: &DesignMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = design.n_cols();
    let m = design.n_rows() as f64;
    let mut mean = vec![0.0; n];
    for r in design.rows() {
        for j in 0..n {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let mut var = vec![0.0; n];
    for r in design.rows() {
        for j in 0..n {
            var[j] += (r[j] - mean[j]).powi(2);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let s = (v / m).sqrt();
            if s < MIN_SCALE {
                1.0
            } else {
                s
            }
        })
        .collect();
    (mean, scale)
}

fn check_data(design: &DesignMatrix, target: &[f64]) -> Result<()> {
    if design.n_rows() == 0 {
        return Err(Error::Empty("MLP design has no rows".into()));
    }
    if design.n_rows() != target.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} targets",
            design.n_rows(),
            target.len()
        )));
    }
    if design
        .rows()
        .flatten()
        .chain(target)
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidData("non-finite MLP training input".into()));
    }
    Ok(())
}

fn descend(
    model: &mut MlpModel,
    design: &DesignMatrix,
    target: &[f64],
    epochs: usize,
    lr: f64,
) -> Vec<f64> {
    let n = design.n_cols();
    let mut z = vec![0.0; design.n_rows() * n];
    for (row, out) in design.rows().zip(z.chunks_exact_mut(n)) {
        model.standardize(row, out);
    }
    let mut trace = Vec::with_capacity(epochs + 1);
    let mut params = model.params();
    for _ in 0..epochs {
        let (loss, grad) = model.loss_and_grad(&z, target);
        trace.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= lr * g;
        }
        model.set_params(&params).expect("shape preserved");
    }
    trace.push(model.loss_and_grad(&z, target).0);
    trace
}

/// Trains from a seeded initialization; returns the model and the loss
/// before each epoch followed by the final loss.
pub fn mlp_train_traced(
    design: &DesignMatrix,
    target: &[f64],
    seed: u64,
    epochs: usize,
    learning_rate: f64,
) -> Result<(MlpModel, Vec<f64>)> {
    if epochs == 0 {
        return Err(Error::InvalidConfig(
            "MLP training needs at least one epoch".into(),
        ));
    }
    check_data(design, target)?;
    let mut model = MlpModel::init(design.n_cols(), HIDDEN_UNITS, seed);
    let (mean, scale) = column_stats(design);
    model.input_mean = mean;
    model.input_scale = scale;
    let trace = descend(&mut model, design, target, epochs, learning_rate);
    Ok((model, trace))
}

pub fn mlp_train(
    design: &DesignMatrix,
    target: &[f64],
    seed: u64,
    epochs: usize,
    learning_rate: f64,
) -> Result<MlpModel> {
    Ok(mlp_train_traced(design, target, seed, epochs, learning_rate)?.0)
}

/// Continues training an existing model on (possibly grown) data. The input
/// standardization is refreshed first, preserving the network's function.
pub fn mlp_continue(
    model: &MlpModel,
    design: &DesignMatrix,
    target: &[f64],
    epochs: usize,
    learning_rate: f64,
) -> Result<MlpModel> {
    if epochs == 0 {
        return Err(Error::InvalidConfig(
            "MLP training needs at least one epoch".into(),
        ));
    }
    check_data(design, target)?;
    if design.n_cols() != model.inputs() {
        return Err(Error::Shape(format!(
            "design has {} columns, model expects {}",
            design.n_cols(),
            model.inputs()
        )));
    }
    let mut next = model.clone();
    let (mean, scale) = column_stats(design);
    next.restandardize(mean, scale);
    descend(&mut next, design, target, epochs, learning_rate);
    Ok(next)
}

pub fn mlp_predict(model: &MlpModel, row: &[f64]) -> Result<f64> {
    model.predict(row)
}

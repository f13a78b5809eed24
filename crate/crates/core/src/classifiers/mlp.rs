use serde::{Deserialize, Serialize};

use super::linear::init_weights;
use super::{
    exact, logistic_loss, logistic_loss_derivative, require_trainable, BatchSchedule, Classifier,
    LocalLinearModel, PiecewiseLinear, TrainConfig, STREAM_INIT,
};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Dataset;
use crate::linalg::{self, dot};

/// Fully connected layer, weights stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    #[serde(with = "exact::vec")]
    pub weights: Vec<f64>,
    #[serde(with = "exact::vec")]
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.inputs..(j + 1) * self.inputs]
    }

    fn forward(&self, a: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|j| dot(self.row(j), a) + self.bias[j])
            .collect()
    }
}

/// ReLU network with a scalar linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer parameter gradients, same shapes as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl MlpGradient {
    fn zeros_like(model: &MlpModel) -> MlpGradient {
        MlpGradient {
            weights: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            bias: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.bias.len()])
                .collect(),
        }
    }

    fn reset(&mut self) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            v.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Flattened in the same order as [`MlpModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// A hidden unit (or the output) as an affine function on the anchor's region.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineUnit {
    pub layer: usize,
    pub unit: usize,
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Pre-activation at the anchor.
    pub value: f64,
}

struct ForwardTrace {
    /// Layer inputs: `inputs[0]` is x, `inputs[l]` the post-ReLU output of layer l−1.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of every layer.
    pre: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Builds an initialized network `input_dim → hidden… → 1`.
    pub fn initialized(input_dim: usize, hidden: &[usize], cfg: &TrainConfig) -> Result<MlpModel> {
        if input_dim == 0 {
            return Err(Error::InvalidDimension("input dimension 0".into()));
        }
        if hidden.contains(&0) {
            return Err(Error::invalid(
                "hidden_sizes",
                "layer sizes must be positive",
            ));
        }
        let mut rng = cfg.seed.child(STREAM_INIT).rng();
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer {
                inputs: w[0],
                outputs: w[1],
                weights: init_weights(w[0] * w[1], w[0], cfg.init, &mut rng),
                bias: vec![0.0; w[1]],
            })
            .collect();
        Ok(MlpModel { layers })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let Some(last) = self.layers.last() else {
            return Err(Error::invalid("layers", "network has no layers"));
        };
        if last.outputs != 1 {
            return Err(Error::invalid("layers", "output layer must have one unit"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            check_dim(l.inputs * l.outputs, l.weights.len())?;
            check_dim(l.outputs, l.bias.len())?;
            if i > 0 {
                check_dim(self.layers[i - 1].outputs, l.inputs)?;
            }
            if !linalg::all_finite(&l.weights) || !linalg::all_finite(&l.bias) {
                return Err(Error::invalid("layers", "non-finite parameter"));
            }
        }
        Ok(())
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.outputs)
            .collect()
    }

    fn trace(&self, x: &[f64]) -> ForwardTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            let next = if l < last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                Vec::new()
            };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        ForwardTrace { inputs, pre }
    }

    /// Backpropagates `d_out = dℓ/df` through a trace, accumulating parameter
    /// gradients and returning `dℓ/dx`.
    fn backward(
        &self,
        trace: &ForwardTrace,
        d_out: f64,
        grad: Option<&mut MlpGradient>,
    ) -> Vec<f64> {
        let mut delta = vec![d_out];
        let mut grad = grad;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if let Some(g) = grad.as_deref_mut() {
                for (j, d) in delta.iter().enumerate() {
                    let row = &mut g.weights[l][j * layer.inputs..(j + 1) * layer.inputs];
                    linalg::axpy(*d, &trace.inputs[l], row);
                    g.bias[l][j] += d;
                }
            }
            let mut prev = vec![0.0; layer.inputs];
            for (j, d) in delta.iter().enumerate() {
                if *d != 0.0 {
                    linalg::axpy(*d, layer.row(j), &mut prev);
                }
            }
            if l > 0 {
                // ReLU'(0) = 0
                for (p, z) in prev.iter_mut().zip(&trace.pre[l - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    /// Mean logistic loss over a batch and its parameter gradient.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, MlpGradient) {
        let mut grad = MlpGradient::zeros_like(self);
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let trace = self.trace(x);
            let f = trace.pre.last().unwrap()[0];
            loss += logistic_loss(f, y);
            self.backward(&trace, logistic_loss_derivative(f, y), Some(&mut grad));
        }
        let m = xs.len() as f64;
        for v in grad.weights.iter_mut().chain(grad.bias.iter_mut()) {
            v.iter_mut().for_each(|g| *g /= m);
        }
        (loss / m, grad)
    }

    pub fn mean_loss(&self, xs: &[&[f64]], ys: &[f64]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| logistic_loss(self.decision_unchecked(x), y))
            .sum();
        total / xs.len() as f64
    }

    /// All parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim(self.params().len(), params.len())?;
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    fn apply_step(&mut self, grad: &MlpGradient, lr: f64, m: f64) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (w, g) in layer.weights.iter_mut().zip(&grad.weights[l]) {
                *w -= lr * (g / m);
            }
            for (b, g) in layer.bias.iter_mut().zip(&grad.bias[l]) {
                *b -= lr * (g / m);
            }
        }
    }

    /// Every hidden unit's pre-activation and the output as affine functions
    /// of the input, valid on the anchor's activation region. Returns the
    /// hidden units, the output unit and the number of zero pre-activations.
    pub fn local_affine_units(&self, x: &[f64]) -> Result<(Vec<AffineUnit>, AffineUnit, usize)> {
        check_dim(self.input_dim(), x.len())?;
        let trace = self.trace(x);
        let last = self.layers.len() - 1;
        let mut hidden = Vec::new();
        let mut boundary = 0;
        // active units of the previous layer as (index, normal, offset); None = identity
        let mut active: Option<Vec<(usize, Vec<f64>, f64)>> = None;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut units = Vec::with_capacity(layer.outputs);
            for j in 0..layer.outputs {
                let row = layer.row(j);
                let (normal, offset) = match &active {
                    None => (row.to_vec(), layer.bias[j]),
                    Some(prev) => {
                        let mut normal = vec![0.0; x.len()];
                        let mut offset = layer.bias[j];
                        for (k, a, c) in prev {
                            let wjk = row[*k];
                            linalg::axpy(wjk, a, &mut normal);
                            offset += wjk * c;
                        }
                        (normal, offset)
                    }
                };
                units.push(AffineUnit {
                    layer: l,
                    unit: j,
                    normal,
                    offset,
                    value: trace.pre[l][j],
                });
            }
            if l == last {
                let output = units.pop().expect("output layer has one unit");
                return Ok((hidden, output, boundary));
            }
            let mut next = Vec::new();
            for u in &units {
                if u.value > 0.0 {
                    next.push((u.unit, u.normal.clone(), u.offset));
                } else if u.value == 0.0 {
                    boundary += 1;
                }
            }
            hidden.extend(units);
            active = Some(next);
        }
        unreachable!("network always has an output layer")
    }

    /// The binary activation pattern of all hidden units at `x`.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<bool>> {
        check_dim(self.input_dim(), x.len())?;
        let trace = self.trace(x);
        let last = self.layers.len() - 1;
        Ok(trace.pre[..last]
            .iter()
            .flatten()
            .map(|&z| z > 0.0)
            .collect())
    }
}

impl Classifier for MlpModel {
    fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            a = if l < last {
                z.into_iter().map(|v| v.max(0.0)).collect()
            } else {
                z
            };
        }
        a[0]
    }

    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let trace = self.trace(x);
        self.backward(&trace, 1.0, None)
    }
}

impl PiecewiseLinear for MlpModel {
    /// Zero pre-activations count as inactive and are reported in
    /// `boundary_units`.
    fn local_linear_model(&self, x: &[f64]) -> Result<LocalLinearModel> {
        let (_, output, boundary_units) = self.local_affine_units(x)?;
        Ok(LocalLinearModel {
            w_eff: output.normal,
            b_eff: output.offset,
            anchor: x.to_vec(),
            boundary_units,
        })
    }
}

/// Mini-batch SGD on the mean logistic loss of the scalar output.
///
/// With `hidden_sizes` empty the network is a single affine layer and the
/// arithmetic matches [`super::train_logistic_regression`] step for step.
pub fn train_mlp(data: &Dataset, hidden_sizes: &[usize], cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    require_trainable(data)?;
    let mut model = MlpModel::initialized(data.ambient_dim(), hidden_sizes, cfg)?;
    let points = data.points();
    let ys: Vec<f64> = data.labels().iter().map(|l| l.value()).collect();
    let mut schedule = BatchSchedule::new(data.len(), cfg);
    let mut grad = MlpGradient::zeros_like(&model);
    for _ in 0..cfg.epochs {
        for batch in schedule.next_epoch() {
            grad.reset();
            for &i in batch {
                let trace = model.trace(&points[i]);
                let f = trace.pre.last().unwrap()[0];
                model.backward(&trace, logistic_loss_derivative(f, ys[i]), Some(&mut grad));
            }
            model.apply_step(&grad, cfg.learning_rate, batch.len() as f64);
        }
    }
    if model.validate().is_err() {
        return Err(Error::Numeric("MLP training diverged".into()));
    }
    Ok(model)
}

//! Trainable binary classifiers.
//!
//! All models expose a real-valued decision function; the predicted label is
//! its sign with `sign(0) = +1`. Linear models and ReLU MLPs are piecewise
//! linear and can report the exact affine map they realize around a point.

mod exact;
mod linear;
mod mlp;
mod tree;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use linear::{train_logistic_regression, LinearModel};
pub use mlp::{train_mlp, AffineUnit, DenseLayer, MlpGradient, MlpModel};
pub use tree::{train_decision_tree, TreeModel, TreeNode};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Dataset, Label};
use crate::rng::SeedSpec;

pub trait Classifier: Send + Sync {
    fn input_dim(&self) -> usize;

    /// Decision value without a dimension check.
    fn decision_unchecked(&self, x: &[f64]) -> f64;

    /// Gradient of the decision value with respect to the input. Piecewise
    /// constant models return zeros.
    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64>;

    fn decision_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.decision_unchecked(x))
    }

    fn predict(&self, x: &[f64]) -> Result<Label> {
        self.decision_value(x).map(Label::from_decision)
    }

    fn predict_unchecked(&self, x: &[f64]) -> Label {
        Label::from_decision(self.decision_unchecked(x))
    }

    fn accuracy(&self, data: &Dataset) -> Result<f64> {
        check_dim(self.input_dim(), data.ambient_dim())?;
        let correct = data
            .iter()
            .filter(|(x, y)| self.predict_unchecked(x) == *y)
            .count();
        Ok(correct as f64 / data.len() as f64)
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        (**self).decision_unchecked(x)
    }
    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient_unchecked(x)
    }
}

/// Exact affine map `x ↦ w_eff·x + b_eff` on the anchor's linear region.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLinearModel {
    pub w_eff: Vec<f64>,
    pub b_eff: f64,
    pub anchor: Vec<f64>,
    /// Hidden units whose pre-activation is exactly zero at the anchor. They
    /// are treated as inactive.
    pub boundary_units: usize,
}

impl LocalLinearModel {
    pub fn on_boundary(&self) -> bool {
        self.boundary_units > 0
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.w_eff, x) + self.b_eff
    }

    pub fn as_linear_model(&self) -> LinearModel {
        LinearModel::new(self.w_eff.clone(), self.b_eff)
    }
}

/// Models that are affine on each cell of a polyhedral partition.
pub trait PiecewiseLinear: Classifier {
    fn local_linear_model(&self, x: &[f64]) -> Result<LocalLinearModel>;
}

/// Parameter initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    Zeros,
    /// i.i.d. `N(0, scale²)` weights.
    Gaussian {
        scale: f64,
    },
    /// i.i.d. `N(0, 2 / fan_in)` weights.
    Kaiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Mini-batch size; `None` means full-batch gradient descent.
    pub batch_size: Option<usize>,
    pub init: Init,
    pub seed: SeedSpec,
}

impl TrainConfig {
    pub const DEFAULT_LINEAR_INIT_SCALE: f64 = 0.1;

    /// Full-batch gradient descent from a `N(0, 0.1²)` initialization.
    pub fn logistic(seed: SeedSpec) -> TrainConfig {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 300,
            batch_size: None,
            init: Init::Gaussian {
                scale: Self::DEFAULT_LINEAR_INIT_SCALE,
            },
            seed,
        }
    }

    /// Mini-batch SGD (batch 32) from a Kaiming initialization.
    pub fn mlp(seed: SeedSpec) -> TrainConfig {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 100,
            batch_size: Some(32),
            init: Init::Kaiming,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(
                "learning_rate",
                "must be positive and finite",
            ));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if let Init::Gaussian { scale } = self.init {
            if !(scale >= 0.0) || !scale.is_finite() {
                return Err(Error::invalid("init_scale", "must be non-negative"));
            }
        }
        Ok(())
    }
}

pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_SHUFFLE: u64 = 1;

/// Mini-batch order shared by all gradient trainers: fixed order for full
/// batches, otherwise a fresh Fisher–Yates shuffle per epoch.
pub(crate) struct BatchSchedule {
    order: Vec<usize>,
    batch: usize,
    shuffle: Option<crate::rng::Rng>,
}

impl BatchSchedule {
    pub(crate) fn new(n: usize, cfg: &TrainConfig) -> BatchSchedule {
        let batch = cfg.batch_size.unwrap_or(n).min(n).max(1);
        let shuffle = (batch < n).then(|| cfg.seed.child(STREAM_SHUFFLE).rng());
        BatchSchedule {
            order: (0..n).collect(),
            batch,
            shuffle,
        }
    }

    pub(crate) fn next_epoch(&mut self) -> std::slice::Chunks<'_, usize> {
        if let Some(rng) = self.shuffle.as_mut() {
            use rand::seq::SliceRandom;
            self.order.shuffle(rng);
        }
        self.order.chunks(self.batch)
    }
}

/// `dℓ/df` for the logistic loss `ℓ = log(1 + exp(−y f))`.
pub(crate) fn logistic_loss_derivative(f: f64, y: f64) -> f64 {
    -y * sigmoid(-y * f)
}

pub(crate) fn logistic_loss(f: f64, y: f64) -> f64 {
    // log(1 + exp(-m)) without overflow
    let m = y * f;
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn require_trainable(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !data.has_both_classes() {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

/// Any trained model, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearModel),
    Mlp(MlpModel),
    Tree(TreeModel),
}

impl Model {
    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Model> {
        let m: Model = serde_json::from_reader(r)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_json_str(s: &str) -> Result<Model> {
        let m: Model = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Model::Linear(m) => m.validate(),
            Model::Mlp(m) => m.validate(),
            Model::Tree(m) => m.validate(),
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::Linear(m) => m,
            Model::Mlp(m) => m,
            Model::Tree(m) => m,
        }
    }
}

impl Classifier for Model {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.inner().decision_unchecked(x)
    }
    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.inner().gradient_unchecked(x)
    }
}

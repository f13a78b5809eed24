use serde::{Deserialize, Serialize};

use super::{
    exact, logistic_loss_derivative, require_trainable, BatchSchedule, Classifier, Init,
    LocalLinearModel, PiecewiseLinear, TrainConfig, STREAM_INIT,
};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Dataset;
use crate::linalg::{self, dot};
use crate::rng;

/// Hyperplane classifier `sign(w·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub dim: usize,
    #[serde(with = "exact::vec")]
    pub w: Vec<f64>,
    #[serde(with = "exact")]
    pub b: f64,
}

impl LinearModel {
    pub fn new(w: Vec<f64>, b: f64) -> LinearModel {
        LinearModel { dim: w.len(), w, b }
    }

    pub fn weight_norm(&self) -> f64 {
        linalg::norm(&self.w)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_dim(self.dim, self.w.len())?;
        if !linalg::all_finite(&self.w) || !self.b.is_finite() {
            return Err(Error::invalid("w", "non-finite parameter"));
        }
        Ok(())
    }
}

impl Classifier for LinearModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    fn gradient_unchecked(&self, _x: &[f64]) -> Vec<f64> {
        self.w.clone()
    }
}

impl PiecewiseLinear for LinearModel {
    fn local_linear_model(&self, x: &[f64]) -> Result<LocalLinearModel> {
        check_dim(self.dim, x.len())?;
        Ok(LocalLinearModel {
            w_eff: self.w.clone(),
            b_eff: self.b,
            anchor: x.to_vec(),
            boundary_units: 0,
        })
    }
}

pub(crate) fn init_weights(n: usize, fan_in: usize, init: Init, rng: &mut rng::Rng) -> Vec<f64> {
    match init {
        Init::Zeros => vec![0.0; n],
        Init::Gaussian { scale } => (0..n).map(|_| scale * rng::gaussian(rng)).collect(),
        Init::Kaiming => {
            let scale = (2.0 / fan_in.max(1) as f64).sqrt();
            (0..n).map(|_| scale * rng::gaussian(rng)).collect()
        }
    }
}

/// Gradient descent on the mean logistic loss, no regularization.
///
/// Each step moves `w` by a combination of training points, so with data in a
/// subspace the orthogonal part of `w` never leaves its initial value.
pub fn train_logistic_regression(data: &Dataset, cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    require_trainable(data)?;
    let n = data.ambient_dim();
    let mut init_rng = cfg.seed.child(STREAM_INIT).rng();
    let mut w = init_weights(n, n, cfg.init, &mut init_rng);
    let mut b = 0.0;

    let points = data.points();
    let ys: Vec<f64> = data.labels().iter().map(|l| l.value()).collect();
    let mut schedule = BatchSchedule::new(data.len(), cfg);
    let mut grad_w = vec![0.0; n];
    for _ in 0..cfg.epochs {
        for batch in schedule.next_epoch() {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for &i in batch {
                let f = dot(&w, &points[i]) + b;
                let delta = logistic_loss_derivative(f, ys[i]);
                linalg::axpy(delta, &points[i], &mut grad_w);
                grad_b += delta;
            }
            let m = batch.len() as f64;
            for (wj, gj) in w.iter_mut().zip(&grad_w) {
                *wj -= cfg.learning_rate * (gj / m);
            }
            b -= cfg.learning_rate * (grad_b / m);
        }
    }
    if !linalg::all_finite(&w) || !b.is_finite() {
        return Err(Error::Numeric("logistic regression diverged".into()));
    }
    Ok(LinearModel::new(w, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{decompose, GaussianParams, Label, ManifoldSpec};
    use crate::rng::SeedSpec;

    #[test]
    fn decision_value_is_dot_product() {
        let m = LinearModel::new(vec![0.0, 2.0], -2.0);
        assert_eq!(m.decision_value(&[5.0, 3.0]).unwrap(), 4.0);
        assert!(m.decision_value(&[1.0]).is_err());
    }

    #[test]
    fn symmetric_pair_from_zero_init() {
        let data = Dataset::new(
            vec![vec![-1.0], vec![1.0]],
            vec![Label::Negative, Label::Positive],
        )
        .unwrap();
        let cfg = TrainConfig {
            init: Init::Zeros,
            ..TrainConfig::logistic(SeedSpec::default())
        };
        let m = train_logistic_regression(&data, &cfg).unwrap();
        assert!(m.w[0] > 0.0);
        assert!(m.b.abs() < 1e-12);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![Label::Positive; 2]).unwrap();
        assert!(matches!(
            train_logistic_regression(&data, &TrainConfig::logistic(SeedSpec::default())),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn off_manifold_weights_stay_at_init() {
        let seed = SeedSpec::new(5, 0);
        let spec = ManifoldSpec::subspace_gaussians(
            40,
            3,
            GaussianParams::well_separated(3),
            seed.child(0),
        )
        .unwrap();
        let data = spec.generate(30, seed.child(1)).unwrap();
        let cfg = TrainConfig::logistic(seed.child(2));
        let model = train_logistic_regression(&data, &cfg).unwrap();
        let mut rng = cfg.seed.child(STREAM_INIT).rng();
        let w0 = init_weights(40, 40, cfg.init, &mut rng);
        let (_, perp0) = decompose(&w0, &spec.basis).unwrap();
        let (_, perp) = decompose(&model.w, &spec.basis).unwrap();
        let drift = linalg::norm(&linalg::sub(&perp, &perp0));
        assert!(drift < 1e-9, "{drift}");
    }

    #[test]
    fn separated_line_data_is_fit_exactly() {
        let seed = SeedSpec::new(11, 0);
        let spec = ManifoldSpec::subspace_gaussians(
            2,
            1,
            GaussianParams::well_separated(1),
            seed.child(0),
        )
        .unwrap();
        let data = spec.generate(100, seed.child(1)).unwrap();
        let m = train_logistic_regression(&data, &TrainConfig::logistic(seed.child(2))).unwrap();
        assert_eq!(m.accuracy(&data).unwrap(), 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let seed = SeedSpec::new(3, 0);
        let spec = ManifoldSpec::subspace_gaussians(8, 2, GaussianParams::well_separated(2), seed)
            .unwrap();
        let data = spec.generate(10, seed).unwrap();
        let cfg = TrainConfig {
            batch_size: Some(4),
            ..TrainConfig::logistic(seed)
        };
        let a = train_logistic_regression(&data, &cfg).unwrap();
        let b = train_logistic_regression(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

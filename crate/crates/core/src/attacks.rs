//! Adversarial perturbations, Gaussian noise-ball misclassification rates and
//! attack transfer between models.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::classifiers::{Classifier, LinearModel};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Label;
use crate::linalg::{self, dot, norm};
use crate::rng::{self, SeedSpec};
use crate::stats;

pub const DEFAULT_OVERSHOOT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub original: Vec<f64>,
    pub perturbation: Vec<f64>,
    /// The perturbed point is predicted differently from the original.
    pub success: bool,
    /// Euclidean norm of the perturbation.
    pub norm: f64,
    pub linf_norm: f64,
    /// Model evaluations spent.
    pub queries: usize,
}

impl AttackResult {
    fn new<C: Classifier + ?Sized>(
        model: &C,
        x: &[f64],
        perturbation: Vec<f64>,
        queries: usize,
    ) -> AttackResult {
        let adv = linalg::add(x, &perturbation);
        let success = model.predict_unchecked(&adv) != model.predict_unchecked(x);
        AttackResult {
            original: x.to_vec(),
            norm: norm(&perturbation),
            linf_norm: linalg::norm_inf(&perturbation),
            perturbation,
            success,
            queries: queries + 2,
        }
    }

    pub fn adversarial(&self) -> Vec<f64> {
        linalg::add(&self.original, &self.perturbation)
    }

    /// Same direction, perturbation multiplied by `factor`.
    pub fn scaled<C: Classifier + ?Sized>(&self, model: &C, factor: f64) -> AttackResult {
        AttackResult::new(
            model,
            &self.original,
            linalg::scale(&self.perturbation, factor),
            self.queries,
        )
    }
}

/// Orthogonal projection onto the hyperplane, pushed `overshoot` past it:
/// `δ = −(1 + overshoot)(w·x + b)/‖w‖² · w`.
pub fn minimal_linear_attack(
    model: &LinearModel,
    x: &[f64],
    overshoot: f64,
) -> Result<AttackResult> {
    check_dim(model.dim, x.len())?;
    if !(overshoot > 0.0) {
        return Err(Error::invalid("overshoot", "must be positive"));
    }
    let ww = dot(&model.w, &model.w);
    if ww == 0.0 {
        return Err(Error::ZeroWeight);
    }
    let f = model.decision_unchecked(x);
    let delta = linalg::scale(&model.w, -(1.0 + overshoot) * f / ww);
    Ok(AttackResult::new(model, x, delta, 0))
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One step of size `eps` along the sign of the logistic-loss input gradient.
///
/// `∇ₓ log(1 + exp(−y f)) = −y σ(−y f) ∇f`, and σ > 0, so the sign pattern is
/// that of `−y ∇f`; computing it that way avoids underflow of σ on confidently
/// classified points.
pub fn gradient_sign_attack<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: Label,
    eps: f64,
) -> Result<AttackResult> {
    check_dim(model.input_dim(), x.len())?;
    if !(eps >= 0.0) {
        return Err(Error::invalid("epsilon", "must be non-negative"));
    }
    let grad = model.gradient_unchecked(x);
    if grad.iter().all(|&g| g == 0.0) {
        return Err(Error::NoGradientDirection);
    }
    let delta: Vec<f64> = grad.iter().map(|&g| eps * sign(-y.value() * g)).collect();
    Ok(AttackResult::new(model, x, delta, 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySearch {
    pub initial_step: f64,
    /// Largest distance probed before giving up.
    pub t_max: f64,
    /// Bisection stops once the bracket is below this fraction of its upper end.
    pub rel_tol: f64,
}

impl BoundarySearch {
    /// `t_max = 10³ × scale`.
    pub fn for_scale(scale: f64) -> BoundarySearch {
        BoundarySearch {
            initial_step: 1e-3 * scale,
            t_max: 1e3 * scale,
            rel_tol: 1e-8,
        }
    }
}

impl Default for BoundarySearch {
    fn default() -> Self {
        Self::for_scale(1.0)
    }
}

/// Smallest `t > 0` (to bisection tolerance) at which the prediction along the
/// unit ray `x + t·d/‖d‖` differs from the prediction at `x`. Returns
/// `f64::INFINITY` when no flip is seen up to `t_max`.
///
/// Steps double from `initial_step`, so a region thinner than the current step
/// can be jumped over.
pub fn boundary_distance<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    direction: &[f64],
    search: &BoundarySearch,
) -> Result<f64> {
    check_dim(model.input_dim(), x.len())?;
    check_dim(x.len(), direction.len())?;
    let Some(u) = linalg::normalized(direction) else {
        return Err(Error::invalid("direction", "must be non-zero"));
    };
    Ok(ray_flip_distance(model, x, &u, search))
}

pub(crate) fn ray_flip_distance<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    u: &[f64],
    search: &BoundarySearch,
) -> f64 {
    let base = model.predict_unchecked(x);
    let mut probe = vec![0.0; x.len()];
    let mut flips = |t: f64| {
        for ((p, xi), ui) in probe.iter_mut().zip(x).zip(u) {
            *p = xi + t * ui;
        }
        model.predict_unchecked(&probe) != base
    };
    let mut lo = 0.0;
    let mut hi = search.initial_step;
    loop {
        if hi > search.t_max {
            return f64::INFINITY;
        }
        if flips(hi) {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > search.rel_tol * hi {
        let mid = lo + (hi - lo) / 2.0;
        if flips(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBallEstimate {
    pub probability: f64,
    pub misclassified: u64,
    pub trials: u64,
    pub wilson_ci_95: (f64, f64),
    pub sigma: f64,
}

/// Trials per independently seeded work unit.
pub const NOISE_BATCH: u64 = 4096;

/// Monte Carlo estimate of `P(predict(x + σg) ≠ y)` for `g ~ N(0, I)`.
///
/// Trials are split into fixed batches of [`NOISE_BATCH`]; batch `i` draws from
/// `seed.child(i)`, so the estimate does not depend on the thread count.
pub fn noise_ball_misclassification<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: Label,
    sigma: f64,
    trials: u64,
    seed: SeedSpec,
) -> Result<NoiseBallEstimate> {
    check_dim(model.input_dim(), x.len())?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let batches = trials.div_ceil(NOISE_BATCH);
    let misclassified: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = NOISE_BATCH.min(trials - b * NOISE_BATCH);
            let mut rng = seed.child(b).rng();
            let mut g = vec![0.0; x.len()];
            let mut errors = 0u64;
            for _ in 0..count {
                rng::fill_gaussian(&mut rng, &mut g);
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = xi + sigma * *gi;
                }
                if model.predict_unchecked(&g) != y {
                    errors += 1;
                }
            }
            errors
        })
        .sum();
    Ok(NoiseBallEstimate {
        probability: misclassified as f64 / trials as f64,
        misclassified,
        trials,
        wilson_ci_95: stats::wilson_interval(misclassified, trials, stats::Z95),
        sigma,
    })
}

/// Whether `target` changes its prediction under the attack's perturbation.
pub fn transfer_attack<C: Classifier + ?Sized>(result: &AttackResult, target: &C) -> Result<bool> {
    check_dim(target.input_dim(), result.original.len())?;
    let before = target.predict_unchecked(&result.original);
    Ok(target.predict_unchecked(&result.adversarial()) != before)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRecord {
    pub point_index: usize,
    pub attack_kind: String,
    pub norm: f64,
    pub success: bool,
    pub transfer_target: Option<String>,
    pub transferred: Option<bool>,
}

/// Streams `(point_index, attack_kind, norm, success, transfer_target, transferred)`.
pub fn write_attack_csv<W: Write>(records: &[AttackRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "point_index",
        "attack_kind",
        "norm",
        "success",
        "transfer_target",
        "transferred",
    ])?;
    for r in records {
        out.write_record([
            r.point_index.to_string(),
            r.attack_kind.clone(),
            r.norm.to_string(),
            r.success.to_string(),
            r.transfer_target.clone().unwrap_or_default(),
            r.transferred.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::margin_linear;

    struct Constant;

    impl Classifier for Constant {
        fn input_dim(&self) -> usize {
            3
        }
        fn decision_unchecked(&self, _x: &[f64]) -> f64 {
            1.0
        }
        fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
            vec![0.0; x.len()]
        }
    }

    #[test]
    fn minimal_attack_closed_form() {
        let m = LinearModel::new(vec![3.0, 4.0], 0.0);
        let r = minimal_linear_attack(&m, &[3.0, 4.0], 1e-12).unwrap();
        assert!((r.perturbation[0] + 3.0).abs() < 1e-10);
        assert!((r.perturbation[1] + 4.0).abs() < 1e-10);
        assert!((r.norm - 5.0).abs() < 1e-10);
    }

    #[test]
    fn minimal_attack_on_boundary_is_zero() {
        let m = LinearModel::new(vec![3.0, 4.0], 0.0);
        let r = minimal_linear_attack(&m, &[4.0, -3.0], DEFAULT_OVERSHOOT).unwrap();
        assert!(r.norm < 1e-15);
        assert!(!r.success);
    }

    #[test]
    fn minimal_attack_norm_tracks_margin() {
        let m = LinearModel::new(vec![1.0, -2.0, 0.5], 0.3);
        let x = [0.7, 0.1, -2.0];
        let r = minimal_linear_attack(&m, &x, DEFAULT_OVERSHOOT).unwrap();
        let margin = margin_linear(&m, &x).unwrap();
        assert!((r.norm - (1.0 + DEFAULT_OVERSHOOT) * margin).abs() < 1e-12);
        assert!(r.success);
    }

    #[test]
    fn gradient_sign_example() {
        let m = LinearModel::new(vec![3.0, -4.0], 0.0);
        let r = gradient_sign_attack(&m, &[2.0, 0.5], Label::Positive, 0.5).unwrap();
        assert_eq!(r.adversarial(), vec![1.5, 1.0]);
        assert_eq!(r.linf_norm, 0.5);
    }

    #[test]
    fn gradient_sign_zero_eps_is_identity() {
        let m = LinearModel::new(vec![3.0, -4.0], 0.0);
        let r = gradient_sign_attack(&m, &[2.0, 0.5], Label::Positive, 0.0).unwrap();
        assert_eq!(r.adversarial(), vec![2.0, 0.5]);
        assert!(!r.success);
    }

    #[test]
    fn gradient_sign_needs_a_gradient() {
        assert!(matches!(
            gradient_sign_attack(&Constant, &[0.0; 3], Label::Positive, 0.1),
            Err(Error::NoGradientDirection)
        ));
    }

    #[test]
    fn gradient_sign_flips_past_closed_form_threshold() {
        // Moving by eps·sign(w) changes f by eps·‖w‖₁, so eps > |f|/‖w‖₁ flips.
        let m = LinearModel::new(vec![0.5, -1.5, 2.0, 0.25], -0.2);
        let x = [1.0, -0.5, 0.4, 2.0];
        let f = m.decision_unchecked(&x);
        let l1: f64 = m.w.iter().map(|v| v.abs()).sum();
        let y = Label::from_decision(f);
        let threshold = f.abs() / l1;
        assert!(
            gradient_sign_attack(&m, &x, y, threshold * 1.001)
                .unwrap()
                .success
        );
        assert!(
            !gradient_sign_attack(&m, &x, y, threshold * 0.999)
                .unwrap()
                .success
        );
    }

    #[test]
    fn boundary_along_normal_is_margin() {
        let m = LinearModel::new(vec![1.0, 2.0], -1.0);
        let x = [2.0, 1.0];
        let f = m.decision_unchecked(&x);
        let dir = linalg::scale(&m.w, -f.signum());
        let t = boundary_distance(&m, &x, &dir, &BoundarySearch::default()).unwrap();
        assert!((t - margin_linear(&m, &x).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn boundary_parallel_direction_is_infinite() {
        let m = LinearModel::new(vec![1.0, 0.0], -1.0);
        let t =
            boundary_distance(&m, &[3.0, 0.0], &[0.0, 1.0], &BoundarySearch::default()).unwrap();
        assert!(t.is_infinite());
        assert!(
            boundary_distance(&m, &[3.0, 0.0], &[0.0, 0.0], &BoundarySearch::default()).is_err()
        );
    }

    #[test]
    fn constant_classifier_never_misclassifies() {
        let e = noise_ball_misclassification(
            &Constant,
            &[0.0; 3],
            Label::Positive,
            1.0,
            1000,
            SeedSpec::new(1, 1),
        )
        .unwrap();
        assert_eq!(e.probability, 0.0);
        assert!(e.wilson_ci_95.0 <= e.probability && e.probability <= e.wilson_ci_95.1);
    }

    #[test]
    fn noise_ball_matches_gaussian_tail() {
        let m = LinearModel::new(vec![0.6, 0.8], -0.5);
        let x = [1.0, 0.5];
        let margin = margin_linear(&m, &x).unwrap();
        let sigma = 0.7;
        let e = noise_ball_misclassification(
            &m,
            &x,
            Label::Positive,
            sigma,
            20_000,
            SeedSpec::new(4, 0),
        )
        .unwrap();
        let exact = stats::normal_cdf(-margin / sigma);
        assert!(
            e.wilson_ci_95.0 <= exact && exact <= e.wilson_ci_95.1,
            "{e:?} vs {exact}"
        );
    }

    #[test]
    fn transfer_basics() {
        let m = LinearModel::new(vec![1.0, 1.0], 0.0);
        let r = minimal_linear_attack(&m, &[1.0, 2.0], DEFAULT_OVERSHOOT).unwrap();
        assert_eq!(transfer_attack(&r, &m).unwrap(), r.success);
        let none = r.scaled(&m, 0.0);
        assert!(!transfer_attack(&none, &m).unwrap());
        let wrong = LinearModel::new(vec![1.0], 0.0);
        assert!(transfer_attack(&r, &wrong).is_err());
    }

    #[test]
    fn attack_csv_layout() {
        let rec = AttackRecord {
            point_index: 3,
            attack_kind: "minimal".into(),
            norm: 0.25,
            success: true,
            transfer_target: Some("b.json".into()),
            transferred: Some(false),
        };
        let mut buf = Vec::new();
        write_attack_csv(&[rec], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "point_index,attack_kind,norm,success,transfer_target,transferred\n3,minimal,0.25,true,b.json,false\n"
        );
    }
}

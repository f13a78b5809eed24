//! Closed-form reference values and stylized classifiers with known geometry.

use crate::classifiers::Classifier;
use crate::error::{Error, Result};
use crate::linalg;
use crate::stats;

/// `P(max_{i≤k} |σ gᵢ| ≥ d) = 1 − erf(d / (σ√2))^k` for standard normal `g`.
///
/// Evaluated as `−expm1(k · ln(1 − erfc))` so values near 0 and 1 keep their
/// relative precision.
pub fn fragile_box_analytic(k: u32, d: f64, sigma: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid("d", "must be positive"));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be positive"));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let tail = stats::erfc(d / (sigma * std::f64::consts::SQRT_2));
    Ok(-(f64::from(k) * (-tail).ln_1p()).exp_m1())
}

/// Correct (positive) exactly on the box `{x : |xᵢ| ≤ d}`; each of the `k`
/// coordinates is a fragile direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragileBoxClassifier {
    pub k: usize,
    pub half_width: f64,
}

impl Classifier for FragileBoxClassifier {
    fn input_dim(&self) -> usize {
        self.k
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.half_width - linalg::norm_inf(x)
    }

    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        if let Some((i, v)) = x
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        {
            g[i] = -v.signum();
        }
        g
    }
}

/// `sign(‖x‖ − threshold)`: the ideal separator of two concentric spheres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormThresholdClassifier {
    pub dim: usize,
    pub threshold: f64,
}

impl NormThresholdClassifier {
    pub fn between(dim: usize, inner: f64, outer: f64) -> NormThresholdClassifier {
        NormThresholdClassifier {
            dim,
            threshold: (inner + outer) / 2.0,
        }
    }
}

impl Classifier for NormThresholdClassifier {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        linalg::norm(x) - self.threshold
    }

    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        linalg::normalized(x).unwrap_or_else(|| vec![0.0; x.len()])
    }
}

/// `log₁₀` of the `(L/ε)^n` sample count needed to pin an `L`-Lipschitz
/// function to accuracy `ε` on a grid in `n` dimensions.
pub fn lipschitz_sample_bound(lipschitz: f64, eps: f64, n: u64) -> Result<f64> {
    if !(lipschitz > 0.0) || !(eps > 0.0) {
        return Err(Error::invalid("lipschitz", "L and ε must be positive"));
    }
    if n < 1 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    Ok(n as f64 * (lipschitz / eps).log10())
}

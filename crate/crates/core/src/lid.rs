//! Intrinsic-dimension estimators from nearest-neighbour distances.
//!
//! Neighbour search is exact brute force.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Dataset;
use crate::linalg::distance_sq;
use crate::stats;

pub const DEFAULT_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mle,
    Twonn,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Twonn => "twonn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LidEstimate {
    pub value: f64,
    pub estimator: Estimator,
    /// Neighbours used (MLE) or points retained (TwoNN).
    pub k: usize,
    pub anchor_index: Option<usize>,
    /// TwoNN points dropped because both neighbours were equidistant.
    pub excluded: usize,
}

/// `−[(1/k) Σ ln(rᵢ/r_k)]⁻¹` over ascending radii; `k = radii.len()`.
pub fn lid_mle_from_radii(radii: &[f64]) -> Result<f64> {
    let k = radii.len();
    if k < 2 {
        return Err(Error::invalid("k", "need at least 2 neighbours"));
    }
    if radii.contains(&0.0) {
        return Err(Error::DuplicatePoint);
    }
    let rk = radii[k - 1];
    let s: f64 = radii.iter().map(|&r| (r / rk).ln()).sum::<f64>() / k as f64;
    if s == 0.0 {
        return Err(Error::UndefinedEstimate(
            "all neighbour radii are equal".into(),
        ));
    }
    Ok(-1.0 / s)
}

fn k_nearest(
    anchor: &[f64],
    reference: &Dataset,
    skip: Option<usize>,
    k: usize,
) -> Result<Vec<f64>> {
    check_dim(reference.ambient_dim(), anchor.len())?;
    if k < 2 {
        return Err(Error::invalid("k", "need at least 2 neighbours"));
    }
    let mut d2: Vec<f64> = reference
        .points()
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, p)| distance_sq(anchor, p))
        .collect();
    if d2.len() < k {
        return Err(Error::invalid(
            "k",
            format!("reference has only {} candidate neighbours", d2.len()),
        ));
    }
    d2.select_nth_unstable_by(k - 1, f64::total_cmp);
    d2.truncate(k);
    d2.sort_by(f64::total_cmp);
    Ok(d2.into_iter().map(f64::sqrt).collect())
}

/// Maximum-likelihood LID of `anchor` from its `k` nearest points in `reference`.
pub fn lid_mle(anchor: &[f64], reference: &Dataset, k: usize) -> Result<LidEstimate> {
    let radii = k_nearest(anchor, reference, None, k)?;
    Ok(LidEstimate {
        value: lid_mle_from_radii(&radii)?,
        estimator: Estimator::Mle,
        k,
        anchor_index: None,
        excluded: 0,
    })
}

/// As [`lid_mle`] for the reference's own point `index`, which is left out of
/// its neighbour set.
pub fn lid_mle_member(reference: &Dataset, index: usize, k: usize) -> Result<LidEstimate> {
    let Some(anchor) = reference.points().get(index) else {
        return Err(Error::invalid("index", "outside the reference set"));
    };
    let radii = k_nearest(anchor, reference, Some(index), k)?;
    Ok(LidEstimate {
        value: lid_mle_from_radii(&radii)?,
        estimator: Estimator::Mle,
        k,
        anchor_index: Some(index),
        excluded: 0,
    })
}

/// Global dimension from second-to-first neighbour distance ratios.
pub fn twonn(data: &Dataset) -> Result<LidEstimate> {
    let n = data.len();
    if n < 3 {
        return Err(Error::invalid("data", "TwoNN needs at least 3 points"));
    }
    let points = data.points();
    let ratios: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
            for (j, p) in points.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = distance_sq(&points[i], p);
                if d < r1 {
                    r2 = r1;
                    r1 = d;
                } else if d < r2 {
                    r2 = d;
                }
            }
            if r1 == 0.0 {
                return Err(Error::DuplicatePoint);
            }
            Ok((r2 / r1).sqrt())
        })
        .collect::<Result<_>>()?;
    let logs: Vec<f64> = ratios
        .iter()
        .filter(|&&mu| mu > 1.0)
        .map(|mu| mu.ln())
        .collect();
    if logs.is_empty() {
        return Err(Error::UndefinedEstimate(
            "every point has equidistant first and second neighbours".into(),
        ));
    }
    Ok(LidEstimate {
        value: logs.len() as f64 / logs.iter().sum::<f64>(),
        estimator: Estimator::Twonn,
        k: logs.len(),
        anchor_index: None,
        excluded: n - logs.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LidContrast {
    pub natural: Vec<f64>,
    pub adversarial: Vec<f64>,
    pub mean_natural: f64,
    pub mean_adversarial: f64,
    /// Two-sided rank-sum p-value.
    pub rank_sum_p: f64,
}

/// MLE-LID of both groups against the same reference set.
pub fn lid_contrast(
    natural: &[Vec<f64>],
    adversarial: &[Vec<f64>],
    reference: &Dataset,
    k: usize,
) -> Result<LidContrast> {
    if natural.is_empty() || adversarial.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let score = |group: &[Vec<f64>]| -> Result<Vec<f64>> {
        group
            .par_iter()
            .map(|x| lid_mle(x, reference, k).map(|e| e.value))
            .collect()
    };
    let nat = score(natural)?;
    let adv = score(adversarial)?;
    let test = stats::rank_sum_test(&nat, &adv);
    Ok(LidContrast {
        mean_natural: stats::mean(&nat),
        mean_adversarial: stats::mean(&adv),
        rank_sum_p: test.p_value,
        natural: nat,
        adversarial: adv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LidRecord {
    /// Empty for global estimates.
    pub anchor_index: Option<usize>,
    pub group: String,
    pub estimator: Estimator,
    pub k: usize,
    pub value: f64,
}

/// Columns `anchor_index, group, estimator, k, value`.
pub fn write_lid_csv<W: Write>(records: &[LidRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["anchor_index", "group", "estimator", "k", "value"])?;
    for r in records {
        out.write_record([
            r.anchor_index.map(|i| i.to_string()).unwrap_or_default(),
            r.group.clone(),
            r.estimator.as_str().to_string(),
            r.k.to_string(),
            r.value.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

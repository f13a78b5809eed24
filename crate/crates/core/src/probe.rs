//! Discriminant geometry: distances to the decision boundary, how many
//! independent hyperplanes shape it near a point, and how much of a linear
//! model's weight mass points off the data manifold.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::classifiers::{Classifier, LinearModel, MlpModel, Model, TreeModel};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{decompose, Basis, Dataset};
use crate::linalg::{self, dot, norm};
use crate::stats;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Default fraction of `N` independent hyperplanes that makes a point locally complex.
pub const DEFAULT_RHO: f64 = 0.25;

/// Euclidean distance from `x` to the hyperplane `w·x + b = 0`.
pub fn margin_linear(model: &LinearModel, x: &[f64]) -> Result<f64> {
    check_dim(model.dim, x.len())?;
    let wn = model.weight_norm();
    if wn == 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok(model.decision_unchecked(x).abs() / wn)
}

/// `{x : normal·x + offset = 0}`
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn distance(&self, x: &[f64]) -> f64 {
        (dot(&self.normal, x) + self.offset).abs() / norm(&self.normal)
    }
}

/// Hyperplanes that bound the model's linear pieces around a point.
pub trait LocalHyperplanes {
    fn local_hyperplanes(&self, x: &[f64]) -> Result<Vec<Hyperplane>>;
}

impl LocalHyperplanes for LinearModel {
    fn local_hyperplanes(&self, x: &[f64]) -> Result<Vec<Hyperplane>> {
        check_dim(self.dim, x.len())?;
        if self.weight_norm() == 0.0 {
            return Ok(Vec::new());
        }
        Ok(vec![Hyperplane {
            normal: self.w.clone(),
            offset: self.b,
        }])
    }
}

impl LocalHyperplanes for MlpModel {
    /// Each hidden unit's pre-activation zero set under the frozen pattern of
    /// earlier layers, plus the output's zero set. Units whose local normal
    /// vanishes are constant on the region and are skipped.
    fn local_hyperplanes(&self, x: &[f64]) -> Result<Vec<Hyperplane>> {
        let (hidden, output, _) = self.local_affine_units(x)?;
        Ok(hidden
            .into_iter()
            .chain(std::iter::once(output))
            .filter(|u| norm(&u.normal) > 0.0)
            .map(|u| Hyperplane {
                normal: u.normal,
                offset: u.offset,
            })
            .collect())
    }
}

impl LocalHyperplanes for TreeModel {
    /// Every split `x[f] = t` in the tree.
    fn local_hyperplanes(&self, x: &[f64]) -> Result<Vec<Hyperplane>> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .root
            .splits()
            .into_iter()
            .map(|(f, t)| {
                let mut normal = vec![0.0; self.dim];
                normal[f] = 1.0;
                Hyperplane { normal, offset: -t }
            })
            .collect())
    }
}

impl LocalHyperplanes for Model {
    fn local_hyperplanes(&self, x: &[f64]) -> Result<Vec<Hyperplane>> {
        match self {
            Model::Linear(m) => m.local_hyperplanes(x),
            Model::Mlp(m) => m.local_hyperplanes(x),
            Model::Tree(m) => m.local_hyperplanes(x),
        }
    }
}

/// Numerical rank of a set of normals. Rows are normalized first so the count
/// does not depend on how each hyperplane equation is scaled.
pub fn normal_rank(normals: &[&[f64]]) -> usize {
    let Some(first) = normals.first() else {
        return 0;
    };
    let cols = first.len();
    let rows: Vec<Vec<f64>> = normals
        .iter()
        .filter_map(|n| linalg::normalized(n))
        .collect();
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub anchor: Vec<f64>,
    pub radius: f64,
    pub rho: f64,
    /// Hyperplanes within `radius` of the anchor.
    pub nearby_count: usize,
    /// Rank of their normals.
    pub independent_count: usize,
    pub ratio: f64,
    pub is_locally_complex: bool,
}

/// Median distance from `x` to the model's local hyperplanes.
pub fn auto_radius<M: LocalHyperplanes + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    let planes = model.local_hyperplanes(x)?;
    if planes.is_empty() {
        return Err(Error::UndefinedEstimate("model has no hyperplanes".into()));
    }
    let d: Vec<f64> = planes.iter().map(|h| h.distance(x)).collect();
    Ok(stats::median(&d))
}

/// Counts independent hyperplanes within `radius` of `x`; the point is
/// locally complex when their number reaches `rho · N`.
pub fn local_complexity<M: LocalHyperplanes + ?Sized>(
    model: &M,
    x: &[f64],
    radius: f64,
    rho: f64,
) -> Result<ComplexityReport> {
    if !(radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid("rho", "must lie in (0, 1]"));
    }
    let planes = model.local_hyperplanes(x)?;
    let near: Vec<&[f64]> = planes
        .iter()
        .filter(|h| h.distance(x) <= radius)
        .map(|h| h.normal.as_slice())
        .collect();
    let independent_count = normal_rank(&near);
    let ratio = independent_count as f64 / x.len() as f64;
    Ok(ComplexityReport {
        anchor: x.to_vec(),
        radius,
        rho,
        nearby_count: near.len(),
        independent_count,
        ratio,
        is_locally_complex: ratio >= rho,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightDecomposition {
    pub w_parallel: Vec<f64>,
    pub w_perpendicular: Vec<f64>,
    /// ‖w_parallel‖ / ‖w‖
    pub shrink_factor: f64,
    /// arccos(shrink_factor), radians.
    pub angle: f64,
}

/// Splits a linear model's weights into the part inside the manifold's span
/// and the part normal to it. For `x` in the span the margin equals
/// `shrink_factor` times the margin of the on-manifold hyperplane alone.
pub fn off_manifold_decomposition(
    model: &LinearModel,
    basis: &Basis,
) -> Result<WeightDecomposition> {
    check_dim(model.dim, basis.ambient_dim())?;
    let wn = model.weight_norm();
    if wn == 0.0 {
        return Err(Error::ZeroWeight);
    }
    let (w_parallel, w_perpendicular) = decompose(&model.w, basis)?;
    let shrink_factor = (norm(&w_parallel) / wn).clamp(0.0, 1.0);
    Ok(WeightDecomposition {
        w_parallel,
        w_perpendicular,
        shrink_factor,
        angle: shrink_factor.acos(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragilityStats {
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub epsilon: f64,
    /// Fraction of points with margin strictly below `epsilon`.
    pub frac_below: f64,
    pub shrink_factor: Option<f64>,
}

impl FragilityStats {
    pub fn fraction_below(&self, eps: f64) -> f64 {
        fraction_below(&self.margins, eps)
    }

    /// Streams `(point_index, margin, label)` rows.
    pub fn write_margins_csv<W: Write>(&self, data: &Dataset, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["point_index", "margin", "label"])?;
        for (i, (m, l)) in self.margins.iter().zip(data.labels()).enumerate() {
            out.write_record([i.to_string(), m.to_string(), l.as_i8().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn fraction_below(margins: &[f64], eps: f64) -> f64 {
    margins.iter().filter(|&&m| m < eps).count() as f64 / margins.len() as f64
}

/// Margins of every point, with the shrink factor when the dataset carries
/// its manifold basis.
pub fn fragility_stats(model: &LinearModel, data: &Dataset, eps: f64) -> Result<FragilityStats> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    check_dim(model.dim, data.ambient_dim())?;
    let margins = data
        .points()
        .iter()
        .map(|x| margin_linear(model, x))
        .collect::<Result<Vec<_>>>()?;
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let shrink_factor = match data.basis() {
        Some(b) => Some(off_manifold_decomposition(model, b)?.shrink_factor),
        None => None,
    };
    Ok(FragilityStats {
        frac_below: fraction_below(&margins, eps),
        margins,
        min_margin,
        epsilon: eps,
        shrink_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train_decision_tree, TrainConfig};
    use crate::geometry::{random_orthonormal_basis, Label};
    use crate::rng::{self, SeedSpec};

    #[test]
    fn margin_examples() {
        let m = LinearModel::new(vec![3.0, 4.0], 0.0);
        assert_eq!(margin_linear(&m, &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(margin_linear(&m, &[4.0, -3.0]).unwrap(), 0.0);
        let zero = LinearModel::new(vec![0.0, 0.0], 1.0);
        assert!(matches!(
            margin_linear(&zero, &[1.0, 1.0]),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn margin_matches_constrained_minimizer() {
        // oracle: minimize ‖δ‖ subject to w·(x+δ)+b = 0 by parametrizing the
        // hyperplane and running gradient descent on ‖p − x‖²
        let mut r = SeedSpec::new(21, 0).rng();
        for _ in 0..10 {
            let w = rng::gaussian_vec(&mut r, 4);
            let b = rng::gaussian(&mut r);
            let x = rng::gaussian_vec(&mut r, 4);
            let m = LinearModel::new(w.clone(), b);
            // start from a point on the plane, descend within the plane
            let ww = dot(&w, &w);
            let mut p = linalg::scale(&w, -b / ww);
            for _ in 0..200 {
                let g = linalg::sub(&p, &x);
                // project the gradient onto the plane's tangent space
                let proj = linalg::sub(&g, &linalg::scale(&w, dot(&g, &w) / ww));
                linalg::axpy(-0.5, &proj, &mut p);
            }
            let brute = linalg::distance(&p, &x);
            assert!((brute - margin_linear(&m, &x).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_model_is_never_complex() {
        let m = LinearModel::new(vec![1.0, -1.0, 2.0], 0.5);
        let x = [3.0, 1.0, -1.0];
        let margin = margin_linear(&m, &x).unwrap();
        let r = local_complexity(&m, &x, margin * 1.01, 0.5).unwrap();
        assert_eq!((r.nearby_count, r.independent_count), (1, 1));
        assert!(!r.is_locally_complex);
    }

    #[test]
    fn duplicated_units_count_once() {
        let cfg = TrainConfig::mlp(SeedSpec::new(1, 0));
        let mut m = MlpModel::initialized(3, &[4], &cfg).unwrap();
        let row = [0.5, -1.0, 2.0];
        for j in 0..4 {
            // identical rows with different positive scalings
            let s = (j + 1) as f64;
            m.layers[0].weights[j * 3..j * 3 + 3].copy_from_slice(&row.map(|v| v * s));
            m.layers[0].bias[j] = 0.1 * s;
        }
        m.layers[1].weights = vec![0.0; 4];
        m.layers[1].bias = vec![0.0];
        let r = local_complexity(&m, &[0.1, 0.1, 0.1], 100.0, 0.25).unwrap();
        assert_eq!(r.nearby_count, 4);
        assert_eq!(r.independent_count, 1);
    }

    #[test]
    fn rank_ignores_scaling() {
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1e-12, 0.0];
        let c = [0.0, 0.0, 1e9];
        assert_eq!(normal_rank(&[&a, &b, &c]), 3);
        assert_eq!(normal_rank(&[&a, &[2.0, 0.0, 0.0]]), 1);
        assert_eq!(normal_rank(&[]), 0);
    }

    #[test]
    fn tree_splits_near_anchor() {
        let d = Dataset::new(
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![
                Label::Negative,
                Label::Positive,
                Label::Positive,
                Label::Negative,
            ],
        )
        .unwrap();
        let t = train_decision_tree(&d).unwrap();
        let r = local_complexity(&t, &[0.5, 0.5], 0.1, 0.5).unwrap();
        assert_eq!(r.independent_count, 2);
        assert!(r.is_locally_complex);
        let far = local_complexity(&t, &[5.0, 5.0], 0.1, 0.5).unwrap();
        assert_eq!(far.nearby_count, 0);
    }

    #[test]
    fn complexity_argument_checks() {
        let m = LinearModel::new(vec![1.0], 0.0);
        assert!(local_complexity(&m, &[0.0], 0.0, 0.5).is_err());
        assert!(local_complexity(&m, &[0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let basis = Basis::canonical(3, 1).unwrap();
        let d = off_manifold_decomposition(&LinearModel::new(vec![1.0, 0.0, 1.0], 0.0), &basis)
            .unwrap();
        assert!((d.shrink_factor - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let inside =
            off_manifold_decomposition(&LinearModel::new(vec![2.0, 0.0, 0.0], 1.0), &basis)
                .unwrap();
        assert_eq!(inside.shrink_factor, 1.0);
        assert_eq!(inside.angle, 0.0);
    }

    #[test]
    fn on_manifold_margin_identity() {
        let basis = random_orthonormal_basis(30, 3, SeedSpec::new(2, 2)).unwrap();
        let mut r = SeedSpec::new(2, 3).rng();
        let m = LinearModel::new(rng::gaussian_vec(&mut r, 30), 0.3);
        let dec = off_manifold_decomposition(&m, &basis).unwrap();
        let par = LinearModel::new(dec.w_parallel.clone(), m.b);
        for _ in 0..20 {
            let x = basis.embed(&rng::gaussian_vec(&mut r, 3)).unwrap();
            let lhs = margin_linear(&m, &x).unwrap();
            let rhs = dec.shrink_factor * margin_linear(&par, &x).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn frac_below_edges() {
        let m = LinearModel::new(vec![1.0], 0.0);
        let d = Dataset::new(
            vec![vec![2.0], vec![-2.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let s = fragility_stats(&m, &d, 1.0).unwrap();
        assert_eq!(s.frac_below, 0.0);
        assert_eq!(s.fraction_below(f64::INFINITY), 1.0);
        assert_eq!(s.min_margin, 2.0);
        assert!(s.shrink_factor.is_none());
    }

    #[test]
    fn margins_csv_layout() {
        let m = LinearModel::new(vec![1.0], 0.0);
        let d = Dataset::new(
            vec![vec![2.0], vec![-0.5]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let s = fragility_stats(&m, &d, 1.0).unwrap();
        let mut buf = Vec::new();
        s.write_margins_csv(&d, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "point_index,margin,label\n0,2,1\n1,0.5,-1\n"
        );
    }
}

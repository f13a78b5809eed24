//! Embeddings, projections and synthetic manifold-concentrated datasets.
//!
//! Three families of labelled data are generated, each living on a
//! low-dimensional set inside `R^N`:
//!
//! - `subspace_gaussians`: two Gaussian classes in an `M`-dimensional linear
//!   subspace, spanned by a random orthonormal [`Basis`].
//! - `concentric_spheres`: class −1 uniform on the sphere of radius `R1`,
//!   class +1 on radius `R2`.
//! - `folded_curve`: a hairpin (two anti-parallel segments joined by a half
//!   circle of diameter `gap`) inside a random 2-plane, split into classes by
//!   arc length, so that each point has the other class at distance ≈ `gap`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, norm};
use crate::rng::{self, SeedSpec};

/// Binary class label, serialized as −1 / +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// `sign(v)` with `sign(0) = +1`.
    pub fn from_decision(v: f64) -> Label {
        if v >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Label> {
        match v {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(Error::invalid("labels", format!("label {other} is not ±1"))),
        }
    }
}

/// `M` orthonormal columns in `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: Vec<Vec<f64>>,
    ambient_dim: usize,
}

impl Basis {
    /// Wraps columns after checking orthonormality to 1e-10.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Basis> {
        let ambient_dim = columns.first().map_or(0, Vec::len);
        if ambient_dim == 0 || columns.len() > ambient_dim {
            return Err(Error::InvalidDimension(format!(
                "{} columns in ambient dimension {ambient_dim}",
                columns.len()
            )));
        }
        for c in &columns {
            check_dim(ambient_dim, c.len())?;
        }
        let basis = Basis {
            columns,
            ambient_dim,
        };
        if basis.orthonormality_error() > 1e-10 {
            return Err(Error::invalid("basis", "columns are not orthonormal"));
        }
        Ok(basis)
    }

    /// The first `m` canonical unit vectors of `R^n`.
    pub fn canonical(n: usize, m: usize) -> Result<Basis> {
        if m == 0 || m > n {
            return Err(Error::InvalidDimension(format!("M={m}, N={n}")));
        }
        let columns = (0..m)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect();
        Ok(Basis {
            columns,
            ambient_dim: n,
        })
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.columns.len()
    }

    /// `B c` for a coefficient vector of length `M`.
    pub fn embed(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.intrinsic_dim(), coeffs.len())?;
        let mut out = vec![0.0; self.ambient_dim];
        for (c, col) in coeffs.iter().zip(&self.columns) {
            linalg::axpy(*c, col, &mut out);
        }
        Ok(out)
    }

    /// `Bᵀ v`.
    pub fn coefficients(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.ambient_dim, v.len())?;
        Ok(self.columns.iter().map(|c| dot(c, v)).collect())
    }

    /// max |BᵀB − I| over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.columns.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i..m {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.columns[i], &self.columns[j]) - target).abs());
            }
        }
        worst
    }
}

/// Random `M`-frame in `R^N`: Gaussian columns orthonormalized by modified
/// Gram–Schmidt with one full re-orthogonalization pass.
pub fn random_orthonormal_basis(n: usize, m: usize, seed: SeedSpec) -> Result<Basis> {
    if m == 0 || m > n {
        return Err(Error::InvalidDimension(format!(
            "intrinsic dimension {m} must be in 1..={n}"
        )));
    }
    let mut rng = seed.rng();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(m);
    while columns.len() < m {
        let mut v = rng::gaussian_vec(&mut rng, n);
        let start = norm(&v);
        for _ in 0..2 {
            for q in &columns {
                let p = dot(q, &v);
                linalg::axpy(-p, q, &mut v);
            }
        }
        let len = norm(&v);
        // A draw (numerically) inside the current span is discarded.
        if len <= 1e-8 * start {
            continue;
        }
        columns.push(linalg::scale(&v, 1.0 / len));
    }
    Ok(Basis {
        columns,
        ambient_dim: n,
    })
}

/// Splits `v` into `B Bᵀ v` and its orthogonal remainder.
pub fn decompose(v: &[f64], basis: &Basis) -> Result<(Vec<f64>, Vec<f64>)> {
    let coeffs = basis.coefficients(v)?;
    let parallel = basis.embed(&coeffs)?;
    let perpendicular = linalg::sub(v, &parallel);
    Ok((parallel, perpendicular))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    SubspaceGaussians,
    ConcentricSpheres,
    FoldedCurve,
    /// Data without a generating manifold (hand-built or uniform samples).
    Custom,
}

impl ManifoldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ManifoldKind::SubspaceGaussians => "subspace_gaussians",
            ManifoldKind::ConcentricSpheres => "concentric_spheres",
            ManifoldKind::FoldedCurve => "folded_curve",
            ManifoldKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace_gaussians" => Ok(ManifoldKind::SubspaceGaussians),
            "concentric_spheres" => Ok(ManifoldKind::ConcentricSpheres),
            "folded_curve" => Ok(ManifoldKind::FoldedCurve),
            "custom" => Ok(ManifoldKind::Custom),
            other => Err(Error::invalid(
                "kind",
                format!("unknown manifold kind `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    /// Class means as `M`-dimensional coefficient vectors.
    pub negative_mean: Vec<f64>,
    pub positive_mean: Vec<f64>,
    /// Isotropic standard deviation within the subspace.
    pub scale: f64,
    /// Per-coordinate standard deviation of optional off-manifold noise.
    pub ambient_noise: f64,
}

impl GaussianParams {
    /// Default separation between class means, in units of `scale`.
    pub const DEFAULT_SEPARATION: f64 = 6.0;

    /// Means at ±separation/2 along the first intrinsic axis.
    pub fn separated(m: usize, separation: f64, scale: f64) -> GaussianParams {
        let mut pos = vec![0.0; m];
        let mut neg = vec![0.0; m];
        if m > 0 {
            pos[0] = separation / 2.0;
            neg[0] = -separation / 2.0;
        }
        GaussianParams {
            negative_mean: neg,
            positive_mean: pos,
            scale,
            ambient_noise: 0.0,
        }
    }

    pub fn well_separated(m: usize) -> GaussianParams {
        Self::separated(m, Self::DEFAULT_SEPARATION, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereParams {
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Default for SphereParams {
    fn default() -> Self {
        SphereParams {
            inner_radius: 1.0,
            outer_radius: 1.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldParams {
    /// Distance between the two anti-parallel segments.
    pub gap: f64,
    pub segment_length: f64,
    /// RMS norm of the isotropic ambient noise vector added to each point.
    pub noise: f64,
}

impl FoldParams {
    pub fn with_gap(gap: f64) -> FoldParams {
        FoldParams {
            gap,
            segment_length: 4.0,
            noise: gap / 20.0,
        }
    }
}

impl Default for FoldParams {
    fn default() -> Self {
        Self::with_gap(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldParams {
    SubspaceGaussians(GaussianParams),
    ConcentricSpheres(SphereParams),
    FoldedCurve(FoldParams),
}

/// Class-conditional generating distribution together with its embedding.
///
/// For `folded_curve` the basis spans the 2-plane holding the curve, so it has
/// one more column than the curve's intrinsic dimension. Spheres fill the
/// whole ambient space and use the canonical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub basis: Basis,
    pub params: ManifoldParams,
}

impl ManifoldSpec {
    pub fn subspace_gaussians(
        n: usize,
        m: usize,
        params: GaussianParams,
        basis_seed: SeedSpec,
    ) -> Result<ManifoldSpec> {
        if params.negative_mean.len() != m || params.positive_mean.len() != m {
            return Err(Error::invalid(
                "means",
                format!("class means must have length M={m}"),
            ));
        }
        if !(params.scale >= 0.0) || !(params.ambient_noise >= 0.0) {
            return Err(Error::invalid("scale", "scales must be non-negative"));
        }
        let basis = random_orthonormal_basis(n, m, basis_seed)?;
        Ok(ManifoldSpec {
            ambient_dim: n,
            intrinsic_dim: m,
            basis,
            params: ManifoldParams::SubspaceGaussians(params),
        })
    }

    pub fn concentric_spheres(n: usize, params: SphereParams) -> Result<ManifoldSpec> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "spheres need N ≥ 2, got {n}"
            )));
        }
        if !(params.inner_radius > 0.0) || !(params.outer_radius > 0.0) {
            return Err(Error::invalid("radius", "radii must be positive"));
        }
        if !(params.inner_radius < params.outer_radius) {
            return Err(Error::invalid(
                "radius",
                "inner radius must be below outer radius",
            ));
        }
        Ok(ManifoldSpec {
            ambient_dim: n,
            intrinsic_dim: n - 1,
            basis: Basis::canonical(n, n)?,
            params: ManifoldParams::ConcentricSpheres(params),
        })
    }

    pub fn folded_curve(
        n: usize,
        params: FoldParams,
        basis_seed: SeedSpec,
    ) -> Result<ManifoldSpec> {
        if !(params.gap > 0.0) {
            return Err(Error::invalid("gap", "fold gap must be positive"));
        }
        if !(params.segment_length >= 0.0) || !(params.noise >= 0.0) {
            return Err(Error::invalid(
                "segment_length",
                "lengths must be non-negative",
            ));
        }
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "folded curve needs N ≥ 2, got {n}"
            )));
        }
        Ok(ManifoldSpec {
            ambient_dim: n,
            intrinsic_dim: 1,
            basis: random_orthonormal_basis(n, 2, basis_seed)?,
            params: ManifoldParams::FoldedCurve(params),
        })
    }

    pub fn kind(&self) -> ManifoldKind {
        match self.params {
            ManifoldParams::SubspaceGaussians(_) => ManifoldKind::SubspaceGaussians,
            ManifoldParams::ConcentricSpheres(_) => ManifoldKind::ConcentricSpheres,
            ManifoldParams::FoldedCurve(_) => ManifoldKind::FoldedCurve,
        }
    }

    /// Metadata carried by generated datasets.
    pub fn info(&self) -> ManifoldInfo {
        let basis = match self.params {
            ManifoldParams::ConcentricSpheres(_) => None,
            _ => Some(self.basis.clone()),
        };
        ManifoldInfo {
            kind: self.kind(),
            intrinsic_dim: self.intrinsic_dim,
            basis,
        }
    }

    pub fn generate(&self, n_per_class: usize, seed: SeedSpec) -> Result<Dataset> {
        match self.params {
            ManifoldParams::SubspaceGaussians(_) => {
                generate_subspace_gaussians(self, n_per_class, seed)
            }
            ManifoldParams::ConcentricSpheres(_) => {
                generate_concentric_spheres(self, n_per_class, seed)
            }
            ManifoldParams::FoldedCurve(_) => generate_folded_curve(self, n_per_class, seed),
        }
    }
}

/// The part of a [`ManifoldSpec`] that travels with a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldInfo {
    pub kind: ManifoldKind,
    pub intrinsic_dim: usize,
    pub basis: Option<Basis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
    ambient_dim: usize,
    pub manifold: Option<ManifoldInfo>,
    pub seed: u64,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Dataset> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if points.len() != labels.len() {
            return Err(Error::invalid(
                "labels",
                format!("{} points but {} labels", points.len(), labels.len()),
            ));
        }
        let ambient_dim = points[0].len();
        if ambient_dim == 0 {
            return Err(Error::InvalidDimension("points have dimension 0".into()));
        }
        for p in &points {
            check_dim(ambient_dim, p.len())?;
            if !linalg::all_finite(p) {
                return Err(Error::invalid("points", "non-finite coordinate"));
            }
        }
        Ok(Dataset {
            points,
            labels,
            ambient_dim,
            manifold: None,
            seed: 0,
        })
    }

    /// Unlabelled point cloud (all labels +1).
    pub fn unlabeled(points: Vec<Vec<f64>>) -> Result<Dataset> {
        let labels = vec![Label::Positive; points.len()];
        Dataset::new(points, labels)
    }

    pub fn with_manifold(mut self, info: ManifoldInfo) -> Self {
        self.manifold = Some(info);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.manifold
            .as_ref()
            .map_or(self.ambient_dim, |m| m.intrinsic_dim)
    }

    pub fn basis(&self) -> Option<&Basis> {
        self.manifold.as_ref().and_then(|m| m.basis.as_ref())
    }

    pub fn kind(&self) -> ManifoldKind {
        self.manifold
            .as_ref()
            .map_or(ManifoldKind::Custom, |m| m.kind)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    pub fn has_both_classes(&self) -> bool {
        let first = self.labels[0];
        self.labels.iter().any(|&l| l != first)
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &DatasetFile::from(self))?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&DatasetFile::from(self))?)
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Dataset> {
        let file: DatasetFile = serde_json::from_reader(r)?;
        file.try_into()
    }

    pub fn from_json_str(s: &str) -> Result<Dataset> {
        let file: DatasetFile = serde_json::from_str(s)?;
        file.try_into()
    }
}

/// On-disk layout of a dataset.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    ambient_dim: usize,
    intrinsic_dim: usize,
    basis: Option<Vec<Vec<f64>>>,
    points: Vec<Vec<f64>>,
    labels: Vec<i8>,
    seed: u64,
    kind: ManifoldKind,
}

impl From<&Dataset> for DatasetFile {
    fn from(d: &Dataset) -> Self {
        DatasetFile {
            ambient_dim: d.ambient_dim,
            intrinsic_dim: d.intrinsic_dim(),
            basis: d.basis().map(|b| b.columns().to_vec()),
            points: d.points.clone(),
            labels: d.labels.iter().map(|l| l.as_i8()).collect(),
            seed: d.seed,
            kind: d.kind(),
        }
    }
}

impl TryFrom<DatasetFile> for Dataset {
    type Error = Error;

    fn try_from(f: DatasetFile) -> Result<Dataset> {
        let labels = f
            .labels
            .into_iter()
            .map(Label::from_i8)
            .collect::<Result<Vec<_>>>()?;
        let mut d = Dataset::new(f.points, labels)?;
        check_dim(f.ambient_dim, d.ambient_dim)?;
        let basis = match f.basis {
            Some(cols) => {
                let b = Basis::from_columns(cols)?;
                check_dim(f.ambient_dim, b.ambient_dim())?;
                Some(b)
            }
            None => None,
        };
        if f.kind != ManifoldKind::Custom || basis.is_some() {
            d.manifold = Some(ManifoldInfo {
                kind: f.kind,
                intrinsic_dim: f.intrinsic_dim,
                basis,
            });
        }
        d.seed = f.seed;
        Ok(d)
    }
}

fn check_count(n_per_class: usize) -> Result<()> {
    if n_per_class < 1 {
        return Err(Error::invalid(
            "n_per_class",
            "need at least one point per class",
        ));
    }
    Ok(())
}

fn balanced_labels(n_per_class: usize) -> Vec<Label> {
    let mut labels = vec![Label::Negative; n_per_class];
    labels.extend(std::iter::repeat_n(Label::Positive, n_per_class));
    labels
}

/// Two Gaussian classes inside the span of the spec's basis. Class −1 comes
/// first, then class +1.
pub fn generate_subspace_gaussians(
    spec: &ManifoldSpec,
    n_per_class: usize,
    seed: SeedSpec,
) -> Result<Dataset> {
    let ManifoldParams::SubspaceGaussians(params) = &spec.params else {
        return Err(Error::invalid("kind", "expected subspace_gaussians"));
    };
    check_count(n_per_class)?;
    let mut rng = seed.rng();
    let m = spec.intrinsic_dim;
    let mut points = Vec::with_capacity(2 * n_per_class);
    for mean in [&params.negative_mean, &params.positive_mean] {
        for _ in 0..n_per_class {
            let coeffs: Vec<f64> = mean
                .iter()
                .map(|mu| mu + params.scale * rng::gaussian(&mut rng))
                .collect();
            debug_assert_eq!(coeffs.len(), m);
            let mut x = spec.basis.embed(&coeffs)?;
            if params.ambient_noise > 0.0 {
                for v in x.iter_mut() {
                    *v += params.ambient_noise * rng::gaussian(&mut rng);
                }
            }
            points.push(x);
        }
    }
    Ok(Dataset::new(points, balanced_labels(n_per_class))?
        .with_manifold(spec.info())
        .with_seed(seed.seed()))
}

/// Class −1 uniform on the inner sphere, class +1 on the outer one.
pub fn generate_concentric_spheres(
    spec: &ManifoldSpec,
    n_per_class: usize,
    seed: SeedSpec,
) -> Result<Dataset> {
    let ManifoldParams::ConcentricSpheres(params) = &spec.params else {
        return Err(Error::invalid("kind", "expected concentric_spheres"));
    };
    check_count(n_per_class)?;
    let mut rng = seed.rng();
    let n = spec.ambient_dim;
    let mut points = Vec::with_capacity(2 * n_per_class);
    for radius in [params.inner_radius, params.outer_radius] {
        for _ in 0..n_per_class {
            points.push(sphere_point(&mut rng, n, radius));
        }
    }
    Ok(Dataset::new(points, balanced_labels(n_per_class))?
        .with_manifold(spec.info())
        .with_seed(seed.seed()))
}

pub(crate) fn sphere_point(rng: &mut rng::Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let g = rng::gaussian_vec(rng, n);
        let len = norm(&g);
        if len > 0.0 {
            return linalg::scale(&g, radius / len);
        }
    }
}

/// Total arc length of the hairpin.
pub fn fold_arc_length(params: &FoldParams) -> f64 {
    2.0 * params.segment_length + std::f64::consts::PI * params.gap / 2.0
}

/// Planar hairpin coordinates at curve parameter `t ∈ [−1, 1]`, uniform in
/// arc length. `t = 0` is the apex of the fold, `t = ±1` the two free ends.
///
/// The upper segment runs from `(L, g/2)` to `(0, g/2)`, the half circle of
/// radius `g/2` bulges to negative `u`, and the lower segment returns from
/// `(0, −g/2)` to `(L, −g/2)`.
pub fn fold_plane_point(params: &FoldParams, t: f64) -> [f64; 2] {
    let len = params.segment_length;
    let r = params.gap / 2.0;
    let s = (t.clamp(-1.0, 1.0) + 1.0) / 2.0 * fold_arc_length(params);
    let arc = std::f64::consts::PI * r;
    if s <= len {
        [len - s, r]
    } else if s <= len + arc {
        let phi = (s - len) / r;
        [-r * phi.sin(), r * phi.cos()]
    } else {
        [s - len - arc, -r]
    }
}

/// Noise-free curve point embedded through the spec's basis.
pub fn fold_curve_point(spec: &ManifoldSpec, t: f64) -> Result<Vec<f64>> {
    let ManifoldParams::FoldedCurve(params) = &spec.params else {
        return Err(Error::invalid("kind", "expected folded_curve"));
    };
    spec.basis.embed(&fold_plane_point(params, t))
}

/// Points uniform in arc length along the hairpin; `t < 0` is class −1 and
/// `t ≥ 0` class +1. Noise is isotropic with per-coordinate standard
/// deviation `noise / √N`.
pub fn generate_folded_curve(
    spec: &ManifoldSpec,
    n_per_class: usize,
    seed: SeedSpec,
) -> Result<Dataset> {
    use rand::Rng as _;
    let ManifoldParams::FoldedCurve(params) = &spec.params else {
        return Err(Error::invalid("kind", "expected folded_curve"));
    };
    check_count(n_per_class)?;
    let mut rng = seed.rng();
    let n = spec.ambient_dim;
    let coord_sd = params.noise / (n as f64).sqrt();
    let mut points = Vec::with_capacity(2 * n_per_class);
    for class_offset in [-1.0, 0.0] {
        for _ in 0..n_per_class {
            let t = class_offset + rng.random::<f64>();
            let mut x = spec.basis.embed(&fold_plane_point(params, t))?;
            if coord_sd > 0.0 {
                for v in x.iter_mut() {
                    *v += coord_sd * rng::gaussian(&mut rng);
                }
            }
            points.push(x);
        }
    }
    Ok(Dataset::new(points, balanced_labels(n_per_class))?
        .with_manifold(spec.info())
        .with_seed(seed.seed()))
}

/// `n` points uniform in the unit cube `[0, 1]^d`, unlabelled.
pub fn uniform_hypercube(n: usize, d: usize, seed: SeedSpec) -> Result<Dataset> {
    use rand::Rng as _;
    if d == 0 {
        return Err(Error::InvalidDimension("cube dimension must be ≥ 1".into()));
    }
    let mut rng = seed.rng();
    let points = (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    Ok(Dataset::unlabeled(points)?.with_seed(seed.seed()))
}

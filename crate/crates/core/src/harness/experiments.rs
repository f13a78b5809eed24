use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::oracles::{fragile_box_analytic, FragileBoxClassifier, NormThresholdClassifier};
use super::result::{ExperimentResult, ResultRow};
use crate::attacks::{
    gradient_sign_attack, minimal_linear_attack, noise_ball_misclassification, ray_flip_distance,
    transfer_attack, BoundarySearch, DEFAULT_OVERSHOOT,
};
use crate::classifiers::{train_logistic_regression, train_mlp, Classifier, LinearModel};
use crate::error::{Error, Result};
use crate::geometry::{FoldParams, GaussianParams, Label, ManifoldSpec, SphereParams};
use crate::lid::{lid_contrast, twonn};
use crate::linalg;
use crate::probe::{fragility_stats, off_manifold_decomposition};
use crate::rng::{self, SeedSpec};
use crate::stats;

#[derive(Clone, Copy)]
enum Agg {
    Median,
    Mean,
}

type Sample = (usize, String, f64);

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "field `experiment`: expected {kind}, got {}",
            cfg.experiment
        )));
    }
    cfg.validate()
}

/// Seed of repetition `rep` at sweep point `n`.
fn point_seed(base: u64, kind: ExperimentKind, n: usize, rep: usize) -> SeedSpec {
    SeedSpec::new(base, kind as u64)
        .child(n as u64)
        .child(rep as u64)
}

fn jobs(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    cfg.dims()
        .into_iter()
        .flat_map(|n| (0..cfg.seeds()).map(move |s| (n, s)))
        .collect()
}

fn exact_row(kind: ExperimentKind, n: usize, metric: &str, value: f64, seeds: usize) -> ResultRow {
    ResultRow {
        experiment: kind,
        n,
        metric: metric.to_string(),
        value,
        ci_lo: value,
        ci_hi: value,
        seeds,
    }
}

fn aggregate(kind: ExperimentKind, samples: Vec<Sample>, how: Agg) -> Vec<ResultRow> {
    let mut groups: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for (n, metric, v) in samples {
        groups.entry((n, metric)).or_default().push(v);
    }
    groups
        .into_iter()
        .map(|((n, metric), vs)| {
            let (value, ci_lo, ci_hi) = match how {
                Agg::Median => stats::median_with_ci(&vs),
                Agg::Mean => stats::mean_with_ci(&vs),
            };
            ResultRow {
                experiment: kind,
                n,
                metric,
                value,
                ci_lo,
                ci_hi,
                seeds: vs.len(),
            }
        })
        .collect()
}

/// Evenly spread indices into a collection of `len` items.
fn spread(len: usize, count: usize) -> Vec<usize> {
    let count = count.min(len);
    (0..count).map(|i| i * len / count).collect()
}

fn loglog_slope(rows: &[ResultRow], metric: &str) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.metric == metric && r.value > 0.0 && r.value.is_finite())
        .map(|r| ((r.n as f64).ln(), r.value.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(stats::linear_fit(&x, &y).1)
}

/// Runs on a dedicated pool of `workers` threads; the output is the same for
/// any worker count.
pub fn run_experiment_with_workers(
    cfg: &ExperimentConfig,
    base_seed: u64,
    workers: usize,
) -> Result<ExperimentResult> {
    if workers < 1 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(cfg, base_seed))
}

pub fn run_experiment(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    match cfg.experiment {
        ExperimentKind::MarginCollapse => run_margin_collapse(cfg, base_seed),
        ExperimentKind::NoiseBallSweep => run_noise_ball_sweep(cfg, base_seed),
        ExperimentKind::FragileBox => run_fragile_box(cfg, base_seed),
        ExperimentKind::SphereScaling => run_sphere_scaling(cfg, base_seed),
        ExperimentKind::LidContrast => run_lid_contrast(cfg, base_seed),
        ExperimentKind::TransferMatrix => run_transfer_matrix(cfg, base_seed),
    }
}

fn gaussian_params(cfg: &ExperimentConfig) -> GaussianParams {
    let t = cfg.template();
    GaussianParams::separated(
        cfg.intrinsic_dim(),
        t.separation.unwrap_or(GaussianParams::DEFAULT_SEPARATION),
        t.scale.unwrap_or(1.0),
    )
}

/// Logistic regression on exactly-on-manifold Gaussians: median shrink
/// factor, minimum margin and fraction of margins below `epsilon` per `N`.
pub fn run_margin_collapse(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    let kind = ExperimentKind::MarginCollapse;
    expect_kind(cfg, kind)?;
    let params = gaussian_params(cfg);
    let eps = cfg.epsilon();
    let samples: Vec<Vec<Sample>> = jobs(cfg)
        .into_par_iter()
        .map(|(n, s)| {
            let seed = point_seed(base_seed, kind, n, s);
            let spec = ManifoldSpec::subspace_gaussians(
                n,
                cfg.intrinsic_dim(),
                params.clone(),
                seed.child(0),
            )?;
            let data = spec.generate(cfg.n_per_class(), seed.child(1))?;
            let model = train_logistic_regression(&data, &cfg.logistic_train(seed.child(2)))?;
            let dec = off_manifold_decomposition(&model, &spec.basis)?;
            let fs = fragility_stats(&model, &data, eps)?;
            Ok(vec![
                (n, "shrink_factor".to_string(), dec.shrink_factor),
                (n, "angle".to_string(), dec.angle),
                (n, "min_margin".to_string(), fs.min_margin),
                (n, "frac_below".to_string(), fs.frac_below),
                (n, "train_accuracy".to_string(), model.accuracy(&data)?),
            ])
        })
        .collect::<Result<_>>()?;
    let rows = aggregate(kind, samples.into_iter().flatten().collect(), Agg::Median);
    Ok(ExperimentResult::new(cfg.clone(), base_seed, rows))
}

fn box_label(d: f64, sigma: f64) -> String {
    format!("d={d},sigma={sigma}")
}

struct BoxCell {
    k: u32,
    d: f64,
    sigma: f64,
    mc: f64,
    ci: (f64, f64),
    analytic: f64,
}

fn box_cell(k: u32, d: f64, sigma: f64, trials: u64, seed: SeedSpec) -> Result<BoxCell> {
    let model = FragileBoxClassifier {
        k: k as usize,
        half_width: d,
    };
    let analytic = fragile_box_analytic(k, d, sigma)?;
    let est = noise_ball_misclassification(
        &model,
        &vec![0.0; k as usize],
        Label::Positive,
        sigma,
        trials,
        seed,
    )?;
    Ok(BoxCell {
        k,
        d,
        sigma,
        mc: est.probability,
        ci: est.wilson_ci_95,
        analytic,
    })
}

/// Monte Carlo misclassification of the fragile-box classifier against its
/// closed form over a `(k, d, σ)` grid; rows are keyed by `N = k`.
pub fn run_fragile_box(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    let kind = ExperimentKind::FragileBox;
    expect_kind(cfg, kind)?;
    let grid = cfg.box_grid();
    let mut cells = Vec::new();
    for &k in &grid.k {
        for &d in &grid.d {
            for &sigma in &grid.sigma {
                cells.push((k, d, sigma));
            }
        }
    }
    if cells.iter().any(|c| c.0 == 0) {
        return Err(Error::Config(
            "field `box_grid`: k must be at least 1".into(),
        ));
    }
    let root = SeedSpec::new(base_seed, kind as u64);
    let results: Vec<BoxCell> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(k, d, sigma))| box_cell(k, d, sigma, cfg.trials(), root.child(i as u64)))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut inside = 0;
    for c in &results {
        let label = box_label(c.d, c.sigma);
        let hit = c.ci.0 <= c.analytic && c.analytic <= c.ci.1;
        inside += usize::from(hit);
        let n = c.k as usize;
        rows.push(ResultRow {
            experiment: kind,
            n,
            metric: format!("mc[{label}]"),
            value: c.mc,
            ci_lo: c.ci.0,
            ci_hi: c.ci.1,
            seeds: 1,
        });
        rows.push(exact_row(
            kind,
            n,
            &format!("analytic[{label}]"),
            c.analytic,
            1,
        ));
        rows.push(exact_row(
            kind,
            n,
            &format!("inside_ci[{label}]"),
            f64::from(u8::from(hit)),
            1,
        ));
    }
    rows.push(exact_row(kind, 0, "cells_inside_ci", inside as f64, 1));
    rows.push(exact_row(kind, 0, "cells_total", results.len() as f64, 1));
    Ok(ExperimentResult::new(cfg.clone(), base_seed, rows))
}

/// Gaussian noise-ball misclassification of MLPs trained on `M`-dimensional
/// data, next to the fragile-box oracle at `k = ⌊ρN⌋`.
pub fn run_noise_ball_sweep(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    let kind = ExperimentKind::NoiseBallSweep;
    expect_kind(cfg, kind)?;
    let params = gaussian_params(cfg);
    let sigma = cfg.sigma();
    let samples: Vec<Vec<Sample>> = jobs(cfg)
        .into_par_iter()
        .map(|(n, s)| {
            let seed = point_seed(base_seed, kind, n, s);
            let spec = ManifoldSpec::subspace_gaussians(
                n,
                cfg.intrinsic_dim(),
                params.clone(),
                seed.child(0),
            )?;
            let data = spec.generate(cfg.n_per_class(), seed.child(1))?;
            let model = train_mlp(&data, &cfg.hidden(), &cfg.mlp_train(seed.child(2)))?;
            let probs = spread(data.len(), cfg.test_points())
                .into_iter()
                .map(|i| {
                    let est = noise_ball_misclassification(
                        &model,
                        &data.points()[i],
                        data.labels()[i],
                        sigma,
                        cfg.trials(),
                        seed.child(3).child(i as u64),
                    )?;
                    Ok(est.probability)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![
                (n, "misclassification".to_string(), stats::mean(&probs)),
                (n, "train_accuracy".to_string(), model.accuracy(&data)?),
            ])
        })
        .collect::<Result<_>>()?;
    let mut rows = aggregate(kind, samples.into_iter().flatten().collect(), Agg::Median);

    let d = cfg.box_half_width();
    let root = SeedSpec::new(base_seed, kind as u64).child(u64::MAX);
    let boxes: Vec<(usize, Option<BoxCell>)> = cfg
        .dims()
        .into_par_iter()
        .map(|n| {
            let k = (cfg.rho() * n as f64).floor() as u32;
            if k == 0 {
                return Ok((n, None));
            }
            Ok((
                n,
                Some(box_cell(k, d, sigma, cfg.trials(), root.child(n as u64))?),
            ))
        })
        .collect::<Result<_>>()?;
    for (n, cell) in boxes {
        let Some(c) = cell else { continue };
        rows.push(ResultRow {
            experiment: kind,
            n,
            metric: "box_mc".into(),
            value: c.mc,
            ci_lo: c.ci.0,
            ci_hi: c.ci.1,
            seeds: 1,
        });
        rows.push(exact_row(kind, n, "box_analytic", c.analytic, 1));
        rows.push(exact_row(kind, n, "box_k", f64::from(c.k), 1));
    }
    Ok(ExperimentResult::new(cfg.clone(), base_seed, rows))
}

/// Distance from correctly classified test points to the nearest error:
/// minimum over random directions of the boundary distance.
pub fn nearest_error_distance<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    directions: usize,
    search: &BoundarySearch,
    seed: SeedSpec,
) -> f64 {
    let mut rng = seed.rng();
    let mut u = vec![0.0; x.len()];
    let mut best = f64::INFINITY;
    for _ in 0..directions {
        rng::fill_gaussian(&mut rng, &mut u);
        let Some(dir) = linalg::normalized(&u) else {
            continue;
        };
        best = best.min(ray_flip_distance(model, x, &dir, search));
    }
    best
}

fn sphere_metrics<C: Classifier>(
    model: &C,
    n: usize,
    cfg: &ExperimentConfig,
    spec: &ManifoldSpec,
    train: &crate::geometry::Dataset,
    seed: SeedSpec,
    outer: f64,
) -> Result<Vec<Sample>> {
    let test = spec.generate(cfg.test_points().div_ceil(2), seed.child(3))?;
    let search = BoundarySearch::for_scale(outer);
    let correct: Vec<usize> = (0..test.len())
        .filter(|&i| model.predict_unchecked(&test.points()[i]) == test.labels()[i])
        .collect();
    if correct.is_empty() {
        return Err(Error::Numeric(format!(
            "no correctly classified test point at N = {n}"
        )));
    }
    let mut distances = Vec::with_capacity(correct.len());
    let mut local = Vec::with_capacity(correct.len());
    for &i in &correct {
        let x = &test.points()[i];
        distances.push(nearest_error_distance(
            model,
            x,
            cfg.directions(),
            &search,
            seed.child(4).child(i as u64),
        ));
        let g = linalg::norm(&model.gradient_unchecked(x));
        if g > 0.0 {
            local.push(model.decision_unchecked(x).abs() / g);
        }
    }
    // rays that never flip within the search range are censored, not averaged as ∞
    let found: Vec<f64> = distances
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .collect();
    let mut out = vec![
        (
            n,
            "error_found_fraction".to_string(),
            found.len() as f64 / distances.len() as f64,
        ),
        (n, "test_accuracy".to_string(), model.accuracy(&test)?),
        (n, "train_accuracy".to_string(), model.accuracy(train)?),
    ];
    if !found.is_empty() {
        out.push((n, "nearest_error_distance".to_string(), stats::mean(&found)));
    }
    if !local.is_empty() {
        out.push((n, "local_margin".to_string(), stats::mean(&local)));
    }
    Ok(out)
}

/// Nearest-error distance around concentric spheres as `N` grows, with the
/// fitted log-log slope reported at `N = 0`.
pub fn run_sphere_scaling(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    let kind = ExperimentKind::SphereScaling;
    expect_kind(cfg, kind)?;
    let t = cfg.template();
    let defaults = SphereParams::default();
    let params = SphereParams {
        inner_radius: t.inner_radius.unwrap_or(defaults.inner_radius),
        outer_radius: t.outer_radius.unwrap_or(defaults.outer_radius),
    };
    let samples: Vec<Vec<Sample>> = jobs(cfg)
        .into_par_iter()
        .map(|(n, s)| {
            let seed = point_seed(base_seed, kind, n, s);
            let spec = ManifoldSpec::concentric_spheres(n, params)?;
            let data = spec.generate(cfg.n_per_class(), seed.child(1))?;
            if cfg.norm_oracle() {
                let model =
                    NormThresholdClassifier::between(n, params.inner_radius, params.outer_radius);
                sphere_metrics(&model, n, cfg, &spec, &data, seed, params.outer_radius)
            } else {
                let model = train_mlp(&data, &cfg.hidden(), &cfg.mlp_train(seed.child(2)))?;
                sphere_metrics(&model, n, cfg, &spec, &data, seed, params.outer_radius)
            }
        })
        .collect::<Result<_>>()?;
    let mut rows = aggregate(kind, samples.into_iter().flatten().collect(), Agg::Mean);
    for (metric, slope_name) in [
        ("nearest_error_distance", "loglog_slope"),
        ("local_margin", "local_margin_loglog_slope"),
    ] {
        if let Some(slope) = loglog_slope(&rows, metric) {
            rows.push(exact_row(kind, 0, slope_name, slope, cfg.seeds()));
        }
    }
    Ok(ExperimentResult::new(cfg.clone(), base_seed, rows))
}

/// MLE-LID of held-out curve points and of their gradient-sign perturbations,
/// measured against the training set, for each neighbour count.
pub fn run_lid_contrast(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    let kind = ExperimentKind::LidContrast;
    expect_kind(cfg, kind)?;
    let t = cfg.template();
    let gap = t.gap.unwrap_or(FoldParams::default().gap);
    let base = FoldParams::with_gap(gap);
    let params = FoldParams {
        gap,
        segment_length: t.segment_length.unwrap_or(base.segment_length),
        noise: t.noise.unwrap_or(base.noise),
    };
    let samples: Vec<Vec<Sample>> = jobs(cfg)
        .into_par_iter()
        .map(|(n, s)| {
            let seed = point_seed(base_seed, kind, n, s);
            let spec = ManifoldSpec::folded_curve(n, params, seed.child(0))?;
            let data = spec.generate(cfg.n_per_class(), seed.child(1))?;
            let model = train_mlp(&data, &cfg.hidden(), &cfg.mlp_train(seed.child(2)))?;
            let held_out = spec.generate(cfg.test_points().div_ceil(2), seed.child(3))?;
            let natural: Vec<Vec<f64>> = held_out.points().to_vec();
            let mut adversarial = Vec::with_capacity(natural.len());
            let mut flipped = 0usize;
            for (x, y) in held_out.iter() {
                match gradient_sign_attack(&model, x, y, cfg.epsilon()) {
                    Ok(r) => {
                        flipped += usize::from(r.success);
                        adversarial.push(r.adversarial());
                    }
                    Err(Error::NoGradientDirection) => {}
                    Err(e) => return Err(e),
                }
            }
            let mut out = vec![
                (n, "test_accuracy".to_string(), model.accuracy(&held_out)?),
                (
                    n,
                    "attack_success".to_string(),
                    flipped as f64 / natural.len() as f64,
                ),
                (n, "twonn_reference".to_string(), twonn(&data)?.value),
            ];
            for k in cfg.k_list() {
                let c = lid_contrast(&natural, &adversarial, &data, k)?;
                out.push((n, format!("mean_natural_k{k}"), c.mean_natural));
                out.push((n, format!("mean_adversarial_k{k}"), c.mean_adversarial));
                out.push((n, format!("rank_sum_p_k{k}"), c.rank_sum_p));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let rows = aggregate(kind, samples.into_iter().flatten().collect(), Agg::Median);
    Ok(ExperimentResult::new(cfg.clone(), base_seed, rows))
}

/// Fraction of model `i`'s minimal attacks, scaled by `attack_scale`, that also
/// flip model `j`; models are trained on independent draws of one manifold.
pub fn run_transfer_matrix(cfg: &ExperimentConfig, base_seed: u64) -> Result<ExperimentResult> {
    let kind = ExperimentKind::TransferMatrix;
    expect_kind(cfg, kind)?;
    let params = gaussian_params(cfg);
    let m = cfg.models();
    let samples: Vec<Vec<Sample>> = jobs(cfg)
        .into_par_iter()
        .map(|(n, s)| {
            let seed = point_seed(base_seed, kind, n, s);
            let spec = ManifoldSpec::subspace_gaussians(
                n,
                cfg.intrinsic_dim(),
                params.clone(),
                seed.child(0),
            )?;
            let models: Vec<LinearModel> = (0..m as u64)
                .map(|i| {
                    let data = spec.generate(cfg.n_per_class(), seed.child(1).child(i))?;
                    train_logistic_regression(&data, &cfg.logistic_train(seed.child(2).child(i)))
                })
                .collect::<Result<_>>()?;
            let test = spec.generate(cfg.test_points().div_ceil(2), seed.child(3))?;
            let mut out = Vec::with_capacity(m * m + 2);
            let (mut diag, mut off) = (Vec::new(), Vec::new());
            for (i, source) in models.iter().enumerate() {
                let attacks = test
                    .points()
                    .iter()
                    .map(|x| {
                        Ok(minimal_linear_attack(source, x, DEFAULT_OVERSHOOT)?
                            .scaled(source, cfg.attack_scale()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (j, target) in models.iter().enumerate() {
                    let mut hits = 0usize;
                    for a in &attacks {
                        hits += usize::from(transfer_attack(a, target)?);
                    }
                    let rate = hits as f64 / attacks.len() as f64;
                    out.push((n, format!("transfer_{i}_{j}"), rate));
                    if i == j {
                        diag.push(rate);
                    } else {
                        off.push(rate);
                    }
                }
            }
            out.push((n, "mean_self".to_string(), stats::mean(&diag)));
            out.push((n, "mean_transfer".to_string(), stats::mean(&off)));
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let rows = aggregate(kind, samples.into_iter().flatten().collect(), Agg::Mean);
    Ok(ExperimentResult::new(cfg.clone(), base_seed, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_indices() {
        assert_eq!(spread(10, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(spread(3, 10), vec![0, 1, 2]);
    }

    #[test]
    fn slope_of_power_law() {
        let kind = ExperimentKind::SphereScaling;
        let rows: Vec<ResultRow> = [10usize, 100, 1000]
            .iter()
            .map(|&n| exact_row(kind, n, "d", (n as f64).powf(-0.5), 1))
            .collect();
        assert!((loglog_slope(&rows, "d").unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&rows, "other").is_none());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let cfg = ExperimentConfig::new(ExperimentKind::FragileBox);
        assert!(run_margin_collapse(&cfg, 1).is_err());
    }

    #[test]
    fn median_aggregation_counts_seeds() {
        let rows = aggregate(
            ExperimentKind::MarginCollapse,
            vec![
                (5, "a".into(), 3.0),
                (5, "a".into(), 1.0),
                (5, "a".into(), 2.0),
                (1, "b".into(), 0.0),
            ],
            Agg::Median,
        );
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].n, rows[0].seeds), (1, 1));
        assert_eq!((rows[1].value, rows[1].seeds), (2.0, 3));
    }
}

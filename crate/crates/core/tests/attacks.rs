use hdfl::attacks::{
    minimal_linear_attack, noise_ball_misclassification, transfer_attack, DEFAULT_OVERSHOOT,
};
use hdfl::classifiers::{
    train_logistic_regression, train_mlp, Classifier, LinearModel, TrainConfig,
};
use hdfl::geometry::{fold_curve_point, FoldParams, GaussianParams};
use hdfl::rng::gaussian_vec;
use hdfl::stats::normal_cdf;
use hdfl::{Label, ManifoldSpec, SeedSpec};

#[test]
fn noise_ball_matches_closed_form_on_random_linear_models() {
    let root = SeedSpec::new(11, 0);
    let mut inside = 0;
    for i in 0..1000u64 {
        let mut rng = root.child(i).rng();
        let n = 2 + (i as usize % 9);
        let model = LinearModel::new(gaussian_vec(&mut rng, n), gaussian_vec(&mut rng, 1)[0]);
        let x = gaussian_vec(&mut rng, n);
        let y = model.predict(&x).unwrap();
        let m = model.decision_value(&x).unwrap().abs() / model.weight_norm();
        // σ between m/2 and 2m keeps the tail probability away from 0
        let sigma = m * (0.5 + 1.5 * ((i % 100) as f64 / 100.0));
        let est =
            noise_ball_misclassification(&model, &x, y, sigma, 10_000, root.child(100_000 + i))
                .unwrap();
        let exact = normal_cdf(-m / sigma);
        let (lo, hi) = est.wilson_ci_95;
        assert!(lo <= est.probability && est.probability <= hi);
        if lo <= exact && exact <= hi {
            inside += 1;
        }
    }
    assert!(
        inside >= 950,
        "only {inside}/1000 intervals cover the closed form"
    );
}

#[test]
fn fold_apex_is_more_fragile_than_segment_interior() {
    let gap = 1.0;
    let spec =
        ManifoldSpec::folded_curve(10, FoldParams::with_gap(gap), SeedSpec::new(5, 0)).unwrap();
    let data = spec.generate(200, SeedSpec::new(5, 1)).unwrap();
    let model = train_mlp(&data, &[64], &TrainConfig::mlp(SeedSpec::new(5, 2))).unwrap();
    assert!(model.accuracy(&data).unwrap() > 0.95);

    let sigma = gap / 4.0;
    let noise = |t: f64, id: u64| {
        let x = fold_curve_point(&spec, t).unwrap();
        let y = if t < 0.0 {
            Label::Negative
        } else {
            Label::Positive
        };
        noise_ball_misclassification(&model, &x, y, sigma, 10_000, SeedSpec::new(5, 3).child(id))
            .unwrap()
            .probability
    };
    let offsets = [0.03, 0.06, 0.09];
    let mut apex_total = 0.0;
    let mut interior_total = 0.0;
    for (i, &o) in offsets.iter().enumerate() {
        for sign in [-1.0, 1.0] {
            let id = 2 * i as u64 + u64::from(sign > 0.0);
            let apex = noise(sign * o, id);
            let interior = noise(sign * (0.5 + o), 100 + id);
            assert!(
                apex > interior,
                "t = {}: apex {apex} vs interior {interior}",
                sign * o
            );
            apex_total += apex;
            interior_total += interior;
        }
    }
    assert!(apex_total > interior_total);
}

#[test]
fn scaled_minimal_attacks_transfer_between_independent_models() {
    let seed = SeedSpec::new(21, 0);
    let spec =
        ManifoldSpec::subspace_gaussians(100, 2, GaussianParams::well_separated(2), seed.child(0))
            .unwrap();
    let models: Vec<LinearModel> = (0..2u64)
        .map(|i| {
            let data = spec.generate(50, seed.child(1).child(i)).unwrap();
            train_logistic_regression(&data, &TrainConfig::logistic(seed.child(2).child(i)))
                .unwrap()
        })
        .collect();
    let test = spec.generate(50, seed.child(3)).unwrap();
    let mut hits = 0;
    for x in test.points() {
        let attack = minimal_linear_attack(&models[0], x, DEFAULT_OVERSHOOT)
            .unwrap()
            .scaled(&models[0], 3.0);
        assert!(attack.success);
        assert_eq!(
            transfer_attack(&attack, &models[0]).unwrap(),
            attack.success
        );
        hits += usize::from(transfer_attack(&attack, &models[1]).unwrap());
    }
    let rate = hits as f64 / test.len() as f64;
    assert!(rate > 0.5, "transfer rate {rate}");
}

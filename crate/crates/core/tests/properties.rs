use hdfl::classifiers::{Classifier, MlpModel, Model, PiecewiseLinear, TrainConfig};
use hdfl::geometry::{decompose, GaussianParams};
use hdfl::linalg::norm;
use hdfl::probe::{local_complexity, margin_linear, off_manifold_decomposition};
use hdfl::rng::gaussian_vec;
use hdfl::{ManifoldSpec, SeedSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaussian_points_stay_on_their_subspace(seed in any::<u64>(), n in 3usize..40, m in 1usize..3) {
        let spec = ManifoldSpec::subspace_gaussians(n, m, GaussianParams::well_separated(m), SeedSpec::new(seed, 0)).unwrap();
        prop_assert!(spec.basis.orthonormality_error() < 1e-12);
        let data = spec.generate(10, SeedSpec::new(seed, 1)).unwrap();
        for x in data.points() {
            let (_, residual) = decompose(x, &spec.basis).unwrap();
            prop_assert!(norm(&residual) < 1e-12);
        }
    }

    #[test]
    fn generation_is_a_function_of_the_seed(seed in any::<u64>()) {
        let spec = ManifoldSpec::subspace_gaussians(8, 2, GaussianParams::well_separated(2), SeedSpec::new(seed, 0)).unwrap();
        let a = spec.generate(5, SeedSpec::new(seed, 1)).unwrap().to_json_string().unwrap();
        let b = spec.generate(5, SeedSpec::new(seed, 1)).unwrap().to_json_string().unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mlp_json_round_trip_is_bit_exact(seed in any::<u64>()) {
        let mlp = MlpModel::initialized(6, &[5, 3], &TrainConfig::mlp(SeedSpec::new(seed, 0))).unwrap();
        let model = Model::Mlp(mlp);
        let back = Model::from_json_str(&model.to_json_string().unwrap()).unwrap();
        prop_assert_eq!(back, model);
    }

    #[test]
    fn local_linear_model_matches_network(seed in any::<u64>()) {
        let mlp = MlpModel::initialized(7, &[9, 4], &TrainConfig::mlp(SeedSpec::new(seed, 0))).unwrap();
        let x = gaussian_vec(&mut SeedSpec::new(seed, 1).rng(), 7);
        let local = mlp.local_linear_model(&x).unwrap();
        let f = mlp.decision_value(&x).unwrap();
        prop_assert!((local.evaluate(&x) - f).abs() <= 1e-9 * f.abs().max(1.0));
        let lm = local.as_linear_model();
        prop_assert!(local_complexity(&lm, &x, 1e6, 0.25).unwrap().independent_count <= 1);
    }

    #[test]
    fn margin_splits_into_on_and_off_manifold_parts(seed in any::<u64>()) {
        let mut rng = SeedSpec::new(seed, 0).rng();
        let spec = ManifoldSpec::subspace_gaussians(12, 2, GaussianParams::well_separated(2), SeedSpec::new(seed, 1)).unwrap();
        let model = hdfl::classifiers::LinearModel::new(gaussian_vec(&mut rng, 12), 0.3);
        let dec = off_manifold_decomposition(&model, &spec.basis).unwrap();
        let total = norm(&model.w);
        prop_assert!((norm(&dec.w_parallel).hypot(norm(&dec.w_perpendicular)) - total).abs() <= 1e-12 * total);
        // on the manifold only the parallel part matters
        let data = spec.generate(3, SeedSpec::new(seed, 2)).unwrap();
        for x in data.points() {
            let m = margin_linear(&model, x).unwrap();
            let f_par = hdfl::linalg::dot(&dec.w_parallel, x) + model.b;
            prop_assert!((m * total - f_par.abs()).abs() <= 1e-9 * (1.0 + f_par.abs()));
        }
    }
}

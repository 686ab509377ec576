//! Property-based invariants spanning the library.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use photonrc::delay::{make_mask, multiplex, run_discrete_map, sample_nodes, DelayParams, MaskKind};
use photonrc::esn::{build_esn, esn_run, esn_step, Activation, EsnParams};
use photonrc::linalg::spectral_radius;
use photonrc::readout::{nmse, predict, ReadoutKind, ReadoutWeights};
use photonrc::rng::draw_uniform;
use photonrc::{RandomSource, StateMatrix, TimeSeries};

fn random_square(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = RandomSource::new(seed);
    DMatrix::from_fn(n, n, |_, _| rng.uniform_in(-1.0, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_radius_is_absolutely_homogeneous(
        seed in 0u64..1000,
        n in 2usize..30,
        c in -4.0f64..4.0,
    ) {
        let m = random_square(n, seed);
        let r = spectral_radius(&m).unwrap();
        let rc = spectral_radius(&(&m * c)).unwrap();
        prop_assert!((rc - c.abs() * r).abs() < 1e-9 * r.max(1.0));
    }

    #[test]
    fn uniform_draws_stay_in_range_and_repeat(
        seed in any::<u64>(),
        lo in -10.0f64..0.0,
        span in 0.1f64..10.0,
        count in 1usize..64,
    ) {
        let hi = lo + span;
        let mut a = RandomSource::new(seed);
        let mut b = RandomSource::new(seed);
        let va = draw_uniform(&mut a, lo, hi, count).unwrap();
        let vb = draw_uniform(&mut b, lo, hi, count).unwrap();
        prop_assert_eq!(&va, &vb);
        prop_assert!(va.iter().all(|x| *x >= lo && *x < hi));
    }

    #[test]
    fn tanh_reservoir_states_bounded(seed in 0u64..500, rho in 0.0f64..1.2) {
        let params = EsnParams {
            n_nodes: 12,
            spectral_radius_target: rho,
            input_scaling: 1.0,
            bias_scale: 0.5,
            input_dim: 1,
            activation: Activation::Tanh,
        };
        let mut rng = RandomSource::new(seed);
        let r = build_esn(&params, &mut rng).unwrap();
        let mut input_rng = RandomSource::new(seed ^ 0xabcdef);
        let input = TimeSeries::from_scalars(
            (0..100).map(|_| input_rng.uniform_in(-2.0, 2.0)).collect(),
            1.0,
        )
        .unwrap();
        let states = esn_run(&r, &input, &r.zero_state(), 0).unwrap();
        prop_assert!(states.data().iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn identity_esn_step_superposes(seed in 0u64..500, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let params = EsnParams {
            n_nodes: 5,
            spectral_radius_target: 0.6,
            input_scaling: 0.8,
            bias_scale: 0.0,
            input_dim: 2,
            activation: Activation::Identity,
        };
        let mut rng = RandomSource::new(seed);
        let r = build_esn(&params, &mut rng).unwrap();
        let mut v = RandomSource::new(seed ^ 0x1111);
        let x1 = DVector::from_fn(5, |_, _| v.uniform_in(-1.0, 1.0));
        let x2 = DVector::from_fn(5, |_, _| v.uniform_in(-1.0, 1.0));
        let u1 = DVector::from_fn(2, |_, _| v.uniform_in(-1.0, 1.0));
        let u2 = DVector::from_fn(2, |_, _| v.uniform_in(-1.0, 1.0));
        let lhs = esn_step(&r, &(&x1 * a + &x2 * b), &(&u1 * a + &u2 * b)).unwrap();
        let rhs = esn_step(&r, &x1, &u1).unwrap() * a + esn_step(&r, &x2, &u2).unwrap() * b;
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn predict_is_affine_free_and_linear_in_weights(
        seed in 0u64..500,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let mut rng = RandomSource::new(seed);
        let states =
            StateMatrix::new(DMatrix::from_fn(25, 4, |_, _| rng.uniform_in(-1.0, 1.0))).unwrap();
        let w1 = DMatrix::from_fn(1, 5, |_, _| rng.uniform_in(-1.0, 1.0));
        let w2 = DMatrix::from_fn(1, 5, |_, _| rng.uniform_in(-1.0, 1.0));
        let combo = ReadoutWeights::new(&w1 * a + &w2 * b, ReadoutKind::Real).unwrap();
        let lhs = predict(&combo, &states).unwrap();
        let p1 = predict(&ReadoutWeights::new(w1, ReadoutKind::Real).unwrap(), &states).unwrap();
        let p2 = predict(&ReadoutWeights::new(w2, ReadoutKind::Real).unwrap(), &states).unwrap();
        let rhs = p1.data() * a + p2.data() * b;
        prop_assert!((lhs.data() - rhs).abs().max() < 1e-12);
    }

    #[test]
    fn nmse_of_mean_predictor_is_one(seed in 0u64..500, len in 4usize..200) {
        let mut rng = RandomSource::new(seed);
        let values: Vec<f64> = (0..len).map(|_| rng.uniform_in(-5.0, 5.0)).collect();
        let mean = values.iter().sum::<f64>() / len as f64;
        prop_assume!(values.iter().any(|&v| (v - mean).abs() > 1e-9));
        let target = TimeSeries::from_scalars(values, 1.0).unwrap();
        let pred = TimeSeries::from_scalars(vec![mean; len], 1.0).unwrap();
        prop_assert!((nmse(&pred, &target).unwrap() - 1.0).abs() < 1e-9);
        prop_assert_eq!(nmse(&target, &target).unwrap(), 0.0);
    }

    #[test]
    fn virtual_node_count_is_period_over_separation(
        n in 1usize..50,
        theta_scale in 1u32..40,
        inputs in 1usize..6,
        os in 1usize..8,
    ) {
        let theta = theta_scale as f64 * 0.05;
        let mut rng = RandomSource::new(9);
        let mask = make_mask(n, MaskKind::Uniform, &mut rng, theta).unwrap();
        let input = TimeSeries::from_scalars(vec![0.3; inputs], 1.0).unwrap();
        let drive = multiplex(&input, &mask, 0.5, os).unwrap();
        let states = sample_nodes(drive.series(), mask.period(), theta, inputs).unwrap();
        prop_assert_eq!(states.cols(), n);
        prop_assert_eq!(states.rows(), inputs);
    }

    #[test]
    fn discrete_map_states_bounded_by_gain(
        seed in 0u64..500,
        beta in -1.5f64..1.5,
        d in 0usize..4,
    ) {
        let mut p = DelayParams::transient(6, 1.0);
        p.feedback_gain = beta;
        p.desync_shift = d;
        let mut rng = RandomSource::new(seed);
        let mask = make_mask(6, MaskKind::Uniform, &mut rng, 1.0).unwrap();
        let mut input_rng = RandomSource::new(seed ^ 0x7777);
        let input = TimeSeries::from_scalars(
            (0..30).map(|_| input_rng.uniform_in(-1.0, 1.0)).collect(),
            1.0,
        )
        .unwrap();
        let states = run_discrete_map(&p, &input, &mask).unwrap();
        prop_assert!(states.data().iter().all(|&v| v.abs() <= beta.abs() + 1e-15));
    }
}

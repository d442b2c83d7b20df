use proptest::prelude::*;

use idlms::datagen::CycleSamples;
use idlms::incremental::{lms_node_update, run_cycle, StepSizeProfile};
use idlms::metrics::{average_curves, msd, steady_state_msd, MsdCurve};
use idlms::reliability::{
    compute_residuals, estimate_noise_stats, map_step_size, NodeBuffer, ReliabilityConfig,
};

fn vec_pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_len).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn msd_is_permutation_invariant((psi, w) in vec_pair(8), rot in 0usize..8) {
        let r = rot % psi.len();
        let mut p2 = psi.clone();
        let mut w2 = w.clone();
        p2.rotate_left(r);
        w2.rotate_left(r);
        let (a, b) = (msd(&psi, &w), msd(&p2, &w2));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn msd_zero_iff_equal((psi, w) in vec_pair(8)) {
        prop_assert_eq!(msd(&w, &w), 0.0);
        prop_assert_eq!(msd(&psi, &w) == 0.0, psi == w);
    }

    #[test]
    fn averaging_commutes_with_power_of_two_scaling(
        curves in (1usize..20).prop_flat_map(|len| {
            prop::collection::vec(prop::collection::vec(0.0..100.0f64, len), 1..10)
        }),
        exp in -8i32..8,
    ) {
        let scale = 2f64.powi(exp);
        let plain: Vec<MsdCurve> = curves.iter().map(|c| MsdCurve::new(c.clone()).unwrap()).collect();
        let scaled: Vec<MsdCurve> = curves
            .iter()
            .map(|c| MsdCurve::new(c.iter().map(|v| v * scale).collect()).unwrap())
            .collect();
        let a = average_curves(&plain).unwrap();
        let b = average_curves(&scaled).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert_eq!(x * scale, *y);
        }
    }

    #[test]
    fn steady_state_of_decaying_curve_below_start(
        steps in prop::collection::vec(0.0..1.0f64, 1..200),
        tail in 0.01..=1.0f64,
    ) {
        let mut v = 10.0;
        let values: Vec<f64> = steps.iter().map(|s| { v *= 1.0 - 0.5 * s; v }).collect();
        let curve = MsdCurve::new(values.clone()).unwrap();
        prop_assert!(steady_state_msd(&curve, tail).unwrap() <= values[0]);
    }

    #[test]
    fn step_size_map_is_monotone_and_bounded(
        s1 in 0.0..5.0f64,
        s2 in 0.0..5.0f64,
        a in 0.1..50.0f64,
        mu_max in 1e-4..1.0f64,
    ) {
        let cfg = ReliabilityConfig::new(10, a, mu_max).unwrap();
        let (m1, m2) = (map_step_size(s1, &cfg), map_step_size(s2, &cfg));
        prop_assert!(m1 > 0.0 && m1 <= mu_max);
        if s1 < s2 {
            prop_assert!(m1 >= m2);
            if a * (s2 - s1) > 1e-9 {
                prop_assert!(m1 > m2);
            }
        }
    }

    #[test]
    fn update_reduces_instantaneous_error((psi, u) in vec_pair(6), d in -5.0..5.0f64) {
        let norm2: f64 = u.iter().map(|x| x * x).sum();
        prop_assume!(norm2 > 1e-3);
        // 0 < mu ||u||^2 < 2 makes the a-posteriori error strictly smaller.
        let mu = 1.0 / norm2;
        let err = |p: &[f64]| d - u.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        let next = lms_node_update(&psi, &u, d, mu * 0.5);
        prop_assert!(err(&next).abs() <= err(&psi).abs() + 1e-12);
    }

    #[test]
    fn zero_profile_is_identity_over_any_horizon(
        start in prop::collection::vec(-3.0..3.0f64, 3),
        data in prop::collection::vec(-3.0..3.0f64, 4 * (3 * 2 + 2)),
    ) {
        let profile = StepSizeProfile::new(vec![0.0, 0.0], 0.01).unwrap();
        let mut w = start.clone();
        for chunk in data.chunks_exact(8) {
            let samples = CycleSamples::new(3, &chunk[..6], &chunk[6..]).unwrap();
            w = run_cycle(&w, samples, &profile).unwrap();
        }
        prop_assert_eq!(w, start);
    }

    #[test]
    fn per_node_statistics_do_not_depend_on_node_order(
        data in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 4 * 5), 2..6),
        psi in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        // Each node: 5 samples of (u in R^3, d).
        let buffers: Vec<NodeBuffer> = data
            .iter()
            .map(|raw| {
                let mut b = NodeBuffer::new(3);
                for s in raw.chunks_exact(4) {
                    b.push(&s[..3], s[3]);
                }
                b
            })
            .collect();
        let stats = |b: &NodeBuffer| estimate_noise_stats(&compute_residuals(b, &psi).unwrap()).unwrap();
        let forward: Vec<_> = buffers.iter().map(stats).collect();
        let mut backward: Vec<_> = buffers.iter().rev().map(stats).collect();
        backward.reverse();
        prop_assert_eq!(forward, backward);
    }
}

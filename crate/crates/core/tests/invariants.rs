use hybrid_recovery::gate::{blend_command, compute_alpha, knn_score, sm_score, BlendMode};
use hybrid_recovery::lqr::{LqrPlant, LqrSpec};
use hybrid_recovery::numerics::pca_fit;
use hybrid_recovery::sim::{forward_kinematics, inverse_kinematics, step, DisturbanceEvent, SimConfig, WorldState};
use proptest::prelude::*;

fn calibration() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-4..1.0f64, 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn alpha_stays_in_unit_interval(cal in calibration(), beta in 0.1..50.0f64, gamma in 0.5..10.0f64, raw in prop::collection::vec(0.0..2.0f64, 8)) {
        let scores: Vec<Option<f64>> = cal.iter().zip(&raw).map(|(c, r)| Some(c * r)).collect();
        let a = compute_alpha(beta, gamma, &cal, &scores).unwrap().unwrap();
        prop_assert!((0.0..=1.0).contains(&a), "alpha {a}");
        let widest = cal.iter().zip(&raw).map(|(c, r)| (beta * c * (r - gamma)).abs()).fold(0.0, f64::max);
        if widest < 30.0 {
            prop_assert!(a > 0.0 && a < 1.0, "alpha {a}");
        }
    }

    #[test]
    fn alpha_is_monotone_in_each_score(cal in calibration(), beta in 0.1..1000.0f64, gamma in 0.1..20.0f64, lag in 0usize..8, bump in 0.0..1.0f64, base in prop::collection::vec(0.0..2.0f64, 8)) {
        let lag = lag % cal.len();
        let scores: Vec<Option<f64>> = cal.iter().zip(&base).map(|(c, b)| Some(c * b)).collect();
        let mut higher = scores.clone();
        higher[lag] = higher[lag].map(|l| l + bump);
        let a = compute_alpha(beta, gamma, &cal, &scores).unwrap().unwrap();
        let b = compute_alpha(beta, gamma, &cal, &higher).unwrap().unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn unscored_lags_do_not_move_alpha(cal in calibration(), l in 0.0..1.0f64) {
        let mut scores = vec![None; cal.len()];
        prop_assert_eq!(compute_alpha(10.0, 3.0, &cal, &scores).unwrap(), None);
        scores[0] = Some(l);
        let one = compute_alpha(10.0, 3.0, &cal, &scores).unwrap();
        prop_assert_eq!(one, compute_alpha(10.0, 3.0, &cal[..1], &scores[..1]).unwrap());
    }

    #[test]
    fn convex_blend_lies_between_commands(alpha in 0.0..=1.0f64, r in prop::collection::vec(-1.0..1.0f64, 4), l in prop::collection::vec(-1.0..1.0f64, 4)) {
        let u = blend_command(alpha, &r, &l, BlendMode::Convex).unwrap();
        for i in 0..4 {
            let (lo, hi) = (r[i].min(l[i]), r[i].max(l[i]));
            prop_assert!(u[i] >= lo - 1e-15 && u[i] <= hi + 1e-15);
        }
    }

    #[test]
    fn window_scores_are_non_negative(train in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 6), 4..20), q in prop::collection::vec(-2.0..2.0f64, 6)) {
        prop_assert!(knn_score(&q, &train).unwrap() >= 0.0);
        prop_assert_eq!(knn_score(&train[0], &train).unwrap(), 0.0);
        if let Ok(pca) = pca_fit(&train, 2) {
            prop_assert!(sm_score(&q, Some(&pca)).unwrap() >= 0.0);
        }
    }

    #[test]
    fn lqr_commands_shrink_the_error(m in prop::collection::vec(-1.0..1.0f64, 3)) {
        let target = vec![0.1, -0.2, 0.3];
        let plant = LqrPlant::solved(LqrSpec::default(), target.clone()).unwrap();
        let v0 = plant.lyapunov(&m).unwrap();
        let u = plant.command(&m).unwrap();
        let next: Vec<f64> = m.iter().zip(&u).map(|(a, b)| a + b).collect();
        prop_assert!(plant.lyapunov(&next).unwrap() <= v0 + 1e-15);
    }

    #[test]
    fn stepping_respects_joint_limits(cmd in prop::collection::vec(-3.0..3.0f64, 4), n in 1usize..30) {
        let cfg = SimConfig::default();
        let mut w = WorldState::initial(&cfg, (0.0, 0.62), 1).unwrap();
        for _ in 0..n {
            w = step(&w, &cmd, None, &cfg).unwrap();
            for (q, &(lo, hi)) in w.joints.iter().zip(&cfg.arm.joint_limits) {
                prop_assert!(*q >= lo && *q <= hi);
            }
            prop_assert!(w.gripper.abs() <= 1.0);
        }
    }

    #[test]
    fn teleport_postures_stay_in_workspace(seed in any::<u64>()) {
        let cfg = SimConfig::default();
        let ev = DisturbanceEvent::teleport(3, 5, seed, &cfg.arm).unwrap();
        let q = ev.posture.as_ref().unwrap();
        let (x, y) = cfg.arm.effector(q);
        prop_assert!(cfg.arm.in_workspace(x, y));
        prop_assert_eq!(&DisturbanceEvent::teleport(3, 5, seed, &cfg.arm).unwrap(), &ev);
    }

    #[test]
    fn inverse_kinematics_reaches_table_targets(x in -0.19..0.19f64, dy in 0.0..0.08f64) {
        let cfg = SimConfig::default();
        let phi = cfg.scene.table_orientation;
        let q = inverse_kinematics(x, 0.58 + dy, phi, &cfg.arm).unwrap();
        let p = forward_kinematics(&q, &cfg.arm).unwrap();
        prop_assert!((p.x - x).abs() < 1e-9 && (p.y - 0.58 - dy).abs() < 1e-9);
    }
}

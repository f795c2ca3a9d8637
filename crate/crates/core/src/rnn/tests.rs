use super::*;
use crate::numerics::{finite_difference_gradient, max_relative_error, sigmoid};

fn tiny(kind: CellKind) -> RnnConfig {
    RnnConfig {
        kind,
        joints: 3,
        features: 2,
        hidden: 5,
        fast: 4,
        fast_tau: 2.0,
        slow: 3,
        slow_tau: 5.0,
        history: 3,
    }
}

/// Every block drawn uniformly so biases and the initial state are non-zero.
fn randomized(cfg: RnnConfig, seed: u64) -> RnnParams {
    let mut p = RnnParams::init(cfg, &mut SeededRng::new(seed)).unwrap();
    let mut rng = SeededRng::new(seed + 100);
    for set in [&mut p.backbone, &mut p.head] {
        for b in set.blocks_mut() {
            for v in b.value.as_mut_slice() {
                *v = rng.uniform_range(-0.8, 0.8);
            }
        }
    }
    p
}

fn random_frames(n: usize, width: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SeededRng::new(seed);
    (0..n).map(|_| (0..width).map(|_| rng.uniform_range(-0.9, 0.9)).collect()).collect()
}

#[test]
fn zero_parameters_give_zero_outputs() {
    for kind in CellKind::ALL {
        let p = RnnParams::zeroed(tiny(kind)).unwrap();
        let s = p.step(&p.initial_state(), &[0.3, -0.2, 0.1, 0.5, 0.9]).unwrap();
        assert!(s.output.iter().all(|v| *v == 0.0));
        assert!(s.state.iter().all(|v| *v == 0.0), "{kind:?}");
        let seq = p.sequence_forward(&random_frames(4, 5, 1), Feed::Teacher).unwrap();
        assert!(seq.outputs.iter().flatten().all(|v| *v == 0.0));
    }
}

#[test]
fn lstm_step_matches_hand_unrolled_gates() {
    let cfg = RnnConfig {
        hidden: 2,
        joints: 1,
        features: 1,
        ..RnnConfig::default()
    };
    let p = randomized(cfg, 4);
    let x = [0.4, -0.7];
    let prev = [0.1, -0.3, 0.5, 0.2];
    let s = p.step(&prev, &x).unwrap();
    let (wx, wh, b) = (p.backbone.get(3), p.backbone.get(4), p.backbone.get(5));
    let pre = |r: usize| b.get(r, 0) + wx.get(r, 0) * x[0] + wx.get(r, 1) * x[1] + wh.get(r, 0) * prev[0] + wh.get(r, 1) * prev[1];
    for j in 0..2 {
        let i = sigmoid(pre(j));
        let f = sigmoid(pre(2 + j));
        let g = pre(4 + j).tanh();
        let o = sigmoid(pre(6 + j));
        let c = f * prev[2 + j] + i * g;
        let h = o * c.tanh();
        assert!((s.state[j] - h).abs() <= 1e-12);
        assert!((s.state[2 + j] - c).abs() <= 1e-12);
    }
    let (wo, bo) = (p.backbone.get(1), p.backbone.get(2));
    for r in 0..2 {
        let y = (bo.get(r, 0) + wo.get(r, 0) * s.state[0] + wo.get(r, 1) * s.state[1]).tanh();
        assert!((s.output[r] - y).abs() <= 1e-12);
    }
}

#[test]
fn mtrnn_with_unit_tau_is_a_plain_recurrent_layer() {
    let cfg = RnnConfig {
        fast_tau: 1.0,
        ..tiny(CellKind::Mtrnn)
    };
    let p = randomized(cfg.clone(), 8);
    let frames = random_frames(6, cfg.io(), 9);
    let seq = p.sequence_forward(&frames, Feed::Teacher).unwrap();
    let bp = &p.backbone;
    let (nf, ns) = (cfg.fast, cfg.slow);
    let c0 = p.initial_state();
    let mut h: Vec<f64> = c0[..nf].iter().map(|v| v.tanh()).collect();
    let mut us = c0[nf..].to_vec();
    for (t, x) in frames.iter().enumerate() {
        let ys: Vec<f64> = us.iter().map(|v| v.tanh()).collect();
        let mut next = vec![0.0; nf];
        for (r, slot) in next.iter_mut().enumerate() {
            let mut z = bp.get(6).get(r, 0);
            z += (0..x.len()).map(|c| bp.get(3).get(r, c) * x[c]).sum::<f64>();
            z += (0..nf).map(|c| bp.get(4).get(r, c) * h[c]).sum::<f64>();
            z += (0..ns).map(|c| bp.get(5).get(r, c) * ys[c]).sum::<f64>();
            *slot = z.tanh();
        }
        let a = 1.0 / cfg.slow_tau;
        us = (0..ns)
            .map(|r| {
                let z = bp.get(9).get(r, 0)
                    + (0..nf).map(|c| bp.get(7).get(r, c) * h[c]).sum::<f64>()
                    + (0..ns).map(|c| bp.get(8).get(r, c) * ys[c]).sum::<f64>();
                (1.0 - a) * us[r] + a * z
            })
            .collect();
        h = next;
        for (a, b) in seq.contexts[t].iter().zip(&h) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn sequence_shapes_and_errors() {
    let p = randomized(tiny(CellKind::Gru), 2);
    let frames = random_frames(7, 5, 3);
    let seq = p.sequence_forward(&frames, Feed::Teacher).unwrap();
    assert_eq!(seq.contexts.len(), 7);
    assert_eq!(seq.states.len(), 7);
    assert!(seq.outputs.iter().flatten().all(|v| v.abs() < 1.0));
    assert!(p.sequence_forward(&[], Feed::Teacher).is_err());
    assert!(matches!(p.step(&p.initial_state(), &[0.0; 4]), Err(Error::Shape { .. })));
}

#[test]
fn closed_loop_depends_only_on_first_input() {
    let p = randomized(tiny(CellKind::Lstm), 5);
    let a = random_frames(6, 5, 1);
    let mut b = random_frames(6, 5, 2);
    b[0] = a[0].clone();
    let ra = p.sequence_forward(&a, Feed::ClosedLoop).unwrap();
    let rb = p.sequence_forward(&b, Feed::ClosedLoop).unwrap();
    assert_eq!(ra, rb);
    let tf = p.sequence_forward(&a, Feed::Teacher).unwrap();
    assert_ne!(ra.outputs[3], tf.outputs[3]);
}

#[test]
fn task_loss_hand_arithmetic() {
    let l = task_loss(&[vec![0.1, 0.2]], &[vec![0.0, 0.0]], &[0.3], &[0.0]).unwrap();
    assert!((l - 0.14).abs() < 1e-15);
    assert_eq!(task_loss(&[vec![0.5]], &[vec![0.5]], &[0.2, 0.1], &[0.2, 0.1]).unwrap(), 0.0);
    let with = task_loss(&[vec![0.4]], &[vec![0.1]], &[1.0, 2.0], &[0.5, 0.0]).unwrap();
    let without = task_loss(&[vec![0.4]], &[vec![0.1]], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
    assert!((with - without - 4.25).abs() < 1e-12);
    assert!(task_loss(&[vec![0.4]], &[], &[0.0], &[0.0]).is_err());
}

fn check_backbone_gradient(kind: CellKind) {
    let p = randomized(tiny(kind), 11);
    let frames = random_frames(6, p.config.io(), 12);
    let (inputs, targets) = (&frames[..5], &frames[1..]);
    let (loss, analytic) = sequence_loss_and_gradient(&p, inputs, targets).unwrap();
    let numeric = finite_difference_gradient(
        |bb| {
            let q = RnnParams {
                backbone: bb.clone(),
                ..p.clone()
            };
            let out = q.sequence_forward(inputs, Feed::Teacher)?;
            task_loss(&out.outputs, targets, &q.initial_state(), out.final_state())
        },
        &p.backbone,
        1e-6,
    )
    .unwrap();
    assert!(loss > 0.0);
    for (name, err) in max_relative_error(&analytic, &numeric, 1e-7) {
        assert!(err < 1e-4, "{kind:?} block {name}: {err}");
    }
}

#[test]
fn lstm_gradient_matches_finite_differences() {
    check_backbone_gradient(CellKind::Lstm);
}

#[test]
fn gru_gradient_matches_finite_differences() {
    check_backbone_gradient(CellKind::Gru);
}

#[test]
fn mtrnn_gradient_matches_finite_differences() {
    check_backbone_gradient(CellKind::Mtrnn);
}

fn recording(p: &RnnParams, joints: Vec<Vec<f64>>, seed: u64) -> TaskSequence {
    let features = random_frames(joints.len(), p.config.features, seed);
    TaskSequence {
        id: format!("r{seed}"),
        joints,
        features,
        rasters: Vec::new(),
    }
}

#[test]
fn head_gradient_matches_finite_differences() {
    let p = randomized(tiny(CellKind::Lstm), 21);
    let rec = recording(&p, random_frames(5, 3, 22), 23);
    let samples = collect_head_samples(&p, &[rec]).unwrap();
    let refs: Vec<&HeadSample> = samples.iter().collect();
    let (_, analytic) = head_loss_and_gradient(&p.head, 3, &refs).unwrap();
    let numeric = finite_difference_gradient(|h| Ok(head_loss_and_gradient(h, 3, &refs)?.0), &p.head, 1e-6).unwrap();
    for (name, err) in max_relative_error(&analytic, &numeric, 1e-7) {
        assert!(err < 1e-4, "{name}: {err}");
    }
}

#[test]
fn head_masks_steps_before_the_recording() {
    let p = randomized(tiny(CellKind::Gru), 3);
    let rec = recording(&p, random_frames(5, 3, 1), 2);
    let samples = collect_head_samples(&p, &[rec.clone()]).unwrap();
    assert_eq!(samples.len(), 5);
    assert!(samples[0].targets.iter().all(Option::is_none));
    assert_eq!(samples[2].targets[1].as_ref().unwrap(), &rec.joints[0]);
    assert!(samples[2].targets[2].is_none());
}

#[test]
fn head_training_freezes_backbone_and_fits_still_recording() {
    let p = randomized(tiny(CellKind::Mtrnn), 5);
    let still = vec![vec![0.2, -0.4, 0.6]; 30];
    let rec = TaskSequence {
        id: "still".into(),
        features: vec![vec![0.1, 0.3]; 30],
        joints: still,
        rasters: Vec::new(),
    };
    let samples = collect_head_samples(&p, &[rec]).unwrap();
    let cfg = HeadTrainConfig {
        epochs: 3000,
        batch_size: 8,
        ..HeadTrainConfig::default()
    };
    let out = train_previous_head(&p, &samples, &cfg, &mut SeededRng::new(1)).unwrap();
    assert_eq!(out.params.backbone, p.backbone);
    assert!(out.per_lag.iter().all(|l| *l < 1e-4), "{:?}", out.per_lag);
}

#[test]
fn predict_previous_shape_and_zero_head() {
    let p = RnnParams::init(RnnConfig::default(), &mut SeededRng::new(0)).unwrap();
    let ctx = vec![0.3; p.config.context_dim()];
    let prev = p.predict_previous(&ctx).unwrap();
    assert_eq!(prev.len(), 10);
    assert!(prev.iter().all(|r| r.len() == 4 && r.iter().all(|v| *v == 0.0)));
}

#[test]
fn zero_epochs_leave_params_unchanged() {
    let p = randomized(tiny(CellKind::Lstm), 1);
    let rec = recording(&p, random_frames(6, 3, 4), 5);
    let cfg = RnnTrainConfig {
        epochs: 0,
        ..RnnTrainConfig::default()
    };
    let out = train_task(p.clone(), &[rec], &cfg, None, &mut SeededRng::new(0)).unwrap();
    assert_eq!(out.params, p);
    assert_eq!(out.loss_curve.len(), 1);
}

#[test]
fn checkpoint_round_trip() {
    let p = randomized(tiny(CellKind::Gru), 6);
    let dir = tempfile::tempdir().unwrap();
    p.save(dir.path(), "m").unwrap();
    let q = RnnParams::load(
        p.config.clone(),
        &dir.path().join("m.backbone.bin"),
        Some(&dir.path().join("m.head.bin")),
    )
    .unwrap();
    assert_eq!(p, q);
    let wrong = RnnConfig {
        hidden: 6,
        ..p.config.clone()
    };
    assert!(RnnParams::load(wrong, &dir.path().join("m.backbone.bin"), None).is_err());
}

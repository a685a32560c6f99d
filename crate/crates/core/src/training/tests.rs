use super::*;
use crate::data::synth::generate_sequence;
use crate::data::CameraIntrinsics;

fn tiny_cfg(arch: Architecture) -> TrainConfig {
    TrainConfig {
        architecture: arch,
        batch_size: 3,
        steps: 6,
        window_k: 2,
        resolution: [16, 8],
        encoder_channels: vec![4, 8],
        checkpoint_every: 3,
        seed: 11,
        ..TrainConfig::default()
    }
}

fn tiny_frames(n: usize) -> Vec<FramePair> {
    let intr = CameraIntrinsics::centered(32, 16);
    generate_sequence(5, n, &intr)
        .unwrap()
        .iter()
        .map(|f| f.to_pair(60.0, Some((16, 8))).unwrap())
        .collect()
}

#[test]
fn zero_learning_rate_keeps_weights() {
    for arch in [Architecture::DoubleSiamese, Architecture::CommonEdges] {
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..tiny_cfg(arch)
        };
        let mut t = Trainer::new(cfg, tiny_frames(8), &CannyConfig::default()).unwrap();
        let before = t.state().clone();
        let batch = t.batch_for_step(0).unwrap();
        let loss = t.train_step(&batch).unwrap();
        assert!(loss.is_finite() && loss > 0.0);
        assert_eq!(t.state().image, before.image);
        assert_eq!(t.state().depth, before.depth);
        assert_eq!(t.state().history, vec![loss]);
    }
}

#[test]
fn identical_config_gives_identical_trajectory() {
    let run = || {
        let mut t = Trainer::new(
            tiny_cfg(Architecture::DoubleSiamese),
            tiny_frames(8),
            &CannyConfig::default(),
        )
        .unwrap();
        t.run(|_| Ok(())).unwrap();
        t.into_state()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.history.len(), 6);
    assert_eq!(a, b);
}

#[test]
fn zero_steps_returns_initial_weights() {
    let cfg = TrainConfig {
        steps: 0,
        ..tiny_cfg(Architecture::CommonEdges)
    };
    let state = train_loop(&cfg, tiny_frames(8), &CannyConfig::default()).unwrap();
    assert!(state.history.is_empty());
    assert_eq!(state, TrainState::initial(&cfg).unwrap());
}

#[test]
fn resume_matches_uninterrupted_run() {
    for arch in [Architecture::DoubleSiamese, Architecture::CommonEdges] {
        let cfg = tiny_cfg(arch);
        let mut full = Trainer::new(cfg.clone(), tiny_frames(8), &CannyConfig::default()).unwrap();
        let mut saved = Vec::new();
        full.run(|s| {
            saved.push(s.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(saved.len(), 2);

        let mut resumed = Trainer::resume(cfg, tiny_frames(8), &CannyConfig::default(), saved[0].clone()).unwrap();
        resumed.run(|_| Ok(())).unwrap();
        assert_eq!(resumed.state(), full.state());
    }
}

#[test]
fn checkpoints_fire_periodically_and_at_end() {
    let cfg = TrainConfig {
        steps: 7,
        ..tiny_cfg(Architecture::CommonEdges)
    };
    let mut t = Trainer::new(cfg, tiny_frames(8), &CannyConfig::default()).unwrap();
    let mut at = Vec::new();
    t.run(|s| {
        at.push(s.step());
        Ok(())
    })
    .unwrap();
    assert_eq!(at, vec![3, 6, 7]);
}

#[test]
fn non_finite_weights_abort_with_step_index() {
    let cfg = tiny_cfg(Architecture::CommonEdges);
    let mut t = Trainer::new(cfg, tiny_frames(8), &CannyConfig::default()).unwrap();
    let b0 = t.batch_for_step(0).unwrap();
    t.train_step(&b0).unwrap();
    t.state.image.layers[0].bias.data_mut()[0] = f32::NAN;
    let b1 = t.batch_for_step(1).unwrap();
    match t.train_step(&b1) {
        Err(Error::NonFinite { step, detail }) => {
            assert_eq!(step, 1);
            assert!(detail.contains("frame"), "{detail}");
        }
        other => panic!("expected NonFinite, got {other:?}"),
    }
    assert_eq!(t.state().step(), 1);
}

#[test]
fn empty_batch_and_small_dataset_are_rejected() {
    let cfg = tiny_cfg(Architecture::DoubleSiamese);
    assert!(Trainer::new(cfg.clone(), tiny_frames(5), &CannyConfig::default()).is_err());
    let mut t = Trainer::new(cfg, tiny_frames(8), &CannyConfig::default()).unwrap();
    assert!(t.train_step(&[]).is_err());
}

#[test]
fn config_problems_are_all_listed() {
    let cfg = TrainConfig {
        batch_size: 0,
        learning_rate: f64::NAN,
        resolution: [15, 8],
        ..TrainConfig::default()
    };
    let problems = cfg.problems();
    assert_eq!(problems.len(), 3, "{problems:?}");
    assert!(matches!(cfg.validate(), Err(Error::Config(p)) if p.len() == 3));
}

#[test]
fn config_rejects_unknown_keys() {
    let err = serde_json::from_str::<TrainConfig>(r#"{"stpes": 3}"#).unwrap_err();
    assert!(err.to_string().contains("stpes"));
    let cfg: TrainConfig = serde_json::from_str(r#"{"steps": 3, "architecture": "common_edges"}"#).unwrap();
    assert_eq!(cfg.steps, 3);
    assert_eq!(cfg.architecture, Architecture::CommonEdges);
}

#[test]
fn discrepancy_metrics_match_direct_evaluation() {
    let cfg = tiny_cfg(Architecture::CommonEdges);
    let t = Trainer::new(cfg, tiny_frames(8), &CannyConfig::default()).unwrap();
    let s = t.state();
    let frames = t.frames();
    let mut cross = 0.0;
    let mut edge = 0.0;
    for (f, e) in frames.iter().zip(t.edges()) {
        let a = s.image.forward(&f.gray).unwrap();
        let b = s.depth.forward(&f.depth_gray).unwrap();
        cross += a.mean_abs_diff(&b).unwrap();
        edge += a.mean_abs_diff(e).unwrap();
    }
    let n = frames.len() as f64;
    assert!((cross_modal_discrepancy(&s.image, &s.depth, frames).unwrap() - cross / n).abs() < 1e-12);
    assert!((edge_discrepancy(&s.image, frames, t.edges()).unwrap() - edge / n).abs() < 1e-12);
}

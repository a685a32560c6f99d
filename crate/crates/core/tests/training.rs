use crbridge::canny::CannyConfig;
use crbridge::data::synth::generate_sequence;
use crbridge::data::CameraIntrinsics;
use crbridge::training::{train_loop, TrainConfig};

fn window_ratio(history: &[f64]) -> f64 {
    let first: f64 = history[..10].iter().sum();
    let last: f64 = history[history.len() - 10..].iter().sum();
    last / first
}

#[test]
fn short_run_on_fixed_set_reduces_loss() {
    let frames: Vec<_> = generate_sequence(9, 20, &CameraIntrinsics::centered(64, 32))
        .unwrap()
        .iter()
        .map(|f| f.to_pair(60.0, None).unwrap())
        .collect();
    let cfg = TrainConfig {
        steps: 200,
        learning_rate: 1e-3,
        resolution: [64, 32],
        checkpoint_every: 0,
        ..TrainConfig::default()
    };
    let state = train_loop(&cfg, frames, &CannyConfig::default()).unwrap();
    assert_eq!(state.history.len(), 200);
    let ratio = window_ratio(&state.history);
    assert!(ratio < 0.6, "final/first 10-step mean loss ratio {ratio:.3}");
}

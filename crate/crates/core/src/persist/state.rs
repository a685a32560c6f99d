//! Resumable training state: config echo, both generators, optimizer
//! moments and the loss history, sealed with a CRC-32 like checkpoints.

use std::fs;
use std::path::Path;

use super::binary::{seal, unseal, Reader, Writer};
use super::checkpoint::{decode_checkpoint, encode_checkpoint, Role};
use super::write_atomic;
use crate::autodiff::{OptimizerKind, OptimizerState};
use crate::error::{Error, Result};
use crate::training::{TrainConfig, TrainState};

pub const STATE_MAGIC: &[u8; 4] = b"CRS1";
const STATE_VERSION: usize = 1;

fn write_opt(w: &mut Writer, opt: &OptimizerState<f32>) {
    w.u8(match opt.kind {
        OptimizerKind::Sgd => 0,
        OptimizerKind::Adam => 1,
    });
    w.f64s(&[opt.learning_rate as f64]);
    w.u64(opt.step);
    for moments in [&opt.first_moment, &opt.second_moment] {
        w.u32(moments.len());
        for (i, t) in moments.iter().enumerate() {
            w.tensor(&i.to_string(), t);
        }
    }
}

fn read_opt(r: &mut Reader) -> Result<OptimizerState<f32>> {
    let kind = match r.u8()? {
        0 => OptimizerKind::Sgd,
        1 => OptimizerKind::Adam,
        t => return Err(r.corrupt(format!("unknown optimizer tag {t}"))),
    };
    let lr = match r.f64s()?.as_slice() {
        [lr] => *lr as f32,
        _ => return Err(r.corrupt("learning rate record")),
    };
    let mut opt = OptimizerState::new(kind, lr);
    opt.step = r.u64()?;
    for slot in 0..2 {
        let n = r.u32()?;
        let ts = (0..n).map(|_| r.tensor().map(|(_, t)| t)).collect::<Result<Vec<_>>>()?;
        if slot == 0 {
            opt.first_moment = ts;
        } else {
            opt.second_moment = ts;
        }
    }
    Ok(opt)
}

pub fn encode_state(cfg: &TrainConfig, state: &TrainState) -> Vec<u8> {
    let mut w = Writer(STATE_MAGIC.to_vec());
    w.u32(STATE_VERSION);
    w.bytes(serde_json::to_string(cfg).expect("config serializes").as_bytes());
    w.bytes(&encode_checkpoint(Role::Image, &state.image));
    w.bytes(&encode_checkpoint(Role::Depth, &state.depth));
    write_opt(&mut w, &state.image_opt);
    write_opt(&mut w, &state.depth_opt);
    w.f64s(&state.history);
    seal(w.0)
}

pub fn decode_state(bytes: &[u8], path: &Path) -> Result<(TrainConfig, TrainState)> {
    let body = unseal(bytes, path)?;
    let mut r = Reader::new(body, path);
    if r.take(4)? != STATE_MAGIC {
        return Err(r.corrupt("bad magic"));
    }
    let version = r.u32()?;
    if version != STATE_VERSION {
        return Err(r.corrupt(format!("unsupported version {version}")));
    }
    let cfg: TrainConfig = serde_json::from_slice(r.bytes()?).map_err(|e| r.corrupt(format!("config: {e}")))?;
    let (_, image) = decode_checkpoint(r.bytes()?, path)?;
    let (_, depth) = decode_checkpoint(r.bytes()?, path)?;
    let image_opt = read_opt(&mut r)?;
    let depth_opt = read_opt(&mut r)?;
    let history = r.f64s()?;
    r.finish()?;
    Ok((
        cfg,
        TrainState {
            image,
            depth,
            image_opt,
            depth_opt,
            history,
        },
    ))
}

pub fn save_state(path: &Path, cfg: &TrainConfig, state: &TrainState) -> Result<()> {
    write_atomic(path, &encode_state(cfg, state))
}

pub fn load_state(path: &Path) -> Result<(TrainConfig, TrainState)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_state(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canny::CannyConfig;
    use crate::data::synth::generate_sequence;
    use crate::data::CameraIntrinsics;
    use crate::training::{Architecture, Trainer};

    #[test]
    fn state_round_trips_after_training() {
        let cfg = TrainConfig {
            architecture: Architecture::CommonEdges,
            steps: 3,
            batch_size: 2,
            resolution: [16, 8],
            encoder_channels: vec![2, 4],
            ..TrainConfig::default()
        };
        let frames = generate_sequence(1, 4, &CameraIntrinsics::centered(16, 8))
            .unwrap()
            .iter()
            .map(|f| f.to_pair(60.0, None).unwrap())
            .collect();
        let mut t = Trainer::new(cfg.clone(), frames, &CannyConfig::default()).unwrap();
        t.run(|_| Ok(())).unwrap();
        let bytes = encode_state(&cfg, t.state());
        let (cfg2, state2) = decode_state(&bytes, Path::new("s")).unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(&state2, t.state());
        assert_eq!(encode_state(&cfg2, &state2), bytes);

        let mut bad = bytes.clone();
        bad[bytes.len() / 2] ^= 0x10;
        assert!(matches!(decode_state(&bad, Path::new("s")), Err(Error::Corrupt { .. })));
    }
}

//! Generator weight files.
//!
//! Layout (little-endian): magic `CRW1`, u32 version, u8 role, u32-prefixed
//! JSON generator config, u32 tensor count, then per tensor a u32-prefixed
//! name, u32 rank, rank × u32 dims and the raw f32 values. A CRC-32 of all
//! preceding bytes closes the file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binary::{corrupt, seal, unseal, Reader, Writer};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::generator::{GeneratorConfig, GeneratorWeights, Layer};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CRW1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Image,
    Depth,
}

impl Role {
    fn tag(self) -> u8 {
        match self {
            Role::Image => 0,
            Role::Depth => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Role::Image => "image",
            Role::Depth => "depth",
        }
    }
}

pub fn encode_checkpoint(role: Role, weights: &GeneratorWeights<f32>) -> Vec<u8> {
    let mut w = Writer(CHECKPOINT_MAGIC.to_vec());
    w.u32(CHECKPOINT_VERSION as usize);
    w.u8(role.tag());
    w.bytes(
        serde_json::to_string(&weights.config)
            .expect("config serializes")
            .as_bytes(),
    );
    w.u32(2 * weights.layers.len());
    for l in &weights.layers {
        w.tensor(&format!("{}.kernels", l.name), &l.kernels);
        w.tensor(&format!("{}.bias", l.name), &l.bias);
    }
    seal(w.0)
}

/// `path` only labels errors.
pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<(Role, GeneratorWeights<f32>)> {
    let body = unseal(bytes, path)?;
    let mut r = Reader::new(body, path);
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(r.corrupt("bad magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(r.corrupt(format!("unsupported version {version}")));
    }
    let role = match r.u8()? {
        0 => Role::Image,
        1 => Role::Depth,
        t => return Err(r.corrupt(format!("unknown role tag {t}"))),
    };
    let config: GeneratorConfig = serde_json::from_slice(r.bytes()?).map_err(|e| r.corrupt(format!("config: {e}")))?;
    let count = r.u32()?;
    if count % 2 != 0 {
        return Err(r.corrupt(format!("odd tensor count {count}")));
    }
    let mut layers = Vec::with_capacity(count / 2);
    for _ in 0..count / 2 {
        let (kname, kernels) = r.tensor()?;
        let (bname, bias) = r.tensor()?;
        let name = kname
            .strip_suffix(".kernels")
            .filter(|n| bname.strip_suffix(".bias") == Some(*n))
            .ok_or_else(|| r.corrupt(format!("unexpected tensor names {kname}, {bname}")))?;
        layers.push(Layer {
            name: name.to_string(),
            kernels,
            bias,
        });
    }
    r.finish()?;
    let weights = GeneratorWeights { config, layers };
    weights.validate().map_err(|e| corrupt(path, e.to_string()))?;
    Ok((role, weights))
}

pub fn save_checkpoint(path: &Path, role: Role, weights: &GeneratorWeights<f32>) -> Result<()> {
    write_atomic(path, &encode_checkpoint(role, weights))
}

pub fn load_checkpoint(path: &Path) -> Result<(Role, GeneratorWeights<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::build_generator;

    fn weights() -> GeneratorWeights<f32> {
        build_generator(&GeneratorConfig {
            input_width: 16,
            input_height: 8,
            encoder_channels: vec![2, 4],
            seed: 3,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_every_bit() {
        let mut w = weights();
        w.layers[1].bias.data_mut()[0] = -0.0;
        w.layers[2].kernels.data_mut()[3] = f32::from_bits(0x0000_0001);
        let bytes = encode_checkpoint(Role::Depth, &w);
        assert_eq!(&bytes[..4], b"CRW1");
        let (role, back) = decode_checkpoint(&bytes, Path::new("x")).unwrap();
        assert_eq!(role, Role::Depth);
        let bits = |w: &GeneratorWeights<f32>| -> Vec<u32> {
            w.params()
                .iter()
                .flat_map(|t| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                .collect()
        };
        assert_eq!(bits(&back), bits(&w));
        assert_eq!(back.config, w.config);
        assert_eq!(encode_checkpoint(Role::Depth, &back), bytes);
    }

    #[test]
    fn every_single_bit_flip_is_detected() {
        let bytes = encode_checkpoint(Role::Image, &weights());
        for i in 0..bytes.len() {
            for bit in [0, 3, 7] {
                let mut b = bytes.clone();
                b[i] ^= 1 << bit;
                assert!(
                    matches!(decode_checkpoint(&b, Path::new("x")), Err(Error::Corrupt { .. })),
                    "flip at byte {i} bit {bit} went unnoticed"
                );
            }
        }
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = encode_checkpoint(Role::Image, &weights());
        for n in [0, 3, 4, 20, bytes.len() - 1] {
            assert!(decode_checkpoint(&bytes[..n], Path::new("x")).is_err());
        }
    }

    #[test]
    fn consistent_but_mismatched_layers_are_rejected() {
        let mut w = weights();
        w.layers.pop();
        // CRC-valid, but the layer list disagrees with the config.
        let bytes = encode_checkpoint(Role::Image, &w);
        assert!(matches!(
            decode_checkpoint(&bytes, Path::new("x")),
            Err(Error::Corrupt { .. })
        ));
    }
}

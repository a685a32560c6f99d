//! Dataset directories: `frames/NNNNNN.gray.pgm`, `frames/NNNNNN.depth.pgm`
//! and a `manifest.json` describing how the frames were produced.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::SceneConfig;
use super::{pgm, CameraIntrinsics, Frame};
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const FRAMES_DIR: &str = "frames";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub frames: usize,
    pub intrinsics: CameraIntrinsics,
    pub scene: SceneConfig,
}

pub fn gray_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(FRAMES_DIR).join(format!("{index:06}.gray.pgm"))
}

pub fn depth_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(FRAMES_DIR).join(format!("{index:06}.depth.pgm"))
}

pub fn write_dataset(dir: &Path, manifest: &Manifest, frames: &[Frame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if !frames.is_empty() {
        let frames_dir = dir.join(FRAMES_DIR);
        fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    }
    for f in frames {
        pgm::write_gray(&gray_path(dir, f.index), &f.gray)?;
        pgm::write_depth(&depth_path(dir, f.index), &f.depth)?;
    }
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST);
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| Error::Corrupt {
        path,
        reason: e.to_string(),
    })
}

/// Loads every frame that has both rasters, ordered by index. Works for any
/// directory following the layout, with or without a manifest.
pub fn load_frames(dir: &Path) -> Result<Vec<Frame>> {
    let frames_dir = dir.join(FRAMES_DIR);
    let entries = fs::read_dir(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    let mut indices = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&frames_dir, e))?;
        let name = entry.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".gray.pgm")) else {
            continue;
        };
        if let Ok(i) = stem.parse::<usize>() {
            indices.push(i);
        }
    }
    indices.sort_unstable();
    indices
        .into_iter()
        .map(|index| {
            let gray = pgm::read_gray(&gray_path(dir, index))?;
            let depth = pgm::read_depth(&depth_path(dir, index))?;
            if gray.dims() != depth.dims() {
                return Err(Error::shape(format!(
                    "frame {index}: gray {:?} vs depth {:?}",
                    gray.dims(),
                    depth.dims()
                )));
            }
            Ok(Frame { index, gray, depth })
        })
        .collect()
}

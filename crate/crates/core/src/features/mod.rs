//! Oriented FAST / rotated BRIEF matching and the pairwise evaluation built
//! on it.

mod describe;
mod detect;
mod eval;
mod homography;
mod matching;
mod pattern;

pub use describe::{box_smooth, describe, describe_all, PATCH_RADIUS};
pub use detect::{detect_keypoints, orientation, ORIENTATION_RADIUS};
pub use eval::{evaluate_pairs, report_csv, EvalConfig, EvalMode, EvalReport, PairResult, REPORT_HEADER};
pub use homography::{
    estimate_homography_ransac, fit_homography, reprojection_error, symmetric_transfer_error, Homography, RansacConfig,
    RansacResult,
};
pub use matching::match_descriptors;
pub use pattern::PATTERN;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    pub response: f32,
    /// Radians, counter-clockwise from +x in image coordinates.
    pub orientation: f32,
}

impl Keypoint {
    pub fn position(&self) -> [f64; 2] {
        [self.x as f64, self.y as f64]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Descriptor(pub [u64; 4]);

impl Descriptor {
    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    pub distance: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbConfig {
    pub fast_threshold: f32,
    pub max_keypoints: usize,
    pub margin: usize,
    pub max_hamming: u32,
    pub ransac_iterations: usize,
    pub inlier_px: f64,
    pub seed: u64,
}

impl Default for OrbConfig {
    fn default() -> Self {
        OrbConfig {
            fast_threshold: 0.08,
            max_keypoints: 500,
            margin: 16,
            max_hamming: 80,
            ransac_iterations: 2000,
            inlier_px: 3.0,
            seed: 0,
        }
    }
}

impl OrbConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.fast_threshold > 0.0 && self.fast_threshold < 1.0) {
            out.push(format!(
                "fast_threshold must lie in (0, 1), got {}",
                self.fast_threshold
            ));
        }
        if self.margin < PATCH_RADIUS {
            out.push(format!("margin must be at least {PATCH_RADIUS}, got {}", self.margin));
        }
        if self.max_hamming > 256 {
            out.push(format!("max_hamming must be at most 256, got {}", self.max_hamming));
        }
        if self.ransac_iterations == 0 {
            out.push("ransac_iterations must be positive".into());
        }
        if !(self.inlier_px > 0.0 && self.inlier_px.is_finite()) {
            out.push(format!("inlier_px must be positive, got {}", self.inlier_px));
        }
        out
    }

    pub fn ransac(&self) -> RansacConfig {
        RansacConfig {
            iterations: self.ransac_iterations,
            inlier_px: self.inlier_px,
            seed: self.seed,
        }
    }
}

/// Keypoints and their descriptors for one image.
pub fn extract(img: &GrayImage, cfg: &OrbConfig) -> Result<(Vec<Keypoint>, Vec<Descriptor>)> {
    let kps = detect_keypoints(img, cfg.fast_threshold, cfg.margin, cfg.max_keypoints);
    let descs = describe_all(img, &kps)?;
    Ok((kps, descs))
}

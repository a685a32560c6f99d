//! Paired grayscale/depth frames: projection, preprocessing, pair sampling,
//! synthetic scenes and on-disk datasets.

pub mod dataset;
pub mod pgm;
mod preprocess;
mod projection;
mod sampler;
pub mod synth;

pub use preprocess::{chebyshev_score, normalize_depth, resize_bilinear, to_grayscale};
pub use projection::{project_point_cloud, CameraIntrinsics, PointCloud};
pub use sampler::{sample_siamese_pair, DeltaPolarity, SamplerConfig, SiamesePair};

use crate::error::{Error, Result};
use crate::image::{DepthImage, GrayImage};

/// One time step as stored on disk: camera intensity plus projected depth.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub gray: GrayImage,
    pub depth: DepthImage,
}

/// Training input: grayscale image and depth normalized into `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePair {
    pub index: usize,
    pub gray: GrayImage,
    pub depth_gray: GrayImage,
}

impl FramePair {
    pub fn new(index: usize, gray: GrayImage, depth_gray: GrayImage) -> Result<Self> {
        if gray.dims() != depth_gray.dims() {
            return Err(Error::shape(format!(
                "frame {index}: gray is {:?} but depth is {:?}",
                gray.dims(),
                depth_gray.dims()
            )));
        }
        Ok(FramePair {
            index,
            gray,
            depth_gray,
        })
    }
}

impl Frame {
    /// Normalizes depth by `max_range` and resizes both rasters to
    /// `size` when given.
    pub fn to_pair(&self, max_range: f64, size: Option<(usize, usize)>) -> Result<FramePair> {
        let mut gray = self.gray.clone();
        let mut depth_gray = normalize_depth(&self.depth, max_range)?;
        if let Some((w, h)) = size {
            if gray.dims() != (w, h) {
                gray = resize_bilinear(&gray, w, h)?;
                depth_gray = resize_bilinear(&depth_gray, w, h)?;
            }
        }
        FramePair::new(self.index, gray, depth_gray)
    }
}

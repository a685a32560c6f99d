//! Maps camera grayscale images and LiDAR depth images into a shared
//! "common representation" (CR) so that classic feature matching works
//! across the two sensors.
//!
//! Two training schemes are provided. The double Siamese scheme pulls the
//! image and depth CRs of a frame together while making CR distances between
//! frames follow the distance of their grayscale images. The common edges
//! scheme pulls both CRs towards the Canny edge map of the camera image.
//! Generators are small convolutional encoder/decoders trained with the
//! reverse-mode engine in [`autodiff`]. The [`features`] module scores CRs with
//! an ORB-style detector, descriptor, matcher and RANSAC homography.

pub mod autodiff;
pub mod canny;
pub mod data;
pub mod error;
pub mod features;
pub mod generator;
pub mod image;
pub mod persist;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use image::{DepthImage, GrayImage};
pub use tensor::{Real, Tensor};

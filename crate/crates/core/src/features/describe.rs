//! Steered binary descriptor on a 5×5 box-smoothed image.

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::pattern::PATTERN;
use super::{Descriptor, Keypoint};

/// Largest pattern offset after rotation.
pub const PATCH_RADIUS: usize = 15;

/// 5×5 mean filter with clamped borders.
pub fn box_smooth(img: &GrayImage) -> Vec<f32> {
    let (w, h) = img.dims();
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0f32;
            for dy in -2isize..=2 {
                for dx in -2isize..=2 {
                    s += img.get_clamped(x as isize + dx, y as isize + dy);
                }
            }
            out[y * w + x] = s / 25.0;
        }
    }
    out
}

fn check_margin(w: usize, h: usize, kp: &Keypoint) -> Result<(isize, isize)> {
    let (x, y) = (kp.x.round() as isize, kp.y.round() as isize);
    let r = PATCH_RADIUS as isize;
    if x < r || y < r || x + r >= w as isize || y + r >= h as isize {
        return Err(Error::invalid(format!(
            "keypoint ({}, {}) is closer than {PATCH_RADIUS} px to the border of a {w}x{h} image",
            kp.x, kp.y
        )));
    }
    Ok((x, y))
}

/// Bit `i` is set when the first point of pair `i` is strictly darker than
/// the second, after rotating the pattern by the keypoint orientation.
fn describe_smoothed(smooth: &[f32], w: usize, h: usize, kp: &Keypoint) -> Result<Descriptor> {
    let (x, y) = check_margin(w, h, kp)?;
    let (s, c) = (kp.orientation as f64).sin_cos();
    let at = |px: i8, py: i8| {
        let (px, py) = (px as f64, py as f64);
        let u = x + (c * px - s * py).round() as isize;
        let v = y + (s * px + c * py).round() as isize;
        smooth[v as usize * w + u as usize]
    };
    let mut bits = [0u64; 4];
    for (i, p) in PATTERN.iter().enumerate() {
        if at(p[0], p[1]) < at(p[2], p[3]) {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    Ok(Descriptor(bits))
}

pub fn describe(img: &GrayImage, kp: &Keypoint) -> Result<Descriptor> {
    let (w, h) = img.dims();
    check_margin(w, h, kp)?;
    describe_smoothed(&box_smooth(img), w, h, kp)
}

/// Describes every keypoint, smoothing the image once.
pub fn describe_all(img: &GrayImage, kps: &[Keypoint]) -> Result<Vec<Descriptor>> {
    let (w, h) = img.dims();
    let smooth = box_smooth(img);
    kps.iter().map(|kp| describe_smoothed(&smooth, w, h, kp)).collect()
}

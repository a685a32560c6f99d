use crate::error::{Error, Result};
use crate::image::{DepthImage, GrayImage};

/// `clamp(depth / max_range, 0, 1)`; pixels without a return stay 0.
pub fn normalize_depth(depth: &DepthImage, max_range: f64) -> Result<GrayImage> {
    if !(max_range > 0.0 && max_range.is_finite()) {
        return Err(Error::invalid(format!("max_range must be positive, got {max_range}")));
    }
    let data = depth
        .data()
        .iter()
        .map(|&d| (d / max_range).clamp(0.0, 1.0) as f32)
        .collect();
    GrayImage::new(depth.width(), depth.height(), data)
}

/// ITU-R BT.601 luma.
pub fn to_grayscale(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    if r.dims() != g.dims() || r.dims() != b.dims() {
        return Err(Error::shape(format!(
            "color planes differ in size: {:?} {:?} {:?}",
            r.dims(),
            g.dims(),
            b.dims()
        )));
    }
    let data = r
        .data()
        .iter()
        .zip(g.data())
        .zip(b.data())
        .map(|((&r, &g), &b)| (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0))
        .collect();
    GrayImage::new(r.width(), r.height(), data)
}

/// Bilinear resampling with pixel-center alignment and border clamping.
pub fn resize_bilinear(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "target size must be positive, got {width}x{height}"
        )));
    }
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    let axis = |i: usize, scale: f64, n: usize| -> (usize, usize, f32) {
        let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, (s - i0 as f64) as f32)
    };
    let cols: Vec<_> = (0..width).map(|x| axis(x, sx, img.width())).collect();
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let (y0, y1, fy) = axis(y, sy, img.height());
        for &(x0, x1, fx) in &cols {
            let top = lerp(img.get(x0, y0), img.get(x1, y0), fx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), fx);
            data.push(lerp(top, bottom, fy).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(width, height, data)
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// Chebyshev (L∞) distance between two images: the largest per-pixel
/// absolute difference. 0 for identical images.
pub fn chebyshev_score(a: &GrayImage, b: &GrayImage) -> Result<f32> {
    if a.dims() != b.dims() {
        return Err(Error::shape(format!(
            "chebyshev_score needs equal sizes, got {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f32::max))
}

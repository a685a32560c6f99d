//! Canny edge detection with pinned stage conventions so edge maps are
//! reproducible bit for bit:
//!
//! 1. separable Gaussian blur, radius `⌈3σ⌉`, border-clamped;
//! 2. Sobel 3×3 gradients scaled by 1/8 (intensity change per pixel);
//! 3. magnitude `√(gx² + gy²)` and direction quantized to 0°/45°/90°/135°;
//! 4. non-maximum suppression along the quantized direction;
//! 5. double-threshold hysteresis over 8-connected neighborhoods.
//!
//! Each stage sums mirrored taps pairwise, so a left-right mirrored input
//! produces the mirrored magnitude field exactly.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CannyConfig {
    pub sigma: f32,
    pub low_threshold: f32,
    pub high_threshold: f32,
}

impl Default for CannyConfig {
    fn default() -> Self {
        CannyConfig {
            sigma: 1.4,
            low_threshold: 0.05,
            high_threshold: 0.15,
        }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.low_threshold > 0.0 && self.low_threshold < self.high_threshold) {
            return Err(Error::invalid(format!(
                "thresholds must satisfy 0 < low < high, got low {} high {}",
                self.low_threshold, self.high_threshold
            )));
        }
        Ok(())
    }
}

/// `tan(22.5°)`, the boundary between axis-aligned and diagonal bins.
const TAN_22_5: f32 = 0.414_213_57;

/// Normalized 1D Gaussian taps `w[0..=r]`, center first.
pub fn gaussian_taps(sigma: f32) -> Vec<f32> {
    let r = (3.0 * sigma).ceil() as usize;
    let raw: Vec<f32> = (0..=r)
        .map(|i| (-((i * i) as f32) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = raw[0] + 2.0 * raw[1..].iter().sum::<f32>();
    raw.iter().map(|w| w / total).collect()
}

pub fn gaussian_blur(img: &GrayImage, sigma: f32) -> Vec<f32> {
    let taps = gaussian_taps(sigma);
    let (w, h) = img.dims();
    let src = img.data();
    let clamp_x = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let clamp_y = |y: isize| y.clamp(0, h as isize - 1) as usize;

    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = taps[0] * row[x];
            for (i, &t) in taps.iter().enumerate().skip(1) {
                let i = i as isize;
                acc += t * (row[clamp_x(x as isize - i)] + row[clamp_x(x as isize + i)]);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = taps[0] * tmp[y * w + x];
            for (i, &t) in taps.iter().enumerate().skip(1) {
                let i = i as isize;
                acc += t * (tmp[clamp_y(y as isize - i) * w + x] + tmp[clamp_y(y as isize + i) * w + x]);
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Sobel gradients (x to the right, y downward), border-clamped, scaled by 1/8.
pub fn sobel(field: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let at = |x: isize, y: isize| field[y.clamp(0, h as isize - 1) as usize * w + x.clamp(0, w as isize - 1) as usize];
    let mut gx = vec![0.0f32; w * h];
    let mut gy = vec![0.0f32; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = (at(x + 1, y - 1) - at(x - 1, y - 1))
                + 2.0 * (at(x + 1, y) - at(x - 1, y))
                + (at(x + 1, y + 1) - at(x - 1, y + 1));
            let below = (at(x - 1, y + 1) + at(x + 1, y + 1)) + 2.0 * at(x, y + 1);
            let above = (at(x - 1, y - 1) + at(x + 1, y - 1)) + 2.0 * at(x, y - 1);
            let i = y as usize * w + x as usize;
            gx[i] = dx / 8.0;
            gy[i] = (below - above) / 8.0;
        }
    }
    (gx, gy)
}

/// Neighbor offsets `(before, after)` across the edge for a gradient.
#[inline]
fn nms_offsets(gx: f32, gy: f32) -> ((isize, isize), (isize, isize)) {
    let (ax, ay) = (gx.abs(), gy.abs());
    if ay <= TAN_22_5 * ax {
        ((-1, 0), (1, 0))
    } else if ax <= TAN_22_5 * ay {
        ((0, -1), (0, 1))
    } else if (gx > 0.0) == (gy > 0.0) {
        ((-1, -1), (1, 1))
    } else {
        ((1, -1), (-1, 1))
    }
}

/// Gradient magnitude after non-maximum suppression. A pixel survives when
/// it is strictly above its "before" neighbor and not below its "after"
/// neighbor; out-of-image neighbors count as 0.
pub fn suppressed_magnitude(blurred: &[f32], w: usize, h: usize) -> Vec<f32> {
    let (gx, gy) = sobel(blurred, w, h);
    let mag: Vec<f32> = gx.iter().zip(&gy).map(|(&a, &b)| (a * a + b * b).sqrt()).collect();
    let get = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let ((bx, by), (ax, ay)) = nms_offsets(gx[i], gy[i]);
            let (xi, yi) = (x as isize, y as isize);
            if m > get(xi + bx, yi + by) && m >= get(xi + ax, yi + ay) {
                out[i] = m;
            }
        }
    }
    out
}

/// Keeps strong pixels (`≥ high`) and weak pixels (`≥ low`) that connect to
/// a strong one through 8-connected weak/strong pixels.
pub fn hysteresis(mag: &[f32], w: usize, h: usize, low: f32, high: f32) -> Vec<bool> {
    let mut edge = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in mag.iter().enumerate() {
        if m >= high {
            edge[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edge[j] && mag[j] >= low {
                    edge[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    edge
}

/// Binary edge map: 1 on edges, 0 elsewhere.
pub fn canny(img: &GrayImage, cfg: &CannyConfig) -> Result<GrayImage> {
    cfg.validate()?;
    let (w, h) = img.dims();
    let blurred = gaussian_blur(img, cfg.sigma);
    let mag = suppressed_magnitude(&blurred, w, h);
    let edges = hysteresis(&mag, w, h, cfg.low_threshold, cfg.high_threshold);
    GrayImage::new(w, h, edges.into_iter().map(|e| if e { 1.0 } else { 0.0 }).collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_image(seed: u64, w: usize, h: usize) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Blocky noise so the detector finds real structure.
        let cells: Vec<f32> = (0..64).map(|_| rng.random()).collect();
        GrayImage::from_fn(w, h, |x, y| {
            let c = cells[(y / 4 % 8) * 8 + x / 4 % 8];
            (c + 0.1 * rng_free_noise(x, y)).clamp(0.0, 1.0)
        })
    }

    fn rng_free_noise(x: usize, y: usize) -> f32 {
        ((x * 7919 + y * 104729) % 97) as f32 / 97.0
    }

    #[test]
    fn constant_image_has_no_edges() {
        for v in [0.0, 0.3, 1.0] {
            let e = canny(&GrayImage::filled(16, 12, v), &CannyConfig::default()).unwrap();
            assert!(e.data().iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn vertical_step_gives_single_column() {
        let step = GrayImage::from_fn(8, 8, |x, _| if x >= 4 { 1.0 } else { 0.0 });
        let e = canny(&step, &CannyConfig::default()).unwrap();
        let cols: Vec<usize> = (0..8).filter(|&x| (0..8).any(|y| e.get(x, y) == 1.0)).collect();
        assert_eq!(cols.len(), 1, "{cols:?}");
        let c = cols[0];
        assert!(c == 3 || c == 4);
        assert!((0..8).all(|y| e.get(c, y) == 1.0));

        // The surviving column carries the maximal magnitude of its row.
        let blurred = gaussian_blur(&step, 1.4);
        let (gx, gy) = sobel(&blurred, 8, 8);
        let mag = |x: usize| (gx[x] * gx[x] + gy[x] * gy[x]).sqrt();
        assert!((0..8).all(|x| mag(c) >= mag(x)));
    }

    #[test]
    fn taps_are_normalized() {
        let t = gaussian_taps(1.4);
        assert_eq!(t.len(), 6);
        let total: f32 = t[0] + 2.0 * t[1..].iter().sum::<f32>();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_thresholds() {
        let img = GrayImage::filled(4, 4, 0.0);
        for (lo, hi) in [(0.2, 0.1), (0.1, 0.1), (0.0, 0.1)] {
            let cfg = CannyConfig {
                low_threshold: lo,
                high_threshold: hi,
                ..Default::default()
            };
            assert!(canny(&img, &cfg).is_err());
        }
    }

    #[test]
    fn nms_is_thin_across_gradient() {
        let img = random_image(4, 32, 32);
        let blurred = gaussian_blur(&img, 1.4);
        let (gx, gy) = sobel(&blurred, 32, 32);
        let thin = suppressed_magnitude(&blurred, 32, 32);
        for y in 1..31 {
            for x in 1..31 {
                let i = y * 32 + x;
                if thin[i] == 0.0 {
                    continue;
                }
                let ((bx, by), (ax, ay)) = nms_offsets(gx[i], gy[i]);
                let before = ((y as isize + by) * 32 + x as isize + bx) as usize;
                let after = ((y as isize + ay) * 32 + x as isize + ax) as usize;
                // No neighbor across the edge survives with a magnitude
                // that would have suppressed this pixel.
                assert!(!(thin[before] > 0.0 && thin[before] >= thin[i]));
                assert!(!(thin[after] > 0.0 && thin[after] > thin[i]));
            }
        }
    }

    proptest! {
        #[test]
        fn output_is_binary_and_mirror_symmetric(seed in any::<u64>()) {
            let img = random_image(seed, 24, 20);
            let cfg = CannyConfig::default();
            let e = canny(&img, &cfg).unwrap();
            prop_assert!(e.data().iter().all(|&v| v == 0.0 || v == 1.0));
            let mirrored = canny(&img.flip_horizontal(), &cfg).unwrap();
            prop_assert_eq!(mirrored.flip_horizontal(), e);
        }

        #[test]
        fn raising_low_threshold_never_adds_edges(seed in any::<u64>(), lo in 0.01f32..0.14) {
            let img = random_image(seed, 24, 20);
            let base = CannyConfig { low_threshold: lo, ..Default::default() };
            let raised = CannyConfig { low_threshold: (lo + 0.03).min(0.149), ..Default::default() };
            let a = canny(&img, &base).unwrap();
            let b = canny(&img, &raised).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!(*y <= *x);
            }
        }
    }
}

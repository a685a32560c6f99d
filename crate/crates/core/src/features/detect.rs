//! FAST-9 corners ranked by Harris response, oriented by intensity centroid.

use crate::image::GrayImage;

use super::Keypoint;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
const CIRCLE: [(isize, isize); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const ARC: usize = 9;
const HARRIS_K: f64 = 0.04;
const HARRIS_HALF: isize = 3;
pub const ORIENTATION_RADIUS: isize = 15;

/// Segment test: at least nine contiguous circle pixels all brighter than
/// `p + t` or all darker than `p − t`. Returns the FAST score (sum of the
/// excess contrast over the circle) for corners.
fn fast_score(img: &GrayImage, x: usize, y: usize, t: f32) -> Option<f32> {
    let p = img.get(x, y);
    let ring: [f32; 16] =
        std::array::from_fn(|i| img.get((x as isize + CIRCLE[i].0) as usize, (y as isize + CIRCLE[i].1) as usize));
    let state = |v: f32| -> i8 {
        if v > p + t {
            1
        } else if v < p - t {
            -1
        } else {
            0
        }
    };
    let states: [i8; 16] = std::array::from_fn(|i| state(ring[i]));
    let mut is_corner = false;
    for sign in [1i8, -1] {
        let mut run = 0;
        for i in 0..16 + ARC - 1 {
            if states[i % 16] == sign {
                run += 1;
                if run >= ARC {
                    is_corner = true;
                    break;
                }
            } else {
                run = 0;
            }
        }
    }
    if !is_corner {
        return None;
    }
    Some(ring.iter().map(|&v| ((v - p).abs() - t).max(0.0)).sum())
}

fn harris(img: &GrayImage, x: usize, y: usize) -> f64 {
    let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
    let g = |x: isize, y: isize| img.get_clamped(x, y) as f64;
    for dy in -HARRIS_HALF..=HARRIS_HALF {
        for dx in -HARRIS_HALF..=HARRIS_HALF {
            let (u, v) = (x as isize + dx, y as isize + dy);
            let gx = (g(u + 1, v - 1) + 2.0 * g(u + 1, v) + g(u + 1, v + 1))
                - (g(u - 1, v - 1) + 2.0 * g(u - 1, v) + g(u - 1, v + 1));
            let gy = (g(u - 1, v + 1) + 2.0 * g(u, v + 1) + g(u + 1, v + 1))
                - (g(u - 1, v - 1) + 2.0 * g(u, v - 1) + g(u + 1, v - 1));
            sxx += gx * gx;
            syy += gy * gy;
            sxy += gx * gy;
        }
    }
    sxx * syy - sxy * sxy - HARRIS_K * (sxx + syy) * (sxx + syy)
}

/// Angle of the vector from the keypoint to the intensity centroid of the
/// surrounding disk.
pub fn orientation(img: &GrayImage, x: usize, y: usize) -> f32 {
    let (mut m10, mut m01) = (0.0f64, 0.0f64);
    let r = ORIENTATION_RADIUS;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let v = img.get_clamped(x as isize + dx, y as isize + dy) as f64;
            m10 += dx as f64 * v;
            m01 += dy as f64 * v;
        }
    }
    m01.atan2(m10) as f32
}

/// FAST-9 candidates with 3×3 non-maximum suppression on the FAST score,
/// at least `margin` pixels from the border, the `max_n` strongest by
/// Harris response. Ties keep raster order.
pub fn detect_keypoints(img: &GrayImage, threshold: f32, margin: usize, max_n: usize) -> Vec<Keypoint> {
    let (w, h) = img.dims();
    let m = margin.max(3);
    if w <= 2 * m || h <= 2 * m {
        return Vec::new();
    }
    let mut score = vec![0.0f32; w * h];
    for y in m..h - m {
        for x in m..w - m {
            if let Some(s) = fast_score(img, x, y, threshold) {
                score[y * w + x] = s;
            }
        }
    }
    let mut kps = Vec::new();
    for y in m..h - m {
        for x in m..w - m {
            let s = score[y * w + x];
            if s <= 0.0 {
                continue;
            }
            // Strict against earlier raster neighbors, non-strict against
            // later ones, so a plateau keeps exactly its first pixel.
            let mut keep = true;
            'nb: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = score[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (earlier && n >= s) || (!earlier && n > s) {
                        keep = false;
                        break 'nb;
                    }
                }
            }
            if keep {
                kps.push(Keypoint {
                    x: x as f32,
                    y: y as f32,
                    response: harris(img, x, y) as f32,
                    orientation: 0.0,
                });
            }
        }
    }
    kps.sort_by(|a, b| b.response.total_cmp(&a.response));
    kps.truncate(max_n);
    for kp in &mut kps {
        kp.orientation = orientation(img, kp.x as usize, kp.y as usize);
    }
    kps
}

//! Planar homographies: normalized DLT, RANSAC and symmetric transfer error.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MIN_DET: f64 = 1e-12;
/// Twice the triangle area (px²) below which three points count as collinear.
const COLLINEAR_AREA: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    /// Scales so `h33 = 1`; rejects singular or unnormalizable matrices.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let h33 = m[(2, 2)];
        if !h33.is_finite() || h33.abs() < MIN_DET {
            return Err(Error::invalid("homography has h33 = 0"));
        }
        let m = m / h33;
        let det = m.determinant();
        if !det.is_finite() || det.abs() <= MIN_DET {
            return Err(Error::invalid(format!("homography is singular (det {det:e})")));
        }
        Ok(Homography(m))
    }

    pub fn identity() -> Self {
        Homography(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .0
            .try_inverse()
            .ok_or_else(|| Error::invalid("homography is not invertible"))?;
        Homography::new(inv)
    }

    /// `None` when the point maps to infinity.
    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let v = self.0 * Vector3::new(p[0], p[1], 1.0);
        if v.z.abs() < 1e-12 {
            return None;
        }
        let out = [v.x / v.z, v.y / v.z];
        out.iter().all(|c| c.is_finite()).then_some(out)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `½(‖H·a − b‖ + ‖H⁻¹·b − a‖)`; infinite when either side maps to infinity.
pub fn symmetric_transfer_error(h: &Homography, h_inv: &Homography, a: [f64; 2], b: [f64; 2]) -> f64 {
    match (h.apply(a), h_inv.apply(b)) {
        (Some(fa), Some(ib)) => 0.5 * (dist(fa, b) + dist(ib, a)),
        _ => f64::INFINITY,
    }
}

/// Hartley normalization: centroid to the origin, mean distance √2.
fn normalizer(pts: &[[f64; 2]]) -> Option<Matrix3<f64>> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = pts.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / n;
    if mean.is_nan() || mean <= 1e-12 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = t * Vector3::new(p[0], p[1], 1.0);
    [v.x / v.z, v.y / v.z]
}

/// Least-squares DLT on normalized coordinates (exact for four points).
pub fn fit_homography(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Result<Homography> {
    if src.len() != dst.len() {
        return Err(Error::shape(format!(
            "{} source points but {} destination points",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 4 {
        return Err(Error::InsufficientCorrespondences(src.len()));
    }
    let degenerate = || Error::invalid("degenerate point configuration");
    let ts = normalizer(src).ok_or_else(degenerate)?;
    let td = normalizer(dst).ok_or_else(degenerate)?;
    let rows = (2 * src.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let [x, y] = transform(&ts, *s);
        let [u, v] = transform(&td, *d);
        let r0 = [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u];
        let r1 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        for c in 0..9 {
            a[(2 * i, c)] = r0[c];
            a[(2 * i + 1, c)] = r1[c];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(degenerate)?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(degenerate)?;
    let h = v_t.row(k);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td.try_inverse().ok_or_else(degenerate)?;
    Homography::new(td_inv * hn * ts)
}

fn collinear(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> bool {
    let area2 = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    area2.abs() < COLLINEAR_AREA
}

fn any_three_collinear(p: &[[f64; 2]; 4]) -> bool {
    [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
        .iter()
        .any(|&(i, j, k)| collinear(p[i], p[j], p[k]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_px: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            iterations: 2000,
            inlier_px: 3.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RansacResult {
    pub homography: Homography,
    /// Indices into the correspondence list.
    pub inliers: Vec<usize>,
    /// Inlier count of the best minimal-sample model before the refit.
    pub minimal_inliers: usize,
}

fn inliers_of(h: &Homography, src: &[[f64; 2]], dst: &[[f64; 2]], px: f64) -> Option<Vec<usize>> {
    let inv = h.inverse().ok()?;
    Some(
        (0..src.len())
            .filter(|&i| symmetric_transfer_error(h, &inv, src[i], dst[i]) < px)
            .collect(),
    )
}

/// RANSAC over four-point samples, then a least-squares refit on the best
/// consensus set. Samples with three collinear points are skipped.
pub fn estimate_homography_ransac(src: &[[f64; 2]], dst: &[[f64; 2]], cfg: &RansacConfig) -> Result<RansacResult> {
    if src.len() != dst.len() {
        return Err(Error::shape(format!(
            "{} source points but {} destination points",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 4 {
        return Err(Error::InsufficientCorrespondences(src.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Homography, Vec<usize>)> = None;
    for _ in 0..cfg.iterations {
        let idx = sample(&mut rng, src.len(), 4);
        let s: [[f64; 2]; 4] = std::array::from_fn(|i| src[idx.index(i)]);
        let d: [[f64; 2]; 4] = std::array::from_fn(|i| dst[idx.index(i)]);
        if any_three_collinear(&s) || any_three_collinear(&d) {
            continue;
        }
        let Ok(h) = fit_homography(&s, &d) else {
            continue;
        };
        let Some(inl) = inliers_of(&h, src, dst, cfg.inlier_px) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| inl.len() > b.len()) {
            best = Some((h, inl));
        }
    }
    let (h, inl) = best.ok_or_else(|| Error::invalid("no non-degenerate sample found"))?;
    let minimal_inliers = inl.len();
    if inl.len() >= 4 {
        let s: Vec<_> = inl.iter().map(|&i| src[i]).collect();
        let d: Vec<_> = inl.iter().map(|&i| dst[i]).collect();
        if let Ok(refit) = fit_homography(&s, &d) {
            if let Some(refit_inl) = inliers_of(&refit, src, dst, cfg.inlier_px) {
                if !refit_inl.is_empty() {
                    return Ok(RansacResult {
                        homography: refit,
                        inliers: refit_inl,
                        minimal_inliers,
                    });
                }
            }
        }
    }
    Ok(RansacResult {
        homography: h,
        inliers: inl,
        minimal_inliers,
    })
}

pub fn reprojection_error(
    h: &Homography,
    inliers: &[usize],
    src: &[[f64; 2]],
    dst: &[[f64; 2]],
) -> Result<Option<f64>> {
    if inliers.is_empty() {
        return Ok(None);
    }
    let inv = h.inverse()?;
    let sum: f64 = inliers
        .iter()
        .map(|&i| symmetric_transfer_error(h, &inv, src[i], dst[i]))
        .sum();
    Ok(Some(sum / inliers.len() as f64))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::DepthImage;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    /// `(x, y, z)` in meters, camera frame: x right, y down, z forward.
    pub points: Vec<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let intr = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Square pixels, principal point at the image center, roughly 90°
    /// horizontal field of view.
    pub fn centered(width: usize, height: usize) -> Self {
        let f = width as f64 / 2.0;
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && (0.0..self.width as f64).contains(&self.cx)
            && (0.0..self.height as f64).contains(&self.cy);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid camera intrinsics {self:?}")))
        }
    }

    /// Continuous image coordinates of a camera-frame point; `None` behind
    /// the camera.
    #[inline]
    pub fn project(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        let [x, y, z] = p;
        (z > 0.0).then(|| (self.fx * x / z + self.cx, self.fy * y / z + self.cy))
    }

    /// Pixel containing a camera-frame point, if it lands on the image.
    #[inline]
    pub fn pixel_of(&self, p: [f64; 3]) -> Option<(usize, usize)> {
        let (u, v) = self.project(p)?;
        let (uf, vf) = (u.floor(), v.floor());
        if uf < 0.0 || vf < 0.0 || uf >= self.width as f64 || vf >= self.height as f64 {
            return None;
        }
        Some((uf as usize, vf as usize))
    }
}

/// Pinhole projection with a z-buffer: the nearest point wins each pixel.
/// Points behind the camera or outside the image are dropped.
pub fn project_point_cloud(cloud: &PointCloud, intr: &CameraIntrinsics) -> Result<DepthImage> {
    intr.validate()?;
    let mut depth = DepthImage::empty(intr.width, intr.height);
    let w = intr.width;
    let buf = depth.data_mut();
    for &p in &cloud.points {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid(format!("non-finite point {p:?}")));
        }
        let Some((u, v)) = intr.pixel_of(p) else {
            continue;
        };
        let slot = &mut buf[v * w + u];
        if *slot == 0.0 || p[2] < *slot {
            *slot = p[2];
        }
    }
    Ok(depth)
}

//! Procedural box-world driving sequences.
//!
//! A scene is a textured ground plane plus axis-aligned boxes. A camera
//! drives forward along a gently weaving path; each frame is ray traced
//! into a supersampled Lambertian intensity image and a sparse LiDAR-like
//! depth image. Depth is produced the same way a real sensor pipeline does
//! it: surface points along a subset of scan rows form a point cloud, which
//! is then projected through the camera intrinsics.
//!
//! World frame: x right, y down, z forward; the ground is the plane y = 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{project_point_cloud, CameraIntrinsics, Frame, PointCloud};
use crate::error::{Error, Result};
use crate::image::{DepthImage, GrayImage};

pub type Vec3 = [f64; 3];

const CAMERA_HEIGHT: f64 = 1.6;
const SKY_TOP: f32 = 0.95;
const SKY_HORIZON: f32 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub seed: u64,
    pub num_frames: usize,
    /// Forward motion per frame in meters.
    pub speed: f64,
    /// Keep LiDAR returns on every n-th image row.
    pub scanline_step: usize,
    /// Returns farther than this are dropped.
    pub lidar_range: f64,
    /// Rays per pixel along each axis for the intensity image.
    pub supersample: usize,
    pub min_boxes: usize,
    pub max_boxes: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            seed: 0,
            num_frames: 1,
            speed: 0.15,
            scanline_step: 2,
            lidar_range: 60.0,
            supersample: 3,
            min_boxes: 10,
            max_boxes: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneBox {
    pub min: Vec3,
    pub max: Vec3,
    /// Base reflectance in `(0, 1]`, modulated by the face texture.
    pub albedo: f32,
    pub texture_seed: u64,
    /// Texture cell size in meters.
    pub cell: f64,
}

impl SceneBox {
    /// Slab test; returns entry distance along `dir` and the axis of the
    /// entered face with its sign.
    fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<(f64, usize, f64)> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        let mut axis = 0;
        let mut side = 0.0;
        for a in 0..3 {
            if dir[a] == 0.0 {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[a];
            let (mut t0, mut t1) = ((self.min[a] - origin[a]) * inv, (self.max[a] - origin[a]) * inv);
            let mut s = -1.0;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
                s = 1.0;
            }
            if t0 > t_near {
                t_near = t0;
                axis = a;
                side = s;
            }
            t_far = t_far.min(t1);
        }
        (t_near <= t_far && t_near > 1e-9).then_some((t_near, axis, side))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    /// Rotation about the (downward) y axis; positive turns toward +x.
    pub yaw: f64,
}

impl Pose {
    fn rotate_to_world(&self, v: Vec3) -> Vec3 {
        let (s, c) = self.yaw.sin_cos();
        [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals camera-frame z for rays with unit z component.
    pub t: f64,
    pub normal: Vec3,
    pub albedo: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub boxes: Vec<SceneBox>,
    pub ground_seed: u64,
    /// Unit vector pointing toward the light.
    pub light: Vec3,
}

fn normalize(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn hash64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Cell-constant texture value in `[0, 1)`.
fn texel(seed: u64, u: f64, v: f64, cell: f64) -> f32 {
    let cu = (u / cell).floor() as i64 as u64;
    let cv = (v / cell).floor() as i64 as u64;
    let h = hash64(seed ^ hash64(cu ^ hash64(cv.wrapping_mul(0x51_7CC1_B727_220A))));
    (h >> 40) as f32 / (1u64 << 24) as f32
}

impl Scene {
    pub fn new(boxes: Vec<SceneBox>, ground_seed: u64) -> Self {
        Scene {
            boxes,
            ground_seed,
            light: normalize([-0.4, -0.8, -0.45]),
        }
    }

    /// Random boxes flanking the driving corridor over `path_length` meters.
    pub fn random(rng: &mut impl Rng, cfg: &SceneConfig, path_length: f64) -> Self {
        let count = rng.random_range(cfg.min_boxes..=cfg.max_boxes.max(cfg.min_boxes));
        let mut boxes = Vec::with_capacity(count);
        for _ in 0..count {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let half_w = rng.random_range(0.5..2.0);
            let half_d = rng.random_range(0.5..2.0);
            let height = rng.random_range(1.0..5.0);
            let cx = side * (rng.random_range(2.5..10.0) + half_w);
            let cz = rng.random_range(3.0..path_length + 35.0);
            boxes.push(SceneBox {
                min: [cx - half_w, -height, cz - half_d],
                max: [cx + half_w, 0.0, cz + half_d],
                albedo: rng.random_range(0.35..1.0),
                texture_seed: rng.random(),
                cell: rng.random_range(0.25..0.6),
            });
        }
        Scene::new(boxes, rng.random())
    }

    pub fn trace(&self, origin: Vec3, dir: Vec3) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        if dir[1] > 0.0 {
            let t = -origin[1] / dir[1];
            if t > 0.0 {
                let px = origin[0] + t * dir[0];
                let pz = origin[2] + t * dir[2];
                let albedo = 0.25 + 0.5 * texel(self.ground_seed, px, pz, 0.5);
                best = Some(Hit {
                    t,
                    normal: [0.0, -1.0, 0.0],
                    albedo,
                });
            }
        }
        for b in &self.boxes {
            let Some((t, axis, side)) = b.intersect(origin, dir) else {
                continue;
            };
            if best.is_some_and(|h| h.t <= t) {
                continue;
            }
            let p = [origin[0] + t * dir[0], origin[1] + t * dir[1], origin[2] + t * dir[2]];
            let (u, v) = match axis {
                0 => (p[2], p[1]),
                1 => (p[0], p[2]),
                _ => (p[0], p[1]),
            };
            let face_seed = b.texture_seed ^ ((axis as u64) << 1 | (side > 0.0) as u64);
            let mut normal = [0.0; 3];
            normal[axis] = side;
            best = Some(Hit {
                t,
                normal,
                albedo: b.albedo * (0.35 + 0.65 * texel(face_seed, u, v, b.cell)),
            });
        }
        best
    }

    fn shade(&self, hit: Option<Hit>, dir: Vec3) -> f32 {
        match hit {
            Some(h) => {
                let lambert = (h.normal[0] * self.light[0] + h.normal[1] * self.light[1] + h.normal[2] * self.light[2])
                    .max(0.0) as f32;
                (h.albedo * (0.25 + 0.75 * lambert)).clamp(0.0, 1.0)
            }
            None => {
                let up = (-normalize(dir)[1]).clamp(0.0, 1.0) as f32;
                SKY_HORIZON + (SKY_TOP - SKY_HORIZON) * up
            }
        }
    }

    /// Camera-frame ray through continuous image point `(u, v)`.
    fn camera_ray(intr: &CameraIntrinsics, u: f64, v: f64) -> Vec3 {
        [(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0]
    }

    fn origin(pose: &Pose) -> Vec3 {
        pose.position
    }

    pub fn render_gray(&self, pose: &Pose, intr: &CameraIntrinsics, supersample: usize) -> GrayImage {
        let s = supersample.max(1);
        let origin = Self::origin(pose);
        let rows: Vec<Vec<f32>> = (0..intr.height)
            .into_par_iter()
            .map(|y| {
                (0..intr.width)
                    .map(|x| {
                        let mut acc = 0.0f32;
                        for sy in 0..s {
                            for sx in 0..s {
                                let u = x as f64 + (sx as f64 + 0.5) / s as f64;
                                let v = y as f64 + (sy as f64 + 0.5) / s as f64;
                                let dir = pose.rotate_to_world(Self::camera_ray(intr, u, v));
                                acc += self.shade(self.trace(origin, dir), dir);
                            }
                        }
                        (acc / (s * s) as f32).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        GrayImage::new(intr.width, intr.height, rows.concat()).expect("shaded values in range")
    }

    /// Camera-frame surface points hit by pixel-center rays on every
    /// `scanline_step`-th row, limited to `max_range`.
    pub fn lidar_points(
        &self,
        pose: &Pose,
        intr: &CameraIntrinsics,
        scanline_step: usize,
        max_range: f64,
    ) -> PointCloud {
        let origin = Self::origin(pose);
        let mut points = Vec::new();
        for y in (0..intr.height).step_by(scanline_step.max(1)) {
            for x in 0..intr.width {
                let ray = Self::camera_ray(intr, x as f64 + 0.5, y as f64 + 0.5);
                if let Some(hit) = self.trace(origin, pose.rotate_to_world(ray)) {
                    if hit.t <= max_range {
                        points.push([hit.t * ray[0], hit.t * ray[1], hit.t]);
                    }
                }
            }
        }
        PointCloud { points }
    }

    pub fn render_depth(
        &self,
        pose: &Pose,
        intr: &CameraIntrinsics,
        scanline_step: usize,
        max_range: f64,
    ) -> Result<DepthImage> {
        project_point_cloud(&self.lidar_points(pose, intr, scanline_step, max_range), intr)
    }
}

/// Smooth forward path: yaw follows a slow sinusoid plus small Gaussian
/// jitter, the camera advances `speed` meters per frame along its heading.
pub fn trajectory(rng: &mut impl Rng, num_frames: usize, speed: f64) -> Vec<Pose> {
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let amplitude = rng.random_range(0.02..0.08);
    let jitter = Normal::new(0.0, 0.004).expect("valid sigma");
    let mut pos = [0.0, -CAMERA_HEIGHT, 0.0];
    let mut poses = Vec::with_capacity(num_frames);
    for t in 0..num_frames {
        let yaw = amplitude * (phase + t as f64 * 0.04).sin() + jitter.sample(rng);
        poses.push(Pose { position: pos, yaw });
        pos[0] += speed * yaw.sin();
        pos[2] += speed * yaw.cos();
    }
    poses
}

pub fn generate_sequence(seed: u64, num_frames: usize, intr: &CameraIntrinsics) -> Result<Vec<Frame>> {
    generate_sequence_with(
        &SceneConfig {
            seed,
            num_frames,
            ..Default::default()
        },
        intr,
    )
}

pub fn generate_sequence_with(cfg: &SceneConfig, intr: &CameraIntrinsics) -> Result<Vec<Frame>> {
    intr.validate()?;
    if cfg.min_boxes > cfg.max_boxes || cfg.scanline_step == 0 || cfg.speed.is_nan() || cfg.speed < 0.0 {
        return Err(Error::invalid(format!("invalid scene config {cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let poses = trajectory(&mut rng, cfg.num_frames, cfg.speed);
    let scene = Scene::random(&mut rng, cfg, cfg.speed * cfg.num_frames as f64);
    poses
        .iter()
        .enumerate()
        .map(|(index, pose)| {
            Ok(Frame {
                index,
                gray: scene.render_gray(pose, intr, cfg.supersample),
                depth: scene.render_depth(pose, intr, cfg.scanline_step, cfg.lidar_range)?,
            })
        })
        .collect()
}

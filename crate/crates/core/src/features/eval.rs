//! Frame-pair evaluation: detect, describe, match, fit a homography and
//! average the three per-pair metrics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{resize_bilinear, FramePair};
use crate::error::{Error, Result};
use crate::generator::GeneratorWeights;
use crate::image::GrayImage;

use super::{estimate_homography_ransac, extract, match_descriptors, reprojection_error, OrbConfig};

pub const REPORT_HEADER: &str =
    "condition,avg_distance_raw,avg_distance_normalized,avg_matches,avg_reprojection_px,pairs,dropped";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Grayscale frames as captured.
    Raw,
    /// Image-generator CRs of both frames.
    ImageCr,
    /// Depth-generator CRs of both frames.
    DepthCr,
    /// Image CR of the first frame against depth CR of the second.
    CrossCr,
}

impl EvalMode {
    pub fn label(self) -> &'static str {
        match self {
            EvalMode::Raw => "raw",
            EvalMode::ImageCr => "image_cr",
            EvalMode::DepthCr => "depth_cr",
            EvalMode::CrossCr => "cross_cr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [EvalMode::Raw, EvalMode::ImageCr, EvalMode::DepthCr, EvalMode::CrossCr]
            .into_iter()
            .find(|m| m.label() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub pairs: usize,
    /// Second frame of pair `t` is `t + frame_offset`; `0` matches a frame
    /// against itself.
    pub frame_offset: usize,
    pub orb: OrbConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            pairs: 100,
            frame_offset: 1,
            orb: OrbConfig::default(),
        }
    }
}

/// Metrics of one evaluated pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairResult {
    pub first: usize,
    pub second: usize,
    pub avg_distance: f64,
    pub matches: usize,
    pub reprojection_px: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub condition: String,
    /// Mean Hamming distance of matches, averaged over evaluated pairs.
    pub avg_distance_raw: Option<f64>,
    /// `avg_distance_raw` divided by a baseline report's value.
    pub avg_distance_normalized: Option<f64>,
    pub avg_matches: Option<f64>,
    pub avg_reprojection_px: Option<f64>,
    pub pairs: usize,
    pub dropped: usize,
    pub per_pair: Vec<PairResult>,
}

impl EvalReport {
    /// Fills the normalized distance relative to `baseline`.
    pub fn normalize_by(&mut self, baseline: &EvalReport) {
        self.avg_distance_normalized = match (self.avg_distance_raw, baseline.avg_distance_raw) {
            (Some(d), Some(b)) if b > 0.0 => Some(d / b),
            _ => None,
        };
    }
}

fn cr_of(weights: Option<&GeneratorWeights<f32>>, img: &GrayImage, role: &str) -> Result<GrayImage> {
    let w = weights.ok_or_else(|| Error::invalid(format!("{role} generator weights are required")))?;
    let dims = (w.config.input_width, w.config.input_height);
    if img.dims() == dims {
        w.forward(img)
    } else {
        w.forward(&resize_bilinear(img, dims.0, dims.1)?)
    }
}

fn evaluate_one(a: &GrayImage, b: &GrayImage, cfg: &OrbConfig) -> Result<Option<(f64, usize, f64)>> {
    let (ka, da) = extract(a, cfg)?;
    let (kb, db) = extract(b, cfg)?;
    let matches = match_descriptors(&da, &db, cfg.max_hamming);
    if matches.len() < 4 {
        return Ok(None);
    }
    let src: Vec<_> = matches.iter().map(|m| ka[m.index_a].position()).collect();
    let dst: Vec<_> = matches.iter().map(|m| kb[m.index_b].position()).collect();
    let Ok(fit) = estimate_homography_ransac(&src, &dst, &cfg.ransac()) else {
        return Ok(None);
    };
    let Some(err) = reprojection_error(&fit.homography, &fit.inliers, &src, &dst)? else {
        return Ok(None);
    };
    let dist = matches.iter().map(|m| m.distance as f64).sum::<f64>() / matches.len() as f64;
    Ok(Some((dist, matches.len(), err)))
}

/// Evaluates pairs `(t, t + offset)` for `t < cfg.pairs`. Pairs without a
/// homography are dropped and counted; averages cover the remaining ones.
pub fn evaluate_pairs(
    frames: &[FramePair],
    mode: EvalMode,
    image: Option<&GeneratorWeights<f32>>,
    depth: Option<&GeneratorWeights<f32>>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let problems = cfg.orb.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    if cfg.pairs == 0 {
        return Err(Error::invalid("at least one pair must be evaluated"));
    }
    let needed = cfg.pairs + cfg.frame_offset;
    if frames.len() < needed {
        return Err(Error::invalid(format!(
            "{} pairs at offset {} need {needed} frames, dataset has {}",
            cfg.pairs,
            cfg.frame_offset,
            frames.len()
        )));
    }
    let side = |f: &FramePair, first: bool| -> Result<GrayImage> {
        match mode {
            EvalMode::Raw => Ok(f.gray.clone()),
            EvalMode::ImageCr => cr_of(image, &f.gray, "image"),
            EvalMode::DepthCr => cr_of(depth, &f.depth_gray, "depth"),
            EvalMode::CrossCr if first => cr_of(image, &f.gray, "image"),
            EvalMode::CrossCr => cr_of(depth, &f.depth_gray, "depth"),
        }
    };
    let outcomes: Vec<Option<PairResult>> = (0..cfg.pairs)
        .into_par_iter()
        .map(|t| {
            let second = t + cfg.frame_offset;
            let a = side(&frames[t], true)?;
            let b = side(&frames[second], false)?;
            Ok(
                evaluate_one(&a, &b, &cfg.orb)?.map(|(avg_distance, matches, reprojection_px)| PairResult {
                    first: frames[t].index,
                    second: frames[second].index,
                    avg_distance,
                    matches,
                    reprojection_px,
                }),
            )
        })
        .collect::<Result<_>>()?;
    let per_pair: Vec<PairResult> = outcomes.iter().flatten().copied().collect();
    let n = per_pair.len();
    let avg = |f: fn(&PairResult) -> f64| (n > 0).then(|| per_pair.iter().map(f).sum::<f64>() / n as f64);
    Ok(EvalReport {
        condition: mode.label().to_string(),
        avg_distance_raw: avg(|p| p.avg_distance),
        avg_distance_normalized: None,
        avg_matches: avg(|p| p.matches as f64),
        avg_reprojection_px: avg(|p| p.reprojection_px),
        pairs: n,
        dropped: cfg.pairs - n,
        per_pair,
    })
}

/// CSV with one row per report; missing values are empty fields.
pub fn report_csv(reports: &[EvalReport]) -> String {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.condition,
            f(r.avg_distance_raw),
            f(r.avg_distance_normalized),
            f(r.avg_matches),
            f(r.avg_reprojection_px),
            r.pairs,
            r.dropped
        );
    }
    out
}

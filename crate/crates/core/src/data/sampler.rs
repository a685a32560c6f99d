use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{chebyshev_score, FramePair};
use crate::error::{Error, Result};

/// How the Chebyshev score enters the loss. `Dissimilarity` uses the raw
/// L∞ distance (0 for identical frames); `Similarity` uses `1 − distance`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolarity {
    #[default]
    Dissimilarity,
    Similarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Probability of drawing the second frame from the anchor's temporal
    /// neighborhood.
    pub p_similar: f64,
    /// Frames within this many steps of the anchor count as similar.
    pub window_k: usize,
    pub seed: u64,
    pub polarity: DeltaPolarity,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            p_similar: 0.5,
            window_k: 3,
            seed: 0,
            polarity: DeltaPolarity::Dissimilarity,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_similar) {
            return Err(Error::invalid(format!(
                "p_similar must lie in [0, 1], got {}",
                self.p_similar
            )));
        }
        if self.window_k < 1 {
            return Err(Error::invalid("window_k must be at least 1"));
        }
        Ok(())
    }

    /// Smallest dataset for which both branches are always non-empty.
    pub fn min_frames(&self) -> usize {
        2 * self.window_k + 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiamesePair {
    pub first: usize,
    pub second: usize,
    pub delta: f32,
    pub similar: bool,
}

/// Draws an anchor uniformly, then a partner from the temporal window
/// (probability `p_similar`) or uniformly from outside it.
pub fn sample_siamese_pair<R: Rng + ?Sized>(
    dataset: &[FramePair],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SiamesePair> {
    cfg.validate()?;
    let n = dataset.len();
    if n < cfg.min_frames() {
        return Err(Error::invalid(format!(
            "sampler needs at least {} frames for window_k = {}, got {n}",
            cfg.min_frames(),
            cfg.window_k
        )));
    }
    let k = cfg.window_k;
    let first = rng.random_range(0..n);
    let lo = first.saturating_sub(k);
    let hi = (first + k).min(n - 1);
    let similar = rng.random_bool(cfg.p_similar);

    let second = if similar {
        // Window minus the anchor itself.
        let j = rng.random_range(0..hi - lo);
        let j = lo + j;
        if j >= first {
            j + 1
        } else {
            j
        }
    } else {
        let outside = n - (hi - lo + 1);
        let j = rng.random_range(0..outside);
        if j < lo {
            j
        } else {
            j + (hi - lo + 1)
        }
    };

    let distance = chebyshev_score(&dataset[first].gray, &dataset[second].gray)?;
    let delta = match cfg.polarity {
        DeltaPolarity::Dissimilarity => distance,
        DeltaPolarity::Similarity => 1.0 - distance,
    };
    Ok(SiamesePair {
        first,
        second,
        delta,
        similar,
    })
}

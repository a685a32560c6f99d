use super::{Descriptor, Match};

/// Mutual nearest neighbours by Hamming distance, dropping pairs farther
/// apart than `max_distance`. Distance ties go to the lower index.
pub fn match_descriptors(a: &[Descriptor], b: &[Descriptor], max_distance: u32) -> Vec<Match> {
    let nearest = |d: &Descriptor, set: &[Descriptor]| -> Option<(usize, u32)> {
        set.iter()
            .enumerate()
            .map(|(j, e)| (j, d.hamming(e)))
            .min_by_key(|&(j, dist)| (dist, j))
    };
    let back: Vec<Option<(usize, u32)>> = b.iter().map(|d| nearest(d, a)).collect();
    a.iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let (j, dist) = nearest(d, b)?;
            let mutual = back[j].map(|(k, _)| k) == Some(i);
            (mutual && dist <= max_distance).then_some(Match {
                index_a: i,
                index_b: j,
                distance: dist,
            })
        })
        .collect()
}

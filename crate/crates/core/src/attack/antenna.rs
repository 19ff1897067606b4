//! Antenna placement by successive approximation.

use rand::Rng;

use crate::error::{Error, Module, Result};
use crate::rng::stream_rng;

/// In-window SNR at distance `d` for a free-field `1/d²` amplitude law.
pub fn snr_at_distance(snr_ref_db: f64, reference_distance: f64, d: f64, shielding_db: f64) -> f64 {
    snr_ref_db + 40.0 * (reference_distance / d).log10() - shielding_db
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaSearch {
    pub best: f64,
    pub best_snr_db: f64,
    /// Accepted `(position, snr)` steps, starting point first.
    pub trajectory: Vec<(f64, f64)>,
}

/// Hill-climb over the sorted candidates from a random start, moving to the
/// better neighbour while it strictly improves.
pub fn optimize_antenna_position(
    snr: &dyn Fn(f64) -> f64,
    candidates: &[f64],
    seed: u64,
) -> Result<AntennaSearch> {
    if candidates.is_empty() {
        return Err(Error::invalid(Module::Attack, "no candidate antenna positions"));
    }
    let mut pos: Vec<f64> = candidates.to_vec();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut rng = stream_rng(seed, "antenna", 0);
    let mut i = rng.random_range(0..pos.len());
    let mut cur = snr(pos[i]);
    let mut trajectory = vec![(pos[i], cur)];
    loop {
        let mut next = None;
        for j in [i.checked_sub(1), (i + 1 < pos.len()).then_some(i + 1)].into_iter().flatten() {
            let s = snr(pos[j]);
            if s > cur && next.map_or(true, |(_, b)| s > b) {
                next = Some((j, s));
            }
        }
        match next {
            Some((j, s)) => {
                i = j;
                cur = s;
                trajectory.push((pos[i], cur));
            }
            None => break,
        }
    }
    Ok(AntennaSearch {
        best: pos[i],
        best_snr_db: cur,
        trajectory,
    })
}

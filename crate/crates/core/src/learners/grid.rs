//! Shared grid management for the per-round learner maximizations.
//!
//! Re-optimizing over every observed jump point costs O(K t) per round and
//! O(K T^2) per episode, which the long-horizon sweeps cannot afford. The
//! learners instead maintain a frozen grid: while few observations exist the
//! grid is exact (every data point), afterwards it is rebuilt whenever the
//! observation count reaches a power of two, rank-uniformly thinned to
//! ~4 sqrt(n) points. Rank-uniform thinning keeps the quantile resolution at
//! O(1/sqrt(n)), which matches the statistical error of the estimates and
//! therefore preserves regret exponents.

use std::sync::Arc;

use crate::auction::BanditObservation;
use crate::banded::BandedCdf;
use crate::bids::BidVector;
use crate::cdf::GridCdf;

pub(crate) const GRID_MIN: usize = 64;
pub(crate) const GRID_MAX: usize = 2048;

/// Exact grids up to here; thinned afterwards.
pub(crate) const EXACT_LIMIT: u64 = 64;

pub(crate) fn rebuild_due(n: u64) -> bool {
    n <= EXACT_LIMIT || n.is_power_of_two()
}

pub(crate) fn grid_target(n: u64) -> usize {
    if n <= EXACT_LIMIT {
        usize::MAX
    } else {
        ((4.0 * (n as f64).sqrt()) as usize).clamp(GRID_MIN, GRID_MAX)
    }
}

/// Sorted, deduplicated grid from raw candidate points, rank-uniformly
/// subsampled to roughly `target` points, always keeping the specials.
pub(crate) fn thinned_grid(mut candidates: Vec<f64>, specials: &[f64], target: usize) -> Arc<Vec<f64>> {
    candidates.retain(|x| (0.0..=1.0).contains(x));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    let mut grid: Vec<f64> = if candidates.len() > target {
        let stride = candidates.len().div_ceil(target);
        candidates.iter().step_by(stride).copied().collect()
    } else {
        candidates
    };
    grid.extend(specials.iter().copied().filter(|x| (0.0..=1.0).contains(x)));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    Arc::new(grid)
}

/// Compile a banded estimator onto the grid as a step function, with
/// zero-coverage points read as estimate 0 (no observed win probability).
pub(crate) fn banded_to_grid_cdf(band: &BandedCdf, grid: &Arc<Vec<f64>>) -> GridCdf {
    let compiled = band.compile_on_grid(grid);
    let vals: Vec<f64> = (0..grid.len()).map(|i| compiled.estimate(i).unwrap_or(0.0)).collect();
    GridCdf::new(grid.clone(), vals)
}

/// Reconstruct the censored per-slot view from what the uniform auction
/// reveals. Learners remember their own last bid; the harness hands them
/// only (allocation, unit prices).
pub(crate) fn observation_from_feedback(
    last_bid: &BidVector,
    allocation: usize,
    unit_prices: &[f64],
) -> BanditObservation {
    let price = unit_prices.first().copied().unwrap_or(0.0);
    BanditObservation::from_allocation_price(last_bid, allocation, price)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_specials_and_order() {
        let candidates: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let grid = thinned_grid(candidates, &[0.0, 1.0, 0.337], 50);
        assert!(grid.len() <= 56);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert!(grid.contains(&0.0) && grid.contains(&1.0) && grid.contains(&0.337));
    }

    #[test]
    fn small_sets_left_exact() {
        let grid = thinned_grid(vec![0.4, 0.2, 0.4], &[0.0, 1.0], usize::MAX);
        assert_eq!(grid.as_slice(), &[0.0, 0.2, 0.4, 1.0]);
    }
}

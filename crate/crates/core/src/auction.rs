//! Pure auction mechanics: allocation, the two payment rules, realized
//! utility, and the censored per-slot view a uniform-price bidder gets back
//! under bandit feedback.
//!
//! All 2K bids compete for K identical items; the K highest win, with ties
//! broken in favor of the bidder. Uniform pricing charges every won unit the
//! first rejected bid (the (K+1)-th largest of the merged bids);
//! discriminatory pricing charges each won unit its own bid.

use crate::bids::{AuctionFormat, BidError, BidVector, ValuationVector};

/// Result of settling one auction round.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    /// Number of items the bidder won, in [0, K].
    pub allocation: usize,
    /// Price paid per won unit; length equals `allocation`. All equal under
    /// uniform pricing; equal to the bidder's own winning bids under
    /// discriminatory pricing.
    pub unit_prices: Vec<f64>,
    /// Realized utility: sum over won units l of (v_l - price_l).
    pub utility: f64,
    /// The first rejected bid, i.e. the (K+1)-th largest of all 2K bids.
    /// This is the uniform clearing price whether or not the format charges it.
    pub clearing_price: f64,
}

/// Number of items won: the largest k such that b_j >= beta_{K+1-j} for all
/// j <= k. Equality counts as a win for the bidder.
pub fn allocate(b: &BidVector, beta: &BidVector) -> Result<usize, BidError> {
    b.check_same_k(beta)?;
    let k = b.k();
    let mut won = 0;
    for j in 1..=k {
        if b.get(j) >= beta.get(k + 1 - j) {
            won = j;
        } else {
            break;
        }
    }
    Ok(won)
}

fn utility_for(v: &ValuationVector, prices: &[f64]) -> f64 {
    prices
        .iter()
        .enumerate()
        .map(|(l, &p)| v.get(l + 1) - p)
        .sum()
}

/// Settle one round: allocation, per-unit prices under `format`, utility.
pub fn settle(
    format: AuctionFormat,
    b: &BidVector,
    beta: &BidVector,
    v: &ValuationVector,
) -> Result<AuctionOutcome, BidError> {
    b.check_same_k(beta)?;
    if v.k() != b.k() {
        return Err(BidError::DimensionMismatch { expected: b.k(), got: v.k() });
    }
    let k = b.k();
    let x = allocate(b, beta)?;
    // Highest losing bid on each side; beta_{K-x+1} is the adversary's best
    // rejected bid (none when x = 0), b_{x+1} the bidder's (b_{K+1} = 0).
    let adversary_reject = if x == 0 { 0.0 } else { beta.get(k - x + 1) };
    let clearing_price = b.get(x + 1).max(adversary_reject);
    let unit_prices: Vec<f64> = match format {
        AuctionFormat::Uniform => vec![clearing_price; x],
        AuctionFormat::Discriminatory => b.values()[..x].to_vec(),
    };
    let utility = utility_for(v, &unit_prices);
    Ok(AuctionOutcome { allocation: x, unit_prices, utility, clearing_price })
}

/// Independent oracle: literally merge all 2K bids, sort them with
/// bidder-favoring ties, allocate the top K, and read prices off the sorted
/// list. Must agree exactly with `settle`.
pub fn oracle_settle(
    format: AuctionFormat,
    b: &BidVector,
    beta: &BidVector,
    v: &ValuationVector,
) -> Result<AuctionOutcome, BidError> {
    b.check_same_k(beta)?;
    if v.k() != b.k() {
        return Err(BidError::DimensionMismatch { expected: b.k(), got: v.k() });
    }
    let k = b.k();
    // (value, is_bidder); bidder bids sort ahead of equal adversary bids.
    let mut merged: Vec<(f64, bool)> = b
        .values()
        .iter()
        .map(|&x| (x, true))
        .chain(beta.values().iter().map(|&x| (x, false)))
        .collect();
    merged.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("bids are never NaN")
            .then_with(|| b.1.cmp(&a.1))
    });
    let x = merged[..k].iter().filter(|e| e.1).count();
    let clearing_price = merged[k].0;
    let unit_prices: Vec<f64> = match format {
        AuctionFormat::Uniform => vec![clearing_price; x],
        AuctionFormat::Discriminatory => b.values()[..x].to_vec(),
    };
    let utility = utility_for(v, &unit_prices);
    Ok(AuctionOutcome { allocation: x, unit_prices, utility, clearing_price })
}

/// What slot i of the bandit observation says about the opposing bid
/// beta_{K-i+1} relative to the interval (b_{i+1}, b_i].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlotStatus {
    /// beta_{K-i+1} landed inside (lo, hi] and its exact value is revealed
    /// (it set the clearing price).
    At(f64),
    /// beta_{K-i+1} <= lo.
    Below,
    /// beta_{K-i+1} > hi.
    Above,
}

/// One slot of the censored view: the interval (lo, hi] = (b_{i+1}, b_i] and
/// where the matching opposing bid fell relative to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotObservation {
    pub lo: f64,
    pub hi: f64,
    pub status: SlotStatus,
}

/// Per-round bandit feedback in the uniform auction. Slot i (1-based)
/// describes beta_{K-i+1} against (b_{i+1}, b_i]; the whole struct is a
/// function of (allocation, clearing price) alone.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditObservation {
    pub slots: Vec<SlotObservation>,
}

impl BanditObservation {
    /// Reconstruct the observation from what the uniform auction actually
    /// reveals: the bidder's own bid, its allocation, and the clearing price.
    pub fn from_allocation_price(b: &BidVector, allocation: usize, clearing_price: f64) -> Self {
        let k = b.k();
        let slots = (1..=k)
            .map(|i| {
                let lo = b.get(i + 1);
                let hi = b.get(i);
                let status = if i < allocation {
                    SlotStatus::Below
                } else if i > allocation {
                    SlotStatus::Above
                } else if clearing_price > lo {
                    SlotStatus::At(clearing_price)
                } else {
                    SlotStatus::Below
                };
                SlotObservation { lo, hi, status }
            })
            .collect();
        BanditObservation { slots }
    }

    pub fn k(&self) -> usize {
        self.slots.len()
    }

    /// Slot index i (1-based) records information about marginal K-i+1.
    pub fn marginal_for_slot(&self, i: usize) -> usize {
        self.k() - i + 1
    }
}

/// The bandit observation of one uniform-price round. Computed through the
/// (allocation, price) channel only, never by peeking at beta directly.
pub fn extract_bandit_observation(
    b: &BidVector,
    beta: &BidVector,
) -> Result<BanditObservation, BidError> {
    b.check_same_k(beta)?;
    let x = allocate(b, beta)?;
    let adversary_reject = if x == 0 { 0.0 } else { beta.get(b.k() - x + 1) };
    let clearing_price = b.get(x + 1).max(adversary_reject);
    Ok(BanditObservation::from_allocation_price(b, x, clearing_price))
}

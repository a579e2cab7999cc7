//! Explore-then-commit for the uniform auction under bandit feedback.
//!
//! Exploration round t plays b = (1, ..., 1, 0, ..., 0) with k = ((t-1) mod
//! K) + 1 ones, so slot k is the whole of (0, 1] and the matching opposing
//! bid is observed unconditionally. After T_expl rounds the banded estimate
//! covers every marginal everywhere with at least floor(T_expl / K) samples,
//! and the learner commits to the estimate's maximizer for the rest of the
//! horizon.

use crate::banded::BandedCdfState;
use crate::bids::{BidVector, ValuationVector};
use crate::bids::AuctionFormat;
use crate::cdf::Cdf;
use crate::optimizer::{maximize_on_grid, BidConstraints, CdfProfile};

use super::grid::{banded_to_grid_cdf, observation_from_feedback, thinned_grid};
use super::{default_exploration_rounds, Feedback, FeedbackKind, Learner};

pub struct ExploreCommit {
    v: ValuationVector,
    k: usize,
    t_expl: u64,
    bands: BandedCdfState,
    committed: Option<BidVector>,
    last_bid: Option<BidVector>,
    exploring: bool,
}

impl ExploreCommit {
    pub fn new(v: ValuationVector, t_horizon: u64, t_expl: Option<u64>) -> Self {
        let k = v.k();
        let t_expl = t_expl.unwrap_or_else(|| default_exploration_rounds(k, t_horizon));
        ExploreCommit {
            k,
            v,
            t_expl,
            bands: BandedCdfState::new(k),
            committed: None,
            last_bid: None,
            exploring: true,
        }
    }

    pub fn exploration_rounds(&self) -> u64 {
        self.t_expl
    }

    pub fn bands(&self) -> &BandedCdfState {
        &self.bands
    }

    fn exploration_bid(&self, t: u64) -> BidVector {
        let ones = ((t - 1) % self.k as u64) as usize + 1;
        let values = (0..self.k).map(|i| if i < ones { 1.0 } else { 0.0 }).collect();
        BidVector::new(values).expect("ones-then-zeros is sorted")
    }

    fn commit(&mut self) -> BidVector {
        let mut candidates: Vec<f64> = Vec::new();
        for m in 1..=self.k {
            candidates.extend(self.bands.marginal(m).revealed_values());
        }
        let mut specials = vec![0.0, 1.0];
        specials.extend(self.v.values());
        let grid = thinned_grid(candidates, &specials, usize::MAX);
        let estimates: Vec<_> = (1..=self.k)
            .map(|m| {
                let band = self.bands.marginal(m);
                // Exploration guarantees coverage on all of (0, 1].
                debug_assert!(
                    grid.iter().filter(|&&x| x > 0.0).all(|&x| band.eval(x).coverage > 0),
                    "committing with uncovered estimate"
                );
                banded_to_grid_cdf(band, &grid)
            })
            .collect();
        let refs: Vec<&dyn Cdf> = estimates.iter().map(|e| e as &dyn Cdf).collect();
        let profile = CdfProfile::new(refs);
        let constraints = BidConstraints::free(self.k).truthful_first();
        let (bid, _) = maximize_on_grid(AuctionFormat::Uniform, &profile, &self.v, &constraints, &grid)
            .expect("truthful pin is always feasible");
        bid
    }
}

impl Learner for ExploreCommit {
    fn next_bid(&mut self, t: u64) -> BidVector {
        let bid = if t <= self.t_expl {
            self.exploring = true;
            self.exploration_bid(t)
        } else {
            self.exploring = false;
            if self.committed.is_none() {
                self.committed = Some(self.commit());
            }
            self.committed.clone().unwrap()
        };
        self.last_bid = Some(bid.clone());
        bid
    }

    fn observe(&mut self, feedback: &Feedback) {
        if !self.exploring {
            return;
        }
        let Feedback::Bandit { allocation, unit_prices } = feedback else {
            panic!("bandit learner got full-information feedback");
        };
        let last = self.last_bid.as_ref().expect("observe before any bid");
        let obs = observation_from_feedback(last, *allocation, unit_prices);
        self.bands.observe(&obs);
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Bandit
    }
}

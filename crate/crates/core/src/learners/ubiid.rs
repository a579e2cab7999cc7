//! Uniform-auction bidder for N symmetric unit-demand opponents.
//!
//! The opposing bids are the K largest of N i.i.d. draws, so every marginal
//! determines every other through the order-statistic polynomials. At each
//! point x the learner keeps the marginal with the most observations,
//! k*(x) = argmax_k t_k(x), and transfers its banded estimate to all K
//! marginals via P_k . P_{k*}^{-1}; the bid maximizes the resulting utility
//! estimate with the truthful pin b_1 = v_1.

use std::sync::Arc;

use crate::banded::{BandAccumulator, BandedCdfState};
use crate::bids::{AuctionFormat, BidVector, ValuationVector};
use crate::cdf::{Cdf, GridCdf};
use crate::optimizer::{maximize_on_grid, BidConstraints, CdfProfile};
use crate::order_stats::{order_stat_cdf_unchecked, OrderStatInverter};

use super::grid::{grid_target, observation_from_feedback, rebuild_due, thinned_grid};
use super::{Feedback, FeedbackKind, Learner};

pub struct Ubiid {
    v: ValuationVector,
    k: usize,
    n: usize,
    bands: BandedCdfState,
    accums: Vec<BandAccumulator>,
    grid: Arc<Vec<f64>>,
    estimates: Vec<GridCdf>,
    rounds: u64,
    last_bid: Option<BidVector>,
    inverters: Vec<OrderStatInverter>,
    // Per-grid-point transfer memo: rebuilds are skipped wherever the
    // (k*, estimate) pair is unchanged since the last round.
    memo_keys: Vec<(usize, f64)>,
    memo_rows: Vec<Vec<f64>>,
}

impl Ubiid {
    pub fn new(v: ValuationVector, n: usize) -> Self {
        let k = v.k();
        assert!(n >= k, "need at least K participants");
        let inverters = (1..=k)
            .map(|m| OrderStatInverter::new(n, m).expect("validated parameters"))
            .collect();
        let mut l = Ubiid {
            k,
            n,
            bands: BandedCdfState::new(k),
            accums: Vec::new(),
            grid: Arc::new(Vec::new()),
            estimates: Vec::new(),
            rounds: 0,
            last_bid: None,
            inverters,
            memo_keys: Vec::new(),
            memo_rows: Vec::new(),
            v,
        };
        l.rebuild_grid();
        l
    }

    pub fn bands(&self) -> &BandedCdfState {
        &self.bands
    }

    /// The transferred estimate of marginal k at x, from whichever marginal
    /// has the most coverage there. Zero where nothing covers x yet.
    pub fn transferred_estimate(&self, k: usize, x: f64) -> f64 {
        let best = (1..=self.k)
            .map(|m| (self.bands.eval(m, x), m))
            .max_by(|a, b| a.0.coverage.cmp(&b.0.coverage).then(b.1.cmp(&a.1)))
            .unwrap();
        match best.0.estimate {
            Some(est) => {
                let k_star = best.1;
                if k_star == k {
                    est
                } else {
                    order_stat_cdf_unchecked(self.n, k, self.inverters[k_star - 1].invert(est))
                }
            }
            None => 0.0,
        }
    }

    fn rebuild_grid(&mut self) {
        let mut candidates: Vec<f64> = Vec::new();
        for m in 1..=self.k {
            candidates.extend(self.bands.marginal(m).revealed_values());
        }
        let mut specials = vec![0.0, 1.0];
        specials.extend(self.v.values());
        self.grid = thinned_grid(candidates, &specials, grid_target(self.rounds));
        self.accums = (1..=self.k)
            .map(|m| {
                let mut acc = BandAccumulator::new(self.grid.len());
                for o in self.bands.marginal(m).observations() {
                    acc.add(o, &self.grid);
                }
                acc
            })
            .collect();
        self.memo_keys = vec![(usize::MAX, f64::NAN); self.grid.len()];
        self.memo_rows = vec![vec![0.0; self.k]; self.grid.len()];
        self.refresh_estimates();
    }

    fn refresh_estimates(&mut self) {
        let compiled: Vec<_> = self.accums.iter().map(|a| a.compile()).collect();
        let m = self.grid.len();
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; m]; self.k];
        for p in 0..m {
            // Most-observed marginal at this grid point; ties to smallest k.
            let mut k_star = 0usize;
            for k in 1..self.k {
                if compiled[k].coverage[p] > compiled[k_star].coverage[p] {
                    k_star = k;
                }
            }
            if compiled[k_star].coverage[p] == 0 {
                continue;
            }
            let est = compiled[k_star].known[p] as f64 / compiled[k_star].coverage[p] as f64;
            if self.memo_keys[p] != (k_star, est) {
                let base = self.inverters[k_star].invert(est);
                for (k, slot) in self.memo_rows[p].iter_mut().enumerate() {
                    *slot = if k == k_star { est } else { order_stat_cdf_unchecked(self.n, k + 1, base) };
                }
                self.memo_keys[p] = (k_star, est);
            }
            for (k, row) in rows.iter_mut().enumerate() {
                row[p] = self.memo_rows[p][k];
            }
        }
        self.estimates =
            rows.into_iter().map(|vals| GridCdf::new(self.grid.clone(), vals)).collect();
    }
}

impl Learner for Ubiid {
    fn next_bid(&mut self, _t: u64) -> BidVector {
        let profile = CdfProfile::new(self.estimates.iter().map(|e| e as &dyn Cdf).collect());
        let constraints = BidConstraints::free(self.k).truthful_first();
        let (bid, _) = maximize_on_grid(AuctionFormat::Uniform, &profile, &self.v, &constraints, &self.grid)
            .expect("truthful pin is always feasible");
        self.last_bid = Some(bid.clone());
        bid
    }

    fn observe(&mut self, feedback: &Feedback) {
        let Feedback::Bandit { allocation, unit_prices } = feedback else {
            panic!("bandit learner got full-information feedback");
        };
        let last = self.last_bid.as_ref().expect("observe before any bid");
        let obs = observation_from_feedback(last, *allocation, unit_prices);
        for (idx, slot) in obs.slots.iter().enumerate() {
            let m = obs.marginal_for_slot(idx + 1);
            self.accums[m - 1].add(slot, &self.grid);
        }
        self.bands.observe(&obs);
        self.rounds += 1;
        if rebuild_due(self.rounds) {
            self.rebuild_grid();
        } else {
            self.refresh_estimates();
        }
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Bandit
    }
}

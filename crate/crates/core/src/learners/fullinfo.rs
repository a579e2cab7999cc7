//! Full-information learner: plays the maximizer of the expected-utility
//! estimate built from the empirical marginal CDFs of everything observed so
//! far. The first round has no data and bids the valuation vector itself.

use std::sync::Arc;

use crate::bids::{AuctionFormat, BidVector, ValuationVector};
use crate::cdf::{Cdf, GridCdf};
use crate::optimizer::{maximize_on_grid, BidConstraints, CdfProfile};

use super::grid::{grid_target, rebuild_due, thinned_grid};
use super::{Feedback, FeedbackKind, Learner};

pub struct FullInfo {
    format: AuctionFormat,
    v: ValuationVector,
    k: usize,
    samples: Vec<Vec<f64>>,
    grid: Arc<Vec<f64>>,
    // cells[m][p] counts samples of marginal m+1 bucketed to grid point p
    // (the smallest grid point >= sample).
    cells: Vec<Vec<u32>>,
    needs_rebuild: bool,
    specials: Vec<f64>,
}

impl FullInfo {
    pub fn new(format: AuctionFormat, v: ValuationVector) -> Self {
        let k = v.k();
        let mut specials = vec![0.0, 1.0];
        specials.extend(v.values());
        FullInfo {
            format,
            k,
            v,
            samples: vec![Vec::new(); k],
            grid: Arc::new(Vec::new()),
            cells: Vec::new(),
            needs_rebuild: true,
            specials,
        }
    }

    fn bucket(grid: &[f64], x: f64) -> usize {
        grid.partition_point(|&g| g < x)
    }

    fn rebuild(&mut self) {
        let n = self.samples[0].len() as u64;
        let mut candidates = Vec::with_capacity(self.k * n as usize);
        for s in &self.samples {
            candidates.extend_from_slice(s);
        }
        self.grid = thinned_grid(candidates, &self.specials, grid_target(n));
        self.cells = vec![vec![0u32; self.grid.len()]; self.k];
        for (m, s) in self.samples.iter().enumerate() {
            for &x in s {
                self.cells[m][Self::bucket(&self.grid, x)] += 1;
            }
        }
        self.needs_rebuild = false;
    }

    fn marginal_estimates(&self) -> Vec<GridCdf> {
        let n = self.samples[0].len() as f64;
        self.cells
            .iter()
            .map(|cells| {
                let mut acc = 0.0;
                let vals: Vec<f64> = cells
                    .iter()
                    .map(|&c| {
                        acc += c as f64;
                        acc / n
                    })
                    .collect();
                GridCdf::new(self.grid.clone(), vals)
            })
            .collect()
    }
}

impl Learner for FullInfo {
    fn next_bid(&mut self, _t: u64) -> BidVector {
        if self.samples[0].is_empty() {
            return self.v.as_bid();
        }
        if self.needs_rebuild {
            self.rebuild();
        }
        let estimates = self.marginal_estimates();
        let refs: Vec<&dyn Cdf> = estimates.iter().map(|e| e as &dyn Cdf).collect();
        let profile = CdfProfile::new(refs);
        let mut constraints = BidConstraints::free(self.k);
        if self.format == AuctionFormat::Uniform {
            constraints = constraints.truthful_first();
        }
        let (bid, _) = maximize_on_grid(self.format, &profile, &self.v, &constraints, &self.grid)
            .expect("free constraints are always feasible");
        bid
    }

    fn observe(&mut self, feedback: &Feedback) {
        let Feedback::Full(beta) = feedback else {
            panic!("full-information learner got bandit feedback");
        };
        assert_eq!(beta.k(), self.k);
        for (m, &x) in beta.values().iter().enumerate() {
            self.samples[m].push(x);
        }
        let n = self.samples[0].len() as u64;
        if rebuild_due(n) {
            self.needs_rebuild = true;
        } else if !self.needs_rebuild {
            for (m, &x) in beta.values().iter().enumerate() {
                let p = Self::bucket(&self.grid, x);
                self.cells[m][p] += 1;
            }
        }
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Full
    }
}

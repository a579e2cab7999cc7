//! Baseline bidders: the truthful unit-demand strategy, a constant bid, and
//! a discretized explore-then-commit that only uses realized utility (the
//! strongest strategy class available to a discriminatory-format bandit).

use crate::bids::{BidVector, ValuationVector};

use super::{Feedback, FeedbackKind, Learner, LearnerError};

/// Bids (v_1, 0, ..., 0) forever. Zero regret in the uniform auction when
/// the bidder only values one unit.
pub struct TruthfulUnitDemand {
    bid: BidVector,
}

impl TruthfulUnitDemand {
    pub fn new(v: &ValuationVector) -> Self {
        let mut values = vec![0.0; v.k()];
        values[0] = v.get(1);
        TruthfulUnitDemand { bid: BidVector::new(values).expect("valid by construction") }
    }
}

impl Learner for TruthfulUnitDemand {
    fn next_bid(&mut self, _t: u64) -> BidVector {
        self.bid.clone()
    }

    fn observe(&mut self, _feedback: &Feedback) {}

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Bandit
    }
}

/// Replays a constant bid vector.
pub struct FixedBid {
    bid: BidVector,
}

impl FixedBid {
    pub fn new(bid: BidVector) -> Self {
        FixedBid { bid }
    }
}

impl Learner for FixedBid {
    fn next_bid(&mut self, _t: u64) -> BidVector {
        self.bid.clone()
    }

    fn observe(&mut self, _feedback: &Feedback) {}

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Bandit
    }
}

/// Explore-then-commit over the m-point scalar grid {j/(m-1)}, played as
/// flat bid vectors (b, ..., b). Uses realized utility only, which both
/// formats' bandit feedback reveal. Defaults: m = ceil(T^(1/3)) arms,
/// ceil(T^(2/3)/m) rounds per arm.
pub struct DiscretizedEtcDiscriminatory {
    v: ValuationVector,
    arm_values: Vec<f64>,
    t_expl: u64,
    totals: Vec<f64>,
    counts: Vec<u64>,
    committed: Option<usize>,
    last_arm: Option<usize>,
}

impl DiscretizedEtcDiscriminatory {
    pub fn new(
        v: ValuationVector,
        t_horizon: u64,
        arms: Option<usize>,
        t_expl: Option<u64>,
    ) -> Result<Self, LearnerError> {
        let m = arms.unwrap_or_else(|| (t_horizon as f64).powf(1.0 / 3.0).ceil() as usize).max(2);
        let per_arm = ((t_horizon as f64).powf(2.0 / 3.0) / m as f64).ceil() as u64;
        let t_expl = t_expl.unwrap_or_else(|| (m as u64 * per_arm.max(1)).min(t_horizon));
        if m < 2 {
            return Err(LearnerError::Invalid("need at least two grid arms".into()));
        }
        let arm_values: Vec<f64> = (0..m).map(|j| j as f64 / (m - 1) as f64).collect();
        Ok(DiscretizedEtcDiscriminatory {
            v,
            totals: vec![0.0; m],
            counts: vec![0; m],
            arm_values,
            t_expl,
            committed: None,
            last_arm: None,
        })
    }

    pub fn exploration_rounds(&self) -> u64 {
        self.t_expl
    }

    fn flat_bid(&self, arm: usize) -> BidVector {
        BidVector::new(vec![self.arm_values[arm]; self.v.k()]).expect("flat vector is sorted")
    }
}

impl Learner for DiscretizedEtcDiscriminatory {
    fn next_bid(&mut self, t: u64) -> BidVector {
        if t <= self.t_expl {
            let arm = ((t - 1) % self.arm_values.len() as u64) as usize;
            self.last_arm = Some(arm);
            return self.flat_bid(arm);
        }
        self.last_arm = None;
        let arm = *self.committed.get_or_insert_with(|| {
            let mut best = 0usize;
            let mut best_mean = f64::NEG_INFINITY;
            for (j, (&total, &count)) in self.totals.iter().zip(&self.counts).enumerate() {
                let mean = if count == 0 { f64::NEG_INFINITY } else { total / count as f64 };
                if mean > best_mean {
                    best_mean = mean;
                    best = j;
                }
            }
            best
        });
        self.flat_bid(arm)
    }

    fn observe(&mut self, feedback: &Feedback) {
        let Some(arm) = self.last_arm else { return };
        let Feedback::Bandit { allocation, unit_prices } = feedback else {
            panic!("bandit learner got full-information feedback");
        };
        debug_assert_eq!(*allocation, unit_prices.len());
        let utility: f64 = unit_prices
            .iter()
            .enumerate()
            .map(|(l, &p)| self.v.get(l + 1) - p)
            .sum();
        self.totals[arm] += utility;
        self.counts[arm] += 1;
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Bandit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truthful_unit_demand_constant() {
        let v = ValuationVector::new(vec![0.8, 0.0, 0.0]).unwrap();
        let mut l = TruthfulUnitDemand::new(&v);
        for t in 1..=5 {
            assert_eq!(l.next_bid(t).values(), &[0.8, 0.0, 0.0]);
        }
    }

    #[test]
    fn fixed_bid_constant() {
        let b = BidVector::new(vec![0.6, 0.2]).unwrap();
        let mut l = FixedBid::new(b.clone());
        assert_eq!(l.next_bid(1), b);
        l.observe(&Feedback::Bandit { allocation: 0, unit_prices: vec![] });
        assert_eq!(l.next_bid(2), b);
    }

    #[test]
    fn discretized_schedule_example() {
        // m = 3, K = 1, T_expl = 3: bids {0, 1/2, 1} in rounds 1..3.
        let v = ValuationVector::new(vec![1.0]).unwrap();
        let mut l = DiscretizedEtcDiscriminatory::new(v, 100, Some(3), Some(3)).unwrap();
        assert_eq!(l.next_bid(1).values(), &[0.0]);
        assert_eq!(l.next_bid(2).values(), &[0.5]);
        assert_eq!(l.next_bid(3).values(), &[1.0]);
    }

    #[test]
    fn commits_to_best_empirical_arm() {
        let v = ValuationVector::new(vec![1.0]).unwrap();
        let mut l = DiscretizedEtcDiscriminatory::new(v, 100, Some(3), Some(3)).unwrap();
        // Arm utilities: 0 -> 0.1, 1/2 -> 0.9, 1 -> 0.3.
        for (t, u) in [(1u64, 0.1), (2, 0.9), (3, 0.3)] {
            l.next_bid(t);
            l.observe(&Feedback::Bandit { allocation: 1, unit_prices: vec![1.0 - u] });
        }
        assert_eq!(l.next_bid(4).values(), &[0.5]);
        assert_eq!(l.next_bid(5).values(), &[0.5]);
    }
}

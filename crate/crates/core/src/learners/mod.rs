//! Sequential bidders. Each learner turns per-round feedback into the next
//! bid vector; all of them are deterministic functions of the feedback
//! stream, so episodes are reproducible from the adversary seed alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bids::{AuctionFormat, BidVector, ValuationVector};

mod baselines;
mod explore_commit;
mod fullinfo;
mod grid;
mod interval_refine;
mod ubiid;

pub use baselines::{DiscretizedEtcDiscriminatory, FixedBid, TruthfulUnitDemand};
pub use explore_commit::ExploreCommit;
pub use fullinfo::FullInfo;
pub use interval_refine::IntervalRefine;
pub use ubiid::Ubiid;

/// What a learner gets to see after one round.
#[derive(Debug, Clone)]
pub enum Feedback {
    /// The entire opposing bid vector.
    Full(BidVector),
    /// Allocation and the per-unit prices actually charged (empty when
    /// nothing was won). Under uniform pricing every entry equals the
    /// clearing price; under discriminatory pricing they repeat the
    /// bidder's own winning bids.
    Bandit { allocation: usize, unit_prices: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Full,
    Bandit,
}

pub trait Learner {
    /// Bid for round t (1-based).
    fn next_bid(&mut self, t: u64) -> BidVector;

    /// Consume the feedback of the round just played.
    fn observe(&mut self, feedback: &Feedback);

    /// The feedback regime this learner requires.
    fn feedback_kind(&self) -> FeedbackKind;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("{learner} requires the uniform format")]
    UniformOnly { learner: &'static str },
    #[error("i.i.d. learner needs N >= K: N = {n}, K = {k}")]
    NotEnoughParticipants { n: usize, k: usize },
    #[error("invalid learner parameter: {0}")]
    Invalid(String),
}

/// Learner selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LearnerSpec {
    /// Re-maximizes the empirical-CDF utility estimate every round.
    FullInfo,
    /// Round-robin extreme-bid exploration, then commit to the banded
    /// estimate's maximizer. Default exploration length ceil(K^(2/3) T^(2/3)).
    ExploreCommit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_expl: Option<u64>,
    },
    /// Successive interval refinement with endpoint-pinned exploration.
    IntervalRefine {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_expl: Option<u64>,
    },
    /// Order-statistic transfer estimator against N symmetric unit-demand
    /// opponents.
    Ubiid { n: usize },
    /// Bids (v_1, 0, ..., 0) forever.
    TruthfulUnitDemand,
    /// Replays a constant bid vector.
    FixedBid { bid: BidVector },
    /// Explore-then-commit over a fixed scalar bid grid using realized
    /// utility only; the discriminatory-format baseline.
    DiscretizedEtc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_expl: Option<u64>,
    },
}

impl LearnerSpec {
    /// The feedback regime a learner needs; None when it works under either
    /// (the constant baselines never look at feedback).
    pub fn required_feedback(&self) -> Option<FeedbackKind> {
        match self {
            LearnerSpec::FullInfo => Some(FeedbackKind::Full),
            LearnerSpec::TruthfulUnitDemand | LearnerSpec::FixedBid { .. } => None,
            _ => Some(FeedbackKind::Bandit),
        }
    }
}

/// Instantiate a learner for one episode of horizon `t_horizon`.
pub fn build_learner(
    spec: &LearnerSpec,
    format: AuctionFormat,
    v: &ValuationVector,
    t_horizon: u64,
) -> Result<Box<dyn Learner>, LearnerError> {
    let k = v.k();
    match spec {
        LearnerSpec::FullInfo => Ok(Box::new(FullInfo::new(format, v.clone()))),
        LearnerSpec::ExploreCommit { t_expl } => {
            if format != AuctionFormat::Uniform {
                return Err(LearnerError::UniformOnly { learner: "explore_commit" });
            }
            Ok(Box::new(ExploreCommit::new(v.clone(), t_horizon, *t_expl)))
        }
        LearnerSpec::IntervalRefine { t_expl } => {
            if format != AuctionFormat::Uniform {
                return Err(LearnerError::UniformOnly { learner: "interval_refine" });
            }
            Ok(Box::new(IntervalRefine::new(v.clone(), t_horizon, *t_expl)))
        }
        LearnerSpec::Ubiid { n } => {
            if format != AuctionFormat::Uniform {
                return Err(LearnerError::UniformOnly { learner: "ubiid" });
            }
            if *n < k {
                return Err(LearnerError::NotEnoughParticipants { n: *n, k });
            }
            Ok(Box::new(Ubiid::new(v.clone(), *n)))
        }
        LearnerSpec::TruthfulUnitDemand => Ok(Box::new(TruthfulUnitDemand::new(v))),
        LearnerSpec::FixedBid { bid } => {
            if bid.k() != k {
                return Err(LearnerError::Invalid(format!(
                    "fixed bid has K = {}, valuations have K = {k}",
                    bid.k()
                )));
            }
            Ok(Box::new(FixedBid::new(bid.clone())))
        }
        LearnerSpec::DiscretizedEtc { arms, t_expl } => Ok(Box::new(
            DiscretizedEtcDiscriminatory::new(v.clone(), t_horizon, *arms, *t_expl)?,
        )),
    }
}

/// Default exploration length ceil(K^(2/3) T^(2/3)), capped at the horizon.
pub fn default_exploration_rounds(k: usize, t_horizon: u64) -> u64 {
    let raw = (k as f64).powf(2.0 / 3.0) * (t_horizon as f64).powf(2.0 / 3.0);
    (raw.ceil() as u64).clamp(1, t_horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exploration_default_boundary() {
        // T = K = 1: a single exploration round.
        assert_eq!(default_exploration_rounds(1, 1), 1);
        assert_eq!(
            default_exploration_rounds(3, 4096),
            (3f64.powf(2.0 / 3.0) * 256.0).ceil() as u64
        );
    }

    #[test]
    fn builder_validates_format_and_dimensions() {
        let v = ValuationVector::new(vec![0.8, 0.4]).unwrap();
        assert!(matches!(
            build_learner(&LearnerSpec::ExploreCommit { t_expl: None }, AuctionFormat::Discriminatory, &v, 100),
            Err(LearnerError::UniformOnly { .. })
        ));
        assert!(matches!(
            build_learner(&LearnerSpec::Ubiid { n: 1 }, AuctionFormat::Uniform, &v, 100),
            Err(LearnerError::NotEnoughParticipants { .. })
        ));
        let bad_bid = BidVector::new(vec![0.5]).unwrap();
        assert!(build_learner(&LearnerSpec::FixedBid { bid: bad_bid }, AuctionFormat::Uniform, &v, 100).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = LearnerSpec::ExploreCommit { t_expl: Some(500) };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"name":"explore_commit","t_expl":500}"#);
        let back: LearnerSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
    }
}

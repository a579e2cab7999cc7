//! Repeated multi-unit auction simulator.
//!
//! A single bidder repeatedly participates in a K-item uniform-price or
//! discriminatory (pay-as-bid) auction against stochastic opposing bids.
//! This crate provides the auction mechanics, a family of adversary bid
//! distributions with exact marginal CDFs, CDF estimators for full and
//! censored (bandit) feedback, an exact dynamic-programming maximizer for
//! the expected-utility functionals, the learning bidders themselves, and a
//! seeded experiment harness that measures pseudo-regret against the best
//! fixed bid and fits log-log regret slopes.

pub mod auction;
pub mod banded;
pub mod bids;
pub mod cdf;
pub mod distributions;
pub mod hard_instances;
pub mod learners;
pub mod optimizer;
pub mod order_stats;

pub mod harness;

pub use auction::{allocate, extract_bandit_observation, oracle_settle, settle, AuctionOutcome, BanditObservation};
pub use bids::{AuctionFormat, BidVector, ValuationVector};
pub use distributions::{build_distribution, AdversaryDistribution, DistributionSpec};
pub use harness::{best_fixed_bid, fit_loglog_slope, run_episode, run_experiment, write_outputs, ExperimentConfig};

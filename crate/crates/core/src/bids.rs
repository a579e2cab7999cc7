//! Bid and valuation vectors: sorted non-increasing K-vectors in [0,1].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BidError {
    #[error("vector must have at least one entry")]
    Empty,
    #[error("entry {index} = {value} is outside [0,1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("entries must be non-increasing: values[{index}] = {value} < values[{next_index}] = {next_value}", next_index = index + 1)]
    NotSorted { index: usize, value: f64, next_value: f64 },
    #[error("dimension mismatch: expected K = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn validate_sorted_unit(values: &[f64]) -> Result<(), BidError> {
    if values.is_empty() {
        return Err(BidError::Empty);
    }
    for (i, &x) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&x) {
            return Err(BidError::OutOfRange { index: i, value: x });
        }
    }
    for i in 0..values.len() - 1 {
        if values[i] < values[i + 1] {
            return Err(BidError::NotSorted {
                index: i,
                value: values[i],
                next_value: values[i + 1],
            });
        }
    }
    Ok(())
}

/// A bid vector: K entries in [0,1], sorted non-increasing. Used both for the
/// bidder's own bids and for the aggregated opposing bids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BidVector(Vec<f64>);

impl BidVector {
    pub fn new(values: Vec<f64>) -> Result<Self, BidError> {
        validate_sorted_unit(&values)?;
        Ok(BidVector(values))
    }

    /// Construct from values already known to be sorted and in range.
    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(validate_sorted_unit(&values).is_ok(), "invalid bid vector: {values:?}");
        BidVector(values)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// b_i with 1-based indexing and the b_{K+1} = 0 convention.
    pub fn get(&self, i: usize) -> f64 {
        if i == 0 {
            panic!("bid index is 1-based");
        }
        if i <= self.0.len() {
            self.0[i - 1]
        } else {
            0.0
        }
    }

    pub fn check_same_k(&self, other: &BidVector) -> Result<(), BidError> {
        if self.k() != other.k() {
            return Err(BidError::DimensionMismatch { expected: self.k(), got: other.k() });
        }
        Ok(())
    }
}

impl From<BidVector> for Vec<f64> {
    fn from(b: BidVector) -> Vec<f64> {
        b.0
    }
}

impl TryFrom<Vec<f64>> for BidVector {
    type Error = BidError;
    fn try_from(values: Vec<f64>) -> Result<Self, BidError> {
        BidVector::new(values)
    }
}

/// Marginal valuations v_1 >= v_2 >= ... >= v_K in [0,1]. Owning n items is
/// worth v_1 + ... + v_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ValuationVector(Vec<f64>);

impl ValuationVector {
    pub fn new(values: Vec<f64>) -> Result<Self, BidError> {
        validate_sorted_unit(&values)?;
        Ok(ValuationVector(values))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// v_i, 1-based.
    pub fn get(&self, i: usize) -> f64 {
        self.0[i - 1]
    }

    /// Prefix sums: out[i] = v_1 + ... + v_i, out[0] = 0.
    pub fn prefix_sums(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for &v in &self.0 {
            acc += v;
            out.push(acc);
        }
        out
    }

    /// The bid vector (v_1, ..., v_K) itself (it is sorted and in range).
    pub fn as_bid(&self) -> BidVector {
        BidVector::from_sorted_unchecked(self.0.clone())
    }

    /// Unit-demand shape: v_1 > 0 and all later valuations zero.
    pub fn is_unit_demand(&self) -> bool {
        self.0[0] > 0.0 && self.0[1..].iter().all(|&v| v == 0.0)
    }
}

impl From<ValuationVector> for Vec<f64> {
    fn from(v: ValuationVector) -> Vec<f64> {
        v.0
    }
}

impl TryFrom<Vec<f64>> for ValuationVector {
    type Error = BidError;
    fn try_from(values: Vec<f64>) -> Result<Self, BidError> {
        ValuationVector::new(values)
    }
}

/// Which payment rule the auction uses. Allocation is identical in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuctionFormat {
    Uniform,
    Discriminatory,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_out_of_range() {
        assert!(matches!(BidVector::new(vec![0.2, 0.5]), Err(BidError::NotSorted { .. })));
        assert!(matches!(BidVector::new(vec![1.2, 0.5]), Err(BidError::OutOfRange { .. })));
        assert!(matches!(BidVector::new(vec![]), Err(BidError::Empty)));
        assert!(BidVector::new(vec![0.5, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn index_convention_pads_zero() {
        let b = BidVector::new(vec![0.9, 0.4]).unwrap();
        assert_eq!(b.get(1), 0.9);
        assert_eq!(b.get(2), 0.4);
        assert_eq!(b.get(3), 0.0);
    }

    #[test]
    fn serde_round_trip_validates() {
        let b: BidVector = serde_json::from_str("[0.9,0.4]").unwrap();
        assert_eq!(b.values(), &[0.9, 0.4]);
        assert!(serde_json::from_str::<BidVector>("[0.4,0.9]").is_err());
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, "[0.9,0.4]");
    }

    #[test]
    fn valuation_prefix_sums() {
        let v = ValuationVector::new(vec![1.0, 0.5, 0.25]).unwrap();
        assert_eq!(v.prefix_sums(), vec![0.0, 1.0, 1.5, 1.75]);
        assert!(!v.is_unit_demand());
        assert!(ValuationVector::new(vec![0.8, 0.0]).unwrap().is_unit_demand());
    }
}

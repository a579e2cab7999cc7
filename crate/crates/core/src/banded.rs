//! Banded CDF estimation from censored bandit observations.
//!
//! Each uniform-auction round contributes, per marginal k, one interval
//! (lo, hi] plus what is known about beta_k relative to it: its exact value
//! if it landed inside, or just "below"/"above". The estimate at x is the
//! fraction of covering intervals for which beta_k <= x is known to hold; it
//! is only defined where at least one stored interval covers x.

use crate::auction::{BanditObservation, SlotObservation, SlotStatus};

/// Estimate at one query point: the coverage count t_k(x) and, when coverage
/// is positive, the ratio estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandedEstimate {
    pub coverage: u64,
    /// None exactly when coverage == 0; never a fabricated value.
    pub estimate: Option<f64>,
}

/// Censored estimator for a single marginal.
#[derive(Debug, Clone, Default)]
pub struct BandedCdf {
    obs: Vec<SlotObservation>,
}

impl BandedCdf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, slot: SlotObservation) {
        self.obs.push(slot);
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn eval(&self, x: f64) -> BandedEstimate {
        let mut coverage = 0u64;
        let mut known = 0u64;
        for o in &self.obs {
            if o.lo < x && x <= o.hi {
                coverage += 1;
                match o.status {
                    SlotStatus::Below => known += 1,
                    SlotStatus::At(v) if v <= x => known += 1,
                    _ => {}
                }
            }
        }
        BandedEstimate {
            coverage,
            estimate: if coverage > 0 { Some(known as f64 / coverage as f64) } else { None },
        }
    }

    /// Revealed exact values; these are the jump points of the estimate.
    pub fn revealed_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.obs.iter().filter_map(|o| match o.status {
            SlotStatus::At(v) => Some(v),
            _ => None,
        })
    }

    pub fn interval_endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.obs.iter().flat_map(|o| [o.lo, o.hi])
    }

    pub fn observations(&self) -> &[SlotObservation] {
        &self.obs
    }

    /// One-pass evaluation of (coverage, known) at every point of a sorted
    /// grid, via difference arrays over the observation interval endpoints.
    pub fn compile_on_grid(&self, grid: &[f64]) -> CompiledBands {
        let mut acc = BandAccumulator::new(grid.len());
        for o in &self.obs {
            acc.add(o, grid);
        }
        acc.compile()
    }
}

/// Incremental difference-array form of the banded estimator over a frozen
/// grid: observations are folded in as they arrive in O(log m), the
/// per-grid-point counts come out as one prefix pass.
#[derive(Debug, Clone)]
pub struct BandAccumulator {
    cover_diff: Vec<i64>,
    known_diff: Vec<i64>,
}

impl BandAccumulator {
    pub fn new(grid_len: usize) -> Self {
        BandAccumulator { cover_diff: vec![0; grid_len + 1], known_diff: vec![0; grid_len + 1] }
    }

    pub fn add(&mut self, o: &SlotObservation, grid: &[f64]) {
        // Grid indices with lo < g <= hi.
        let l = grid.partition_point(|&g| g <= o.lo);
        let r = grid.partition_point(|&g| g <= o.hi);
        if l >= r {
            return;
        }
        self.cover_diff[l] += 1;
        self.cover_diff[r] -= 1;
        match o.status {
            SlotStatus::Below => {
                self.known_diff[l] += 1;
                self.known_diff[r] -= 1;
            }
            SlotStatus::At(v) => {
                // Known beta <= g exactly for g >= v (and g in the interval).
                let lv = grid.partition_point(|&g| g < v).max(l);
                if lv < r {
                    self.known_diff[lv] += 1;
                    self.known_diff[r] -= 1;
                }
            }
            SlotStatus::Above => {}
        }
    }

    pub fn compile(&self) -> CompiledBands {
        let m = self.cover_diff.len() - 1;
        let mut coverage = vec![0u64; m];
        let mut known = vec![0u64; m];
        let (mut c, mut k) = (0i64, 0i64);
        for i in 0..m {
            c += self.cover_diff[i];
            k += self.known_diff[i];
            coverage[i] = c as u64;
            known[i] = k as u64;
        }
        CompiledBands { coverage, known }
    }
}

/// Per-grid-point coverage and known counts for one marginal.
#[derive(Debug, Clone)]
pub struct CompiledBands {
    pub coverage: Vec<u64>,
    pub known: Vec<u64>,
}

impl CompiledBands {
    pub fn estimate(&self, i: usize) -> Option<f64> {
        if self.coverage[i] > 0 {
            Some(self.known[i] as f64 / self.coverage[i] as f64)
        } else {
            None
        }
    }
}

/// Banded estimators for all K marginals of the opposing bid vector.
#[derive(Debug, Clone)]
pub struct BandedCdfState {
    marginals: Vec<BandedCdf>,
}

impl BandedCdfState {
    pub fn new(k: usize) -> Self {
        BandedCdfState { marginals: (0..k).map(|_| BandedCdf::new()).collect() }
    }

    pub fn k(&self) -> usize {
        self.marginals.len()
    }

    /// Record one round of feedback: slot i speaks about marginal K-i+1.
    pub fn observe(&mut self, obs: &BanditObservation) {
        assert_eq!(obs.k(), self.k(), "observation K does not match estimator K");
        for (idx, slot) in obs.slots.iter().enumerate() {
            let i = idx + 1;
            let k = obs.marginal_for_slot(i);
            self.marginals[k - 1].observe(*slot);
        }
    }

    /// (estimate, coverage) for marginal k at x; estimate is None when no
    /// stored interval covers x.
    pub fn eval(&self, k: usize, x: f64) -> BandedEstimate {
        self.marginals[k - 1].eval(x)
    }

    pub fn marginal(&self, k: usize) -> &BandedCdf {
        &self.marginals[k - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::extract_bandit_observation;
    use crate::bids::BidVector;

    fn slot(lo: f64, hi: f64, status: SlotStatus) -> SlotObservation {
        SlotObservation { lo, hi, status }
    }

    #[test]
    fn single_revealed_value() {
        let mut b = BandedCdf::new();
        b.observe(slot(0.3, 0.7, SlotStatus::At(0.5)));
        assert_eq!(b.eval(0.6), BandedEstimate { coverage: 1, estimate: Some(1.0) });
        assert_eq!(b.eval(0.4), BandedEstimate { coverage: 1, estimate: Some(0.0) });
        assert_eq!(b.eval(0.2), BandedEstimate { coverage: 0, estimate: None });
        // Right-continuity of the interval: lo itself is not covered.
        assert_eq!(b.eval(0.3).coverage, 0);
        assert_eq!(b.eval(0.7).coverage, 1);
    }

    #[test]
    fn below_and_above() {
        let mut b = BandedCdf::new();
        b.observe(slot(0.3, 0.7, SlotStatus::Below));
        assert_eq!(b.eval(0.5).estimate, Some(1.0));
        let mut b = BandedCdf::new();
        b.observe(slot(0.3, 0.7, SlotStatus::Above));
        assert_eq!(b.eval(0.5).estimate, Some(0.0));
    }

    #[test]
    fn mixed_coverage_ratio() {
        let mut b = BandedCdf::new();
        b.observe(slot(0.3, 0.7, SlotStatus::Below));
        b.observe(slot(0.2, 0.8, SlotStatus::Above));
        let e = b.eval(0.5);
        assert_eq!(e.coverage, 2);
        assert_eq!(e.estimate, Some(0.5));
    }

    #[test]
    fn compile_matches_pointwise_eval() {
        let mut b = BandedCdf::new();
        b.observe(slot(0.3, 0.7, SlotStatus::At(0.5)));
        b.observe(slot(0.0, 0.4, SlotStatus::Below));
        b.observe(slot(0.2, 0.9, SlotStatus::Above));
        b.observe(slot(0.45, 0.55, SlotStatus::At(0.5)));
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let compiled = b.compile_on_grid(&grid);
        for (i, &g) in grid.iter().enumerate() {
            let e = b.eval(g);
            assert_eq!(compiled.coverage[i], e.coverage, "coverage at {g}");
            assert_eq!(compiled.estimate(i), e.estimate, "estimate at {g}");
        }
    }

    #[test]
    fn slots_route_to_marginals() {
        // K=2, bid (0.7, 0.3) against (0.9, 0.5): slot 1 reveals beta_2 = 0.5,
        // slot 2 is above for beta_1.
        let b = BidVector::new(vec![0.7, 0.3]).unwrap();
        let beta = BidVector::new(vec![0.9, 0.5]).unwrap();
        let obs = extract_bandit_observation(&b, &beta).unwrap();
        let mut state = BandedCdfState::new(2);
        state.observe(&obs);
        // Marginal 2 (= slot 1) saw the value 0.5 on (0.3, 0.7].
        assert_eq!(state.eval(2, 0.6).estimate, Some(1.0));
        assert_eq!(state.eval(2, 0.4).estimate, Some(0.0));
        // Marginal 1 (= slot 2) is above (0, 0.3].
        assert_eq!(state.eval(1, 0.2).estimate, Some(0.0));
        assert_eq!(state.eval(1, 0.5).coverage, 0);
    }

    #[test]
    fn estimate_monotone_where_coverage_constant() {
        let mut b = BandedCdf::new();
        b.observe(slot(0.0, 1.0, SlotStatus::At(0.31)));
        b.observe(slot(0.0, 1.0, SlotStatus::At(0.62)));
        b.observe(slot(0.0, 1.0, SlotStatus::Above));
        let mut prev = -1.0;
        for i in 1..=100 {
            let x = i as f64 / 100.0;
            let e = b.eval(x);
            assert_eq!(e.coverage, 3);
            let v = e.estimate.unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }
}

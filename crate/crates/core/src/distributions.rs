//! Adversary bid processes: samplable distributions over sorted bid vectors
//! that also expose their exact marginal CDFs in closed form. The exact
//! marginals are what the pseudo-regret oracle evaluates against, so the
//! sampler and the CDFs of each kind must agree (tested by DKW bands).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bids::BidVector;
use crate::cdf::{inverse_monotone, Cdf, EstimatorError, PiecewiseLinearCdf, StepCdf};
use crate::hard_instances::{params, FirstPriceHardCdf, Uniform3HardCdf};
use crate::order_stats::{order_stat_cdf_unchecked, MAX_N};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("atom probabilities sum to {0}, expected 1")]
    ProbabilityMass(f64),
    #[error("atom {index} has K = {got}, expected {expected}")]
    AtomDimension { index: usize, expected: usize, got: usize },
    #[error("need N >= K i.i.d. participants: N = {n}, K = {k}")]
    NotEnoughParticipants { n: usize, k: usize },
    #[error("interval constraint violated: {0}")]
    Intervals(String),
    #[error("horizon {horizon} too small for perturbation index {index}: {detail}")]
    HorizonTooSmall { horizon: u64, index: u64, detail: String },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Base law for i.i.d.-order-statistic adversaries. Continuous
/// strictly-increasing CDFs plus the two-point Bernoulli special case; mixed
/// atom/continuous bases are not representable, which keeps tie probability
/// zero for the continuous kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseCdfSpec {
    /// F(x) = x on [0,1].
    Uniform,
    /// F(x) = x^alpha, alpha >= 1.
    Power { alpha: f64 },
    /// Each participant bids `high` with probability p, else 0.
    Bernoulli { p: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAtom {
    pub bid: BidVector,
    pub prob: f64,
}

/// Declarative description of an adversary; `build_distribution` turns it
/// into a validated sampler + exact-marginal bundle for a given K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Finite support over whole bid vectors.
    Discrete { atoms: Vec<DiscreteAtom> },
    /// Opposing bids are the K largest of N i.i.d. draws from `base`.
    IidOrderStats { n: usize, base: BaseCdfSpec },
    /// beta_k drawn uniformly on its own interval; adjacent intervals are
    /// separated by at least `delta` (any positive gap if omitted).
    /// Degenerate intervals (lo == hi) are point masses.
    DeltaSeparated {
        intervals: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    /// Single-item hard family: base law with the mass of one width-T^(-1/3)
    /// interval collapsed onto its left endpoint. For K > 1 the draw is
    /// scaled onto [0, 1/2] and padded with deterministic high bids.
    FirstPriceHard { horizon: u64, index: u64 },
    /// Three-item hard family with the triangular perturbation of the second
    /// marginal on interval `index`; epsilon defaults to T^(-1/3)/700.
    Uniform3Hard {
        horizon: u64,
        index: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Two opponents each bidding (2/3) * Bernoulli(p); K = 2.
    IidBernoulliHard { p: f64 },
}

/// One marginal CDF of an adversary distribution, in closed form.
#[derive(Debug, Clone)]
pub enum DistMarginal {
    Step(StepCdf),
    Linear(PiecewiseLinearCdf),
    OrderStat(OrderStatMarginal),
    FirstPriceHard(FirstPriceHardCdf),
    Uniform3Hard(Uniform3HardCdf),
}

impl Cdf for DistMarginal {
    fn eval(&self, x: f64) -> f64 {
        match self {
            DistMarginal::Step(c) => c.eval(x),
            DistMarginal::Linear(c) => c.eval(x),
            DistMarginal::OrderStat(c) => c.eval(x),
            DistMarginal::FirstPriceHard(c) => c.eval(x),
            DistMarginal::Uniform3Hard(c) => c.eval(x),
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            DistMarginal::Step(c) => c.integral(a, b),
            DistMarginal::Linear(c) => c.integral(a, b),
            DistMarginal::OrderStat(c) => c.integral(a, b),
            DistMarginal::FirstPriceHard(c) => c.integral(a, b),
            DistMarginal::Uniform3Hard(c) => c.integral(a, b),
        }
    }

    fn stieltjes_x(&self, a: f64, b: f64) -> f64 {
        match self {
            DistMarginal::Step(c) => c.stieltjes_x(a, b),
            DistMarginal::Linear(c) => c.stieltjes_x(a, b),
            DistMarginal::OrderStat(c) => c.stieltjes_x(a, b),
            DistMarginal::FirstPriceHard(c) => c.stieltjes_x(a, b),
            DistMarginal::Uniform3Hard(c) => c.stieltjes_x(a, b),
        }
    }

    fn grid_hints(&self) -> Vec<f64> {
        match self {
            DistMarginal::Step(c) => c.grid_hints(),
            DistMarginal::Linear(c) => c.grid_hints(),
            DistMarginal::OrderStat(c) => c.grid_hints(),
            DistMarginal::FirstPriceHard(c) => c.grid_hints(),
            DistMarginal::Uniform3Hard(c) => c.grid_hints(),
        }
    }
}

/// CDF of the k-th largest of N i.i.d. draws from a continuous base.
#[derive(Debug, Clone)]
pub struct OrderStatMarginal {
    n: usize,
    k: usize,
    base: ContinuousBase,
}

#[derive(Debug, Clone, Copy)]
enum ContinuousBase {
    Uniform,
    Power { alpha: f64 },
}

impl ContinuousBase {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ContinuousBase::Uniform => x,
            ContinuousBase::Power { alpha } => x.powf(*alpha),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            ContinuousBase::Uniform => u,
            ContinuousBase::Power { alpha } => u.powf(1.0 / alpha),
        }
    }
}

impl Cdf for OrderStatMarginal {
    fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        order_stat_cdf_unchecked(self.n, self.k, self.base.eval(x))
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        crate::cdf::gauss_legendre_32(a, b, |x| self.eval(x))
    }
}

enum Sampler {
    Discrete { atoms: Vec<(Vec<f64>, f64)> },
    OrderStats { n: usize, base: BaseSampler },
    DeltaSeparated { intervals: Vec<(f64, f64)> },
    FirstPriceHard { cdf: FirstPriceHardCdf, pads: Vec<f64> },
    Uniform3Hard,
}

#[derive(Clone, Copy)]
enum BaseSampler {
    Continuous(ContinuousBase),
    Bernoulli { p: f64, high: f64 },
}

/// A validated adversary: deterministic seeded sampling of sorted bid
/// vectors plus exact marginal CDFs for every coordinate.
pub struct AdversaryDistribution {
    spec: DistributionSpec,
    k: usize,
    marginals: Vec<DistMarginal>,
    sampler: Sampler,
}

impl AdversaryDistribution {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Exact P(beta_k <= x), 1-based k.
    pub fn marginal_cdf(&self, k: usize, x: f64) -> Result<f64, DistributionError> {
        if k == 0 || k > self.k {
            return Err(DistributionError::Invalid(format!("marginal index {k} out of 1..={}", self.k)));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(DistributionError::Invalid(format!("x = {x} outside [0,1]")));
        }
        Ok(self.marginals[k - 1].eval(x))
    }

    pub fn marginal(&self, k: usize) -> &DistMarginal {
        &self.marginals[k - 1]
    }

    /// All K marginals as CDF evaluators, ordered from beta_1 (largest).
    pub fn profile(&self) -> Vec<&dyn Cdf> {
        self.marginals.iter().map(|m| m as &dyn Cdf).collect()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> BidVector {
        let values = match &self.sampler {
            Sampler::Discrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = &atoms[atoms.len() - 1].0;
                for (bid, p) in atoms {
                    acc += p;
                    if u < acc {
                        chosen = bid;
                        break;
                    }
                }
                chosen.clone()
            }
            Sampler::OrderStats { n, base } => {
                let mut draws: Vec<f64> = (0..*n)
                    .map(|_| match base {
                        BaseSampler::Continuous(c) => c.quantile(rng.random()),
                        BaseSampler::Bernoulli { p, high } => {
                            if rng.random::<f64>() < *p {
                                *high
                            } else {
                                0.0
                            }
                        }
                    })
                    .collect();
                draws.sort_by(|a, b| b.partial_cmp(a).unwrap());
                draws.truncate(self.k);
                draws
            }
            Sampler::DeltaSeparated { intervals } => intervals
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { lo + (hi - lo) * rng.random::<f64>() })
                .collect(),
            Sampler::FirstPriceHard { cdf, pads } => {
                let mut values = pads.clone();
                values.push(cdf.quantile(rng.random()));
                values
            }
            Sampler::Uniform3Hard => {
                // Comonotone coupling: one uniform level inverted through all
                // three marginals (they are pointwise ordered, so the result
                // is sorted).
                let u: f64 = rng.random();
                self.marginals
                    .iter()
                    .map(|m| inverse_monotone(|y| m.eval(y), u, 0.0, 1.0))
                    .collect()
            }
        };
        BidVector::from_sorted_unchecked(values)
    }
}

/// Validate a spec for a K-item auction and construct the distribution.
pub fn build_distribution(
    spec: &DistributionSpec,
    k: usize,
) -> Result<AdversaryDistribution, DistributionError> {
    if k == 0 {
        return Err(DistributionError::Invalid("K must be >= 1".into()));
    }
    let (marginals, sampler) = match spec {
        DistributionSpec::Discrete { atoms } => {
            if atoms.is_empty() {
                return Err(DistributionError::Invalid("no atoms".into()));
            }
            let total: f64 = atoms.iter().map(|a| a.prob).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(DistributionError::ProbabilityMass(total));
            }
            for (i, a) in atoms.iter().enumerate() {
                if a.bid.k() != k {
                    return Err(DistributionError::AtomDimension { index: i, expected: k, got: a.bid.k() });
                }
                if a.prob < 0.0 {
                    return Err(DistributionError::Invalid(format!("atom {i} has negative probability")));
                }
            }
            let marginals = (1..=k)
                .map(|m| {
                    let pts: Vec<(f64, f64)> = atoms.iter().map(|a| (a.bid.get(m), a.prob)).collect();
                    Ok(DistMarginal::Step(StepCdf::from_points(&pts)?))
                })
                .collect::<Result<Vec<_>, DistributionError>>()?;
            let sampler = Sampler::Discrete {
                atoms: atoms.iter().map(|a| (a.bid.values().to_vec(), a.prob)).collect(),
            };
            (marginals, sampler)
        }
        DistributionSpec::IidOrderStats { n, base } => {
            build_order_stats(*n, base, k)?
        }
        DistributionSpec::DeltaSeparated { intervals, delta } => {
            if intervals.len() != k {
                return Err(DistributionError::Intervals(format!(
                    "{} intervals for K = {k}",
                    intervals.len()
                )));
            }
            for &(lo, hi) in intervals {
                if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                    return Err(DistributionError::Intervals(format!("bad interval [{lo}, {hi}]")));
                }
            }
            let min_gap = delta.unwrap_or(0.0);
            if delta.is_some() && min_gap <= 0.0 {
                return Err(DistributionError::Intervals(format!("delta = {min_gap} must be positive")));
            }
            for w in intervals.windows(2) {
                let gap = w[0].0 - w[1].1; // min I_k - max I_{k+1}
                if gap < min_gap.max(f64::MIN_POSITIVE) - 1e-12 {
                    return Err(DistributionError::Intervals(format!(
                        "gap {gap} between [{}, {}] and [{}, {}] is below the required separation",
                        w[0].0, w[0].1, w[1].0, w[1].1
                    )));
                }
            }
            let marginals = intervals
                .iter()
                .map(|&(lo, hi)| {
                    if lo == hi {
                        Ok(DistMarginal::Step(StepCdf::from_points(&[(lo, 1.0)])?))
                    } else {
                        Ok(DistMarginal::Linear(PiecewiseLinearCdf::uniform_on(lo, hi)?))
                    }
                })
                .collect::<Result<Vec<_>, DistributionError>>()?;
            (marginals, Sampler::DeltaSeparated { intervals: intervals.clone() })
        }
        DistributionSpec::FirstPriceHard { horizon, index } => {
            if *horizon < 2 {
                return Err(DistributionError::HorizonTooSmall {
                    horizon: *horizon,
                    index: *index,
                    detail: "horizon must be >= 2".into(),
                });
            }
            let (lo, hi) = params::first_price_interval(*horizon, *index);
            if hi > 1.0 / 3.0 + 1e-12 {
                return Err(DistributionError::HorizonTooSmall {
                    horizon: *horizon,
                    index: *index,
                    detail: format!("perturbation interval [{lo}, {hi}) exceeds 1/3"),
                });
            }
            let scale = if k == 1 { 1.0 } else { 0.5 };
            let cdf = FirstPriceHardCdf::new(lo, hi.min(1.0 / 3.0), scale);
            // Deterministic high pads 1 - j/(2K) occupy coordinates 1..K-1.
            let pads: Vec<f64> = (1..k).map(|j| 1.0 - j as f64 / (2.0 * k as f64)).collect();
            let mut marginals: Vec<DistMarginal> = pads
                .iter()
                .map(|&p| Ok(DistMarginal::Step(StepCdf::from_points(&[(p, 1.0)])?)))
                .collect::<Result<Vec<_>, DistributionError>>()?;
            marginals.push(DistMarginal::FirstPriceHard(cdf.clone()));
            (marginals, Sampler::FirstPriceHard { cdf, pads })
        }
        DistributionSpec::Uniform3Hard { horizon, index, epsilon } => {
            if k != 3 {
                return Err(DistributionError::Invalid(format!("this family requires K = 3, got {k}")));
            }
            let eps = epsilon.unwrap_or_else(|| params::uniform3_default_epsilon(*horizon));
            if !(eps > 0.0) {
                return Err(DistributionError::Invalid(format!("epsilon = {eps} must be positive")));
            }
            if *index as f64 > 1.0 / (7.0 * eps) {
                return Err(DistributionError::HorizonTooSmall {
                    horizon: *horizon,
                    index: *index,
                    detail: format!("index exceeds floor(1/(7 epsilon)) with epsilon = {eps}"),
                });
            }
            let (lo, hi) = params::uniform3_interval(*index, eps);
            if hi > params::MID_END {
                return Err(DistributionError::HorizonTooSmall {
                    horizon: *horizon,
                    index: *index,
                    detail: format!("perturbation interval [{lo}, {hi}] leaves the log branch"),
                });
            }
            let marginals = vec![
                DistMarginal::Uniform3Hard(Uniform3HardCdf::new(1, None)),
                DistMarginal::Uniform3Hard(Uniform3HardCdf::new(2, Some((lo, hi)))),
                DistMarginal::Uniform3Hard(Uniform3HardCdf::new(3, None)),
            ];
            (marginals, Sampler::Uniform3Hard)
        }
        DistributionSpec::IidBernoulliHard { p } => {
            if k != 2 {
                return Err(DistributionError::Invalid(format!("this family requires K = 2, got {k}")));
            }
            if !(0.0..=1.0).contains(p) {
                return Err(DistributionError::Invalid(format!("p = {p} outside [0,1]")));
            }
            build_order_stats(2, &BaseCdfSpec::Bernoulli { p: *p, high: 2.0 / 3.0 }, k)?
        }
    };
    Ok(AdversaryDistribution { spec: spec.clone(), k, marginals, sampler })
}

fn build_order_stats(
    n: usize,
    base: &BaseCdfSpec,
    k: usize,
) -> Result<(Vec<DistMarginal>, Sampler), DistributionError> {
    if n < k {
        return Err(DistributionError::NotEnoughParticipants { n, k });
    }
    if n > MAX_N {
        return Err(DistributionError::Invalid(format!("N = {n} exceeds supported maximum {MAX_N}")));
    }
    let (cbase, sampler_base) = match base {
        BaseCdfSpec::Uniform => (Some(ContinuousBase::Uniform), BaseSampler::Continuous(ContinuousBase::Uniform)),
        BaseCdfSpec::Power { alpha } => {
            if !(*alpha >= 1.0) {
                return Err(DistributionError::Invalid(format!(
                    "power base needs alpha >= 1, got {alpha}"
                )));
            }
            let c = ContinuousBase::Power { alpha: *alpha };
            (Some(c), BaseSampler::Continuous(c))
        }
        BaseCdfSpec::Bernoulli { p, high } => {
            if !(0.0..=1.0).contains(p) || !(0.0 < *high && *high <= 1.0) {
                return Err(DistributionError::Invalid(format!(
                    "bernoulli base needs p in [0,1] and high in (0,1], got p = {p}, high = {high}"
                )));
            }
            (None, BaseSampler::Bernoulli { p: *p, high: *high })
        }
    };
    let marginals = (1..=k)
        .map(|m| match cbase {
            Some(c) => Ok(DistMarginal::OrderStat(OrderStatMarginal { n, k: m, base: c })),
            None => {
                // Bernoulli base: the marginal is a two-point step CDF.
                let BaseCdfSpec::Bernoulli { p, high } = base else { unreachable!() };
                let at_zero = order_stat_cdf_unchecked(n, m, 1.0 - p);
                Ok(DistMarginal::Step(StepCdf::from_points(&[
                    (0.0, at_zero),
                    (*high, 1.0 - at_zero),
                ])?))
            }
        })
        .collect::<Result<Vec<_>, DistributionError>>()?;
    Ok((marginals, Sampler::OrderStats { n, base: sampler_base }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::{dkw_epsilon, EcdfBuilder};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bid(values: &[f64]) -> BidVector {
        BidVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn order_stats_marginal_examples() {
        let d = build_distribution(&DistributionSpec::IidOrderStats { n: 2, base: BaseCdfSpec::Uniform }, 2).unwrap();
        assert!((d.marginal_cdf(1, 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!((d.marginal_cdf(2, 0.5).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(d.marginal_cdf(1, 1.0).unwrap(), 1.0);
        assert!(d.marginal_cdf(3, 0.5).is_err());
        assert!(d.marginal_cdf(0, 0.5).is_err());
    }

    #[test]
    fn delta_separated_support() {
        let spec = DistributionSpec::DeltaSeparated {
            intervals: vec![(0.8, 0.9), (0.1, 0.2)],
            delta: Some(0.5),
        };
        let d = build_distribution(&spec, 2).unwrap();
        assert_eq!(d.marginal_cdf(1, 0.5).unwrap(), 0.0);
        assert_eq!(d.marginal_cdf(2, 0.5).unwrap(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let b = d.sample(&mut rng);
            assert!((0.8..=0.9).contains(&b.get(1)));
            assert!((0.1..=0.2).contains(&b.get(2)));
        }
    }

    #[test]
    fn construction_errors_name_the_constraint() {
        let bad_mass = DistributionSpec::Discrete {
            atoms: vec![DiscreteAtom { bid: bid(&[0.5]), prob: 0.7 }],
        };
        assert!(matches!(build_distribution(&bad_mass, 1), Err(DistributionError::ProbabilityMass(_))));

        let overlapping = DistributionSpec::DeltaSeparated {
            intervals: vec![(0.5, 0.9), (0.4, 0.6)],
            delta: None,
        };
        assert!(matches!(build_distribution(&overlapping, 2), Err(DistributionError::Intervals(_))));

        let too_few = DistributionSpec::IidOrderStats { n: 1, base: BaseCdfSpec::Uniform };
        assert!(matches!(
            build_distribution(&too_few, 2),
            Err(DistributionError::NotEnoughParticipants { n: 1, k: 2 })
        ));

        let bad_index = DistributionSpec::FirstPriceHard { horizon: 8, index: 99 };
        assert!(matches!(build_distribution(&bad_index, 1), Err(DistributionError::HorizonTooSmall { .. })));
    }

    #[test]
    fn discrete_point_mass_sampling() {
        let spec = DistributionSpec::Discrete {
            atoms: vec![DiscreteAtom { bid: bid(&[0.7, 0.2]), prob: 1.0 }],
        };
        let d = build_distribution(&spec, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(d.sample(&mut rng).values(), &[0.7, 0.2]);
    }

    #[test]
    fn bernoulli_hard_outcome_space() {
        let d = build_distribution(&DistributionSpec::IidBernoulliHard { p: 2.0 / 3.0 }, 2).unwrap();
        // P(both zero) = 1/9, P(one high) = 4/9, P(both high) = 4/9.
        assert!((d.marginal_cdf(1, 0.5).unwrap() - 1.0 / 9.0).abs() < 1e-12);
        assert!((d.marginal_cdf(2, 0.5).unwrap() - 5.0 / 9.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            let b = d.sample(&mut rng);
            let high = b.values().iter().filter(|&&x| x > 0.0).count();
            counts[high] += 1;
            assert!(b
                .values()
                .iter()
                .all(|&x| x == 0.0 || (x - 2.0 / 3.0).abs() < 1e-15));
        }
        for (observed, expected) in counts.iter().zip([1.0 / 9.0, 4.0 / 9.0, 4.0 / 9.0]) {
            assert!((*observed as f64 / n as f64 - expected).abs() < 0.01);
        }
    }

    #[test]
    fn identical_seeds_identical_samples() {
        let d = build_distribution(&DistributionSpec::IidOrderStats { n: 5, base: BaseCdfSpec::Uniform }, 3).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1234);
        let mut b = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut a), d.sample(&mut b));
        }
    }

    fn check_sampler_cdf_agreement(spec: &DistributionSpec, k: usize) {
        let d = build_distribution(spec, k).unwrap();
        let samples = 100_000u64;
        let eps = dkw_epsilon(samples, 1e-3).unwrap();
        for seed in [11u64, 22, 33] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut builders: Vec<EcdfBuilder> = (0..k).map(|_| EcdfBuilder::new()).collect();
            for _ in 0..samples {
                let b = d.sample(&mut rng);
                let vals = b.values();
                assert!(vals.windows(2).all(|w| w[0] >= w[1]), "unsorted sample {vals:?}");
                for (m, &x) in vals.iter().enumerate() {
                    builders[m].insert(x).unwrap();
                }
            }
            for m in 1..=k {
                let emp = builders[m - 1].finalize().unwrap();
                // Evaluate sup distance on jump points and a uniform grid.
                let mut worst: f64 = 0.0;
                let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
                for &x in grid.iter().chain(emp.jump_points()) {
                    let diff = (emp.eval(x) - d.marginal_cdf(m, x).unwrap()).abs();
                    worst = worst.max(diff);
                }
                assert!(worst <= eps, "kind {spec:?} marginal {m} seed {seed}: sup {worst} > {eps}");
            }
        }
    }

    #[test]
    fn sampler_matches_marginals_discrete() {
        check_sampler_cdf_agreement(
            &DistributionSpec::Discrete {
                atoms: vec![
                    DiscreteAtom { bid: bid(&[0.9, 0.4]), prob: 0.25 },
                    DiscreteAtom { bid: bid(&[0.6, 0.5]), prob: 0.35 },
                    DiscreteAtom { bid: bid(&[0.3, 0.1]), prob: 0.4 },
                ],
            },
            2,
        );
    }

    #[test]
    fn sampler_matches_marginals_order_stats() {
        check_sampler_cdf_agreement(&DistributionSpec::IidOrderStats { n: 5, base: BaseCdfSpec::Uniform }, 3);
        check_sampler_cdf_agreement(
            &DistributionSpec::IidOrderStats { n: 4, base: BaseCdfSpec::Power { alpha: 2.0 } },
            2,
        );
    }

    #[test]
    fn sampler_matches_marginals_delta_separated() {
        check_sampler_cdf_agreement(
            &DistributionSpec::DeltaSeparated {
                intervals: vec![(0.7, 0.8), (0.5, 0.6), (0.2, 0.3)],
                delta: Some(0.1),
            },
            3,
        );
    }

    #[test]
    fn sampler_matches_marginals_hard_families() {
        check_sampler_cdf_agreement(&DistributionSpec::FirstPriceHard { horizon: 4096, index: 3 }, 1);
        check_sampler_cdf_agreement(&DistributionSpec::FirstPriceHard { horizon: 4096, index: 3 }, 3);
        check_sampler_cdf_agreement(&DistributionSpec::IidBernoulliHard { p: 2.0 / 3.0 }, 2);
        check_sampler_cdf_agreement(
            &DistributionSpec::Uniform3Hard { horizon: 4096, index: 2, epsilon: None },
            3,
        );
    }

    #[test]
    fn marginals_are_ordered_and_proper() {
        let specs: Vec<(DistributionSpec, usize)> = vec![
            (DistributionSpec::IidOrderStats { n: 6, base: BaseCdfSpec::Uniform }, 4),
            (DistributionSpec::Uniform3Hard { horizon: 2048, index: 1, epsilon: None }, 3),
            (DistributionSpec::FirstPriceHard { horizon: 1024, index: 2 }, 2),
            (DistributionSpec::IidBernoulliHard { p: 0.5 }, 2),
        ];
        for (spec, k) in specs {
            let d = build_distribution(&spec, k).unwrap();
            for m in 1..=k {
                let mut prev = -1.0;
                for i in 0..=500 {
                    let x = i as f64 / 500.0;
                    let v = d.marginal_cdf(m, x).unwrap();
                    assert!(v >= prev - 1e-12, "{spec:?} marginal {m} not monotone at {x}");
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v));
                    if m < k {
                        let next = d.marginal_cdf(m + 1, x).unwrap();
                        assert!(v <= next + 1e-12, "{spec:?} marginal order violated at {x}");
                    }
                    prev = v;
                }
                assert!((d.marginal_cdf(m, 1.0).unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = DistributionSpec::DeltaSeparated {
            intervals: vec![(0.7, 0.8), (0.5, 0.6)],
            delta: Some(0.1),
        };
        let s = serde_json::to_string(&spec).unwrap();
        let back: DistributionSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(spec, back);
        let s = r#"{"kind":"iid_order_stats","n":5,"base":{"kind":"uniform"}}"#;
        let spec: DistributionSpec = serde_json::from_str(s).unwrap();
        assert!(matches!(spec, DistributionSpec::IidOrderStats { n: 5, .. }));
    }
}

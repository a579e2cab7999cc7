//! CDF machinery shared across the crate: a small evaluator trait, exact
//! step CDFs with Stieltjes/Riemann integrals, the empirical-CDF builder,
//! the DKW confidence half-width, and piecewise-linear CDFs.
//!
//! Everything an expected-utility formula needs from a marginal reduces to
//! three queries: F(x), the Riemann integral of F over [a,b], and the
//! Stieltjes integral of x dF over (a,b]. The last follows from the first
//! two by parts (valid for right-continuous F, jumps included), so analytic
//! CDFs only implement `eval` and `integral`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("cannot finalize an empirical CDF with zero samples")]
    EmptyEstimator,
    #[error("sample {0} is outside [0,1]")]
    SampleOutOfRange(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Marginal CDF evaluator, right-continuous on [0,1].
pub trait Cdf {
    /// F(x) = P(X <= x).
    fn eval(&self, x: f64) -> f64;

    /// Riemann integral of F over [a, b], 0 <= a <= b <= 1.
    fn integral(&self, a: f64, b: f64) -> f64;

    /// Stieltjes integral of x dF over the half-open interval (a, b]: a jump
    /// exactly at a is excluded, one at b included. Default via integration
    /// by parts; exact step CDFs override with the jump sum.
    fn stieltjes_x(&self, a: f64, b: f64) -> f64 {
        self.eval(b) * b - self.eval(a) * a - self.integral(a, b)
    }

    /// S(x) = Stieltjes integral of t dF over (0, x]. An atom at 0 has zero
    /// contribution either way.
    fn stieltjes_x_upto(&self, x: f64) -> f64 {
        self.stieltjes_x(0.0, x)
    }

    /// Points worth including in a candidate bid grid: jump points for step
    /// CDFs, kinks/breakpoints for analytic ones.
    fn grid_hints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// (F, S) sampled at every point of a sorted grid. The default loops;
    /// grid-backed CDFs return their stored rows directly, which is what the
    /// per-round maximizations in the learners rely on.
    fn table_row(&self, grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = grid.iter().map(|&x| self.eval(x)).collect();
        let s = grid.iter().map(|&x| self.stieltjes_x_upto(x)).collect();
        (g, s)
    }
}

/// DKW confidence half-width sqrt(ln(2/alpha) / (2 t)).
pub fn dkw_epsilon(t: u64, alpha: f64) -> Result<f64, EstimatorError> {
    if t == 0 {
        return Err(EstimatorError::Domain("sample count t must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EstimatorError::Domain(format!("alpha = {alpha} must be in (0, 1]")));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * t as f64)).sqrt())
}

/// A step CDF plus a DKW half-width: the band [center - eps, center + eps]
/// clipped to [0,1].
#[derive(Debug, Clone)]
pub struct CdfBand {
    pub center: StepCdf,
    pub half_width: f64,
}

impl CdfBand {
    pub fn contains(&self, truth: &dyn Cdf, grid: &[f64]) -> bool {
        grid.iter().all(|&x| {
            let c = self.center.eval(x);
            let t = truth.eval(x);
            t >= (c - self.half_width).max(0.0) - 1e-12 && t <= (c + self.half_width).min(1.0) + 1e-12
        })
    }
}

/// Right-continuous piecewise-constant CDF given by its jump points.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    xs: Vec<f64>,
    cum: Vec<f64>,
    // weighted[i] = sum_{j <= i} xs[j] * mass[j], for exact Stieltjes sums.
    weighted: Vec<f64>,
}

impl StepCdf {
    /// Build from (point, mass) pairs; equal points are merged. Total mass
    /// must not exceed 1 (an estimator may legitimately sum below 1 only in
    /// intermediate states, so we require <= 1 + tiny slack).
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, EstimatorError> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        for &(x, m) in &pts {
            if !(0.0..=1.0).contains(&x) {
                return Err(EstimatorError::SampleOutOfRange(x));
            }
            if m < 0.0 {
                return Err(EstimatorError::Domain(format!("negative mass {m}")));
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut xs = Vec::new();
        let mut cum = Vec::new();
        let mut weighted = Vec::new();
        let mut total = 0.0;
        let mut wtotal = 0.0;
        for (x, m) in pts {
            total += m;
            wtotal += x * m;
            if xs.last() == Some(&x) {
                *cum.last_mut().unwrap() = total;
                *weighted.last_mut().unwrap() = wtotal;
            } else {
                xs.push(x);
                cum.push(total);
                weighted.push(wtotal);
            }
        }
        if total > 1.0 + 1e-9 {
            return Err(EstimatorError::Domain(format!("total mass {total} exceeds 1")));
        }
        Ok(StepCdf { xs, cum, weighted })
    }

    pub fn jump_points(&self) -> &[f64] {
        &self.xs
    }

    fn index_at(&self, x: f64) -> Option<usize> {
        let n = self.xs.partition_point(|&p| p <= x);
        n.checked_sub(1)
    }
}

impl Cdf for StepCdf {
    fn eval(&self, x: f64) -> f64 {
        match self.index_at(x) {
            Some(i) => self.cum[i],
            None => 0.0,
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        // For a step CDF, int_0^x F = x F(x) - S(x) exactly.
        let at = |x: f64| match self.index_at(x) {
            Some(i) => x * self.cum[i] - self.weighted[i],
            None => 0.0,
        };
        at(b) - at(a)
    }

    fn stieltjes_x(&self, a: f64, b: f64) -> f64 {
        let s = |x: f64| match self.index_at(x) {
            Some(i) => self.weighted[i],
            None => 0.0,
        };
        s(b) - s(a)
    }

    fn grid_hints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

/// Accumulates samples, then finalizes into the empirical CDF (each sample
/// carries mass 1/n).
#[derive(Debug, Clone, Default)]
pub struct EcdfBuilder {
    samples: Vec<f64>,
}

impl EcdfBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: f64) -> Result<(), EstimatorError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(EstimatorError::SampleOutOfRange(x));
        }
        self.samples.push(x);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn finalize(&self) -> Result<StepCdf, EstimatorError> {
        if self.samples.is_empty() {
            return Err(EstimatorError::EmptyEstimator);
        }
        let m = 1.0 / self.samples.len() as f64;
        let pts: Vec<(f64, f64)> = self.samples.iter().map(|&x| (x, m)).collect();
        StepCdf::from_points(&pts)
    }

    /// Empirical CDF together with its DKW band at level alpha.
    pub fn finalize_band(&self, alpha: f64) -> Result<CdfBand, EstimatorError> {
        let center = self.finalize()?;
        let half_width = dkw_epsilon(self.samples.len() as u64, alpha)?;
        Ok(CdfBand { center, half_width })
    }
}

/// Continuous piecewise-linear CDF on [0,1]. First knot must be at x = 0 and
/// last at x = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCdf {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // cumint[i] = int_0^{xs[i]} F dt
    cumint: Vec<f64>,
}

impl PiecewiseLinearCdf {
    pub fn new(knots: &[(f64, f64)]) -> Result<Self, EstimatorError> {
        if knots.len() < 2 || knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(EstimatorError::Domain("knots must span [0,1]".into()));
        }
        for w in knots.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return Err(EstimatorError::Domain("knots must be non-decreasing".into()));
            }
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let mut cumint = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cumint[i] = cumint[i - 1] + (xs[i] - xs[i - 1]) * 0.5 * (ys[i] + ys[i - 1]);
        }
        Ok(PiecewiseLinearCdf { xs, ys, cumint })
    }

    /// The identity CDF of the uniform law on [0,1].
    pub fn uniform01() -> Self {
        Self::new(&[(0.0, 0.0), (1.0, 1.0)]).unwrap()
    }

    /// Uniform law on [lo, hi] (degenerate lo == hi is rejected; use a
    /// StepCdf point mass for that).
    pub fn uniform_on(lo: f64, hi: f64) -> Result<Self, EstimatorError> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(EstimatorError::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        let mut knots = vec![(lo, 0.0), (hi, 1.0)];
        if lo > 0.0 {
            knots.insert(0, (0.0, 0.0));
        }
        if hi < 1.0 {
            knots.push((1.0, 1.0));
        }
        Self::new(&knots)
    }

    fn segment(&self, x: f64) -> usize {
        // Largest i with xs[i] <= x, clamped so i+1 is valid.
        self.xs.partition_point(|&p| p <= x).clamp(1, self.xs.len() - 1) - 1
    }

    fn integral_from_zero(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.segment(x);
        let f = self.value_at(x, i);
        self.cumint[i] + (x - self.xs[i]) * 0.5 * (f + self.ys[i])
    }

    fn value_at(&self, x: f64, i: usize) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        if x1 == x0 {
            y1
        } else {
            y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
        }
    }
}

impl Cdf for PiecewiseLinearCdf {
    fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.value_at(x, self.segment(x))
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_from_zero(b) - self.integral_from_zero(a)
    }

    fn grid_hints(&self) -> Vec<f64> {
        self.xs.clone()
    }
}

/// Arbitrary (not necessarily monotone) piecewise-constant function on a
/// grid, exposed through the `Cdf` interface. Learners plug censored
/// estimates in here; the utility formulas are evaluated verbatim even when
/// estimates dip, so monotonicity is not enforced.
#[derive(Debug, Clone)]
pub struct GridCdf {
    grid: std::sync::Arc<Vec<f64>>,
    vals: Vec<f64>,
    svals: Vec<f64>,
    ivals: Vec<f64>,
}

impl GridCdf {
    pub fn new(grid: std::sync::Arc<Vec<f64>>, vals: Vec<f64>) -> Self {
        assert_eq!(grid.len(), vals.len());
        debug_assert!(grid.windows(2).all(|w| w[0] < w[1]), "grid must be strictly sorted");
        let n = grid.len();
        let mut svals = vec![0.0; n];
        let mut ivals = vec![0.0; n];
        let mut prev_v = 0.0;
        let mut s = 0.0;
        for i in 0..n {
            s += grid[i] * (vals[i] - prev_v);
            svals[i] = s;
            prev_v = vals[i];
            if i + 1 < n {
                ivals[i + 1] = ivals[i] + (grid[i + 1] - grid[i]) * vals[i];
            }
        }
        GridCdf { grid, vals, svals, ivals }
    }

    fn index_at(&self, x: f64) -> Option<usize> {
        self.grid.partition_point(|&p| p <= x).checked_sub(1)
    }
}

impl Cdf for GridCdf {
    fn eval(&self, x: f64) -> f64 {
        match self.index_at(x) {
            Some(i) => self.vals[i],
            None => 0.0,
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let at = |x: f64| match self.index_at(x) {
            Some(i) => self.ivals[i] + (x - self.grid[i]) * self.vals[i],
            None => 0.0,
        };
        at(b) - at(a)
    }

    fn stieltjes_x(&self, a: f64, b: f64) -> f64 {
        let s = |x: f64| match self.index_at(x) {
            Some(i) => self.svals[i],
            None => 0.0,
        };
        s(b) - s(a)
    }

    fn grid_hints(&self) -> Vec<f64> {
        self.grid.as_ref().clone()
    }

    fn table_row(&self, grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if self.grid.as_slice() == grid {
            (self.vals.clone(), self.svals.clone())
        } else {
            let g = grid.iter().map(|&x| self.eval(x)).collect();
            let s = grid.iter().map(|&x| self.stieltjes_x_upto(x)).collect();
            (g, s)
        }
    }
}

/// inf { y in [lo, hi] : f(y) >= target } for non-decreasing f, by bisection.
/// Handles flat stretches and jumps; returns hi if the target is never hit.
pub(crate) fn inverse_monotone(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> f64 {
    if f(lo) >= target {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// 32-point Gauss-Legendre rule, exact for polynomial integrands up to
/// degree 63.
pub(crate) fn gauss_legendre_32(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    use std::sync::OnceLock;
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let rule = RULE.get_or_init(|| {
        let n = 32usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            // Newton iteration from the Chebyshev initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push((x, w));
        }
        out
    });
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ecdf_two_points() {
        let mut b = EcdfBuilder::new();
        b.insert(0.2).unwrap();
        b.insert(0.4).unwrap();
        let f = b.finalize().unwrap();
        assert_eq!(f.eval(0.3), 0.5);
        assert_eq!(f.eval(0.4), 1.0);
        assert_eq!(f.eval(0.1), 0.0);
    }

    #[test]
    fn ecdf_right_continuous_at_jump() {
        let mut b = EcdfBuilder::new();
        b.insert(0.5).unwrap();
        let f = b.finalize().unwrap();
        assert_eq!(f.eval(0.4999), 0.0);
        assert_eq!(f.eval(0.5), 1.0);
    }

    #[test]
    fn ecdf_empty_errors() {
        assert_eq!(EcdfBuilder::new().finalize(), Err(EstimatorError::EmptyEstimator));
    }

    #[test]
    fn ecdf_uniform_within_loose_dkw() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut b = EcdfBuilder::new();
        for _ in 0..10_000 {
            b.insert(rng.random::<f64>()).unwrap();
        }
        let f = b.finalize().unwrap();
        let sup = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                (f.eval(x) - x).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup <= 0.0271, "sup deviation {sup}");
    }

    #[test]
    fn band_contains_truth_for_a_good_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut b = EcdfBuilder::new();
        for _ in 0..2000 {
            b.insert(rng.random::<f64>()).unwrap();
        }
        let band = b.finalize_band(0.05).unwrap();
        let truth = PiecewiseLinearCdf::uniform01();
        let grid: Vec<f64> = (0..=500).map(|i| i as f64 / 500.0).collect();
        assert!(band.contains(&truth, &grid));
        // A shifted "truth" falls outside the band.
        let shifted = PiecewiseLinearCdf::new(&[(0.0, 0.0), (0.5, 0.1), (1.0, 1.0)]).unwrap();
        assert!(!band.contains(&shifted, &grid));
    }

    #[test]
    fn dkw_values() {
        let e = dkw_epsilon(200, 0.05).unwrap();
        assert!((e - 0.09603).abs() < 1e-5);
        let e1 = dkw_epsilon(100, 1.0).unwrap();
        assert!((e1 - (2f64.ln() / 200.0).sqrt()).abs() < 1e-15);
        assert!(dkw_epsilon(0, 0.05).is_err());
        assert!(dkw_epsilon(10, 0.0).is_err());
        assert!(dkw_epsilon(10, 2.0).is_err());
        // Quadrupling t halves epsilon.
        let a = dkw_epsilon(500, 0.1).unwrap();
        let b = dkw_epsilon(2000, 0.1).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn step_cdf_integrals() {
        // Point masses 0.5 at 0.2 and 0.5 at 0.6.
        let f = StepCdf::from_points(&[(0.2, 0.5), (0.6, 0.5)]).unwrap();
        // S over (0.1, 0.6] picks up both jumps.
        assert!((f.stieltjes_x(0.1, 0.6) - (0.2 * 0.5 + 0.6 * 0.5)).abs() < 1e-15);
        // Half-open: jump exactly at the left endpoint excluded.
        assert!((f.stieltjes_x(0.2, 0.6) - 0.3).abs() < 1e-15);
        // int_0^1 F = 0.5*(0.6-0.2) + 1.0*(1-0.6) = 0.6.
        assert!((f.integral(0.0, 1.0) - 0.6).abs() < 1e-15);
        // Parts identity: default impl equals the exact jump sum.
        let by_parts = f.eval(0.6) * 0.6 - f.eval(0.1) * 0.1 - f.integral(0.1, 0.6);
        assert!((by_parts - f.stieltjes_x(0.1, 0.6)).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_uniform() {
        let f = PiecewiseLinearCdf::uniform01();
        assert_eq!(f.eval(0.3), 0.3);
        assert!((f.integral(0.0, 1.0) - 0.5).abs() < 1e-15);
        // int x dF over (0,1] = E[X] = 1/2 via parts.
        assert!((f.stieltjes_x(0.0, 1.0) - 0.5).abs() < 1e-12);

        let g = PiecewiseLinearCdf::uniform_on(0.5, 0.7).unwrap();
        assert_eq!(g.eval(0.4), 0.0);
        assert_eq!(g.eval(0.7), 1.0);
        assert!((g.stieltjes_x(0.0, 1.0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn grid_cdf_matches_step_cdf_on_grid() {
        let step = StepCdf::from_points(&[(0.25, 0.4), (0.75, 0.6)]).unwrap();
        let grid = std::sync::Arc::new(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let vals: Vec<f64> = grid.iter().map(|&x| step.eval(x)).collect();
        let g = GridCdf::new(grid, vals);
        for &x in &[0.0, 0.1, 0.25, 0.3, 0.75, 0.9, 1.0] {
            assert!((g.eval(x) - step.eval(x)).abs() < 1e-15);
        }
        assert!((g.integral(0.1, 0.9) - step.integral(0.1, 0.9)).abs() < 1e-12);
        assert!((g.stieltjes_x(0.0, 1.0) - step.stieltjes_x(0.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let v = gauss_legendre_32(0.0, 1.0, |x| x.powi(20));
        assert!((v - 1.0 / 21.0).abs() < 1e-15);
        let v = gauss_legendre_32(0.25, 0.75, |x| 3.0 * x * x);
        assert!((v - (0.75f64.powi(3) - 0.25f64.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn inverse_monotone_handles_flats_and_jumps() {
        // Step at 0.5: inf{y : F(y) >= 0.3} = 0.5.
        let f = |y: f64| if y >= 0.5 { 1.0 } else { 0.0 };
        let y = inverse_monotone(f, 0.3, 0.0, 1.0);
        assert!((y - 0.5).abs() < 1e-12);
    }
}

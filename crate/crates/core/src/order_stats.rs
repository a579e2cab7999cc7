//! Order-statistic CDF polynomials and the cross-marginal transfer map.
//!
//! When the opposing bids are the K largest of N i.i.d. draws with base CDF
//! F, the k-th largest has CDF P_k(F(x)) where
//!
//!   P_k(q) = sum_{j=0}^{k-1} C(N,j) (1-q)^j q^(N-j)
//!
//! (at most k-1 of the N draws exceed x). P_k is strictly increasing on
//! (0,1), so an estimate of marginal k converts into an estimate of marginal
//! k' through P_{k'} . P_k^{-1}.

use crate::cdf::EstimatorError;

pub const MAX_N: usize = 60;

fn check_nk(n: usize, k: usize) -> Result<(), EstimatorError> {
    if n == 0 || n > MAX_N {
        return Err(EstimatorError::Domain(format!("N = {n} must be in 1..={MAX_N}")));
    }
    if k == 0 || k > n {
        return Err(EstimatorError::Domain(format!("order-statistic index k = {k} out of 1..={n}")));
    }
    Ok(())
}

fn binomial(n: usize, j: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..j {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// P_k(q): probability that the k-th largest of N i.i.d. draws lies at or
/// below the base-CDF quantile level q.
pub fn order_stat_cdf(n: usize, k: usize, q: f64) -> Result<f64, EstimatorError> {
    check_nk(n, k)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(EstimatorError::Domain(format!("q = {q} must be in [0,1]")));
    }
    Ok(order_stat_cdf_unchecked(n, k, q))
}

pub(crate) fn order_stat_cdf_unchecked(n: usize, k: usize, q: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..k {
        total += binomial(n, j) * (1.0 - q).powi(j as i32) * q.powi((n - j) as i32);
    }
    total.clamp(0.0, 1.0)
}

/// P_k^{-1}(p) by monotone bisection to tolerance 1e-12 (robust at the flat
/// endpoints where the derivative vanishes).
pub fn order_stat_inverse(n: usize, k: usize, p: f64) -> Result<f64, EstimatorError> {
    check_nk(n, k)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(EstimatorError::Domain(format!("p = {p} must be in [0,1]")));
    }
    Ok(order_stat_inverse_unchecked(n, k, p))
}

pub(crate) fn order_stat_inverse_unchecked(n: usize, k: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if order_stat_cdf_unchecked(n, k, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The transfer map P_{k'} . P_k^{-1}: turns an estimate of marginal k at
/// some point into an estimate of marginal k' at the same point. Identity
/// when k == k'.
pub fn order_stat_transfer(n: usize, k: usize, k_prime: usize, q: f64) -> Result<f64, EstimatorError> {
    check_nk(n, k)?;
    check_nk(n, k_prime)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(EstimatorError::Domain(format!("q = {q} must be in [0,1]")));
    }
    Ok(order_stat_transfer_unchecked(n, k, k_prime, q))
}

pub(crate) fn order_stat_transfer_unchecked(n: usize, k: usize, k_prime: usize, q: f64) -> f64 {
    if k == k_prime {
        return q;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    order_stat_cdf_unchecked(n, k_prime, order_stat_inverse_unchecked(n, k, q))
}

/// Derivative of P_k: k C(N,k) q^(N-k) (1-q)^(k-1).
fn order_stat_pdf(n: usize, k: usize, q: f64) -> f64 {
    k as f64 * binomial(n, k) * q.powi((n - k) as i32) * (1.0 - q).powi((k - 1) as i32)
}

/// Table-bracketed Newton inversion of P_k, for inner loops that invert at
/// every grid point every round. Same 1e-12 accuracy as the bisection
/// routine, roughly an order of magnitude fewer polynomial evaluations.
#[derive(Debug, Clone)]
pub struct OrderStatInverter {
    n: usize,
    k: usize,
    // qs[i] = P_k^{-1}(i / (len-1)).
    qs: Vec<f64>,
}

impl OrderStatInverter {
    pub fn new(n: usize, k: usize) -> Result<Self, EstimatorError> {
        check_nk(n, k)?;
        let m = 2048usize;
        let qs = (0..=m)
            .map(|i| order_stat_inverse_unchecked(n, k, i as f64 / m as f64))
            .collect();
        Ok(OrderStatInverter { n, k, qs })
    }

    pub fn invert(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let m = self.qs.len() - 1;
        let cell = ((p * m as f64).floor() as usize).min(m - 1);
        let (mut lo, mut hi) = (self.qs[cell], self.qs[cell + 1]);
        let mut q = 0.5 * (lo + hi);
        for _ in 0..24 {
            let err = order_stat_cdf_unchecked(self.n, self.k, q) - p;
            if err > 0.0 {
                hi = q;
            } else {
                lo = q;
            }
            if err.abs() < 1e-14 || hi - lo < 1e-14 {
                break;
            }
            let d = order_stat_pdf(self.n, self.k, q);
            // Newton clamped into the bracket; bisect when it stalls on an
            // endpoint (the root can sit exactly on a table boundary).
            let next = if d > 0.0 { (q - err / d).clamp(lo, hi) } else { 0.5 * (lo + hi) };
            q = if next == q { 0.5 * (lo + hi) } else { next };
        }
        q.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        // N=2: P_1(q) = q^2  (largest of two), P_2(q) = 1-(1-q)^2.
        assert!((order_stat_cdf(2, 1, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((order_stat_cdf(2, 2, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(order_stat_cdf(5, 3, 1.0).unwrap(), 1.0);
        assert_eq!(order_stat_cdf(5, 3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(order_stat_cdf(2, 0, 0.5).is_err());
        assert!(order_stat_cdf(2, 3, 0.5).is_err());
        assert!(order_stat_cdf(2, 1, 1.5).is_err());
    }

    #[test]
    fn strictly_increasing_and_round_trip() {
        for n in [2usize, 4, 7] {
            for k in 1..=n {
                let mut prev = -1.0;
                for i in 0..=100 {
                    let q = i as f64 / 100.0;
                    let p = order_stat_cdf(n, k, q).unwrap();
                    if i > 0 && q < 1.0 {
                        assert!(p > prev, "P_{k} not strictly increasing at q={q} (n={n})");
                    }
                    prev = p;
                }
                for p in [0.001, 0.1, 0.37, 0.5, 0.9, 0.999] {
                    let q = order_stat_inverse(n, k, p).unwrap();
                    let back = order_stat_cdf(n, k, q).unwrap();
                    assert!((back - p).abs() <= 1e-10, "round trip n={n} k={k} p={p}: {back}");
                }
            }
        }
    }

    #[test]
    fn fast_inverter_matches_bisection() {
        for n in [2usize, 4, 6] {
            for k in 1..=n {
                let inv = OrderStatInverter::new(n, k).unwrap();
                for i in 0..=500 {
                    let p = i as f64 / 500.0;
                    let fast = inv.invert(p);
                    let slow = order_stat_inverse(n, k, p).unwrap();
                    assert!(
                        (fast - slow).abs() < 1e-10,
                        "n={n} k={k} p={p}: fast {fast} vs bisection {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn transfer_examples() {
        // Identity composition.
        assert!((order_stat_transfer(5, 3, 3, 0.37).unwrap() - 0.37).abs() < 1e-10);
        // N=2: P_1^{-1}(0.25) = 0.5, P_2(0.5) = 0.75.
        assert!((order_stat_transfer(2, 1, 2, 0.25).unwrap() - 0.75).abs() < 1e-10);
        // Endpoints fixed.
        assert_eq!(order_stat_transfer(4, 2, 3, 0.0).unwrap(), 0.0);
        assert_eq!(order_stat_transfer(4, 2, 3, 1.0).unwrap(), 1.0);
    }

    proptest::proptest! {
        #[test]
        fn round_trip_and_order_hold_for_arbitrary_parameters(
            n in 1usize..=12,
            k in 1usize..=12,
            q1 in 0.0f64..=1.0,
            q2 in 0.0f64..=1.0,
        ) {
            let k = k.min(n);
            let (q1, q2) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let p1 = order_stat_cdf(n, k, q1).unwrap();
            let p2 = order_stat_cdf(n, k, q2).unwrap();
            proptest::prop_assert!(p1 <= p2);
            let back = order_stat_cdf(n, k, order_stat_inverse(n, k, p1).unwrap()).unwrap();
            proptest::prop_assert!((back - p1).abs() <= 1e-10);
            // A larger index means a smaller order statistic: its CDF
            // dominates pointwise.
            if k < n {
                proptest::prop_assert!(p1 <= order_stat_cdf(n, k + 1, q1).unwrap() + 1e-12);
            }
        }
    }
}

//! Closed-form CDFs for the hard adversary families used by the regret
//! lower-bound constructions. Both families are a smooth base law plus a
//! local perturbation living on one small interval; outside that interval
//! the perturbed and base CDFs coincide.

use crate::cdf::Cdf;

/// Base CDF of the single-item hard family:
/// F(b) = 1/(3(1-b)) on [0, 1/3), and 1/4 + 3b/4 on [1/3, 1].
/// There is an atom of mass 1/3 at zero; both branches meet at F(1/3) = 1/2.
pub fn first_price_base_cdf(b: f64) -> f64 {
    if b < 1.0 / 3.0 {
        1.0 / (3.0 * (1.0 - b))
    } else {
        0.25 + 0.75 * b
    }
}

fn first_price_base_integral(p: f64, q: f64) -> f64 {
    // Closed form per branch; [p, q] must not straddle 1/3.
    debug_assert!(p <= q);
    if q <= 1.0 / 3.0 {
        ((1.0 - p) / (1.0 - q)).ln() / 3.0
    } else {
        (q - p) * 0.5 * (first_price_base_cdf(p) + first_price_base_cdf(q))
    }
}

/// Inverse of the base CDF (the sampler).
fn first_price_base_quantile(u: f64) -> f64 {
    if u <= 1.0 / 3.0 {
        0.0
    } else if u < 0.5 {
        1.0 - 1.0 / (3.0 * u)
    } else {
        (4.0 * u - 1.0) / 3.0
    }
}

/// The i-th perturbed single-item hard CDF: equal to the base outside
/// [lo, hi) = [i/9 T^(-1/3), (i+1)/9 T^(-1/3)), constant at F(hi) inside
/// (all mass of the interval collapses onto an atom at lo). `scale` = 1 for
/// the plain K=1 instance, 1/2 when embedded into a K-item auction.
#[derive(Debug, Clone)]
pub struct FirstPriceHardCdf {
    pub lo: f64,
    pub hi: f64,
    scale: f64,
}

impl FirstPriceHardCdf {
    pub(crate) fn new(lo: f64, hi: f64, scale: f64) -> Self {
        debug_assert!(0.0 <= lo && lo < hi && hi <= 1.0 / 3.0);
        FirstPriceHardCdf { lo, hi, scale }
    }

    fn eval_unscaled(&self, x: f64) -> f64 {
        if x >= self.lo && x < self.hi {
            first_price_base_cdf(self.hi)
        } else {
            first_price_base_cdf(x)
        }
    }

    fn integral_unscaled(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a, b];
        for &c in &[self.lo, self.hi, 1.0 / 3.0] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let mid = 0.5 * (p + q);
            if mid >= self.lo && mid < self.hi {
                total += (q - p) * first_price_base_cdf(self.hi);
            } else {
                total += first_price_base_integral(p, q);
            }
        }
        total
    }

    /// Draw one value from the perturbed law.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        let mut b = first_price_base_quantile(u);
        if b >= self.lo && b < self.hi {
            b = self.lo;
        }
        b * self.scale
    }
}

impl Cdf for FirstPriceHardCdf {
    fn eval(&self, x: f64) -> f64 {
        let y = x / self.scale;
        if y >= 1.0 {
            1.0
        } else {
            self.eval_unscaled(y)
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let top = self.scale;
        let inner = |x: f64| (x / self.scale).min(1.0);
        let lo = a.min(top);
        let hi = b.min(top);
        let mut total = self.scale * self.integral_unscaled(inner(lo), inner(hi));
        if b > top {
            total += b - top.max(a);
        }
        total
    }

    fn grid_hints(&self) -> Vec<f64> {
        [0.0, self.lo, self.hi, 1.0 / 3.0, 1.0]
            .iter()
            .map(|&x| x * self.scale)
            .filter(|&x| x <= 1.0)
            .collect()
    }
}

// Three-item hard family constants.
const HEAD_END: f64 = 5.0 / 900.0;
const MID_END: f64 = 1.0 / 6.0;
const FLAT_END: f64 = 1.0 / 3.0;
const V2: f64 = 1.0 / 3.0;
const HEAD_SLOPES: [f64; 3] = [1.0, 21.0, 101.0];
const MID_SHIFTS: [f64; 3] = [0.0, 1.0 / 9.0, 5.0 / 9.0];

fn mid_log(y: f64) -> f64 {
    ((V2 - HEAD_END).ln() - (V2 - y).ln()) / 3.0
}

fn mid_log_integral(p: f64, q: f64) -> f64 {
    // int_p^q ln(V2 - t) dt = [u ln u - u] from u = V2-q to u = V2-p.
    let anti = |u: f64| u * u.ln() - u;
    let log_part = anti(V2 - p) - anti(V2 - q);
    (V2 - HEAD_END).ln() / 3.0 * (q - p) - log_part / 3.0
}

/// One marginal of the three-item hard instance (`which` in 1..=3, with 1 the
/// CDF of the largest opposing bid), optionally carrying the triangular
/// perturbation on [lo, hi] (only ever applied to marginal 2).
#[derive(Debug, Clone)]
pub struct Uniform3HardCdf {
    which: usize,
    perturb: Option<(f64, f64)>,
}

impl Uniform3HardCdf {
    pub(crate) fn new(which: usize, perturb: Option<(f64, f64)>) -> Self {
        debug_assert!((1..=3).contains(&which));
        if let Some((lo, hi)) = perturb {
            debug_assert!(which == 2 && HEAD_END < lo && lo < hi && hi <= MID_END);
        }
        Uniform3HardCdf { which, perturb }
    }

    fn head_slope(&self) -> f64 {
        HEAD_SLOPES[self.which - 1]
    }

    fn mid_shift(&self) -> f64 {
        MID_SHIFTS[self.which - 1]
    }

    fn value_at_mid_end(&self) -> f64 {
        self.mid_shift() + HEAD_END + mid_log(MID_END)
    }

    fn tail_slope(&self) -> f64 {
        (1.0 - self.value_at_mid_end()) / (1.0 - FLAT_END)
    }

    fn base_eval(&self, y: f64) -> f64 {
        if y <= HEAD_END {
            self.head_slope() * y
        } else if y <= MID_END {
            self.mid_shift() + HEAD_END + mid_log(y)
        } else if y <= FLAT_END {
            self.value_at_mid_end()
        } else {
            (self.value_at_mid_end() + self.tail_slope() * (y - FLAT_END)).min(1.0)
        }
    }

    fn tri_value(&self, y: f64) -> f64 {
        match self.perturb {
            Some((lo, hi)) if y > lo && y < hi => {
                let mid = 0.5 * (lo + hi);
                if y <= mid {
                    y - lo
                } else {
                    hi - y
                }
            }
            _ => 0.0,
        }
    }

    fn tri_integral(&self, p: f64, q: f64) -> f64 {
        let Some((lo, hi)) = self.perturb else { return 0.0 };
        let mid = 0.5 * (lo + hi);
        let mut total = 0.0;
        // Rising half: value y - lo on [lo, mid].
        let (a, b) = (p.max(lo), q.min(mid));
        if b > a {
            total += 0.5 * ((b - lo).powi(2) - (a - lo).powi(2));
        }
        // Falling half: value hi - y on [mid, hi].
        let (a, b) = (p.max(mid), q.min(hi));
        if b > a {
            total += 0.5 * ((hi - a).powi(2) - (hi - b).powi(2));
        }
        total
    }

    fn base_integral(&self, p: f64, q: f64) -> f64 {
        // [p, q] must not straddle a breakpoint.
        let mid = 0.5 * (p + q);
        if mid <= HEAD_END {
            self.head_slope() * 0.5 * (q * q - p * p)
        } else if mid <= MID_END {
            (self.mid_shift() + HEAD_END) * (q - p) + mid_log_integral(p, q)
        } else if mid <= FLAT_END {
            self.value_at_mid_end() * (q - p)
        } else {
            (q - p) * 0.5 * (self.base_eval(p) + self.base_eval(q))
        }
    }
}

impl Cdf for Uniform3HardCdf {
    fn eval(&self, x: f64) -> f64 {
        self.base_eval(x) + self.tri_value(x)
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a, b];
        let mut bps = vec![HEAD_END, MID_END, FLAT_END];
        if let Some((lo, hi)) = self.perturb {
            bps.extend([lo, 0.5 * (lo + hi), hi]);
        }
        for c in bps {
            if c > a && c < b {
                cuts.push(c);
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += self.base_integral(w[0], w[1]);
        }
        total + self.tri_integral(a, b)
    }

    fn grid_hints(&self) -> Vec<f64> {
        let mut hints = vec![0.0, HEAD_END, MID_END, FLAT_END, 1.0];
        if let Some((lo, hi)) = self.perturb {
            hints.extend([lo, 0.5 * (lo + hi), hi]);
        }
        hints
    }
}

pub(crate) mod params {
    //! Parameter derivations shared with the distribution builder.

    pub fn first_price_interval(horizon: u64, index: u64) -> (f64, f64) {
        let w = (horizon as f64).powf(-1.0 / 3.0) / 9.0;
        (index as f64 * w, (index + 1) as f64 * w)
    }

    pub fn uniform3_default_epsilon(horizon: u64) -> f64 {
        (horizon as f64).powf(-1.0 / 3.0) / 700.0
    }

    pub fn uniform3_interval(index: u64, epsilon: f64) -> (f64, f64) {
        let lo = super::HEAD_END + index as f64 * epsilon;
        (lo, lo + epsilon)
    }

    pub const MID_END: f64 = super::MID_END;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_cdf_continuous_at_one_third() {
        // Both branch formulas evaluated at 1/3 give exactly 1/2.
        let lower: f64 = 1.0 / (3.0 * (1.0 - 1.0 / 3.0));
        let upper: f64 = 0.25 + 0.75 / 3.0;
        assert!((lower - 0.5).abs() < 1e-15);
        assert!((upper - 0.5).abs() < 1e-15);
        assert!((first_price_base_cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((first_price_base_cdf(0.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_matches_base_outside_interval() {
        let (lo, hi) = params::first_price_interval(1000, 2);
        let f = FirstPriceHardCdf::new(lo, hi, 1.0);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            if x < lo || x >= hi {
                assert!((f.eval(x) - first_price_base_cdf(x)).abs() < 1e-14, "x = {x}");
            } else {
                assert!(f.eval(x) >= first_price_base_cdf(x));
            }
        }
        // Flat at F(hi) on the interval, with the atom at lo.
        assert!((f.eval(lo) - first_price_base_cdf(hi)).abs() < 1e-14);
    }

    #[test]
    fn first_price_integral_matches_quadrature() {
        let (lo, hi) = params::first_price_interval(512, 1);
        let f = FirstPriceHardCdf::new(lo, hi, 1.0);
        for (a, b) in [(0.0, 1.0), (0.01, 0.3), (lo, hi), (0.3, 0.9)] {
            let mut riemann = 0.0;
            let n = 200_000;
            for i in 0..n {
                let x = a + (b - a) * (i as f64 + 0.5) / n as f64;
                riemann += f.eval(x) * (b - a) / n as f64;
            }
            assert!((f.integral(a, b) - riemann).abs() < 1e-5, "[{a}, {b}]");
        }
    }

    #[test]
    fn scaled_embedding_halves_support() {
        let (lo, hi) = params::first_price_interval(1000, 0);
        let f = FirstPriceHardCdf::new(lo, hi, 0.5);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(0.8), 1.0);
        let unscaled = FirstPriceHardCdf::new(lo, hi, 1.0);
        assert!((f.eval(0.1) - unscaled.eval(0.2)).abs() < 1e-15);
        assert!((f.integral(0.0, 0.5) - 0.5 * unscaled.integral(0.0, 1.0)).abs() < 1e-12);
        assert!((f.integral(0.0, 1.0) - (0.5 * unscaled.integral(0.0, 1.0) + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn three_item_marginals_are_proper_and_ordered() {
        let f1 = Uniform3HardCdf::new(1, None);
        let f2 = Uniform3HardCdf::new(2, None);
        let f3 = Uniform3HardCdf::new(3, None);
        assert!((f1.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((f2.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((f3.eval(1.0) - 1.0).abs() < 1e-12);
        let mut prev = [-1.0; 3];
        for i in 0..=3000 {
            let x = i as f64 / 3000.0;
            let v = [f1.eval(x), f2.eval(x), f3.eval(x)];
            // Monotone in x, ordered across marginals.
            for j in 0..3 {
                assert!(v[j] >= prev[j] - 1e-12);
                assert!((0.0..=1.0 + 1e-12).contains(&v[j]));
            }
            assert!(v[0] <= v[1] + 1e-12 && v[1] <= v[2] + 1e-12, "x = {x}");
            prev = v;
        }
    }

    #[test]
    fn perturbation_local_and_mass_preserving() {
        let eps = params::uniform3_default_epsilon(8192);
        let (lo, hi) = params::uniform3_interval(3, eps);
        let base = Uniform3HardCdf::new(2, None);
        let pert = Uniform3HardCdf::new(2, Some((lo, hi)));
        for i in 0..=5000 {
            let x = i as f64 / 5000.0;
            if x <= lo || x >= hi {
                assert!((pert.eval(x) - base.eval(x)).abs() < 1e-14, "x = {x}");
            }
        }
        let mid = 0.5 * (lo + hi);
        assert!(pert.eval(mid) > base.eval(mid));
        // The CDFs agree at both endpoints, so the density perturbation has
        // integral zero over the interval.
        assert!((pert.eval(lo) - base.eval(lo)).abs() < 1e-14);
        assert!((pert.eval(hi) - base.eval(hi)).abs() < 1e-14);
    }

    #[test]
    fn three_item_integral_matches_quadrature() {
        let eps = params::uniform3_default_epsilon(4096);
        let (lo, hi) = params::uniform3_interval(1, eps);
        let f = Uniform3HardCdf::new(2, Some((lo, hi)));
        for (a, b) in [(0.0, 1.0), (0.0, 0.01), (lo, hi), (0.1, 0.5)] {
            let mut riemann = 0.0;
            let n = 200_000;
            for i in 0..n {
                let x = a + (b - a) * (i as f64 + 0.5) / n as f64;
                riemann += f.eval(x) * (b - a) / n as f64;
            }
            assert!((f.integral(a, b) - riemann).abs() < 1e-6, "[{a}, {b}]");
        }
    }
}
